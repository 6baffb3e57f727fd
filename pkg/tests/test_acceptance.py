"""Acceptance criteria, one function each.

Each ``criterion_*`` returns (passed, detail).  Run this file directly for a
PASS/FAIL line per criterion; under pytest the lines are printed in the
terminal summary.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from quasidiag.cli import analysis_report  # noqa: E402
from quasidiag.gaussian import ComplexQuadraticForm, complex_inverse_split, gaussian_fourier  # noqa: E402
from quasidiag.kernels import (  # noqa: E402
    classify_d2,
    compare_subspaces,
    localization_manifold,
    smoothed_form,
    smoothed_form_general,
    verdict,
)
from quasidiag.oracle import Grid, fit_against_analytic, sample_smoothed_kernel  # noqa: E402
from quasidiag.symplectic import Chirp, Dilation, Fourier, subspace_bases, word, word_product  # noqa: E402
from quasidiag.timefreq import check_gabor_kernel_identity  # noqa: E402

from oracles import (  # noqa: E402
    dilation_smoothed_quadrature,
    gaussian_fourier_quadrature,
    propagate_gaussian,
    smoothed_kernel_quadrature,
)
from words import orthogonal, separated, shear_word, word_D_identity, word_with_rank_B, word_with_rank_C  # noqa: E402

RESULTS: dict[str, tuple[bool, str]] = {}
ORACLE_GRID = Grid(1, 1024, 16.0)
XS = np.linspace(-1.5, 1.5, 7)
PI2 = np.array([[1.0, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, -1, 0, 0]])


def oracle_fit(w):
    form = smoothed_form(word_product(w))
    s = sample_smoothed_kernel(w, XS, XS, grid=ORACLE_GRID)
    return fit_against_analytic(s, XS, XS, form)


def sl2_sweep():
    """Deterministic SL(2) matrices with the expected d = 1 verdict."""
    vals = [-3.0, -1.5, -1.0, -0.5, 0.25, 0.5, 1.0, 2.0, 4.0]
    out = []
    # C = 0 boundary: D = 1 / A, quasi-diagonal exactly when A = 1
    for a in vals:
        for b in vals + [0.0]:
            out.append((np.array([[a, b], [0.0, 1.0 / a]]), a == 1.0))
    # D = 1 boundary with C != 0: A = 1 + BC
    for b in vals + [0.0]:
        for c in vals:
            out.append((np.array([[1.0 + b * c, b], [c, 1.0]]), True))
    # generic C != 0: B = (AD - 1) / C
    for a in vals + [0.0]:
        for c in vals:
            for d in vals + [0.0]:
                out.append((np.array([[a, (a * d - 1.0) / c], [c, d]]), True))
    return out


def criterion_1():
    t0 = time.perf_counter()
    cases = sl2_sweep()
    mismatches = sum(verdict(S).quasi_diagonal != expected for S, expected in cases)
    dt = time.perf_counter() - t0
    ok = len(cases) >= 1000 and mismatches == 0 and dt < 5
    return ok, f"{len(cases)} matrices, {mismatches} mismatches, {dt:.2f}s"


def criterion_2():
    t0 = time.perf_counter()
    w = word(Fourier(1))
    form = smoothed_form(word_product(w))
    qerr = np.abs(form.QS - 0.5 * np.eye(2)).max()
    cerr = abs(form.amplitude - 2 ** -0.5)
    fit = oracle_fit(w)
    dt = time.perf_counter() - t0
    ok = qerr < 1e-9 and cerr < 1e-9 and fit.max_rel_err < 0.02 and fit.amplitude_rel_err < 0.02 and dt < 30
    return ok, (f"QS err {qerr:.1e}, c err {cerr:.1e}, oracle {fit.max_rel_err:.1e} "
                f"(c {fit.amplitude_rel_err:.1e}), {dt:.2f}s")


def _closed_form_confirmed(values, ref_exp, pts):
    """Quadrature values, normalised at the origin, against exp(-pi q)."""
    ratio = np.abs(values) / abs(values[0])
    return np.abs(ratio - np.exp(-np.pi * (ref_exp(*pts.T) - ref_exp(*pts[0])))).max()


def criterion_3():
    t0 = time.perf_counter()
    pts = np.array([[0.0, 0.0], [0.5, 0.3], [-0.4, 0.7], [1.0, 1.8], [0.8, -0.2]])
    q1 = lambda x, y: (y - 2 * x) ** 2 / 5  # noqa: E731
    q2 = lambda x, y: 0.4 * (x - y) ** 2  # noqa: E731
    Q1 = np.array([[0.8, -0.4], [-0.4, 0.2]])
    Q2 = 0.4 * np.array([[1.0, -1.0], [-1.0, 1.0]])
    w1, w2 = word(Dilation([[2.0]])), shear_word([[1.0]])

    # the closed forms themselves, by quadrature and by propagation
    quad1 = np.array([dilation_smoothed_quadrature(2.0, x, y) for x, y in pts])
    kernel2 = lambda s, t: np.exp(1j * np.pi * (s - t) ** 2)  # noqa: E731
    quad2 = np.array([smoothed_kernel_quadrature(kernel2, x, y, start=96) for x, y in pts])
    confirm = max(_closed_form_confirmed(quad1, q1, pts), _closed_form_confirmed(quad2, q2, pts),
                  np.abs(propagate_gaussian(w1)[0] - Q1).max(), np.abs(propagate_gaussian(w2)[0] - Q2).max())

    analytic = max(np.abs(smoothed_form(word_product(w1)).QS - Q1).max(),
                   np.abs(smoothed_form(word_product(w2)).QS - Q2).max())
    fits = [oracle_fit(w) for w in (w1, w2)]
    oracle = max(max(f.max_rel_err, f.amplitude_rel_err) for f in fits)
    dt = time.perf_counter() - t0
    ok = confirm < 1e-8 and analytic < 1e-9 and oracle < 0.02 and dt < 60
    return ok, f"closed forms confirmed to {confirm:.1e}, analytic {analytic:.1e}, oracle {oracle:.1e}, {dt:.2f}s"


def criterion_4():
    t0 = time.perf_counter()
    worst_eig, worst_res, dim_bad, ranks, gammas = np.inf, 0.0, 0, set(), set()
    for d in (1, 2, 3):
        rng = np.random.default_rng(100 + d)
        for i in range(200):
            # alternate so that both rank(B) and dim Gamma run over 0..d
            builder = word_with_rank_B if i % 2 == 0 else word_with_rank_C
            S = word_product(separated(builder, rng, d, (i // 2) % (d + 1)))
            sub = subspace_bases(S)
            ranks.add((d, sub.rank_B))
            gammas.add((d, d - sub.rank_C))
            form = smoothed_form(S)
            worst_eig = min(worst_eig, form.min_eigenvalue() / np.linalg.norm(form.QS, 2))
            cmp = compare_subspaces(localization_manifold(S).orthonormal(), form.kernel_basis)
            dim_bad += cmp["dims"][0] != cmp["dims"][1]
            worst_res = max(worst_res, cmp["residual"])
    dt = time.perf_counter() - t0
    covered = all((d, r) in ranks and (d, r) in gammas for d in (1, 2, 3) for r in range(d + 1))
    ok = covered and worst_eig >= -1e-8 and dim_bad == 0 and worst_res < 1e-6 and dt < 120
    return ok, (f"600 words, min eig/|Q| {worst_eig:.1e}, dim mismatches {dim_bad}, "
                f"residual {worst_res:.1e}, {dt:.2f}s")


def criterion_5():
    rep = analysis_report(PI2)
    got = np.array(rep["gamma_basis"]).T
    expected = np.array([[1.0], [0.0], [1.0], [0.0]]) / np.sqrt(2)
    res = compare_subspaces(got / np.linalg.norm(got, axis=0), expected)["residual"]
    scenario = classify_d2(PI2)
    ok = (rep["gamma_dim"] == 1 and res < 1e-9 and rep["gamma_strictly_inside_delta"]
          and rep["quasi_diagonal"] and scenario.name == rep["scenario"] == "rank1-dilation"
          and scenario.quasi_diagonal)
    return ok, f"gamma residual {res:.1e}, verdict {rep['verdict']}, scenario {scenario.name}"


def criterion_6():
    worst, ranks = 0.0, set()
    rng = np.random.default_rng(6)
    for i in range(50):
        d = 1 + i % 3
        q = (i // 3) % (d + 1)
        w, ker = separated(word_D_identity, rng, d, q)
        S = word_product(w)
        ranks.add((d, subspace_bases(S).rank_C))
        expected = np.linalg.qr(np.vstack([ker, ker]))[0] if q < d else np.zeros((2 * d, 0))
        cmp = compare_subspaces(localization_manifold(S).orthonormal(), expected)
        worst = max(worst, cmp["residual"] if cmp["dims"][0] == cmp["dims"][1] else np.inf)
        worst = max(worst, np.abs(S.D - np.eye(d)).max())
    covered = all((d, r) in ranks for d in (1, 2, 3) for r in range(d + 1))
    return covered and worst < 1e-8, f"50 words, worst residual {worst:.1e}, all ranks covered {covered}"


def criterion_7():
    worst = 0.0
    rng = np.random.default_rng(7)
    for i in range(10):
        d = 2 + i % 2
        r = 1 + (i // 2) % (d - 1)
        S = word_product(separated(word_with_rank_B, rng, d, r))
        base = smoothed_form_general(S).QS
        for _ in range(20):
            rot = {"V1": orthogonal(rng, r), "V2": orthogonal(rng, d - r), "W": orthogonal(rng, r)}
            other = smoothed_form_general(S, rotations=rot).QS
            worst = max(worst, np.abs(other - base).max() / np.abs(base).max())
    return worst < 1e-9, f"10 matrices x 20 rotations, worst relative change {worst:.1e}"


def criterion_8():
    t0 = time.perf_counter()
    spread, fit, ident = 0.0, 0.0, 0.0
    for w in (word(Fourier(1)), word(Chirp([[2.0]]), Fourier(1)), word(Chirp([[-1.5]]), Fourier(1))):
        rep = check_gabor_kernel_identity(w, n_pairs=50)
        spread = max(spread, rep["spread"])
        fit = max(fit, rep["profile_fit_residual"])
        ident = max(ident, rep["residual"])
    dt = time.perf_counter() - t0
    ok = spread < 0.02 and fit < 0.05 and dt < 120
    return ok, f"spread {spread:.1e}, profile fit {fit:.1e}, identity {ident:.1e}, {dt:.2f}s"


def random_complex_form(rng, n):
    O = orthogonal(rng, n)
    re = O @ np.diag(rng.uniform(0.5, 2.0, n)) @ O.T
    im = rng.uniform(-1.0, 1.0, (n, n))
    return re + 0.5j * (im + im.T)


def criterion_9():
    rng = np.random.default_rng(9)
    worst = 0.0
    for i in range(50):
        n = 1 + i % 3
        Q = random_complex_form(rng, n)
        xi = rng.uniform(-0.5, 0.5, n) + 0.2j * rng.uniform(-1.0, 1.0, n)
        ref = gaussian_fourier_quadrature(Q, xi)
        got = complex(gaussian_fourier(ComplexQuadraticForm(Q), xi))
        worst = max(worst, abs(got - ref) / abs(ref))
    split = 0.0
    for i in range(50):
        n = 1 + i % 3
        M1 = rng.normal(size=(n, n)) + 3 * np.eye(n)
        M2 = rng.normal(size=(n, n))
        re, im = complex_inverse_split(M1, M2)
        split = max(split, np.linalg.norm((M1 + 1j * M2) @ (re + 1j * im) - np.eye(n)))
    return worst < 1e-7 and split < 1e-10, f"quadrature rel err {worst:.1e}, split residual {split:.1e}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


def run(fn):
    ok, detail = fn()
    RESULTS[fn.__name__] = (bool(ok), detail)
    return ok, detail


@pytest.mark.parametrize("fn", CRITERIA, ids=[f.__name__ for f in CRITERIA])
def test_criterion(fn):
    ok, detail = run(fn)
    assert ok, detail


def report_lines():
    return [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, (ok, detail) in sorted(RESULTS.items())]


if __name__ == "__main__":
    for fn in CRITERIA:
        run(fn)
    print("\n".join(report_lines()))
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
