"""Command-line front end.

    quasidiag analyze MATRIX.json   verdict, localization manifold, Q_S
    quasidiag verify WORD.json      grid oracle fit against the analytic Q_S
    quasidiag tfcheck WORD.json     Wigner covariance and Gabor identity checks
    quasidiag corpus DIR            named example matrices and words

Exit codes: 0 ok, 2 invalid input, 3 ambiguous rank, 4 verification
failure, 5 numerical precondition.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .errors import DimensionTooLarge, InvalidInput, NumericalPrecondition, QuasidiagError, RankAmbiguous
from .kernels import classify_d2, compare_subspaces, smoothed_form, verdict
from .oracle import Grid, fit_against_analytic, sample_csv_rows, sample_gaussian, sample_smoothed_kernel
from .symplectic import (
    DEFAULT_COND_CAP,
    DEFAULT_RANK_TOL,
    Chirp,
    Dilation,
    Fourier,
    GeneratorWord,
    subspace_bases,
    validate_symplectic,
    word,
    word_product,
)
from .timefreq import TF_GRID, check_gabor_kernel_identity, check_wigner_covariance

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RANK = 3
EXIT_FAILED = 4
EXIT_NUMERIC = 5

COVARIANCE_BOUND = 1e-3
SPREAD_BOUND = 0.02
PROFILE_BOUND = 0.05


@dataclass
class RunConfig:
    rank_tol: float = DEFAULT_RANK_TOL
    psd_tol: float = 1e-8
    grid_n: int | None = None
    extent: float | None = None
    cond_cap: float = DEFAULT_COND_CAP
    out: str | None = None
    max_err: float = 0.02
    verbosity: int = 0

    def __post_init__(self):
        for name in ("rank_tol", "psd_tol", "cond_cap", "max_err"):
            if not getattr(self, name) > 0:
                raise InvalidInput(f"{name} must be positive")

    def grid(self, d: int, default: Grid | None = None) -> Grid:
        base = default or Grid.default(d)
        n = self.grid_n if self.grid_n is not None else base.n
        L = self.extent if self.extent is not None else base.L
        return Grid(d, n, L)


# reports -------------------------------------------------------------------------

def analysis_report(S, config: RunConfig | None = None) -> dict:
    config = config or RunConfig()
    S = validate_symplectic(S)
    sub = subspace_bases(S, config.rank_tol)
    form = smoothed_form(S, config.rank_tol)
    v = verdict(S, config.rank_tol, form=form)
    gamma = v.manifold
    null_match = compare_subspaces(gamma.orthonormal(), form.kernel_basis)
    qs_norm = max(np.linalg.norm(form.QS, 2), 1e-300)
    report = {
        "d": S.d,
        "verdict": "quasi-diagonal" if v.quasi_diagonal else "not quasi-diagonal",
        "quasi_diagonal": v.quasi_diagonal,
        "reason": v.reason,
        "gamma_basis": gamma.generators.T,
        "gamma_dim": gamma.dim,
        "gamma_strictly_inside_delta": bool(v.quasi_diagonal and gamma.dim < S.d),
        "QS": form.QS,
        "amplitude": form.amplitude,
        "case": form.case,
        "epsilon": v.epsilon,
        "witness": None if v.witness is None else [v.witness[0], v.witness[1]],
        "rank_B": sub.rank_B,
        "rank_C": sub.rank_C,
        "residuals": {
            "symplectic": S.residual,
            "QS_min_eigenvalue": form.min_eigenvalue(),
            "QS_psd": bool(form.min_eigenvalue() >= -config.psd_tol * qs_norm),
            "null_space_match": null_match["residual"],
            "null_space_dims": list(null_match["dims"]),
            "identity_deviation": v.deviation,
        },
    }
    if "normalization_residual" in form.diagnostics:
        report["residuals"]["normalization"] = form.diagnostics["normalization_residual"]
    if S.d == 2:
        report["scenario"] = classify_d2(S, config.rank_tol).name
    return io.to_jsonable(report)


def default_points(d: int) -> np.ndarray:
    if d == 1:
        return np.linspace(-1.5, 1.5, 7).reshape(-1, 1)
    return np.array(list(itertools.product([-1.0, 0.0, 1.0], repeat=d)))


def verify_report(w: GeneratorWord, config: RunConfig | None = None, csv_path=None) -> dict:
    config = config or RunConfig()
    grid = config.grid(w.d)
    S = word_product(w)
    form = smoothed_form(S, config.rank_tol)
    pts = default_points(w.d)
    samples = sample_smoothed_kernel(w, pts, pts, grid)
    fit = fit_against_analytic(samples, pts, pts, form)
    if csv_path is not None:
        write_samples_csv(csv_path, samples, pts, pts)
    return io.to_jsonable({
        "d": w.d,
        "word": io.word_to_json(w)["word"],
        "grid": grid.to_dict(),
        "nyquist": grid.nyquist,
        "case": form.case,
        "QS": form.QS,
        "fit": fit.to_dict(),
        "max_err": config.max_err,
        "passed": bool(fit.max_rel_err < config.max_err),
    })


def tfcheck_report(w: GeneratorWord, config: RunConfig | None = None) -> dict:
    config = config or RunConfig()
    if w.d != 1:
        raise DimensionTooLarge("time-frequency checks are implemented for d = 1 only")
    cov = check_wigner_covariance(w, sample_gaussian(config.grid(1, TF_GRID)))
    gab = check_gabor_kernel_identity(w, grid=config.grid(1))
    passed = (cov["residual"] < COVARIANCE_BOUND and gab["spread"] < SPREAD_BOUND
              and gab["residual"] < SPREAD_BOUND and gab["profile_fit_residual"] < PROFILE_BOUND
              and gab["profile_min_eigenvalue"] > 0)
    return io.to_jsonable({
        "word": io.word_to_json(w)["word"],
        "wigner_covariance": cov,
        "gabor": gab,
        "bounds": {"covariance": COVARIANCE_BOUND, "spread": SPREAD_BOUND, "profile": PROFILE_BOUND},
        "passed": bool(passed),
    })


def write_samples_csv(path, samples, xs, ys):
    d = np.asarray(xs).shape[1]
    head = ([f"x{i}" for i in range(d)] + [f"y{i}" for i in range(d)]) if d > 1 else ["x", "y"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(head + ["re", "im", "abs"])
        for row in sample_csv_rows(samples, xs, ys):
            wr.writerow([repr(v) for v in row])


# corpus ------------------------------------------------------------------------------

def _shear_word(M):
    """Word for [[I, M], [0, I]]."""
    d = np.asarray(M).shape[0]
    J = Fourier(d)
    return word(J, Chirp(-np.asarray(M, dtype=float)), J, J, J)


def corpus_entries() -> list[dict]:
    """Named examples with their expected analysis outcome."""
    J1 = Fourier(1)
    M2 = np.diag([0.0, 1.0])
    pi2 = _shear_word(M2) + word(Chirp(-M2)) + _shear_word(M2)
    entries = [
        {
            "name": "S1_D2",
            "word": word(Dilation([[2.0]])),
            "expected": {"quasi_diagonal": False, "witness": [[1.0], [2.0]],
                         "QS": [[0.8, -0.4], [-0.4, 0.2]]},
        },
        {
            "name": "S2_B1",
            "word": _shear_word([[1.0]]),
            "expected": {"quasi_diagonal": True, "QS": [[0.4, -0.4], [-0.4, 0.4]]},
        },
        {
            "name": "S3_J",
            "word": word(J1),
            "expected": {"quasi_diagonal": True, "QS": [[0.5, 0.0], [0.0, 0.5]],
                         "amplitude": 2 ** -0.5},
        },
        {
            "name": "Pi2",
            "word": pi2,
            "expected": {"quasi_diagonal": True, "gamma_basis": [[1.0, 0.0, 1.0, 0.0]],
                         "gamma_strictly_inside_delta": True, "scenario": "rank1-dilation"},
        },
    ]
    M = np.array([[1.0, 0.5], [0.5, 2.0]])
    for name, P in [("DI_rankC0", np.zeros((2, 2))),
                    ("DI_rankC1", np.diag([1.0, 0.0])),
                    ("DI_rankC2", np.array([[1.0, 0.3], [0.3, -0.5]]))]:
        w = _shear_word(M) + word(Chirp(P))
        ker = np.linalg.svd(P)[2][np.linalg.svd(P, compute_uv=False) < 1e-12]
        gamma = [np.concatenate([k, k]).tolist() for k in ker]
        entries.append({
            "name": name,
            "word": w,
            "expected": {"quasi_diagonal": True, "gamma_span": gamma, "rank_C": int(np.linalg.matrix_rank(P))},
        })
    return entries


def write_corpus(outdir) -> list[str]:
    out = Path(outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InvalidInput(f"cannot create {outdir}: {exc.strerror}") from None
    written = []
    for e in corpus_entries():
        S = word_product(e["word"])
        files = {
            f"{e['name']}.matrix.json": {"matrix": S.matrix},
            f"{e['name']}.word.json": io.word_to_json(e["word"]),
            f"{e['name']}.expected.json": {"name": e["name"], **e["expected"]},
        }
        for fname, obj in files.items():
            io.write_report(obj, out / fname)
            written.append(fname)
    return written


# entry point -----------------------------------------------------------------------

def _emit(report, config: RunConfig):
    io.write_report(report, config.out, sys.stdout)


def cmd_analyze(args, config):
    _emit(analysis_report(io.read_matrix(args.matrix), config), config)
    return EXIT_OK


def cmd_verify(args, config):
    rep = verify_report(io.read_word(args.word), config, args.csv)
    _emit(rep, config)
    return EXIT_OK if rep["passed"] else EXIT_FAILED


def cmd_tfcheck(args, config):
    rep = tfcheck_report(io.read_word(args.word), config)
    _emit(rep, config)
    return EXIT_OK if rep["passed"] else EXIT_FAILED


def cmd_corpus(args, config):
    names = write_corpus(args.outdir)
    if config.verbosity:
        print("\n".join(names))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL,
                        help="relative singular-value cutoff for numerical rank")
    common.add_argument("--psd-tol", type=float, default=1e-8)
    common.add_argument("--cond-cap", type=float, default=DEFAULT_COND_CAP)
    common.add_argument("--grid-n", type=int, default=None, help="grid points per axis")
    common.add_argument("--extent", type=float, default=None, help="grid extent L")
    common.add_argument("--out", default=None, help="report path (default: stdout)")
    common.add_argument("--max-err", type=float, default=0.02,
                        help="largest acceptable relative fit error")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="quasidiag", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", parents=[common], help="analyze a symplectic matrix")
    a.add_argument("matrix")
    a.set_defaults(func=cmd_analyze)
    v = sub.add_parser("verify", parents=[common], help="grid-check the smoothed kernel of a word")
    v.add_argument("word")
    v.add_argument("--csv", default=None, help="dump kernel samples as CSV")
    v.set_defaults(func=cmd_verify)
    t = sub.add_parser("tfcheck", parents=[common], help="time-frequency checks for a d = 1 word")
    t.add_argument("word")
    t.set_defaults(func=cmd_tfcheck)
    c = sub.add_parser("corpus", parents=[common], help="write the example corpus")
    c.add_argument("outdir")
    c.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(rank_tol=args.rank_tol, psd_tol=args.psd_tol, grid_n=args.grid_n,
                           extent=args.extent, cond_cap=args.cond_cap, out=args.out,
                           max_err=args.max_err, verbosity=args.verbose)
        return args.func(args, config)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RankAmbiguous as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANK
    except NumericalPrecondition as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except QuasidiagError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
