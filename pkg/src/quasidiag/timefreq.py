"""Time-frequency checks: STFT, Wigner distribution and Gabor matrices of
metaplectic operators, sampled on grids.

Conventions: pi(z) f(t) = exp(2 pi i t.xi) f(t - x) for z = (x, xi);
V_g f(z) = int f(t) conj(g(t - x)) exp(-2 pi i t.xi) dt;
W f(x, xi) = int f(x + t/2) conj(f(x - t/2)) exp(-2 pi i t.xi) dt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooLarge, GridMismatch, InsufficientSamples
from .oracle import Grid, SampledField, apply_word, sample_gaussian
from .symplectic import GeneratorWord, word_product

TF_GRID = Grid(1, 256, 16.0)    # self-dual: L^2 = n
WIGNER_LEVEL = 1e-6


@dataclass(frozen=True)
class PhaseSpacePoint:
    z: np.ndarray

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=float))
        if z.ndim != 1 or z.size % 2:
            raise ValueError("phase-space points have an even number of components")
        if not np.all(np.isfinite(z)):
            raise ValueError("phase-space point must be finite")
        object.__setattr__(self, "z", z)

    @classmethod
    def from_parts(cls, x, xi) -> "PhaseSpacePoint":
        return cls(np.concatenate([np.atleast_1d(x), np.atleast_1d(xi)]).astype(float))

    @property
    def d(self) -> int:
        return self.z.size // 2

    @property
    def x(self) -> np.ndarray:
        return self.z[: self.d]

    @property
    def xi(self) -> np.ndarray:
        return self.z[self.d:]


def _as_point(z) -> PhaseSpacePoint:
    return z if isinstance(z, PhaseSpacePoint) else PhaseSpacePoint(z)


def _shift(values, grid: Grid, x):
    """Samples of t -> f(t - x) by Fourier interpolation, zero outside the extent."""
    out = np.asarray(values, dtype=complex)
    n, L = grid.n, grid.L
    nu = np.fft.fftfreq(n, d=1.0 / n) / L
    t = grid.axis()
    for ax in range(grid.d):
        if x[ax] == 0:
            continue
        shape = [1] * grid.d
        shape[ax] = n
        spec = np.fft.fft(out, axis=ax) * np.exp(-2j * np.pi * nu * x[ax]).reshape(shape)
        out = np.fft.ifft(spec, axis=ax)
        src = (t - x[ax]).reshape(shape)
        out = np.where((src >= -L / 2) & (src < L / 2), out, 0.0)
    return out


def _plane_wave(grid: Grid, xi):
    t = grid.points()
    return np.exp(2j * np.pi * (t @ np.asarray(xi, dtype=float)))


def stft(f: SampledField, g: SampledField, z) -> complex:
    """V_g f(z) as a Riemann sum over the grid."""
    if f.grid != g.grid:
        raise GridMismatch("STFT needs signal and window on the same grid")
    p = _as_point(z)
    if p.d != f.grid.d:
        raise GridMismatch(f"point of dimension {p.d} for a {f.grid.d}-d grid")
    gx = _shift(g.values, g.grid, p.x)
    kern = np.conj(gx) * np.conj(_plane_wave(f.grid, p.xi))
    return complex(f.grid.cell * np.sum(f.values * kern))


def time_frequency_shift(grid: Grid, z, normalized: bool = True) -> SampledField:
    """Samples of pi(z) phi, optionally with phi normalized in L^2."""
    p = _as_point(z)
    scale = 2.0 ** (grid.d / 4) if normalized else 1.0
    base = sample_gaussian(grid, p.x).values
    return SampledField(grid, scale * base * _plane_wave(grid, p.xi))


# Wigner distribution -------------------------------------------------------------

def _upsample2(values):
    """Trigonometric interpolation onto the half-spacing grid (1-d)."""
    n = values.size
    spec = np.fft.fft(values)
    pad = np.zeros(2 * n, dtype=complex)
    h = n // 2
    pad[:h] = spec[:h]
    pad[-h:] = spec[-h:]
    return 2.0 * np.fft.ifft(pad)


def phase_space_grid(grid: Grid) -> Grid:
    return Grid(2, grid.n, grid.L)


def wigner(f: SampledField) -> SampledField:
    """W f on the (x, xi) grid with both axes equal to the signal axis.

    The lag variable is truncated to the grid extent.
    """
    grid = f.grid
    if grid.d != 1:
        raise DimensionTooLarge("Wigner distribution is implemented for d = 1 only")
    n, h = grid.n, grid.spacing
    u = _upsample2(f.values)                 # u[m] = f(t0 + m h / 2)
    lag = np.arange(-n // 2, n // 2)         # t = k h
    j = np.arange(n)
    plus = 2 * j[:, None] + lag[None, :]
    minus = 2 * j[:, None] - lag[None, :]
    ok = (plus >= 0) & (plus < 2 * n) & (minus >= 0) & (minus < 2 * n)
    prod = np.where(ok, u[np.clip(plus, 0, 2 * n - 1)] * np.conj(u[np.clip(minus, 0, 2 * n - 1)]), 0.0)
    xi = grid.axis()
    kern = np.exp(-2j * np.pi * np.outer(lag * h, xi))
    W = h * prod @ kern
    return SampledField(phase_space_grid(grid), W)


def _on_nodes(coords, grid: Grid):
    idx = (coords + grid.L / 2) / grid.spacing
    r = np.rint(idx)
    if np.all(np.abs(idx - r) < 1e-9) and np.all((r >= 0) & (r < grid.n)):
        return r.astype(int)
    return None


def interpolate2(field: SampledField, pts) -> np.ndarray:
    """Trigonometric interpolation of a 2-d grid field at points (m, 2).

    Points on grid nodes are read directly; points outside the extent give 0.
    """
    grid = field.grid
    pts = np.asarray(pts, dtype=float)
    nodes = _on_nodes(pts, grid)
    if nodes is not None:
        return field.values[nodes[:, 0], nodes[:, 1]]
    n, L = grid.n, grid.L
    m = np.fft.fftfreq(n, d=1.0 / n)
    C = np.fft.fft2(field.values) / n ** 2
    Ex = np.exp(2j * np.pi * np.outer(pts[:, 0] + L / 2, m) / L)
    Ey = np.exp(2j * np.pi * np.outer(pts[:, 1] + L / 2, m) / L)
    vals = np.einsum("ka,kb,ab->k", Ex, Ey, C, optimize=True)
    inside = np.all((pts >= -L / 2) & (pts < L / 2), axis=1)
    return np.where(inside, vals, 0.0)


def check_wigner_covariance(w: GeneratorWord, f: SampledField | None = None,
                            level: float = WIGNER_LEVEL) -> dict:
    """Compare W f(u) with W(S^ f)(S u) at grid points u where |W f| is significant."""
    f = f if f is not None else sample_gaussian(TF_GRID)
    if f.grid.d != 1 or w.d != 1:
        raise DimensionTooLarge("Wigner covariance check is implemented for d = 1 only")
    S = np.asarray(word_product(w).matrix) if len(w) else np.eye(2)
    Wf = wigner(f)
    Wg = wigner(apply_word(w, f))
    mag = np.abs(Wf.values)
    keep = np.argwhere(mag > level * mag.max())
    ax = f.grid.axis()
    u = ax[keep]                                   # (m, 2) points (x, xi)
    ref = Wf.values[keep[:, 0], keep[:, 1]]
    got = interpolate2(Wg, u @ S.T)
    dev = np.abs(got - ref)
    return {
        "identity": "wigner-covariance",
        "residual": float(dev.max()),
        "relative_residual": float(dev.max() / mag.max()),
        "points": int(len(u)),
        "grid": f.grid.to_dict(),
    }


def wigner_marginal_error(f: SampledField) -> float:
    """Max deviation of the xi-marginal of W f from |f|^2, relative to max |f|^2."""
    W = wigner(f)
    marg = W.values.sum(axis=1).real * f.grid.spacing
    dens = np.abs(f.values) ** 2
    return float(np.abs(marg - dens).max() / dens.max())


# Gabor matrix ----------------------------------------------------------------------

def gabor_matrix(w: GeneratorWord, z, v, grid: Grid | None = None, normalized: bool = True) -> complex:
    """<S^ pi(z) phi, pi(v) phi> on the grid."""
    grid = grid or Grid.default(w.d)
    img = apply_word(w, time_frequency_shift(grid, z, normalized))
    return img.inner(time_frequency_shift(grid, v, normalized))


def _quad_features(u):
    """Monomials of a symmetric quadratic form in u (upper triangle)."""
    k = u.shape[1]
    cols = []
    for i in range(k):
        for j in range(i, k):
            cols.append(u[:, i] * u[:, j] * (1.0 if i == j else 2.0))
    return np.stack(cols, axis=1)


def _unpack_sym(coef, k):
    A = np.zeros((k, k))
    it = iter(coef)
    for i in range(k):
        for j in range(i, k):
            A[i, j] = A[j, i] = next(it)
    return A


def fit_log_quadratic(u, mags, level: float = 1e-6):
    """Fit |h| = c exp(-pi A u.u); returns (A, c, max relative residual, points used)."""
    mags = np.asarray(mags, dtype=float)
    keep = mags > level * mags.max()
    if np.count_nonzero(keep) < 2 + u.shape[1] * (u.shape[1] + 1) // 2:
        raise InsufficientSamples("too few samples for the log-quadratic fit")
    X = np.column_stack([np.ones(np.count_nonzero(keep)), -np.pi * _quad_features(u[keep])])
    coef, *_ = np.linalg.lstsq(X, np.log(mags[keep]), rcond=None)
    A = _unpack_sym(coef[1:], u.shape[1])
    c = float(np.exp(coef[0]))
    pred = X @ coef
    rel = np.abs(np.exp(pred - np.log(mags[keep])) - 1.0)
    return A, c, float(rel.max()), int(np.count_nonzero(keep))


def check_gabor_kernel_identity(w: GeneratorWord, n_pairs: int = 50, n_shifts: int = 5,
                                radius: float = 1.0, seed: int = 0, grid: Grid | None = None) -> dict:
    """Check that |h(z, v)| depends only on v - Sz and fits a Gaussian profile.

    Pairs are drawn in ``n_shifts`` groups sharing v - Sz.  The profile
    psi = V_phi(S^ phi) is evaluated at the shared differences and compared
    with every pair of the group.
    """
    if w.d != 1:
        raise DimensionTooLarge("Gabor identity check is implemented for d = 1 only")
    grid = grid or Grid.default(1)
    S = np.asarray(word_product(w).matrix) if len(w) else np.eye(2)
    rng = np.random.default_rng(seed)
    window = time_frequency_shift(grid, [0.0, 0.0])
    base = apply_word(w, window)
    per = max(1, n_pairs // n_shifts)
    spreads, ident, diffs, mags = [], [], [], []
    for _ in range(n_shifts):
        u = rng.uniform(-radius, radius, size=2)
        psi = abs(stft(base, window, u))
        group = []
        for _ in range(per):
            z = rng.uniform(-radius, radius, size=2)
            v = S @ z + u
            h = abs(gabor_matrix(w, z, v, grid))
            group.append(h)
            diffs.append(u)
            mags.append(h)
        group = np.array(group)
        spreads.append(float((group.max() - group.min()) / group.mean()))
        ident.append(float(np.abs(group - psi).max() / psi))
    # profile fit on a regular net of differences
    net = np.array([[a, b] for a in np.linspace(-1.5, 1.5, 7) for b in np.linspace(-1.5, 1.5, 7)])
    prof = np.array([abs(stft(base, window, u)) for u in net])
    A, c, fit_res, used = fit_log_quadratic(net, prof)
    return {
        "identity": "gabor-kernel",
        "residual": max(ident),
        "spread": max(spreads),
        "profile_fit_residual": fit_res,
        "profile_form": A.tolist(),
        "profile_min_eigenvalue": float(np.linalg.eigvalsh(A)[0]),
        "profile_amplitude": c,
        "points": len(mags) + used,
        "grid": grid.to_dict(),
    }
