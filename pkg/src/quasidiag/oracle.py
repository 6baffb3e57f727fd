"""Grid-based verification of smoothed kernels.

Metaplectic operators are applied factor by factor to sampled functions on
a uniform grid covering [-L/2, L/2)^d:

* Fourier factor: continuous Fourier transform approximated by a Riemann
  sum evaluated back on the same grid (chirp-z transform, or a plain FFT
  when the grid is self-dual, L^2 = n);
* chirp factor: pointwise multiplication by exp(i pi P t.t);
* dilation factor: |det E|^(1/2) f(E t) by band-limited (trigonometric)
  interpolation, split into axis scalings and shears in d = 2.

The smoothed kernel is then sampled through
k~(x, y) = <S^(tau_y phi), tau_x phi> with phi(t) = exp(-pi |t|^2).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.signal import czt

from .errors import (
    AliasRisk,
    CenterOutOfRange,
    ExtentOverflow,
    InsufficientSamples,
    InvalidGrid,
    QuadratureWarning,
)
from .symplectic import Chirp, Dilation, Fourier, GeneratorWord, check_generator

GAUSSIAN_MARGIN = 3.0       # exp(-pi 3^2) ~ 5e-13
SUPPORT_LEVEL = 1e-12
BAND_LEVEL = 1e-9           # spectral floor from edge truncation sits near 1e-11
NORM_TOL = 1e-6
TAIL_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    """n points per axis with spacing L / n, starting at -L/2."""

    d: int = 1
    n: int = 1024
    L: float = 16.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise InvalidGrid(f"grid dimension must be 1 or 2, got {self.d}")
        n = int(self.n)
        if n < 64 or n & (n - 1):
            raise InvalidGrid(f"points per axis must be a power of two >= 64, got {self.n}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise InvalidGrid(f"extent must be positive, got {self.L}")

    @classmethod
    def default(cls, d: int) -> "Grid":
        return cls(1, 1024, 16.0) if d == 1 else cls(2, 256, 12.0)

    @property
    def spacing(self) -> float:
        return self.L / self.n

    @property
    def nyquist(self) -> float:
        return 0.5 / self.spacing

    @property
    def self_dual(self) -> bool:
        return abs(self.n * self.spacing ** 2 - 1.0) < 1e-12

    def axis(self) -> np.ndarray:
        return -self.L / 2 + self.spacing * np.arange(self.n)

    def points(self) -> np.ndarray:
        """Array of shape (n,)*d + (d,)."""
        ax = self.axis()
        mesh = np.meshgrid(*([ax] * self.d), indexing="ij")
        return np.stack(mesh, axis=-1)

    @property
    def cell(self) -> float:
        return self.spacing ** self.d

    def to_dict(self) -> dict:
        return {"d": self.d, "n": int(self.n), "L": float(self.L)}


@dataclass(frozen=True, eq=False)
class SampledField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n,) * self.grid.d:
            raise InvalidGrid(f"values of shape {v.shape} do not match the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("sampled values must be finite")
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return float(np.sqrt(self.grid.cell * np.sum(np.abs(self.values) ** 2)))

    def inner(self, other: "SampledField") -> complex:
        """<self, other> = sum self * conj(other) * cell."""
        return complex(self.grid.cell * np.vdot(other.values, self.values))

    def tail_fraction(self, band: int | None = None) -> float:
        """Share of the squared L^2 norm within ``band`` cells of the boundary."""
        n = self.grid.n
        band = band or max(2, n // 32)
        mask = np.zeros(self.values.shape, dtype=bool)
        for ax in range(self.grid.d):
            idx = [slice(None)] * self.grid.d
            idx[ax] = np.r_[0:band, n - band:n]
            mask[tuple(idx)] = True
        total = np.sum(np.abs(self.values) ** 2)
        return float(np.sum(np.abs(self.values[mask]) ** 2) / total) if total > 0 else 0.0


def sample_gaussian(grid: Grid, center=None, margin: float = GAUSSIAN_MARGIN) -> SampledField:
    """Samples of exp(-pi |t - center|^2)."""
    c = np.zeros(grid.d) if center is None else np.atleast_1d(np.asarray(center, dtype=float))
    if c.shape != (grid.d,):
        raise CenterOutOfRange(f"center must have {grid.d} components")
    lim = grid.L / 2 - margin
    if np.any(np.abs(c) > lim):
        raise CenterOutOfRange(f"center {c.tolist()} is outside [-{lim:g}, {lim:g}]^{grid.d}")
    t = grid.points()
    r2 = np.sum((t - c) ** 2, axis=-1)
    return SampledField(grid, np.exp(-np.pi * r2))


# one-dimensional building blocks -------------------------------------------------

def _fourier_axis(values, grid: Grid, axis: int):
    """Riemann-sum Fourier transform along one axis, output on the input grid."""
    n, h = grid.n, grid.spacing
    t = grid.axis()
    t0 = t[0]
    shape = [1] * values.ndim
    shape[axis] = n
    pre = np.exp(-2j * np.pi * t0 * h * np.arange(n)).reshape(shape)
    post = (h * np.exp(-2j * np.pi * t * t0)).reshape(shape)
    x = values * pre
    if grid.self_dual:
        out = np.fft.fft(x, axis=axis)
    else:
        out = czt(x, m=n, w=np.exp(-2j * np.pi * h * h), a=1.0, axis=axis)
    return out * post


def _band_limit(values, grid: Grid, level: float = BAND_LEVEL) -> float:
    """Largest |frequency| (any axis) carrying spectral magnitude above level * max."""
    spec = np.abs(np.fft.fftn(values))
    peak = spec.max()
    if peak == 0:
        return 0.0
    freqs = np.fft.fftfreq(grid.n, d=grid.spacing)
    band = 0.0
    for ax in range(grid.d):
        other = tuple(i for i in range(grid.d) if i != ax)
        prof = spec.max(axis=other) if other else spec
        live = np.abs(freqs[prof > level * peak])
        if live.size:
            band = max(band, float(live.max()))
    return band


def _interp_phase(targets, grid: Grid):
    """Evaluation rows of the trigonometric interpolant in terms of DFT coefficients.

    Targets outside the grid extent get a zero row.
    """
    n, L = grid.n, grid.L
    t0 = -L / 2
    m = np.fft.fftfreq(n, d=1.0 / n)
    M = np.exp(2j * np.pi * np.outer(targets - t0, m) / L) / n
    outside = (targets < t0) | (targets >= t0 + L)
    M[outside] = 0.0
    return M


def _scale_axis(values, grid: Grid, axis: int, s: float):
    """h(t) = values(t with component ``axis`` multiplied by s)."""
    M = _interp_phase(s * grid.axis(), grid)
    coef = np.fft.fft(values, axis=axis)
    return np.moveaxis(np.tensordot(M, coef, axes=([1], [axis])), 0, axis)


def _shear(values, grid: Grid, axis: int, along: int, coef: float):
    """h(t) = values(t + coef * t[along] * e_axis)."""
    n, L = grid.n, grid.L
    t = grid.axis()
    m = np.fft.fftfreq(n, d=1.0 / n)
    spec = np.fft.fft(values, axis=axis)
    shift = coef * t                                   # indexed by t[along]
    ph_shape = [1] * values.ndim
    ph_shape[axis] = n
    sh_shape = [1] * values.ndim
    sh_shape[along] = n
    phase = np.exp(2j * np.pi * m.reshape(ph_shape) * shift.reshape(sh_shape) / L)
    out = np.fft.ifft(spec * phase, axis=axis)
    # points mapped outside the extent are zero, not periodic images
    tgt = t.reshape(ph_shape) + shift.reshape(sh_shape)
    out = np.where((tgt >= -L / 2) & (tgt < L / 2), out, 0.0)
    return out


# generators on grids ---------------------------------------------------------------

def _check_norm(before: float, after: float, what: str, tol: float = NORM_TOL):
    if before == 0:
        return
    rel = abs(after / before - 1.0)
    if rel > tol:
        raise ExtentOverflow(f"{what} lost L2 norm (relative change {rel:.2e}); enlarge the grid")


def apply_generator(g, f: SampledField, norm_tol: float = NORM_TOL) -> SampledField:
    """Apply the metaplectic operator of a single generator to samples."""
    check_generator(g)
    grid = f.grid
    if g.d != grid.d:
        raise InvalidGrid(f"generator of dimension {g.d} on a {grid.d}-d grid")
    v = f.values
    before = f.norm()
    if isinstance(g, Fourier):
        if grid.L ** 2 > grid.n * (1 + 1e-12):
            raise AliasRisk({"extent_sq": grid.L ** 2, "points": float(grid.n)})
        out = v
        for ax in range(grid.d):
            out = _fourier_axis(out, grid, ax)
        what = "Fourier transform"
    elif isinstance(g, Chirp):
        P = 0.5 * (g.P + g.P.T)
        t = grid.points()
        mag = np.abs(v)
        live = mag > SUPPORT_LEVEL * mag.max() if mag.max() > 0 else mag > 0
        local = np.abs(t[live] @ P).max() if np.any(live) else 0.0
        band = _band_limit(v, grid)
        if local + band > grid.nyquist:
            raise AliasRisk({"chirp_frequency": float(local), "bandwidth": band, "nyquist": grid.nyquist})
        quad = np.einsum("...i,ij,...j->...", t, P, t)
        out = v * np.exp(1j * np.pi * quad)
        what = "chirp"
    elif isinstance(g, Dilation):
        E = g.E
        amp = abs(np.linalg.det(E)) ** 0.5
        if grid.d == 1:
            out = _scale_axis(v, grid, 0, float(E[0, 0]))
        else:
            perm, lower, upper = scipy.linalg.lu(E)
            diag = np.diag(upper).copy()
            unit_upper = upper / diag[:, None]
            out = v
            if perm[0, 0] == 0:
                out = out.T
            out = _shear(out, grid, axis=1, along=0, coef=lower[1, 0])
            out = _scale_axis(out, grid, 0, diag[0])
            out = _scale_axis(out, grid, 1, diag[1])
            out = _shear(out, grid, axis=0, along=1, coef=unit_upper[0, 1])
        out = amp * out
        what = "dilation"
    else:
        raise TypeError(f"unknown generator {g!r}")
    res = SampledField(grid, out)
    _check_norm(before, res.norm(), what, norm_tol)
    return res


def apply_word(word: GeneratorWord, f: SampledField, norm_tol: float = NORM_TOL) -> SampledField:
    """Apply the rightmost factor first, matching the matrix product order."""
    for g in reversed(word.factors):
        f = apply_generator(g, f, norm_tol)
    return f


# smoothed-kernel samples -------------------------------------------------------------

def _points(pts, d):
    arr = np.asarray(pts, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, d) if d > 1 else arr.reshape(-1, 1)
    if arr.shape[-1] != d:
        raise CenterOutOfRange(f"points must have {d} components")
    return arr


def sample_smoothed_kernel(word: GeneratorWord, xs, ys, grid: Grid | None = None,
                           norm_tol: float = NORM_TOL) -> np.ndarray:
    """Matrix of k~(x_i, y_j) = <S^(tau_{y_j} phi), tau_{x_i} phi> on the grid."""
    grid = grid or Grid.default(word.d)
    if word.d != grid.d:
        raise InvalidGrid(f"word of dimension {word.d} on a {grid.d}-d grid")
    xs = _points(xs, grid.d)
    ys = _points(ys, grid.d)
    probes = np.stack([sample_gaussian(grid, x).values.ravel() for x in xs])
    out = np.empty((len(xs), len(ys)), dtype=complex)
    worst_tail = 0.0
    for j, y in enumerate(ys):
        img = apply_word(word, sample_gaussian(grid, y), norm_tol)
        worst_tail = max(worst_tail, img.tail_fraction())
        out[:, j] = grid.cell * probes @ img.values.ravel()
    if worst_tail > TAIL_TOL:
        warnings.warn(f"transformed probes carry {worst_tail:.2e} of their mass at the grid edge",
                      QuadratureWarning, stacklevel=2)
    return out


@dataclass(frozen=True)
class FitReport:
    c_fit: float
    max_rel_err: float
    n_used: int
    c_analytic: float | None = None

    @property
    def amplitude_rel_err(self) -> float | None:
        if self.c_analytic is None:
            return None
        return abs(self.c_fit / self.c_analytic - 1.0)

    def to_dict(self) -> dict:
        return {
            "c_fit": self.c_fit,
            "max_rel_err": self.max_rel_err,
            "n_used": self.n_used,
            "c_analytic": self.c_analytic,
            "amplitude_rel_err": self.amplitude_rel_err,
        }


def fit_against_analytic(samples, xs, ys, form, level: float = 1e-6, min_points: int = 10) -> FitReport:
    """Fit log|samples| = log c - pi Q_S(z).z over the retained points.

    Only the amplitude c is fitted; Q_S comes from ``form``.  Points with
    magnitude below ``level`` times the largest sample are dropped.
    """
    samples = np.asarray(samples)
    d = form.d
    xs = _points(xs, d)
    ys = _points(ys, d)
    mag = np.abs(samples)
    X = np.repeat(xs[:, None, :], len(ys), axis=1)
    Y = np.repeat(ys[None, :, :], len(xs), axis=0)
    q = form.exponent(X, Y)
    keep = mag > level * mag.max()
    if np.count_nonzero(keep) < min_points:
        raise InsufficientSamples(f"only {np.count_nonzero(keep)} usable samples, need {min_points}")
    log_c = float(np.mean(np.log(mag[keep]) + np.pi * q[keep]))
    c = float(np.exp(log_c))
    pred = c * np.exp(-np.pi * q[keep])
    rel = np.abs(pred - mag[keep]) / mag[keep]
    return FitReport(c, float(rel.max()), int(np.count_nonzero(keep)), form.amplitude)


def sample_csv_rows(samples, xs, ys):
    """Rows (x..., y..., re, im, abs) for CSV dumps."""
    xs = np.asarray(xs, dtype=float).reshape(len(samples), -1)
    ys = np.asarray(ys, dtype=float).reshape(samples.shape[1], -1)
    rows = []
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            v = samples[i, j]
            rows.append([*x.tolist(), *y.tolist(), float(v.real), float(v.imag), float(abs(v))])
    return rows
