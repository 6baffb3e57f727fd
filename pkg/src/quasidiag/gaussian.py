"""Gaussian integrals with complex symmetric quadratic forms.

Forms are written t -> c * exp(-pi Q t.t).  Only the transpose (never the
conjugate transpose) enters the exponent, so complex vectors may be
substituted for t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotIntegrable, SingularM1, SingularSchur

DEFAULT_COND_CAP = 1e12


@dataclass(frozen=True, eq=False)
class ComplexQuadraticForm:
    Q: np.ndarray
    amplitude: complex = 1.0

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=complex))
        if Q.shape[0] != Q.shape[1]:
            raise ValueError(f"Q must be square, got {Q.shape}")
        if np.linalg.norm(Q - Q.T) > 1e-10 * max(1.0, np.linalg.norm(Q)):
            raise ValueError("Q must be complex symmetric")
        object.__setattr__(self, "Q", 0.5 * (Q + Q.T))

    @property
    def n(self) -> int:
        return self.Q.shape[0]


@dataclass(frozen=True, eq=False)
class RealQuadraticFormPSD:
    Q: np.ndarray
    amplitude: float = 1.0
    psd_tol: float = 1e-8

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if Q.shape[0] != Q.shape[1]:
            raise ValueError(f"Q must be square, got {Q.shape}")
        scale = max(1.0, np.linalg.norm(Q, 2))
        if np.linalg.norm(Q - Q.T, 2) > 1e-10 * scale:
            raise ValueError("Q must be symmetric")
        Q = 0.5 * (Q + Q.T)
        if Q.size and np.linalg.eigvalsh(Q)[0] < -self.psd_tol * np.linalg.norm(Q, 2):
            raise ValueError("Q is not positive semi-definite")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        object.__setattr__(self, "Q", Q)

    @property
    def n(self) -> int:
        return self.Q.shape[0]


@dataclass(frozen=True)
class GaussianIntegral:
    """Value of a complex Gaussian integral.

    ``magnitude`` does not depend on any branch choice.  The phase of
    ``value`` uses the product of principal square roots of the
    eigenvalues of Q; these all have positive real part, so the product is
    the branch continuously connected to the positive root for real Q.
    """

    value: complex
    magnitude: float
    branch: str = "principal-eigenvalue"

    def __complex__(self):
        return complex(self.value)

    def __abs__(self):
        return self.magnitude


def _check_integrable(Q):
    if Q.size == 0:
        return
    lam = np.linalg.eigvalsh(0.5 * (Q.real + Q.real.T))
    if lam[0] <= 0:
        raise NotIntegrable(f"real part of Q is not positive definite (min eigenvalue {lam[0]:.3e})")


def inv_sqrt_det(Q) -> complex:
    """det(Q)^(-1/2) on the branch fixed by Re(Q) > 0."""
    lam = np.linalg.eigvals(np.asarray(Q, dtype=complex))
    return complex(np.prod(1.0 / np.sqrt(lam)))


def gaussian_fourier(form, xi) -> GaussianIntegral:
    """Integral of c exp(-pi Q t.t) exp(-2 pi i xi.t) over R^n.

    Equals c det(Q)^(-1/2) exp(-pi Q^-1 xi.xi); ``xi`` may be complex.
    """
    if not isinstance(form, ComplexQuadraticForm):
        form = ComplexQuadraticForm(form)
    Q = form.Q
    _check_integrable(Q)
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    if xi.shape != (form.n,):
        raise ValueError(f"xi must have shape ({form.n},), got {xi.shape}")
    expo = -np.pi * xi @ np.linalg.solve(Q, xi)
    pref = inv_sqrt_det(Q)
    value = form.amplitude * pref * np.exp(expo)
    magnitude = abs(form.amplitude) * abs(np.linalg.det(Q)) ** -0.5 * np.exp(expo.real)
    return GaussianIntegral(complex(value), float(magnitude))


def complex_inverse_split(M1, M2, cond_cap: float = DEFAULT_COND_CAP):
    """Real and imaginary parts of (M1 + i M2)^-1 using only real algebra.

    Returns ``(R, I)`` with R = (M1 + M2 M1^-1 M2)^-1 and
    I = -M1^-1 M2 (M1 + M2 M1^-1 M2)^-1.
    """
    M1 = np.atleast_2d(np.asarray(M1, dtype=float))
    M2 = np.atleast_2d(np.asarray(M2, dtype=float))
    if np.linalg.cond(M1) > cond_cap:
        raise SingularM1("M1 is singular or ill-conditioned")
    M1_inv_M2 = np.linalg.solve(M1, M2)
    schur = M1 + M2 @ M1_inv_M2
    if np.linalg.cond(schur) > cond_cap:
        raise SingularSchur("M1 + M2 M1^-1 M2 is singular or ill-conditioned")
    re = np.linalg.inv(schur)
    im = -M1_inv_M2 @ re
    return re, im


def convolve_gaussians(g1: RealQuadraticFormPSD, g2: RealQuadraticFormPSD) -> RealQuadraticFormPSD:
    """Closed-form convolution of two positive-definite Gaussians."""
    for g in (g1, g2):
        if g.n and np.linalg.eigvalsh(g.Q)[0] <= 0:
            raise NotIntegrable("convolution needs strictly positive-definite forms")
    if g1.n != g2.n:
        raise ValueError("forms live in different dimensions")
    Q = np.linalg.inv(np.linalg.inv(g1.Q) + np.linalg.inv(g2.Q))
    c = g1.amplitude * g2.amplitude * np.linalg.det(g1.Q + g2.Q) ** -0.5
    return RealQuadraticFormPSD(0.5 * (Q + Q.T), float(c))


def eval_form(form, t):
    """c exp(-pi Q t.t); ``t`` may carry leading batch axes."""
    t = np.asarray(t)
    if t.ndim == 0:
        t = t[None]
    quad = np.einsum("...i,ij,...j->...", t, form.Q, t)
    return form.amplitude * np.exp(-np.pi * quad)
