"""Symplectic matrices, generators and the subspace bookkeeping used by the
kernel analysis.

Matrices are stored as ``(2d, 2d)`` float arrays in the block layout

    S = [[A, B],
         [C, D]]

and every orthonormal basis is taken from an SVD with descending singular
values and a sign convention (first non-negligible entry of each column
positive), so that results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    InvalidInput,
    NonSymmetricP,
    NotApplicable,
    NotSymplectic,
    OddDimension,
    RankAmbiguous,
    SingularE,
)

DEFAULT_TOL = 1e-9
DEFAULT_RANK_TOL = 1e-10
DEFAULT_GAP_RATIO = 100.0
DEFAULT_COND_CAP = 1e12


def standard_form(d: int) -> np.ndarray:
    """The matrix J = [[0, I], [-I, 0]] of size 2d."""
    eye = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, eye], [-eye, zero]])


def _blocks(M):
    d = M.shape[0] // 2
    return M[:d, :d], M[:d, d:], M[d:, :d], M[d:, d:]


def symplectic_residuals(M: np.ndarray) -> dict:
    """Relative residuals of S^T J S = J and of the six block relations.

    Every residual is a spectral norm divided by ``max(1, |S|^2)`` since
    round-off in a product of two blocks scales with the squared norm.
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0] // 2
    A, B, C, D = _blocks(M)
    eye = np.eye(d)
    scale = max(1.0, np.linalg.norm(M, 2) ** 2)

    def nrm(X):
        return float(np.linalg.norm(X, 2)) / scale if X.size else 0.0

    Jd = standard_form(d)
    return {
        "form": nrm(M.T @ Jd @ M - Jd),
        "AtC": nrm(A.T @ C - C.T @ A),
        "BtD": nrm(B.T @ D - D.T @ B),
        "AtD-CtB": nrm(A.T @ D - C.T @ B - eye),
        "DCt": nrm(D @ C.T - C @ D.T),
        "BAt": nrm(B @ A.T - A @ B.T),
        "DAt-CBt": nrm(D @ A.T - C @ B.T - eye),
    }


@dataclass(frozen=True, eq=False)
class SymplecticMatrix:
    """A validated element of Sp(d, R).

    Use :func:`validate_symplectic` to construct one from a raw array.
    """

    matrix: np.ndarray
    residual: float = 0.0

    @property
    def d(self) -> int:
        return self.matrix.shape[0] // 2

    @property
    def A(self) -> np.ndarray:
        return self.matrix[: self.d, : self.d]

    @property
    def B(self) -> np.ndarray:
        return self.matrix[: self.d, self.d:]

    @property
    def C(self) -> np.ndarray:
        return self.matrix[self.d:, : self.d]

    @property
    def D(self) -> np.ndarray:
        return self.matrix[self.d:, self.d:]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    @classmethod
    def from_blocks(cls, A, B, C, D, tol=DEFAULT_TOL):
        A, B, C, D = (np.atleast_2d(np.asarray(X, dtype=float)) for X in (A, B, C, D))
        return validate_symplectic(np.block([[A, B], [C, D]]), tol=tol)


def validate_symplectic(M, tol: float = DEFAULT_TOL) -> SymplecticMatrix:
    """Check that ``M`` is symplectic and wrap it.

    The recorded residual is the worst of the relative residuals returned
    by :func:`symplectic_residuals`.

    Raises
    ------
    OddDimension
        If ``M`` is not square with even side.
    NotSymplectic
        If the residual exceeds ``tol``.
    """
    M = np.array(M, dtype=float)
    if M.ndim == 1 and M.size == 0:
        raise OddDimension("empty matrix")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise OddDimension(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] % 2 or M.shape[0] == 0:
        raise OddDimension(f"side length {M.shape[0]} is not a positive even number")
    if not np.all(np.isfinite(M)):
        raise InvalidInput("matrix has non-finite entries")
    residual = max(symplectic_residuals(M).values())
    if residual > tol:
        raise NotSymplectic(residual, tol)
    M.setflags(write=False)
    return SymplecticMatrix(M, residual)


def symplectic_inverse(S: SymplecticMatrix) -> SymplecticMatrix:
    """Inverse via the block formula [[D^T, -B^T], [-C^T, A^T]]."""
    inv = np.block([[S.D.T, -S.B.T], [-S.C.T, S.A.T]])
    inv.setflags(write=False)
    return SymplecticMatrix(inv, S.residual)


# generators ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Fourier:
    """The standard form J, projection of the Fourier transform."""

    d: int = 1


@dataclass(frozen=True, eq=False)
class Chirp:
    """V_P = [[I, 0], [P, I]], projection of multiplication by exp(i pi P t.t)."""

    P: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "P", np.atleast_2d(np.asarray(self.P, dtype=float)))

    @property
    def d(self) -> int:
        return self.P.shape[0]


@dataclass(frozen=True, eq=False)
class Dilation:
    """D_E = [[E^-1, 0], [0, E^T]], projection of f -> |det E|^(1/2) f(E t)."""

    E: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "E", np.atleast_2d(np.asarray(self.E, dtype=float)))

    @property
    def d(self) -> int:
        return self.E.shape[0]


Generator = Union[Fourier, Chirp, Dilation]


def check_generator(g: Generator, tol: float = DEFAULT_TOL, cond_cap: float = DEFAULT_COND_CAP):
    if isinstance(g, Fourier):
        if int(g.d) < 1:
            raise InvalidInput(f"Fourier factor needs d >= 1, got {g.d}")
    elif isinstance(g, Chirp):
        P = g.P
        if P.shape[0] != P.shape[1]:
            raise NonSymmetricP(f"P must be square, got shape {P.shape}")
        if not np.all(np.isfinite(P)):
            raise InvalidInput("P has non-finite entries")
        if np.linalg.norm(P - P.T) > tol * max(1.0, np.linalg.norm(P)):
            raise NonSymmetricP("chirp matrix P is not symmetric")
    elif isinstance(g, Dilation):
        E = g.E
        if E.shape[0] != E.shape[1]:
            raise SingularE(f"E must be square, got shape {E.shape}")
        if not np.all(np.isfinite(E)):
            raise InvalidInput("E has non-finite entries")
        s = np.linalg.svd(E, compute_uv=False)
        if s[-1] == 0 or s[0] / s[-1] > cond_cap:
            raise SingularE(f"dilation matrix E is singular or too ill-conditioned (cap {cond_cap:g})")
    else:
        raise InvalidInput(f"unknown generator {g!r}")


def make_generator(g: Generator, tol: float = DEFAULT_TOL, cond_cap: float = DEFAULT_COND_CAP) -> SymplecticMatrix:
    """The 2d x 2d matrix of a single generator."""
    check_generator(g, tol=tol, cond_cap=cond_cap)
    if isinstance(g, Fourier):
        M = standard_form(int(g.d))
    elif isinstance(g, Chirp):
        d = g.d
        P = 0.5 * (g.P + g.P.T)
        M = np.block([[np.eye(d), np.zeros((d, d))], [P, np.eye(d)]])
    else:
        d = g.d
        M = np.block([[np.linalg.inv(g.E), np.zeros((d, d))], [np.zeros((d, d)), g.E.T]])
    M.setflags(write=False)
    return SymplecticMatrix(M, 0.0)


@dataclass(frozen=True, eq=False)
class GeneratorWord:
    """An ordered product of generators.

    The matrix of the word is the left-to-right product of the factor
    matrices; the operator applies the rightmost factor first.
    """

    factors: tuple = ()
    d: int = 1

    def __post_init__(self):
        factors = tuple(self.factors)
        dims = {int(g.d) for g in factors}
        if len(dims) > 1:
            raise InvalidInput(f"factors of mixed dimension {sorted(dims)}")
        if dims:
            object.__setattr__(self, "d", dims.pop())
        object.__setattr__(self, "factors", factors)

    def __len__(self):
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)

    def __add__(self, other: "GeneratorWord") -> "GeneratorWord":
        if self.factors and other.factors and self.d != other.d:
            raise InvalidInput("cannot concatenate words of different dimension")
        d = self.d if self.factors else other.d
        return GeneratorWord(self.factors + other.factors, d=d)


def word_product(word: GeneratorWord, tol: float = DEFAULT_TOL, cond_cap: float = DEFAULT_COND_CAP) -> SymplecticMatrix:
    """Left-to-right matrix product of a word (identity for the empty word)."""
    M = np.eye(2 * word.d)
    for g in word:
        M = M @ make_generator(g, tol=tol, cond_cap=cond_cap).matrix
    return validate_symplectic(M, tol=tol)


# pseudo-inverse and numerical rank ------------------------------------------

def decide_rank(s, scale, rank_tol=DEFAULT_RANK_TOL, gap_ratio=None, which=""):
    """Number of singular values above ``rank_tol * scale``.

    With ``gap_ratio`` set, raise :class:`RankAmbiguous` when some singular
    value lies within a factor ``gap_ratio`` of the cutoff on either side.
    """
    s = np.asarray(s, dtype=float)
    if scale <= 0 or s.size == 0:
        return 0
    cutoff = rank_tol * scale
    rank = int(np.count_nonzero(s > cutoff))
    if gap_ratio is not None:
        near = s[(s > cutoff / gap_ratio) & (s <= cutoff * gap_ratio)]
        if near.size:
            ratio = near / cutoff
            worst = float(np.min(np.maximum(ratio, 1.0 / ratio)))
            raise RankAmbiguous(worst, which)
    return rank


def pseudo_inverse(M, rank_tol: float = DEFAULT_RANK_TOL, scale: float | None = None) -> np.ndarray:
    """Moore-Penrose inverse from the SVD.

    Singular values at or below ``rank_tol * scale`` are treated as zero;
    ``scale`` defaults to the largest singular value of ``M``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    m, n = M.shape
    if M.size == 0:
        return np.zeros((n, m))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if scale is None:
        scale = s[0] if s.size else 0.0
    r = decide_rank(s, scale, rank_tol)
    return (Vt[:r].T / s[:r]) @ U[:, :r].T


def penrose_residuals(M, Mp) -> tuple:
    """Relative residuals of the four Penrose identities."""
    M = np.atleast_2d(M)
    scale = max(1.0, np.linalg.norm(M, 2) * np.linalg.norm(Mp, 2))
    r1 = np.linalg.norm(M @ Mp @ M - M) / max(1.0, np.linalg.norm(M))
    r2 = np.linalg.norm(Mp @ M @ Mp - Mp) / max(1.0, np.linalg.norm(Mp))
    r3 = np.linalg.norm(M @ Mp - (M @ Mp).T) / scale
    r4 = np.linalg.norm(Mp @ M - (Mp @ M).T) / scale
    return float(r1), float(r2), float(r3), float(r4)


def _fix_signs(cols: np.ndarray) -> np.ndarray:
    cols = np.array(cols, dtype=float)
    for j in range(cols.shape[1]):
        c = cols[:, j]
        big = np.flatnonzero(np.abs(c) > 1e-12 * max(np.abs(c).max(), 1e-300))
        if big.size and c[big[0]] < 0:
            cols[:, j] = -c
    return cols


ROLES = ("R(B)", "ker(B)", "ker(B)^perp", "R(B)^perp", "R(C)^perp", "ker(C)")


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal columns spanning one of the subspaces in :data:`ROLES`."""

    role: str
    columns: np.ndarray

    @property
    def ambient(self) -> int:
        return self.columns.shape[0]

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.T


@dataclass(frozen=True, eq=False)
class Subspaces:
    rank_B: int
    rank_C: int
    bases: dict = field(default_factory=dict)

    def __getitem__(self, role) -> SubspaceBasis:
        return self.bases[role]

    def cols(self, role) -> np.ndarray:
        return self.bases[role].columns


def block_rank(M, S_norm, rank_tol=DEFAULT_RANK_TOL, gap_ratio=DEFAULT_GAP_RATIO, which=""):
    """SVD of a block with its rank decided on the scale of the whole matrix."""
    U, s, Vt = np.linalg.svd(M)
    r = decide_rank(s, S_norm, rank_tol, gap_ratio, which)
    return r, U, s, Vt


def subspace_bases(S: SymplecticMatrix, rank_tol: float = DEFAULT_RANK_TOL,
                   gap_ratio: float | None = DEFAULT_GAP_RATIO) -> Subspaces:
    """Orthonormal bases of the six subspaces attached to the blocks B and C.

    Rank cutoffs are ``rank_tol * |S|_2`` for both blocks.
    """
    scale = S.norm
    rb, Ub, _, Vbt = block_rank(S.B, scale, rank_tol, gap_ratio, "B")
    rc, Uc, _, Vct = block_rank(S.C, scale, rank_tol, gap_ratio, "C")
    bases = {
        "R(B)": _fix_signs(Ub[:, :rb]),
        "R(B)^perp": _fix_signs(Ub[:, rb:]),
        "ker(B)^perp": _fix_signs(Vbt[:rb].T),
        "ker(B)": _fix_signs(Vbt[rb:].T),
        "R(C)^perp": _fix_signs(Uc[:, rc:]),
        "ker(C)": _fix_signs(Vct[rc:].T),
    }
    return Subspaces(rb, rc, {k: SubspaceBasis(k, v) for k, v in bases.items()})


# orientation normalisation --------------------------------------------------

@dataclass(frozen=True, eq=False)
class Normalization:
    """S = D_P S' D_Q with orthogonal P, Q.

    ``S_prime`` has blocks (PAQ, PBQ, PCQ, PDQ); ``ker(B')`` and
    ``R(B')^perp`` are both spanned by the first ``d - r`` coordinate
    vectors.  ``residual`` measures how far ``D'^T`` is from mapping that
    span into itself; it vanishes exactly when D^T(R(B)^perp) = ker(B).
    """

    P: np.ndarray
    Q: np.ndarray
    S_prime: SymplecticMatrix
    rank: int
    residual: float


def normalize_orientation(S: SymplecticMatrix, rank_tol: float = DEFAULT_RANK_TOL,
                          gap_ratio: float | None = DEFAULT_GAP_RATIO) -> Normalization:
    """Rotate S so that the kernel and co-range of B sit on the leading axes."""
    sub = subspace_bases(S, rank_tol, gap_ratio)
    d, r = S.d, sub.rank_B
    if r == 0 or r == d:
        raise NotApplicable(f"orientation normalisation needs 1 <= rank(B) < d, got rank {r}")
    Q = np.hstack([sub.cols("ker(B)"), sub.cols("ker(B)^perp")])
    P = np.vstack([sub.cols("R(B)^perp").T, sub.cols("R(B)").T])
    A2, B2, C2, D2 = P @ S.A @ Q, P @ S.B @ Q, P @ S.C @ Q, P @ S.D @ Q
    Sp = np.block([[A2, B2], [C2, D2]])
    Sp.setflags(write=False)
    k = d - r
    leak = D2.T[k:, :k]
    residual = float(np.linalg.norm(leak, 2) / max(1.0, np.linalg.norm(D2, 2)))
    return Normalization(P, Q, SymplecticMatrix(Sp, S.residual), r, residual)


# symmetry facts --------------------------------------------------------------

@dataclass(frozen=True)
class SymmetryReport:
    kerB_perp_residual: float
    range_B_residual: float
    vacuous: bool

    @property
    def max_residual(self) -> float:
        return max(self.kerB_perp_residual, self.range_B_residual)


def _asym(M) -> float:
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M - M.T, 2) / max(1.0, np.linalg.norm(M, 2)))


def check_symmetry_lemma(S: SymplecticMatrix, rank_tol: float = DEFAULT_RANK_TOL,
                         gap_ratio: float | None = DEFAULT_GAP_RATIO) -> SymmetryReport:
    """Asymmetry of W^T B^+ A W and V1^T D B^+ V1.

    W spans ker(B)^perp and V1 spans R(B); both matrices are symmetric for
    every symplectic S, so the residuals only measure round-off.
    """
    sub = subspace_bases(S, rank_tol, gap_ratio)
    Bp = pseudo_inverse(S.B, rank_tol, scale=S.norm)
    W = sub.cols("ker(B)^perp")
    V1 = sub.cols("R(B)")
    return SymmetryReport(
        kerB_perp_residual=_asym(W.T @ Bp @ S.A @ W),
        range_B_residual=_asym(V1.T @ S.D @ Bp @ V1),
        vacuous=sub.rank_B == 0,
    )


def as_symplectic(S, tol: float = DEFAULT_TOL) -> SymplecticMatrix:
    if isinstance(S, SymplecticMatrix):
        return S
    if isinstance(S, GeneratorWord):
        return word_product(S, tol=tol)
    return validate_symplectic(S, tol=tol)


def word(*factors: Generator, d: int | None = None) -> GeneratorWord:
    """Convenience constructor: ``word(Fourier(), Chirp([[1.0]]))``."""
    if d is None:
        d = factors[0].d if factors else 1
    return GeneratorWord(tuple(factors), d=d)
