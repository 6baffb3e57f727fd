"""Kernels of metaplectic operators and their Gaussian smoothings.

For S in Sp(d, R) with blocks A, B, C, D the smoothed kernel
k~ = k * exp(-pi |.|^2) satisfies |k~(x, y)| = c exp(-pi Q_S(x, y).(x, y))
with Q_S positive semi-definite.  Three block cases are handled separately:
B invertible, B = 0, and 1 <= rank(B) < d.  The null space of Q_S is the
localization manifold {(x, D^T x) : x in R(C)^perp}, and the kernel is
quasi-diagonal exactly when that manifold lies in the diagonal x = y.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BNotZero, ConditioningFailure, NotApplicable, SingularB, WrongDimension
from .gaussian import complex_inverse_split
from .symplectic import (
    DEFAULT_GAP_RATIO,
    DEFAULT_RANK_TOL,
    SymplecticMatrix,
    as_symplectic,
    block_rank,
    normalize_orientation,
    pseudo_inverse,
    subspace_bases,
)

NULL_TOL = 1e-7
IDENTITY_TOL = 1e-8
DEFAULT_COND_CAP = 1e12


def _sym(M):
    return 0.5 * (M + M.T)


# closed-form kernels ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KernelForm:
    """Data of the (unsmoothed) kernel of the metaplectic operator.

    ``variant`` is ``"free"`` (B invertible), ``"b_zero"`` or ``"general"``.
    ``amplitude`` is ``None`` in the general case, where the constant in
    front of the oscillatory integral is not available in closed form.
    """

    variant: str
    matrices: dict
    amplitude: float | None
    S: SymplecticMatrix
    subspaces: object = None

    def __getitem__(self, key):
        return self.matrices[key]

    def evaluate(self, x, y) -> complex:
        """Pointwise kernel value; only defined for the free case."""
        if self.variant != "free":
            raise NotApplicable("pointwise evaluation needs an invertible B block")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        m = self.matrices
        phase = x @ m["DB^-1"] @ x + y @ m["B^-1A"] @ y - 2 * (m["B^-1"] @ x) @ y
        return self.amplitude * np.exp(1j * np.pi * phase)


def kernel_form(S, rank_tol: float = DEFAULT_RANK_TOL, gap_ratio: float | None = DEFAULT_GAP_RATIO) -> KernelForm:
    """Classify S by rank(B) and collect the matrices its kernel is built from."""
    S = as_symplectic(S)
    sub = subspace_bases(S, rank_tol, gap_ratio)
    d, r = S.d, sub.rank_B
    A, B, C, D = S.A, S.B, S.C, S.D
    if r == d:
        Binv = np.linalg.inv(B)
        mats = {"B^-1": Binv, "DB^-1": _sym(D @ Binv), "B^-1A": _sym(Binv @ A)}
        amp = abs(np.linalg.det(B)) ** -0.5
        return KernelForm("free", mats, float(amp), S, sub)
    if r == 0:
        mats = {"D^T": D.T.copy(), "CD^T": _sym(C @ D.T)}
        amp = abs(np.linalg.det(D)) ** 0.5
        return KernelForm("b_zero", mats, float(amp), S, sub)
    Bp = pseudo_inverse(B, rank_tol, scale=S.norm)
    mats = {
        "B^+": Bp,
        "B^+A": Bp @ A,
        "DB^+": D @ Bp,
        "DC^T": _sym(D @ C.T),
        "C^T": C.T.copy(),
    }
    return KernelForm("general", mats, None, S, sub)


# smoothed kernels ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SmoothedKernelForm:
    """|k~(x, y)| = amplitude * exp(-pi QS (x, y).(x, y)).

    ``amplitude`` is ``None`` when it has to be fitted against samples.
    ``kernel_basis`` is an orthonormal basis of the numerical null space.
    """

    QS: np.ndarray
    amplitude: float | None
    kernel_basis: np.ndarray
    case: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.QS.shape[0] // 2

    @property
    def fit_required(self) -> bool:
        return self.amplitude is None

    def exponent(self, x, y):
        """Q_S(x, y).(x, y) for points with leading batch axes."""
        z = np.concatenate([np.atleast_1d(x), np.atleast_1d(y)], axis=-1)
        return np.einsum("...i,ij,...j->...", z, self.QS, z)

    def magnitude(self, x, y, amplitude=None):
        c = self.amplitude if amplitude is None else amplitude
        if c is None:
            raise ValueError("amplitude must be fitted first")
        return c * np.exp(-np.pi * self.exponent(x, y))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.QS)[0])


def null_basis(Q, rel_tol: float = NULL_TOL) -> np.ndarray:
    """Eigenvectors of the symmetric matrix Q with eigenvalue below rel_tol * |Q|."""
    lam, vec = np.linalg.eigh(_sym(np.asarray(Q, dtype=float)))
    scale = max(np.abs(lam).max(), 1e-300) if lam.size else 1.0
    return vec[:, lam < rel_tol * scale]


def _finish(QS, amplitude, case, **diag):
    QS = _sym(QS)
    return SmoothedKernelForm(QS, amplitude, null_basis(QS), case, diag)


def smoothed_form_freeB(S, cond_cap: float = DEFAULT_COND_CAP) -> SmoothedKernelForm:
    """Smoothed kernel for invertible B.

    With Delta_B = diag(B^-T, B^-1) and S~ = [[D^T, -I], [-I, A]], the form is
    S~^T Delta_B^T (I + N^2)^-1 Delta_B S~ where N = Delta_B S~ is symmetric.
    """
    S = as_symplectic(S)
    d = S.d
    if np.linalg.cond(S.B) > cond_cap:
        raise SingularB("B is singular or too ill-conditioned for the free-case formula")
    A, B, D = S.A, S.B, S.D
    eye = np.eye(d)
    Binv = np.linalg.inv(B)
    delta = np.block([[Binv.T, np.zeros((d, d))], [np.zeros((d, d)), Binv]])
    tilde = np.block([[D.T, -eye], [-eye, A]])
    N = _sym(delta @ tilde)
    inner = np.linalg.inv(np.eye(2 * d) + N @ N)
    QS = tilde.T @ delta.T @ inner @ delta @ tilde
    amp = abs(np.linalg.det(B)) ** -0.5 * abs(np.linalg.det(np.eye(2 * d) - 1j * N)) ** -0.5
    return _finish(QS, float(amp), "free", N=N)


def smoothed_form_bzero(S, rank_tol: float = DEFAULT_RANK_TOL) -> SmoothedKernelForm:
    """Smoothed kernel for B = 0, where D is invertible.

    With M = (I + DD^T + CD^T (I + DD^T)^-1 DC^T)^-1 the form is
    [[I - M, -M D], [-D^T M, I - D^T M D]].
    """
    S = as_symplectic(S)
    if np.linalg.norm(S.B, 2) > rank_tol * S.norm:
        raise BNotZero("B block is not zero")
    C, D = S.C, S.D
    d = S.d
    eye = np.eye(d)
    G = eye + D @ D.T
    CDt = _sym(C @ D.T)
    M = np.linalg.inv(G + CDt @ np.linalg.solve(G, CDt))
    M = _sym(M)
    QS = np.block([[eye - M, -M @ D], [-D.T @ M, eye - D.T @ M @ D]])
    amp = abs(np.linalg.det(D)) ** 0.5 * abs(np.linalg.det(G - 1j * CDt)) ** -0.5
    return _finish(QS, float(amp), "b_zero")


def _rotate(cols, O):
    if O is None or cols.shape[1] == 0:
        return cols
    return cols @ np.asarray(O, dtype=float)


def smoothed_form_general(S, rank_tol: float = DEFAULT_RANK_TOL, gap_ratio: float | None = DEFAULT_GAP_RATIO,
                          rotations=None, cond_cap: float = DEFAULT_COND_CAP) -> SmoothedKernelForm:
    """Smoothed kernel for 1 <= rank(B) < d.

    The matrix is first rotated to S' = (PAQ, PBQ, PCQ, PDQ); then the
    smoothing integral over R(B') x R(B')^perp x ker(B')^perp becomes one
    complex Gaussian integral with matrix G - iL in the coordinates
    (r, t, s) = (V1^T u1, W^T z, V2^T u2).  Its real-part inverse
    R = (G + L G^-1 L)^-1 gives

        Q_S'(x, y) = |x|^2 + |y|^2 - R zeta.zeta,
        zeta = (V1^T x, W^T y, V2^T x + V2^T D' y),

    and Q_S(x, y) = Q_S'(P x, Q^T y).

    G carries the coupling block W^T D'^T V2.  It is zero whenever
    D'^T(R(B')^perp) = ker(B'), which orthogonal rotations alone cannot
    always arrange.

    ``rotations`` optionally maps ``"V1"``, ``"V2"``, ``"W"`` to orthogonal
    matrices that re-mix the basis columns; the result does not depend on
    them.
    """
    S = as_symplectic(S)
    norm = normalize_orientation(S, rank_tol, gap_ratio)
    Sp = norm.S_prime
    d, r = S.d, norm.rank
    k = d - r
    A, B, C, D = Sp.A, Sp.B, Sp.C, Sp.D
    sub = subspace_bases(Sp, rank_tol, gap_ratio)
    if sub.rank_B != r:
        raise ConditioningFailure("rank of B changed under orthogonal normalisation")
    rotations = rotations or {}
    V1 = _rotate(sub.cols("R(B)"), rotations.get("V1"))
    V2 = _rotate(sub.cols("R(B)^perp"), rotations.get("V2"))
    W = _rotate(sub.cols("ker(B)^perp"), rotations.get("W"))
    Bp = pseudo_inverse(B, rank_tol, scale=Sp.norm)

    Z = np.zeros
    L = np.block([
        [V1.T @ D @ Bp @ V1, -V1.T @ Bp.T @ W, Z((r, k))],
        [-W.T @ Bp @ V1, W.T @ Bp @ A @ W, W.T @ C.T @ V2],
        [Z((k, r)), V2.T @ C @ W, V2.T @ D @ C.T @ V2],
    ])
    L = _sym(L)
    coupling = W.T @ D.T @ V2
    G = np.block([
        [np.eye(r), Z((r, r)), Z((r, k))],
        [Z((r, r)), np.eye(r), coupling],
        [Z((k, r)), coupling.T, np.eye(k) + V2.T @ D @ D.T @ V2],
    ])
    try:
        R, _ = complex_inverse_split(G, -L, cond_cap=cond_cap)
    except Exception as exc:
        raise ConditioningFailure(str(exc)) from exc
    R = _sym(R)

    T = np.block([
        [V1.T, Z((r, d))],
        [Z((r, d)), W.T],
        [V2.T, V2.T @ D],
    ])
    QSp = np.eye(2 * d) - T.T @ R @ T
    lift = np.block([[norm.P, Z((d, d))], [Z((d, d)), norm.Q.T]])
    QS = lift.T @ QSp @ lift
    return _finish(
        QS, None, "general",
        normalization_residual=norm.residual,
        coupling_norm=float(np.linalg.norm(coupling, 2)) if coupling.size else 0.0,
        G=G, L=L,
    )


def smoothed_form(S, rank_tol: float = DEFAULT_RANK_TOL, gap_ratio: float | None = DEFAULT_GAP_RATIO,
                  rotations=None) -> SmoothedKernelForm:
    """Dispatch on rank(B)."""
    S = as_symplectic(S)
    r, *_ = block_rank(S.B, S.norm, rank_tol, gap_ratio, "B")
    if r == S.d:
        return smoothed_form_freeB(S)
    if r == 0:
        return smoothed_form_bzero(S, rank_tol)
    return smoothed_form_general(S, rank_tol, gap_ratio, rotations=rotations)


# localization manifold -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LocalizationManifold:
    """{(x, D^T x) : x in R(C)^perp}, stored through a basis of R(C)^perp."""

    basis: np.ndarray
    image: np.ndarray

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def generators(self) -> np.ndarray:
        """Columns (x, D^T x) spanning the manifold in R^{2d}."""
        return np.vstack([self.basis, self.image])

    def orthonormal(self) -> np.ndarray:
        if self.dim == 0:
            return np.zeros((2 * self.d, 0))
        U, _, _ = np.linalg.svd(self.generators, full_matrices=False)
        return U


def localization_manifold(S, rank_tol: float = DEFAULT_RANK_TOL,
                          gap_ratio: float | None = DEFAULT_GAP_RATIO) -> LocalizationManifold:
    """Read off Gamma_S from the blocks C and D only."""
    S = as_symplectic(S)
    sub = subspace_bases(S, rank_tol, gap_ratio)
    X = sub.cols("R(C)^perp")
    return LocalizationManifold(X, S.D.T @ X)


def subspace_containment(U, V) -> float:
    """Largest distance of an orthonormal column of U from span(V)."""
    if U.shape[1] == 0:
        return 0.0
    if V.shape[1] == 0:
        return float(np.linalg.norm(U, 2))
    resid = U - V @ (V.T @ U)
    return float(np.linalg.norm(resid, 2))


def compare_subspaces(U, V) -> dict:
    """Dimension match and two-way containment residual of two orthonormal bases."""
    return {
        "dims": (U.shape[1], V.shape[1]),
        "residual": max(subspace_containment(U, V), subspace_containment(V, U)),
    }


# verdicts ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Verdict:
    quasi_diagonal: bool
    reason: str
    epsilon: float
    witness: tuple | None
    manifold: LocalizationManifold
    deviation: float


def decay_constant(QS) -> float:
    """Largest eps with Q_S(x, y) >= eps |x - y|^2 for all (x, y).

    Splits R^{2d} into the diagonal and anti-diagonal, minimises Q_S over
    the diagonal component (a Schur complement), and compares with
    |x - y|^2 = 2 |a|^2 on the anti-diagonal coordinate a.
    """
    QS = np.asarray(QS, dtype=float)
    d = QS.shape[0] // 2
    eye = np.eye(d) / np.sqrt(2.0)
    Ua = np.vstack([eye, -eye])
    Ub = np.vstack([eye, eye])
    Qaa, Qab, Qbb = Ua.T @ QS @ Ua, Ua.T @ QS @ Ub, Ub.T @ QS @ Ub
    scale = max(np.linalg.norm(QS, 2), 1e-300)
    schur = Qaa - Qab @ pseudo_inverse(_sym(Qbb), 1e-10, scale=scale) @ Qab.T
    lam = np.linalg.eigvalsh(_sym(schur))[0]
    return float(max(lam, 0.0) / 2.0)


def verdict(S, rank_tol: float = DEFAULT_RANK_TOL, gap_ratio: float | None = DEFAULT_GAP_RATIO,
            identity_tol: float = IDENTITY_TOL, form: SmoothedKernelForm | None = None) -> Verdict:
    """Quasi-diagonality of the kernel of S.

    Decided by whether D^T fixes every basis vector of R(C)^perp.  When it
    does, ``epsilon`` is the tight constant in Q_S(x, y) >= eps |x - y|^2;
    otherwise ``witness`` is a pair (x, D^T x) off the diagonal.
    """
    S = as_symplectic(S)
    gamma = localization_manifold(S, rank_tol, gap_ratio)
    d = S.d
    tol = identity_tol * max(1.0, np.linalg.norm(S.D, 2))
    dev_cols = np.linalg.norm(gamma.image - gamma.basis, axis=0) if gamma.dim else np.zeros(0)
    quasi = bool(np.all(dev_cols <= tol))
    deviation = float(dev_cols.max()) if dev_cols.size else 0.0

    if gamma.dim == 0:
        reason = "C-invertible"
    elif d == 1:
        reason = "d1-rule"
    elif quasi:
        reason = "D-restricted-identity"
    else:
        reason = "gamma-in-delta"

    witness = None
    eps = 0.0
    if quasi:
        if form is None:
            form = smoothed_form(S, rank_tol, gap_ratio)
        eps = decay_constant(form.QS)
    else:
        j = int(np.argmax(dev_cols))
        witness = (gamma.basis[:, j].copy(), gamma.image[:, j].copy())
    return Verdict(quasi, reason, eps, witness, gamma, deviation)


@dataclass(frozen=True)
class Scenario:
    name: str
    quasi_diagonal: bool


def classify_d2(S, rank_tol: float = DEFAULT_RANK_TOL, gap_ratio: float | None = DEFAULT_GAP_RATIO,
                identity_tol: float = IDENTITY_TOL) -> Scenario:
    """Geometric case of a 2 x 2-block symplectic matrix (d = 2).

    ``C-invertible``, ``C-zero``, ``rank1-transversal`` (ker C and ker C^T
    are different lines) or ``rank1-dilation`` (they coincide and D^T acts
    on that line by a scalar).
    """
    S = as_symplectic(S)
    if S.d != 2:
        raise WrongDimension(f"classify_d2 needs d = 2, got d = {S.d}")
    sub = subspace_bases(S, rank_tol, gap_ratio)
    tol = identity_tol * max(1.0, np.linalg.norm(S.D, 2))
    if sub.rank_C == 2:
        return Scenario("C-invertible", True)
    if sub.rank_C == 0:
        return Scenario("C-zero", bool(np.linalg.norm(S.D - np.eye(2), 2) <= tol))
    u = sub.cols("ker(C)")[:, 0]
    v = sub.cols("R(C)^perp")[:, 0]
    sin_angle = abs(u[0] * v[1] - u[1] * v[0])
    if sin_angle > np.sqrt(identity_tol):
        return Scenario("rank1-transversal", False)
    return Scenario("rank1-dilation", bool(np.linalg.norm(S.D.T @ v - v) <= tol))
