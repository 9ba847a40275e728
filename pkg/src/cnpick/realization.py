"""Contractive interpolating multipliers from a lurking-isometry colligation.

Internally the node matrices use ``K[i, j] = k(nodes[i], nodes[j])`` (the
transpose, i.e. the conjugate, of the Gram convention), so that rows of a
factor ``F`` with ``F F^* = K`` are coordinates of the kernel data.

For normalized data ``psi = targets / rho`` the Pick positivity gives
``l - psi psi^* k = Theta Theta^*``.  Dividing by ``k`` and writing
``1/k = 1 - <b, b>`` and ``g = l / k = Gamma Gamma^*`` yields

    <(gamma_i, b_i (x) theta_i), (gamma_j, b_j (x) theta_j)>
        = <(psi_i, theta_i), (psi_j, theta_j)>,

so the map ``(gamma_j, b_j (x) theta_j) -> (psi_j, theta_j)`` (in conjugated
coordinates) extends to a partial isometry ``V`` and then to a unitary on a
larger auxiliary space.  Solving the colligation
for ``theta`` at a new point gives the transfer function.
"""

from dataclasses import dataclass
import math

import numpy as np
import scipy.linalg as sla

from . import _backend, kernels
from ._json import from_pairs, points_from_json, points_to_json, to_pairs
from .errors import (
    AdmissibilityError,
    IndefiniteError,
    InfeasibleError,
    NotCNPError,
    RealizationError,
)
from .grammian import HermitianMatrix, as_hermitian, normalize_kernel_matrix

DEFAULT_RANK_TOL = 1e-10
# pivot cutoff inside the colligation build: dropping genuine but small
# directions of ill-conditioned Grams breaks the inner-product identity
BUILD_RANK_TOL = 1e-16
ISOMETRY_TOL = 1e-9
DATA_TOL = 1e-6
RESIDUAL_TOL = 1e-10
COND_LIMIT = 1e12
CONTRACTIVE_RTOL = 1e-8


@dataclass(frozen=True)
class PsdFactor:
    """``rows @ rows^*`` reproduces the factored matrix; ``rank`` pivots were kept."""

    rank: int
    rows: np.ndarray
    rank_tol: float
    perm: np.ndarray
    residual: float

    def to_dict(self):
        return {"rank": self.rank, "rows": to_pairs(self.rows), "rank_tol": self.rank_tol, "residual": self.residual}


def factor_psd(h, rank_tol=DEFAULT_RANK_TOL, psd_tol=None):
    """Rank-revealing pivoted Cholesky of a PSD matrix.

    Pivots stop once the largest remaining diagonal entry is at most
    ``rank_tol * (1 + lambda_max)``.  Negative eigenvalues down to
    ``-psd_tol * (1 + lambda_max)`` (default ``psd_tol = rank_tol``) are
    treated as rounding; anything more negative, or a discarded Schur
    complement that is not negligible at that level, raises
    :class:`IndefiniteError`.
    """
    h = as_hermitian(h)
    a = np.asarray(h)
    if h.n == 0:
        return PsdFactor(0, np.zeros((0, 0), np.complex128), rank_tol, np.zeros(0, np.int64), 0.0)
    psd_tol = rank_tol if psd_tol is None else max(psd_tol, rank_tol)
    lam_max = max(h.lambda_max, 0.0)
    tol = rank_tol * (1.0 + lam_max)
    neg = psd_tol * (1.0 + lam_max)
    if h.lambda_min < -neg:
        raise IndefiniteError(f"matrix is indefinite: lambda_min = {h.lambda_min:.3g} < -{neg:.3g}")
    rows, perm, rank, schur = _backend.pivoted_cholesky(a, tol)
    if schur.size:
        if np.min(schur.diagonal().real) < -neg or np.max(np.abs(schur)) > 2.0 * neg:
            raise IndefiniteError("Schur remainder after pivoting is not negligible")
    residual = float(np.max(np.abs(rows @ rows.conj().T - a), initial=0.0))
    if residual > 1e-9 * (1.0 + lam_max):
        raise IndefiniteError(f"factor reproduces the matrix only to {residual:.3g}")
    rows.setflags(write=False)
    return PsdFactor(rank=int(rank), rows=rows, rank_tol=rank_tol, perm=perm, residual=residual)


def _embedding_factor(spec, nodes, rank_tol, psd_tol):
    if not spec.is_cnp:
        raise NotCNPError(f"{spec.family} is not a complete Pick kernel")
    b = HermitianMatrix(kernels.b_gram(spec, nodes))
    try:
        fac = factor_psd(b, rank_tol, psd_tol)
    except IndefiniteError as exc:
        raise IndefiniteError(f"b-Gram is indefinite; kernel is not complete Pick here ({exc})") from exc
    return b, fac


def node_embedding(spec, nodes, rank_tol=DEFAULT_RANK_TOL, psd_tol=None):
    """b-Gram ``B[i, j] = 1 - 1/k(nodes[j], nodes[i])`` and coordinates ``beta`` with ``beta beta^* = B``."""
    b, fac = _embedding_factor(spec, nodes, rank_tol, psd_tol)
    return b, fac.rows


def _pivot_solve(rows, pivots, rhs):
    """Coordinates ``c`` with ``rows[pivots] c = rhs[pivots]`` (a lower-triangular system).

    For data in the span of the pivot rows this is the orthogonal projection;
    forward substitution repeats the arithmetic of the factorization, so node
    data come back essentially exactly even when the Gram is ill-conditioned.
    """
    if not len(pivots):
        return np.zeros((0,) + rhs.shape[1:], dtype=np.complex128)
    return sla.solve_triangular(rows[pivots], rhs[pivots], lower=True)


def _colligation(x, y, rank_rtol=1e-10):
    """Partial isometry ``V`` with ``V x_j = y_j`` for the columns of ``x`` and ``y``.

    On ``span(x)`` the map is the orthogonal Procrustes solution (the isometry
    minimizing ``||V x - y||_F``), which absorbs rounding in the Gram identity
    without amplifying it through small singular values of ``x``.  ``V`` is
    zero on the orthogonal complement of ``span(x)``, so its range stays inside
    ``span(y)``.  Returns ``(V, data_residual, isometry_defect)``.
    """
    ux, sx, vxh = np.linalg.svd(x, full_matrices=False)
    keep = sx > rank_rtol * max(1.0, sx[0] if sx.size else 0.0)
    ux, sx, vxh = ux[:, keep], sx[keep], vxh[keep]
    pu, _, pvh = np.linalg.svd((y @ vxh.conj().T) * sx[None, :], full_matrices=False)
    v = (pu @ pvh) @ ux.conj().T
    scale = max(1.0, float(np.max(np.abs(y), initial=0.0)))
    data_residual = float(np.max(np.abs(v @ x - y), initial=0.0)) / scale
    # partial isometry: V V^* V = V
    defect = float(np.max(np.abs(v @ v.conj().T @ v - v), initial=0.0))
    return v, data_residual, defect


def unitary_dilation(v):
    """Unitary ``U = [[V, M], [N^*, 0]]`` extending the partial isometry ``V``.

    ``N`` spans ``ker V`` and ``M`` the complement of ``ran V``.  The added
    rows and columns are extra state directions on which ``E(w)`` acts as
    zero, so the transfer function of ``U`` equals that of ``V``.  Returns
    ``(U, ||U^* U - I||_2)``.
    """
    u_, s_, vh = np.linalg.svd(v)
    rank = int(np.sum(s_ > 0.5))
    kernel = vh[rank:].conj().T
    coker = u_[:, rank:]
    m_rows, n_cols = v.shape
    a_out, a_in = kernel.shape[1], coker.shape[1]
    u = np.zeros((m_rows + a_out, n_cols + a_in), dtype=np.complex128)
    u[:m_rows, :n_cols] = v
    u[:m_rows, n_cols:] = coker
    u[m_rows:, :n_cols] = kernel.conj().T
    defect = float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[1]), 2)) if u.size else 0.0
    return u, defect


@dataclass(frozen=True, eq=False)
class Realization:
    """Colligation blocks plus the node data needed to evaluate the transfer function.

    The stored operator is ``V = [[A^*, C^*], [B^*, D^*]]`` acting on
    ``(gamma-space) (+) (b-space (x) L)`` and landing in ``C (+) L``; it is a
    partial isometry whose :func:`unitary_dilation` is the unitary
    colligation (``unitary_defect`` measures that dilation).
    ``phi(w) = rho * Gamma(w) Delta(w)`` with
    ``Delta(w) = A + B E(w) (I - D E(w))^{-1} C``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    nodes: np.ndarray
    rho: float
    kspec: kernels.KernelSpec
    lspec: kernels.KernelSpec | None
    node_b_gram: np.ndarray
    node_basis: np.ndarray
    gamma: np.ndarray
    basis_pivots: tuple
    gamma_pivots: tuple
    rank: int
    unitary_defect: float
    data_residual: float

    @property
    def state_dim(self):
        return self.rank

    def _blocks(self):
        q = self.gamma.shape[1]
        u = np.block([[self.A.conj().T, self.C.conj().T], [self.B.conj().T, self.D.conj().T]])
        return u[:1, :q], u[:1, q:], u[1:, :q], u[1:, q:]

    def to_dict(self):
        return {
            "A": to_pairs(self.A),
            "B": to_pairs(self.B),
            "C": to_pairs(self.C),
            "D": to_pairs(self.D),
            "nodes": points_to_json(self.nodes),
            "rho": self.rho,
            "kernel": self.kspec.to_dict(),
            "kernel2": None if self.lspec is None else self.lspec.to_dict(),
            "node_b_gram": to_pairs(self.node_b_gram),
            "node_basis": to_pairs(self.node_basis),
            "gamma": to_pairs(self.gamma),
            "basis_pivots": list(self.basis_pivots),
            "gamma_pivots": list(self.gamma_pivots),
            "rank": self.rank,
            "unitary_defect": self.unitary_defect,
            "data_residual": self.data_residual,
        }

    @classmethod
    def from_dict(cls, data):
        kspec = kernels.KernelSpec.from_dict(data["kernel"])
        lspec = kernels.KernelSpec.from_dict(data["kernel2"]) if data.get("kernel2") else None
        rank = int(data["rank"])

        def mat(key, rows, cols):
            a = from_pairs(data[key]) if data[key] else np.zeros((rows, cols), np.complex128)
            return np.asarray(a, dtype=np.complex128).reshape(rows, cols)

        nodes = points_from_json(data["nodes"], kspec.dim)
        n = nodes.shape[0]
        gamma = from_pairs(data["gamma"]).reshape(n, -1)
        beta = mat("node_basis", n, -1) if np.size(data["node_basis"]) else np.zeros((n, 0), np.complex128)
        q, rb = gamma.shape[1], beta.shape[1]
        return cls(
            A=mat("A", q, 1),
            B=mat("B", q, rank),
            C=mat("C", rb * rank, 1),
            D=mat("D", rb * rank, rank),
            nodes=nodes,
            rho=float(data["rho"]),
            kspec=kspec,
            lspec=lspec,
            node_b_gram=mat("node_b_gram", n, n),
            node_basis=beta,
            gamma=gamma,
            basis_pivots=tuple(int(i) for i in data["basis_pivots"]),
            gamma_pivots=tuple(int(i) for i in data["gamma_pivots"]),
            rank=rank,
            unitary_defect=float(data["unitary_defect"]),
            data_residual=float(data.get("data_residual", 0.0)),
        )


def build_realization(spec, nodes, targets, rho, lspec=None, rank_tol=BUILD_RANK_TOL, psd_tol=DEFAULT_RANK_TOL):
    """Build a colligation whose transfer function interpolates ``targets`` with norm ``<= rho``.

    Parameters
    ----------
    spec : KernelSpec
        Complete Pick kernel ``k``.
    nodes, targets : array_like
        Interpolation data.
    rho : float
        Norm budget; must be at least the minimal norm of the problem.
    lspec : KernelSpec, optional
        Second kernel ``l`` for a pair problem (multipliers from ``H_k`` to
        ``H_l``); ``l / k`` must be positive on the nodes.
    rank_tol : float
        Relative pivot threshold for the PSD factorizations.
    psd_tol : float
        Relative tolerance for negative eigenvalues treated as rounding;
        budgets within it of the minimal norm build successfully.
    """
    if not spec.is_cnp:
        raise NotCNPError(f"{spec.family} is not a complete Pick kernel")
    if not rho > 0:
        raise AdmissibilityError("rho must be positive")
    nodes = kernels.as_points(nodes, spec.dim)
    w = np.atleast_1d(np.asarray(targets, dtype=np.complex128))
    n = nodes.shape[0]
    if w.shape != (n,):
        raise AdmissibilityError("need exactly one target per node")
    pm = kernels.matrix(spec, nodes)
    normalize_kernel_matrix(pm)
    kp = pm.conj()
    lp = kp if lspec is None else kernels.matrix(lspec, nodes).conj()
    psi = w / rho
    q_mat = lp - (psi[:, None] * psi.conj()[None, :]) * kp
    try:
        theta = factor_psd(q_mat, rank_tol, psd_tol).rows
    except IndefiniteError as exc:
        raise InfeasibleError(f"rho = {rho:.17g} is below the minimal norm ({exc})") from exc

    b_spec, bfac = _embedding_factor(spec, nodes, rank_tol, psd_tol)
    beta_spec = bfac.rows
    beta = beta_spec.conj()
    if lspec is None:
        gamma = np.ones((n, 1), dtype=np.complex128)
        gamma_pivots = (0,)
    else:
        try:
            gfac = factor_psd(lp / kp, rank_tol, psd_tol)
        except IndefiniteError as exc:
            raise RealizationError(f"l/k is not positive on the nodes ({exc})") from exc
        gamma = gfac.rows
        gamma_pivots = tuple(int(i) for i in gfac.perm[:gfac.rank])

    r, rb, qd = theta.shape[1], beta.shape[1], gamma.shape[1]
    kron = (beta[:, :, None] * theta[:, None, :]).reshape(n, rb * r)
    x = np.hstack([gamma, kron]).conj().T
    y = np.hstack([psi[:, None], theta]).conj().T
    v, data_res, defect = _colligation(x, y)
    if defect > ISOMETRY_TOL:
        raise RealizationError(f"partial isometry defect {defect:.3g} exceeds {ISOMETRY_TOL:g}")
    _, defect = unitary_dilation(v)
    if defect > ISOMETRY_TOL:
        raise RealizationError(f"unitary defect {defect:.3g} exceeds {ISOMETRY_TOL:g}")
    if data_res > DATA_TOL:
        raise RealizationError(f"colligation misses the node data by {data_res:.3g}")
    a_s, c_s, b_s, d_s = v[:1, :qd], v[:1, qd:], v[1:, :qd], v[1:, qd:]
    return Realization(
        A=a_s.conj().T,
        B=b_s.conj().T,
        C=c_s.conj().T,
        D=d_s.conj().T,
        nodes=nodes,
        rho=float(rho),
        kspec=spec,
        lspec=lspec,
        node_b_gram=np.asarray(b_spec),
        node_basis=beta_spec,
        gamma=gamma,
        basis_pivots=tuple(int(i) for i in bfac.perm[:bfac.rank]),
        gamma_pivots=gamma_pivots,
        rank=r,
        unitary_defect=defect,
        data_residual=data_res,
    )


def _coordinates(r, pts):
    """Conjugated ``Gamma`` and ``b`` coordinates of ``pts`` in the node bases.

    Returns ``(g, e, residual)`` with one column of ``g`` and ``e`` per point
    and the norm of the part of ``b`` orthogonal to the node span.
    """
    spec = r.kspec
    k_cols = kernels.cross(spec, r.nodes, pts)
    t = 1.0 - 1.0 / k_cols
    e = _pivot_solve(r.node_basis.conj(), list(r.basis_pivots), t)
    own = kernels.kernel_of_inner(spec, np.einsum("ij,ij->i", pts, pts.conj())).real
    radicand = (1.0 - 1.0 / own) - np.einsum("ij,ij->j", e, e.conj()).real
    if np.any(radicand < -RESIDUAL_TOL):
        raise RealizationError(f"b-coordinate residual radicand {radicand.min():.3g} below -{RESIDUAL_TOL:g}")
    if r.lspec is None:
        g = np.ones((1, pts.shape[0]), dtype=np.complex128)
    else:
        g = _pivot_solve(r.gamma, list(r.gamma_pivots), kernels.cross(r.lspec, r.nodes, pts) / k_cols)
    return g, e, np.sqrt(np.clip(radicand, 0.0, None))


def eval_transfer_many(r, spec, pts):
    """``phi`` at each row of ``pts``; see :func:`eval_transfer`."""
    if spec != r.kspec:
        raise AdmissibilityError("realization was built for a different kernel")
    pts = kernels.as_points(pts, spec.dim)
    g, e, _ = _coordinates(r, pts)
    a_s, c_s, b_s, d_s = r._blocks()
    rank = r.rank
    out = np.empty(pts.shape[0], dtype=np.complex128)
    eye = np.eye(rank)
    for k in range(pts.shape[0]):
        val = a_s @ g[:, k]
        if rank and e.shape[0]:
            emat = np.kron(e[:, k:k + 1], eye)
            m = eye - d_s @ emat
            if np.linalg.cond(m) > COND_LIMIT:
                raise RealizationError("I - D E(w) is numerically singular")
            u = np.linalg.solve(m, b_s @ g[:, k])
            val = val + c_s @ (emat @ u)
        out[k] = r.rho * np.conj(val[0])
    return out


def eval_transfer(r, spec, w):
    """``phi(w) = rho * Gamma(w) Delta(w)`` at a single point.

    The b-coordinates of ``w`` are its projection onto the node span plus one
    orthogonal residual coordinate; the colligation vanishes on that extra
    direction, so only the projection enters the value.
    """
    z = kernels.as_point(w, spec.dim)
    return complex(eval_transfer_many(r, spec, z[None, :])[0])


def contractivity_matrix(r, spec, grid):
    """``(rho^2 L - conj(Phi) P Phi) / rho^2`` on the grid, ``Phi = diag(phi(grid))``."""
    grid = kernels.as_points(grid, spec.dim)
    phi = eval_transfer_many(r, spec, grid)
    pm = kernels.matrix(spec, grid)
    normalize_kernel_matrix(pm)
    lm = pm if r.lspec is None else kernels.matrix(r.lspec, grid)
    rho2 = r.rho * r.rho
    return HermitianMatrix((rho2 * lm - (phi.conj()[:, None] * pm) * phi[None, :]) / rho2)


def verify_contractive(r, spec, grid):
    """Smallest eigenvalue of the defect matrix on ``grid``; nonnegative for a contraction."""
    return contractivity_matrix(r, spec, grid).lambda_min


def contractivity_certificate(r, spec, grid, rtol=CONTRACTIVE_RTOL):
    """``(lambda_min, lambda_max, passed)`` with pass meaning ``lambda_min >= -rtol (1 + lambda_max)``."""
    h = contractivity_matrix(r, spec, grid)
    lo, hi = h.lambda_min, h.lambda_max
    return lo, hi, bool(lo >= -rtol * (1.0 + max(hi, 0.0)))


def node_reproduction_error(r, targets):
    vals = eval_transfer_many(r, r.kspec, r.nodes)
    return float(np.max(np.abs(vals - np.asarray(targets))))
