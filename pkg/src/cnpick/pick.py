"""Finite Nevanlinna-Pick problems: feasibility, minimal norms, and the CNP test.

Index convention: ``P[i, j] = k(nodes[j], nodes[i])``, matching the Gram
matrix.  With ``D = diag(targets)`` the Pick matrix at budget ``rho`` is

    rho^2 P - conj(D) P D,    entries  P[i, j] (rho^2 - conj(w_i) w_j),

which is PSD exactly when a multiplier of norm at most ``rho`` interpolates
the data.  For a kernel pair ``(k, l)`` the first term is ``rho^2 L``.
"""

from dataclasses import dataclass
import itertools
import math

import mpmath
import numpy as np
import scipy.linalg as sla

from . import kernels
from ._json import from_pairs, points_from_json, points_to_json, to_pairs
from .errors import (
    AdmissibilityError,
    IndeterminateSignError,
    InfeasibleError,
    SingularPickError,
)
from .grammian import HermitianMatrix, normalize_kernel_matrix

COND_LIMIT = 1e12
FEAS_RTOL = 1e-10
# above this kernel-matrix condition number double precision loses ~1e-9 of
# rho_min, so both solvers redo the work with EXTENDED_DPS digits
ESCALATE_COND = 1e7
EXTENDED_DPS = 40
BISECTION_RTOL = 1e-9
MAX_ENUM_POINTS = 16


@dataclass(frozen=True, eq=False)
class PickProblem:
    """Nodes, scalar targets, kernel (and optional second kernel), optional budget."""

    kspec: kernels.KernelSpec
    nodes: np.ndarray
    targets: np.ndarray
    lspec: kernels.KernelSpec | None = None
    rho: float | None = None

    def __post_init__(self):
        nodes = kernels.as_points(self.nodes, self.kspec.dim)
        targets = np.atleast_1d(np.asarray(self.targets, dtype=np.complex128))
        if targets.ndim != 1 or targets.shape[0] != nodes.shape[0]:
            raise AdmissibilityError("need exactly one target per node")
        if not np.all(np.isfinite(targets)):
            raise AdmissibilityError("targets must be finite")
        if self.lspec is not None and self.lspec.dim != self.kspec.dim:
            raise AdmissibilityError("kernel pair must live on the same ball")
        if self.rho is not None and not self.rho > 0:
            raise AdmissibilityError("rho must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "targets", targets)

    @property
    def n(self):
        return self.nodes.shape[0]

    def with_targets(self, targets):
        return PickProblem(self.kspec, self.nodes, targets, self.lspec, self.rho)

    def to_dict(self):
        out = {
            "kernel": self.kspec.to_dict(),
            "nodes": points_to_json(self.nodes),
            "targets": to_pairs(self.targets),
        }
        if self.lspec is not None:
            out["kernel2"] = self.lspec.to_dict()
        if self.rho is not None:
            out["rho"] = self.rho
        return out

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise AdmissibilityError("problem must be a JSON object")
        extra = set(data) - {"kernel", "kernel2", "nodes", "targets", "rho"}
        if extra:
            raise AdmissibilityError(f"unknown problem keys: {sorted(extra)}")
        for key in ("kernel", "nodes", "targets"):
            if key not in data:
                raise AdmissibilityError(f"problem is missing {key!r}")
        kspec = kernels.KernelSpec.from_dict(data["kernel"])
        lspec = kernels.KernelSpec.from_dict(data["kernel2"]) if data.get("kernel2") is not None else None
        targets = from_pairs(data["targets"])
        return cls(
            kspec=kspec,
            nodes=points_from_json(data["nodes"], kspec.dim),
            targets=np.atleast_1d(targets),
            lspec=lspec,
            rho=None if data.get("rho") is None else float(data["rho"]),
        )


@dataclass(frozen=True)
class PickResult:
    feasible: bool
    rho_min: float
    certificate_min_eig: float
    method: str
    rho: float | None = None
    rho_bisection: float | None = None
    extended_precision: bool = False

    def to_dict(self):
        out = {
            "feasible": self.feasible,
            "rho_min": self.rho_min,
            "certificate_min_eig": self.certificate_min_eig,
            "method": self.method,
            "extended_precision": self.extended_precision,
        }
        if self.rho is not None:
            out["rho"] = self.rho
        if self.rho_bisection is not None:
            out["rho_bisection"] = self.rho_bisection
        return out


def _matrices(p):
    """``(P, L)`` kernel matrices at the nodes; ``L is P`` for single-kernel problems."""
    pm = kernels.matrix(p.kspec, p.nodes)
    normalize_kernel_matrix(pm)
    lm = pm if p.lspec is None else kernels.matrix(p.lspec, p.nodes)
    return pm, lm


def _scaled(p):
    """Diagonally rescaled ``(P, L)``; the scaling is a congruence so PSD-ness is unchanged."""
    pm, lm = _matrices(p)
    s = 1.0 / np.sqrt(lm.diagonal().real)
    ps = (pm * s[:, None]) * s[None, :]
    ls = ps if lm is pm else (lm * s[:, None]) * s[None, :]
    return ps, ls


def _assemble(pm, lm, w, rho):
    return rho * rho * lm - (w.conj()[:, None] * pm) * w[None, :]


def pick_matrix(p, rho):
    """``rho^2 P - conj(D) P D`` (or ``rho^2 L - conj(D) P D`` for a pair)."""
    if not rho >= 0:
        raise AdmissibilityError("rho must be nonnegative")
    pm, lm = _matrices(p)
    return HermitianMatrix(_assemble(pm, lm, p.targets, rho))


def _condition(a):
    ev = sla.eigvalsh(a)
    return math.inf if ev[0] <= 0 else float(ev[-1] / ev[0])


def _cholesky_upper(a, what):
    cond = _condition(a)
    if cond > COND_LIMIT:
        raise SingularPickError(f"{what} is numerically singular (condition {cond:.3g} > {COND_LIMIT:g})")
    return sla.cholesky(a, lower=False)


def _needs_extended(ps, ls):
    return max(_condition(ps), _condition(ls) if ls is not ps else 0.0) > ESCALATE_COND


def _mp_matrix(a):
    return mpmath.matrix([[mpmath.mpc(complex(v)) for v in row] for row in np.asarray(a)])


def _mp_weighted(ps, w):
    """``conj(D) P D`` in extended precision from the double entries."""
    a = _mp_matrix(ps)
    wm = [mpmath.mpc(complex(v)) for v in w]
    for i in range(a.rows):
        for j in range(a.cols):
            a[i, j] = mpmath.conj(wm[i]) * a[i, j] * wm[j]
    return (a + a.H) / 2


def _rho_extended(ps, ls, w):
    """Top generalized eigenvalue of ``(conj(D) P D, L)`` with ``EXTENDED_DPS`` digits."""
    with mpmath.workdps(EXTENDED_DPS):
        a = _mp_weighted(ps, w)
        lm = _mp_matrix(ls)
        ci = mpmath.inverse(mpmath.cholesky((lm + lm.H) / 2))
        m = ci * a * ci.H
        ev = mpmath.eighe((m + m.H) / 2, eigvals_only=True)
        return float(mpmath.sqrt(max(max(ev), 0)))


def _extended_test(ps, ls, w):
    """Feasibility predicate ``rho -> Cholesky(rho^2 L - conj(D) P D) succeeds`` in extended precision."""
    with mpmath.workdps(EXTENDED_DPS):
        a = _mp_weighted(ps, w)
        lm = _mp_matrix(ls)
        lm = (lm + lm.H) / 2

    def test(rho):
        with mpmath.workdps(EXTENDED_DPS):
            try:
                mpmath.cholesky(mpmath.mpf(rho) ** 2 * lm - a)
            except ValueError:
                return False
        return True

    return test


def _rho_closed_form(p):
    """``(rho_min, extended)`` from the Cholesky congruence."""
    ps, ls = _scaled(p)
    if not np.any(p.targets):
        return 0.0, False
    rl = _cholesky_upper(ls, "kernel matrix" if p.lspec is None else "second kernel matrix")
    rp = rl if ls is ps else _cholesky_upper(ps, "kernel matrix")
    if _needs_extended(ps, ls):
        return _rho_extended(ps, ls, p.targets), True
    # rho_min^2 = lambda_max(L^{-1} conj(D) P D) = sigma_max(R_P D R_L^{-1})^2
    t = sla.solve_triangular(rl, (rp * p.targets[None, :]).conj().T, trans="C", lower=False).conj().T
    return float(sla.svdvals(t)[0]), False


def _feasible_scaled(ps, ls, w, rho):
    try:
        np.linalg.cholesky(_assemble(ps, ls, w, rho))
    except np.linalg.LinAlgError:
        return False
    return True


def feasible(p, rho):
    """Strict feasibility test: Cholesky of the rescaled Pick matrix succeeds."""
    ps, ls = _scaled(p)
    return _feasible_scaled(ps, ls, p.targets, rho)


def _bisect(test, lo, hi, rtol):
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if test(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def min_norm_bisection(p, rtol=BISECTION_RTOL):
    """Independent oracle: bisect on Pick-matrix feasibility to relative width ``rtol``.

    Ill-conditioned kernel matrices (condition above ``ESCALATE_COND``) get a
    second pass: the double-precision bracket is widened and re-bisected with
    extended-precision Cholesky tests.
    """
    if not np.any(p.targets):
        return 0.0
    ps, ls = _scaled(p)
    w = p.targets
    lo = 0.0
    hi = max(float(np.max(np.abs(w))), 1e-300)
    while not _feasible_scaled(ps, ls, w, hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise SingularPickError("bisection could not bracket the minimal norm")
    lo, hi = _bisect(lambda r: _feasible_scaled(ps, ls, w, r), lo, hi, rtol)
    if _needs_extended(ps, ls):
        test = _extended_test(ps, ls, w)
        width = 1e-4
        lo, hi = hi * (1.0 - width), hi * (1.0 + width)
        while test(lo) and lo > 0:
            lo = max(0.0, hi - 2.0 * (hi - lo))
        while not test(hi):
            hi = lo + 2.0 * (hi - lo)
        lo, hi = _bisect(test, lo, hi, rtol)
    return 0.5 * (lo + hi)


def _result(p, rho_min, method, cross_check, extended=False):
    rho = p.rho if p.rho is not None else rho_min
    cert = pick_matrix(p, rho)
    tol = FEAS_RTOL * (1.0 + max(cert.lambda_max, 0.0))
    ok = cert.lambda_min >= -tol
    return PickResult(
        feasible=bool(ok),
        rho_min=rho_min,
        certificate_min_eig=cert.lambda_min,
        method=method,
        rho=p.rho,
        rho_bisection=min_norm_bisection(p) if cross_check else None,
        extended_precision=extended,
    )


def min_norm(p, cross_check=False):
    """Smallest multiplier norm interpolating the data, by Cholesky congruence.

    Writing ``P = R^* R``, the Pick matrix is PSD iff
    ``rho >= sigma_max(R D R^{-1})``.  The certificate is the smallest
    eigenvalue of the Pick matrix at ``p.rho`` when given, else at the
    computed minimum (boundary problems count as feasible).

    Parameters
    ----------
    p : PickProblem
        Single-kernel problem (``lspec`` is ignored here; use
        :func:`pair_min_norm` for pairs).
    cross_check : bool
        Also run the bisection oracle and report its value.
    """
    if p.lspec is not None:
        p = PickProblem(p.kspec, p.nodes, p.targets, None, p.rho)
    rho_min, extended = _rho_closed_form(p)
    return _result(p, rho_min, "closed_form", cross_check, extended)


def pair_min_norm(p, cross_check=False):
    """Smallest ``rho`` with ``rho^2 L - conj(D) P D`` PSD, for the pair ``(k, l)``."""
    if p.lspec is None:
        raise AdmissibilityError("pair problem needs a second kernel")
    rho_min, extended = _rho_closed_form(p)
    return _result(p, rho_min, "closed_form", cross_check, extended)


def require_feasible(p, rho):
    """Raise :class:`InfeasibleError` when ``rho`` is below the minimal norm."""
    res = _result(PickProblem(p.kspec, p.nodes, p.targets, p.lspec, rho), 0.0, "closed_form", False)
    if not res.feasible:
        rho_min = _rho_closed_form(p)[0]
        raise InfeasibleError(f"budget {rho:.17g} is below the minimal norm {rho_min:.17g}")
    return res


def signature(spec, pts, rtol=1e-10):
    """``(positive, zero, negative)`` eigenvalue counts of ``[1 / k(pts[j], pts[i])]``."""
    k = kernels.matrix(spec, pts)
    if np.any(k == 0):
        raise AdmissibilityError("kernel vanishes on the grid")
    inv = 1.0 / k
    ev = sla.eigvalsh(0.5 * (inv + inv.conj().T))
    tol = rtol * (1.0 + float(np.max(np.abs(ev))))
    return int(np.sum(ev > tol)), int(np.sum(np.abs(ev) <= tol)), int(np.sum(ev < -tol))


def one_positive_square(spec, pts, strict=False, rtol=1e-10):
    """Number of eigenvalues of ``[1 / k(pts[j], pts[i])]`` above ``tol``.

    Complete Pick kernels give exactly 1.  Eigenvalues inside the band
    ``|ev| <= tol`` are common and harmless (Szego and Drury-Arveson grids
    have rank-deficient ``1/k``); with ``strict=True`` any eigenvalue in the
    band raises :class:`IndeterminateSignError` instead.
    """
    pos, zero, _ = signature(spec, pts, rtol)
    if strict and zero:
        raise IndeterminateSignError(f"{zero} eigenvalue(s) within the zero band")
    return pos


def _sign_patterns(n):
    # global sign flips leave the minimal norm unchanged, so fix the first sign
    for bits in itertools.product((1.0, -1.0), repeat=n - 1):
        yield np.array((1.0,) + bits)


def interpolation_search(spec, pts, strategy="unimodular_enum", seed=0, trials=200):
    """Largest minimal norm over a family of unimodular targets.

    Returns ``(value, targets)``.  ``unimodular_enum`` runs all real sign
    patterns (``n <= 16``); ``random`` draws ``trials`` unimodular target
    vectors from a seeded generator.
    """
    nodes = kernels.as_points(pts, spec.dim)
    n = nodes.shape[0]
    if n == 1:
        return 1.0, np.ones(1, dtype=np.complex128)
    base = PickProblem(spec, nodes, np.ones(n))
    ps, _ = _scaled(base)
    r = _cholesky_upper(ps, "kernel matrix")
    rinv = sla.solve_triangular(r, np.eye(n), lower=False)
    if strategy == "unimodular_enum":
        if n > MAX_ENUM_POINTS:
            raise AdmissibilityError(f"enumeration is capped at {MAX_ENUM_POINTS} points")
        cands = np.array(list(_sign_patterns(n)), dtype=np.complex128)
    elif strategy == "random":
        if trials < 1:
            raise AdmissibilityError("trials must be positive")
        rng = np.random.default_rng(seed)
        cands = np.exp(2j * np.pi * rng.random((trials, n)))
    else:
        raise AdmissibilityError(f"unknown strategy {strategy!r}")
    best, arg = -1.0, None
    for s in range(0, cands.shape[0], 4096):
        block = cands[s:s + 4096]
        mats = (r[None, :, :] * block[:, None, :]) @ rinv[None, :, :]
        vals = np.linalg.svd(mats, compute_uv=False)[:, 0]
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, arg = float(vals[k]), block[k]
    return best, arg


def interpolation_constant(spec, pts, strategy="unimodular_enum", seed=0, trials=200):
    """Finite-section interpolation constant, a lower bound for the true one."""
    return interpolation_search(spec, pts, strategy, seed, trials)[0]
