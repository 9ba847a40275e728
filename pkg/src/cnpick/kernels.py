"""Kernel zoo on the unit disc and ball, all normalized at the origin.

Every kernel here is a function of the inner product ``x = <z, w>`` (for the
disc, ``x = conj(w) * z``), so evaluation reduces to a scalar map applied to
an array of inner products.  Closed forms are used where they exist; the
Kaluza and weighted Bergman families are summed as power series whose tails
are bounded before the sum is accepted.
"""

from dataclasses import dataclass, asdict
from functools import lru_cache
import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import spence

from . import _backend
from .errors import (
    AdmissibilityError,
    NotCNPError,
    QuadratureError,
    TruncationError,
)

FAMILIES = (
    "szego",
    "power",
    "dirichlet",
    "drury_arveson",
    "kaluza",
    "bergman_power",
    "weighted_bergman_exp",
)
CNP_FAMILIES = ("szego", "power", "dirichlet", "drury_arveson", "kaluza")
SERIES_FAMILIES = ("kaluza", "weighted_bergman_exp")

DEFAULT_TAIL_TOL = 1e-12
DEFAULT_QUAD_TOL = 1e-10
# auto-truncation caps: ratio tables are held in memory
MAX_KALUZA_TERMS = 1 << 23
MAX_MOMENT_TERMS = 1 << 22
_DIRICHLET_SERIES_CUTOFF = 1e-4
# Kaluza exponents with a closed form: 1/(1-x), -log(1-x)/x, Li_2(x)/x
KALUZA_CLOSED_FORMS = (0, 1, 2)
_DILOG_SERIES_CUTOFF = 0.5
_LOG_DOUBLE_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class KernelSpec:
    """Declarative description of one kernel.

    ``t`` parametrizes ``power`` (``0 < t <= 1``) and ``bergman_power``
    (``t > 1``); ``d`` is the Drury-Arveson ball dimension; ``alpha`` the
    Kaluza exponent.  ``trunc`` fixes the series truncation (``None`` lets
    the tail bound choose it) and ``tail_tol`` is the relative tail budget.
    """

    family: str
    t: float | None = None
    d: int | None = None
    alpha: float | None = None
    trunc: int | None = None
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        fam = self.family
        if fam not in FAMILIES:
            raise AdmissibilityError(f"unknown kernel family {fam!r}")
        if fam == "power":
            if self.t is None or not 0 < self.t <= 1:
                raise AdmissibilityError("power kernel needs 0 < t <= 1")
        elif fam == "bergman_power":
            if self.t is None or not self.t > 1:
                raise AdmissibilityError("bergman_power kernel needs t > 1")
        elif self.t is not None:
            raise AdmissibilityError(f"{fam} takes no t parameter")
        if fam == "drury_arveson":
            if self.d is None or int(self.d) != self.d or self.d < 1:
                raise AdmissibilityError("drury_arveson needs an integer d >= 1")
        elif self.d is not None:
            raise AdmissibilityError(f"{fam} takes no d parameter")
        if fam == "kaluza":
            if self.alpha is None or not self.alpha >= 0:
                raise AdmissibilityError("kaluza needs alpha >= 0")
        elif self.alpha is not None:
            raise AdmissibilityError(f"{fam} takes no alpha parameter")
        if self.trunc is not None:
            if fam not in SERIES_FAMILIES:
                raise AdmissibilityError(f"{fam} is a closed form; trunc does not apply")
            if int(self.trunc) != self.trunc or self.trunc < 1:
                raise AdmissibilityError("trunc must be a positive integer")
        if not self.tail_tol > 0:
            raise AdmissibilityError("tail_tol must be positive")

    @property
    def is_cnp(self):
        return self.family in CNP_FAMILIES

    @property
    def dim(self):
        return int(self.d) if self.family == "drury_arveson" else 1

    @property
    def is_series(self):
        if self.family == "kaluza":
            return self.trunc is not None or self.alpha not in KALUZA_CLOSED_FORMS
        return self.family == "weighted_bergman_exp"

    def to_dict(self):
        out = {k: v for k, v in asdict(self).items() if v is not None}
        if out.get("tail_tol") == DEFAULT_TAIL_TOL:
            del out["tail_tol"]
        return out

    @classmethod
    def from_dict(cls, data):
        if isinstance(data, str):
            return cls(family=data)
        if not isinstance(data, dict) or "family" not in data:
            raise AdmissibilityError("kernel spec must be an object with a 'family' key")
        extra = set(data) - {"family", "t", "d", "alpha", "trunc", "tail_tol"}
        if extra:
            raise AdmissibilityError(f"unknown kernel spec keys: {sorted(extra)}")
        kw = dict(data)
        if "d" in kw:
            kw["d"] = int(kw["d"])
        if "trunc" in kw:
            kw["trunc"] = int(kw["trunc"])
        return cls(**kw)


# --------------------------------------------------------------------- points


def as_points(pts, dim=None):
    """Coerce to an ``(n, d)`` complex array of admissible points.

    Scalars and flat sequences are read as disc points unless ``dim > 1``, in
    which case a flat sequence of length ``dim`` is a single ball point.
    """
    a = np.asarray(pts, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        if dim is None or dim == 1:
            a = a[:, None]
        elif a.shape[0] == dim:
            a = a[None, :]
        else:
            raise AdmissibilityError(f"cannot read {a.shape[0]} coordinates as points of dimension {dim}")
    elif a.ndim != 2:
        raise AdmissibilityError("points must be a scalar, a vector, or an (n, d) array")
    if dim is not None and a.shape[1] != dim:
        raise AdmissibilityError(f"point dimension {a.shape[1]} does not match kernel dimension {dim}")
    if not np.all(np.isfinite(a)):
        raise AdmissibilityError("points must be finite")
    norms = np.linalg.norm(a, axis=1)
    if np.any(norms >= 1.0):
        raise AdmissibilityError("points must lie in the open unit ball")
    return a


def as_point(z, dim=None):
    """Single point as a length-``d`` complex vector."""
    a = np.asarray(z, dtype=np.complex128)
    if a.ndim > 1 or (a.ndim == 1 and dim == 1 and a.shape[0] != 1):
        raise AdmissibilityError("expected a single point")
    pts = as_points(a.reshape(1, -1) if a.ndim == 1 else a, dim)
    return pts[0]


def origin(spec):
    return np.zeros(spec.dim, dtype=np.complex128)


def inner_matrix(zs, ws):
    """``out[i, j] = <zs[i], ws[j]>``, linear in the first slot."""
    return zs @ ws.conj().T


# ------------------------------------------------------- weighted Bergman moments


@dataclass(frozen=True)
class MomentTable:
    """Log-moments ``log c_n``, ``n = 0 .. trunc + 1``, of the weight ``exp(-1/(1-|z|^2))``.

    ``c_n = int_0^1 r^(2n) exp(-1/(1-r^2)) 2r dr`` (area measure divided by pi).
    ``ratios[n] = c_{n+1} / c_n`` is kept at full precision because the
    kernel series is driven by it.  ``c`` underflows for large ``n``; use
    ``log_c`` there.
    """

    log_c: np.ndarray
    ratios: np.ndarray
    trunc: int
    quad_error: float

    @property
    def c(self):
        return np.exp(self.log_c)


def _log_integrand(t, n):
    # integrand of c_n after u = 1 - e^t, in log form: n log(1 - e^t) - e^-t + t
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lead = np.where(n == 0, 0.0, n * np.log(-np.expm1(t)))
        return lead - np.exp(-t) + t


def _log_integrand_slope(t, n):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return -n * np.exp(t) / (-np.expm1(t)) + np.exp(-t) + 1.0


def _bisect(lo, hi, keep_lo, iters=90):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        go = keep_lo(mid)
        lo = np.where(go, mid, lo)
        hi = np.where(go, hi, mid)
    return lo, hi


def log_moments_quadrature(ns, quad_tol=DEFAULT_QUAD_TOL, block=2048):
    """``log c_n`` for each ``n`` in ``ns`` by vectorized adaptive Gauss-Legendre.

    The log-integrand is concave in ``t = log(1 - u)``, so each integral is
    confined to the window where it lies within ``e^-60`` of its peak; the
    window is refined by panel doubling until successive estimates agree to
    ``quad_tol`` in ``log c_n``.  Returns ``(log_c, achieved_error)``.
    """
    ns = np.asarray(ns, dtype=np.float64)
    out = np.empty_like(ns)
    worst = 0.0
    gx, gw = leggauss(20)
    for s in range(0, ns.size, block):
        n = ns[s:s + block]
        lo, hi = _bisect(np.full_like(n, -60.0), np.full_like(n, -1e-15),
                         lambda m: _log_integrand_slope(m, n) > 0)
        peak_t = np.where(n == 0, -1e-15, 0.5 * (lo + hi))
        peak = _log_integrand(peak_t, n)
        floor = peak - 60.0
        left, _ = _bisect(np.full_like(n, -60.0), peak_t,
                          lambda m: _log_integrand(m, n) < floor)
        _, right = _bisect(peak_t, np.full_like(n, -1e-300),
                           lambda m: _log_integrand(m, n) >= floor)
        width = right - left
        prev = None
        for panels in (2, 4, 8, 16, 32, 64, 128):
            edges = np.linspace(0.0, 1.0, panels + 1)
            half = 0.5 * np.diff(edges)
            nodes = (edges[:-1, None] + half[:, None] * (gx[None, :] + 1.0)).ravel()
            weights = (half[:, None] * gw[None, :]).ravel()
            tt = left[:, None] + width[:, None] * nodes[None, :]
            with np.errstate(under="ignore"):
                vals = np.exp(_log_integrand(tt, n[:, None]) - peak[:, None])
            est = peak + np.log(width * (vals @ weights))
            if prev is not None:
                err = float(np.max(np.abs(est - prev)))
                if err <= quad_tol:
                    break
            prev = est
        else:
            raise QuadratureError(f"moment quadrature stalled at error {err:.3g} (tol {quad_tol:.3g})")
        out[s:s + block] = est
        worst = max(worst, err)
    return out, worst


def _miller_start(count):
    return int((math.sqrt(count) + 40.0) ** 2) + 16


@lru_cache(maxsize=16)
def _moment_table(trunc, quad_tol):
    count = trunc + 1
    ratios = _backend.moment_ratios(count, _miller_start(count))
    check = _backend.moment_ratios(count, _miller_start(count) + 20 * int(math.sqrt(count)) + 200)
    if np.max(np.abs(ratios / check - 1.0)) > 1e-14:
        raise QuadratureError("backward moment recurrence did not settle")
    (log_c0,), err0 = log_moments_quadrature([0], quad_tol)
    log_c = np.empty(count + 1)
    log_c[0] = log_c0
    log_c[1:] = log_c0 + np.cumsum(np.log(ratios).astype(np.longdouble)).astype(np.float64)

    dense = np.arange(1, min(count, 2048) + 1)
    sparse = np.unique(np.geomspace(2048, count, 24).astype(np.int64)) if count > 2048 else np.empty(0, np.int64)
    probe = np.concatenate([dense, sparse[sparse <= count]])
    quad, err = log_moments_quadrature(probe, quad_tol)
    gap = float(np.max(np.abs(quad - log_c[probe])))
    limit = 10.0 * quad_tol + 1e-11
    if gap > limit:
        raise QuadratureError(f"recurrence and quadrature moments disagree by {gap:.3g}")
    ratios.setflags(write=False)
    log_c.setflags(write=False)
    return MomentTable(log_c=log_c, ratios=ratios, trunc=trunc, quad_error=max(gap, err, err0))


def weighted_bergman_moments(trunc, quad_tol=DEFAULT_QUAD_TOL):
    """Moment table for the weight ``exp(-1/(1-|z|^2))`` up to index ``trunc + 1``.

    ``c_0`` comes from adaptive quadrature.  The remaining moments follow from
    the exact recurrence ``(n+1) c_n - (2n+5) c_{n+1} + (n+3) c_{n+2} = 0``
    (integration by parts against ``u^(n+1) (1-u)^2 e^{-1/(1-u)}``), run
    backward so the decaying solution is selected, and are certified against
    adaptive quadrature on all ``n <= 2048`` plus log-spaced checkpoints.
    ``quad_error`` is the worst disagreement in ``log c_n``.
    """
    if int(trunc) != trunc or trunc < 1:
        raise AdmissibilityError("trunc must be a positive integer")
    if not 0 < quad_tol < 1e-3:
        raise AdmissibilityError("quad_tol must lie in (0, 1e-3)")
    return _moment_table(int(trunc), float(quad_tol))


# ---------------------------------------------------------------- series kernels


@lru_cache(maxsize=8)
def _kaluza_ratios(alpha, length):
    n = np.arange(1, length + 1, dtype=np.float64)
    r = np.exp(alpha * np.log1p(-1.0 / (n + 1.0)))
    r.setflags(write=False)
    return r


def _kaluza_log_coef(alpha, n):
    return -alpha * np.log1p(np.asarray(n, dtype=np.float64))


class _Series:
    """Coefficient data ``a_n`` (``a_0 = 1``) as ratios ``a_{n+1}/a_n`` and logs."""

    def __init__(self, ratios, log_coef, increasing):
        self.ratios = ratios
        self.log_coef = log_coef
        self.increasing = increasing

    @property
    def length(self):
        return self.ratios.shape[0]


def _series_data(spec, length):
    if spec.family == "kaluza":
        ratios = _kaluza_ratios(float(spec.alpha), int(length))
        log_coef = _kaluza_log_coef(float(spec.alpha), np.arange(length + 1))
        return _Series(ratios, log_coef, increasing=False)
    table = weighted_bergman_moments(int(length))
    log_coef = table.log_c[0] - table.log_c
    return _Series(1.0 / table.ratios, log_coef, increasing=True)


def _log_tail(series, big_n, q):
    """Log of a bound on ``sum_{n > N} a_n q^n``; ``inf`` when no bound applies."""
    with np.errstate(divide="ignore"):
        logq = np.log(q)
    step = np.maximum(1.0, series.ratios[np.minimum(big_n, series.length - 1)])
    rate = q * step
    ok = (rate < 1.0) & (big_n < series.length)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = series.log_coef[big_n] + (big_n + 1) * logq + np.log(step) - np.log1p(-rate)
    return np.where(ok, val, np.inf)


def _log_peak(series, q, big_n):
    """Log of the largest term ``a_n q^n`` with ``n <= N`` (coefficients monotone)."""
    if not series.increasing:
        return np.zeros_like(q)
    # terms grow while q * ratio >= 1; ratios are nonincreasing for moment series
    p = np.searchsorted(-series.ratios, -1.0 / q, side="right")
    p = np.minimum(p, big_n)
    with np.errstate(divide="ignore"):
        return series.log_coef[p] + p * np.log(q)


def _choose_terms(series, q, tol, cap):
    """Smallest ``N <= cap`` whose tail bound meets ``tol`` relative to the peak term."""
    q = np.asarray(q, dtype=np.float64)
    lo = np.zeros(q.shape, dtype=np.int64)
    if series.increasing:
        lo = np.minimum(np.searchsorted(-series.ratios, -1.0 / np.maximum(q, 1e-300), side="right"), cap)
    hi = np.full(q.shape, cap, dtype=np.int64)
    logtol = math.log(tol)

    def good(big_n):
        peak = np.maximum(0.0, _log_peak(series, np.maximum(q, 1e-300), big_n))
        return _log_tail(series, big_n, q) <= logtol + peak

    feasible = good(hi) | (q == 0)
    while True:
        active = feasible & (lo < hi)
        if not np.any(active):
            break
        mid = (lo + hi) // 2
        g = good(mid)
        hi = np.where(active & g, mid, hi)
        lo = np.where(active & ~g, mid + 1, lo)
    n_terms = np.where(q == 0, 0, hi)
    return n_terms, feasible


def _series_eval(spec, x):
    x = np.asarray(x, dtype=np.complex128)
    flat = x.ravel()
    q = np.abs(flat)
    tol = spec.tail_tol
    if spec.trunc is not None:
        series = _series_data(spec, int(spec.trunc) + 1)
        n_terms = np.where(q == 0, 0, int(spec.trunc))
        feasible = _log_tail(series, n_terms, q) <= math.log(tol) + np.maximum(0.0, _log_peak(series, np.maximum(q, 1e-300), n_terms))
        feasible |= q == 0
        if not np.all(feasible):
            worst = float(q[~feasible].max())
            raise TruncationError(
                f"{spec.family} tail bound exceeds {tol:g} at |<z,w>| = {worst:.6g} with trunc={spec.trunc}"
            )
    elif spec.family == "kaluza":
        qmax = float(q.max(initial=0.0))
        need = _estimate_kaluza_terms(float(spec.alpha), qmax, tol)
        if need > MAX_KALUZA_TERMS:
            raise TruncationError(
                f"kaluza(alpha={spec.alpha}) needs about {need} terms at |<z,w>| = {qmax:.6g}; cap is {MAX_KALUZA_TERMS}"
            )
        length = max(1024, 1 << int(math.ceil(math.log2(need + 2))))
        series = _series_data(spec, min(length, MAX_KALUZA_TERMS))
        n_terms, feasible = _choose_terms(series, q, tol, series.length - 1)
        if not np.all(feasible):
            raise TruncationError(f"kaluza tail bound not met at |<z,w>| = {float(q[~feasible].max()):.6g}")
    else:
        length = 4096
        while True:
            series = _series_data(spec, length)
            n_terms, feasible = _choose_terms(series, q, tol, series.length - 1)
            if np.all(feasible):
                break
            if length >= MAX_MOMENT_TERMS:
                raise TruncationError(
                    f"weighted Bergman series needs more than {MAX_MOMENT_TERMS} moments at |<z,w>| = {float(q[~feasible].max()):.6g}"
                )
            length *= 2
    peak = _log_peak(series, np.maximum(q, 1e-300), n_terms)
    if np.any(peak > _LOG_DOUBLE_MAX - 2.0):
        raise TruncationError("series kernel value exceeds double precision range")
    sums, _ = _backend.series_sums(flat, series.ratios, n_terms)
    return sums.reshape(x.shape)


def _estimate_kaluza_terms(alpha, q, tol):
    if q == 0:
        return 0
    if q >= 1:
        return MAX_KALUZA_TERMS + 1
    # smallest N with (N+1)^-alpha q^(N+1) / (1 - q) <= tol, found by doubling + bisection
    def bound(big_n):
        return -alpha * math.log1p(big_n) + (big_n + 1) * math.log(q) - math.log1p(-q)

    hi = 1
    while bound(hi) > math.log(tol):
        hi *= 2
        if hi > 4 * MAX_KALUZA_TERMS:
            return hi
    lo = 0
    while lo < hi:
        mid = (lo + hi) // 2
        if bound(mid) <= math.log(tol):
            hi = mid
        else:
            lo = mid + 1
    return hi


# ---------------------------------------------------------------- evaluation


def _dirichlet(x):
    out = np.empty_like(x)
    small = np.abs(x) < _DIRICHLET_SERIES_CUTOFF
    xs = x[small]
    acc = np.zeros_like(xs)
    for n in range(8, -1, -1):
        acc = acc * xs + 1.0 / (n + 1)
    out[small] = acc
    xb = x[~small]
    out[~small] = -np.log(1.0 - xb) / xb
    return out


def _dilog_over_x(x):
    """``Li_2(x) / x``; the power series near 0, where ``spence`` loses digits."""
    out = np.empty_like(x)
    small = np.abs(x) < _DILOG_SERIES_CUTOFF
    xs = x[small]
    acc = np.zeros_like(xs)
    # 0.5^60 / 61^2 is far below rounding
    for n in range(60, -1, -1):
        acc = acc * xs + 1.0 / ((n + 1.0) * (n + 1.0))
    out[small] = acc
    xb = x[~small]
    out[~small] = spence(1.0 - xb) / xb
    return out


def kernel_of_inner(spec, x):
    """Apply the kernel's scalar profile to an array of inner products."""
    x = np.asarray(x, dtype=np.complex128)
    fam = spec.family
    if spec.is_series:
        return _series_eval(spec, x)
    if fam in ("szego", "drury_arveson") or (fam == "kaluza" and spec.alpha == 0):
        return 1.0 / (1.0 - x)
    if fam in ("power", "bergman_power"):
        # Re(1 - x) > 0 on the ball, so the principal branch is continuous
        return np.exp(-spec.t * np.log(1.0 - x))
    if fam == "dirichlet" or (fam == "kaluza" and spec.alpha == 1):
        return _dirichlet(x.ravel()).reshape(x.shape)
    return _dilog_over_x(x.ravel()).reshape(x.shape)


def matrix(spec, pts):
    """Kernel matrix ``K[i, j] = k(pts[j], pts[i])`` (the Gram index convention).

    Only the upper triangle is evaluated; the rest is filled by Hermitian
    symmetry so the result is exactly Hermitian.
    """
    pts = as_points(pts, spec.dim)
    n = pts.shape[0]
    iu = np.triu_indices(n)
    x = np.einsum("ij,ij->i", pts[iu[1]], pts[iu[0]].conj())
    vals = kernel_of_inner(spec, x)
    out = np.empty((n, n), dtype=np.complex128)
    out[iu] = vals
    out[(iu[1], iu[0])] = vals.conj()
    out[np.diag_indices(n)] = out.diagonal().real
    return out


def cross(spec, zs, ws):
    """``M[i, j] = k(zs[i], ws[j])``."""
    zs = as_points(zs, spec.dim)
    ws = as_points(ws, spec.dim)
    return kernel_of_inner(spec, inner_matrix(zs, ws))


def eval(spec, z, w):  # noqa: A001 - module-level name mirrors the operation
    """``k(z, w)`` for single points."""
    z = as_point(z, spec.dim)
    w = as_point(w, spec.dim)
    return complex(kernel_of_inner(spec, np.vdot(w, z)))


def norm_sq(spec, z):
    """``k(z, z) = ||k_z||^2``; at least 1 for these normalized kernels."""
    val = eval(spec, z, z)
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise AdmissibilityError(f"k(z, z) has imaginary part {val.imag:.3g}")
    return val.real


def _dh_from_values(kzw, kzz, kww):
    ratio = (np.abs(kzw) / np.sqrt(kzz)) / np.sqrt(kww)
    rad = 1.0 - ratio * ratio
    if np.any(rad < -1e-12):
        raise AdmissibilityError("pseudo-metric radicand below -1e-12; kernel data inconsistent")
    return np.sqrt(np.clip(rad, 0.0, 1.0))


def dh(spec, z, w):
    """Kernel pseudo-metric ``sqrt(1 - |k(z,w)|^2 / (k(z,z) k(w,w)))``.

    Identical points give exactly 0.  Near the diagonal the radicand is a
    difference of nearly equal numbers, so the absolute accuracy there is
    about ``sqrt(eps)``.
    """
    z = as_point(z, spec.dim)
    w = as_point(w, spec.dim)
    if np.array_equal(z, w):
        return 0.0
    x = np.array([np.vdot(w, z), np.vdot(z, z), np.vdot(w, w)])
    kzw, kzz, kww = kernel_of_inner(spec, x)
    return float(_dh_from_values(kzw, kzz.real, kww.real))


def dh_matrix(spec, pts):
    """Pairwise pseudo-distances, ``D[i, j] = dh(pts[i], pts[j])``."""
    k = matrix(spec, pts)
    d = k.diagonal().real
    out = _dh_from_values(k, d[None, :], d[:, None])
    np.fill_diagonal(out, 0.0)
    return out


def b_inner(spec, z, w):
    """``<b(z), b(w)> = 1 - 1/k(z, w)`` for the embedding of a complete Pick kernel."""
    if not spec.is_cnp:
        raise NotCNPError(f"{spec.family} is not a complete Pick kernel")
    val = eval(spec, z, w)
    if val == 0:
        raise ArithmeticError("irreducible Pick kernel vanished")
    return 1.0 - 1.0 / val


def b_gram(spec, pts):
    """``B[i, j] = <b(pts[j]), b(pts[i])>``, same index convention as :func:`matrix`."""
    if not spec.is_cnp:
        raise NotCNPError(f"{spec.family} is not a complete Pick kernel")
    return 1.0 - 1.0 / matrix(spec, pts)


def normalize_at(kernel, base):
    """Renormalize an arbitrary nonvanishing kernel so it equals 1 whenever one argument is ``base``.

    Returns ``l(z, w) = k(z, w) k(base, base) / (k(z, base) k(base, w))``.
    """

    def normalized(z, w):
        num = kernel(z, w) * kernel(base, base)
        den = kernel(z, base) * kernel(base, w)
        if den == 0:
            raise AdmissibilityError("kernel vanishes against the base point")
        return num / den

    return normalized


def kernel_sup_norm_sq(spec, radii):
    """``max_r k(r, r)`` over a radial grid (disc kernels), used for boundedness checks."""
    r = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    if r.size == 0 or np.any((r < 0) | (r >= 1)):
        raise AdmissibilityError("radii must be a nonempty grid in [0, 1)")
    return float(np.max(kernel_of_inner(spec, (r * r).astype(np.complex128)).real))


def series_truncation(spec, q):
    """Number of terms the tail bound selects at ``|<z, w>| = q`` (series families only)."""
    if not spec.is_series:
        raise AdmissibilityError(f"{spec.family} is evaluated in closed form")
    if not 0 <= q < 1:
        raise AdmissibilityError("q must lie in [0, 1)")
    auto = KernelSpec(**{**spec.__dict__, "trunc": None})
    if spec.family == "kaluza":
        need = _estimate_kaluza_terms(float(spec.alpha), q, spec.tail_tol)
        if need > MAX_KALUZA_TERMS:
            raise TruncationError(f"kaluza needs about {need} terms at q = {q:.6g}")
        series = _series_data(auto, max(1024, 1 << int(math.ceil(math.log2(need + 2)))))
        n_terms, ok = _choose_terms(series, np.array([q]), spec.tail_tol, series.length - 1)
    else:
        length = 4096
        while True:
            series = _series_data(auto, length)
            n_terms, ok = _choose_terms(series, np.array([q]), spec.tail_tol, series.length - 1)
            if ok[0] or length >= MAX_MOMENT_TERMS:
                break
            length *= 2
    if not ok[0]:
        raise TruncationError(f"tail bound cannot be met at q = {q:.6g}")
    return int(n_terms[0])
