"""Gram matrices of normalized kernel functions and their spectral diagnostics."""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg as sla

from . import kernels
from ._json import to_pairs
from .errors import (
    AdmissibilityError,
    DuplicatePointError,
    HermitianError,
    PartitionError,
)

HERMITIAN_RTOL = 1e-10
PSD_RTOL = 1e-10
# pseudo-distances below this are indistinguishable from rounding of identical points
DUPLICATE_DH = 1e-7
EXHAUSTIVE_MAX_N = 12
EXHAUSTIVE_NODE_BUDGET = 200_000


class HermitianMatrix:
    """Dense complex Hermitian matrix with a defect check and cached spectrum.

    The stored entries are the Hermitian part of the input, so spectral
    queries always see an exactly Hermitian matrix; ``hermitian_defect``
    records how far the input was from it.
    """

    def __init__(self, entries, rtol=HERMITIAN_RTOL):
        a = np.array(entries, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise HermitianError("matrix must be square")
        if not np.all(np.isfinite(a)):
            raise HermitianError("matrix has non-finite entries")
        defect = float(np.max(np.abs(a - a.conj().T), initial=0.0))
        scale = float(np.max(np.abs(a), initial=0.0))
        if defect > rtol * (1.0 + scale):
            raise HermitianError(f"Hermitian defect {defect:.3g} exceeds {rtol:g}*(1+{scale:.3g})")
        a = 0.5 * (a + a.conj().T)
        a.setflags(write=False)
        self._a = a
        self.hermitian_defect = defect
        self._eig = None

    @property
    def n(self):
        return self._a.shape[0]

    @property
    def entries(self):
        return self._a

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._a, dtype=dtype)

    def eigvalsh(self):
        if self._eig is None:
            # LAPACK zheevd: Householder tridiagonalization + divide and conquer
            self._eig = sla.eigvalsh(self._a) if self.n else np.empty(0)
        return self._eig

    @property
    def lambda_min(self):
        return float(self.eigvalsh()[0])

    @property
    def lambda_max(self):
        return float(self.eigvalsh()[-1])

    def psd_tol(self, rtol=PSD_RTOL):
        return rtol * (1.0 + max(self.lambda_max, 0.0))

    def is_psd(self, rtol=PSD_RTOL):
        return self.n == 0 or self.lambda_min >= -self.psd_tol(rtol)

    def submatrix(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return HermitianMatrix(self._a[np.ix_(idx, idx)])

    def to_pairs(self):
        return to_pairs(self._a)


def as_hermitian(h):
    return h if isinstance(h, HermitianMatrix) else HermitianMatrix(h)


@dataclass
class GramReport:
    n: int
    lambda_min: float
    lambda_max: float
    separation: float
    max_offdiag_mod: float
    classes: list | None = field(default=None)

    def to_dict(self):
        out = {
            "n": self.n,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "separation": self.separation,
            "max_offdiag_mod": self.max_offdiag_mod,
        }
        if self.classes is not None:
            out["classes"] = [list(map(int, c)) for c in self.classes]
        return out


def _check_distinct(g):
    n = g.shape[0]
    if n < 2:
        return
    off = np.abs(g[np.triu_indices(n, 1)])
    dist = np.sqrt(np.clip(1.0 - off * off, 0.0, 1.0))
    if np.any(dist < DUPLICATE_DH):
        k = int(np.argmin(dist))
        i, j = (a[k] for a in np.triu_indices(n, 1))
        raise DuplicatePointError(f"points {i} and {j} coincide (pseudo-distance {dist[k]:.3g})")


def normalize_kernel_matrix(k):
    """Unit-diagonal rescaling of a kernel matrix, with the duplicate-point check."""
    k = np.asarray(k)
    s = np.sqrt(k.diagonal().real)
    # divide twice rather than by the product so huge norms do not overflow
    g = (k / s[:, None]) / s[None, :]
    np.fill_diagonal(g, 1.0)
    _check_distinct(g)
    return g


def gram(spec, pts):
    """Gram matrix ``G[i, j] = k(pts[j], pts[i]) / sqrt(k(pts[i], pts[i]) k(pts[j], pts[j]))``.

    Unit diagonal by construction.  Raises :class:`DuplicatePointError` when two
    indices are at zero pseudo-distance.
    """
    pts = kernels.as_points(pts, spec.dim)
    return HermitianMatrix(normalize_kernel_matrix(kernels.matrix(spec, pts)))


def spectral_bounds(h):
    """``(lambda_min, lambda_max)`` of a Hermitian matrix."""
    h = as_hermitian(h)
    if h.n == 0:
        raise AdmissibilityError("empty matrix has no spectrum")
    return h.lambda_min, h.lambda_max


def max_offdiag_mod(h):
    a = np.asarray(as_hermitian(h))
    n = a.shape[0]
    if n < 2:
        return 0.0
    return float(np.max(np.abs(a[np.triu_indices(n, 1)])))


def separation(spec, pts):
    """Minimum pairwise pseudo-distance ``min_{i != j} d_H(pts[i], pts[j])``."""
    pts = kernels.as_points(pts, spec.dim)
    if pts.shape[0] < 2:
        raise AdmissibilityError("separation needs at least two points")
    m = max_offdiag_mod(gram(spec, pts))
    return math.sqrt(max(0.0, 1.0 - m * m))


def strong_separation_h2(pts):
    """``min_i prod_{j != i} |(l_i - l_j) / (1 - conj(l_j) l_i)|`` for disc points."""
    pts = kernels.as_points(pts)
    if pts.shape[1] != 1:
        raise AdmissibilityError("strong separation is defined for disc points only")
    z = pts[:, 0]
    n = z.shape[0]
    if n == 1:
        return 1.0
    ratio = np.abs(z[:, None] - z[None, :]) / np.abs(1.0 - z[:, None] * z[None, :].conj())
    np.fill_diagonal(ratio, 1.0)
    with np.errstate(divide="ignore"):
        logs = np.log(ratio).sum(axis=1)
    return float(np.exp(logs.min()))


def gram_report(spec, pts, bound=None):
    """Spectral and separation summary; partitions into certified classes when ``bound`` is set."""
    g = gram(spec, pts)
    lo, hi = spectral_bounds(g)
    m = max_offdiag_mod(g)
    classes = partition_interpolating(g, bound) if bound is not None else None
    return GramReport(
        n=g.n,
        lambda_min=lo,
        lambda_max=hi,
        separation=math.sqrt(max(0.0, 1.0 - m * m)) if g.n > 1 else 1.0,
        max_offdiag_mod=m,
        classes=classes,
    )


def block_deviation(g, idx):
    """``||G[C, C] - I||`` (spectral norm) for the index class ``idx``."""
    a = np.asarray(g)
    idx = np.asarray(idx, dtype=np.int64)
    sub = a[np.ix_(idx, idx)] - np.eye(idx.size)
    if idx.size == 1:
        return float(abs(sub[0, 0]))
    ev = sla.eigvalsh(0.5 * (sub + sub.conj().T))
    return float(max(-ev[0], ev[-1]))


def _greedy(a, order, bound):
    classes = []
    for i in order:
        for c in classes:
            if block_deviation(a, c + [i]) <= bound:
                c.append(i)
                break
        else:
            classes.append([i])
    return classes


def _exhaustive(a, order, bound, best_count):
    """Backtracking search for a partition with fewer than ``best_count`` classes."""
    best = None
    budget = [EXHAUSTIVE_NODE_BUDGET]

    def place(pos, classes):
        nonlocal best, best_count
        if budget[0] <= 0:
            return
        budget[0] -= 1
        if pos == len(order):
            best = [list(c) for c in classes]
            best_count = len(classes)
            return
        i = order[pos]
        for c in classes:
            c.append(i)
            if block_deviation(a, c) <= bound:
                place(pos + 1, classes)
            c.pop()
        if len(classes) + 1 < best_count:
            classes.append([i])
            place(pos + 1, classes)
            classes.pop()

    place(0, [])
    return best


def partition_interpolating(g, bound):
    """Split indices into classes ``C`` with ``||G[C, C] - I|| <= bound``.

    Indices are visited in order of descending absolute row sum (ties by
    index) and placed in the first class that stays within ``bound``.  For
    ``n <= 12`` a budgeted backtracking search then looks for a partition
    with fewer classes.  Every class is re-certified by an eigenvalue check
    before returning; classes are sorted and listed by smallest member.
    """
    g = as_hermitian(g)
    if not 0 < bound < 1:
        raise PartitionError("bound must lie in (0, 1)")
    a = np.asarray(g)
    if g.n == 0:
        return []
    if np.max(np.abs(a.diagonal() - 1.0)) > 1e-10:
        raise PartitionError("partition expects a unit-diagonal Gram matrix")
    rowsum = np.abs(a).sum(axis=1)
    order = [int(i) for i in np.lexsort((np.arange(g.n), -rowsum))]
    classes = _greedy(a, order, bound)
    if g.n <= EXHAUSTIVE_MAX_N and len(classes) > 1:
        better = _exhaustive(a, order, bound, len(classes))
        if better is not None:
            classes = better
    classes = sorted((sorted(c) for c in classes), key=lambda c: c[0])
    for c in classes:
        dev = block_deviation(a, c)
        if dev > bound:
            raise PartitionError(f"class {c} fails certificate: {dev:.6g} > {bound}")
    return classes
