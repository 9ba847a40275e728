"""Example sequences and the experiments built on them.

The two-sequence example uses ``z_j = 1 - 2^-j`` and its vertical companions
``w_j = z_j + i 2^(-5j/4)``.  ``w_0 = i`` lies on the circle, so the companion
list starts at ``j = 1`` and the union reads ``z_0, z_1, w_1, z_2, w_2, ...``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import grammian, kernels
from ._json import points_from_json, points_to_json
from .errors import (
    AdmissibilityError,
    CompanionSearchError,
    DuplicatePointError,
    NotCNPError,
    SubsequenceError,
)

KINDS = ("geometric", "example55_z", "example55_w", "example55_union", "custom")
# beyond this index 1 - 2^-j is no longer separated from 1 in double precision
MAX_INDEX = 50
RIESZ_BOUND = 0.5


@dataclass(frozen=True)
class SeqSpec:
    kind: str
    n: int
    ratio: float | None = None
    points: tuple | None = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise AdmissibilityError(f"unknown sequence kind {self.kind!r}")
        if int(self.n) != self.n or self.n < 1:
            raise AdmissibilityError("n must be a positive integer")
        if self.kind == "geometric":
            if self.ratio is None or not 0 < self.ratio < 1:
                raise AdmissibilityError("geometric sequences need 0 < ratio < 1")
        elif self.ratio is not None:
            raise AdmissibilityError(f"{self.kind} takes no ratio")
        if self.kind == "custom":
            if self.points is None:
                raise AdmissibilityError("custom sequences need points")
        elif self.points is not None:
            raise AdmissibilityError(f"{self.kind} takes no points")

    def to_dict(self):
        out = {"kind": self.kind, "n": self.n}
        if self.ratio is not None:
            out["ratio"] = self.ratio
        if self.points is not None:
            out["points"] = points_to_json(np.asarray(self.points))
        return out

    @classmethod
    def from_dict(cls, data):
        extra = set(data) - {"kind", "n", "ratio", "points"}
        if extra:
            raise AdmissibilityError(f"unknown sequence keys: {sorted(extra)}")
        pts = data.get("points")
        if pts is not None:
            pts = tuple(map(tuple, points_from_json(pts)))
        n = int(data["n"]) if "n" in data else (len(pts) if pts is not None else 0)
        return cls(kind=data["kind"], n=n, ratio=data.get("ratio"), points=pts)


def example55_z(j):
    return 1.0 - 2.0 ** (-np.asarray(j, dtype=np.float64))


def example55_w(j):
    j = np.asarray(j, dtype=np.float64)
    return example55_z(j) + 1j * 2.0 ** (-1.25 * j)


def _check_index(top):
    if top > MAX_INDEX:
        raise AdmissibilityError(f"index {top} exceeds {MAX_INDEX}; points would merge with the circle")


def gen(s):
    """Points of the sequence as an ``(n, d)`` complex array."""
    n = int(s.n)
    if s.kind == "geometric":
        pts = 1.0 - s.ratio ** np.arange(n, dtype=np.float64)
        pts = pts.astype(np.complex128)
    elif s.kind == "example55_z":
        _check_index(n - 1)
        pts = example55_z(np.arange(n)).astype(np.complex128)
    elif s.kind == "example55_w":
        _check_index(n)
        pts = example55_w(np.arange(1, n + 1))
    elif s.kind == "example55_union":
        top = n // 2
        _check_index(top)
        pts = [0.0 + 0.0j]
        for j in range(1, top + 1):
            pts += [complex(example55_z(j)), complex(example55_w(j))]
        pts = np.array(pts[:n], dtype=np.complex128)
    else:
        pts = np.asarray(s.points, dtype=np.complex128)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[0] < n:
            raise AdmissibilityError("custom sequence has fewer than n points")
        pts = pts[:n]
    pts = kernels.as_points(pts, None if pts.ndim == 1 else pts.shape[1])
    uniq = np.unique(pts, axis=0)
    if uniq.shape[0] != pts.shape[0]:
        raise DuplicatePointError("sequence repeats a point")
    return pts


def subsequence_riesz(spec, pts, target_count, bound=RIESZ_BOUND):
    """Greedy subsequence whose Gram satisfies ``||G - I|| <= bound``.

    Indices are visited by increasing ``k(z, z)`` (ties by index) and kept
    when the enlarged Gram still passes the eigenvalue certificate.  Raises
    :class:`SubsequenceError` if fewer than ``target_count`` indices survive,
    as happens for bounded kernels where normalized kernel functions cannot
    become nearly orthogonal.
    """
    if not spec.is_cnp:
        raise NotCNPError(f"{spec.family} is not a complete Pick kernel")
    pts = kernels.as_points(pts, spec.dim)
    if target_count < 1:
        raise AdmissibilityError("target_count must be positive")
    if target_count > pts.shape[0]:
        raise SubsequenceError(f"only {pts.shape[0]} points available for {target_count} requested")
    g = np.asarray(grammian.gram(spec, pts))
    norms = kernels.matrix(spec, pts).diagonal().real
    order = np.lexsort((np.arange(pts.shape[0]), norms))
    chosen = []
    for i in order:
        if grammian.block_deviation(g, chosen + [int(i)]) <= bound:
            chosen.append(int(i))
            if len(chosen) == target_count:
                break
    if len(chosen) < target_count:
        raise SubsequenceError(
            f"greedy selection stalled at {len(chosen)} of {target_count} indices "
            f"(sup of k(z, z) on the input is {norms.max():.6g})"
        )
    chosen.sort()
    dev = grammian.block_deviation(g, chosen)
    if dev > bound:
        raise SubsequenceError(f"selected Gram fails the certificate: {dev:.6g}")
    return chosen


def _pair_dh(spec, zs, ws):
    x = np.array([np.einsum("ij,ij->i", zs, ws.conj()),
                  np.einsum("ij,ij->i", zs, zs.conj()),
                  np.einsum("ij,ij->i", ws, ws.conj())])
    kzw, kzz, kww = kernels.kernel_of_inner(spec, x)
    return kernels._dh_from_values(kzw, kzz.real, kww.real)


def pair_dh(spec, zs, ws):
    """``d_H(zs[n], ws[n])`` for each ``n``."""
    zs = kernels.as_points(zs, spec.dim)
    ws = kernels.as_points(ws, spec.dim)
    if zs.shape != ws.shape:
        raise AdmissibilityError("sequences must have equal length")
    return _pair_dh(spec, zs, ws)


def essnormal_bound(spec, zs, ws):
    """``1 - d_H(z_n, w_n)^2 = |<k^_z, k^_w>|^2`` per index; at least 3/4 when ``d_H <= 1/2``."""
    d = pair_dh(spec, zs, ws)
    return 1.0 - d * d


def _ray_search(spec, z, delta, iters=200):
    """Bisection on ``t`` for ``d_H(z, z + i t) = 1.5 delta`` along the upward ray."""
    target = 1.5 * delta
    t_exit = math.sqrt(max(0.0, 1.0 - z.real * z.real)) - z.imag
    hi = t_exit * (1.0 - 1e-12)
    # keep the far end strictly inside the disc after rounding
    while hi > 0 and abs(z + 1j * hi) >= 1.0:
        hi -= max(hi * 1e-9, 1e-16)

    def f(t):
        return kernels.dh(spec, z, z + 1j * t)

    if not hi > 0 or f(hi) <= target:
        return None
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(hi, 1e-300):
            break
    t = 0.5 * (lo + hi)
    d = f(t)
    return z + 1j * t if delta < d < 2.0 * delta else None


def companion_sequence(spec, zs, delta):
    """Companions ``w_n`` on the rays ``z_n + i t`` with ``delta < d_H(z_n, w_n) < 2 delta``.

    Raises :class:`CompanionSearchError` listing every index whose ray leaves
    the disc before reaching the band.
    """
    if not spec.is_cnp:
        raise NotCNPError(f"{spec.family} is not a complete Pick kernel")
    if spec.dim != 1:
        raise AdmissibilityError("companion search is implemented on the disc")
    if not 0 < 2.0 * delta < 1.0:
        raise AdmissibilityError("delta must satisfy 0 < 2 delta < 1")
    zs = kernels.as_points(zs, 1)[:, 0]
    out, failed = [], []
    for i, z in enumerate(zs):
        w = _ray_search(spec, complex(z), delta)
        if w is None:
            failed.append(i)
        out.append(w)
    if failed:
        raise CompanionSearchError(f"no companion found for indices {failed}", failed)
    return np.array(out, dtype=np.complex128)[:, None]


@dataclass
class SectionRow:
    m: int
    n_points: int
    separation: float
    szego_lambda_min: float
    szego_lambda_max: float
    wb_lambda_min: float | None
    wb_lambda_max: float | None
    wb_trunc: int | None

    def to_dict(self):
        return dict(self.__dict__)


def weighted_bergman_spec(pts, trunc_min=400):
    """Weighted Bergman spec with a fixed truncation certified at the largest ``|<z, w>|``."""
    pts = kernels.as_points(pts, 1)
    q = float(np.max(np.abs(pts)) ** 2)
    need = kernels.series_truncation(kernels.KernelSpec("weighted_bergman_exp"), q)
    return kernels.KernelSpec("weighted_bergman_exp", trunc=max(int(trunc_min), need))


def example55_sections(ms, with_weighted=True, trunc_min=400):
    """Finite-section table on the first ``2m`` union points for each ``m``."""
    szego = kernels.KernelSpec("szego")
    rows = []
    for m in ms:
        pts = gen(SeqSpec("example55_union", 2 * int(m)))
        g = grammian.gram(szego, pts)
        lo, hi = grammian.spectral_bounds(g)
        sep = grammian.separation(szego, pts)
        wlo = whi = wt = None
        if with_weighted:
            wspec = weighted_bergman_spec(pts, trunc_min)
            wlo, whi = grammian.spectral_bounds(grammian.gram(wspec, pts))
            wt = wspec.trunc
        rows.append(SectionRow(int(m), pts.shape[0], sep, lo, hi, wlo, whi, wt))
    return rows


def example55_pair_decay(spec, js):
    """``d_H(z_j, w_j)`` for the listed indices ``j >= 1``."""
    js = np.asarray(js)
    if np.any(js < 1):
        raise AdmissibilityError("companion index starts at 1")
    _check_index(int(js.max()))
    return pair_dh(spec, example55_z(js).astype(np.complex128), example55_w(js))
