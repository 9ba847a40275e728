"""NumPy implementations of the hot kernels.

Same signatures and results as the compiled ``_core`` module; used when the
extension is not built or when ``CNPICK_PURE_PYTHON=1``.
"""

import numpy as np

_CHUNK = 1 << 12
# past the peak the ratio tables keep terms decreasing, so a term this small
# ends the sum long before subnormal arithmetic sets in
NEGLIGIBLE = 1e-280


def series_sums(x, ratios, nterms):
    """Sum ``sum_{n=0}^{N} a_n x**n`` with ``a_0 = 1`` and ``a_n = a_{n-1} * ratios[n-1]``.

    ``nterms[i]`` is the last index ``N`` summed for ``x[i]``; summation stops
    early once a term falls below ``NEGLIGIBLE``.  Returns the sums and the
    largest term modulus seen, per entry.
    """
    x = np.ascontiguousarray(x, dtype=np.complex128)
    ratios = np.ascontiguousarray(ratios, dtype=np.float64)
    nterms = np.ascontiguousarray(nterms, dtype=np.int64)
    sums = np.empty(x.shape[0], dtype=np.complex128)
    peak = np.empty(x.shape[0], dtype=np.float64)
    for i in range(x.shape[0]):
        total = 1.0 + 0.0j
        big = 1.0
        term = 1.0 + 0.0j
        start = 0
        stop = int(nterms[i])
        while start < stop:
            end = min(start + _CHUNK, stop)
            steps = x[i] * ratios[start:end]
            steps[0] *= term
            with np.errstate(under="ignore"):
                run = np.cumprod(steps)
            total += run.sum()
            big = max(big, float(np.abs(run).max()))
            term = run[-1]
            start = end
            if abs(term) < NEGLIGIBLE:
                break
        sums[i] = total
        peak[i] = big
    return sums, peak


def pivoted_cholesky(a, tol):
    """Outer-product Cholesky with diagonal pivoting on a Hermitian matrix.

    Stops once the largest remaining diagonal entry is ``<= tol``.  Returns
    ``(factor, perm, rank, schur)`` where ``factor[perm] @ factor[perm].conj().T``
    reproduces the leading block and ``schur`` is the untouched Schur complement.
    """
    a = np.array(a, dtype=np.complex128, copy=True)
    n = a.shape[0]
    perm = np.arange(n)
    low = np.zeros((n, n), dtype=np.complex128)
    rank = 0
    for k in range(n):
        diag = a.diagonal().real[k:]
        j = k + int(np.argmax(diag))
        if diag[j - k] <= tol:
            break
        if j != k:
            a[[k, j], :] = a[[j, k], :]
            a[:, [k, j]] = a[:, [j, k]]
            low[[k, j], :k] = low[[j, k], :k]
            perm[[k, j]] = perm[[j, k]]
        pivot = np.sqrt(a[k, k].real)
        low[k, k] = pivot
        col = a[k + 1:, k] / pivot
        low[k + 1:, k] = col
        a[k + 1:, k + 1:] -= np.outer(col, col.conj())
        rank = k + 1
    factor = np.empty((n, rank), dtype=np.complex128)
    factor[perm] = low[:, :rank]
    schur = a[rank:, rank:].copy()
    return factor, perm, rank, schur


def moment_ratios(count, start):
    """Backward recurrence for ``c_{n+1}/c_n`` of ``c_n = int_0^1 u^n exp(-1/(1-u)) du``.

    Runs ``(n+1) c_n - (2n+5) c_{n+1} + (n+3) c_{n+2} = 0`` downward from index
    ``start`` (Miller's method) and returns the first ``count`` ratios.
    """
    out = np.empty(count, dtype=np.float64)
    r = 1.0
    for n in range(start, -1, -1):
        r = (n + 1.0) / ((2.0 * n + 5.0) - (n + 3.0) * r)
        if n < count:
            out[n] = r
    return out
