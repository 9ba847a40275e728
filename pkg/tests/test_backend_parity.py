"""The compiled core and the NumPy fallback must agree."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cnpick import _core_py

core = pytest.importorskip("cnpick._core")


def _complex_in_disc(rng, n, radius):
    r = radius * np.sqrt(rng.random(n))
    return r * np.exp(2j * np.pi * rng.random(n))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 30), radius=st.floats(0.0, 0.999))
def test_series_sums_agree(seed, n, radius):
    rng = np.random.default_rng(seed)
    x = _complex_in_disc(rng, n, radius)
    ratios = 1.0 / (1.0 + 1.0 / np.arange(1, 5001)) ** 2
    nterms = rng.integers(0, 5000, n)
    s1, p1 = core.series_sums(x, ratios, nterms)
    s2, p2 = _core_py.series_sums(x, ratios, nterms)
    np.testing.assert_allclose(s1, s2, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(p1, p2, rtol=1e-12)


def test_series_sums_zero_terms():
    x = np.array([0.5 + 0.1j])
    s, p = core.series_sums(x, np.ones(4), np.array([0]))
    assert s[0] == 1.0 and p[0] == 1.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 15), rank=st.integers(0, 15))
def test_pivoted_cholesky_agree(seed, n, rank):
    rng = np.random.default_rng(seed)
    rank = min(rank, n)
    b = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    a = b @ b.conj().T
    f1, perm1, r1, s1 = core.pivoted_cholesky(a, 1e-10)
    f2, perm2, r2, s2 = _core_py.pivoted_cholesky(a, 1e-10)
    assert r1 == r2
    np.testing.assert_array_equal(perm1, perm2)
    np.testing.assert_allclose(f1, f2, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(s1, s2, atol=1e-8)
    np.testing.assert_allclose(f1 @ f1.conj().T, a, atol=1e-8 * max(1.0, np.abs(a).max()))


@pytest.mark.parametrize("count,start", [(1, 10), (50, 400), (400, 3000)])
def test_moment_ratios_agree(count, start):
    np.testing.assert_array_equal(core.moment_ratios(count, start), _core_py.moment_ratios(count, start))
