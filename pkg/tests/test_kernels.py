import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cnpick import kernels
from cnpick.errors import AdmissibilityError, NotCNPError, TruncationError
from cnpick.kernels import KernelSpec

from conftest import CNP_SPECS, ball_points

ALL_SPECS = CNP_SPECS + [
    KernelSpec("bergman_power", t=2.0),
    KernelSpec("kaluza", alpha=2.0),
    KernelSpec("kaluza", alpha=0.0),
    KernelSpec("weighted_bergman_exp"),
]


def disc(max_r=0.95):
    r = st.floats(0.0, max_r)
    th = st.floats(0.0, 2 * math.pi)
    return st.builds(lambda a, b: a * complex(math.cos(b), math.sin(b)), r, th)


# ------------------------------------------------------------------ values


def test_szego_value():
    assert kernels.eval(KernelSpec("szego"), 0.5, 0.5) == pytest.approx(4.0 / 3.0, rel=1e-15)


def test_szego_norm():
    assert kernels.norm_sq(KernelSpec("szego"), 0.8) == pytest.approx(1.0 / 0.36, rel=1e-14)


def test_dirichlet_value():
    # -log(1 - 0.25) / 0.25
    assert kernels.eval(KernelSpec("dirichlet"), 0.5, 0.5).real == pytest.approx(1.1507282898071236, rel=1e-14)


def test_dirichlet_small_argument_branch():
    spec = KernelSpec("dirichlet")
    for x in (1e-5, 3e-5 + 2e-5j, -9e-5):
        with mpmath.workdps(30):
            want = complex(-mpmath.log(1 - mpmath.mpc(x)) / mpmath.mpc(x))
        assert abs(kernels.kernel_of_inner(spec, np.array([x]))[0] - want) < 1e-15


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0])
def test_power_matches_closed_form(t):
    z, w = 0.3 + 0.4j, -0.2 + 0.6j
    x = z * np.conj(w)
    assert kernels.eval(KernelSpec("power", t=t), z, w) == pytest.approx((1 - x) ** (-t), rel=1e-14)


def test_bergman_power_value():
    assert kernels.eval(KernelSpec("bergman_power", t=2.0), 0.5, 0.5).real == pytest.approx(1.0 / 0.75 ** 2)


def test_drury_arveson_inner_product():
    spec = KernelSpec("drury_arveson", d=2)
    z, w = np.array([0.5, 0.5j]), np.array([0.1, 0.3])
    x = np.vdot(w, z)
    assert kernels.eval(spec, z, w) == pytest.approx(1 / (1 - x), rel=1e-15)


@pytest.mark.parametrize("x", [0.9, 0.5 + 0.5j, -0.95])
def test_kaluza_alpha2_against_dilogarithm(x):
    got = kernels.kernel_of_inner(KernelSpec("kaluza", alpha=2.0), np.array([x]))[0]
    want = complex(mpmath.polylog(2, x) / x)
    assert abs(got - want) <= 2e-12 * abs(want)


@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_kaluza_closed_forms(alpha):
    x = 0.7 - 0.2j
    got = kernels.kernel_of_inner(KernelSpec("kaluza", alpha=alpha), np.array([x]))[0]
    want = 1 / (1 - x) if alpha == 0 else -np.log(1 - x) / x
    assert got == pytest.approx(want, rel=1e-14)


def test_kaluza_fractional_against_series():
    spec = KernelSpec("kaluza", alpha=0.5)
    x = 0.6
    want = mpmath.nsum(lambda n: x ** n / (n + 1) ** 0.5, [0, mpmath.inf])
    assert kernels.kernel_of_inner(spec, np.array([x]))[0].real == pytest.approx(float(want), rel=1e-12)


# ----------------------------------------------------------------- moments


def _moment_oracle(n):
    with mpmath.workdps(30):
        return mpmath.quad(lambda u: u ** n * mpmath.exp(-1 / (1 - u)), [0, 0.5, 0.9, 0.99, 1])


def test_moment_c0():
    want = float(mpmath.log(_moment_oracle(0)))
    table = kernels.weighted_bergman_moments(8)
    assert table.log_c[0] == pytest.approx(want, abs=1e-10)
    assert table.log_c[0] == pytest.approx(-1.90720058, abs=1e-8)


@pytest.mark.parametrize("n", [1, 3, 7])
def test_moment_recurrence_against_quadrature(n):
    table = kernels.weighted_bergman_moments(8)
    assert table.log_c[n] == pytest.approx(float(mpmath.log(_moment_oracle(n))), abs=1e-10)


def test_moment_table_large_index_certified():
    table = kernels.weighted_bergman_moments(20_000)
    assert table.quad_error < 1e-9
    assert np.all(np.diff(table.log_c) < 0)
    assert np.all((table.ratios > 0) & (table.ratios < 1))


def test_weighted_bergman_against_moment_series():
    x = 0.3
    c = [_moment_oracle(n) for n in range(60)]
    with mpmath.workdps(30):
        want = float(sum(c[0] / c[n] * mpmath.mpf(x) ** n for n in range(60)))
    got = kernels.kernel_of_inner(KernelSpec("weighted_bergman_exp"), np.array([x]))[0].real
    assert got == pytest.approx(want, rel=1e-11)


def test_weighted_bergman_rejects_bad_trunc():
    with pytest.raises(AdmissibilityError):
        kernels.weighted_bergman_moments(0)


# --------------------------------------------------------------- truncation


def test_truncation_error_when_fixed_trunc_too_small():
    with pytest.raises(TruncationError):
        kernels.eval(KernelSpec("kaluza", alpha=2.0, trunc=5), 0.9, 0.9)


def test_fixed_trunc_fine_near_origin():
    v = kernels.eval(KernelSpec("kaluza", alpha=2.0, trunc=5), 0.01, 0.01)
    assert v.real == pytest.approx(1 + 1e-4 / 4 + 1e-8 / 9, rel=1e-12)


def test_series_truncation_grows_with_modulus():
    spec = KernelSpec("weighted_bergman_exp")
    sizes = [kernels.series_truncation(spec, q) for q in (0.25, 0.5, 0.81)]
    assert sizes == sorted(sizes)
    with pytest.raises(AdmissibilityError):
        kernels.series_truncation(KernelSpec("szego"), 0.5)


# ------------------------------------------------------------- validation


@pytest.mark.parametrize(
    "kw",
    [
        {"family": "nope"},
        {"family": "power", "t": 1.5},
        {"family": "power"},
        {"family": "bergman_power", "t": 1.0},
        {"family": "drury_arveson", "d": 0},
        {"family": "kaluza", "alpha": -1.0},
        {"family": "szego", "t": 0.5},
        {"family": "szego", "trunc": 10},
        {"family": "kaluza", "alpha": 2.0, "tail_tol": 0.0},
    ],
)
def test_spec_validation(kw):
    with pytest.raises(AdmissibilityError):
        KernelSpec(**kw)


@pytest.mark.parametrize("spec", ALL_SPECS)
def test_spec_roundtrip(spec):
    assert KernelSpec.from_dict(spec.to_dict()) == spec


def test_spec_from_dict_rejects_unknown_keys():
    with pytest.raises(AdmissibilityError):
        KernelSpec.from_dict({"family": "szego", "beta": 1})


def test_points_outside_ball_rejected():
    with pytest.raises(AdmissibilityError):
        kernels.eval(KernelSpec("szego"), 1.0, 0.0)
    with pytest.raises(AdmissibilityError):
        kernels.eval(KernelSpec("drury_arveson", d=2), [0.8, 0.8], [0.0, 0.0])


def test_dimension_mismatch_rejected():
    with pytest.raises(AdmissibilityError):
        kernels.eval(KernelSpec("drury_arveson", d=3), [0.1, 0.1], [0.0, 0.0])


# ----------------------------------------------------------- pseudo-distance


def test_dh_szego_examples():
    spec = KernelSpec("szego")
    assert kernels.dh(spec, 0.0, 0.5) == pytest.approx(0.5, abs=1e-15)
    z4, w4 = 0.9375, 0.9375 + 0.03125j
    assert kernels.dh(spec, z4, w4) == pytest.approx(0.25082807, abs=1e-8)


def test_dh_matrix_zero_diagonal():
    spec = KernelSpec("dirichlet")
    d = kernels.dh_matrix(spec, [0.0, 0.3, 0.5j])
    assert np.allclose(np.diag(d), 0.0)
    assert np.allclose(d, d.T)


def test_b_inner():
    assert kernels.b_inner(KernelSpec("drury_arveson", d=2), [0.5, 0.5], [1.0 / math.sqrt(2), 0.0]) == pytest.approx(
        0.5 / math.sqrt(2)
    )
    assert kernels.b_inner(KernelSpec("szego"), 0.5, 0.5) == pytest.approx(0.25)
    assert kernels.b_inner(KernelSpec("dirichlet"), 0.5, 0.5) == pytest.approx(1 - 1 / 1.1507282898071236)
    with pytest.raises(NotCNPError):
        kernels.b_inner(KernelSpec("bergman_power", t=2.0), 0.5, 0.5)


def test_b_gram_is_psd_contraction():
    spec = KernelSpec("kaluza", alpha=1.0)
    pts = ball_points(np.random.default_rng(1), 6)
    b = kernels.b_gram(spec, pts)
    ev = np.linalg.eigvalsh(0.5 * (b + b.conj().T))
    assert ev.min() > -1e-12
    assert np.all(np.diag(b).real < 1)


def test_normalize_at():
    k = lambda z, w: 1 / (1 - z * np.conj(w)) ** 2  # noqa: E731
    lk = kernels.normalize_at(k, 0.3)
    assert lk(0.3, 0.7j) == pytest.approx(1.0)
    assert lk(-0.5, 0.3) == pytest.approx(1.0)


def test_kernel_sup_norm_sq():
    assert kernels.kernel_sup_norm_sq(KernelSpec("szego"), [0.0, 0.5]) == pytest.approx(4 / 3)
    with pytest.raises(AdmissibilityError):
        kernels.kernel_sup_norm_sq(KernelSpec("szego"), [1.0])


# --------------------------------------------------------------- properties


@settings(max_examples=60, deadline=None)
@given(z=disc(), w=disc(), which=st.integers(0, len(ALL_SPECS) - 1))
def test_hermitian_symmetry(z, w, which):
    spec = ALL_SPECS[which]
    if spec.dim != 1:
        return
    a, b = kernels.eval(spec, z, w), kernels.eval(spec, w, z)
    assert abs(a - np.conj(b)) <= 1e-12 * max(1.0, abs(a))


@settings(max_examples=60, deadline=None)
@given(z=disc(), which=st.integers(0, len(ALL_SPECS) - 1))
def test_normalized_at_origin(z, which):
    spec = ALL_SPECS[which]
    if spec.dim != 1:
        return
    assert kernels.eval(spec, z, 0.0) == pytest.approx(1.0, abs=1e-14)
    assert kernels.norm_sq(spec, z) >= 1.0 - 1e-14


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 8), which=st.integers(0, len(ALL_SPECS) - 1))
def test_kernel_matrix_is_psd(seed, n, which):
    spec = ALL_SPECS[which]
    pts = ball_points(np.random.default_rng(seed), n, spec.dim, radius=0.9)
    k = kernels.matrix(spec, pts)
    assert np.allclose(k, k.conj().T, rtol=0, atol=1e-12 * np.abs(k).max())
    ev = np.linalg.eigvalsh(k)
    assert ev.min() >= -1e-10 * ev.max()


@settings(max_examples=60, deadline=None)
@given(z=disc(), w=disc())
def test_dh_szego_is_pseudohyperbolic(z, w):
    want = abs((z - w) / (1 - np.conj(w) * z))
    # the radicand cancels near the diagonal, costing about sqrt(eps) there
    tol = 1e-12 if want > 1e-3 else 5e-8
    assert kernels.dh(KernelSpec("szego"), z, w) == pytest.approx(want, abs=tol)


@pytest.mark.parametrize("spec", ALL_SPECS)
def test_dh_identical_points_exactly_zero(spec):
    z = np.full(spec.dim, 0.3 + 0.2j) / spec.dim
    assert kernels.dh(spec, z, z) == 0.0


@settings(max_examples=40, deadline=None)
@given(z=disc(), w=disc(), u=disc(), which=st.integers(0, len(CNP_SPECS) - 1))
def test_dh_triangle_inequality(z, w, u, which):
    spec = CNP_SPECS[which]
    if spec.dim != 1:
        return
    d = lambda a, b: kernels.dh(spec, a, b)  # noqa: E731
    assert d(z, u) <= d(z, w) + d(w, u) + 1e-10


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), which=st.integers(0, len(CNP_SPECS) - 1))
def test_b_embedding_bounds(seed, which):
    spec = CNP_SPECS[which]
    z, w = ball_points(np.random.default_rng(seed), 2, spec.dim, radius=0.95)
    bzz, bww = kernels.b_inner(spec, z, z), kernels.b_inner(spec, w, w)
    bzw = kernels.b_inner(spec, z, w)
    assert 0.0 <= bzz.real < 1.0 and abs(bzz.imag) < 1e-14
    assert abs(bzw) ** 2 <= bzz.real * bww.real + 1e-10
    assert 1.0 / (1.0 - bzw) == pytest.approx(kernels.eval(spec, z, w), rel=1e-10)


@pytest.mark.parametrize("spec", CNP_SPECS)
def test_b_vanishes_at_origin(spec):
    z = np.full(spec.dim, 0.4 - 0.1j) / spec.dim
    assert kernels.b_inner(spec, z, kernels.origin(spec)) == 0.0
