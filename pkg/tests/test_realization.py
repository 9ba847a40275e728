import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cnpick import kernels, pick, realization
from cnpick._json import dumps
from cnpick.errors import AdmissibilityError, IndefiniteError, InfeasibleError, NotCNPError
from cnpick.kernels import KernelSpec
from cnpick.pick import PickProblem
from cnpick.realization import Realization, build_realization, eval_transfer, eval_transfer_many

from conftest import CNP_SPECS, ball_points, disc_values

SZEGO = KernelSpec("szego")


# ---------------------------------------------------------------- factor_psd


def test_factor_identity():
    f = realization.factor_psd(np.eye(3))
    assert f.rank == 3
    assert np.allclose(f.rows @ f.rows.conj().T, np.eye(3))
    assert sorted(np.abs(f.rows).argmax(axis=1).tolist()) == [0, 1, 2]


def test_factor_all_ones():
    f = realization.factor_psd(np.ones((2, 2)))
    assert f.rank == 1
    assert np.allclose(f.rows, [[1.0], [1.0]])


def test_factor_boundary_pick_matrix_loses_rank():
    p = PickProblem(SZEGO, [0.0, 0.5], [1.0, -1.0])
    rho = pick.min_norm(p).rho_min
    f = realization.factor_psd(pick.pick_matrix(p, rho))
    assert f.rank == 1


def test_factor_indefinite_rejected():
    with pytest.raises(IndefiniteError):
        realization.factor_psd(np.diag([1.0, -0.5]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 10), r=st.integers(1, 10))
def test_factor_reproduces_low_rank(seed, n, r):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, r)) + 1j * rng.normal(size=(n, r))
    h = x @ x.conj().T
    f = realization.factor_psd(h)
    assert f.rank <= min(n, r)
    lam = np.linalg.eigvalsh(h).max()
    assert np.max(np.abs(f.rows @ f.rows.conj().T - h)) <= 1e-9 * (1 + lam)


# ------------------------------------------------------------ node_embedding


def test_node_embedding_szego():
    a = 0.3 + 0.4j
    b, beta = realization.node_embedding(SZEGO, [0.0, a])
    assert np.allclose(np.asarray(b), [[0, 0], [0, abs(a) ** 2]], atol=1e-15)
    assert np.allclose(beta[0], 0.0)


def test_node_embedding_origin():
    b, _ = realization.node_embedding(KernelSpec("dirichlet"), [0.0])
    assert np.asarray(b).tolist() == [[0.0]]


def test_node_embedding_dirichlet():
    spec = KernelSpec("dirichlet")
    nodes = ball_points(np.random.default_rng(4), 4)
    b, beta = realization.node_embedding(spec, nodes)
    assert b.is_psd()
    diag = np.array([1 - 1 / kernels.norm_sq(spec, z) for z in nodes])
    assert np.allclose(np.asarray(b).diagonal().real, diag, atol=1e-14)
    assert np.max(np.abs(beta @ beta.conj().T - np.asarray(b))) <= 1e-10


def test_node_embedding_rejects_non_cnp():
    with pytest.raises(NotCNPError):
        realization.node_embedding(KernelSpec("bergman_power", t=2.0), [0.1, 0.2])


# ------------------------------------------------------------------- build


def test_single_origin_node_gives_constant():
    w = 0.3 - 0.5j
    r = build_realization(SZEGO, [0.0], [w], 1.0)
    grid = ball_points(np.random.default_rng(0), 20)
    assert np.allclose(eval_transfer_many(r, SZEGO, grid), w, atol=1e-12)


def test_two_point_reproduction():
    r = build_realization(SZEGO, [0.0, 0.5], [0.0, 0.25], 1.0)
    assert abs(eval_transfer(r, SZEGO, 0.0)) <= 1e-8
    assert abs(eval_transfer(r, SZEGO, 0.5) - 0.25) <= 1e-8
    assert r.unitary_defect <= 1e-9


def test_boundary_budget_recovers_extremal():
    # at rho_min = 0.5 the solution is unique: phi(z) = z / 2
    r = build_realization(SZEGO, [0.0, 0.5], [0.0, 0.25], 0.5)
    grid = ball_points(np.random.default_rng(1), 30)[:, 0]
    assert np.allclose(eval_transfer_many(r, SZEGO, grid), grid / 2, atol=1e-8)


def test_origin_value_bounded():
    r = build_realization(SZEGO, [0.0, 0.5], [0.0, 0.25], 1.0)
    assert abs(eval_transfer(r, SZEGO, 0.0)) <= r.rho


def test_below_minimal_norm_rejected():
    with pytest.raises(InfeasibleError):
        build_realization(SZEGO, [0.0, 0.5], [0.0, 0.25], 0.4)


def test_non_cnp_rejected():
    with pytest.raises(NotCNPError):
        build_realization(KernelSpec("bergman_power", t=2.0), [0.0], [0.5], 1.0)


def test_kernel_mismatch_on_evaluation():
    r = build_realization(SZEGO, [0.0], [0.5], 1.0)
    with pytest.raises(AdmissibilityError):
        eval_transfer(r, KernelSpec("dirichlet"), 0.1)


def test_contractivity_example():
    r = build_realization(SZEGO, [0.0, 0.5], [1.0, -1.0], 4.0)
    grid = ball_points(np.random.default_rng(2), 50)
    lo, hi, ok = realization.contractivity_certificate(r, SZEGO, grid)
    assert ok and lo >= -1e-8 * (1 + hi)
    assert realization.verify_contractive(r, SZEGO, grid) == lo


def test_contractivity_on_nodes_and_single_point():
    nodes, w = np.array([0.1, -0.4j, 0.6]), np.array([0.2, 0.5j, -0.3])
    rho = 1.1 * pick.min_norm(PickProblem(SZEGO, nodes, w)).rho_min
    r = build_realization(SZEGO, nodes, w, rho)
    assert realization.verify_contractive(r, SZEGO, nodes) >= -1e-8
    assert realization.verify_contractive(r, SZEGO, [0.77j]) >= -1e-8


def test_pair_realization():
    lspec = KernelSpec("bergman_power", t=2.0)
    rng = np.random.default_rng(3)
    nodes, w = ball_points(rng, 4), disc_values(rng, 4, radius=2.0)
    rho = 1.05 * pick.pair_min_norm(PickProblem(SZEGO, nodes, w, lspec=lspec)).rho_min
    r = build_realization(SZEGO, nodes, w, rho, lspec=lspec)
    assert realization.node_reproduction_error(r, w) <= 1e-8
    grid = ball_points(rng, 40)
    lo, hi, ok = realization.contractivity_certificate(r, SZEGO, grid)
    assert ok


def test_json_roundtrip():
    rng = np.random.default_rng(6)
    nodes, w = ball_points(rng, 3, 2), disc_values(rng, 3)
    spec = KernelSpec("drury_arveson", d=2)
    r = build_realization(spec, nodes, w, 1.2 * pick.min_norm(PickProblem(spec, nodes, w)).rho_min)
    s = Realization.from_dict(json.loads(dumps(r.to_dict())))
    grid = ball_points(rng, 10, 2)
    assert np.array_equal(eval_transfer_many(r, spec, grid), eval_transfer_many(s, spec, grid))
    for key in ("A", "B", "C", "D", "nodes", "rho", "rank", "unitary_defect"):
        assert key in r.to_dict()


def test_unitary_dilation():
    v = np.array([[0.6, 0.0], [0.8, 0.0], [0.0, 0.0]])
    u, defect = realization.unitary_dilation(v)
    assert u.shape[0] == u.shape[1]
    assert defect < 1e-15
    assert np.array_equal(u[:3, :2], v)


# --------------------------------------------------------------- properties


def _data(seed, n, which, budget=1.05):
    rng = np.random.default_rng(seed)
    spec = CNP_SPECS[which]
    nodes, w = ball_points(rng, n, spec.dim), disc_values(rng, n)
    rho = budget * pick.min_norm(PickProblem(spec, nodes, w)).rho_min
    return spec, nodes, w, rho, rng


cases = dict(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 8), which=st.integers(0, len(CNP_SPECS) - 1))


@settings(max_examples=40, deadline=None)
@given(**cases)
def test_node_reproduction_and_unitarity(seed, n, which):
    spec, nodes, w, rho, _ = _data(seed, n, which)
    r = build_realization(spec, nodes, w, rho)
    assert realization.node_reproduction_error(r, w) <= 1e-8
    assert r.unitary_defect <= 1e-9


@settings(max_examples=30, deadline=None)
@given(**cases, factor=st.floats(1.0, 4.0))
def test_budget_monotonicity(seed, n, which, factor):
    spec, nodes, w, rho, rng = _data(seed, n, which)
    grid = ball_points(rng, 30, spec.dim, radius=0.99)
    for budget in (rho, rho * factor * 1.001):
        r = build_realization(spec, nodes, w, budget)
        assert realization.contractivity_certificate(r, spec, grid)[2]


@settings(max_examples=30, deadline=None)
@given(**cases)
def test_zero_targets_give_zero(seed, n, which):
    spec, nodes, _, _, rng = _data(seed, n, which)
    r = build_realization(spec, nodes, np.zeros(n), 1.0)
    grid = ball_points(rng, 30, spec.dim, radius=0.99)
    assert np.max(np.abs(eval_transfer_many(r, spec, grid))) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(**cases)
def test_sup_bound_on_grid(seed, n, which):
    # a multiplier of norm rho is bounded by rho pointwise
    spec, nodes, w, rho, rng = _data(seed, n, which)
    r = build_realization(spec, nodes, w, rho)
    grid = ball_points(rng, 100, spec.dim, radius=0.99)
    assert np.max(np.abs(eval_transfer_many(r, spec, grid))) <= rho * (1 + 1e-8)
