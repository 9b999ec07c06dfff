from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from sklearn.base import clone

from fixture_graphs import NAMES, build
from graphrd.enumeration import BallSpec, WindowError, ball
from graphrd.graph import PresentationGraph
from graphrd.group_function import GroupFunction, restrict_by_ell
from graphrd.normal_form import multiply
from graphrd.rd_verifier import (CliqueRDConstants, GrowthFit, LevelTensor, TrilinearNormEstimator,
                                 bilinear_value, clique_rd_constants, ell_reduction_check,
                                 fit_growth, global_constants, mf_check, proposition_check,
                                 rd_scan, tensor_norm_oracle, trilinear_ratio, vanishing_check)
from graphrd.validation import SparseTensor3, check_tensor
from graphrd.vertex_group import VertexGroup
from oracles import dense_tensor, random_search_norm


def _norm(T, **kw):
    return TrilinearNormEstimator(**kw).fit(T).norm_


def test_estimator_on_known_tensors():
    # rank one: u (x) v (x) w has norm |u||v||w|
    rng = np.random.default_rng(0)
    u, v, w = (np.abs(rng.standard_normal(n)) for n in (4, 5, 3))
    T = np.einsum("i,j,k->ijk", u, v, w)
    expected = np.linalg.norm(u) * np.linalg.norm(v) * np.linalg.norm(w)
    assert _norm(T) == pytest.approx(expected, rel=1e-10)
    # all-ones a x b x 1 block has norm sqrt(a b)
    assert _norm(np.ones((3, 7, 1))) == pytest.approx(math.sqrt(21), rel=1e-12)
    # a single output slice is an ordinary matrix norm
    M = np.abs(rng.standard_normal((6, 4)))
    assert _norm(M[:, :, None]) == pytest.approx(np.linalg.norm(M, 2), rel=1e-9)


def test_estimator_is_a_lower_bound_and_matches_random_search():
    rng = np.random.default_rng(1)
    for _ in range(5):
        T = (rng.random((3, 4, 3)) < 0.5).astype(float)
        est = _norm(T)
        assert est >= random_search_norm(T, rng, 3000) - 1e-12
        assert est == pytest.approx(tensor_norm_oracle(T), rel=1e-6)


def test_estimator_witness_attains_the_norm():
    rng = np.random.default_rng(2)
    T = check_tensor((rng.random((5, 6, 4)) < 0.4).astype(float))
    est = TrilinearNormEstimator().fit(T)
    assert np.linalg.norm(est.row_vector_) == pytest.approx(1.0)
    assert bilinear_value(T, est.row_vector_, est.col_vector_) == pytest.approx(est.norm_, rel=1e-12)


def test_estimator_api():
    est = TrilinearNormEstimator(n_restarts=4, random_state=3)
    assert est.get_params()["n_restarts"] == 4
    other = clone(est).set_params(max_iter=5)
    assert other.max_iter == 5 and est.max_iter == 200
    T = np.ones((2, 2, 2))
    assert est.fit(T).score(T) == est.norm_
    with pytest.raises(ValueError):
        TrilinearNormEstimator(n_restarts=0).fit(T)
    with pytest.raises(ValueError):
        TrilinearNormEstimator().fit(np.ones((2, 2)))
    with pytest.raises(ValueError):
        TrilinearNormEstimator().fit(-np.ones((2, 2, 2)))
    empty = TrilinearNormEstimator().fit(np.zeros((0, 3, 0)))
    assert empty.norm_ == 0.0 and empty.empty_


def test_budget_monotone_and_repeatable(path_z2):
    lt = LevelTensor.build(path_z2.graph, path_z2.spec, 2, 3, 3)
    vals = [_norm(lt.tensor, n_restarts=b, random_state=5) for b in (1, 2, 4, 8, 16)]
    assert vals == sorted(vals)
    assert _norm(lt.tensor, n_restarts=8) == _norm(lt.tensor, n_restarts=8)


def test_estimate_independent_of_restart_count():
    # each restart is frozen on its own, so restart i behaves the same in any batch
    rng = np.random.default_rng(4)
    T = (rng.random((6, 6, 5)) < 0.3).astype(float)
    small = TrilinearNormEstimator(n_restarts=3).fit(T).restart_norms_
    big = TrilinearNormEstimator(n_restarts=9).fit(T).restart_norms_
    assert np.array_equal(small, big[:3])


def test_level_tensor_matches_direct_products(fx):
    for k, l in ((1, 1), (1, 2), (2, 1)):
        if max(k, l) > fx.spec.lambda_max:
            continue
        for m in range(abs(k - l), k + l + 1):
            lt = LevelTensor.build(fx.graph, fx.spec, k, l, m)
            ref = dense_tensor(lt.rows, lt.cols, lt.outs, multiply)
            assert np.array_equal(lt.tensor.todense(), ref)
            assert all(g.lam == m for g in lt.outs)


def test_trilinear_ratio_examples(edge, dihedral):
    for fx in (edge, dihedral):
        assert trilinear_ratio(fx.graph, 0, 1, 1, fx.spec) == pytest.approx(1.0, abs=1e-15)
    lt = LevelTensor.build(edge.graph, edge.spec, 1, 1, 2)
    got = trilinear_ratio(edge.graph, 1, 1, 2, edge.spec)
    assert got == pytest.approx(tensor_norm_oracle(lt.tensor), rel=1e-9)
    # uv = vu is the only length-2 element and u*v, v*u hit it: the slice is [[0,1],[1,0]]
    assert got == pytest.approx(1.0, rel=1e-12)
    lt = LevelTensor.build(dihedral.graph, dihedral.spec, 2, 2, 2)
    assert trilinear_ratio(dihedral.graph, 2, 2, 2, dihedral.spec) == \
        pytest.approx(tensor_norm_oracle(lt.tensor), rel=1e-9)
    with pytest.raises(ValueError):
        trilinear_ratio(edge.graph, 1, 1, 3, edge.spec)


def test_empty_level_gives_zero_with_warning(edge, caplog):
    with caplog.at_level("WARNING"):
        assert trilinear_ratio(edge.graph, 3, 1, 2, edge.spec) == 0.0
    assert "empty" in caplog.text


def test_sobolev_ratio_bounded_by_plain(path_z):
    for k, l, m in ((1, 1, 2), (2, 1, 1), (2, 2, 2)):
        plain = trilinear_ratio(path_z.graph, k, l, m, path_z.spec)
        lt = LevelTensor.build(path_z.graph, path_z.spec, k, l, m)
        wmax = max(lt.sobolev_weights(1.0))
        sob = trilinear_ratio(path_z.graph, k, l, m, path_z.spec, r=1.0)
        assert sob <= plain * wmax * (1 + 1e-9)
        assert sob <= plain * (1 + 1e-9)


def test_ell_mode_levels(path_z):
    lt = LevelTensor.build(path_z.graph, path_z.spec, 2, 1, 3, mode="ell")
    assert all(g.ell == 2 for g in lt.rows) and all(g.ell == 3 for g in lt.outs)
    with pytest.raises(WindowError):
        LevelTensor.build(path_z.graph, path_z.spec, 5, 1, 4, mode="ell")


@pytest.mark.parametrize("name", NAMES)
def test_vanishing_outside_admissible_range(name):
    fx = build(name)
    rep = vanishing_check(fx.graph, fx.spec, trials=50, k_max=3, l_max=3, seed=1)
    assert rep["ok"]
    assert all(r["max_outside_norm"] == 0.0 for r in rep["rows"])


def test_vanishing_boundary_witness(dihedral):
    rep = vanishing_check(dihedral.graph, dihedral.spec, trials=5, k_max=2, l_max=2)
    assert all(r["boundary_witness"] for r in rep["rows"])


def test_clique_constants_examples(dihedral, path_z):
    assert clique_rd_constants(dihedral.graph, (), dihedral.spec).c == 1.0
    rc = clique_rd_constants(dihedral.graph, {0}, dihedral.spec)
    assert (rc.c, rc.r, rc.exact) == (pytest.approx(math.sqrt(2), rel=1e-12), 0.0, True)
    rz = clique_rd_constants(path_z.graph, {0}, path_z.spec)
    assert rz.r == 1.0 and not rz.exact
    with pytest.raises(ValueError):
        clique_rd_constants(path_z.graph, {0, 2}, path_z.spec)
    est = CliqueRDConstants(spec=dihedral.spec, n_restarts=4)
    assert est.get_params()["stability_tol"] == 0.05


def test_z2_clique_norm_is_exact():
    # C[Z/2]: sup ||a * b|| over unit a, b; brute force over a fine grid of angles
    G = PresentationGraph([VertexGroup.cyclic(2)])
    best = 0.0
    for s in np.linspace(0, math.pi / 2, 181):
        for t in np.linspace(0, math.pi / 2, 181):
            a, b = (math.cos(s), math.sin(s)), (math.cos(t), math.sin(t))
            conv = (a[0] * b[0] + a[1] * b[1], a[0] * b[1] + a[1] * b[0])
            best = max(best, math.hypot(*conv))
    assert clique_rd_constants(G, {0}, BallSpec(1)).c == pytest.approx(best, rel=1e-9)


def test_proposition_rows(fx):
    c, r, _ = global_constants(fx.graph, fx.spec, budget=4)
    for k, l in ((0, 2), (2, 0)):
        if max(k, l) > fx.spec.lambda_max:
            continue
        row = proposition_check(fx.graph, k, l, abs(k - l), fx.spec, c, r, budget=4)
        assert row["ratio_over_bound"] <= 1 + 1e-9
        assert "witness" not in row


def test_violation_carries_witness(dihedral):
    row = proposition_check(dihedral.graph, 1, 1, 2, dihedral.spec, c=0.5, r=0.0, budget=2)
    assert row["ratio_over_bound"] > 1
    assert row["witness"]["phi"] and row["witness"]["psi"]


def test_growth_fit():
    k = np.arange(1, 9)
    g = GrowthFit().fit(k, 3.0 * (k + 1) ** 2.0)
    assert g.slope_ == pytest.approx(2.0) and g.n_points_ == 7
    assert g.predict([4])[0] == pytest.approx(75.0)
    # k <= 1 never enters the fit
    noisy = 3.0 * (k + 1.0) ** 1.0
    noisy[:1] = 1e6
    assert GrowthFit(envelope=False).fit(k, noisy).slope_ == pytest.approx(1.0)
    with pytest.raises(ValueError):
        GrowthFit().fit(k, np.zeros(8))
    with pytest.raises(ValueError):
        GrowthFit().fit([1, 2, 3], [1.0, 2.0, 3.0])


def test_growth_envelope_handles_exhausted_spheres():
    # ratios vanish once spheres run out; the running maximum keeps the family flat
    g = GrowthFit().fit([0, 1, 2, 3, 4, 5], [1.0, 1.4, 1.4, 0.0, 0.0, 0.0])
    assert g.slope_ == pytest.approx(0.0, abs=1e-12)


def test_synthetic_linear_growth():
    ks = np.arange(0, 12)
    ratios = [_norm(np.ones((k + 1, k + 1, 1)), n_restarts=2) for k in ks]
    assert GrowthFit().fit(ks, ratios).slope_ == pytest.approx(1.0, abs=1e-9)


def test_fit_growth_groups_families():
    rows = [{"k": k, "l": k + 1, "m": 1, "mode": "plain", "ratio": (k + 1.0) ** 0.5}
            for k in range(8)]
    fits = fit_growth(rows)
    assert list(fits) == [("plain", 1, 0)]
    assert fits[("plain", 1, 0)]["slope"] == pytest.approx(0.5)


def test_rd_scan_rows_and_csv(edge):
    rep = rd_scan(edge.graph, BallSpec(3), 2, 2, budget=4, seed=3)
    assert not rep.violations
    lines = rep.to_csv().splitlines()
    assert lines[0] == "k,l,m,mode,ratio,bound,ratio_over_bound,samples,seed"
    admissible = sum(k + l - abs(k - l) + 1 for k, l in itertools.product(range(3), repeat=2))
    assert len(lines) == 1 + 2 * admissible
    assert rd_scan(edge.graph, BallSpec(3), 2, 2, budget=4, seed=3).to_csv() == rep.to_csv()
    threaded = rd_scan(edge.graph, BallSpec(3), 2, 2, budget=4, seed=3, threads=3)
    assert threaded.to_csv() == rep.to_csv()


def test_mf_bounded_by_polynomial(path_z2):
    spec = BallSpec(10)
    for k, q, l in ((2, 1, 2), (3, 2, 3), (4, 2, 3), (3, 3, 3)):
        res = mf_check(path_z2.graph, spec, k, q, l)
        assert res["ok"] and res["MF"] >= 1


def test_ell_level_reduction_step(path_z):
    rng = np.random.default_rng(6)
    elems = ball(path_z.graph, path_z.spec).elements()
    for k, l in ((2, 1), (3, 1), (2, 2)):
        for _ in range(3):
            phi = restrict_by_ell(GroupFunction.random(path_z.graph, elems, rng), k)
            psi = restrict_by_ell(GroupFunction.random(path_z.graph, elems, rng), l)
            for m in range(abs(k - l), k + l + 1):
                assert ell_reduction_check(path_z.graph, path_z.spec, phi, psi, k, l, m)["ok"]


def test_sparse_tensor_validation():
    T = SparseTensor3(np.array([0]), np.array([0]), np.array([2]), np.array([1.0]), (1, 1, 2))
    with pytest.raises(ValueError):
        check_tensor(T)
    T = SparseTensor3(np.array([0]), np.array([0]), np.array([0]), np.array([np.nan]), (1, 1, 1))
    with pytest.raises(ValueError):
        check_tensor(T)
