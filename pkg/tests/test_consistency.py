import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_connected
from oracles import additive_lstsq
from rankpref import _backend, _fallback, consistency
from rankpref.consistency import (COLD_START, CROSS_COMPONENT, OK, ColdStartError,
                                  CrossComponentError, complete_all, fit_sc, fit_uc, predict)
from rankpref.harness import MethodSpec, audit_consensus_order
from rankpref.ratings import DataError, RatingScale, SparseRatingMatrix

WIDE = RatingScale(-1e9, 1e9)


def three_entry():
    # (0,0)=2, (0,1)=4, (1,0)=3; (1,1) missing
    return SparseRatingMatrix.from_triples([0, 0, 1], [0, 1, 0], [2, 4, 3])


class TestShiftConsistent:
    def test_three_entry_example(self):
        assert predict(fit_sc(three_entry()), 1, 1) == pytest.approx(5.0, abs=1e-9)

    def test_constant_matrix(self, rng):
        mask = rng.random((6, 5)) < 0.6
        mask[:, 0] = True
        table = np.where(mask, 3.0, np.nan)
        model = fit_sc(SparseRatingMatrix.from_dense(table))
        for u in range(6):
            for i in range(5):
                assert predict(model, u, i) == pytest.approx(3.0, abs=1e-12)

    def test_alice_one_unit_above_bob(self):
        # Alice (0) and Bob (1) share items 0-2; only Bob rated item 3
        scale = RatingScale(1, 10)
        mat = SparseRatingMatrix.from_triples(
            [0, 0, 0, 1, 1, 1, 1], [0, 1, 2, 0, 1, 2, 3], [6, 8, 5, 5, 7, 4, 7], scale=scale)
        assert predict(fit_sc(mat), 0, 3) == pytest.approx(8.0, abs=1e-9)

    def test_gauge_fixed_per_component(self, rng):
        table = np.full((5, 6), np.nan)
        table[:2, :3] = rng.uniform(1, 5, (2, 3))
        table[2:, 3:] = rng.uniform(1, 5, (3, 3))
        model = fit_sc(SparseRatingMatrix.from_dense(table))
        cu = model.components.component_of_user
        for c in np.unique(cu):
            assert abs(model.row_param[cu == c].mean()) < 1e-9

    def test_unconverged_is_flagged(self, rng):
        mat = random_connected(rng, n_max=20)
        model = fit_sc(mat, max_iter=1)
        assert model.fit_stats.iterations == 1
        assert not model.fit_stats.converged

    def test_converged_residual_within_tol(self, rng):
        model = fit_sc(random_connected(rng, n_max=20), tol=1e-10)
        assert model.fit_stats.converged
        assert model.fit_stats.final_residual <= 1e-10

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            fit_sc(three_entry(), tol=0)

    def test_same_fit_with_fallback_kernel(self, rng, monkeypatch):
        mat = random_connected(rng, n_max=20)
        fast = fit_sc(mat)
        monkeypatch.setattr(_backend, "balance_additive", _fallback.balance_additive)
        slow = fit_sc(mat)
        np.testing.assert_allclose(fast.row_param, slow.row_param, atol=1e-12)
        np.testing.assert_allclose(fast.col_param, slow.col_param, atol=1e-12)


class TestUnitConsistent:
    def test_three_entry_example(self):
        assert predict(fit_uc(three_entry()), 1, 1) == pytest.approx(6.0, rel=1e-9)

    def test_constant_matrix(self):
        table = np.full((4, 4), 2.5)
        table[0, 1] = table[2, 3] = np.nan
        model = fit_uc(SparseRatingMatrix.from_dense(table))
        assert predict(model, 0, 1) == pytest.approx(2.5, rel=1e-12)

    def test_alice_ten_percent_above_bob(self):
        scale = RatingScale(1, 100)
        bob = [50, 60, 40]
        alice = [1.1 * r for r in bob]
        mat = SparseRatingMatrix.from_triples(
            [0, 0, 0, 1, 1, 1, 1], [0, 1, 2, 0, 1, 2, 3], alice + bob + [70], scale=scale)
        assert predict(fit_uc(mat), 0, 3) == pytest.approx(77.0, rel=1e-9)

    def test_rejects_nonpositive(self):
        mat = SparseRatingMatrix.from_triples([0, 1], [0, 0], [0.0, 2.0],
                                              scale=RatingScale(-1, 5))
        with pytest.raises(DataError, match="positive"):
            fit_uc(mat)


class TestPredict:
    def test_cold_start_user(self):
        mat = SparseRatingMatrix.from_triples([0, 0], [0, 1], [2, 3], shape=(2, 2))
        with pytest.raises(ColdStartError):
            predict(fit_sc(mat), 1, 0)

    def test_cold_start_item(self):
        mat = SparseRatingMatrix.from_triples([0, 1], [0, 0], [2, 3], shape=(2, 2))
        with pytest.raises(ColdStartError):
            predict(fit_uc(mat), 0, 1)

    def test_cross_component(self):
        mat = SparseRatingMatrix.from_triples([0, 1], [0, 1], [2, 3])
        with pytest.raises(CrossComponentError):
            predict(fit_sc(mat), 0, 1)

    def test_out_of_bounds(self):
        with pytest.raises(IndexError):
            predict(fit_sc(three_entry()), 5, 0)

    def test_no_clamp_by_default(self):
        mat = SparseRatingMatrix.from_triples([0, 0, 1], [0, 1, 0], [1, 5, 5])
        model = fit_sc(mat)
        assert predict(model, 1, 1) == pytest.approx(9.0)
        assert predict(model, 1, 1, clamp=True) == 5.0


class TestCompleteAll:
    def test_empty_request(self):
        res = complete_all(fit_sc(three_entry()), [])
        assert res.values.shape == (0,)

    def test_flags_cross_component_and_returns_rest(self):
        mat = SparseRatingMatrix.from_triples([0, 0, 1, 2, 3], [0, 1, 0, 2, 3], [2, 4, 3, 1, 5])
        res = complete_all(fit_sc(mat), [(1, 1), (0, 2), (2, 3), (2, 2)])
        assert res.status.tolist() == [OK, CROSS_COMPONENT, CROSS_COMPONENT, OK]
        assert res.values[0] == pytest.approx(5.0)
        assert np.isnan(res.values[1:3]).all()
        assert res.values[3] == pytest.approx(1.0)

    def test_flags_cold_start(self):
        mat = SparseRatingMatrix.from_triples([0, 0], [0, 1], [2, 3], shape=(2, 3))
        res = complete_all(fit_sc(mat), [(1, 0), (0, 2), (0, 1)])
        assert res.status.tolist() == [COLD_START, COLD_START, OK]

    def test_matches_scalar_predict(self, rng):
        mat = random_connected(rng, n_max=10)
        model = fit_uc(mat)
        req = [(u, i) for u in range(mat.n_users) for i in range(mat.n_items)]
        res = complete_all(model, req)
        assert all(res.values[k] == predict(model, u, i) for k, (u, i) in enumerate(req))


@st.composite
def connected_tables(draw):
    n = draw(st.integers(2, 8))
    m = draw(st.integers(2, 8))
    vals = draw(st.lists(st.floats(1, 5), min_size=n * m, max_size=n * m))
    mask = draw(st.lists(st.booleans(), min_size=n * m, max_size=n * m))
    table = np.where(np.reshape(mask, (n, m)), np.reshape(vals, (n, m)), np.nan)
    table[:, 0] = np.reshape(vals, (n, m))[:, 0]  # first column links every user
    table[0, :] = np.reshape(vals, (n, m))[0, :]  # first row links every item
    return table


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(table=connected_tables(), data=st.data())
    def test_shift_equivariance(self, table, data):
        n, m = table.shape
        s = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=n, max_size=n)))
        t = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=m, max_size=m)))
        base = fit_sc(SparseRatingMatrix.from_dense(table, WIDE))
        moved = fit_sc(SparseRatingMatrix.from_dense(table + s[:, None] + t[None, :], WIDE))
        grid = [(u, i) for u in range(n) for i in range(m)]
        a = complete_all(base, grid).values + np.array([s[u] + t[i] for u, i in grid])
        np.testing.assert_allclose(complete_all(moved, grid).values, a, rtol=0, atol=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(table=connected_tables(), data=st.data())
    def test_unit_equivariance(self, table, data):
        n, m = table.shape
        p = np.array(data.draw(st.lists(st.floats(0.2, 5), min_size=n, max_size=n)))
        q = np.array(data.draw(st.lists(st.floats(0.2, 5), min_size=m, max_size=m)))
        base = fit_uc(SparseRatingMatrix.from_dense(table, WIDE))
        moved = fit_uc(SparseRatingMatrix.from_dense(table * p[:, None] * q[None, :], WIDE))
        grid = [(u, i) for u in range(n) for i in range(m)]
        a = complete_all(base, grid).values * np.array([p[u] * q[i] for u, i in grid])
        np.testing.assert_allclose(complete_all(moved, grid).values, a, rtol=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(table=connected_tables())
    def test_log_equivalence(self, table):
        n, m = table.shape
        grid = [(u, i) for u in range(n) for i in range(m)]
        uc = complete_all(fit_uc(SparseRatingMatrix.from_dense(table, WIDE)), grid).values
        sc = complete_all(fit_sc(SparseRatingMatrix.from_dense(np.log(table), WIDE)), grid).values
        np.testing.assert_allclose(uc, np.exp(sc), rtol=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(table=connected_tables())
    def test_least_squares_oracle(self, table):
        alpha, beta, _, _ = additive_lstsq(table)
        model = fit_sc(SparseRatingMatrix.from_dense(table, WIDE))
        np.testing.assert_allclose(model.row_param, alpha, atol=1e-8)
        np.testing.assert_allclose(model.col_param, beta, atol=1e-8)

    def test_least_squares_oracle_disconnected(self, rng):
        table = np.full((6, 6), np.nan)
        table[:3, :2] = rng.uniform(1, 5, (3, 2))
        table[3:, 2:] = np.where(rng.random((3, 4)) < 0.7, rng.uniform(1, 5, (3, 4)), np.nan)
        table[3:, 2] = 4.0
        table[3, 2:] = 2.0
        alpha, beta, _, _ = additive_lstsq(table)
        model = fit_sc(SparseRatingMatrix.from_dense(table, WIDE))
        np.testing.assert_allclose(model.row_param, alpha, atol=1e-8)
        np.testing.assert_allclose(model.col_param, beta, atol=1e-8)

    @pytest.mark.parametrize("kind", ["uc", "sc"])
    def test_consensus_order(self, kind):
        res = audit_consensus_order(MethodSpec(kind), trials=200, seed=7)
        assert res.violations == 0


class TestSerialization:
    @pytest.mark.parametrize("fit", [fit_sc, fit_uc])
    def test_round_trip(self, tmp_path, fit):
        mat = SparseRatingMatrix.from_triples([0, 0, 1, 3, 3], [0, 1, 0, 2, 3], [2, 4, 3, 1, 5],
                                              shape=(4, 5))
        model = fit(mat)
        path = tmp_path / "m.txt"
        consistency.save_model(model, path)
        again = consistency.load_model(path)
        assert again.kind == model.kind
        assert again.fit_stats.iterations == model.fit_stats.iterations
        grid = [(u, i) for u in range(4) for i in range(5)]
        a, b = complete_all(model, grid), complete_all(again, grid)
        assert np.array_equal(a.status, b.status)
        np.testing.assert_array_equal(a.values, b.values)

    def test_header(self, tmp_path):
        path = tmp_path / "m.txt"
        consistency.save_model(fit_sc(three_entry()), path)
        head = path.read_text().splitlines()[:6]
        assert head[0] == "rankpref-consistency-model 1"
        assert [h.split()[0] for h in head[1:]] == ["kind", "n_users", "n_items", "tolerance",
                                                   "iterations"]

    def test_rejects_other_files(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("something else\n")
        with pytest.raises(DataError):
            consistency.load_model(path)
