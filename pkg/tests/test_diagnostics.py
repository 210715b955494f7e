import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from kladder import diagnostics as dg
from kladder.dynamics import ForcingField, make_forcing
from kladder.spectral_core import h_norm, make_grid, random_field, shear_mode, single_mode, zeros

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def grid():
    return make_grid(16, TWO_PI)


class TestTau:
    def test_value(self):
        assert dg.tau(0.01, 1.0, 1e6, 0.125) == pytest.approx(100 * 10 ** -3.75, rel=1e-12)
        assert dg.tau(0.01, 1.0, 1e6, 0.125) == pytest.approx(1.77828e-2, rel=1e-5)

    def test_unit(self):
        assert dg.tau(1.0, 1.0, 1.0, 0.1) == 1.0

    def test_monotone_in_Gr(self):
        vals = [dg.tau(0.01, 1.0, g, 0.1) for g in np.logspace(0, 12, 25)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("delta", [0.0, 1 / 6, -0.1])
    def test_delta_range(self, delta):
        with pytest.raises(ValueError):
            dg.tau(0.01, 1.0, 10.0, delta)


class TestF:
    def test_tau_zero(self, grid):
        u = random_field(grid, seed=1)
        f = make_forcing(1.0, 0.2, 0, grid)
        F = dg.f_values(u, f, 0.0, 3)
        for n in range(4):
            assert F[n] == h_norm(u, n)

    def test_rest(self, grid):
        f = make_forcing(0.5, 0.2, 0, grid)
        tau = 0.3
        F = dg.f_values(zeros(grid), f, tau, 3)
        for n in range(4):
            assert F[n] == pytest.approx(tau ** 2 * 2.0 ** (2 * n) * f.norm2, rel=1e-12)

    def test_analytic_sum(self):
        g = make_grid(8, TWO_PI)
        u = shear_mode(g, 1.0, 1)
        f = make_forcing(1.0, 0.1, 4, g)
        tau = 0.5
        h0 = TWO_PI ** 3 / 2
        fnorm = 0.01 * TWO_PI ** 3
        for n in range(4):
            assert dg.f_n(u, f, tau, n) == pytest.approx(h0 + tau ** 2 * fnorm, rel=1e-12)


class TestKappa:
    def test_single_mode(self):
        g = make_grid(16, TWO_PI)
        u = shear_mode(g, 1.0, 3)
        for n in range(1, 5):
            assert dg.kappa(u, None, 0.0, n) == pytest.approx(3.0, rel=1e-13)

    def test_two_modes(self):
        g = make_grid(16, TWO_PI)
        u = single_mode(g, (0, 0, 1), (1, 0, 0)) + single_mode(g, (0, 0, 2), (1, 0, 0))
        assert dg.kappa(u, None, 0.0, 1) == pytest.approx(math.sqrt(2.5), rel=1e-12)
        assert dg.kappa(u, None, 0.0, 1) == pytest.approx(1.581139, abs=1e-6)
        assert dg.kappa(u, None, 0.0, 2) == pytest.approx(8.5 ** 0.25, rel=1e-12)
        assert dg.kappa(u, None, 0.0, 2) == pytest.approx(1.707476, abs=1e-6)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000), s=st.floats(1e-3, 1e3))
    def test_ordering_and_scale_invariance(self, seed, s):
        g = make_grid(8, TWO_PI)
        u = random_field(g, seed=seed)
        k1 = dg.kappa(u, None, 0.0, 1)
        k2 = dg.kappa(u, None, 0.0, 2)
        k21 = dg.kappa(u, None, 0.0, 2, 1)
        assert k1 <= k2 * (1 + 1e-10)
        assert k2 <= k21 * (1 + 1e-10)
        assert dg.kappa(u * s, None, 0.0, 2) == pytest.approx(k2, rel=1e-12)

    def test_lower_bound_by_box(self):
        g = make_grid(16, TWO_PI)
        u = random_field(g, seed=1)
        assert dg.kappa(u, None, 0.0, 1) >= 1.0 / g.L


class TestSample:
    def test_columns_and_row(self, grid):
        u = random_field(grid, seed=2)
        f = make_forcing(1.0, 0.2, 0, grid)
        s = dg.make_sample(0.5, u, f, 0.1, n_max=3)
        names = dg.column_names(3)
        assert len(names) == len(s.row())
        assert names[:3] == ["t", "H0", "H1"]
        assert "kappa_3_2" in names and "Y3" in names and names[-1] == "ebal"
        assert math.isnan(s.row()[-1])
        for n in range(4):
            assert s.F[n] >= 0.01 * f.grad_norm2(n)

    def test_csv_round_trip(self, tmp_path, grid):
        f = make_forcing(1.0, 0.2, 0, grid)
        samples = [dg.make_sample(0.1 * i, random_field(grid, seed=i), f, 0.1, 2, ebal=1e-7 * i)
                   for i in range(4)]
        with dg.SampleWriter(tmp_path / "s.csv", 2) as w:
            for s in samples:
                w.write(s)
        cols = dg.read_samples(tmp_path / "s.csv")
        direct = dg.columns(samples)
        for k in direct:
            np.testing.assert_array_equal(cols[k], direct[k])
        assert dg.n_max_of(cols) == 2

    def test_missing_columns(self):
        with pytest.raises(KeyError):
            dg.require({"t": np.zeros(2)}, ["t", "kappa_3"])


class TestAverages:
    def test_constant(self):
        avg = dg.RunningAverages()
        for t in np.linspace(0, 5, 11):
            avg.update(t, {"x": 2.5})
        assert avg.average("x") == pytest.approx(2.5, abs=1e-15)

    def test_linear(self):
        avg = dg.RunningAverages()
        a, T = 3.0, 7.0
        for t in np.linspace(0, T, 23):
            avg.update(t, {"x": a * t})
        assert avg.average("x") == pytest.approx(a * T / 2, abs=1e-12)
        assert avg.average("x", t_start=T / 2) == pytest.approx(a * 3 * T / 4, rel=1e-12)

    def test_sine(self):
        T, n = 2 * math.pi, 200
        t = np.linspace(0, T, n + 1)
        assert abs(dg.time_average(t, np.sin(t))) < 2 * (T / n) / T

    def test_time_regression(self):
        avg = dg.RunningAverages().update(1.0, {"x": 1.0})
        with pytest.raises(ValueError):
            avg.update(1.0, {"x": 1.0})

    def test_sub_horizon_matches_batch(self):
        t = np.linspace(0, 10, 41)
        y = np.exp(-t / 3) + t ** 2
        avg = dg.RunningAverages()
        for a, b in zip(t, y):
            avg.update(a, {"y": b})
        sl = dg.burn_in_slice(t, 0.2)
        assert avg.average("y", t_start=t[sl][0]) == pytest.approx(dg.time_average(t[sl], y[sl]), rel=1e-12)

    def test_update_from_samples(self, grid):
        f = make_forcing(1.0, 0.2, 0, grid)
        samples = [dg.make_sample(0.1 * i, random_field(grid, seed=i), f, 0.1, 2) for i in range(5)]
        avg = dg.RunningAverages(L=grid.L, mu=0.55)
        for s in samples:
            dg.update_averages(avg, s)
        batch = dg.averages_from_columns(dg.columns(samples), grid.L, 0.55, burn_in=0.0)
        for k, v in batch.items():
            assert avg.average(k) == pytest.approx(v, rel=1e-12)


class TestBulk:
    def _cols(self, H0, H1, kappa1, t=None):
        t = np.linspace(0, 1, len(H0)) if t is None else t
        return {"t": t, "H0": np.asarray(H0, float), "H1": np.asarray(H1, float),
                "kappa_1": np.asarray(kappa1, float)}

    def test_grashof(self):
        assert dg.grashof(0.01, 1.0, 0.1) == pytest.approx(1.0)

    def test_reynolds_and_kolmogorov(self):
        L, nu = 2.0, 0.01
        # U = 1: H0 = L^3; eps = nu^3: H1 = nu^2 L^3
        cols = self._cols([L ** 3] * 5, [nu ** 2 * L ** 3] * 5, [3.0] * 5)
        b = dg.bulk_parameters(cols, L, 1.0, nu, 0.5, burn_in=0.0)
        assert b.U == pytest.approx(1.0)
        assert b.Re == pytest.approx(100.0)
        assert b.eta_k_inv == pytest.approx(1.0)
        assert b.taylor_inv == pytest.approx(3.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            dg.bulk_parameters(self._cols([], [], []), 1.0, 1.0, 0.1, 0.1)


positive = arrays(np.float64, st.integers(2, 40), elements=st.floats(1e-3, 1e3))


class TestHolder:
    def test_equality_case(self):
        lhs, rhs, m = dg.holder_average_bound(np.full(10, 3.0), np.full(10, 3.0), 0.55)
        assert lhs == pytest.approx(1.0) and rhs == pytest.approx(1.0)
        assert abs(m) < 1e-14

    def test_doubled(self):
        mu = 0.55
        lhs, rhs, m = dg.holder_average_bound(np.full(8, 2.0), np.full(8, 4.0), mu)
        assert lhs == pytest.approx(2 ** ((1 - mu) / mu))
        assert rhs == pytest.approx(1.0)

    @settings(max_examples=300, deadline=None)
    @given(a=positive, growth=st.data(), mu=st.floats(0.05, 0.95))
    def test_margin_nonnegative(self, a, growth, mu):
        g = growth.draw(arrays(np.float64, a.size, elements=st.floats(1.0, 1e3)))
        lhs, rhs, m = dg.holder_average_bound(a, a * g, mu)
        assert m >= -1e-10 * rhs

    def test_fuzz_1000_lognormal(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = rng.integers(2, 200)
            a = np.exp(rng.normal(0, 4, n))
            b = a * np.exp(np.abs(rng.normal(0, 2, n)))
            t = np.cumsum(rng.uniform(0.01, 1, n))
            lhs, rhs, m = dg.holder_average_bound(a, b, 0.55, times=t)
            assert m >= -1e-10 * rhs

    def test_rejects(self):
        with pytest.raises(ValueError):
            dg.holder_average_bound([1.0, -1.0], [1.0, 1.0], 0.5)
        with pytest.raises(ValueError):
            dg.holder_average_bound([1.0], [1.0], 1.0)


class TestSobolev:
    def test_shear_finite(self):
        g = make_grid(16, TWO_PI)
        s = dg.make_sample(0.0, shear_mode(g, 1.0, 1), None, 0.0, 3)
        r = dg.sobolev_constant_estimates([s])
        assert all(np.isfinite(v["max"]) and v["max"] > 0 for v in r.values())

    @pytest.mark.parametrize("scale", [1e-3, 0.5, 7.0])
    def test_scale_invariant(self, scale):
        g = make_grid(16, TWO_PI)
        u = random_field(g, seed=3)
        a = dg.sobolev_constant_estimates([dg.make_sample(0.0, u, None, 0.0, 3)])
        b = dg.sobolev_constant_estimates([dg.make_sample(0.0, u * scale, None, 0.0, 3)])
        for k in a:
            assert b[k]["max"] == pytest.approx(a[k]["max"], rel=1e-10)


class TestHorizonAverages:
    def test_constant_series_all_horizons(self):
        t = np.linspace(0, 10, 51)
        one = np.ones_like(t)
        cols = {"t": t, "kappa_1": 2 * one, "F0": one, "F1": 4 * one, "F2": 16 * one, "H0": one, "H1": 4 * one,
                "umax": one, "gradmax": one}
        rows = dg.horizon_averages(cols, 1.0, 0.55, burn_in=0.2)
        assert [r["tEnd"] for r in rows] == pytest.approx([2.6, 5.0, 7.6, 10.0][-len(rows):], abs=0.21)
        assert all(r["averages"]["kappa1_sq"] == pytest.approx(4.0) for r in rows)

    def test_last_horizon_matches_batch(self):
        rng = np.random.default_rng(0)
        t = np.cumsum(rng.uniform(0.1, 0.3, 40))
        k = np.exp(rng.normal(size=40))
        cols = {"t": t, "kappa_1": k, "F0": np.ones(40), "F1": k ** 2, "F2": k ** 4, "H0": np.ones(40),
                "H1": k ** 2, "umax": k, "gradmax": k ** 2}
        last = dg.horizon_averages(cols, 1.0, 0.55, 0.3)[-1]["averages"]
        batch = dg.averages_from_columns(cols, 1.0, 0.55, burn_in=0.3)
        for name, v in batch.items():
            assert last[name] == pytest.approx(v, rel=1e-12)
