import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kladder.spectral_core import (
    SpectralField,
    dealias,
    divergence_defect,
    from_physical,
    h_norm,
    h_norms,
    hermitian_defect,
    make_grid,
    physical,
    project_div_free,
    random_field,
    read_checkpoint,
    shear_mode,
    shell_spectrum,
    single_mode,
    sup_norms,
    to_physical,
    write_checkpoint,
    zeros,
)

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def g16():
    return make_grid(16, TWO_PI)


class TestGrid:
    def test_fundamental_and_max(self):
        g = make_grid(8, TWO_PI)
        assert g.k0 == pytest.approx(1.0)
        assert g.max_component == pytest.approx(4.0)

    def test_scaled_box(self):
        assert make_grid(8, math.pi).k0 == pytest.approx(2.0)

    @pytest.mark.parametrize("N", [7, 6, 0, -8])
    def test_bad_N(self, N):
        with pytest.raises(ValueError):
            make_grid(N, TWO_PI)

    def test_bad_L(self):
        with pytest.raises(ValueError):
            make_grid(8, 0.0)

    def test_components_bounded_and_single_zero_mode(self, g16):
        k = g16.wavevectors
        assert np.abs(k).max() <= g16.N / 2 * g16.k0 + 1e-12
        assert int((g16.k2 == 0).sum()) == 1

    def test_dealias_mask_cutoff(self):
        g = make_grid(32, TWO_PI)
        m = g.integer_modes
        assert g.dealias_mask[g.mode_index(10, -10, 10)]
        assert not g.dealias_mask[g.mode_index(11, 0, 0)]
        assert abs(m).max() == 16


class TestHNorm:
    def test_shear_k1(self):
        g = make_grid(8, TWO_PI)
        h = h_norms(shear_mode(g, 1.0, 1), 2)
        h0 = TWO_PI ** 3 / 2
        assert h[0] == pytest.approx(h0, rel=1e-13)
        assert h[0] == pytest.approx(124.025106721, rel=1e-9)
        assert h[1] == pytest.approx(h0, rel=1e-13)
        assert h[2] == pytest.approx(h0, rel=1e-13)

    def test_shear_k2(self, g16):
        h = h_norms(shear_mode(g16, 1.0, 2), 4)
        for n in range(5):
            assert h[n] == pytest.approx(4 ** n * h[0], rel=1e-13)

    def test_zero(self, g16):
        assert np.all(h_norms(zeros(g16), 3) == 0)

    def test_matches_physical_integral(self, g16):
        u = random_field(g16, seed=3, energy=2.0)
        v = physical(u)
        dV = (g16.L / g16.N) ** 3
        assert (v ** 2).sum() * dV == pytest.approx(h_norm(u, 0), rel=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_interpolation_on_random_fields(self, seed):
        u = random_field(make_grid(8, TWO_PI), seed=seed, energy=1.0)
        H = h_norms(u, 5)
        for N in range(1, 5):
            for p in range(1, N + 1):
                for q in range(1, 6 - N):
                    lhs = (p + q) * math.log(H[N])
                    rhs = q * math.log(H[N - p]) + p * math.log(H[N + q])
                    assert lhs <= rhs + 1e-9 * abs(rhs)


class TestSupNorms:
    def test_shear(self, g16):
        umax, gmax = sup_norms(shear_mode(g16, 1.0, 1))
        assert umax == pytest.approx(1.0, rel=1e-12)
        assert gmax == pytest.approx(1.0, rel=1e-12)

    def test_zero(self, g16):
        assert sup_norms(zeros(g16)) == (0.0, 0.0)

    def test_homogeneous(self, g16):
        a = sup_norms(shear_mode(g16, 1.0, 1))
        b = sup_norms(shear_mode(g16, 2.0, 1))
        assert b[0] == pytest.approx(2 * a[0], rel=1e-14)
        assert b[1] == pytest.approx(2 * a[1], rel=1e-14)


class TestProjection:
    def test_fixes_divergence_free(self, g16):
        u = random_field(g16, seed=1)
        assert np.allclose(project_div_free(u).coeffs, u.coeffs, atol=1e-15)

    def test_kills_gradient(self, g16):
        rng = np.random.default_rng(0)
        phi = from_physical(rng.standard_normal((g16.N,) * 3)[None], g16.N)[0]
        grad = SpectralField(g16, 1j * g16.wavevectors * phi[None])
        assert np.abs(project_div_free(grad).coeffs).max() < 1e-14

    def test_hand_example(self):
        g = make_grid(8, TWO_PI)
        f = zeros(g)
        f.coeffs[(slice(None),) + g.mode_index(1, 0, 0)] = (1, 1, 0)
        p = project_div_free(f).coeffs[(slice(None),) + g.mode_index(1, 0, 0)]
        assert np.allclose(p, (0, 1, 0))

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_idempotent_and_contracting(self, seed):
        g = make_grid(8, TWO_PI)
        rng = np.random.default_rng(seed)
        u = SpectralField(g, from_physical(rng.standard_normal((3, 8, 8, 8)), 8))
        p1 = project_div_free(u)
        p2 = project_div_free(p1)
        assert np.allclose(p1.coeffs, p2.coeffs, atol=1e-15)
        assert h_norm(p1, 0) <= h_norm(u, 0) * (1 + 1e-14)
        assert divergence_defect(p1) < 1e-12


class TestDealias:
    def test_unchanged_below_cutoff(self, g16):
        u = random_field(g16, seed=2)
        assert np.array_equal(dealias(u).coeffs, u.coeffs)

    def test_high_mode_removed(self):
        g = make_grid(32, TWO_PI)
        u = single_mode(g, (15, 0, 0), (0, 1, 0))
        assert np.abs(dealias(u).coeffs).max() == 0

    def test_mixed(self):
        g = make_grid(32, TWO_PI)
        u = single_mode(g, (15, 0, 0), (0, 1, 0)) + single_mode(g, (2, 0, 0), (0, 0, 1))
        d = dealias(u)
        assert h_norm(d, 0) <= h_norm(u, 0)
        assert h_norm(d, 0) == pytest.approx(h_norm(single_mode(g, (2, 0, 0), (0, 0, 1)), 0))
        assert np.array_equal(dealias(d).coeffs, d.coeffs)


class TestTransforms:
    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000), N=st.sampled_from([8, 12, 16]))
    def test_round_trip(self, seed, N):
        v = np.random.default_rng(seed).standard_normal((3, N, N, N))
        back = to_physical(from_physical(v, N), N)
        assert np.abs(back - v).max() <= 1e-12 * np.abs(v).max()

    def test_random_field_invariants(self, g16):
        u = random_field(g16, seed=5, energy=3.0)
        assert h_norm(u, 0) == pytest.approx(3.0, rel=1e-12)
        assert hermitian_defect(u) < 1e-15
        assert divergence_defect(u) < 1e-12
        assert np.all(u.coeffs[:, 0, 0, 0] == 0)


class TestSpectrum:
    def test_single_mode_shell_1(self):
        g = make_grid(8, TWO_PI)
        s = shell_spectrum(shear_mode(g, 1.0, 1))
        assert s.shell_energy[1] == pytest.approx(s.shell_energy.sum())

    def test_two_shells(self, g16):
        a = single_mode(g16, (1, 0, 0), (0, 1, 0))
        b = single_mode(g16, (0, 2, 0), (0.0, 0.0, 3.0))
        s = shell_spectrum(a + b)
        assert s.shell_energy[1] == pytest.approx(h_norm(a, 0))
        assert s.shell_energy[2] == pytest.approx(h_norm(b, 0))

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_parseval(self, seed):
        u = random_field(make_grid(16, TWO_PI), seed=seed)
        assert shell_spectrum(u).shell_energy.sum() == pytest.approx(h_norm(u, 0), rel=1e-10)

    def test_imposed_slope(self):
        g = make_grid(32, TWO_PI)
        u = random_field(g, seed=1, slope=-8 / 3, kmin=1, kmax=10)
        E = shell_spectrum(u).shell_energy
        ratio = E[2:11] / (np.arange(2, 11) ** (-8 / 3) * E[1])
        assert np.allclose(ratio, 1.0, rtol=1e-10)


class TestCheckpoint:
    def test_round_trip_exact(self, tmp_path, g16):
        u = random_field(g16, seed=4)
        write_checkpoint(tmp_path / "a.klad", u)
        v = read_checkpoint(tmp_path / "a.klad")
        assert v.grid == g16
        assert np.array_equal(u.coeffs, v.coeffs)

    def test_layout(self, tmp_path):
        g = make_grid(8, TWO_PI)
        u = single_mode(g, (1, 0, 0), (0, 1, 0), phase=2 + 3j)
        write_checkpoint(tmp_path / "b.klad", u)
        raw = (tmp_path / "b.klad").read_bytes()
        assert raw[:4] == b"KLAD"
        assert len(raw) == 20 + 8 ** 3 * 48
        rec = np.frombuffer(raw, "<f8", offset=20).reshape(8, 8, 8, 6)
        assert tuple(rec[1, 0, 0]) == (0.0, 0.0, 2.0, 3.0, 0.0, 0.0)

    def test_bad_magic(self, tmp_path, g16):
        write_checkpoint(tmp_path / "c.klad", zeros(g16))
        raw = bytearray((tmp_path / "c.klad").read_bytes())
        raw[:4] = b"XXXX"
        (tmp_path / "c.klad").write_bytes(bytes(raw))
        with pytest.raises(ValueError):
            read_checkpoint(tmp_path / "c.klad")

    def test_truncated(self, tmp_path, g16):
        write_checkpoint(tmp_path / "d.klad", zeros(g16))
        raw = (tmp_path / "d.klad").read_bytes()
        (tmp_path / "d.klad").write_bytes(raw[:-8])
        with pytest.raises(ValueError):
            read_checkpoint(tmp_path / "d.klad")
