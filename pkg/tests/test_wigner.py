import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lindblad_oscillator.adjudication import ou_covariance
from lindblad_oscillator.errors import (
    InvalidInput,
    NoStationaryState,
    SingularInitialCondition,
    UnsupportedRegime,
)
from lindblad_oscillator.moments import MomentState, evolve, evolve_first, phase_space_moments
from lindblad_oscillator.params import OscillatorParams
from lindblad_oscillator.wigner import (
    GridSpec,
    WignerKind,
    delta_solution,
    drift_diffusion_w,
    evaluate_grid,
    lyapunov_residual,
    mean_trajectory,
    steady_covariance_closed_form,
    steady_covariance_lyapunov,
    steady_state,
    total_mass,
    transform,
    wavepacket_solution,
)

GIBBS = OscillatorParams.thermal(1.0, 0.3, 1.0)
GENERIC = OscillatorParams(1.0, 1.0, 1.1, 0.7, 0.4, 0.9, 0.8, 0.15)
SQUEEZED = OscillatorParams(1.0, 1.0, 1.3, 0.5, 0.9, 1.2, 0.6, -0.2)
OVERDAMPED = OscillatorParams(1.0, 1.0, 0.8, 1.2, 1.0, 1.4, 1.3, -0.1)
UNDER = [GIBBS, GENERIC, SQUEEZED]
IDS = ["gibbs", "generic", "squeezed"]


def random_underdamped(rng):
    om = rng.uniform(0.5, 2.0)
    lam = rng.uniform(0.2, 2.0)
    mu = rng.uniform(0, 0.9 * om)
    d_pq = rng.uniform(-0.3, 0.3)
    d_pp = rng.uniform(0.3, 2.0)
    hbar = rng.uniform(0.5, 2)
    d_qq = ((lam * hbar) ** 2 / 4 + d_pq**2) / d_pp * rng.uniform(1.0, 2.0)
    return OscillatorParams(hbar, rng.uniform(0.5, 2), om, lam, mu, d_pp, d_qq, d_pq)


class TestTransform:
    def test_mu_zero(self):
        p = OscillatorParams(1.0, 1.0, 1.4, 0.6, 0.0, 1.0, 1.0, 0.0)
        ts = transform(p)
        assert ts.a_coef == pytest.approx(-1j, abs=1e-15)
        assert ts.nu1 == pytest.approx(-0.6 - 1.4j, abs=1e-15)

    def test_d12_substitution(self):
        p = OscillatorParams(1.0, 1.0, 1.0, 0.5, 0.3, 0.9, 0.7, 0.0)
        assert transform(p).d12 == pytest.approx(1.6, rel=1e-15)

    @pytest.mark.parametrize("p", UNDER, ids=IDS)
    def test_drift_eigenvalues(self, p):
        ts = transform(p)
        ev = np.sort_complex(np.linalg.eigvals(drift_diffusion_w(p).a_matrix))
        np.testing.assert_allclose(ev, np.sort_complex([-ts.nu1, -ts.nu2]), atol=1e-14)

    @pytest.mark.parametrize("p", UNDER, ids=IDS)
    def test_coordinates_diagonalize_drift(self, p):
        # z = a x1 + x2 evolves as dz/dt = nu1 z under x' = -A x
        ts = transform(p)
        row = np.array([ts.a_coef, 1.0])
        np.testing.assert_allclose(-row @ drift_diffusion_w(p).a_matrix, ts.nu1 * row, atol=1e-14)

    @pytest.mark.parametrize("p", UNDER, ids=IDS)
    def test_diffusion_in_new_coordinates(self, p):
        ts = transform(p)
        T = np.array([[ts.a_coef, 1.0], [np.conj(ts.a_coef), 1.0]])
        Dz = T @ drift_diffusion_w(p).qw_matrix @ T.T
        # d11 and d12 share one normalization, so only their ratio is fixed by the coordinate change
        scale = Dz[0, 1].real / ts.d12
        assert Dz[0, 0] == pytest.approx(scale * ts.d11, rel=1e-13)
        assert ts.d22 == np.conj(ts.d11)

    def test_overdamped_unsupported(self):
        with pytest.raises(UnsupportedRegime):
            transform(OVERDAMPED)
        with pytest.raises(UnsupportedRegime):
            wavepacket_solution(0.1, 0.2, 1.0, OVERDAMPED)


class TestMean:
    def test_t0(self):
        assert mean_trajectory(0.3, -0.7, 0.0, GENERIC) == (0.3, -0.7)

    def test_mu_zero_rotation(self):
        p = OscillatorParams(1.0, 1.0, 1.4, 0.6, 0.0, 1.0, 1.0, 0.0)
        x1, x2 = mean_trajectory(0.3, -0.7, 2.0, p)
        z = (0.3 - 0.7j) * np.exp(-(0.6 + 1.4j) * 2.0)
        assert (x1, x2) == pytest.approx((z.real, z.imag), abs=1e-15)

    @pytest.mark.parametrize("p", UNDER + [OVERDAMPED], ids=IDS + ["over"])
    def test_matches_first_moments(self, p):
        ts = np.linspace(0, 6, 25)
        a0 = 0.3 - 0.7j
        x1, x2 = mean_trajectory(a0.real, a0.imag, ts, p)
        a, _ = evolve_first((a0, np.conj(a0)), ts, p)
        assert np.abs(x1 - a.real).max() < 1e-12
        assert np.abs(x2 - a.imag).max() < 1e-12

    def test_negative_time(self):
        with pytest.raises(InvalidInput):
            mean_trajectory(0, 0, -1.0, GENERIC)


class TestWavePacket:
    @pytest.mark.parametrize("p", UNDER, ids=IDS)
    def test_initial_packet(self, p):
        w = wavepacket_solution(0.4, -0.2, 0.0, p)
        x1, x2 = np.meshgrid(np.linspace(-2, 2, 41), np.linspace(-2, 2, 41))
        expected = 2 / np.pi * np.exp(-2 * ((x1 - 0.4) ** 2 + (x2 + 0.2) ** 2))
        np.testing.assert_allclose(w.pdf(x1, x2), expected, rtol=0, atol=1e-10)

    @pytest.mark.parametrize("p", UNDER, ids=IDS)
    @pytest.mark.parametrize("t", [0.0, 0.5, 2.0])
    def test_normalized(self, p, t):
        assert total_mass(wavepacket_solution(0.4, -0.2, t, p)) == pytest.approx(1.0, abs=1e-7)

    @pytest.mark.parametrize("p", UNDER, ids=IDS)
    def test_covariance_matches_moments(self, p):
        a0 = 0.4 - 0.2j
        w = wavepacket_solution(a0.real, a0.imag, 1.0, p)
        mean, cov = phase_space_moments(evolve(MomentState.coherent(a0), 1.0, p))
        np.testing.assert_allclose(w.mean, mean, atol=1e-12)
        np.testing.assert_allclose(w.covariance(), cov, atol=1e-12)

    @pytest.mark.parametrize("p", UNDER, ids=IDS)
    def test_normalization_matches_determinant(self, p):
        w = wavepacket_solution(0.1, 0.1, 1.7, p)
        assert w.prefactor == pytest.approx(1 / (2 * np.pi * math.sqrt(np.linalg.det(w.covariance()))),
                                            rel=1e-12)

    def test_kind(self):
        assert wavepacket_solution(0, 0, 1, GENERIC).kind is WignerKind.WAVE_PACKET

    def test_negative_time(self):
        with pytest.raises(InvalidInput):
            wavepacket_solution(0, 0, -0.1, GENERIC)

    def test_unknown_variant(self):
        with pytest.raises(InvalidInput):
            wavepacket_solution(0, 0, 1.0, GENERIC, variant="other")


class TestDelta:
    def test_zero_time_singular(self):
        with pytest.raises(SingularInitialCondition):
            delta_solution(0.1, 0.2, 0.0, GENERIC)

    def test_shrinks_as_t_to_zero(self):
        traces = [np.trace(delta_solution(0.1, 0.2, t, GENERIC).covariance()) for t in (1e-1, 1e-2, 1e-3)]
        assert traces[0] > traces[1] > traces[2] > 0
        assert traces[2] < 1e-2

    @pytest.mark.parametrize("p", UNDER, ids=IDS)
    def test_normalized(self, p):
        assert total_mass(delta_solution(0.1, 0.2, 1.0, p)) == pytest.approx(1.0, abs=1e-7)

    @pytest.mark.parametrize("p", UNDER, ids=IDS)
    def test_relaxes_to_steady_state(self, p):
        w = delta_solution(0.1, 0.2, 30 / p.lambda_, p)
        sigma, _ = steady_state(p)
        np.testing.assert_allclose(w.covariance(), sigma.matrix(), rtol=0, atol=1e-8)

    @pytest.mark.parametrize("p", UNDER, ids=IDS)
    @pytest.mark.parametrize("t", [0.3, 1.0, 2.5])
    def test_matches_ou_covariance(self, p, t):
        w = delta_solution(0.1, 0.2, t, p)
        np.testing.assert_allclose(w.covariance(), ou_covariance(t, np.zeros((2, 2)), p), atol=1e-12)

    @pytest.mark.parametrize("p", UNDER, ids=IDS)
    def test_ornstein_uhlenbeck_flow(self, p):
        dd = drift_diffusion_w(p)
        A, Q = dd.a_matrix, dd.qw_matrix
        t, h = 1.1, 1e-4
        cov = {s: delta_solution(0.1, 0.2, t + s, p).covariance() for s in (-h, 0, h)}
        deriv = (cov[h] - cov[-h]) / (2 * h)
        resid = deriv - (-A @ cov[0] - cov[0] @ A.T + Q)
        assert np.abs(resid).max() < 1e-7

    @pytest.mark.parametrize("t", [0.2, 1.0, 4.0])
    def test_same_mean_as_wave_packet(self, t):
        a = wavepacket_solution(0.5, -0.3, t, GENERIC)
        b = delta_solution(0.5, -0.3, t, GENERIC)
        assert (a.mean_x1, a.mean_x2) == (b.mean_x1, b.mean_x2)

    def test_wave_packet_is_delta_plus_spread_initial_width(self):
        # the OU flow maps the initial covariance linearly, so the two solutions differ by it
        t = 1.3
        a = wavepacket_solution(0.0, 0.0, t, GENERIC).covariance()
        b = delta_solution(0.0, 0.0, t, GENERIC).covariance()
        np.testing.assert_allclose(a - b, ou_covariance(t, np.eye(2) / 4, GENERIC)
                                   - ou_covariance(t, np.zeros((2, 2)), GENERIC), atol=1e-12)


@given(st.integers(0, 10**6), st.floats(0.05, 6.0))
def test_quadratic_forms_positive_definite(seed, t):
    p = random_underdamped(np.random.default_rng(seed))
    for w in (wavepacket_solution(0.3, 0.1, t, p), delta_solution(0.3, 0.1, t, p)):
        assert np.linalg.eigvalsh(w.precision()).min() > 0
        assert w.prefactor > 0


class TestSteady:
    @pytest.mark.parametrize("kT", [0.3, 1.0, 5.0])
    def test_gibbs_mu_zero(self, kT):
        p = OscillatorParams.thermal(0.8, 0.0, kT)
        s = steady_covariance_closed_form(p)
        c = 1 / math.tanh(1 / (2 * kT))
        assert s.s11 == pytest.approx(c / 4, abs=1e-12)
        assert s.s22 == pytest.approx(c / 4, abs=1e-12)
        assert abs(s.s12) < 1e-12

    def test_zero_temperature_is_vacuum(self):
        s = steady_covariance_closed_form(OscillatorParams.thermal(0.8, 0.0, 1e-3))
        assert (s.s11, s.s22, s.s12) == pytest.approx((0.25, 0.25, 0.0), abs=1e-12)

    def test_gibbs_value(self):
        # [DERIVED] coth(1/2)/4, frozen
        s = steady_covariance_closed_form(OscillatorParams.thermal(1.0, 0.0, 1.0))
        assert s.s11 == pytest.approx(0.5409883534346632, rel=1e-13)

    def test_random_lyapunov(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            p = random_underdamped(rng)
            s = steady_covariance_closed_form(p)
            assert lyapunov_residual(s.matrix(), p) < 1e-12
            np.testing.assert_allclose(s.matrix(), steady_covariance_lyapunov(p), atol=1e-12)

    def test_overdamped_supported(self):
        s, w = steady_state(OVERDAMPED)
        assert s.lyapunov_residual < 1e-12
        assert np.linalg.eigvalsh(s.matrix()).min() > 0
        assert total_mass(w) == pytest.approx(1.0, abs=1e-7)

    def test_wigner_assembly(self):
        s, w = steady_state(GENERIC)
        np.testing.assert_allclose(w.covariance(), s.matrix(), atol=1e-14)
        assert w.kind is WignerKind.STEADY and w.time == math.inf
        assert tuple(w.mean) == (0.0, 0.0)

    def test_unstable(self):
        p = OscillatorParams(1.0, 1.0, 1.0, 0.5, 1.2, 2.0, 2.0, 0.0)
        with pytest.raises(NoStationaryState):
            steady_state(p)

    def test_gibbs_determinant_scan(self):
        kts = np.linspace(0.05, 5, 40)
        dets = []
        for kT in kts:
            m = steady_covariance_closed_form(OscillatorParams.thermal(1.0, 0.0, kT)).matrix()
            dets.append(np.linalg.det(m))
        dets = np.array(dets)
        assert dets.min() >= 1 / 16 - 1e-15
        assert np.all(np.diff(dets) > 0)


class TestGrid:
    def test_parity_of_steady_state(self):
        _, w = steady_state(GENERIC)
        g = evaluate_grid(w, GridSpec(-2, 2, -2, 2, 41, 41))
        np.testing.assert_allclose(g.values, g.values[::-1, ::-1], rtol=1e-14)

    def test_peak_at_mean(self):
        w = wavepacket_solution(0.6, -0.4, 1.0, GENERIC)
        g = evaluate_grid(w, {"x1_min": -3, "x1_max": 3, "x2_min": -3, "x2_max": 3, "n1": 601, "n2": 601})
        i, j = np.unravel_index(np.argmax(g.values), g.values.shape)
        assert abs(g.x1[i] - w.mean_x1) <= 0.01 and abs(g.x2[j] - w.mean_x2) <= 0.01
        assert g.values.min() >= 0

    def test_mass_converges_with_width(self):
        _, w = steady_state(GENERIC)
        errs = [abs(evaluate_grid(w, GridSpec(-L, L, -L, L, 401, 401)).mass - 1) for L in (2.0, 4.0, 8.0)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 1e-8

    def test_layout(self):
        w = wavepacket_solution(0.6, -0.4, 1.0, GENERIC)
        g = evaluate_grid(w, GridSpec(-1, 1, -2, 2, 3, 5))
        assert g.values.shape == (3, 5)
        assert g.values[2, 1] == pytest.approx(w.pdf(1.0, -1.0), rel=1e-15)

    @pytest.mark.parametrize("spec", [
        (0, 0, -1, 1, 5, 5),
        (1, -1, -1, 1, 5, 5),
        (-1, 1, -1, 1, 1, 5),
        (-1, math.inf, -1, 1, 5, 5),
    ])
    def test_degenerate(self, spec):
        with pytest.raises(InvalidInput):
            GridSpec(*spec)

    def test_parse(self):
        assert GridSpec.parse("-1,1,-2,2,3,4") == GridSpec(-1, 1, -2, 2, 3, 4)
        with pytest.raises(InvalidInput):
            GridSpec.parse("-1,1,2")
        with pytest.raises(InvalidInput):
            GridSpec.parse("a,1,-2,2,3,4")
