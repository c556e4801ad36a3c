"""Closed-form evolution of first and second moments of ``a`` and ``a^dagger``.

First moments follow the damped, squeezed rotation

    <a(t)> = exp(-lambda t) [<a(0)> (c(t) - i omega s(t)) + mu s(t) <a^dagger(0)>]

with ``c = cos(Omega t)``, ``s = sin(Omega t) / Omega`` when ``omega > mu`` and
the hyperbolic counterparts with ``nu = sqrt(mu^2 - omega^2)`` otherwise.
Second moments are written as stationary offsets plus a homogeneous part
carrying three integration constants that are fixed by the initial data.

Quadrature conventions: ``q = sqrt(hbar / 2 m omega) (a^dagger + a)`` and
``p = i sqrt(hbar m omega / 2) (a^dagger - a)``.  The dimensionless phase-space
coordinates used by the Wigner module are ``x1 = Re alpha``, ``x2 = Im alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRegime, InvalidInput, NoStationaryState
from .params import OscillatorParams, Regime, derive

#: tolerance for the reality/conjugation invariants of moment states
MOMENT_ATOL = 1e-12


# -- oscillation kernels --------------------------------------------------

def _cosh_sqrt(z):
    """cosh(sqrt(z)) for real z of either sign."""
    z = np.asarray(z, dtype=float)
    r = np.sqrt(np.abs(z))
    return np.where(z >= 0, np.cosh(r), np.cos(r))


def _sinhc_sqrt(z):
    """sinh(sqrt(z)) / sqrt(z), analytic at z = 0."""
    z = np.asarray(z, dtype=float)
    r = np.sqrt(np.abs(z))
    small = np.abs(z) < 1e-3
    safe_r = np.where(small, 1.0, r)
    direct = np.where(z >= 0, np.sinh(safe_r), np.sin(safe_r)) / safe_r
    series = 1.0 + z / 6.0 + z**2 / 120.0 + z**3 / 5040.0
    return np.where(small, series, direct)


def _coshm1_over(z):
    """(cosh(sqrt(z)) - 1) / z, analytic at z = 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    safe_z = np.where(small, 1.0, z)
    direct = (_cosh_sqrt(safe_z) - 1.0) / safe_z
    series = 0.5 + z / 24.0 + z**2 / 720.0 + z**3 / 40320.0
    return np.where(small, series, direct)


def oscillation_kernels(t, params: OscillatorParams):
    """Return ``(c(t), s(t))`` for the regime of ``params``.

    ``c`` is cos(Omega t), cosh(nu t) or its critical limit; ``s`` is the
    matching sin(Omega t)/Omega, sinh(nu t)/nu or ``t``.  In the critical band
    the exact value is evaluated through a series in ``(mu^2 - omega^2) t^2``,
    so the flow stays an exact semigroup there.
    """
    t = np.asarray(t, dtype=float)
    dc = derive(params)
    if dc.regime is Regime.UNDERDAMPED:
        Om = dc.Omega
        return np.cos(Om * t), np.sin(Om * t) / Om
    if dc.regime is Regime.OVERDAMPED:
        nu = dc.nu
        return np.cosh(nu * t), np.sinh(nu * t) / nu
    z = (params.mu**2 - params.omega**2) * t**2
    return _cosh_sqrt(z), t * _sinhc_sqrt(z)


def _scalar(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


# -- states ---------------------------------------------------------------

@dataclass(frozen=True)
class MomentState:
    """First and second moments at one instant (fields may be arrays over t)."""

    exp_a: complex
    exp_adag: complex
    exp_a2: complex
    exp_adag2: complex
    exp_n: float
    time: float = 0.0

    @classmethod
    def coherent(cls, alpha0: complex) -> "MomentState":
        alpha0 = complex(alpha0)
        return cls(alpha0, alpha0.conjugate(), alpha0**2, alpha0.conjugate() ** 2, abs(alpha0) ** 2)

    @classmethod
    def vacuum(cls) -> "MomentState":
        return cls.coherent(0j)

    @classmethod
    def thermal(cls, nbar: float) -> "MomentState":
        return cls(0j, 0j, 0j, 0j, float(nbar))

    @classmethod
    def fock(cls, s: int) -> "MomentState":
        return cls(0j, 0j, 0j, 0j, float(s))

    def check(self, atol: float = MOMENT_ATOL) -> None:
        """Raise :class:`InvalidInput` unless the conjugation invariants hold."""
        if np.any(np.abs(np.conj(self.exp_a) - self.exp_adag) > atol):
            raise InvalidInput("exp_adag must equal conj(exp_a)")
        if np.any(np.abs(np.conj(self.exp_a2) - self.exp_adag2) > atol):
            raise InvalidInput("exp_adag2 must equal conj(exp_a2)")
        if np.any(np.abs(np.imag(self.exp_n)) > atol) or np.any(np.real(self.exp_n) < -atol):
            raise InvalidInput("exp_n must be real and non-negative")


@dataclass(frozen=True)
class IntegrationConstants:
    """Constants of the homogeneous second-moment solution.

    Over- and underdamped: the three constants multiplying the printed
    modes.  Critical: the initial deviations ``(S, -i Delta, N)`` of
    ``S = <a^2> + <a^dagger 2>``, ``Delta = <a^2> - <a^dagger 2>`` and ``<a^dagger a>``
    from their stationary values.  Physical initial data give real values.
    """

    c1: complex
    c2: complex
    c3: complex
    regime: Regime


@dataclass(frozen=True)
class QuadratureStats:
    mean_q: float
    mean_p: float
    var_q: float
    var_p: float
    cov_qp: float


# -- first moments --------------------------------------------------------

def evolve_first(initial, t, params: OscillatorParams):
    """Propagate ``(<a>, <a^dagger>)`` to time ``t`` (scalar or array)."""
    a0, ad0 = (complex(v) for v in initial)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidInput("t must be non-negative")
    c, s = oscillation_kernels(t, params)
    om, mu = params.omega, params.mu
    damp = np.exp(-params.lambda_ * t)
    a = damp * (a0 * (c - 1j * om * s) + mu * s * ad0)
    ad = damp * (ad0 * (c + 1j * om * s) + mu * s * a0)
    return _scalar(a), _scalar(ad)


# -- second moments -------------------------------------------------------

def stationary_second_moments(params: OscillatorParams) -> tuple[complex, float]:
    """Offsets ``(<a^2>_inf, <a^dagger a>_inf)`` of the second-moment solution.

    These are the long-time limits when the drift is stable; otherwise they
    are still the constant particular solution.
    """
    dc = derive(params)
    lam, om, mu = params.lambda_, params.omega, params.mu
    if dc.stability == 0:
        raise DegenerateRegime("lambda^2 + omega^2 - mu^2 = 0: no constant particular solution")
    a2 = dc.d_const * (lam - 1j * om) / (2 * lam * dc.stability) + 1j * params.d_pq / (params.hbar * lam)
    n = (dc.d_const * mu / dc.stability + dc.d2 - lam) / (2 * lam)
    return complex(a2), float(n)


def asymptotic_number(params: OscillatorParams) -> float:
    """Stationary phonon number ``<a^dagger a>(t -> inf)``."""
    if derive(params).stability <= 0:
        raise NoStationaryState("lambda^2 + omega^2 - mu^2 <= 0: moments do not relax")
    return stationary_second_moments(params)[1]


def _critical_flow(t, params):
    """exp(K t) for the shifted second-moment system in the critical band."""
    om, mu = params.omega, params.mu
    K = np.array([[0.0, 2 * om, 4 * mu], [-2 * om, 0.0, 0.0], [mu, 0.0, 0.0]])
    z = 4 * (mu**2 - om**2) * np.asarray(t, dtype=float) ** 2
    f1 = t * _sinhc_sqrt(z)
    f2 = np.asarray(t, dtype=float) ** 2 * _coshm1_over(z)
    eye = np.eye(3)
    K2 = K @ K
    return eye + np.multiply.outer(f1, K) + np.multiply.outer(f2, K2)


def _mode_rows(params: OscillatorParams):
    """t = 0 coefficient rows of (<a^2>, <a^dagger 2>, <n>) in the constants."""
    dc = derive(params)
    om, mu = params.omega, params.mu
    if dc.regime is Regime.OVERDAMPED:
        r = om / dc.nu
        k = mu / dc.nu
        return np.array([
            [1 - 1j * r, 1 + 1j * r, -1j * mu / om],
            [1 + 1j * r, 1 - 1j * r, 1j * mu / om],
            [k, -k, 1.0],
        ])
    r = om / dc.Omega
    k = mu / dc.Omega
    return np.array([
        [1.0, 1j * r, -1j * mu / om],
        [1.0, -1j * r, 1j * mu / om],
        [0.0, -k, 1.0],
    ])


def solve_constants(initial: MomentState, params: OscillatorParams) -> IntegrationConstants:
    """Fit the integration constants to the moments at ``t = 0``."""
    if initial.time != 0:
        raise InvalidInput("initial state must be given at time 0")
    dc = derive(params)
    a2_inf, n_inf = stationary_second_moments(params)
    dev = np.array([
        complex(initial.exp_a2) - a2_inf,
        complex(initial.exp_adag2) - np.conj(a2_inf),
        complex(initial.exp_n) - n_inf,
    ])
    if dc.regime is Regime.CRITICAL:
        S = dev[0] + dev[1]
        delta = dev[0] - dev[1]
        return IntegrationConstants(S, -1j * delta, dev[2], dc.regime)
    M = _mode_rows(params)
    if np.linalg.cond(M) > 1e13:
        raise DegenerateRegime("integration-constant system is singular")
    c = np.linalg.solve(M, dev)
    return IntegrationConstants(complex(c[0]), complex(c[1]), complex(c[2]), dc.regime)


def evolve_second(constants: IntegrationConstants, t, params: OscillatorParams):
    """Evaluate ``(<a^2>, <a^dagger 2>, <a^dagger a>)`` at time ``t``."""
    dc = derive(params)
    if constants.regime is not dc.regime:
        raise InvalidInput("constants were solved for a different regime")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidInput("t must be non-negative")
    a2_inf, n_inf = stationary_second_moments(params)
    C1, C2, C3 = constants.c1, constants.c2, constants.c3
    om, mu, lam = params.omega, params.mu, params.lambda_
    damp = np.exp(-2 * lam * t)

    if dc.regime is Regime.OVERDAMPED:
        nu = dc.nu
        r = om / nu
        up, down = C1 * np.exp(2 * nu * t), C2 * np.exp(-2 * nu * t)
        a2 = damp * ((1 - 1j * r) * up + (1 + 1j * r) * down - 1j * mu / om * C3) + a2_inf
        ad2 = damp * ((1 + 1j * r) * up + (1 - 1j * r) * down + 1j * mu / om * C3) + np.conj(a2_inf)
        n = damp * (mu / nu * (up - down) + C3) + n_inf
    elif dc.regime is Regime.UNDERDAMPED:
        Om = dc.Omega
        r = om / Om
        cs, sn = np.cos(2 * Om * t), np.sin(2 * Om * t)
        a2 = damp * ((C1 + 1j * C2 * r) * cs + (C2 - 1j * C1 * r) * sn - 1j * mu / om * C3) + a2_inf
        ad2 = damp * ((C1 - 1j * C2 * r) * cs + (C2 + 1j * C1 * r) * sn + 1j * mu / om * C3) + np.conj(a2_inf)
        n = damp * (mu / Om * (C1 * sn - C2 * cs) + C3) + n_inf
    else:
        y = _critical_flow(t, params) @ np.array([C1, C2, C3])
        S, Dp, N = y[..., 0], y[..., 1], y[..., 2]
        delta = 1j * Dp
        a2 = damp * (S + delta) / 2 + a2_inf
        ad2 = damp * (S - delta) / 2 + np.conj(a2_inf)
        n = damp * N + n_inf
    # complex constants (unphysical initial data) leave an imaginary part in n
    if np.all(np.abs(np.imag(n)) <= 1e-9 * (1 + np.abs(n))):
        n = np.real(n)
    return _scalar(a2), _scalar(ad2), _scalar(n)


def evolve(initial: MomentState, t, params: OscillatorParams) -> MomentState:
    """Propagate a full moment state to time(s) ``t``."""
    a, ad = evolve_first((initial.exp_a, initial.exp_adag), t, params)
    consts = solve_constants(initial, params)
    a2, ad2, n = evolve_second(consts, t, params)
    return MomentState(a, ad, a2, ad2, n, _scalar(np.asarray(t, dtype=float)))


# -- derived statistics ---------------------------------------------------

def quadratures(state: MomentState, params: OscillatorParams) -> QuadratureStats:
    """Means, variances and symmetrized covariance of ``q`` and ``p``."""
    sq = np.sqrt(params.hbar / (2 * params.mass * params.omega))
    sp = np.sqrt(params.hbar * params.mass * params.omega / 2)
    a = np.asarray(state.exp_a)
    a2 = np.asarray(state.exp_a2)
    n = np.real(np.asarray(state.exp_n))
    mean_q = sq * 2 * np.real(a)
    mean_p = sp * 2 * np.imag(a)
    var_q = sq**2 * (2 * np.real(a2) + 2 * n + 1) - mean_q**2
    var_p = sp**2 * (2 * n + 1 - 2 * np.real(a2)) - mean_p**2
    cov_qp = params.hbar * np.imag(a2) - mean_q * mean_p
    return QuadratureStats(*(_scalar(v) for v in (mean_q, mean_p, var_q, var_p, cov_qp)))


def phase_space_moments(state: MomentState):
    """Means and symmetric-ordering covariance in ``x1 = Re alpha, x2 = Im alpha``.

    Returns ``(mean, cov)`` with ``mean`` of shape (..., 2) and ``cov`` of
    shape (..., 2, 2).
    """
    a = np.asarray(state.exp_a)
    a2 = np.asarray(state.exp_a2)
    n = np.real(np.asarray(state.exp_n))
    x1, x2 = np.real(a), np.imag(a)
    s11 = (2 * np.real(a2) + 2 * n + 1) / 4 - x1**2
    s22 = (2 * n + 1 - 2 * np.real(a2)) / 4 - x2**2
    s12 = np.imag(a2) / 2 - x1 * x2
    mean = np.stack([x1, x2], axis=-1)
    cov = np.stack([np.stack([s11, s12], -1), np.stack([s12, s22], -1)], -2)
    return mean, cov
