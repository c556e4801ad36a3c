"""Fock-basis density matrix for an initial coherent state.

The Glauber P function of an initially coherent state stays Gaussian.  Its
mean is ``alpha_bar = b11 alpha0 + b12 conj(alpha0)`` and its covariance in
the complex coordinates ``(alpha, conj(alpha))`` is

    sigma(t) = sigma_inf - b(t) sigma_inf b(t)^T,   C sigma_inf + sigma_inf C^T = Q^P

with ``b(t) = expm(-C t)``.  The generating function and the closed-form
matrix elements are written in terms of the doubled matrix
``sigma_gf = 2 sigma``; with that convention the Gaussian-integral algebra
closes without extra factors.

Matrix elements use the standard convention ``rho[m, n] = <m|rho|n>``, so a
coherent state gives ``alpha0**m * conj(alpha0)**n * exp(-|alpha0|^2) / sqrt(m! n!)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import (
    GenFunctionDiverged,
    InvalidInput,
    LowPrecisionWarning,
    NoStationaryState,
    PRepresentationUnavailable,
)
from .moments import oscillation_kernels
from .params import OscillatorParams, derive

#: formula variants for the y-linear coefficient of the closed-form sum
VARIANTS = ("corrected", "printed")
DEFAULT_VARIANT = "corrected"
#: relative cancellation (sum |terms| / |sum|) flagged as LowPrecision
CANCELLATION_LIMIT = 1e6
#: tolerance when testing Q^P for positive semidefiniteness
PSD_RTOL = 1e-12


@dataclass(frozen=True)
class PropagatorB:
    """Fundamental matrix ``b(t) = expm(-C t)`` of the P-representation drift."""

    b11: complex
    b12: complex
    b21: complex
    b22: complex

    def matrix(self) -> np.ndarray:
        return np.array([[self.b11, self.b12], [self.b21, self.b22]], dtype=complex)


@dataclass(frozen=True)
class SigmaCovariance:
    """Covariance of the P Gaussian in ``(alpha, conj(alpha))`` coordinates.

    ``s11 = <(d alpha)^2>``, ``s12 = <|d alpha|^2>``, ``s22 = conj(s11)``.
    """

    s11: complex
    s22: complex
    s12: float
    det: float
    time: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]], dtype=complex)

    def real_covariance(self) -> np.ndarray:
        """Covariance of ``(Re alpha, Im alpha)``."""
        s11 = complex(self.s11)
        return 0.5 * np.array([
            [self.s12 + s11.real, s11.imag],
            [s11.imag, self.s12 - s11.real],
        ])


@dataclass(frozen=True)
class DriftDiffusionP:
    c_matrix: np.ndarray
    q_matrix: np.ndarray


@dataclass(frozen=True)
class GenFunctionParams:
    """Ingredients of the Gaussian generating function at one time.

    ``a_denom`` is ``det(sigma_gf) - 4 (sigma_gf_12 + 1)`` for the doubled
    covariance ``sigma_gf = 2 sigma``; it equals -4 at t = 0.
    """

    a_denom: float
    alpha_bar: complex
    sigma: SigmaCovariance

    @property
    def sigma_gf(self) -> tuple[complex, complex, float, float]:
        s = self.sigma
        return 2 * complex(s.s11), 2 * complex(s.s22), 2 * s.s12, 4 * s.det


@dataclass
class FockDensityMatrix:
    """Dense ``<m|rho|n>`` for ``0 <= m, n < dim``."""

    elements: np.ndarray
    time: float
    trace_deficit: float = 0.0
    hermiticity_residual: float = 0.0

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @classmethod
    def from_array(cls, elements, time=0.0) -> "FockDensityMatrix":
        rho = np.asarray(elements, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidInput("density matrix must be square")
        return cls(
            rho,
            float(time),
            float(1.0 - np.trace(rho).real),
            float(np.abs(rho - rho.conj().T).max()),
        )


def drift_diffusion_p(params: OscillatorParams) -> DriftDiffusionP:
    """Drift ``C`` and diffusion ``Q^P`` of the P-representation Fokker-Planck equation."""
    dc = derive(params)
    lam, om, mu = params.lambda_, params.omega, params.mu
    C = np.array([[lam + 1j * om, -mu], [-mu, lam - 1j * om]])
    Q = np.array([[dc.d1 + mu, dc.d2 - lam], [dc.d2 - lam, np.conj(dc.d1) + mu]])
    return DriftDiffusionP(C, Q)


def q_p_is_psd(params: OscillatorParams) -> bool:
    """Whether ``Q^P`` is a positive semidefinite real diffusion.

    In ``(alpha, conj(alpha))`` coordinates this means ``Q12 >= |Q11|``.
    """
    q = drift_diffusion_p(params).q_matrix
    q12, q11 = q[0, 1].real, abs(q[0, 0])
    return q12 >= q11 - PSD_RTOL * max(1.0, q11)


def propagator(t: float, params: OscillatorParams) -> PropagatorB:
    """``b(t)``: damped rotation mixed by ``mu``.

    For ``omega > mu`` this is the cos/sin form; for ``mu >= omega`` the same
    expression is continued to cosh/sinh (critical: limit ``s -> t``).
    """
    t = float(t)
    if t < 0:
        raise InvalidInput("t must be non-negative")
    c, s = oscillation_kernels(t, params)
    c, s = float(c), float(s)
    damp = math.exp(-params.lambda_ * t)
    b11 = damp * complex(c, -params.omega * s)
    b12 = damp * params.mu * s
    return PropagatorB(b11, b12, b12, b11.conjugate())


def sigma_infinity(params: OscillatorParams) -> SigmaCovariance:
    """Stationary P covariance solving ``C sigma + sigma C^T = Q^P`` in closed form."""
    dc = derive(params)
    lam, om, mu = params.lambda_, params.omega, params.mu
    if not (lam > 0 and dc.stability > 0):
        raise NoStationaryState("P drift is not stable (need lambda^2 + omega^2 > mu^2)")
    Q = drift_diffusion_p(params).q_matrix
    c1, c2 = lam + 1j * om, lam - 1j * om
    # eliminate s11 = (Q11/2 + mu s12)/c1 and s22 = (Q22/2 + mu s12)/c2
    rhs = Q[0, 1] + 0.5 * mu * (Q[0, 0] / c1 + Q[1, 1] / c2)
    s12 = (lam**2 + om**2) * rhs / (2 * lam * dc.stability)
    s11 = (0.5 * Q[0, 0] + mu * s12) / c1
    s22 = (0.5 * Q[1, 1] + mu * s12) / c2
    s12 = s12.real
    det = (s11 * s22).real - s12**2
    return SigmaCovariance(complex(s11), complex(s22), float(s12), float(det), math.inf)


def sigma_t(t: float, params: OscillatorParams) -> SigmaCovariance:
    """P covariance at time ``t`` for a delta initial P function."""
    inf = sigma_infinity(params)
    b = propagator(t, params).matrix()
    S = inf.matrix()
    sig = S - b @ S @ b.T
    s11, s22 = complex(sig[0, 0]), complex(sig[1, 1])
    s12 = float(sig[0, 1].real)
    det = float((s11 * s22).real - s12**2)
    return SigmaCovariance(s11, s22, s12, det, float(t))


def mean_alpha(t: float, alpha0: complex, params: OscillatorParams) -> complex:
    """``alpha_bar(t) = b11 alpha0 + b12 conj(alpha0)``."""
    b = propagator(t, params)
    alpha0 = complex(alpha0)
    return b.b11 * alpha0 + b.b12 * alpha0.conjugate()


def p_green(alpha, t: float, alpha0: complex, params: OscillatorParams):
    """Gaussian P function at ``alpha`` (scalar or array) for a delta start at ``alpha0``.

    Normalized so that ``integral P d(Re alpha) d(Im alpha) = 1``.
    """
    if not q_p_is_psd(params):
        raise PRepresentationUnavailable("Q^P is not positive semidefinite; P is not an ordinary function")
    sig = sigma_t(t, params)
    neg_det = -sig.det  # det of the complex covariance is -4 det of the real one
    if not neg_det > 0:
        raise PRepresentationUnavailable(f"P covariance is singular at t={t} (delta-like P)")
    abar = mean_alpha(t, alpha0, params)
    d = np.asarray(alpha, dtype=complex) - abar
    form = sig.s22 * d**2 + sig.s11 * np.conj(d) ** 2 - 2 * sig.s12 * np.abs(d) ** 2
    expo = np.real(form) / (2 * neg_det)
    out = np.exp(expo) / (math.pi * math.sqrt(neg_det))
    return out.item() if out.ndim == 0 else out


def gen_function_params(t: float, alpha0: complex, params: OscillatorParams) -> GenFunctionParams:
    sig = sigma_t(t, params)
    s11, s22, s12, det = 2 * sig.s11, 2 * sig.s22, 2 * sig.s12, 4 * sig.det
    a_denom = det - 4 * (s12 + 1)
    if a_denom == 0:
        raise GenFunctionDiverged("A = det(sigma) - 4(sigma_12 + 1) vanishes")
    return GenFunctionParams(float(a_denom), mean_alpha(t, alpha0, params), sig)


def _check_convergence(g: GenFunctionParams) -> None:
    """Raise unless the Gaussian integral behind the generating function converges.

    With ``P`` proportional to ``exp(-a|z|^2 + e z^2 + f conj(z)^2)`` after
    multiplying by ``exp(-|z|^2)``, convergence needs ``Re a > |conj(e) + f|``.
    A vanishing covariance (delta-like P) always converges.
    """
    s11, s22, s12, det = g.sigma_gf
    if abs(det) <= 1e-300 and abs(s11) <= 1e-300 and abs(s12) <= 1e-300:
        return
    if det == 0:
        raise GenFunctionDiverged("P covariance is singular but nonzero")
    a = 1 - 2 * s12 / det
    e = -s22 / det
    f = -s11 / det
    lhs, rhs = float(a), abs(np.conj(e) + f)
    if not lhs > rhs:
        raise GenFunctionDiverged(f"convergence needs Re a > |e* + f|: {lhs:.6g} <= {rhs:.6g}")


def generating_function(x, y, t: float, alpha0: complex, params: OscillatorParams, *, check: bool = True):
    """``F(x, y, t) = integral P exp(-|alpha|^2 + x alpha + y conj(alpha)) d^2 alpha``."""
    g = gen_function_params(t, alpha0, params)
    if check:
        _check_convergence(g)
    s11, s22, s12, _ = g.sigma_gf
    A = g.a_denom
    ab = g.alpha_bar
    X = np.asarray(x, dtype=complex) - np.conj(ab)
    Y = np.asarray(y, dtype=complex) - ab
    expo = np.asarray(x) * np.asarray(y) - (s11 * X**2 + s22 * Y**2 - 2 * (s12 + 2) * X * Y) / A
    out = 2 / math.sqrt(abs(A)) * np.exp(expo)
    return out.item() if np.ndim(out) == 0 else out


def _element_terms(m: int, n: int, g: GenFunctionParams, variant: str) -> np.ndarray:
    """All terms of the triple sum for ``<m|rho|n>`` (without the common prefactor)."""
    s11, s22, s12, det = g.sigma_gf
    A = g.a_denom
    ab = g.alpha_bar
    abc = ab.conjugate()
    lin_x = s11 * abc - (s12 + 2) * ab
    if variant == "corrected":
        lin_y = s22 * ab - (s12 + 2) * abc
    elif variant == "printed":
        lin_y = s22 * ab - 2 * (s12 + 2) * abc
    else:
        raise InvalidInput(f"unknown variant {variant!r}; choose from {VARIANTS}")
    cross = det - 2 * s12

    n3 = np.arange(0, min(m, n) + 1)
    n1 = np.arange(0, m // 2 + 1)
    n2 = np.arange(0, n // 2 + 1)
    N1, N2, N3 = np.meshgrid(n1, n2, n3, indexing="ij")
    px = m - 2 * N1 - N3
    py = n - 2 * N2 - N3
    ok = (px >= 0) & (py >= 0)
    N1, N2, N3, px, py = (v[ok] for v in (N1, N2, N3, px, py))
    k = N1 + N2 + N3

    lg = gammaln
    log_mag = (
        (m + n - 2 * k) * math.log(2.0)
        - lg(N1 + 1.0) - lg(N2 + 1.0) - lg(N3 + 1.0) - lg(px + 1.0) - lg(py + 1.0)
        + 0.5 * (math.lgamma(m + 1.0) + math.lgamma(n + 1.0))
    )
    sign = np.where((N1 + N2) % 2 == 0, 1.0, -1.0)
    powers = (
        _cpow(s11, N1) * _cpow(s22, N2) * _cpow(cross, N3)
        * _cpow(lin_x, px) * _cpow(lin_y, py) / _cpow(A, m + n - k)
    )
    return sign * np.exp(log_mag) * powers


def _cpow(base, expo):
    """Integer power with 0**0 = 1, elementwise over ``expo``."""
    expo = np.asarray(expo)
    base = complex(base)
    if base == 0:
        return np.where(expo == 0, 1.0 + 0j, 0j)
    return np.power(base, expo.astype(float))


def _prefactor(g: GenFunctionParams) -> complex:
    s11, s22, s12, _ = g.sigma_gf
    ab = g.alpha_bar
    abc = ab.conjugate()
    expo = -(s22 * ab**2 + s11 * abc**2 - 2 * (s12 + 2) * abs(ab) ** 2) / g.a_denom
    return 2 / math.sqrt(abs(g.a_denom)) * np.exp(expo)


def _fsum_complex(terms: np.ndarray) -> complex:
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def rho_element(m: int, n: int, t: float, alpha0: complex, params: OscillatorParams,
                *, variant: str = DEFAULT_VARIANT) -> complex:
    """``<m|rho(t)|n>`` from the closed-form triple sum.

    Terms are built from log-factorials and summed with compensated
    summation.  Emits :class:`LowPrecisionWarning` when cancellation exceeds
    ``CANCELLATION_LIMIT``.
    """
    if m < 0 or n < 0 or int(m) != m or int(n) != n:
        raise InvalidInput("m and n must be non-negative integers")
    if not q_p_is_psd(params):
        raise PRepresentationUnavailable(
            "Q^P is not positive semidefinite; use the Fock-space oracle instead"
        )
    g = gen_function_params(t, alpha0, params)
    return _element(int(m), int(n), g, variant)


def _element(m, n, g, variant):
    terms = _element_terms(m, n, g, variant)
    total = _fsum_complex(terms)
    scale = float(np.abs(terms).sum())
    if scale > 0 and scale > CANCELLATION_LIMIT * abs(total):
        warnings.warn(
            f"<{m}|rho|{n}>: cancellation factor {scale / max(abs(total), 1e-300):.3g}",
            LowPrecisionWarning,
            stacklevel=3,
        )
    return complex(_prefactor(g) * total)


def rho_matrix(dim: int, t: float, alpha0: complex, params: OscillatorParams,
               *, variant: str = DEFAULT_VARIANT) -> FockDensityMatrix:
    """Batch of :func:`rho_element` over ``0 <= m, n < dim``."""
    if dim < 1 or int(dim) != dim:
        raise InvalidInput("dim must be a positive integer")
    if not q_p_is_psd(params):
        raise PRepresentationUnavailable(
            "Q^P is not positive semidefinite; use the Fock-space oracle instead"
        )
    g = gen_function_params(t, alpha0, params)
    rho = np.empty((dim, dim), dtype=complex)
    for m in range(dim):
        for n in range(dim):
            rho[m, n] = _element(m, n, g, variant)
    return FockDensityMatrix.from_array(rho, t)
