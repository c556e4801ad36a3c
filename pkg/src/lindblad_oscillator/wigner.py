"""Gaussian Wigner functions in the real phase-space variables ``x1 = Re alpha, x2 = Im alpha``.

In these variables the Wigner function obeys an Ornstein-Uhlenbeck equation

    dW/dt = sum_ij A_ij d/dx_i (x_j W) + 1/2 sum_ij Q_ij d^2 W / dx_i dx_j

with constant drift ``A`` and diffusion ``Q``.  The complex coordinates
``z = a x1 + x2`` (``a = (mu - i Omega)/omega``) diagonalize the drift, which
gives closed forms for a Gaussian wave packet and for a point initial
condition.  Densities are normalized to one in ``(x1, x2)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from .errors import InvalidInput, NoStationaryState, SingularInitialCondition, UnsupportedRegime
from .moments import oscillation_kernels
from .params import OscillatorParams, Regime, derive

#: ``"printed"`` uses the |z|^2 weights g3 and 2 f3; ``"alternative"`` swaps in 2 g3 and f3
FORM_VARIANTS = ("printed", "alternative")
MASS_TOL = 1e-8


@dataclass(frozen=True)
class RealDriftDiffusionW:
    a_matrix: np.ndarray
    qw_matrix: np.ndarray


def drift_diffusion_w(params: OscillatorParams) -> RealDriftDiffusionW:
    p = params
    lam, mu, om = p.lambda_, p.mu, p.omega
    mw = p.mass * p.omega
    A = np.array([[lam - mu, -om], [om, lam + mu]])
    Q = np.array([[mw * p.d_qq, p.d_pq], [p.d_pq, p.d_pp / mw]]) / p.hbar
    return RealDriftDiffusionW(A, Q)


@dataclass(frozen=True)
class TransformedSystem:
    """Coefficients after ``z1 = a x1 + x2``, ``z2 = conj(z1)``."""

    a_coef: complex
    nu1: complex
    d11: complex
    d12: float
    Omega: float

    @property
    def nu2(self) -> complex:
        return self.nu1.conjugate()

    @property
    def d22(self) -> complex:
        return self.d11.conjugate()


def transform(params: OscillatorParams) -> TransformedSystem:
    """Diagonalizing coordinates; only defined while ``mu < omega``."""
    dc = derive(params)
    if dc.regime is not Regime.UNDERDAMPED:
        raise UnsupportedRegime(
            f"closed-form Wigner solutions need mu < omega (got mu={params.mu}, omega={params.omega})"
        )
    p = params
    Om = dc.Omega
    w = p.mu - 1j * Om
    d11 = (w * w * p.mass * p.d_qq + 2 * w * p.d_pq + p.d_pp / p.mass) / (p.hbar * p.omega)
    d12 = (p.mass * p.omega * p.d_qq + 2 * p.mu / p.omega * p.d_pq + p.d_pp / (p.mass * p.omega)) / p.hbar
    return TransformedSystem(w / p.omega, complex(-p.lambda_, -Om), complex(d11), float(d12), Om)


def mean_trajectory(x10, x20, t, params: OscillatorParams):
    """Phase-space mean at time ``t``; valid in every regime."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidInput("t must be non-negative")
    c, s = oscillation_kernels(t, params)
    decay = np.exp(-params.lambda_ * t)
    mu, om = params.mu, params.omega
    x1 = decay * (x10 * (c + mu * s) + x20 * om * s)
    x2 = decay * (x20 * (c - mu * s) - x10 * om * s)
    return x1, x2


class WignerKind(enum.Enum):
    WAVE_PACKET = "wave_packet"
    DELTA = "delta"
    STEADY = "steady"


@dataclass(frozen=True)
class GaussianWigner:
    """``W = prefactor * exp(-(phi dx1^2 + psi dx2^2 + chi dx1 dx2) / denom)``.

    ``b_norm`` is the determinant-like constant of the solution (``B_w``,
    ``B`` or det sigma for the steady state); ``denom`` is the factor that
    actually divides the quadratic form.
    """

    mean_x1: float
    mean_x2: float
    phi: complex
    psi: complex
    chi: complex
    b_norm: float
    denom: float
    prefactor: float
    kind: WignerKind
    time: float

    def precision(self) -> np.ndarray:
        phi, psi, chi = (complex(v).real for v in (self.phi, self.psi, self.chi))
        return 2.0 / self.denom * np.array([[phi, chi / 2], [chi / 2, psi]])

    def covariance(self) -> np.ndarray:
        return np.linalg.inv(self.precision())

    @property
    def mean(self) -> np.ndarray:
        return np.array([self.mean_x1, self.mean_x2])

    def pdf(self, x1, x2):
        d1 = np.asarray(x1, dtype=float) - self.mean_x1
        d2 = np.asarray(x2, dtype=float) - self.mean_x2
        phi, psi, chi = (complex(v).real for v in (self.phi, self.psi, self.chi))
        return self.prefactor * np.exp(-(phi * d1 * d1 + psi * d2 * d2 + chi * d1 * d2) / self.denom)


def _check_variant(variant):
    if variant not in FORM_VARIANTS:
        raise InvalidInput(f"variant must be one of {FORM_VARIANTS}, got {variant!r}")


def _assemble(kind, t, x10, x20, params, k1, kappa, b_norm, denom, prefactor):
    """Real-variable coefficients from the z-space widths ``k1`` and ``kappa``."""
    ts = transform(params)
    a = ts.a_coef
    ac = a.conjugate()
    k2 = k1.conjugate()
    phi = k1 * ac * ac + k2 * a * a - kappa
    psi = k1 + k2 - kappa
    chi = 2 * (k1 * ac + k2 * a) - kappa * (a + ac)
    m1, m2 = mean_trajectory(x10, x20, t, params)
    return GaussianWigner(float(m1), float(m2), complex(phi), complex(psi), complex(chi),
                          float(b_norm), float(denom), float(prefactor), kind, float(t))


def wavepacket_solution(x10, x20, t, params: OscillatorParams, *, variant: str = "printed") -> GaussianWigner:
    """Wigner function evolved from the coherent-state packet ``(2/pi) exp(-2|x - x0|^2)``."""
    _check_variant(variant)
    if t < 0:
        raise InvalidInput("t must be non-negative")
    ts = transform(params)
    p = params
    mu, om, Om, lam = p.mu, p.omega, ts.Omega, p.lambda_
    q = mu * (mu + 1j * Om) / (2 * om * om)
    e1 = np.exp(2 * ts.nu1 * t)
    e2 = math.exp(-2 * lam * t)
    g1 = q.conjugate() * e1 + ts.d11 / (2 * ts.nu1) * (e1 - 1)
    g3 = e2 + ts.d12 / lam * (1 - e2)
    b_w = (g1 * g1.conjugate()).real - 0.25 * g3 * g3
    kappa = g3 if variant == "printed" else 2 * g3
    prefactor = Om / (math.pi * om * math.sqrt(abs(b_w)))
    return _assemble(WignerKind.WAVE_PACKET, t, x10, x20, p, complex(g1), kappa, b_w, 2 * b_w, prefactor)


def delta_solution(x10, x20, t, params: OscillatorParams, *, variant: str = "printed") -> GaussianWigner:
    """Wigner function evolved from a point distribution at ``(x10, x20)``."""
    _check_variant(variant)
    if t < 0:
        raise InvalidInput("t must be non-negative")
    if t == 0:
        raise SingularInitialCondition("the point initial condition has no density at t = 0")
    ts = transform(params)
    p = params
    lam = p.lambda_
    f1 = ts.d11 / ts.nu1 * (np.exp(2 * ts.nu1 * t) - 1)
    f3 = ts.d12 / lam * (1 - math.exp(-2 * lam * t))
    b = (f1 * f1.conjugate()).real - f3 * f3
    kappa = 2 * f3 if variant == "printed" else f3
    prefactor = 2 * ts.Omega / (math.pi * p.omega * math.sqrt(abs(b)))
    return _assemble(WignerKind.DELTA, t, x10, x20, p, complex(f1), kappa, b, b, prefactor)


@dataclass(frozen=True)
class SteadyCovarianceW:
    s11: float
    s22: float
    s12: float
    lyapunov_residual: float = 0.0

    def matrix(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])


def steady_covariance_closed_form(params: OscillatorParams) -> SteadyCovarianceW:
    p = params
    lam, mu, om = p.lambda_, p.mu, p.omega
    gap = lam * (lam * lam + om * om - mu * mu)
    if not gap > 0:
        raise NoStationaryState(f"lambda (lambda^2 + omega^2 - mu^2) = {gap} <= 0")
    Q = drift_diffusion_w(p).qw_matrix
    q11, q22, q12 = Q[0, 0], Q[1, 1], Q[0, 1]
    den = 4 * gap
    s11 = ((2 * lam * (lam + mu) + om * om) * q11 + om * om * q22 + 2 * om * (lam + mu) * q12) / den
    s22 = (om * om * q11 + (2 * lam * (lam - mu) + om * om) * q22 - 2 * om * (lam - mu) * q12) / den
    s12 = (-om * (lam + mu) * q11 + om * (lam - mu) * q22 + 2 * (lam * lam - mu * mu) * q12) / den
    return SteadyCovarianceW(float(s11), float(s22), float(s12))


def lyapunov_residual(sigma: np.ndarray, params: OscillatorParams) -> float:
    dd = drift_diffusion_w(params)
    A = dd.a_matrix
    return float(np.abs(A @ sigma + sigma @ A.T - dd.qw_matrix).max())


def steady_covariance_lyapunov(params: OscillatorParams) -> np.ndarray:
    """Independent solve of ``A sigma + sigma A^T = Q``."""
    dd = drift_diffusion_w(params)
    return solve_continuous_lyapunov(dd.a_matrix, dd.qw_matrix)


def steady_state(params: OscillatorParams, *, atol: float = 1e-12) -> tuple[SteadyCovarianceW, GaussianWigner]:
    """Stationary covariance and Wigner function.

    The closed form is checked against a Lyapunov solve; a disagreement
    larger than ``atol`` (relative to the covariance scale) raises.
    """
    closed = steady_covariance_closed_form(params)
    sig = closed.matrix()
    ref = steady_covariance_lyapunov(params)
    scale = max(1.0, float(np.abs(ref).max()))
    if np.abs(sig - ref).max() > atol * scale:
        raise ArithmeticError(f"closed-form steady covariance disagrees with Lyapunov solve by "
                              f"{np.abs(sig - ref).max():.3g}")
    res = lyapunov_residual(sig, params)
    closed = SteadyCovarianceW(closed.s11, closed.s22, closed.s12, res)
    det = closed.s11 * closed.s22 - closed.s12**2
    w = GaussianWigner(0.0, 0.0, complex(closed.s22), complex(closed.s11), complex(-2 * closed.s12),
                       det, 2 * det, 1 / (2 * math.pi * math.sqrt(det)), WignerKind.STEADY, math.inf)
    return closed, w


# -- grids ----------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    x1_min: float
    x1_max: float
    x2_min: float
    x2_max: float
    n1: int
    n2: int

    def __post_init__(self):
        vals = (self.x1_min, self.x1_max, self.x2_min, self.x2_max)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidInput("grid bounds must be finite")
        if self.n1 < 2 or self.n2 < 2:
            raise InvalidInput("grid needs at least 2 points per axis")
        if not (self.x1_max > self.x1_min and self.x2_max > self.x2_min):
            raise InvalidInput("grid bounds must be increasing")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        parts = [s.strip() for s in text.split(",")]
        if len(parts) != 6:
            raise InvalidInput("grid needs x1min,x1max,x2min,x2max,n1,n2")
        try:
            return cls(*(float(v) for v in parts[:4]), int(parts[4]), int(parts[5]))
        except ValueError as exc:
            raise InvalidInput(f"bad grid specification {text!r}: {exc}") from None


@dataclass(frozen=True)
class GridEvaluation:
    x1: np.ndarray
    x2: np.ndarray
    values: np.ndarray  # shape (n1, n2); row i is x1[i]
    mass: float


def evaluate_grid(w: GaussianWigner, grid) -> GridEvaluation:
    """Density on a tensor grid plus its trapezoid-rule mass."""
    if isinstance(grid, dict):
        grid = GridSpec(**grid)
    x1 = np.linspace(grid.x1_min, grid.x1_max, grid.n1)
    x2 = np.linspace(grid.x2_min, grid.x2_max, grid.n2)
    vals = w.pdf(x1[:, None], x2[None, :])
    mass = float(np.trapezoid(np.trapezoid(vals, x2, axis=1), x1))
    return GridEvaluation(x1, x2, vals, mass)


def total_mass(w: GaussianWigner, *, tol: float = MASS_TOL, max_rounds: int = 20) -> float:
    """Trapezoid mass on a box that widens until successive estimates differ by < ``tol``."""
    cov = w.covariance()
    evals = np.linalg.eigvalsh(cov)
    if not evals.min() > 0:
        raise InvalidInput("quadratic form is not positive definite")
    sd = np.sqrt(np.diag(cov))
    n_axis = int(min(4001, max(101, math.ceil(24 * math.sqrt(evals.max() / evals.min())))))
    prev = None
    k = 4.0
    for _ in range(max_rounds):
        lo, hi = w.mean - k * sd, w.mean + k * sd
        n = n_axis * int(math.ceil(k / 4)) + 1
        mass = evaluate_grid(w, GridSpec(lo[0], hi[0], lo[1], hi[1], n, n)).mass
        if prev is not None and abs(mass - prev) < tol:
            return mass
        prev = mass
        k += 2.0
    raise ArithmeticError(f"grid mass did not settle within {max_rounds} widenings")
