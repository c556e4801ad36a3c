"""Brute-force reference: the master equation integrated in a truncated Fock basis.

The right-hand side is applied term by term (plus the Hermitian conjugate)
using shifts of the density matrix instead of a dim^2 x dim^2 superoperator.
Everything here is deliberately independent of the closed-form modules; the
only shared piece is the parameter container.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln

from ._kernels import PLANES, rk4_run
from .density_matrix import FockDensityMatrix, p_green, q_p_is_psd, sigma_t, mean_alpha
from .errors import InvalidInput, PRepresentationUnavailable, TruncationBreach
from .moments import MomentState
from .params import OscillatorParams, derive

log = logging.getLogger(__name__)

TRACE_DRIFT_LIMIT = 1e-6
EDGE_POPULATION_LIMIT = 1e-6


# -- operators ------------------------------------------------------------

@dataclass(frozen=True)
class FockOperators:
    dim: int
    annihilate: np.ndarray
    create: np.ndarray
    hamiltonian: np.ndarray  # H0 + mu (pq + qp) / 2
    position: np.ndarray
    momentum: np.ndarray

    @classmethod
    def build(cls, dim: int, params: OscillatorParams) -> "FockOperators":
        if dim < 2:
            raise InvalidInput("dim must be at least 2")
        a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
        ad = a.conj().T
        hb, m, om = params.hbar, params.mass, params.omega
        q = math.sqrt(hb / (2 * m * om)) * (ad + a)
        p = 1j * math.sqrt(hb * m * om / 2) * (ad - a)
        h0 = hb * om * (np.diag(np.arange(dim, dtype=float)) + 0.5 * np.eye(dim))
        # pq + qp = i hbar (a^dagger^2 - a^2), exact within the truncated space
        h = h0 + 0.5 * params.mu * 1j * hb * (ad @ ad - a @ a)
        return cls(dim, a, ad, h, q, p)


def _a_left(r):
    """a @ r"""
    out = np.zeros_like(r)
    k = np.sqrt(np.arange(1, r.shape[-2]))
    out[..., :-1, :] = k[:, None] * r[..., 1:, :]
    return out


def _ad_left(r):
    """a^dagger @ r"""
    out = np.zeros_like(r)
    k = np.sqrt(np.arange(1, r.shape[-2]))
    out[..., 1:, :] = k[:, None] * r[..., :-1, :]
    return out


def _a_right(r):
    """r @ a"""
    out = np.zeros_like(r)
    k = np.sqrt(np.arange(1, r.shape[-1]))
    out[..., :, 1:] = r[..., :, :-1] * k[None, :]
    return out


def _ad_right(r):
    """r @ a^dagger"""
    out = np.zeros_like(r)
    k = np.sqrt(np.arange(1, r.shape[-1]))
    out[..., :, :-1] = r[..., :, 1:] * k[None, :]
    return out


def _as_array(rho):
    if isinstance(rho, FockDensityMatrix):
        return rho.elements
    return np.asarray(rho, dtype=complex)


class FockGenerator:
    """Master-equation right-hand side with precomputed shift weights.

    Every term of the Fock-form generator maps ``rho[i, j]`` to a neighbour
    ``rho[i + di, j + dj]`` times a fixed weight, so one application is a
    handful of weighted slice additions.  Passing a sequence of parameter
    sets builds a batched generator acting on stacks of shape (B, dim, dim).
    """

    def __init__(self, params, dim: int):
        if dim < 2:
            raise InvalidInput("dim must be at least 2")
        batch = not isinstance(params, OscillatorParams)
        plist = list(params) if batch else [params]
        coeffs = []
        for p in plist:
            dc = derive(p)
            lam, om, mu = p.lambda_, p.omega, p.mu
            coeffs.append((
                0.5 * (dc.d1 + mu),              # a^dag a^dag rho - a^dag rho a^dag
                0.5 * (dc.d1 - mu),              # rho a^dag a^dag - a^dag rho a^dag
                0.5 * (dc.d2 + lam + 1j * om),   # a rho a^dag - a^dag a rho
                0.5 * (dc.d2 - lam - 1j * om),   # a^dag rho a - rho a a^dag
            ))
        c = np.array(coeffs, dtype=complex)[:, :, None, None]
        c_up, c_right, c_gain, c_loss = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
        self.dim = dim
        i = np.arange(dim, dtype=float)[:, None]
        j = np.arange(dim, dtype=float)[None, :]
        ones = np.ones((dim, dim))
        sq = np.sqrt
        # weights live on the output index (i, j)
        w = {
            "m2_0": c_up * sq(i * np.maximum(i - 1, 0)) * ones,     # rho[i-2, j]
            "0_p2": c_right * sq((j + 1) * (j + 2)) * ones,         # rho[i, j+2]
            "m1_p1": -(c_up + c_right) * sq(i * (j + 1)),           # rho[i-1, j+1]
            "p1_p1": c_gain * sq((i + 1) * (j + 1)),                # rho[i+1, j+1]
            "m1_m1": c_loss * sq(i * j),                            # rho[i-1, j-1]
            "0_0": -c_gain * i - c_loss * np.where(j < dim - 1, j + 1, 0.0) * ones,
        }
        if not batch:
            w = {k: v[0] for k, v in w.items()}
        self.batch = len(plist) if batch else None
        self._w = w
        self._w_m2_0 = w["m2_0"][..., 2:, :]
        self._w_0_p2 = w["0_p2"][..., :, :-2]
        self._w_m1_p1 = w["m1_p1"][..., 1:, :-1]
        self._w_p1_p1 = w["p1_p1"][..., :-1, :-1]
        self._w_m1_m1 = w["m1_m1"][..., 1:, 1:]

    def stacked_weights(self) -> np.ndarray:
        """Weights as one contiguous (B, 6, dim, dim) array for the compiled stepper."""
        full = [np.broadcast_to(self._w[k], self._w["0_0"].shape) for k in PLANES]
        out = np.stack(full, axis=-3)
        if self.batch is None:
            out = out[None]
        return np.ascontiguousarray(out, dtype=complex)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        x = self._w["0_0"] * r
        x[..., 2:, :] += self._w_m2_0 * r[..., :-2, :]
        x[..., :, :-2] += self._w_0_p2 * r[..., :, 2:]
        x[..., 1:, :-1] += self._w_m1_p1 * r[..., :-1, 1:]
        x[..., :-1, :-1] += self._w_p1_p1 * r[..., 1:, 1:]
        x[..., 1:, 1:] += self._w_m1_m1 * r[..., :-1, :-1]
        return x + np.swapaxes(x, -1, -2).conj()

    def spectral_radius(self, n_iter: int = 60, seed: int = 0) -> float:
        """Power-iteration estimate of the largest |eigenvalue|."""
        rng = np.random.default_rng(seed)
        shape = (self.dim, self.dim) if self.batch is None else (self.batch, self.dim, self.dim)
        v = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        norm = lambda z: np.sqrt((np.abs(z) ** 2).sum(axis=(-2, -1), keepdims=True))  # noqa: E731
        v /= norm(v)
        est = np.zeros(shape[:-2] + (1, 1))
        for _ in range(n_iter):
            w = self(v)
            est = norm(w)
            v = w / np.where(est == 0, 1.0, est)
        return float(est.max())


def liouvillian_apply(rho, params: OscillatorParams) -> np.ndarray:
    """Time derivative of ``rho`` under the master equation in Fock form.

    Implements the four bracketed terms literally with truncated ladder
    operators and adds the Hermitian conjugate.
    """
    r = _as_array(rho)
    dc = derive(params)
    d1, d2 = dc.d1, dc.d2
    lam, om, mu = params.lambda_, params.omega, params.mu
    ad_r = _ad_left(r)
    r_ad = _ad_right(r)
    ad_r_ad = _ad_right(ad_r)
    x = 0.5 * (d1 + mu) * (_ad_left(ad_r) - ad_r_ad)
    x += 0.5 * (d1 - mu) * (_ad_right(r_ad) - ad_r_ad)
    x += 0.5 * (d2 + lam + 1j * om) * (_a_left(r_ad) - _ad_left(_a_left(r)))
    x += 0.5 * (d2 - lam - 1j * om) * (_a_right(ad_r) - _ad_right(_a_right(r)))
    return x + np.swapaxes(x, -1, -2).conj()


def liouvillian_from_lindblad(rho, params: OscillatorParams, v_ops) -> np.ndarray:
    """Dense generic Lindblad form with Hamiltonian ``H`` and operators ``V_j``.

    ``v_ops`` are matrices in the same truncated basis; used to cross-check the
    Fock form against explicit ``V_j = a_j p + b_j q``.
    """
    r = _as_array(rho)
    ops = FockOperators.build(r.shape[0], params)
    hb = params.hbar
    out = -1j / hb * (ops.hamiltonian @ r - r @ ops.hamiltonian)
    for v in v_ops:
        vd = v.conj().T
        out += 1 / (2 * hb) * ((v @ r @ vd - r @ vd @ v) + (v @ r @ vd - vd @ v @ r))
    return out


# -- initial states -------------------------------------------------------

class StateKind(enum.Enum):
    COHERENT = "coherent"
    THERMAL = "thermal"
    FOCK = "fock"
    POISSON_DIAGONAL = "poisson"


@dataclass(frozen=True)
class InitialState:
    kind: StateKind
    value: complex  # alpha0, nbar, s or N

    @classmethod
    def coherent(cls, alpha0):
        return cls(StateKind.COHERENT, complex(alpha0))

    @classmethod
    def thermal(cls, nbar):
        if nbar < 0:
            raise InvalidInput("nbar must be non-negative")
        return cls(StateKind.THERMAL, float(nbar))

    @classmethod
    def fock(cls, s):
        if s < 0 or int(s) != s:
            raise InvalidInput("s must be a non-negative integer")
        return cls(StateKind.FOCK, int(s))

    @classmethod
    def poisson(cls, mean):
        if mean < 0:
            raise InvalidInput("mean must be non-negative")
        return cls(StateKind.POISSON_DIAGONAL, float(mean))

    def density(self, dim: int) -> np.ndarray:
        """Truncated (not renormalized) density matrix."""
        k = np.arange(dim)
        if self.kind is StateKind.COHERENT:
            alpha = complex(self.value)
            if alpha == 0:
                amp = (k == 0).astype(complex)
            else:
                amp = np.exp(-abs(alpha) ** 2 / 2 + k * np.log(alpha) - 0.5 * gammaln(k + 1))
            return np.outer(amp, amp.conj())
        if self.kind is StateKind.THERMAL:
            nb = float(self.value.real if isinstance(self.value, complex) else self.value)
            return np.diag(nb**k / (1 + nb) ** (k + 1)).astype(complex)
        if self.kind is StateKind.FOCK:
            s = int(self.value)
            if s >= dim:
                raise InvalidInput(f"Fock state {s} needs dim > {s}")
            out = np.zeros((dim, dim), dtype=complex)
            out[s, s] = 1
            return out
        N = float(self.value)
        if N == 0:
            return np.diag((k == 0).astype(float)).astype(complex)
        return np.diag(np.exp(-N + k * np.log(N) - gammaln(k + 1))).astype(complex)


# -- integration ----------------------------------------------------------

def default_dt(params: OscillatorParams) -> float:
    dc = derive(params)
    return 1e-3 / max(params.omega, params.lambda_, dc.d2)


#: RK4 is stable for |dt * eigenvalue| up to ~2.8 along the real and imaginary axes
RK4_STABILITY_LIMIT = 2.5


def stable_dt(params, dim: int, safety: float = 0.8) -> float:
    """Largest step the truncated generator tolerates, times ``safety``."""
    radius = FockGenerator(params, dim).spectral_radius()
    return safety * RK4_STABILITY_LIMIT / radius


def suggested_dim(alpha0: complex = 0j, nbar: float = 0.0) -> int:
    return max(60, int(math.ceil((abs(alpha0) ** 2 + nbar) * 6 + 20)))


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings.

    ``save_every`` controls how many steps separate stored snapshots; the
    initial and final states are always stored.
    """

    t_final: float
    dim: int = 60
    dt: float | None = None
    save_every: int = 1

    def resolve(self, params) -> tuple[float, int]:
        """Return ``(dt, n_steps)``; ``dt`` is shrunk to land on ``t_final``."""
        if not self.t_final > 0:
            raise InvalidInput("t_final must be positive")
        if self.dim < 2:
            raise InvalidInput("dim must be at least 2")
        if self.save_every < 1:
            raise InvalidInput("save_every must be >= 1")
        plist = [params] if isinstance(params, OscillatorParams) else list(params)
        dt = min(default_dt(p) for p in plist) if self.dt is None else float(self.dt)
        for p in plist:
            if not dt > 0 or dt * (p.lambda_ + p.omega + derive(p).d2) >= 0.1:
                raise InvalidInput(
                    f"dt={dt} fails the stability heuristic dt*(lambda+omega+D2) < 0.1"
                )
        radius = FockGenerator(params, self.dim).spectral_radius()
        if dt * radius > RK4_STABILITY_LIMIT:
            raise InvalidInput(
                f"dt={dt} is unstable for dim={self.dim}: dt * spectral radius "
                f"{dt * radius:.3g} > {RK4_STABILITY_LIMIT}"
            )
        n_steps = max(1, int(math.ceil(self.t_final / dt - 1e-9)))
        return self.t_final / n_steps, n_steps


@dataclass
class Trajectory:
    """Stored snapshots; ``states`` has shape (n_saved, [batch,] dim, dim)."""

    times: np.ndarray
    states: np.ndarray
    trace_drift: float
    max_hermiticity_residual: float
    max_edge_population: float

    def __len__(self):
        return len(self.times)

    def at(self, i: int, member: int | None = None) -> FockDensityMatrix:
        rho = self.states[i] if member is None else self.states[i, member]
        return FockDensityMatrix.from_array(rho, self.times[i])

    def expectations(self, member: int | None = None) -> MomentState:
        states = self.states if member is None else self.states[:, member]
        return expectations(states, self.times)


def _initial_array(initial, dim):
    if isinstance(initial, InitialState):
        return initial.density(dim)
    r = _as_array(initial).copy()
    if r.shape != (dim, dim):
        raise InvalidInput("initial density does not match cfg.dim")
    return r


def evolve(initial, cfg: IntegratorConfig, params) -> Trajectory:
    """Integrate the master equation with fixed-step RK4.

    ``initial`` is an :class:`InitialState` or an explicit density matrix.
    ``params`` may also be a sequence of parameter sets, in which case
    ``initial`` is a matching sequence and all members share one time grid.
    Hermiticity is restored after every step; the pre-symmetrization
    residual is tracked.  Raises :class:`TruncationBreach` when the trace
    drifts by more than ``TRACE_DRIFT_LIMIT`` or the top Fock level gathers
    more than ``EDGE_POPULATION_LIMIT`` population.
    """
    dt, n_steps = cfg.resolve(params)
    gen = FockGenerator(params, cfg.dim)
    if gen.batch is None:
        r0 = _initial_array(initial, cfg.dim)[None]
    else:
        initial = list(initial)
        if len(initial) != gen.batch:
            raise InvalidInput("need one initial state per parameter set")
        r0 = np.stack([_initial_array(x, cfg.dim) for x in initial])
    tr0 = np.trace(r0, axis1=-2, axis2=-1).real
    saved, herm, edge = rk4_run(gen.stacked_weights(), np.ascontiguousarray(r0, dtype=complex),
                                dt, n_steps, cfg.save_every)
    steps = np.arange(0, n_steps + 1)
    steps = steps[(steps % cfg.save_every == 0) | (steps == n_steps)]
    times = steps * dt
    if gen.batch is None:
        saved = saved[:, 0]
    r = saved[-1]
    drift = float(np.max(np.abs(np.trace(r, axis1=-2, axis2=-1).real - tr0)))
    log.debug("oracle run: %d steps, trace drift %.3g, hermiticity residual %.3g, edge %.3g",
              n_steps, drift, herm, edge)
    if not (drift <= TRACE_DRIFT_LIMIT and edge <= EDGE_POPULATION_LIMIT):
        raise TruncationBreach(
            f"trace drift {drift:.3g}, top-level population {edge:.3g} at dim={cfg.dim}; "
            "increase dim"
        )
    return Trajectory(times, saved, drift, float(herm), float(edge))



def evolve_escalating(initial, cfg: IntegratorConfig, params, *, max_dim: int = 240,
                      growth: float = 1.5) -> Trajectory:
    """:func:`evolve`, retried with a larger basis after each :class:`TruncationBreach`.

    ``initial`` must be an :class:`InitialState` (or a sequence of them) so it
    can be rebuilt at every dimension.  The step (``cfg.dt`` or the default)
    is kept unless the larger basis needs a smaller one.
    """
    states = [initial] if isinstance(initial, InitialState) else list(initial)
    if not all(isinstance(s, InitialState) for s in states):
        raise InvalidInput("escalation needs InitialState inputs")
    plist = [params] if isinstance(params, OscillatorParams) else list(params)
    base_dt = cfg.dt if cfg.dt is not None else min(default_dt(p) for p in plist)
    dim = cfg.dim
    while True:
        dt = min(base_dt, stable_dt(params, dim))
        try:
            return evolve(initial, replace(cfg, dim=dim, dt=dt), params)
        except TruncationBreach:
            if dim >= max_dim:
                raise
            new_dim = min(max_dim, int(math.ceil(dim * growth)))
            log.info("truncation breach at dim=%d; retrying with dim=%d", dim, new_dim)
            dim = new_dim


def expectations(rho, time=0.0) -> MomentState:
    """Moments ``Tr[rho A]`` (works on a stack of matrices too)."""
    r = _as_array(rho)
    dim = r.shape[-1]
    k = np.sqrt(np.arange(1, dim))
    k2 = np.sqrt(np.arange(1, dim - 1) * np.arange(2, dim))
    # Tr[rho a] = sum_m sqrt(m+1) rho[m+1, m]
    exp_a = np.einsum("...i,i->...", np.diagonal(r, offset=-1, axis1=-2, axis2=-1), k)
    exp_adag = np.einsum("...i,i->...", np.diagonal(r, offset=1, axis1=-2, axis2=-1), k)
    exp_a2 = np.einsum("...i,i->...", np.diagonal(r, offset=-2, axis1=-2, axis2=-1), k2)
    exp_adag2 = np.einsum("...i,i->...", np.diagonal(r, offset=2, axis1=-2, axis2=-1), k2)
    exp_n = np.einsum("...i,i->...", np.diagonal(r, axis1=-2, axis2=-1), np.arange(dim)).real
    scal = lambda v: v.item() if np.ndim(v) == 0 else v  # noqa: E731
    return MomentState(scal(exp_a), scal(exp_adag), scal(exp_a2), scal(exp_adag2), scal(exp_n),
                       scal(np.asarray(time)))


# -- P-function quadrature ------------------------------------------------

def rho_from_p_quadrature(t: float, alpha0: complex, params: OscillatorParams, dim: int,
                          *, n_nodes: int = 241, span: float = 11.0) -> FockDensityMatrix:
    """``<m|rho|n>`` as a 2-D trapezoid integral of the Gaussian P function.

    The grid lives in the whitened coordinates of P (mean plus Cholesky factor
    of its real covariance), which keeps the integrand resolved at any width.
    """
    if not q_p_is_psd(params):
        raise PRepresentationUnavailable("Q^P is not positive semidefinite")
    cov = sigma_t(t, params).real_covariance()
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise PRepresentationUnavailable("P covariance is not positive definite") from None
    abar = mean_alpha(t, alpha0, params)
    u = np.linspace(-span, span, n_nodes)
    h = u[1] - u[0]
    U1, U2 = np.meshgrid(u, u, indexing="ij")
    x = abar.real + L[0, 0] * U1
    y = abar.imag + L[1, 0] * U1 + L[1, 1] * U2
    alpha = (x + 1j * y).ravel()
    weights = p_green(alpha, t, alpha0, params) * (h * h) * abs(np.linalg.det(L))
    k = np.arange(dim)
    # <m|alpha> = exp(-|alpha|^2/2) alpha^m / sqrt(m!)
    # a node at alpha = 0 gives 0 * log(0) in row 0, which is overwritten below
    with np.errstate(divide="ignore", invalid="ignore"):
        log_abs = np.log(np.abs(alpha))
        logamp = (-0.5 * np.abs(alpha)[None, :] ** 2 + k[:, None] * log_abs[None, :]
                  - 0.5 * gammaln(k + 1)[:, None])
    phase = np.exp(1j * k[:, None] * np.angle(alpha)[None, :])
    amp = np.exp(logamp) * phase
    amp[0, :] = np.exp(-0.5 * np.abs(alpha) ** 2)
    rho = (amp * weights[None, :]) @ amp.conj().T
    return FockDensityMatrix.from_array(rho, t)
