"""Physical parameters of the damped oscillator and their derived rates.

The model is fixed by the constants ``hbar``, ``mass`` and ``omega``, the
friction ``lambda_`` (``lambda`` in configuration documents), the squeezing
rate ``mu`` of the Hamiltonian term ``mu (pq + qp) / 2`` and three diffusion
coefficients.  Complete positivity of the dynamics requires

    d_pp > 0,   d_qq > 0,   d_pp d_qq - d_pq**2 >= (lambda hbar / 2)**2

and every other module assumes these hold.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

from .errors import ConstraintViolation, DegenerateInput, InvalidInput, InvalidRegime

#: relative slack on the uncertainty-type constraint
CONSTRAINT_RTOL = 1e-12
#: |mu - omega| <= CRITICAL_RTOL * omega is treated as critical damping
CRITICAL_RTOL = 1e-9

FIELDS = ("hbar", "mass", "omega", "lambda_", "mu", "d_pp", "d_qq", "d_pq")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float  # lhs - rhs; negative when violated


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def violated(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "margin": c.margin}
                for c in self.checks
            ],
        }


def _as_fields(params) -> dict[str, float]:
    if isinstance(params, OscillatorParams):
        return {k: getattr(params, k) for k in FIELDS}
    if isinstance(params, Mapping):
        out = {}
        for k in FIELDS:
            key = k if k in params else k.rstrip("_")
            if key not in params:
                raise InvalidInput(f"missing parameter {key!r}")
            out[k] = params[key]
        return out
    raise InvalidInput(f"cannot read parameters from {type(params).__name__}")


def validate(params) -> ValidationReport:
    """Check the complete-positivity constraints and basic positivity.

    ``params`` may be an :class:`OscillatorParams` or a mapping with the
    same field names (``lambda`` or ``lambda_``).  Raises
    :class:`InvalidInput` for non-finite values; constraint failures are
    reported, not raised.
    """
    f = _as_fields(params)
    for k, v in f.items():
        try:
            v = float(v)
        except (TypeError, ValueError):
            raise InvalidInput(f"{k} is not a number: {v!r}") from None
        if not math.isfinite(v):
            raise InvalidInput(f"{k} is not finite: {v!r}")
        f[k] = v

    checks = [
        CheckResult("hbar>0", f["hbar"] > 0, f["hbar"]),
        CheckResult("mass>0", f["mass"] > 0, f["mass"]),
        CheckResult("omega>0", f["omega"] > 0, f["omega"]),
        CheckResult("lambda>0", f["lambda_"] > 0, f["lambda_"]),
        CheckResult("mu>=0", f["mu"] >= 0, f["mu"]),
        CheckResult("i:d_pp>0", f["d_pp"] > 0, f["d_pp"]),
        CheckResult("ii:d_qq>0", f["d_qq"] > 0, f["d_qq"]),
    ]
    lhs = f["d_pp"] * f["d_qq"] - f["d_pq"] ** 2
    rhs = (f["lambda_"] * f["hbar"]) ** 2 / 4.0
    slack = CONSTRAINT_RTOL * max(abs(f["d_pp"] * f["d_qq"]), rhs, f["d_pq"] ** 2)
    checks.append(CheckResult("iii:d_pp*d_qq-d_pq^2>=(lambda*hbar/2)^2", lhs >= rhs - slack, lhs - rhs))
    return ValidationReport(tuple(checks))


@dataclass(frozen=True)
class OscillatorParams:
    """Validated parameter set; invalid combinations raise on construction."""

    hbar: float
    mass: float
    omega: float
    lambda_: float
    mu: float
    d_pp: float
    d_qq: float
    d_pq: float = 0.0

    def __post_init__(self):
        report = validate(self)
        if not report.passed:
            raise ConstraintViolation(
                "invalid oscillator parameters: " + ", ".join(report.violated), report
            )
        for k in FIELDS:
            object.__setattr__(self, k, float(getattr(self, k)))

    @classmethod
    def thermal(cls, lambda_, mu, kT, *, hbar=1.0, mass=1.0, omega=1.0) -> "OscillatorParams":
        """Coefficients whose asymptotic state is the Gibbs state at ``kT``."""
        d_pp, d_qq, d_pq = thermal_coefficients(lambda_, mu, mass, omega, hbar, kT)
        return cls(hbar, mass, omega, lambda_, mu, d_pp, d_qq, d_pq)

    @classmethod
    def from_micro(cls, micro: "LindbladMicroParams", *, mu=0.0, hbar=1.0, mass=1.0, omega=1.0):
        d_pp, d_qq, d_pq, lam = from_micro(micro, hbar)
        return cls(hbar, mass, omega, lam, mu, d_pp, d_qq, d_pq)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "OscillatorParams":
        return cls(**_as_fields(data))

    def as_dict(self) -> dict[str, float]:
        return {k.rstrip("_"): getattr(self, k) for k in FIELDS}


class Regime(enum.Enum):
    OVERDAMPED = "overdamped"
    UNDERDAMPED = "underdamped"
    CRITICAL = "critical"


@dataclass(frozen=True)
class DerivedCoefficients:
    d1: complex
    d2: float
    regime: Regime
    nu: float | None
    Omega: float | None
    d_const: float
    stability: float = field(default=0.0)  # lambda**2 + omega**2 - mu**2


def thermal_coefficients(lambda_, mu, m, omega, hbar, kT) -> tuple[float, float, float]:
    """Diffusion coefficients ``(d_pp, d_qq, d_pq)`` of a thermal bath."""
    if not (kT > 0) or not math.isfinite(kT):
        raise InvalidInput(f"kT must be positive and finite, got {kT!r}")
    if mu < 0:
        raise InvalidInput("mu must be non-negative")
    if not lambda_ > mu:
        raise InvalidRegime(f"thermal coefficients need lambda > mu (got {lambda_} <= {mu}); d_qq would be <= 0")
    coth = 1.0 / math.tanh(hbar * omega / (2.0 * kT))
    d_pp = 0.5 * (lambda_ + mu) * hbar * m * omega * coth
    d_qq = 0.5 * (lambda_ - mu) * hbar / (m * omega) * coth
    return d_pp, d_qq, 0.0


@dataclass(frozen=True)
class LindbladMicroParams:
    """Amplitudes of the two Lindblad operators ``V_j = a_j p + b_j q``."""

    a1: complex
    b1: complex
    a2: complex = 0j
    b2: complex = 0j


def from_micro(micro: LindbladMicroParams, hbar: float = 1.0) -> tuple[float, float, float, float]:
    """Return ``(d_pp, d_qq, d_pq, lambda)`` induced by the Lindblad operators."""
    a = (complex(micro.a1), complex(micro.a2))
    b = (complex(micro.b1), complex(micro.b2))
    if not all(cmath.isfinite(z) for z in a + b):
        raise InvalidInput("micro amplitudes must be finite")
    if all(z == 0 for z in a + b):
        raise DegenerateInput("all Lindblad amplitudes vanish")
    d_qq = 0.5 * hbar * sum(abs(z) ** 2 for z in a)
    d_pp = 0.5 * hbar * sum(abs(z) ** 2 for z in b)
    overlap = sum(x.conjugate() * y for x, y in zip(a, b))
    d_pq = -0.5 * hbar * overlap.real
    lam = -overlap.imag
    if not lam > 0:
        raise DegenerateInput(f"micro amplitudes give lambda = {lam} <= 0")
    return d_pp, d_qq, d_pq, lam


def derive(params: OscillatorParams) -> DerivedCoefficients:
    """Rates entering the master equation and the moment equations."""
    p = params
    mw = p.mass * p.omega
    d1 = complex(mw * p.d_qq - p.d_pp / mw, 2.0 * p.d_pq) / p.hbar
    d2 = (mw * p.d_qq + p.d_pp / mw) / p.hbar
    d_const = (
        (p.lambda_ + p.mu) * mw * p.d_qq
        - (p.lambda_ - p.mu) * p.d_pp / mw
        + 2.0 * p.omega * p.d_pq
    ) / p.hbar
    gap = p.mu - p.omega
    if abs(gap) <= CRITICAL_RTOL * p.omega:
        regime, nu, Om = Regime.CRITICAL, None, None
    elif gap > 0:
        regime, nu, Om = Regime.OVERDAMPED, math.sqrt(p.mu**2 - p.omega**2), None
    else:
        regime, nu, Om = Regime.UNDERDAMPED, None, math.sqrt(p.omega**2 - p.mu**2)
    stability = p.lambda_**2 + p.omega**2 - p.mu**2
    return DerivedCoefficients(d1, d2, regime, nu, Om, d_const, stability)
