"""Constructive constants: waiting time, cascade floors, bound certificate.

Everything here is closed-form arithmetic on the rate constants except
``solve_L_star``, which bisects a strictly increasing scalar map.  The
central object is the waiting time tau(L): once species 1 has stayed at
or above a level L for tau(L) time units, the chain has pumped enough
of species 4 to force species 1 downward.  Levels L above the threshold
L* make that forcing self-sustaining, which is what the certificate
exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import DerivedConstants, Params, State

__all__ = [
    "FixedPointConstants",
    "BoundCertificate",
    "CertificateError",
    "tau",
    "ell2",
    "ell3",
    "ell4",
    "window_upper",
    "solve_L_star",
    "certificate",
    "growth_envelope",
]


class CertificateError(ValueError):
    """Raised when a requested level is below the admissible threshold."""


@dataclass(frozen=True)
class FixedPointConstants:
    """Coefficients of the scalar fixed-point equation for tau(L).

    tau solves tau = psi1 + psi2 / (L + alpha1 * tau): psi1 collects the
    half-life delays of species 2 and 3, psi2 the half-life scale of the
    species-4 buildup against annihilation.
    """

    psi1: float
    psi2: float

    @classmethod
    def from_params(cls, p: Params) -> "FixedPointConstants":
        ln2 = math.log(2.0)
        return cls(psi1=ln2 / p.alpha4 + ln2 / p.alpha6, psi2=ln2 / p.alpha8)


def _require_level(L: float) -> float:
    L = float(L)
    if not math.isfinite(L) or L <= 0.0:
        raise ValueError(f"level L must be finite and > 0, got {L!r}")
    return L


def tau(p: Params, L: float) -> float:
    """Waiting time tau(L): unique positive root of the fixed-point equation.

    Written as tau = psi1 + q with q the positive root of
    alpha1*q**2 + (L + alpha1*psi1)*q - psi2 = 0, evaluated in the
    division form that stays accurate when L dwarfs alpha1*psi1 (the
    subtractive quadratic formula loses the root there).
    """
    L = _require_level(L)
    fp = FixedPointConstants.from_params(p)
    b = L + p.alpha1 * fp.psi1
    q = 2.0 * fp.psi2 / (b + math.sqrt(b * b + 4.0 * p.alpha1 * fp.psi2))
    return fp.psi1 + q


def ell2(p: Params, L: float) -> float:
    """Floor reached by species 2 after delay delta2 on an excursion at level L."""
    L = _require_level(L)
    return p.alpha3 * L / (2.0 * p.alpha4)


def ell3(p: Params, L: float) -> float:
    """Floor reached by species 3 after delay delta2 + delta3."""
    L = _require_level(L)
    return (p.alpha3 * p.alpha5) / (4.0 * p.alpha4 * p.alpha6) * L


def ell4(p: Params, L: float, T: float) -> float:
    """Floor reached by species 4 inside a window of length T.

    The annihilation pressure on species 4 is capped by the window bound
    on species 1, which is why T enters through window_upper.
    """
    L = _require_level(L)
    T = float(T)
    if not math.isfinite(T) or T <= 0.0:
        raise ValueError(f"window length T must be finite and > 0, got {T!r}")
    K = DerivedConstants.from_params(p).K
    return K * L / (8.0 * (L + p.alpha1 * T))


def window_upper(p: Params, L: float, t: float) -> float:
    """Upper bound L + alpha1*t on species 1 inside an excursion window."""
    L = _require_level(L)
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"time t must be finite and >= 0, got {t!r}")
    return L + p.alpha1 * t


def _threshold_gap(p: Params, L: float) -> float:
    """Signed gap L*ell4(L, tau(L)) - theta; strictly increasing in L."""
    dc = DerivedConstants.from_params(p)
    return L * ell4(p, L, tau(p, L)) - dc.theta


def solve_L_star(p: Params) -> float:
    """Smallest admissible level L*: root of L*ell4(L, tau(L)) = theta.

    The map is continuous, strictly increasing, and spans (0, inf), so a
    geometrically grown bracket plus bisection converges unconditionally.
    """
    lo, hi = 1e-6, 1.0
    for _ in range(400):
        if _threshold_gap(p, lo) < 0.0:
            break
        hi = lo
        lo /= 8.0
    else:
        raise ArithmeticError("could not bracket L* from below")
    for _ in range(400):
        if _threshold_gap(p, hi) > 0.0:
            break
        lo = max(lo, hi)
        hi *= 8.0
    else:
        raise ArithmeticError("could not bracket L* from above")

    for _ in range(300):
        if hi - lo <= 1e-14 * hi:
            break
        mid = 0.5 * (lo + hi)
        if _threshold_gap(p, mid) < 0.0:
            lo = mid
        else:
            hi = mid
    L_star = 0.5 * (lo + hi)

    dc = DerivedConstants.from_params(p)
    # the defining equation forces L* > 8*theta/K, so this holds with margin
    assert L_star > 4.0 * p.alpha1 / (dc.K * p.alpha2)
    return L_star


@dataclass(frozen=True)
class BoundCertificate:
    """Explicit constants dominating every state component for all time.

    L_star is the exact admissible threshold, L_used the level the
    certificate is built on (user-chosen or L_star itself), T0 the
    waiting time at L_used.  M1..M4 bound x1..x4; gamma is the level the
    aggregate W = x4 + c*x2 + d*x3 cannot climb above, and W0 its
    initial value.
    """

    L_star: float
    L_used: float
    T0: float
    M1: float
    M2: float
    M3: float
    M4: float
    gamma: float
    W0: float
    params: Params
    x0: State

    def to_json(self) -> dict:
        return {
            "L_star": self.L_star,
            "L_used": self.L_used,
            "T0": self.T0,
            "M1": self.M1,
            "M2": self.M2,
            "M3": self.M3,
            "M4": self.M4,
            "gamma": self.gamma,
            "W0": self.W0,
            "params": self.params.to_json(),
            "x0": self.x0.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BoundCertificate":
        try:
            return cls(
                L_star=float(obj["L_star"]),
                L_used=float(obj["L_used"]),
                T0=float(obj["T0"]),
                M1=float(obj["M1"]),
                M2=float(obj["M2"]),
                M3=float(obj["M3"]),
                M4=float(obj["M4"]),
                gamma=float(obj["gamma"]),
                W0=float(obj["W0"]),
                params=Params.from_json(obj["params"]),
                x0=State.from_json(obj["x0"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed certificate JSON: {exc}") from exc


def certificate(p: Params, x0: State, L_override: float | None = None) -> BoundCertificate:
    """Build the bound certificate for the given initial state.

    L_override lets the caller pick any admissible level above L*; the
    larger the level, the later the guaranteed turnaround and the looser
    the bounds, but every choice >= L* is valid.
    """
    if not isinstance(x0, State):
        x0 = State.from_sequence(x0)
    L_star = solve_L_star(p)
    if L_override is not None:
        L_used = float(L_override)
        if not math.isfinite(L_used) or L_used < L_star:
            raise CertificateError(
                f"override level {L_used!r} is below the admissible threshold {L_star!r}"
            )
    else:
        L_used = L_star
    dc = DerivedConstants.from_params(p)
    T0 = tau(p, L_used)
    M1 = max(x0.x1, L_used) + p.alpha1 * T0
    M2 = max(x0.x2, (p.alpha3 / p.alpha4) * M1)
    M3 = max(x0.x3, (p.alpha5 / p.alpha6) * M2)
    W0 = x0.x4 + dc.c * x0.x2 + dc.d * x0.x3
    gamma = dc.K + dc.c * M2 + dc.d * M3
    M4 = max(W0, gamma)
    return BoundCertificate(
        L_star=L_star,
        L_used=L_used,
        T0=T0,
        M1=M1,
        M2=M2,
        M3=M3,
        M4=M4,
        gamma=gamma,
        W0=W0,
        params=p,
        x0=x0,
    )


def growth_envelope(p: Params, x0: State, t: float) -> tuple[float, float, float, float]:
    """Polynomial upper bounds on the four states at time t.

    Dropping every removal term leaves a cascade of pure integrators, so
    component i is bounded by a degree-i polynomial in t.
    """
    if not isinstance(x0, State):
        x0 = State.from_sequence(x0)
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"time t must be finite and >= 0, got {t!r}")
    a1, a3, a5, a7 = p.alpha1, p.alpha3, p.alpha5, p.alpha7
    e1 = x0.x1 + a1 * t
    e2 = x0.x2 + a3 * x0.x1 * t + a1 * a3 * t * t / 2.0
    e3 = (
        x0.x3
        + a5 * x0.x2 * t
        + a3 * a5 * x0.x1 * t * t / 2.0
        + a1 * a3 * a5 * t**3 / 6.0
    )
    e4 = (
        x0.x4
        + a7 * x0.x3 * t
        + a5 * a7 * x0.x2 * t * t / 2.0
        + a3 * a5 * a7 * x0.x1 * t**3 / 6.0
        + a1 * a3 * a5 * a7 * t**4 / 24.0
    )
    return (e1, e2, e3, e4)
