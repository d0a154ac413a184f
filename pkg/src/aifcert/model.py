"""System definition: rate constants, states, vector field, equilibrium.

Four species interact through a production chain 1 -> 2 -> 3 -> 4 and a
bilinear annihilation reaction that removes species 1 and 4 pairwise.
Species 1 is produced at a constant rate, so the flow points inward on
every face of the nonnegative orthant and trajectories never leave it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "Params",
    "DerivedConstants",
    "State",
    "vector_field",
    "boundary_inflow",
    "equilibrium",
]


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")
    return value


@dataclass(frozen=True)
class Params:
    """The eight positive rate constants.

    alpha1 is a zeroth-order production rate, alpha2 and alpha8 are the
    bimolecular annihilation rates, and alpha3..alpha7 are first-order
    production/decay rates along the chain.
    """

    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    alpha5: float
    alpha6: float
    alpha7: float
    alpha8: float

    def __post_init__(self) -> None:
        for k in range(1, 9):
            name = f"alpha{k}"
            object.__setattr__(self, name, _require_positive(name, getattr(self, name)))

    @classmethod
    def from_sequence(cls, values) -> "Params":
        vals = [float(v) for v in values]
        if len(vals) != 8:
            raise ValueError(f"expected 8 rate constants, got {len(vals)}")
        return cls(*vals)

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.alpha1,
            self.alpha2,
            self.alpha3,
            self.alpha4,
            self.alpha5,
            self.alpha6,
            self.alpha7,
            self.alpha8,
        )

    def to_json(self) -> dict:
        return {"alpha": list(self.as_tuple())}

    @classmethod
    def from_json(cls, obj: dict) -> "Params":
        if not isinstance(obj, dict) or "alpha" not in obj:
            raise ValueError("params JSON must be an object with an 'alpha' array")
        return cls.from_sequence(obj["alpha"])


@dataclass(frozen=True)
class DerivedConstants:
    """Combinations of rate constants used throughout the analysis.

    K is the loop gain of the chain relative to annihilation, theta the
    annihilation product level that stalls species 1, c and d the weights
    of the aggregate variable W = x4 + c*x2 + d*x3, and delta2, delta3
    the half-life delays of species 2 and 3.
    """

    K: float
    theta: float
    c: float
    d: float
    delta2: float
    delta3: float

    @classmethod
    def from_params(cls, p: Params) -> "DerivedConstants":
        ln2 = math.log(2.0)
        return cls(
            K=(p.alpha3 * p.alpha5 * p.alpha7) / (p.alpha4 * p.alpha6 * p.alpha8),
            theta=p.alpha1 / p.alpha2,
            c=(p.alpha5 * p.alpha7) / (p.alpha4 * p.alpha6),
            d=p.alpha7 / p.alpha6,
            delta2=ln2 / p.alpha4,
            delta3=ln2 / p.alpha6,
        )


@dataclass(frozen=True)
class State:
    """A point in the nonnegative orthant."""

    x1: float
    x2: float
    x3: float
    x4: float

    def __post_init__(self) -> None:
        for name in ("x1", "x2", "x3", "x4"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")
            object.__setattr__(self, name, v)

    @classmethod
    def zero(cls) -> "State":
        return cls(0.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_sequence(cls, values) -> "State":
        vals = [float(v) for v in values]
        if len(vals) != 4:
            raise ValueError(f"expected 4 state components, got {len(vals)}")
        return cls(*vals)

    @classmethod
    def from_clamped(cls, values, undershoot: float = 1e-9) -> "State":
        """Ingest near-orthant data, clamping round-off undershoot to 0.

        Components in [-undershoot, 0) are set to 0; anything below that
        is a genuine violation and is rejected.
        """
        vals = []
        for v in values:
            v = float(v)
            if -undershoot <= v < 0.0:
                v = 0.0
            vals.append(v)
        return cls.from_sequence(vals)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.x2, self.x3, self.x4)

    def to_json(self) -> dict:
        return {"x": list(self.as_tuple())}

    @classmethod
    def from_json(cls, obj: dict) -> "State":
        if not isinstance(obj, dict) or "x" not in obj:
            raise ValueError("state JSON must be an object with an 'x' array")
        return cls.from_sequence(obj["x"])


def _components(x) -> tuple[float, float, float, float]:
    if isinstance(x, State):
        return x.as_tuple()
    vals = tuple(float(v) for v in x)
    if len(vals) != 4:
        raise ValueError(f"expected 4 state components, got {len(vals)}")
    return vals


def vector_field(p: Params, x) -> tuple[float, float, float, float]:
    """Time derivative of the state.

    Accepts a State or any length-4 sequence; the input need not lie in
    the orthant, but it must be finite.
    """
    x1, x2, x3, x4 = _components(x)
    if not (math.isfinite(x1) and math.isfinite(x2) and math.isfinite(x3) and math.isfinite(x4)):
        raise ValueError(f"state must be finite, got {(x1, x2, x3, x4)}")
    return (
        p.alpha1 - p.alpha2 * x1 * x4,
        p.alpha3 * x1 - p.alpha4 * x2,
        p.alpha5 * x2 - p.alpha6 * x3,
        p.alpha7 * x3 - p.alpha8 * x1 * x4,
    )


def boundary_inflow(p: Params, x) -> list[tuple[int, float]]:
    """Derivatives of the components that sit exactly on the boundary.

    Returns (1-based index, derivative) for every component equal to 0.
    On the orthant each reported derivative is nonnegative, and the
    species-1 entry is exactly alpha1: the flow never points out.
    """
    comps = _components(x)
    f = vector_field(p, comps)
    return [(i + 1, f[i]) for i in range(4) if comps[i] == 0.0]


def equilibrium(p: Params) -> State:
    """The unique positive stationary point, in closed form.

    The stationarity equations are triangular: x3 follows from balancing
    production of species 4 against annihilation, then x2, x1 follow up
    the chain, and x4 stalls species 1.
    """
    x3 = (p.alpha8 * p.alpha1) / (p.alpha7 * p.alpha2)
    x2 = (p.alpha6 / p.alpha5) * x3
    x1 = (p.alpha4 / p.alpha3) * x2
    x4 = p.alpha1 / (p.alpha2 * x1)
    return State(x1, x2, x3, x4)
