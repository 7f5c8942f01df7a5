"""Input strategies for the simulated decision process.

A strategy sees the revealed history (all pairs (x_i, z_i) with i < t plus the
current sketch summary) and emits the next scalar x_t; the next direction z_t
is drawn only after it returns. Every strategy keeps x_t^2 <= cx exactly, in
floating point, not just in exact arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

REFERENCE_STRATEGIES = (
    "constant",
    "uniform",
    "amplify",
    "burst",
    "zero_after",
    "alternating",
)


@dataclass(frozen=True)
class History:
    """What a strategy may read when choosing x_t: the pairs for i < t and the
    summary of the sketch state after step t-1. The pending direction z_t does
    not exist yet."""

    steps: Sequence[tuple[float, np.ndarray]]
    S: float
    Y: float
    distortion: float
    tau: int | None

    @property
    def t(self) -> int:
        """Index of the step being chosen."""
        return len(self.steps)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Debug export: the inputs so far and the (dim, t) direction matrix."""
        xs = np.array([x for x, _ in self.steps])
        zs = np.column_stack([z for _, z in self.steps])
        return xs, zs


# kind -> {param name: default}; None marks a required parameter.
_STRATEGY_PARAMS: dict[str, dict[str, float | None]] = {
    "constant": {},
    "uniform": {},
    "amplify": {"theta": 0.1, "rho": 0.1},
    "burst": {"k": 10, "rho": 0.1},
    "zero_after": {"k": None},
    "alternating": {},
}


@dataclass(frozen=True)
class StrategySpec:
    kind: str
    cx: float = 1.0
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _STRATEGY_PARAMS:
            raise ValueError(
                f"unknown strategy {self.kind!r}; known: {', '.join(REFERENCE_STRATEGIES)}"
            )
        if self.cx <= 0:
            raise ValueError(f"cx must be positive, got {self.cx}")
        allowed = _STRATEGY_PARAMS[self.kind]
        unknown = set(self.params) - set(allowed)
        if unknown:
            raise ValueError(
                f"strategy {self.kind!r} does not accept parameters {sorted(unknown)}"
            )
        missing = [k for k, default in allowed.items() if default is None and k not in self.params]
        if missing:
            raise ValueError(f"strategy {self.kind!r} requires parameters {missing}")
        rho = self.params.get("rho")
        if rho is not None and not 0.0 < rho <= 1.0:
            raise ValueError(f"rho must lie in (0, 1], got {rho}")
        theta = self.params.get("theta")
        if theta is not None and theta < 0.0:
            raise ValueError(f"theta must be nonnegative, got {theta}")
        k = self.params.get("k")
        if k is not None and (int(k) != k or k < 0):
            raise ValueError(f"k must be an integer >= 0, got {k}")

    def param(self, name: str) -> float:
        default = _STRATEGY_PARAMS[self.kind][name]
        value = self.params.get(name, default)
        assert value is not None
        return value


@lru_cache(maxsize=None)
def _bounded_root(cx: float) -> float:
    """Largest float r with r*r <= cx, so emitted squares never exceed cx."""
    r = math.sqrt(cx)
    while r * r > cx:
        r = math.nextafter(r, 0.0)
    return r


def _constant(spec: StrategySpec, h: History, rng: np.random.Generator) -> float:
    return _bounded_root(spec.cx)


def _uniform(spec: StrategySpec, h: History, rng: np.random.Generator) -> float:
    # magnitude uniform in (0, sqrt(cx)]
    return _bounded_root(spec.cx) * (1.0 - rng.random())


def _amplify(spec: StrategySpec, h: History, rng: np.random.Generator) -> float:
    # Chase the deviation: push hard once the gap is already a theta-fraction
    # of the mass, otherwise stay small.
    full = _bounded_root(spec.cx)
    if abs(h.Y) >= spec.param("theta") * h.S:
        return full
    return spec.param("rho") * full


def _burst(spec: StrategySpec, h: History, rng: np.random.Generator) -> float:
    full = _bounded_root(spec.cx)
    if h.t <= spec.param("k"):
        return full
    return spec.param("rho") * full


def _zero_after(spec: StrategySpec, h: History, rng: np.random.Generator) -> float:
    if h.t <= spec.param("k"):
        return _bounded_root(spec.cx)
    return 0.0


def _alternating(spec: StrategySpec, h: History, rng: np.random.Generator) -> float:
    full = _bounded_root(spec.cx)
    return full if h.t % 2 == 1 else -full


_STRATEGIES = {
    "constant": _constant,
    "uniform": _uniform,
    "amplify": _amplify,
    "burst": _burst,
    "zero_after": _zero_after,
    "alternating": _alternating,
}


def next_x(spec: StrategySpec, history: History, rng: np.random.Generator) -> float:
    """Emit x_t for the step `history.t`. Deterministic given (spec, history,
    rng state); the square of the result never exceeds spec.cx."""
    return _STRATEGIES[spec.kind](spec, history, rng)
