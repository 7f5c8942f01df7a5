"""Dimension planning and self-normalized deviation analytics.

All logarithms are natural. The planner answers "how many projection
coordinates are enough for a (1 +- eps) squared-norm guarantee over an
adaptively chosen horizon-T stream", and the boundary/mixture pair makes the
anytime deviation certificate behind that answer executable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .sketch import StepOutcome


@dataclass(frozen=True)
class PlanParams:
    """Inputs to the dimension planner.

    eps    distortion target in (0, 1)
    delta  failure budget in (0, 1)
    c0     variance-proxy scale of the direction distribution (1 for the sphere)
    cx     almost-sure bound on x_t^2 for t >= 1
    x0sq   x_0^2, the squared magnitude of the fixed first input
    T      horizon: steps 0..T are covered
    """

    eps: float
    delta: float
    c0: float
    cx: float
    x0sq: float
    T: int

    def __post_init__(self) -> None:
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.c0 <= 0:
            raise ValueError(f"c0 must be positive, got {self.c0}")
        if self.cx <= 0:
            raise ValueError(f"cx must be positive, got {self.cx}")
        if self.x0sq <= 0:
            raise ValueError(f"x0sq must be positive, got {self.x0sq}")
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"T must be an integer >= 1, got {self.T}")


@dataclass(frozen=True)
class PlanResult:
    """Planned dimension M, mixture precision L_T, and the almost-sure upper
    bound on the accumulated variance proxy at that dimension."""

    M: int
    L_T: float
    B_sq_bound: float


def dimension_bound(
    eps: float, delta: float, c0: float, cx: float, x0sq: float, T: float
) -> float:
    """Pre-ceiling planner threshold,

        16 c0 (1+eps) / eps^2 * (ln(1/delta) + ln(1 + cx*T/x0sq)).

    Accepts T = 0, where the stream-growth term vanishes and only the failure
    budget remains.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if c0 <= 0 or cx <= 0 or x0sq <= 0:
        raise ValueError("c0, cx and x0sq must be positive")
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    return (
        16.0 * c0 * (1.0 + eps) / (eps * eps)
        * (-math.log(delta) + math.log1p(cx * T / x0sq))
    )


def mixture_scale(eps: float, c0: float, x0sq: float, M: int) -> float:
    """Largest admissible Gaussian-mixture precision, 2 c0 (1+eps) x0^4 / M."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    return 2.0 * c0 * (1.0 + eps) * x0sq * x0sq / M


def plan_dimension(p: PlanParams) -> PlanResult:
    """Smallest integer dimension meeting the planner threshold, with the
    matching mixture precision and worst-case variance-proxy budget."""
    M = int(math.ceil(dimension_bound(p.eps, p.delta, p.c0, p.cx, p.x0sq, p.T)))
    b_sq_bound = (
        4.0 * p.c0 * (1.0 + p.eps) / M
        * (p.cx * p.x0sq * p.T + p.cx * p.cx * p.T * p.T / 2.0)
    )
    return PlanResult(
        M=M,
        L_T=mixture_scale(p.eps, p.c0, p.x0sq, M),
        B_sq_bound=b_sq_bound,
    )


def union_bound_baseline(eps: float, delta: float, T: int, c0: float) -> int:
    """Comparison dimension when every step is covered independently and the
    failure budget is split across the T+1 indices:

        ceil(8 c0 / eps^2 * ln(2 (T+1) / delta)).

    The constants are this library's convention for a per-step Chernoff bound;
    only the eps^-2 log((T+1)/delta) shape is canonical. Useful purely as a
    baseline curve against the planner.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if c0 <= 0:
        raise ValueError(f"c0 must be positive, got {c0}")
    return int(math.ceil(8.0 * c0 / (eps * eps) * math.log(2.0 * (T + 1) / delta)))


def boundary(B_sq: float, L: float, delta: float) -> float:
    """Anytime deviation boundary,

        sqrt(2 (B_sq + L) ln((1/delta) sqrt((B_sq + L)/L))).

    The log argument is mathematically >= 1/delta > 1; the max() guard only
    absorbs rounding at the B_sq = 0, delta -> 1 edge.
    """
    if L <= 0:
        raise ValueError(f"mixture precision L must be positive, got {L}")
    if B_sq < 0:
        raise ValueError(f"B_sq must be nonnegative, got {B_sq}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    total = B_sq + L
    arg = max(math.sqrt(total / L) / delta, 1.0)
    return math.sqrt(2.0 * total * math.log(arg))


def mixture_value(A: float, B_sq: float, L: float) -> float:
    """Gaussian-mixture statistic sqrt(L/(L+B_sq)) * exp(A^2 / (2(L+B_sq))).

    Crossing the `boundary` at level delta is equivalent to this statistic
    reaching 1/delta. Returns inf when the exponent overflows float range.
    """
    if L <= 0:
        raise ValueError(f"mixture precision L must be positive, got {L}")
    if B_sq < 0:
        raise ValueError(f"B_sq must be nonnegative, got {B_sq}")
    total = L + B_sq
    log_value = 0.5 * math.log(L / total) + A * A / (2.0 * total)
    if log_value >= 709.0:
        return math.inf
    return math.exp(log_value)


def supermartingale_statistic(lam: float, A: float, B_sq: float) -> float:
    """exp(lam * A - lam^2 * B_sq / 2), the fixed-lambda deviation statistic
    whose mean stays at most 1 along stopped paths."""
    arg = lam * A - lam * lam * B_sq / 2.0
    if arg >= 709.0:
        return math.inf
    return math.exp(arg)


@dataclass
class BoundAccumulator:
    """Self-normalized pair for one path: A sums the stopped gap increments,
    B_sq the matching variance proxy (4 c0 / M) x^2 (1+eps) S_prev accrued
    while the path is still running (including the step that stops it)."""

    c0: float
    eps: float
    M: int
    L: float
    A: float = 0.0
    B_sq: float = 0.0

    def add(
        self, outcome: StepOutcome, x: float, S_prev: float, stopped: bool
    ) -> None:
        """Fold one step in. `stopped` must be True iff the low-distortion
        regime had already been left before this step."""
        if S_prev < 0:
            raise ValueError(f"S_prev must be nonnegative, got {S_prev}")
        self.A += outcome.stopped_increment
        if not stopped:
            self.B_sq += (
                4.0 * self.c0 / self.M * x * x * (1.0 + self.eps) * S_prev
            )

    def boundary(self, delta: float) -> float:
        return boundary(self.B_sq, self.L, delta)

    def mixture(self) -> float:
        return mixture_value(self.A, self.B_sq, self.L)
