"""Incremental sketch of an adaptively generated scalar stream.

The state after step t is the projected running sum s = sum_i x_i z_i, the
squared mass S = sum_i x_i^2, and the centered gap Y = |s|^2 - S, all updated
in O(dim) per step via

    Y_t = Y_{t-1} + 2 x_t <z_t, s_{t-1}> + x_t^2 (|z_t|^2 - 1).

The sketch also tracks the first step at which the realized distortion |Y|/S
exceeded the target eps; that index never moves once set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Incremental Y is replaced by a direct |s|^2 - S evaluation every this many
# non-zero updates to cap floating-point drift on long streams.
DEFAULT_RESYNC_INTERVAL = 256

# Column layout for serialized path traces.
TRACE_HEADER = ("t", "x", "inner", "Y", "S", "distortion", "good", "tau_set")


@dataclass(frozen=True)
class StepOutcome:
    """What a single update contributed.

    stopped_increment is y_increment while the sketch has not yet left the
    low-distortion regime (including the very step that leaves it), and
    exactly 0.0 afterwards.
    """

    y_increment: float
    inner: float
    good: bool
    stopped_increment: float


class SequentialSketch:
    """Running projected sum with distortion and stopping-time bookkeeping.

    One instance owns one path; instances are independent and safe to drive
    from parallel workers as long as each is mutated by a single caller.
    """

    def __init__(
        self,
        x0: float,
        z0: np.ndarray,
        eps: float,
        resync_interval: int | None = DEFAULT_RESYNC_INTERVAL,
    ):
        x0 = float(x0)
        if x0 == 0.0:
            raise ValueError("x0 must be nonzero (it scales the mixture precision)")
        if not 0.0 < eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {eps}")
        if resync_interval is not None and resync_interval < 1:
            raise ValueError("resync_interval must be >= 1 or None")
        z0 = np.array(z0, dtype=float)
        if z0.ndim != 1 or z0.size < 1:
            raise ValueError("initial direction must be a 1-d vector")
        z0_sq = float(z0 @ z0)
        if abs(z0_sq - 1.0) > eps / 2.0:
            raise ValueError(
                f"initial direction squared norm {z0_sq!r} deviates from 1 by "
                f"more than eps/2 = {eps / 2.0!r}"
            )
        self.eps = eps
        self.t = 0
        self.s = x0 * z0
        self.S = x0 * x0
        self.Y = x0 * x0 * (z0_sq - 1.0)
        self.tau: int | None = None
        self._resync_interval = resync_interval
        if not self.good:  # unreachable given the z0 check, kept for safety
            self.tau = 0

    @property
    def dim(self) -> int:
        return self.s.size

    @property
    def history_len(self) -> int:
        return self.t + 1

    @property
    def good(self) -> bool:
        """Whether the current squared norm sits inside the (1 +- eps) band."""
        return abs(self.Y) <= self.eps * self.S

    def distortion(self) -> float:
        """Realized relative error |Y|/S of the sketch at the current step."""
        if self.S <= 0.0:
            raise ValueError("distortion undefined while S = 0")
        return abs(self.Y) / self.S

    def recompute_gap(self) -> float:
        """Direct |s|^2 - S evaluation, the drift oracle for incremental Y."""
        return float(self.s @ self.s) - self.S

    def update(self, x: float, z: np.ndarray) -> StepOutcome:
        z = np.asarray(z, dtype=float)
        if z.shape != self.s.shape:
            raise ValueError(
                f"direction has dimension {z.size}, sketch has {self.s.size}"
            )
        x = float(x)
        was_stopped = self.tau is not None
        inner = float(z @ self.s)
        y_increment = 2.0 * x * inner + x * x * (float(z @ z) - 1.0)
        self.s += x * z
        self.S += x * x
        self.Y += y_increment
        self.t += 1
        # Skipped on zero inputs so they leave the state bit-identical.
        if (
            self._resync_interval is not None
            and x != 0.0
            and self.t % self._resync_interval == 0
        ):
            self.Y = self.recompute_gap()
        good = self.good
        if not good and self.tau is None:
            self.tau = self.t
        return StepOutcome(
            y_increment=y_increment,
            inner=inner,
            good=good,
            stopped_increment=0.0 if was_stopped else y_increment,
        )


def check_trigger_identity(goods: Sequence[bool]) -> bool:
    """Verify {tau <= t} == "the event frozen at min(t, tau) failed" for all t.

    tau is the first index whose entry is False (None when the whole path is
    good, treated as infinity). The identity is exact: no tolerance.
    """
    if len(goods) == 0:
        raise ValueError("path must be nonempty")
    tau = next((i for i, g in enumerate(goods) if not g), None)
    for t in range(len(goods)):
        triggered = tau is not None and tau <= t
        stopped_index = t if tau is None else min(t, tau)
        if triggered != (not goods[stopped_index]):
            return False
    return True
