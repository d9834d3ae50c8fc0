"""Agent dynamics: the Goodwin oscillator and linear single-output agents.

The Goodwin oscillator is a three-state biochemical feedback loop with
a repressive Hill nonlinearity.  Its output channel is incrementally
output-feedback passive with a computable shortage/excess coefficient,
which is what couples the agent model to the network-level
synchronization condition (gain plus algebraic connectivity positive).
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .lti import StateSpace, TransferFunction, realize

__all__ = [
    "GoodwinParams",
    "AgentModel",
    "goodwin_rhs",
    "hill_slope",
    "hill_max_slope",
    "goodwin_iofp_gain",
    "sync_condition_holds",
    "linear_agent",
]


@dataclass(frozen=True)
class GoodwinParams:
    """Decay rates of the three states and the Hill exponent."""

    b1: float = 0.5
    b2: float = 0.5
    b3: float = 0.5
    hill_p: float = 20.0

    def __post_init__(self) -> None:
        for name in ("b1", "b2", "b3", "hill_p"):
            value = float(getattr(self, name))
            if not value > 0.0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
            object.__setattr__(self, name, value)


def _hill_output(x3, p: float):
    # The concentration x3 is clamped at zero so that transient
    # undershoots cannot produce complex powers for fractional p.
    z = np.maximum(x3, 0.0)
    return -1.0 / (1.0 + z**p)


def goodwin_rhs(state, u: float, params: GoodwinParams) -> np.ndarray:
    """Time derivative of one Goodwin oscillator.

    ``state`` is ``(x1, x2, x3)``; the input enters the first state
    together with the Hill feedback term, and the measured output is
    ``x1``.
    """
    state = np.asarray(state, dtype=float)
    if state.shape != (3,):
        raise ValueError(f"state must have shape (3,), got {state.shape}")
    if not np.all(np.isfinite(state)) or not math.isfinite(u):
        raise ValueError("non-finite state or input")
    x1, x2, x3 = state
    return np.array(
        [
            -params.b1 * x1 + u - _hill_output(x3, params.hill_p),
            params.b2 * (x1 - x2),
            params.b3 * (x2 - x3),
        ]
    )


def hill_slope(z, p: float):
    """Absolute slope of the repressive Hill curve at concentration ``z``."""
    z = np.asarray(z, dtype=float)
    zp = z**p
    return p * z ** (p - 1.0) / (1.0 + zp) ** 2


def hill_max_slope(p: float, tol: float = 1e-8) -> float:
    """Maximum absolute slope of the Hill nonlinearity over z > 0.

    Golden-section search on log-spaced concentrations in [1e-3, 1e3],
    which brackets the maximizer for all practical Hill exponents.

    Note the maximizer is not the midpoint z = 1, where the slope is
    exactly p/4: the true peak sits at z = ((p-1)/(p+1))^(1/p) and is
    slightly larger (5.0125... vs 5 for p = 20).  Worst-case passivity
    bounds need the supremum, so that is what this returns.
    """
    if p <= 0.0:
        raise ValueError("Hill exponent must be strictly positive")

    def negated(u: float) -> float:
        return -float(hill_slope(10.0**u, p))

    lo, hi = -3.0, 3.0
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - ratio * (hi - lo)
    x2 = lo + ratio * (hi - lo)
    f1, f2 = negated(x1), negated(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - ratio * (hi - lo)
            f1 = negated(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + ratio * (hi - lo)
            f2 = negated(x2)
    best = min(f1, f2, negated(0.5 * (lo + hi)))
    return -best


def goodwin_iofp_gain(params: GoodwinParams, gamma4: float) -> float:
    """Output-feedback passivity coefficient of the Goodwin output channel.

    ``gamma4`` bounds the Hill-curve slope (its maximum slope unless a
    sharper bound is known).  Positive values certify an excess of
    passivity, negative values a shortage that network coupling must
    overcome.  Built from the secant-criterion angle: each of the three
    first-order stages contributes a factor cos(pi/4) at the critical
    phase, so the loop term is gamma1 * gamma4 * cos(pi/4)**4 with
    gamma1 = 1 / b1 and unit gains for the two chained stages.
    """
    if gamma4 <= 0.0:
        raise ValueError("slope bound gamma4 must be strictly positive")
    gamma1 = 1.0 / params.b1
    # cos(pi/4)**4 is exactly 1/4; using the closed form avoids noise
    # from the quartic power of an irrational intermediate.
    loop = gamma1 * 1.0 * 1.0 * gamma4 * 0.25
    return -(-1.0 + loop) / gamma1


def sync_condition_holds(gain: float, connectivity: float) -> bool:
    """Network synchronization condition: passivity shortage covered."""
    return gain + connectivity > 0.0


@dataclass(frozen=True, eq=False)
class AgentModel:
    """Homogeneous agent dynamics: Goodwin oscillator or linear SISO system.

    Exactly one of ``goodwin`` / ``ss`` is set.  Linear agents used in
    feedback must be strictly proper (no feedthrough), otherwise the
    closed loop would contain an algebraic loop.
    """

    kind: str
    goodwin: GoodwinParams | None = None
    ss: StateSpace | None = None
    tf: TransferFunction | None = None

    def __post_init__(self) -> None:
        if self.kind == "goodwin":
            if self.goodwin is None or self.ss is not None:
                raise ValueError("goodwin agent needs GoodwinParams only")
        elif self.kind == "linear":
            if self.ss is None or self.goodwin is not None:
                raise ValueError("linear agent needs a StateSpace only")
        else:
            raise ValueError(f"unknown agent kind {self.kind!r}")

    @classmethod
    def from_goodwin(cls, params: GoodwinParams) -> "AgentModel":
        return cls("goodwin", goodwin=params)

    @classmethod
    def from_statespace(cls, ss: StateSpace) -> "AgentModel":
        return cls("linear", ss=ss)

    @classmethod
    def from_transfer(cls, tf: TransferFunction) -> "AgentModel":
        return cls("linear", ss=realize(tf), tf=tf)

    @property
    def state_dim(self) -> int:
        return 3 if self.kind == "goodwin" else self.ss.order

    @property
    def has_feedthrough(self) -> bool:
        return self.kind == "linear" and self.ss.d != 0.0

    def rhs(self, state, u: float) -> np.ndarray:
        if self.kind == "goodwin":
            return goodwin_rhs(state, u, self.goodwin)
        state = np.asarray(state, dtype=float)
        return self.ss.a @ state + self.ss.b * float(u)

    def output(self, state) -> float:
        state = np.asarray(state, dtype=float)
        if self.kind == "goodwin":
            return float(state[0])
        return float(self.ss.c @ state)

    # Stacked variants used by the simulator; states has one row per node.

    def rhs_batch(self, states: np.ndarray, u: np.ndarray) -> np.ndarray:
        if self.kind == "goodwin":
            p = self.goodwin
            x1 = states[:, 0]
            x2 = states[:, 1]
            x3 = states[:, 2]
            out = np.empty_like(states)
            out[:, 0] = -p.b1 * x1 + u - _hill_output(x3, p.hill_p)
            out[:, 1] = p.b2 * (x1 - x2)
            out[:, 2] = p.b3 * (x2 - x3)
            return out
        return states @ self.ss.a.T + np.outer(u, self.ss.b)

    def output_batch(self, states: np.ndarray) -> np.ndarray:
        if self.kind == "goodwin":
            return states[:, 0].copy()
        return states @ self.ss.c


def linear_agent(tf: TransferFunction) -> AgentModel:
    """Agent whose dynamics realize the given proper transfer function."""
    return AgentModel.from_transfer(tf)
