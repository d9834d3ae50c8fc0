"""Distributed control laws over relative output measurements.

Every law uses only Laplacian-weighted output differences, so the
all-ones direction is invisible to the controllers.  The internal-model
controller embeds a copy of the disturbance generator per node and
feeds it the coupled output disagreement; its output enters the agent
input through the second (internal-model) coupling Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exosystem import SignalSpec
from .netgraph import Laplacian

__all__ = [
    "AdaptationGains",
    "ControllerConfig",
    "InternalModelController",
    "proportional_control",
    "composite_control",
    "leader_control",
    "weight_adaptation_rhs",
]

_MODES = ("none", "proportional", "internal_model", "leader")


@dataclass(frozen=True)
class AdaptationGains:
    """Gains of the edge-weight adaptation laws.

    ``alpha`` drives the proportional-coupling weights, ``beta`` the
    internal-model coupling weights; both integrate the squared output
    difference across the edge, so weights are nondecreasing.
    """

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise ValueError("adaptation gains must be strictly positive")


@dataclass(frozen=True)
class ControllerConfig:
    """Which control law the network runs and its knobs.

    ``leader`` is the 0-based index of the node that refuses both the
    disturbance feedforward and the internal-model correction; it is
    required exactly in leader mode.  ``model`` fixes the signal class
    of the embedded generators; by default it is inferred from the
    scenario's disturbances.
    """

    mode: str = "internal_model"
    leader: int | None = None
    adaptation: AdaptationGains | None = None
    model: SignalSpec | None = None

    def __post_init__(self) -> None:
        if self.mode not in _MODES:
            raise ValueError(f"unknown controller mode {self.mode!r}; pick from {_MODES}")
        if (self.leader is not None) != (self.mode == "leader"):
            raise ValueError("a leader index is required exactly in leader mode")
        if self.mode == "none" and self.adaptation is not None:
            raise ValueError("weight adaptation needs a coupling law to adapt")

    @property
    def uses_internal_model(self) -> bool:
        return self.mode in ("internal_model", "leader")


@dataclass(frozen=True, eq=False)
class InternalModelController:
    """Disturbance-generator copy driven by coupled output differences."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if a.shape != (b.size, b.size):
            raise ValueError("generator matrix and input column sizes differ")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def rhs(self, zeta, coupling: float) -> np.ndarray:
        """State derivative for one node given its coupling input."""
        zeta = np.asarray(zeta, dtype=float)
        return self.a @ zeta + self.b * float(coupling)

    def output(self, zeta) -> float:
        return float(self.b @ np.asarray(zeta, dtype=float))


def proportional_control(y, lap_p: Laplacian) -> np.ndarray:
    """Static diffusive coupling ``-L_p y``."""
    return -(lap_p.matrix @ np.asarray(y, dtype=float))


def composite_control(y, eta, lap_p: Laplacian, lap_im: Laplacian, phi=None) -> np.ndarray:
    """Disturbance feedforward plus coupling and internal-model correction.

    Computes ``phi - L_p y - L_I eta``; ``phi`` defaults to zero.
    """
    y = np.asarray(y, dtype=float)
    eta = np.asarray(eta, dtype=float)
    u = -(lap_p.matrix @ y) - lap_im.matrix @ eta
    if phi is not None:
        u = u + np.asarray(phi, dtype=float)
    return u


def leader_control(
    y, eta, lap_p: Laplacian, lap_im: Laplacian, phi=None, leader: int = 0
) -> np.ndarray:
    """Composite law with one node demoted to pure proportional coupling.

    The leader ignores its feedforward term and the internal-model
    correction; scenarios must give the leader a zero disturbance, which
    is what lets the rest of the network converge onto its motion.
    """
    y = np.asarray(y, dtype=float)
    if not 0 <= leader < y.size:
        raise ValueError(f"leader index {leader} out of range")
    u = composite_control(y, eta, lap_p, lap_im, phi)
    u[leader] = -(lap_p.matrix[leader] @ y)
    return u


def weight_adaptation_rhs(y, graph_edges, gain: float) -> np.ndarray:
    """Per-edge weight derivatives ``gain * (y_i - y_j)**2``.

    One weight state per undirected edge; the law is symmetric in the
    edge endpoints, so the adapted graph stays undirected.
    """
    y = np.asarray(y, dtype=float)
    out = np.empty(len(graph_edges))
    for e, (i, j, _) in enumerate(graph_edges):
        diff = y[i] - y[j]
        out[e] = gain * diff * diff
    return out
