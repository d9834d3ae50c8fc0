"""Constructive design of robust dynamic average consensus estimators.

Each node runs an identical single-input filter ``h(s) = n_h(s) / (eps
* d(s) + n_h(s))`` built from the minimal polynomial ``d(s)`` of the
input signal class; the network couples the filters diffusively and the
outputs converge to the instantaneous average of the inputs.  The three
verification checks mirror the structure of the convergence argument:

* divisibility: ``d(s)`` divides ``n_h(s) - d_h(s)``, so every node
  embeds a full internal model of the input class;
* generator match: the canonical generator realizes exactly ``d(s)``;
* closed-loop stability: for every distinct nonzero Laplacian
  eigenvalue the single-loop characteristic polynomial is Hurwitz.

Design feasibility rests on strict positive-realness of ``h``, checked
by frequency sweep; the supremum of feasible ``eps`` comes from
bisection on that test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agents import AgentModel
from .control import ControllerConfig
from .exosystem import DisturbanceEnsemble, NodeSignal, SignalSpec, canonical_generator
from .lti import (
    InfeasibleDesignError,
    Polynomial,
    SprVerdict,
    TransferFunction,
    char_poly,
    divides,
    is_spr,
    max_spr_epsilon,
    resolvent_transfer,
    routh_stable,
)
from .netgraph import (
    CONNECTIVITY_TOL,
    GraphConnectivityError,
    Laplacian,
    algebraic_connectivity,
    build_laplacian,
    symmetric_eigenvalues,
)
from .sim import Scenario

__all__ = [
    "DEFAULT_NUMERATOR_ROOT",
    "DacDesign",
    "StabilityVerdict",
    "design_dac_filter",
    "default_filter_numerator",
    "check_divisibility",
    "check_generator_match",
    "check_closed_loop_stability",
    "build_dac_network",
]

# Default numerator (s + 0.4)^(m-1): every root at -0.4 keeps the
# filter bandwidth near the design examples while guaranteeing a
# Hurwitz monic numerator of the right degree.
DEFAULT_NUMERATOR_ROOT = 0.4

_EIGENVALUE_CLUSTER_REL = 1e-8
_MARGINALITY_SHIFT = 1e-6


def default_filter_numerator(spec: SignalSpec) -> Polynomial:
    """Monic stable numerator of degree one below the signal class order."""
    order = spec.dim
    p = Polynomial([1.0])
    for _ in range(order - 1):
        p = p * Polynomial([DEFAULT_NUMERATOR_ROOT, 1.0])
    return p


@dataclass(frozen=True, eq=False)
class DacDesign:
    """One node's consensus filter together with its building blocks."""

    spec: SignalSpec
    signal_den: Polynomial
    filter_num: Polynomial
    epsilon: float
    node_tf: TransferFunction
    generator_a: np.ndarray
    generator_b: np.ndarray
    spr: SprVerdict


def design_dac_filter(
    spec: SignalSpec,
    filter_num: Polynomial | None = None,
    epsilon: float | None = None,
) -> DacDesign:
    """Design the per-node filter for a signal class.

    Parameters
    ----------
    spec : SignalSpec
        Input signal class (constants and/or sinusoids).
    filter_num : Polynomial, optional
        Monic Hurwitz numerator of degree ``spec.dim - 1`` (a positive
        constant when the class is first order).  Defaults to
        ``(s + 0.4)**(spec.dim - 1)``.
    epsilon : float, optional
        Singular-perturbation parameter.  Defaults to half the supremum
        of the strictly-positive-real range, capped at 0.01.

    Raises
    ------
    InfeasibleDesignError
        When the resulting filter is not strictly positive real.
    """
    signal_den = spec.denominator()
    if filter_num is None:
        filter_num = default_filter_numerator(spec)
    if epsilon is None:
        bound = max_spr_epsilon(filter_num, signal_den)
        epsilon = min(0.01, 0.5 * bound)
    if not epsilon > 0.0:
        raise ValueError("epsilon must be strictly positive")

    node_tf = TransferFunction(filter_num, epsilon * signal_den + filter_num)
    verdict = is_spr(node_tf)
    if not verdict:
        try:
            bound = max_spr_epsilon(filter_num, signal_den)
            hint = f"; strict positive-realness holds up to epsilon ~ {bound:.4g}"
        except InfeasibleDesignError:
            hint = ""
        raise InfeasibleDesignError(
            f"filter is not strictly positive real at epsilon = {epsilon:g} "
            f"({verdict.reason}){hint}"
        )
    a, c = canonical_generator(spec)
    return DacDesign(
        spec=spec,
        signal_den=signal_den,
        filter_num=filter_num,
        epsilon=epsilon,
        node_tf=node_tf,
        generator_a=a,
        generator_b=c,
        spr=verdict,
    )


def check_divisibility(design: DacDesign, rel_tol: float = 1e-9) -> bool:
    """Internal-model condition: ``d`` divides ``n_h - d_h``."""
    return divides(design.signal_den, design.filter_num - design.node_tf.den, rel_tol)


def check_generator_match(design: DacDesign, tol: float = 1e-9) -> bool:
    """The canonical generator's characteristic polynomial equals ``d``."""
    cp = char_poly(design.generator_a)
    d = design.signal_den
    if cp.degree != d.degree:
        return False
    diff = cp - d
    return diff.is_zero or diff.inf_norm <= tol


@dataclass(frozen=True)
class StabilityVerdict:
    """Closed-loop stability across the Laplacian spectrum.

    ``marginal`` collects eigenvalues whose loop polynomial has roots on
    (or vanishingly near) the imaginary axis; ``unstable`` those with
    roots strictly in the right half plane.
    """

    ok: bool
    eigenvalues: tuple[float, ...]
    marginal: tuple[float, ...]
    unstable: tuple[float, ...]

    def __bool__(self) -> bool:
        return self.ok


def _cluster_eigenvalues(values: np.ndarray) -> list[float]:
    """Collapse numerically repeated eigenvalues to single representatives."""
    out: list[float] = []
    scale = max(float(np.abs(values).max()), 1.0)
    for v in np.sort(values):
        if not out or v - out[-1] > _EIGENVALUE_CLUSTER_REL * scale:
            out.append(float(v))
    return out


def check_closed_loop_stability(design: DacDesign, laplacian: Laplacian) -> StabilityVerdict:
    """Hurwitz test of the consensus loop at every distinct eigenvalue.

    The coupled network diagonalizes along the Laplacian eigenvectors;
    each nonzero eigenvalue ``lam`` contributes one scalar loop with
    characteristic polynomial ``d_h * d_g + n_h * (n_g * lam**2 + d_g *
    lam)`` where ``g = d(s)'s generator resolvent``.  Marginal loops
    (roots within 1e-6 of the imaginary axis) are reported separately
    from strictly unstable ones.
    """
    if algebraic_connectivity(laplacian) <= CONNECTIVITY_TOL:
        raise GraphConnectivityError("consensus network must be connected")
    g = resolvent_transfer(design.generator_a, design.generator_b, design.generator_b)
    d_h = design.node_tf.den
    n_h = design.filter_num
    n_g, d_g = g.num, g.den

    eigs = symmetric_eigenvalues(laplacian.matrix)
    nonzero = _cluster_eigenvalues(eigs[eigs > CONNECTIVITY_TOL])
    marginal: list[float] = []
    unstable: list[float] = []
    for lam in nonzero:
        loop = d_h * d_g + n_h * (lam * lam * n_g + lam * d_g)
        if routh_stable(loop):
            continue
        # Shift the axis left: if p(s + sigma) is Hurwitz the roots sit
        # in the band 0 <= Re < sigma, i.e. the loop is only marginal.
        if routh_stable(loop.shifted(_MARGINALITY_SHIFT)):
            marginal.append(lam)
        else:
            unstable.append(lam)
    ok = not marginal and not unstable
    return StabilityVerdict(ok, tuple(nonzero), tuple(marginal), tuple(unstable))


def build_dac_network(
    design: DacDesign,
    node_signals,
    graph,
    t_end: float = 150.0,
    dt: float = 1e-3,
    name: str = "",
) -> Scenario:
    """Assemble a simulation scenario for a designed consensus network.

    Every node runs the designed filter as its agent; both coupling
    families use the given graph.  Node inputs must lie within the
    design's signal class.  The scenario tracks the instantaneous input
    average as its target series.

    Raises
    ------
    InfeasibleDesignError
        When any of the three design checks fails on this network.
    """
    node_signals = [
        s if isinstance(s, NodeSignal) else NodeSignal(*s) for s in node_signals
    ]
    if len(node_signals) != graph.n_nodes:
        raise ValueError("one input signal per node is required")
    lap = build_laplacian(graph)
    if not check_divisibility(design):
        raise InfeasibleDesignError("internal-model divisibility check failed")
    if not check_generator_match(design):
        raise InfeasibleDesignError("generator does not realize the signal class")
    stability = check_closed_loop_stability(design, lap)
    if not stability:
        raise InfeasibleDesignError(
            f"closed loop not Hurwitz: marginal at {stability.marginal}, "
            f"unstable at {stability.unstable}"
        )

    ensemble = DisturbanceEnsemble.from_node_signals(node_signals, spec=design.spec)
    agent = AgentModel.from_transfer(design.node_tf)
    x0 = np.zeros((graph.n_nodes, agent.state_dim))
    controller = ControllerConfig(mode="internal_model", model=design.spec)
    return Scenario(
        agent=agent,
        x0=x0,
        controller=controller,
        t_end=t_end,
        dt=dt,
        graph_p=graph,
        graph_im=graph,
        disturbance=ensemble,
        track_input_average=True,
        name=name,
    )
