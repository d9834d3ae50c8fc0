"""Closed-loop network simulation on a fixed Runge-Kutta grid.

One flat state vector carries every integrated quantity: agent states,
internal-model controller states and, when adaptation is on, one weight
per undirected edge and family.  Disturbances are never integrated;
they are evaluated from their closed form at whatever instants the
integrator asks for, including the half-step stage times.
"""

from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np

from .agents import (
    AgentModel,
    goodwin_iofp_gain,
    hill_max_slope,
    sync_condition_holds,
)
from .control import ControllerConfig
from .exosystem import DisturbanceEnsemble, SignalSpec, canonical_generator
from .netgraph import WeightedGraph, algebraic_connectivity, build_laplacian

__all__ = [
    "DIVERGENCE_THRESHOLD",
    "SimulationDivergenceError",
    "Scenario",
    "Trace",
    "rk4_step",
    "simulate",
    "trace_to_csv",
    "trailing_window_mask",
    "sync_error",
    "tracking_error",
    "peak_to_peak",
]

DIVERGENCE_THRESHOLD = 1e9


class SimulationDivergenceError(RuntimeError):
    """Raised when any integrated quantity leaves the trust region."""

    def __init__(self, message: str, time: float) -> None:
        super().__init__(message)
        self.time = time


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed to reproduce one closed-loop run.

    ``graph_p`` weights the proportional coupling and ``graph_im`` the
    internal-model coupling; they share node count but may differ in
    weights.  ``graph_im`` defaults to ``graph_p``.  Controller states
    start at ``zeta0`` (zeros unless given).  ``aux_b_rows`` overrides
    the internal-model input rows, one row per node.
    """

    agent: AgentModel
    x0: np.ndarray
    controller: ControllerConfig
    t_end: float
    dt: float
    graph_p: WeightedGraph | None = None
    graph_im: WeightedGraph | None = None
    disturbance: DisturbanceEnsemble | None = None
    zeta0: np.ndarray | None = None
    aux_b_rows: np.ndarray | None = None
    record_states: bool = False
    track_input_average: bool = False
    name: str = ""

    def __post_init__(self) -> None:
        x0 = np.atleast_2d(np.asarray(self.x0, dtype=float))
        if x0.shape[0] < 2:
            raise ValueError("a network needs at least two nodes")
        if x0.shape[1] != self.agent.state_dim:
            raise ValueError(
                f"initial states have width {x0.shape[1]}, agent needs {self.agent.state_dim}"
            )
        if not np.all(np.isfinite(x0)):
            raise ValueError("non-finite initial states")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        n = x0.shape[0]

        if not self.dt > 0.0:
            raise ValueError("dt must be strictly positive")
        if not self.t_end >= self.dt:
            raise ValueError("t_end must be at least one step long")

        mode = self.controller.mode
        if mode != "none":
            if self.graph_p is None:
                raise ValueError(f"controller mode {mode!r} needs a coupling graph")
            if self.graph_p.n_nodes != n:
                raise ValueError("coupling graph size does not match the node count")
            if self.agent.has_feedthrough:
                raise ValueError(
                    "feedthrough agents close an algebraic loop under output coupling"
                )
        if self.controller.uses_internal_model:
            if self.graph_im is None:
                object.__setattr__(self, "graph_im", self.graph_p)
            if self.graph_im.n_nodes != n:
                raise ValueError("internal-model graph size does not match the node count")

        if self.disturbance is not None and self.disturbance.n_nodes != n:
            raise ValueError("disturbance ensemble size does not match the node count")

        spec = self.model_spec
        if self.controller.uses_internal_model:
            if spec is None:
                raise ValueError(
                    "internal-model control needs disturbances or an explicit signal class"
                )
            if self.disturbance is not None and not spec.covers(self.disturbance.spec):
                raise ValueError("controller signal class does not cover the disturbances")
            if self.zeta0 is not None:
                zeta0 = np.atleast_2d(np.asarray(self.zeta0, dtype=float))
                if zeta0.shape != (n, spec.dim):
                    raise ValueError(f"zeta0 must have shape ({n}, {spec.dim})")
                zeta0.setflags(write=False)
                object.__setattr__(self, "zeta0", zeta0)
            if self.aux_b_rows is not None:
                rows = np.atleast_2d(np.asarray(self.aux_b_rows, dtype=float))
                if rows.shape != (n, spec.dim):
                    raise ValueError(f"aux_b_rows must have shape ({n}, {spec.dim})")
                rows.setflags(write=False)
                object.__setattr__(self, "aux_b_rows", rows)

        if mode == "leader":
            leader = self.controller.leader
            if not 0 <= leader < n:
                raise ValueError(f"leader index {leader} out of range for {n} nodes")
            if self.disturbance is not None and np.any(
                self.disturbance.states0[leader] != 0.0
            ):
                raise ValueError("the leader node must carry a zero disturbance")

    @property
    def n_nodes(self) -> int:
        return self.x0.shape[0]

    @property
    def model_spec(self) -> SignalSpec | None:
        """Signal class of the embedded generators."""
        if self.controller.model is not None:
            return self.controller.model
        if self.disturbance is not None:
            return self.disturbance.spec
        return None


@dataclass(eq=False)
class Trace:
    """Gridded simulation record; arrays are node-by-time."""

    times: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    eta: np.ndarray
    target: np.ndarray | None = None
    states: np.ndarray | None = None
    weights_p: np.ndarray | None = None
    weights_im: np.ndarray | None = None
    name: str = ""

    @property
    def n_nodes(self) -> int:
        return self.y.shape[0]


def rk4_step(rhs, state, t: float, dt: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of ``state' = rhs(t, state)``.

    Raises :class:`SimulationDivergenceError` when any stage derivative
    turns non-finite.
    """
    state = np.asarray(state, dtype=float)
    stages = []
    for offset, base in ((0.0, None), (0.5, 0), (0.5, 1), (1.0, 2)):
        point = state if base is None else state + (offset * dt) * stages[base]
        k = np.asarray(rhs(t + offset * dt, point), dtype=float)
        if not np.all(np.isfinite(k)):
            raise SimulationDivergenceError(
                f"non-finite derivative at t = {t + offset * dt:.6g}", t
            )
        stages.append(k)
    k1, k2, k3, k4 = stages
    return state + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def _divergence_detail(flat_index: int, layout) -> str:
    for name, start, stop, per_node in layout:
        if start <= flat_index < stop:
            if per_node:
                node = (flat_index - start) // per_node
                return f"{name} of node {node + 1}"
            return f"{name} {flat_index - start + 1}"
    return "state"


def simulate(scenario: Scenario) -> Trace:
    """Integrate a scenario on its fixed grid and record the trace.

    The horizon is rounded to a whole number of steps.  Any integrated
    value exceeding ``DIVERGENCE_THRESHOLD`` in magnitude (or turning
    non-finite) aborts with the offending quantity and time.
    """
    agent = scenario.agent
    n = scenario.n_nodes
    sd = agent.state_dim
    mode = scenario.controller.mode
    uses_im = scenario.controller.uses_internal_model
    adaptation = scenario.controller.adaptation
    ens = scenario.disturbance

    if agent.kind == "goodwin" and mode != "none":
        mu2 = algebraic_connectivity(build_laplacian(scenario.graph_p))
        gain = goodwin_iofp_gain(agent.goodwin, hill_max_slope(agent.goodwin.hill_p))
        if not sync_condition_holds(gain, mu2):
            warnings.warn(
                f"synchronization condition violated: passivity gain {gain:.4g} "
                f"+ connectivity {mu2:.4g} is not positive",
                RuntimeWarning,
                stacklevel=2,
            )

    n_steps = int(round(scenario.t_end / scenario.dt))
    n_steps = max(n_steps, 1)
    dt = scenario.dt
    times = np.arange(n_steps + 1) * dt

    # --- flat state layout -------------------------------------------
    na = n * sd
    sections = [("agent state", 0, na, sd)]
    offset = na
    z_slice = None
    nz = 0
    a_im = b_rows = b_shared = None
    if uses_im:
        spec = scenario.model_spec
        nz = spec.dim
        a_im, c_im = canonical_generator(spec)
        b_rows = (
            scenario.aux_b_rows
            if scenario.aux_b_rows is not None
            else np.tile(c_im, (n, 1))
        )
        b_shared = all(np.array_equal(b_rows[0], row) for row in b_rows[1:])
        z_slice = slice(offset, offset + n * nz)
        sections.append(("controller state", offset, offset + n * nz, nz))
        offset += n * nz

    adaptive = adaptation is not None
    wp_slice = wn_slice = None
    inc_p = inc_im = None
    lp_mat = li_mat = None
    if mode != "none":
        if adaptive:
            inc_p = scenario.graph_p.incidence_matrix()
            m_p = inc_p.shape[1]
            wp_slice = slice(offset, offset + m_p)
            sections.append(("coupling weight", offset, offset + m_p, 0))
            offset += m_p
        else:
            lp_mat = build_laplacian(scenario.graph_p).matrix
    if uses_im:
        if adaptive:
            inc_im = scenario.graph_im.incidence_matrix()
            m_im = inc_im.shape[1]
            wn_slice = slice(offset, offset + m_im)
            sections.append(("internal-model weight", offset, offset + m_im, 0))
            offset += m_im
        else:
            li_mat = build_laplacian(scenario.graph_im).matrix

    state = np.zeros(offset)
    state[:na] = scenario.x0.ravel()
    if uses_im and scenario.zeta0 is not None:
        state[z_slice] = scenario.zeta0.ravel()
    if adaptive and wp_slice is not None:
        state[wp_slice] = scenario.graph_p.weight_vector
    if adaptive and wn_slice is not None:
        state[wn_slice] = scenario.graph_im.weight_vector

    leader = scenario.controller.leader
    alpha = adaptation.alpha if adaptive else 0.0
    beta = adaptation.beta if adaptive else 0.0

    def rhs(t: float, s: np.ndarray) -> np.ndarray:
        out = np.empty_like(s)
        x = s[:na].reshape(n, sd)
        y = agent.output_batch(x)
        u = ens.phi(t) if ens is not None else np.zeros(n)
        if mode != "none":
            if adaptive:
                wp = s[wp_slice]
                diff_p = inc_p.T @ y
                lp_y = inc_p @ (wp * diff_p)
                out[wp_slice] = alpha * diff_p * diff_p
            else:
                lp_y = lp_mat @ y
            u = u - lp_y
            if uses_im:
                z = s[z_slice].reshape(n, nz)
                if adaptive:
                    wn = s[wn_slice]
                    diff_n = inc_im.T @ y
                    coupling = inc_im @ (wn * diff_n)
                    out[wn_slice] = beta * diff_n * diff_n
                    eta = z @ b_rows[0] if b_shared else np.einsum("ij,ij->i", z, b_rows)
                    u = u - inc_im @ (wn * (inc_im.T @ eta))
                else:
                    coupling = li_mat @ y
                    eta = z @ b_rows[0] if b_shared else np.einsum("ij,ij->i", z, b_rows)
                    u = u - li_mat @ eta
                dz = z @ a_im.T
                if b_shared:
                    dz = dz + np.outer(coupling, b_rows[0])
                else:
                    dz = dz + coupling[:, None] * b_rows
                out[z_slice] = dz.ravel()
            if leader is not None:
                u[leader] = -lp_y[leader]
        out[:na] = agent.rhs_batch(x, u).ravel()
        return out

    # --- recording buffers -------------------------------------------
    y_rec = np.empty((n, n_steps + 1))
    eta_rec = np.zeros((n, n_steps + 1))
    states_rec = np.empty((n, sd, n_steps + 1)) if scenario.record_states else None
    wp_rec = (
        np.empty((wp_slice.stop - wp_slice.start, n_steps + 1))
        if wp_slice is not None
        else None
    )
    wn_rec = (
        np.empty((wn_slice.stop - wn_slice.start, n_steps + 1))
        if wn_slice is not None
        else None
    )

    def record(k: int, s: np.ndarray) -> None:
        x = s[:na].reshape(n, sd)
        y_rec[:, k] = agent.output_batch(x)
        if uses_im:
            z = s[z_slice].reshape(n, nz)
            eta_rec[:, k] = (
                z @ b_rows[0] if b_shared else np.einsum("ij,ij->i", z, b_rows)
            )
        if states_rec is not None:
            states_rec[:, :, k] = x
        if wp_rec is not None:
            wp_rec[:, k] = s[wp_slice]
        if wn_rec is not None:
            wn_rec[:, k] = s[wn_slice]

    sixth = dt / 6.0
    half = 0.5 * dt
    with np.errstate(over="ignore", invalid="ignore"):
        record(0, state)
        for k in range(n_steps):
            t = times[k]
            k1 = rhs(t, state)
            k2 = rhs(t + half, state + half * k1)
            k3 = rhs(t + half, state + half * k2)
            k4 = rhs(t + dt, state + dt * k3)
            state = state + sixth * (k1 + 2.0 * (k2 + k3) + k4)
            peak = np.abs(state).max()
            if not peak < DIVERGENCE_THRESHOLD:
                flat = np.abs(state)
                bad = ~(flat < DIVERGENCE_THRESHOLD)
                idx = int(np.argmax(bad))
                detail = _divergence_detail(idx, sections)
                raise SimulationDivergenceError(
                    f"simulation diverged at t = {times[k + 1]:.6g}: {detail} "
                    f"reached magnitude {flat[idx]:.3e}",
                    float(times[k + 1]),
                )
            record(k + 1, state)

    phi_rec = (
        ens.phi_grid(times) if ens is not None else np.zeros((n, n_steps + 1))
    )
    target = phi_rec.mean(axis=0) if scenario.track_input_average else None
    return Trace(
        times=times,
        y=y_rec,
        phi=phi_rec,
        eta=eta_rec,
        target=target,
        states=states_rec,
        weights_p=wp_rec,
        weights_im=wn_rec,
        name=scenario.name,
    )


# --- metrics ----------------------------------------------------------


def trailing_window_mask(times: np.ndarray, window_fraction: float = 0.2) -> np.ndarray:
    """Boolean mask selecting the trailing fraction of the horizon."""
    if not 0.0 < window_fraction <= 1.0:
        raise ValueError("window_fraction must lie in (0, 1]")
    times = np.asarray(times, dtype=float)
    horizon = times[-1] - times[0]
    cutoff = times[-1] - window_fraction * horizon
    return times >= cutoff - 1e-12 * max(1.0, abs(cutoff))


def sync_error(trace: Trace, window_fraction: float = 0.2):
    """Worst instantaneous deviation from the network mean output.

    Returns the full time series together with its maximum over the
    trailing window.
    """
    mean = trace.y.mean(axis=0)
    series = np.abs(trace.y - mean).max(axis=0)
    mask = trailing_window_mask(trace.times, window_fraction)
    return series, float(series[mask].max())


def tracking_error(trace: Trace, target=None, window_fraction: float = 0.2) -> float:
    """Worst deviation of any output from the target over the trailing window."""
    if target is None:
        target = trace.target
    if target is None:
        raise ValueError("trace carries no target series and none was given")
    target = np.asarray(target, dtype=float)
    if target.shape != trace.times.shape:
        raise ValueError("target series length does not match the time grid")
    mask = trailing_window_mask(trace.times, window_fraction)
    return float(np.abs(trace.y[:, mask] - target[mask]).max())


def peak_to_peak(series, times, window_fraction: float = 0.2) -> float:
    """Peak-to-peak excursion of a series over the trailing window."""
    series = np.asarray(series, dtype=float)
    mask = trailing_window_mask(np.asarray(times, dtype=float), window_fraction)
    window = series[mask]
    return float(window.max() - window.min())


def trace_to_csv(trace: Trace, path) -> None:
    """Write a trace as comma-separated values with 17 significant digits.

    Columns: time, outputs, disturbances, internal-model outputs, the
    synchronization-error series, then adapted weights when present.
    """
    n = trace.n_nodes
    columns = [trace.times]
    header = ["t"]
    for prefix, block in (("y", trace.y), ("phi", trace.phi), ("eta", trace.eta)):
        for i in range(n):
            columns.append(block[i])
            header.append(f"{prefix}_{i + 1}")
    series, _ = sync_error(trace)
    columns.append(series)
    header.append("sync_err")
    if trace.target is not None:
        columns.append(trace.target)
        header.append("target")
    for prefix, block in (("wp", trace.weights_p), ("wn", trace.weights_im)):
        if block is not None:
            for e in range(block.shape[0]):
                columns.append(block[e])
                header.append(f"{prefix}_{e + 1}")
    data = np.column_stack(columns)
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
