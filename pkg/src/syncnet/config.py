"""Scenario files: a small TOML schema for closed-loop runs.

The parser validates the whole document before giving up, collecting
every problem into one :class:`ConfigError` so a bad file can be fixed
in a single pass.  The serializer writes only the schema subset it
reads back, which keeps parse/serialize round trips idempotent.  See
``docs/scenario.md`` for the field-by-field schema.
"""

from __future__ import annotations

import math

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .agents import AgentModel, GoodwinParams
from .control import AdaptationGains, ControllerConfig
from .exosystem import DisturbanceEnsemble, NodeSignal, SignalSpec
from .lti import Polynomial, TransferFunction, resolvent_transfer
from .netgraph import WeightedGraph
from .sim import Scenario

__all__ = ["ConfigError", "parse_scenario", "scenario_from_dict", "serialize_scenario"]

_MODES = ("none", "proportional", "internal_model", "leader")


class ConfigError(ValueError):
    """All problems found in a scenario document, one message per line."""

    def __init__(self, errors) -> None:
        self.errors = list(errors)
        lines = "\n".join(f"  - {e}" for e in self.errors)
        super().__init__(f"invalid scenario configuration:\n{lines}")


def parse_scenario(text: str) -> Scenario:
    """Parse a TOML scenario document into a :class:`Scenario`."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML syntax: {exc}"]) from exc
    return scenario_from_dict(data)


# --- field helpers ------------------------------------------------------


def _as_float(value, path: str, errors: list, positive: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{path}: expected a number, got {value!r}")
        return None
    value = float(value)
    if not math.isfinite(value):
        errors.append(f"{path}: must be finite")
        return None
    if positive and not value > 0.0:
        errors.append(f"{path}: must be strictly positive, got {value}")
        return None
    return value


def _as_float_list(value, path: str, errors: list, length: int | None = None):
    if not isinstance(value, list):
        errors.append(f"{path}: expected a list of numbers")
        return None
    out = []
    for k, item in enumerate(value):
        v = _as_float(item, f"{path}[{k}]", errors)
        if v is None:
            return None
        out.append(v)
    if length is not None and len(out) != length:
        errors.append(f"{path}: expected {length} entries, got {len(out)}")
        return None
    return out


def _as_bool(value, path: str, errors: list):
    if not isinstance(value, bool):
        errors.append(f"{path}: expected true or false, got {value!r}")
        return None
    return value


def _as_table(value, path: str, errors: list):
    if not isinstance(value, dict):
        errors.append(f"{path}: expected a table")
        return None
    return value


def _check_unknown(table: dict, known, path: str, errors: list) -> None:
    for key in table:
        if key not in known:
            errors.append(f"{path}{key}: unknown key")


# --- section parsers ----------------------------------------------------


def _parse_agent(data, errors: list) -> AgentModel | None:
    table = _as_table(data, "agent", errors)
    if table is None:
        return None
    kind = table.get("type")
    if kind == "goodwin":
        _check_unknown(table, {"type", "b", "p"}, "agent.", errors)
        b = _as_float_list(table.get("b", [0.5, 0.5, 0.5]), "agent.b", errors, length=3)
        p = _as_float(table.get("p", 20.0), "agent.p", errors, positive=True)
        if b is None or p is None:
            return None
        try:
            return AgentModel.from_goodwin(GoodwinParams(b[0], b[1], b[2], p))
        except ValueError as exc:
            errors.append(f"agent: {exc}")
            return None
    if kind == "linear":
        _check_unknown(table, {"type", "num", "den"}, "agent.", errors)
        num = den = None
        if "num" not in table:
            errors.append("agent.num: required for linear agents")
        else:
            num = _as_float_list(table["num"], "agent.num", errors)
        if "den" not in table:
            errors.append("agent.den: required for linear agents")
        else:
            den = _as_float_list(table["den"], "agent.den", errors)
        if num is None or den is None:
            return None
        try:
            tf = TransferFunction(Polynomial(num), Polynomial(den))
            if not tf.is_proper:
                errors.append("agent: transfer function must be proper")
                return None
            return AgentModel.from_transfer(tf)
        except (ValueError, ZeroDivisionError) as exc:
            errors.append(f"agent: {exc}")
            return None
    errors.append(f"agent.type: expected 'goodwin' or 'linear', got {kind!r}")
    return None


def _parse_nodes(data, agent: AgentModel | None, errors: list):
    nodes = data.get("nodes")
    if not isinstance(nodes, list) or not nodes:
        errors.append("nodes: at least two [[nodes]] tables are required")
        return None, None
    if len(nodes) < 2:
        errors.append(f"nodes: a network needs at least two nodes, got {len(nodes)}")
    x0_rows = []
    signals = []
    width = agent.state_dim if agent is not None else None
    for k, node in enumerate(nodes):
        path = f"nodes[{k}]"
        table = _as_table(node, path, errors)
        if table is None:
            return None, None
        _check_unknown(table, {"x0", "disturbance"}, path + ".", errors)
        if "x0" not in table:
            errors.append(f"{path}.x0: required")
            x0_rows.append(None)
        else:
            x0_rows.append(_as_float_list(table["x0"], f"{path}.x0", errors, length=width))
        signals.append(_parse_disturbance(table.get("disturbance"), path, errors))
    if any(row is None for row in x0_rows) or any(s is None for s in signals):
        return None, None
    widths = {len(row) for row in x0_rows}
    if len(widths) > 1:
        errors.append("nodes: x0 vectors have inconsistent lengths")
        return None, None
    return np.array(x0_rows), signals


def _parse_disturbance(value, path: str, errors: list) -> NodeSignal | None:
    if value is None:
        return NodeSignal()
    table = _as_table(value, f"{path}.disturbance", errors)
    if table is None:
        return None
    _check_unknown(table, {"constant", "sinusoids"}, f"{path}.disturbance.", errors)
    constant = _as_float(table.get("constant", 0.0), f"{path}.disturbance.constant", errors)
    sinusoids = []
    raw = table.get("sinusoids", [])
    if not isinstance(raw, list):
        errors.append(f"{path}.disturbance.sinusoids: expected a list of tables")
        return None
    for k, term in enumerate(raw):
        term_path = f"{path}.disturbance.sinusoids[{k}]"
        term_table = _as_table(term, term_path, errors)
        if term_table is None:
            return None
        _check_unknown(term_table, {"omega", "amplitude", "phase"}, term_path + ".", errors)
        omega = _as_float(term_table.get("omega"), f"{term_path}.omega", errors, positive=True)
        amp = _as_float(term_table.get("amplitude", 1.0), f"{term_path}.amplitude", errors)
        phase = _as_float(term_table.get("phase", 0.0), f"{term_path}.phase", errors)
        if omega is None or amp is None or phase is None:
            return None
        sinusoids.append((omega, amp, phase))
    if constant is None:
        return None
    try:
        return NodeSignal(constant, tuple(sinusoids))
    except ValueError as exc:
        errors.append(f"{path}.disturbance: {exc}")
        return None


def _parse_graph(data, n_nodes: int | None, errors: list):
    table = _as_table(data.get("graph"), "graph", errors)
    if table is None:
        return None, None
    _check_unknown(table, {"edges"}, "graph.", errors)
    raw = table.get("edges")
    if not isinstance(raw, list) or not raw:
        errors.append("graph.edges: a non-empty list of edges is required")
        return None, None
    section_start = len(errors)
    p_edges = []
    im_edges = []
    for k, entry in enumerate(raw):
        path = f"graph.edges[{k}]"
        if not isinstance(entry, list) or len(entry) not in (3, 4):
            errors.append(
                f"{path}: expected [i, j, weight] or [i, j, p_weight, n_weight]"
            )
            continue
        i, j = entry[0], entry[1]
        ok = True
        for label, v in (("i", i), ("j", j)):
            if isinstance(v, bool) or not isinstance(v, int):
                errors.append(f"{path}.{label}: node indices are 1-based integers")
                ok = False
        if not ok:
            continue
        if n_nodes is not None and not (1 <= i <= n_nodes and 1 <= j <= n_nodes):
            errors.append(f"{path}: node index out of range 1..{n_nodes}")
            continue
        wp = _as_float(entry[2], f"{path}.p_weight", errors, positive=True)
        wn = (
            _as_float(entry[3], f"{path}.n_weight", errors, positive=True)
            if len(entry) == 4
            else wp
        )
        if wp is None or wn is None:
            continue
        p_edges.append((i - 1, j - 1, wp))
        im_edges.append((i - 1, j - 1, wn))
    if len(errors) > section_start or n_nodes is None:
        # Without a valid node count the graphs cannot be built; the
        # nodes section has already recorded why.
        return None, None
    try:
        graph_p = WeightedGraph(n_nodes, tuple(p_edges))
        graph_im = WeightedGraph(n_nodes, tuple(im_edges))
    except ValueError as exc:
        errors.append(f"graph: {exc}")
        return None, None
    return graph_p, graph_im


def _parse_controller(data, n_nodes: int | None, errors: list) -> ControllerConfig | None:
    table = _as_table(data.get("controller", {"mode": "internal_model"}), "controller", errors)
    if table is None:
        return None
    section_start = len(errors)
    _check_unknown(table, {"mode", "leader", "adaptation", "model"}, "controller.", errors)
    mode = table.get("mode", "internal_model")
    if mode not in _MODES:
        errors.append(f"controller.mode: expected one of {_MODES}, got {mode!r}")
        return None
    leader = None
    if "leader" in table:
        raw = table["leader"]
        if isinstance(raw, bool) or not isinstance(raw, int):
            errors.append("controller.leader: expected a 1-based node index")
        elif n_nodes is not None and not 1 <= raw <= n_nodes:
            errors.append(f"controller.leader: out of range 1..{n_nodes}")
        else:
            leader = raw - 1
    adaptation = None
    if "adaptation" in table:
        sub = _as_table(table["adaptation"], "controller.adaptation", errors)
        if sub is not None:
            _check_unknown(sub, {"alpha", "beta"}, "controller.adaptation.", errors)
            alpha = _as_float(sub.get("alpha", 1.0), "controller.adaptation.alpha", errors, positive=True)
            beta = _as_float(sub.get("beta", 1.0), "controller.adaptation.beta", errors, positive=True)
            if alpha is not None and beta is not None:
                adaptation = AdaptationGains(alpha, beta)
    model = None
    if "model" in table:
        sub = _as_table(table["model"], "controller.model", errors)
        if sub is not None:
            _check_unknown(sub, {"constant", "omega"}, "controller.model.", errors)
            constant = _as_bool(sub.get("constant", False), "controller.model.constant", errors)
            omegas = _as_float_list(sub.get("omega", []), "controller.model.omega", errors)
            if constant is not None and omegas is not None:
                try:
                    model = SignalSpec(constant, tuple(omegas))
                except ValueError as exc:
                    errors.append(f"controller.model: {exc}")
    if len(errors) > section_start:
        return None
    try:
        return ControllerConfig(mode=mode, leader=leader, adaptation=adaptation, model=model)
    except ValueError as exc:
        errors.append(f"controller: {exc}")
        return None


def scenario_from_dict(data: dict) -> Scenario:
    """Build and validate a scenario from parsed TOML data."""
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["scenario: expected a TOML document"])
    known = {
        "name",
        "t_end",
        "dt",
        "record_states",
        "track_input_average",
        "agent",
        "nodes",
        "graph",
        "controller",
    }
    _check_unknown(data, known, "", errors)

    name = data.get("name", "")
    if not isinstance(name, str):
        errors.append(f"name: expected a string, got {name!r}")
        name = ""
    if "t_end" not in data:
        errors.append("t_end: required")
        t_end = None
    else:
        t_end = _as_float(data["t_end"], "t_end", errors, positive=True)
    if "dt" not in data:
        errors.append("dt: required")
        dt = None
    else:
        dt = _as_float(data["dt"], "dt", errors, positive=True)
    record_states = _as_bool(data.get("record_states", False), "record_states", errors)
    track_avg = _as_bool(data.get("track_input_average", False), "track_input_average", errors)

    agent = _parse_agent(data.get("agent"), errors)
    x0, signals = _parse_nodes(data, agent, errors)
    n_nodes = len(x0) if x0 is not None else None
    mode = data.get("controller", {}).get("mode", "internal_model") if isinstance(
        data.get("controller", {}), dict
    ) else None
    if mode == "none" and "graph" not in data:
        graph_p = graph_im = None
    else:
        graph_p, graph_im = _parse_graph(data, n_nodes, errors)
    controller = _parse_controller(data, n_nodes, errors)

    if errors:
        raise ConfigError(errors)

    disturbance = None
    if any(not s.is_zero for s in signals):
        try:
            disturbance = DisturbanceEnsemble.from_node_signals(
                signals, spec=controller.model
            )
        except ValueError as exc:
            raise ConfigError([f"nodes.disturbance: {exc}"]) from exc

    try:
        return Scenario(
            agent=agent,
            x0=x0,
            controller=controller,
            t_end=t_end,
            dt=dt,
            graph_p=graph_p,
            graph_im=graph_im,
            disturbance=disturbance,
            record_states=record_states,
            track_input_average=track_avg,
            name=name,
        )
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc


# --- serialization ------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError("cannot serialize non-finite numbers to TOML")
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__} to TOML")


def _agent_transfer(agent: AgentModel) -> TransferFunction:
    if agent.tf is not None:
        return agent.tf
    strict = resolvent_transfer(agent.ss.a, agent.ss.b, agent.ss.c)
    return TransferFunction(strict.num + agent.ss.d * strict.den, strict.den)


def serialize_scenario(scenario: Scenario) -> str:
    """Render a scenario back into its TOML document form."""
    lines: list[str] = []
    if scenario.name:
        lines.append(f"name = {_fmt(scenario.name)}")
    lines.append(f"t_end = {_fmt(float(scenario.t_end))}")
    lines.append(f"dt = {_fmt(float(scenario.dt))}")
    if scenario.record_states:
        lines.append("record_states = true")
    if scenario.track_input_average:
        lines.append("track_input_average = true")

    lines.append("")
    lines.append("[agent]")
    agent = scenario.agent
    if agent.kind == "goodwin":
        g = agent.goodwin
        lines.append('type = "goodwin"')
        lines.append(f"b = {_fmt([g.b1, g.b2, g.b3])}")
        lines.append(f"p = {_fmt(g.hill_p)}")
    else:
        tf = _agent_transfer(agent)
        lines.append('type = "linear"')
        lines.append(f"num = {_fmt(tf.num.coeffs)}")
        lines.append(f"den = {_fmt(tf.den.coeffs)}")

    if scenario.graph_p is not None:
        graph_im = scenario.graph_im if scenario.graph_im is not None else scenario.graph_p
        pairs_p = [(i, j) for i, j, _ in scenario.graph_p.edges]
        pairs_im = [(i, j) for i, j, _ in graph_im.edges]
        if pairs_p != pairs_im:
            raise ValueError("graph families with different edge sets cannot be serialized")
        lines.append("")
        lines.append("[graph]")
        lines.append("edges = [")
        for (i, j, wp), (_, _, wn) in zip(scenario.graph_p.edges, graph_im.edges):
            lines.append(f"    [{i + 1}, {j + 1}, {_fmt(wp)}, {_fmt(wn)}],")
        lines.append("]")

    ctrl = scenario.controller
    lines.append("")
    lines.append("[controller]")
    lines.append(f"mode = {_fmt(ctrl.mode)}")
    if ctrl.leader is not None:
        lines.append(f"leader = {ctrl.leader + 1}")
    if ctrl.adaptation is not None:
        lines.append("")
        lines.append("[controller.adaptation]")
        lines.append(f"alpha = {_fmt(ctrl.adaptation.alpha)}")
        lines.append(f"beta = {_fmt(ctrl.adaptation.beta)}")
    if ctrl.model is not None:
        lines.append("")
        lines.append("[controller.model]")
        lines.append(f"constant = {_fmt(ctrl.model.has_constant)}")
        lines.append(f"omega = {_fmt(list(ctrl.model.frequencies))}")

    signals = _node_signals(scenario)
    for k in range(scenario.n_nodes):
        lines.append("")
        lines.append("[[nodes]]")
        lines.append(f"x0 = {_fmt(scenario.x0[k])}")
        sig = signals[k]
        if sig is not None and not sig.is_zero:
            lines.append("")
            lines.append("[nodes.disturbance]")
            if sig.constant != 0.0:
                lines.append(f"constant = {_fmt(sig.constant)}")
            if sig.sinusoids:
                terms = ", ".join(
                    "{ omega = %s, amplitude = %s, phase = %s }"
                    % (_fmt(w), _fmt(a), _fmt(ph))
                    for w, a, ph in sig.sinusoids
                )
                lines.append(f"sinusoids = [{terms}]")
    lines.append("")
    return "\n".join(lines)


def _node_signals(scenario: Scenario) -> list:
    ens = scenario.disturbance
    if ens is None:
        return [None] * scenario.n_nodes
    if ens.node_signals is not None:
        return list(ens.node_signals)
    # Reconstruct amplitude/phase pairs from the generator states.
    out = []
    offset = 1 if ens.spec.has_constant else 0
    for row in ens.states0:
        constant = float(row[0]) if ens.spec.has_constant else 0.0
        sinusoids = []
        for k, w in enumerate(ens.spec.frequencies):
            i = offset + 2 * k
            amp = math.hypot(row[i], row[i + 1])
            if amp != 0.0:
                sinusoids.append((w, amp, math.atan2(row[i + 1], row[i])))
        out.append(NodeSignal(constant, tuple(sinusoids)))
    return out
