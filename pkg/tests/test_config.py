"""Scenario TOML parsing, error collection, and round-trip serialization.

Ground truth: hand-written documents with known field values, and the
schema contract that every validation failure in a document is reported
in a single ConfigError with a field path.  The round-trip law is
semantic: serialize -> reparse must reproduce the scenario (graphs,
initial conditions, controller, disturbance waveforms), not the exact
byte layout of the original file.
"""

import numpy as np
import pytest

from syncnet import (
    ConfigError,
    load_preset,
    parse_scenario,
    preset_text,
    serialize_scenario,
)
from syncnet.netgraph import build_laplacian
from syncnet.presets import PRESET_IDS

GOOD_DOC = """
name = "demo"
t_end = 5.0
dt = 0.01

[agent]
type = "goodwin"
b = [0.5, 0.6, 0.7]
p = 4.0

[graph]
edges = [
    [1, 2, 1.5],
    [2, 3, 1.0, 2.0],
]

[controller]
mode = "internal_model"

[controller.model]
constant = true
omega = [2.0]

[[nodes]]
x0 = [0.1, 0.2, 0.3]

[nodes.disturbance]
constant = 0.4

[[nodes]]
x0 = [1.0, 1.0, 1.0]

[nodes.disturbance]
sinusoids = [{ omega = 2.0, amplitude = 0.5, phase = 1.0 }]

[[nodes]]
x0 = [0.0, 0.0, 0.0]
"""


class TestParsing:
    def test_complete_document(self):
        sc = parse_scenario(GOOD_DOC)
        assert sc.name == "demo"
        assert sc.t_end == 5.0
        assert sc.dt == 0.01
        assert sc.n_nodes == 3
        np.testing.assert_allclose(sc.x0[0], [0.1, 0.2, 0.3])
        assert sc.agent.kind == "goodwin"
        assert sc.agent.goodwin.b2 == 0.6
        assert sc.controller.mode == "internal_model"
        assert sc.controller.model.has_constant
        assert sc.controller.model.frequencies == (2.0,)

    def test_edge_weights_split_between_graph_families(self):
        sc = parse_scenario(GOOD_DOC)
        # Three-element edges share one weight, four-element rows split.
        lp = build_laplacian(sc.graph_p).matrix
        li = build_laplacian(sc.graph_im).matrix
        assert lp[0, 1] == -1.5
        assert li[0, 1] == -1.5
        assert lp[1, 2] == -1.0
        assert li[1, 2] == -2.0

    def test_disturbance_values(self):
        sc = parse_scenario(GOOD_DOC)
        ens = sc.disturbance
        phi0 = ens.phi(0.0)
        assert phi0[0] == pytest.approx(0.4, abs=1e-12)
        assert phi0[1] == pytest.approx(0.5 * np.cos(1.0), abs=1e-12)
        assert phi0[2] == 0.0

    def test_defaults(self):
        # No [controller] section: internal-model control is the default,
        # with the signal class inferred from the node disturbances.
        sc = parse_scenario(
            """
t_end = 1.0
dt = 0.1

[agent]
type = "linear"
num = [1.0]
den = [1.0, 1.0]

[graph]
edges = [[1, 2, 1.0]]

[[nodes]]
x0 = [0.0]

[nodes.disturbance]
constant = 1.0

[[nodes]]
x0 = [0.0]
"""
        )
        assert sc.name == ""
        assert sc.controller.mode == "internal_model"
        assert sc.controller.leader is None
        assert sc.disturbance is not None
        assert not sc.record_states
        assert not sc.track_input_average

    def test_internal_model_needs_signal_class(self):
        # Undisturbed network with no explicit model: nothing pins down
        # the internal-model dynamics, so the document is rejected.
        with pytest.raises(ConfigError, match="signal class"):
            parse_scenario(
                """
t_end = 1.0
dt = 0.1

[agent]
type = "linear"
num = [1.0]
den = [1.0, 1.0]

[graph]
edges = [[1, 2, 1.0]]

[[nodes]]
x0 = [0.0]

[[nodes]]
x0 = [0.0]
"""
            )

    def test_uncoupled_mode_allows_missing_graph(self):
        text = preset_text("fig1")
        sc = parse_scenario(text)
        assert sc.controller.mode == "none"
        assert sc.graph_p is None

    def test_all_presets_parse(self):
        for pid in PRESET_IDS:
            sc = load_preset(pid)
            assert sc.name == pid
            assert sc.n_nodes >= 2
            assert sc.t_end > 0

    def test_toml_syntax_error(self):
        with pytest.raises(ConfigError, match="TOML syntax"):
            parse_scenario("t_end = [unclosed")


class TestErrorCollection:
    def test_missing_agent_reports_field_path(self):
        text = GOOD_DOC.replace('[agent]\ntype = "goodwin"\nb = [0.5, 0.6, 0.7]\np = 4.0\n', "")
        with pytest.raises(ConfigError) as err:
            parse_scenario(text)
        assert any(e.startswith("agent") for e in err.value.errors)

    def test_negative_dt(self):
        with pytest.raises(ConfigError, match="dt: must be strictly positive"):
            parse_scenario(GOOD_DOC.replace("dt = 0.01", "dt = -1"))

    def test_multiple_errors_collected_in_one_pass(self):
        bad = (
            GOOD_DOC.replace("dt = 0.01", "dt = -1")
            .replace("t_end = 5.0", "")
            .replace("p = 4.0", "p = -2.0")
        )
        with pytest.raises(ConfigError) as err:
            parse_scenario(bad)
        messages = err.value.errors
        assert len(messages) >= 3
        joined = "\n".join(messages)
        assert "dt" in joined
        assert "t_end: required" in joined
        assert "agent.p" in joined

    def test_unknown_keys_flagged(self):
        with pytest.raises(ConfigError, match="agent.flavor: unknown key"):
            parse_scenario(GOOD_DOC.replace('type = "goodwin"', 'type = "goodwin"\nflavor = 3'))

    def test_bad_edge_shape(self):
        bad = GOOD_DOC.replace("[1, 2, 1.5]", "[1, 2]")
        with pytest.raises(ConfigError, match=r"graph.edges\[0\]"):
            parse_scenario(bad)

    def test_edge_index_out_of_range(self):
        bad = GOOD_DOC.replace("[2, 3, 1.0, 2.0]", "[2, 9, 1.0, 2.0]")
        with pytest.raises(ConfigError, match="out of range 1..3"):
            parse_scenario(bad)

    def test_nonpositive_edge_weight(self):
        bad = GOOD_DOC.replace("[1, 2, 1.5]", "[1, 2, -1.5]")
        with pytest.raises(ConfigError, match=r"edges\[0\].p_weight"):
            parse_scenario(bad)

    def test_x0_length_must_match_agent(self):
        bad = GOOD_DOC.replace("x0 = [0.1, 0.2, 0.3]", "x0 = [0.1, 0.2]")
        with pytest.raises(ConfigError, match=r"nodes\[0\].x0: expected 3 entries"):
            parse_scenario(bad)

    def test_single_node_rejected(self):
        with pytest.raises(ConfigError, match="at least two"):
            parse_scenario(
                """
t_end = 1.0
dt = 0.1

[agent]
type = "goodwin"

[graph]
edges = [[1, 1, 1.0]]

[[nodes]]
x0 = [0.0, 0.0, 0.0]
"""
            )

    def test_bad_controller_mode(self):
        bad = GOOD_DOC.replace('mode = "internal_model"', 'mode = "psychic"')
        with pytest.raises(ConfigError, match="controller.mode"):
            parse_scenario(bad)

    def test_leader_out_of_range(self):
        bad = GOOD_DOC.replace(
            'mode = "internal_model"', 'mode = "leader"\nleader = 7'
        )
        with pytest.raises(ConfigError, match="controller.leader: out of range"):
            parse_scenario(bad)

    def test_improper_linear_agent(self):
        with pytest.raises(ConfigError, match="proper"):
            parse_scenario(
                """
t_end = 1.0
dt = 0.1

[agent]
type = "linear"
num = [1.0, 2.0, 1.0]
den = [1.0, 1.0]

[graph]
edges = [[1, 2, 1.0]]

[[nodes]]
x0 = [0.0]

[[nodes]]
x0 = [0.0]
"""
            )

    def test_model_missing_disturbance_frequency(self):
        # Controller model covers only constants; a 2 rad/s disturbance
        # cannot be represented and must be rejected at parse time.
        bad = GOOD_DOC.replace("omega = [2.0]", "omega = []")
        with pytest.raises(ConfigError, match="disturbance"):
            parse_scenario(bad)


def _scenarios_equal(a, b):
    assert a.name == b.name
    assert a.t_end == b.t_end
    assert a.dt == b.dt
    assert a.n_nodes == b.n_nodes
    assert a.record_states == b.record_states
    assert a.track_input_average == b.track_input_average
    np.testing.assert_allclose(a.x0, b.x0, atol=1e-14)

    assert a.agent.kind == b.agent.kind
    if a.agent.kind == "goodwin":
        assert a.agent.goodwin == b.agent.goodwin

    assert (a.graph_p is None) == (b.graph_p is None)
    if a.graph_p is not None:
        np.testing.assert_allclose(build_laplacian(a.graph_p).matrix, build_laplacian(b.graph_p).matrix, atol=1e-14)
        np.testing.assert_allclose(build_laplacian(a.graph_im).matrix, build_laplacian(b.graph_im).matrix, atol=1e-14)

    ca, cb = a.controller, b.controller
    assert ca.mode == cb.mode
    assert ca.leader == cb.leader
    assert (ca.model is None) == (cb.model is None)
    if ca.model is not None:
        assert ca.model.has_constant == cb.model.has_constant
        assert ca.model.frequencies == cb.model.frequencies

    assert (a.disturbance is None) == (b.disturbance is None)
    if a.disturbance is not None:
        times = np.linspace(0.0, a.t_end, 101)
        np.testing.assert_allclose(
            a.disturbance.phi_grid(times), b.disturbance.phi_grid(times), atol=1e-12
        )


class TestRoundTrip:
    @pytest.mark.parametrize("pid", PRESET_IDS)
    def test_presets_round_trip(self, pid):
        original = load_preset(pid)
        reparsed = parse_scenario(serialize_scenario(original))
        _scenarios_equal(original, reparsed)

    def test_serialization_is_idempotent_text(self):
        sc = parse_scenario(GOOD_DOC)
        once = serialize_scenario(sc)
        twice = serialize_scenario(parse_scenario(once))
        assert once == twice

    def test_round_trip_preserves_flags(self):
        text = GOOD_DOC.replace("dt = 0.01", "dt = 0.01\nrecord_states = true")
        sc = parse_scenario(text)
        again = parse_scenario(serialize_scenario(sc))
        assert again.record_states
