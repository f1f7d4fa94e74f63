import numpy as np
import pytest

from voltsync.config import build_plan, load_config, parse_config_text
from voltsync.errors import ConfigError, ConfigParseError, InvalidPerturbation, UnknownPreset
from voltsync.runner import PRESETS, preset_plan, preset_text
from voltsync.topology import heterogeneous_case_study

MINIMAL = """
schema_version = 1
name = "mini"
[network]
kind = "all_to_all"
N = 2
[nodes]
P = [0.5, -0.5]
gamma = 1.0
T_d = 2.0
[initial]
E = 1.14
[[perturbations]]
node = 1
t_start = 40.0
t_end = 42.0
P_dist = 1.0
"""


def plan_of(text, **kw):
    return build_plan(parse_config_text(text), **kw)


@pytest.mark.parametrize("name", PRESETS)
def test_presets_parse(name):
    plan = preset_plan(name)
    assert plan.name == name and plan.scenarios


def test_preset_sizes():
    assert [s.model.N for _, _, s in preset_plan("fig3").scenarios] == [2, 10, 20, 50]
    assert all(np.all(s.model.gamma == 1.0) for _, _, s in preset_plan("fig4").scenarios)
    fig5 = preset_plan("fig5")
    assert [v["gamma"] for _, v, _ in fig5.scenarios] == [0.25, 0.5, 1.0, 2.0, 4.0]
    assert all(s.perturbations[0].P_dist == -1.0 for _, _, s in fig5.scenarios)
    fig2 = preset_plan("fig2")
    assert all(s.perturbations[0].P_dist == 1.0 for _, _, s in fig2.scenarios)


def test_fig6_config_equals_case_study():
    plan = preset_plan("fig6")
    for (label, _, sc), controlled in zip(plan.scenarios, (True, False)):
        ref = heterogeneous_case_study(controlled)
        assert label == ref.name
        assert sc.model == ref.model
        assert sc.perturbations == ref.perturbations
        assert sc.integrator == ref.integrator
        np.testing.assert_array_equal(sc.initial_state.to_vector(), ref.initial_state.to_vector())


def test_minimal_defaults():
    (label, swept, sc), = plan_of(MINIMAL).scenarios
    assert label == "mini" and swept == {}
    assert sc.analyses == ("simulate",)
    np.testing.assert_array_equal(sc.model.alpha, [0.2, 0.2])
    assert sc.perturbations[0].node == 0  # 1-based in the file


def test_overrides():
    (_, _, sc), = plan_of(MINIMAL, dt=0.005, t_final=50.0, analyses=("stability",)).scenarios
    assert sc.integrator.dt == 0.005 and sc.integrator.t_final == 50.0
    assert sc.analyses == ("stability",)


def test_sweep_cartesian_and_labels():
    text = MINIMAL.replace('name = "mini"', 'name = "sw"') + "\n[sweep]\ngamma = [0.0, 2.0]\nN = [2, 4]\n"
    text = text.replace("P = [0.5, -0.5]", 'P = { pattern = "alternating", magnitude = 0.5 }')
    plan = plan_of(text)
    assert [label for label, _, _ in plan.scenarios] == ["sw_gamma0_N2", "sw_gamma0_N4", "sw_gamma2_N2", "sw_gamma2_N4"]
    np.testing.assert_array_equal(plan.scenarios[1][2].model.P_star, [0.5, -0.5, 0.5, -0.5])


def test_parse_error_has_line():
    with pytest.raises(ConfigParseError, match="line 3"):
        parse_config_text("schema_version = 1\n[network]\nN = = 2\n")


@pytest.mark.parametrize(
    "old, new, match",
    [
        ("schema_version = 1", "schema_version = 7", "schema_version"),
        ("gamma = 1.0", "gamma = 1.0\nspeed = 3", "speed"),
        ("P = [0.5, -0.5]", "P = [0.5]", "expected 2 values"),
        ("N = 2", "", "'N' is required"),
        ("[nodes]", "[nodes]\n[sweep]\nzeta = [1]\n[nodes2]", "nodes2|zeta"),
    ],
)
def test_config_errors(old, new, match):
    with pytest.raises(ConfigError, match=match):
        plan_of(MINIMAL.replace(old, new))


def test_reversed_ramp_names_perturbation():
    with pytest.raises(InvalidPerturbation, match=r"perturbations\] entry 0"):
        plan_of(MINIMAL.replace("t_end = 42.0", "t_end = 39.0"))


def test_perturbation_node_out_of_range():
    with pytest.raises(InvalidPerturbation, match="outside 1..2"):
        plan_of(MINIMAL.replace("node = 1", "node = 3"))


def test_unknown_preset():
    with pytest.raises(UnknownPreset):
        preset_text("fig7")


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")


def test_random_initial_phases_seeded():
    text = MINIMAL.replace("E = 1.14", "E = 1.14\ntheta = { uniform = [-1.0, 1.0], seed = 4 }")
    a = plan_of(text).scenarios[0][2].initial_state.theta
    b = plan_of(text).scenarios[0][2].initial_state.theta
    np.testing.assert_array_equal(a, b)
    assert np.all(np.abs(a) <= 1.0) and a[0] != a[1]


def test_controller_lag_selects_full_model(tmp_path):
    from voltsync.runner import execute_plan

    text = MINIMAL.replace("T_d = 2.0", "T_d = 2.0\ntau_g = 0.05\nbeta = 0.1").replace(
        'name = "mini"', 'name = "lag"\nanalyses = ["simulate", "stability"]')
    plan = plan_of(text, t_final=60.0)
    sc = plan.scenarios[0][2]
    assert sc.initial_state.u is not None and not sc.model.is_reduced
    res = execute_plan(plan, tmp_path)
    assert res.exit_code == 0
    run = res.report["runs"][0]
    assert run["stability"]["verdict"] == "stable"
    header = (tmp_path / "lag_trajectory.csv").read_text().splitlines()[0]
    assert header.endswith("u_1,u_2")
