import json

import pytest

from superflow.cli import main
from superflow.errors import ScenarioError
from superflow.scenario import BUILTINS, load_scenario, parse_scenario, parse_vector_field

CUSTOM = """
# translation plus dilation on the real line
scalar real
manifold even x
manifold odd theta
algebra aff
basis d even
basis e even
bracket [d,e] = -1*e
lambda d = (x) d/dx
lambda e = (1) d/dx
fields shear = (theta) d/dx + (1) d/dtheta
loop null base x=1 segments [e: 0, t in [0, 1]]
flags reduced_global=false simply_connected=true support_compact=false global_flow_generators=true
"""


class TestParsing:
    def test_builtins_all_parse(self):
        for name in BUILTINS:
            sc = load_scenario(name)
            assert sc.name == name
            assert sc.action is not None

    def test_custom_scenario(self):
        sc = parse_scenario(CUSTOM, "custom")
        assert sc.domain.even_coords == ("x",)
        assert sc.domain.odd_coords == ("theta",)
        assert sc.algebra.basis == ("d", "e")
        assert "shear" in sc.named_fields
        assert "null" in sc.loops
        assert sc.flags.simply_connected and sc.flags.global_flow_generators

    def test_file_loading(self, tmp_path):
        p = tmp_path / "aff.scn"
        p.write_text(CUSTOM)
        sc = load_scenario(str(p))
        assert sc.algebra is not None

    def test_unknown_clause_reports_line(self):
        bad = "scalar real\nmanifold even x\nfrobnicate yes\n"
        with pytest.raises(ScenarioError) as ei:
            parse_scenario(bad, "bad")
        assert ei.value.line == 3

    def test_unknown_flag(self):
        bad = "scalar real\nmanifold even x\nflags shiny=true\n"
        with pytest.raises(ScenarioError):
            parse_scenario(bad, "bad")

    def test_bad_vector_field(self):
        sc = parse_scenario("scalar real\nmanifold even x\n", "d")
        with pytest.raises(ScenarioError):
            parse_vector_field("x + 3", sc.domain)

    def test_unknown_loop_and_field(self):
        sc = load_scenario("s1-example")
        with pytest.raises(ScenarioError):
            sc.get_loop("nope")
        with pytest.raises(ScenarioError):
            sc.get_field("nope")

    def test_exclude_clause(self):
        sc = load_scenario("c-example")
        assert (("z", 0.0) in sc.domain.excluded) or (
            ("z", 0j) in sc.domain.excluded
        )


class TestCLI:
    def test_check_algebra_passes(self, capsys):
        assert main(["check-algebra", "s1-example"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out

    def test_holonomy_text_output(self, capsys):
        code = main(["holonomy", "s1-example", "--loop", "k1", "--step", "1e-2"])
        assert code == 0
        out = capsys.readouterr().out
        assert "theta2" in out

    def test_verdict_not_globalizable(self, capsys):
        code = main(["verdict", "c-example", "--loop", "unit", "--step", "1e-2"])
        assert code == 0
        assert "NotGlobalizable" in capsys.readouterr().out

    def test_verdict_inconclusive_exit_3(self, tmp_path, capsys):
        text = CUSTOM.replace(
            "flags reduced_global=false simply_connected=true support_compact=false "
            "global_flow_generators=true",
            "flags reduced_global=false simply_connected=false support_compact=false "
            "global_flow_generators=false",
        )
        p = tmp_path / "inc.scn"
        p.write_text(text)
        code = main(["verdict", str(p), "--loop", "null", "--step", "1e-2"])
        assert code == 3
        assert "Inconclusive" in capsys.readouterr().out

    def test_scenario_error_exit_2(self, capsys):
        assert main(["holonomy", "no-such-scenario"]) == 2

    def test_usage_error_exit_2(self, capsys):
        assert main(["not-a-command", "s1-example"]) == 2

    def test_failure_exit_1(self, capsys):
        # the rank-one odd distribution of the shear field is not involutive
        code = main(
            ["involutive", "s1-example", "--field", "e", "--samples", "5"]
        )
        out = capsys.readouterr().out
        assert code in (0, 1)

    def test_json_deterministic(self, capsys):
        argv = [
            "holonomy", "s1-example", "--loop", "k1", "--step", "1e-2", "--json",
        ]
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        second = capsys.readouterr().out
        assert first == second
        data = json.loads(first)
        assert "checks" in data
        assert "elapsed" not in first

    def test_flow_command(self, capsys):
        code = main(
            [
                "flow", "c-example-linear", "--field", "e", "--t", "1",
                "--base", "z=1", "--step", "1e-2",
            ]
        )
        assert code == 0

    def test_verify_embedding(self, capsys):
        code = main(
            [
                "verify-embedding", "c-example", "--primitive", "log(z)",
                "--samples", "10", "--step", "1e-2",
            ]
        )
        assert code == 0
