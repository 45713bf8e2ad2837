import cmath
import math

import pytest

from superflow import expr as ex
from superflow.dynamics import FlowConfig
from superflow.errors import ContradictionError, NotALoopError
from superflow.fields import InfinitesimalAction, LieSuperAlgebra, SuperVectorField
from superflow.grassmann import SuperDomain, grassmannify
from superflow.holonomy import (
    DistributionSpec,
    GroupPath,
    HolonomyGerm,
    PathSegment,
    VerdictFlags,
    globalizability_verdict,
    holonomy,
    homotopy_invariance_check,
    involutivity_check,
    transport,
    verify_example_embedding,
)
from superflow.jets import JetSuperMap, compose
from superflow.scenario import load_scenario

TWO_PI = 2 * math.pi
COARSE = FlowConfig(step=1e-2, jet_order=2)


def sf(text, domain):
    names = domain.even_coords + domain.odd_coords
    return grassmannify(domain, ex.parse_expr(text, names))


def vf(domain, even=None, odd=None):
    return SuperVectorField(
        domain,
        {k: sf(v, domain) for k, v in (even or {}).items()},
        {k: sf(v, domain) for k, v in (odd or {}).items()},
    )


class TestInvolutivity:
    def test_full_tangent_span(self):
        dom = SuperDomain(("x",), ("theta",))
        spec = DistributionSpec.from_fields(
            [vf(dom, even={"x": "1"}), vf(dom, odd={"theta": "1"})]
        )
        rep = involutivity_check(spec, samples=20)
        assert rep.passed

    def test_self_bracket_escapes_span(self):
        # X = d/dtheta1 + theta1 theta2 d/dtheta2: [X,X] = 2 theta2 d/dtheta2
        # is not an O-multiple of X, so the rank-one distribution fails
        dom = SuperDomain((), ("theta1", "theta2"))
        X = vf(dom, odd={"theta1": "1", "theta2": "theta1*theta2"})
        rep = involutivity_check(DistributionSpec.from_fields([X]), samples=5)
        assert not rep.passed
        assert rep.first_failure().residual > 0.1

    def test_from_action_homomorphism_passes(self):
        dom = SuperDomain(("x",), ())
        g = LieSuperAlgebra.build(("d", "e"), (0, 0), {("d", "e"): {"e": 1.0}})
        lam = InfinitesimalAction(
            g, {"d": vf(dom, even={"x": "-x"}), "e": vf(dom, even={"x": "1"})}
        )
        rep = involutivity_check(DistributionSpec.from_action(lam), samples=20)
        assert rep.passed

    def test_from_action_detects_wrong_images(self):
        # same algebra, wrong lambda: the bracket misses the demanded
        # structure-constant combination, so the formal check fails
        dom = SuperDomain(("x",), ())
        g = LieSuperAlgebra.build(("d", "e"), (0, 0), {("d", "e"): {"e": 1.0}})
        lam = InfinitesimalAction(
            g, {"d": vf(dom, even={"x": "x"}), "e": vf(dom, even={"x": "1"})}
        )
        rep = involutivity_check(DistributionSpec.from_action(lam), samples=20)
        assert not rep.passed

    def test_single_even_generator_trivially_involutive(self):
        dom = SuperDomain(("x",), ())
        spec = DistributionSpec.from_fields([vf(dom, even={"x": "x"})])
        rep = involutivity_check(spec, samples=5)
        assert rep.passed


class TestCircleExample:
    def test_winding_germs(self):
        sc = load_scenario("s1-example")
        action = sc.require_action()
        for loop_name, k in (("k1", 1), ("k2", 2), ("km1", -1)):
            germ = holonomy(action, sc.get_loop(loop_name), COARSE)
            c = germ.coefficient("theta2", (), ("theta1",))
            assert c == pytest.approx(TWO_PI * k, abs=1e-9), loop_name
            assert not germ.is_trivial()

    def test_homotopy_invariance(self):
        sc = load_scenario("s1-example")
        rep = homotopy_invariance_check(
            sc.require_action(), [sc.get_loop("k1"), sc.get_loop("k1_wobble")], COARSE
        )
        assert rep.passed

    def test_reversed_loop_inverts_germ(self):
        sc = load_scenario("s1-example")
        action = sc.require_action()
        loop = sc.get_loop("k1")
        fwd = holonomy(action, loop, COARSE)
        back = holonomy(action, loop.reversed(), COARSE)
        round_trip = compose(back.jet, fwd.jet)
        assert round_trip.deviation_from_identity() <= 1e-9


class TestComplexExample:
    def test_pole_residue_germ(self):
        sc = load_scenario("c-example")
        germ = holonomy(sc.require_action(), sc.get_loop("unit"), COARSE)
        c = germ.coefficient("z", (0,), ("theta1", "theta2"))
        assert c == pytest.approx(2j * math.pi, abs=1e-6)

    def test_double_pole_trivial_germ(self):
        sc = load_scenario("c-example-invsq")
        germ = holonomy(sc.require_action(), sc.get_loop("unit"), COARSE)
        assert germ.is_trivial(tol=1e-6)

    def test_transport_step_halving(self):
        sc = load_scenario("c-example")
        action = sc.require_action()
        loop = sc.get_loop("unit")
        a = transport(action, loop, FlowConfig(step=2e-2, jet_order=2))
        b = transport(action, loop, FlowConfig(step=1e-2, jet_order=2))
        assert a.deviation(b) <= 1e-7

    def test_open_path_rejected(self):
        sc = load_scenario("c-example")
        action = sc.require_action()
        half = GroupPath(
            [PathSegment({"e": ex.parse_expr("1i*exp(1i*t)", ("t",))}, 0.0, math.pi)],
            {"z": 1.0 + 0j},
        )
        with pytest.raises(NotALoopError):
            holonomy(action, half, COARSE)


def _trivial_germ():
    dom = SuperDomain(("x",), ("theta",))
    jet = JetSuperMap.identity(dom, {"x": 0.0}, 2)
    return HolonomyGerm(jet, {"x": 0.0}, 0.0)


def _nontrivial_germ():
    dom = SuperDomain(("x",), ("theta",))
    jet = JetSuperMap.identity(dom, {"x": 0.0}, 2)
    comps = dict(jet.components)
    comps["theta"] = comps["theta"].scale(2.0)
    return HolonomyGerm(JetSuperMap(dom, {"x": 0.0}, jet.ctx, comps), {"x": 0.0}, 0.0)


class TestVerdicts:
    def test_rule_a(self):
        rep = globalizability_verdict([_nontrivial_germ()], VerdictFlags())
        assert rep.verdict == "NotGlobalizable"
        assert rep.rule.startswith("rule (a)")

    def test_rule_a_contradiction(self):
        flags = VerdictFlags(simply_connected=True, support_compact=True)
        with pytest.raises(ContradictionError):
            globalizability_verdict([_nontrivial_germ()], flags)

    def test_rule_b_globalizable(self):
        flags = VerdictFlags(reduced_action_global=True)
        rep = globalizability_verdict([_trivial_germ()], flags)
        assert rep.verdict == "Globalizable"
        assert rep.rule.startswith("rule (b)")

    def test_rule_b_global_when_simply_connected(self):
        flags = VerdictFlags(reduced_action_global=True, simply_connected=True)
        rep = globalizability_verdict([], flags)
        assert rep.verdict == "Global"

    def test_rule_c(self):
        flags = VerdictFlags(simply_connected=True, global_flow_generators=True)
        rep = globalizability_verdict([], flags)
        assert rep.verdict == "Global"
        assert rep.rule.startswith("rule (c)")

    def test_rule_d(self):
        rep = globalizability_verdict([_trivial_germ()], VerdictFlags())
        assert rep.verdict == "Inconclusive"
        assert rep.rule.startswith("rule (d)")


class TestEmbedding:
    def test_simple_pole(self):
        rep = verify_example_embedding(
            ex.parse_expr("1/z", ("z",)),
            ex.parse_expr("log(z)", ("z",)),
            samples=10,
            cfg=FlowConfig(step=1e-2, jet_order=2),
        )
        assert rep.passed

    def test_zero_alpha(self):
        rep = verify_example_embedding(
            ex.ZERO, ex.ZERO, samples=10, cfg=FlowConfig(step=1e-2, jet_order=2)
        )
        assert rep.passed

    def test_wrong_primitive_detected(self):
        rep = verify_example_embedding(
            ex.parse_expr("1/z", ("z",)),
            ex.parse_expr("z", ("z",)),
            samples=10,
            cfg=FlowConfig(step=1e-2, jet_order=2),
        )
        assert not rep.passed
