import math

import pytest

from superflow import expr as ex
from superflow.grassmann import SuperDomain, SuperFunction, grassmannify
from superflow.jets import (
    JetSuperMap,
    compose,
    get_context,
    jet_of_superfunction,
    jetpoly_to_superfunction,
    superfunction_to_jet,
)

DOM = SuperDomain(("x",), ("theta1", "theta2"))
NAMES = ("x", "theta1", "theta2")


def sf(text, domain=DOM):
    names = domain.even_coords + domain.odd_coords
    return grassmannify(domain, ex.parse_expr(text, names))


class TestJetPoly:
    def test_context_dimensions(self):
        ctx = get_context(("x",), ("theta1", "theta2"), 2)
        # 3 displacement degrees x 4 odd subsets
        assert ctx.dim == 12

    def test_multiplication_signs(self):
        ctx = get_context((), ("a", "b"), 0)
        p = ctx.odd_gen("a") * ctx.odd_gen("b")
        q = ctx.odd_gen("b") * ctx.odd_gen("a")
        assert (p + q).is_zero()
        assert (ctx.odd_gen("a") * ctx.odd_gen("a")).is_zero()

    def test_truncation_at_order(self):
        ctx = get_context(("x",), (), 2)
        u = ctx.displacement("x")
        cube = u * u * u
        assert cube.is_zero()

    def test_du_and_dodd(self):
        ctx = get_context(("x",), ("a",), 2)
        p = ctx.displacement("x") * ctx.displacement("x") * ctx.odd_gen("a")
        d = p.du("x")
        assert (d - ctx.displacement("x").scale(2) * ctx.odd_gen("a")).is_zero()
        assert (p.dodd("a") - ctx.displacement("x") * ctx.displacement("x")).is_zero()

    def test_left_dodd_sign(self):
        ctx = get_context((), ("a", "b"), 0)
        p = ctx.odd_gen("a") * ctx.odd_gen("b")
        assert (p.dodd("b") + ctx.odd_gen("a")).is_zero()


class TestSuperfunctionToJet:
    def test_nilpotent_taylor_inverse(self):
        dom = SuperDomain(("z",), ("theta1", "theta2"), "complex")
        f = grassmannify(dom, ex.parse_expr("1/z", ("z", "theta1", "theta2")))
        ctx = get_context(("z",), ("theta1", "theta2"), 0)
        img = ctx.const(2.0) + ctx.odd_gen("theta1") * ctx.odd_gen("theta2")
        jp = superfunction_to_jet(
            f,
            {"z": img},
            {"theta1": ctx.odd_gen("theta1"), "theta2": ctx.odd_gen("theta2")},
            ctx,
        )
        g = jp.at_zero_displacement()
        assert g.body == pytest.approx(0.5)
        assert g.terms[(0, 1)] == pytest.approx(-0.25)

    def test_displacement_taylor_matches_series(self):
        # sin pulled through the identity jet reproduces its Taylor series
        f = sf("sin(x)")
        jet = JetSuperMap.identity(DOM, {"x": 0.3}, 2)
        jp = jet_of_superfunction(f, jet)
        c0 = jp.vec[jet.ctx.index[((0,), ())]]
        c1 = jp.vec[jet.ctx.index[((1,), ())]]
        c2 = jp.vec[jet.ctx.index[((2,), ())]]
        assert c0 == pytest.approx(math.sin(0.3))
        assert c1 == pytest.approx(math.cos(0.3))
        assert c2 == pytest.approx(-math.sin(0.3) / 2)

    def test_round_trip_through_superfunction(self):
        jet = JetSuperMap.identity(DOM, {"x": 1.5}, 2)
        f = sf("x^2 + x*theta1*theta2")
        jp = jet_of_superfunction(f, jet)
        back = jetpoly_to_superfunction(jp, DOM, {"x": 1.5})
        from superflow.grassmann import superfunctions_equal

        eq, _ = superfunctions_equal(back, f)
        assert eq


class TestCompose:
    def _shift(self, base, delta):
        jet = JetSuperMap.identity(DOM, {"x": base}, 2)
        comps = dict(jet.components)
        comps["x"] = comps["x"] + jet.ctx.const(delta)
        return JetSuperMap(DOM, {"x": base}, jet.ctx, comps)

    def test_translation_composition(self):
        inner = self._shift(0.0, 1.0)
        outer = self._shift(1.0, 2.0)
        both = compose(outer, inner)
        assert both.body_image()["x"] == pytest.approx(3.0)

    def test_base_mismatch_rejected(self):
        inner = self._shift(0.0, 1.0)
        outer = self._shift(5.0, 1.0)
        with pytest.raises(ValueError):
            compose(outer, inner)

    def test_compose_with_identity(self):
        inner = self._shift(0.0, 0.7)
        ident = JetSuperMap.identity(DOM, {"x": 0.7}, 2)
        both = compose(ident, inner)
        assert both.deviation(inner) <= 1e-12

    def test_odd_substitution_through_composition(self):
        # inner swaps theta1 <-> theta2 via a shear, outer reads theta1
        jet = JetSuperMap.identity(DOM, {"x": 0.0}, 2)
        comps = dict(jet.components)
        comps["theta1"] = jet.ctx.odd_gen("theta2")
        comps["theta2"] = jet.ctx.odd_gen("theta1")
        swap = JetSuperMap(DOM, {"x": 0.0}, jet.ctx, comps)
        both = compose(swap, swap)
        assert both.deviation_from_identity() <= 1e-12

    def test_extra_generators_ordering(self):
        inner = JetSuperMap.identity(DOM, {"x": 0.0}, 2, extra_odd=("tau",))
        outer = JetSuperMap.identity(DOM, {"x": 0.0}, 2, extra_odd=("sigma",))
        both = compose(outer, inner)
        assert both.ctx.odd == ("sigma", "tau", "theta1", "theta2")


class TestDeviation:
    def test_deviation_across_contexts(self):
        a = JetSuperMap.identity(DOM, {"x": 0.0}, 2, extra_odd=("tau",))
        b = JetSuperMap.identity(DOM, {"x": 0.0}, 2)
        assert a.deviation(b) <= 1e-12

    def test_nonzero_deviation(self):
        a = JetSuperMap.identity(DOM, {"x": 0.0}, 2)
        comps = dict(a.components)
        comps["x"] = comps["x"] + a.ctx.const(0.25)
        b = JetSuperMap(DOM, {"x": 0.0}, a.ctx, comps)
        assert a.deviation(b) == pytest.approx(0.25)
