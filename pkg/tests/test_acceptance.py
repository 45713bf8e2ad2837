"""Acceptance gate: one test per headline criterion, each printing a single
pass/fail line with its pinned tolerance."""

import math
import time

import pytest

from superflow import expr as ex
from superflow.dynamics import (
    FlowConfig,
    build_local_action,
    check_action_property,
    flow_even,
    odd_exponential,
)
from superflow.fields import (
    InfinitesimalAction,
    LieSuperAlgebra,
    SuperVectorField,
    bracket,
    fields_equal,
    induced_infinitesimal,
)
from superflow.grassmann import SuperDomain, SuperFunction, grassmannify, substitute, superfunctions_equal
from superflow.holonomy import (
    DistributionSpec,
    GroupPath,
    PathSegment,
    VerdictFlags,
    globalizability_verdict,
    holonomy,
    involutivity_check,
    transport,
    verify_example_embedding,
)
from superflow.jets import compose
from superflow.scenario import load_scenario
from util_random import DOM12, random_field, random_superfunction, seeded_rng
from superflow.fields import apply as field_apply
from superflow.grassmann import gr_mul

TWO_PI = 2 * math.pi
FINE = FlowConfig(step=1e-3, jet_order=2)
COARSE = FlowConfig(step=1e-2, jet_order=2)


def _line(num, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"criterion {num}: {status} — {detail}")
    assert ok, detail


def sf(text, domain):
    names = domain.even_coords + domain.odd_coords
    return grassmannify(domain, ex.parse_expr(text, names))


def vf(domain, even=None, odd=None):
    return SuperVectorField(
        domain,
        {k: sf(v, domain) for k, v in (even or {}).items()},
        {k: sf(v, domain) for k, v in (odd or {}).items()},
    )


def test_criterion_1_circle_holonomy():
    sc = load_scenario("s1-example")
    action = sc.require_action()
    worst = 0.0
    slowest = 0.0
    for loop_name, k in (("k1", 1), ("k2", 2), ("km1", -1)):
        t0 = time.perf_counter()
        germ = holonomy(action, sc.get_loop(loop_name), FINE)
        dt = time.perf_counter() - t0
        err = abs(germ.coefficient("theta2", (), ("theta1",)) - TWO_PI * k)
        worst = max(worst, err)
        slowest = max(slowest, dt)
    _line(
        1,
        worst <= 1e-6 and slowest < 5.0,
        f"winding k in {{1,2,-1}} shears theta2 by 2*pi*k*theta1; "
        f"max error {worst:.2e} (tol 1e-6), slowest loop {slowest:.2f}s (cap 5s)",
    )


def test_criterion_2_complex_pole_holonomy():
    sc = load_scenario("c-example")
    germ = holonomy(sc.require_action(), sc.get_loop("unit"), FINE)
    err_pole = abs(germ.coefficient("z", (0,), ("theta1", "theta2")) - 2j * math.pi)

    sc2 = load_scenario("c-example-invsq")
    germ2 = holonomy(sc2.require_action(), sc2.get_loop("unit"), FINE)
    res_invsq = germ2.triviality_residual
    _line(
        2,
        err_pole <= 1e-6 and res_invsq <= 1e-6,
        f"alpha=1/z germ coefficient 2*pi*i (error {err_pole:.2e}, tol 1e-6); "
        f"alpha=1/z^2 germ trivial (residual {res_invsq:.2e}, tol 1e-6)",
    )


def test_criterion_3_three_way_verdicts():
    sc = load_scenario("c-example")
    germ = holonomy(sc.require_action(), sc.get_loop("unit"), COARSE)
    rep_a = globalizability_verdict([germ], sc.flags)

    sc2 = load_scenario("c-example-invsq")
    germ2 = holonomy(sc2.require_action(), sc2.get_loop("unit"), COARSE)
    rep_b = globalizability_verdict([germ2], sc2.flags)

    flags_c = VerdictFlags(simply_connected=True, global_flow_generators=True)
    rep_c = globalizability_verdict([], flags_c)

    ok = (
        rep_a.verdict == "NotGlobalizable"
        and rep_b.verdict == "Globalizable"
        and rep_c.verdict == "Global"
    )
    _line(
        3,
        ok,
        f"alpha=1/z -> {rep_a.verdict}; alpha=1/z^2 -> {rep_b.verdict}; "
        f"simply connected + global flows -> {rep_c.verdict}",
    )


def test_criterion_4_flow_closed_form_and_order():
    dom = SuperDomain(("z",), ("theta1", "theta2"), "complex", excluded=(("z", 0.0),))
    X = vf(dom, even={"z": "1 + (1/z)*theta1*theta2"})

    def run(cfg):
        jet = flow_even(X, 1.0, {"z": 1.0 + 0j}, cfg)
        g = jet.components["z"].at_zero_displacement()
        return abs(g.body - 2.0) + abs(g.terms[(0, 1)] - math.log(2))

    err = run(FINE)
    ratio = run(FlowConfig(step=0.1, jet_order=2)) / run(FlowConfig(step=0.05, jet_order=2))
    _line(
        4,
        err <= 1e-7 and ratio >= 12,
        f"z -> z + t + (log(z+t)-log z) theta1 theta2: error {err:.2e} at step 1e-3 "
        f"(tol 1e-7); halving 0.1 -> 0.05 shrinks error {ratio:.1f}x (>= 12 for order 4)",
    )


def test_criterion_5_local_action_and_generators():
    dom = SuperDomain(("x",), ("theta",))
    X = vf(dom, even={"x": "1"})
    Y = vf(dom, odd={"theta": "1"})
    ev = build_local_action([X], [Y], COARSE)
    rep = check_action_property(ev, samples=100, seed=0)
    worst = max(c.residual for c in rep.checks)

    eq_x, res_x = fields_equal(induced_infinitesimal(ev, 0), X)
    eq_y, res_y = fields_equal(induced_infinitesimal(ev, 1), Y)
    gen_res = max(res_x, res_y)
    _line(
        5,
        rep.passed and worst <= 1e-9 and eq_x and eq_y and gen_res <= 1e-10,
        f"action axioms over 100 samples: max residual {worst:.2e} (tol 1e-9); "
        f"induced generators match d/dx, d/dtheta to {gen_res:.2e} (tol 1e-10)",
    )


def test_criterion_6_frobenius_witness_and_involutivity():
    dom = SuperDomain((), ("theta1", "theta2"))
    X = vf(dom, odd={"theta1": "1", "theta2": "theta1*theta2"})
    B = bracket(X, X)
    eq, res_w = fields_equal(B, vf(dom, odd={"theta2": "2*theta2"}))
    rank_one = involutivity_check(DistributionSpec.from_fields([X]), samples=100)

    g = LieSuperAlgebra.build(("d", "e"), (0, 0), {("d", "e"): {"e": 1.0}})
    rdom = SuperDomain(("x",), ("theta",))
    lam = InfinitesimalAction(
        g, {"d": vf(rdom, even={"x": "-x"}), "e": vf(rdom, even={"x": "1"})}
    )
    inv = involutivity_check(DistributionSpec.from_action(lam), samples=100, tol=1e-8)
    worst = max(c.residual for c in inv.checks)
    _line(
        6,
        eq and res_w == 0.0 and not rank_one.passed and inv.passed and worst <= 1e-8,
        f"[X,X] = 2 theta2 d/dtheta2 exactly and escapes the rank-one span; "
        f"affine lambda-distribution involutive over 100 samples "
        f"(max residual {worst:.2e}, tol 1e-8)",
    )


def test_criterion_7_property_suites():
    t_start = time.perf_counter()
    rng = seeded_rng(2026)
    counts = {}

    # graded antisymmetry + super Jacobi (polynomial-exact)
    worst_bracket = 0.0
    for _ in range(60):
        px, py = int(rng.integers(0, 2)), int(rng.integers(0, 2))
        X, Y = random_field(rng, px), random_field(rng, py)
        sign = -1.0 if px and py else 1.0
        _, r = fields_equal(
            bracket(X, Y) + bracket(Y, X).scale(sign), SuperVectorField.zero(DOM12)
        )
        worst_bracket = max(worst_bracket, r)
    for _ in range(40):
        ps = [int(rng.integers(0, 2)) for _ in range(3)]
        X, Y, Z = (random_field(rng, p) for p in ps)
        s1 = -1.0 if ps[0] and ps[2] else 1.0
        s2 = -1.0 if ps[1] and ps[0] else 1.0
        s3 = -1.0 if ps[2] and ps[1] else 1.0
        total = (
            bracket(X, bracket(Y, Z)).scale(s1)
            + bracket(Y, bracket(Z, X)).scale(s2)
            + bracket(Z, bracket(X, Y)).scale(s3)
        )
        _, r = fields_equal(total, SuperVectorField.zero(DOM12))
        worst_bracket = max(worst_bracket, r)
    counts["bracket identities"] = (100, worst_bracket, 1e-10)

    # Leibniz rule (polynomial-exact)
    worst_leib = 0.0
    for _ in range(100):
        px, pf = int(rng.integers(0, 2)), int(rng.integers(0, 2))
        X = random_field(rng, px)
        f = random_superfunction(rng, pf)
        gch = random_superfunction(rng, int(rng.integers(0, 2)))
        sign = -1.0 if px and pf else 1.0
        lhs = field_apply(X, gr_mul(f, gch))
        rhs = gr_mul(field_apply(X, f), gch) + gr_mul(f, field_apply(X, gch)).scale(sign)
        _, r = superfunctions_equal(lhs, rhs)
        worst_leib = max(worst_leib, r)
    counts["Leibniz rule"] = (100, worst_leib, 1e-10)

    # odd exponential group law (symbolic-exact)
    dom = SuperDomain(("x",), ("theta1", "theta2"))
    coords = ("x", "theta1", "theta2")
    ext2 = SuperDomain(("x",), ("sigma", "tau", "theta1", "theta2"))
    worst_grp = 0.0
    for _ in range(100):
        c1 = int(rng.integers(-3, 4))
        c2 = int(rng.integers(-3, 4))
        Y = vf(dom, even={"x": f"{c1}*theta1"}, odd={"theta2": f"{c2}"})
        _, pull = odd_exponential([Y], ("tau",), validate=False)
        lhs = {c: substitute(pull[c], {"tau": sf("sigma + tau", ext2)}) for c in coords}
        sig = {c: substitute(pull[c], {"tau": sf("sigma", ext2)}) for c in coords}
        rhs = {
            c: substitute(substitute(pull[c], {"tau": sf("tau", ext2)}), sig)
            for c in coords
        }
        for c in coords:
            _, r = superfunctions_equal(lhs[c], rhs[c])
            worst_grp = max(worst_grp, r)
    counts["odd-exp group law"] = (100, worst_grp, 1e-12)

    # flow semigroup law
    rdom = SuperDomain(("x",), ("theta",))
    Xf = vf(rdom, even={"x": "x"})
    worst_semi = 0.0
    for _ in range(100):
        x0 = float(rng.uniform(-1.0, 1.0))
        t = float(rng.uniform(-0.5, 0.5))
        s = float(rng.uniform(-0.5, 0.5))
        a = flow_even(Xf, t, {"x": x0}, COARSE)
        b = flow_even(Xf, s, a.body_image(), COARSE)
        both = flow_even(Xf, s + t, {"x": x0}, COARSE)
        worst_semi = max(worst_semi, compose(b, a).deviation(both))
    counts["flow semigroup"] = (100, worst_semi, 1e-6)

    # homotopy invariance + transport determinism on the circle action
    sc = load_scenario("s1-example")
    action = sc.require_action()
    worst_hom = 0.0
    worst_det = 0.0
    for _ in range(100):
        a = float(rng.uniform(-1.0, 1.0))
        b = float(rng.uniform(-1.0, 1.0))
        xi1 = ex.parse_expr(f"{a}", ("t",))
        # same integral over [0, 2pi]: the sine deformation integrates to zero
        xi2 = ex.parse_expr(f"{a} + {b}*sin(t)", ("t",))
        lp1 = GroupPath([PathSegment({"e": xi1}, 0.0, TWO_PI)], {})
        lp2 = GroupPath([PathSegment({"e": xi2}, 0.0, TWO_PI)], {})
        g1 = transport(action, lp1, FlowConfig(step=5e-2, jet_order=2))
        g2 = transport(action, lp2, FlowConfig(step=5e-2, jet_order=2))
        worst_hom = max(worst_hom, g1.deviation(g2))
        g2h = transport(action, lp2, FlowConfig(step=2.5e-2, jet_order=2))
        worst_det = max(worst_det, g2.deviation(g2h))
    counts["homotopy invariance"] = (100, worst_hom, 1e-5)
    counts["transport halving"] = (100, worst_det, 1e-7)

    elapsed = time.perf_counter() - t_start
    ok = elapsed < 60.0
    pieces = []
    for name, (n, worst, tol) in counts.items():
        good = worst <= tol
        ok = ok and good
        pieces.append(f"{name} x{n}: {worst:.1e} (tol {tol:g})")
    _line(7, ok, "; ".join(pieces) + f"; total {elapsed:.1f}s (cap 60s)")


def test_criterion_8_embedding_family():
    cases = [
        (ex.ZERO, ex.ZERO),
        (ex.ONE, ex.parse_expr("z", ("z",))),
        (ex.parse_expr("2*z", ("z",)), ex.parse_expr("z^2", ("z",))),
    ]
    worst = 0.0
    for alpha, prim in cases:
        rep = verify_example_embedding(alpha, prim, samples=50, tol=1e-6, cfg=COARSE)
        assert rep.passed, ex.to_str(alpha)
        worst = max(worst, max(c.residual for c in rep.checks))
    _line(
        8,
        worst <= 1e-6,
        f"iota(z) = z - A(z) theta1 theta2 intertwines the flow with translation "
        f"for alpha in {{0, 1, 2z}}; max residual {worst:.2e} over 50 samples (tol 1e-6)",
    )
