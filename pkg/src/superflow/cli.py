"""Command line interface.

    superflow <command> <scenario-file|builtin> [options]

Exit codes: 0 all checks pass (or a definitive verdict), 1 check failures,
2 usage or scenario errors, 3 Inconclusive verdict.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import expr as ex
from .dynamics import (
    FlowConfig,
    build_local_action,
    check_action_property,
    flow_even,
    odd_exponential,
)
from .errors import ScenarioError, SuperflowError
from .fields import (
    bracket,
    check_algebra,
    check_homomorphism,
    reduced_field,
    support_sample,
)
from .grassmann import sample_even_points
from .holonomy import (
    DistributionSpec,
    describe_jet,
    globalizability_verdict,
    holonomy,
    homotopy_invariance_check,
    involutivity_check,
    transport,
    verify_example_embedding,
)
from .report import Report
from .scenario import BUILTINS, load_scenario

COMMANDS = (
    "check-algebra",
    "check-homomorphism",
    "bracket",
    "reduced",
    "involutive",
    "flow",
    "odd-exp",
    "local-action",
    "check-action",
    "transport",
    "holonomy",
    "homotopy-check",
    "verdict",
    "verify-embedding",
    "support",
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="superflow",
        description="Super Lie calculus on superdomains: brackets, flows, "
        "local actions, holonomy and globalizability verdicts.",
        epilog=f"built-in scenarios: {', '.join(sorted(BUILTINS))}",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("scenario", help="scenario file path or built-in name")
    p.add_argument("--loop", help="loop name, or comma-separated loop names")
    p.add_argument("--field", help="field name, or comma-separated field names")
    p.add_argument("--t", help="flow time / comma-separated action parameters")
    p.add_argument("--base", help="base point, e.g. z=1 or x=0.5,y=2")
    p.add_argument("--step", type=float, default=1e-3, help="integrator step (default 1e-3)")
    p.add_argument("--jet", type=int, default=2, help="jet order for germs (default 2)")
    p.add_argument("--samples", type=int, default=100, help="sample count (default 100)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")
    p.add_argument("--primitive", help="primitive A(z) for verify-embedding")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    return p


def _parse_scalar(text: str, field: str):
    v = ex.eval_expr(ex.parse_expr(text.strip(), ()), {}, "complex")
    if field == "real":
        if abs(v.imag) > 0:
            raise ScenarioError(f"expected a real number, got {text!r}")
        return v.real
    return v


def _parse_base(text, domain):
    if not text:
        return None
    base = {}
    for kv in text.split(","):
        k, _, v = kv.partition("=")
        if not v or k.strip() not in domain.even_coords:
            raise ScenarioError(f"bad base assignment {kv!r}")
        base[k.strip()] = _parse_scalar(v, domain.field)
    return base


def _field_list(sc, names, default_all=False):
    if names:
        return [(n.strip(), sc.get_field(n.strip())) for n in names.split(",")]
    if default_all and sc.named_fields:
        return list(sc.named_fields.items())
    raise ScenarioError("--field is required for this command")


def _split_action(sc, cfg):
    """Local-action evaluator from the scenario's lambda images."""
    action = sc.require_action()
    evens, odds = [], []
    for name, par in zip(action.algebra.basis, action.algebra.parities):
        (evens if par == 0 else odds).append(action.image(name))
    return build_local_action(evens, odds, cfg)


def _loop_names(sc, arg):
    if arg:
        return [n.strip() for n in arg.split(",")]
    return list(sc.loops)


def _run(args) -> Report:
    sc = load_scenario(args.scenario)
    cfg = FlowConfig(args.step, args.jet)
    cmd = args.command

    if cmd == "check-algebra":
        if sc.algebra is None:
            raise ScenarioError("scenario declares no algebra")
        return check_algebra(sc.algebra)

    if cmd == "check-homomorphism":
        return check_homomorphism(sc.require_action(), args.samples, args.seed)

    if cmd == "bracket":
        pairs = _field_list(sc, args.field)
        if len(pairs) == 1:
            pairs = pairs * 2
        if len(pairs) != 2:
            raise ScenarioError("bracket needs --field A,B (or a single A for [A,A])")
        (na, A), (nb, B) = pairs
        rep = Report("bracket")
        rep.add(f"[{na},{nb}]", True, None, str(bracket(A, B)))
        return rep

    if cmd == "reduced":
        pairs = _field_list(sc, args.field)
        rep = Report("reduced")
        for name, X in pairs:
            rep.add(f"reduced {name}", True, None, str(reduced_field(X)))
        return rep

    if cmd == "involutive":
        if args.field:
            spec = DistributionSpec.from_fields(
                [f for _, f in _field_list(sc, args.field)]
            )
        else:
            spec = DistributionSpec.from_action(sc.require_action())
        return involutivity_check(spec, args.samples, args.seed)

    if cmd == "flow":
        pairs = _field_list(sc, args.field)
        if len(pairs) != 1:
            raise ScenarioError("flow needs exactly one --field")
        name, X = pairs[0]
        t = _parse_scalar(args.t or "1", sc.domain.field)
        base = _parse_base(args.base, sc.domain)
        if base is None:
            raise ScenarioError("flow needs --base")
        start = time.perf_counter()
        jet = flow_even(X, t, base, cfg)
        elapsed = time.perf_counter() - start
        rep = Report("flow")
        rep.add(f"flow of {name} for t={t}", True, None, describe_jet(jet))
        rep.add("body image", True, None, str(jet.body_image()))
        rep.config = {"step": args.step, "jet": args.jet}
        rep.timing = elapsed
        return rep

    if cmd == "odd-exp":
        pairs = _field_list(sc, args.field)
        ext, pull = odd_exponential([f for _, f in pairs])
        rep = Report("odd-exp")
        for cname in sc.domain.even_coords + sc.domain.odd_coords:
            rep.add(f"pullback of {cname}", True, None, str(pull[cname]))
        return rep

    if cmd == "local-action":
        ev = _split_action(sc, cfg)
        t_values = (
            [_parse_scalar(v, sc.domain.field) for v in args.t.split(",")]
            if args.t
            else [0] * len(ev.evens)
        )
        base = _parse_base(args.base, sc.domain) or ev.default_base()
        jet = ev.evaluate(t_values, base)
        rep = Report("local-action")
        rep.add(f"action germ at t={t_values}, base={base}", True, None, describe_jet(jet))
        return rep

    if cmd == "check-action":
        ev = _split_action(sc, cfg)
        return check_action_property(ev, samples=max(5, args.samples // 5), seed=args.seed)

    if cmd == "transport":
        action = sc.require_action()
        rep = Report("transport")
        for name in _loop_names(sc, args.loop):
            jet = transport(action, sc.get_loop(name), cfg)
            rep.add(f"transport along {name}", True, None, describe_jet(jet))
            rep.add(f"{name} body image", True, None, str(jet.body_image()))
        return rep

    if cmd == "holonomy":
        action = sc.require_action()
        rep = Report("holonomy")
        for name in _loop_names(sc, args.loop):
            start = time.perf_counter()
            germ = holonomy(action, sc.get_loop(name), cfg)
            elapsed = time.perf_counter() - start
            rep.add(f"loop {name} closes", True, germ.closure_residual)
            trivial = germ.is_trivial()
            rep.add(
                f"loop {name} germ " + ("trivial" if trivial else "nontrivial"),
                True,
                germ.triviality_residual,
                germ.describe(),
            )
            rep.timing = getattr(rep, "timing", 0.0) + elapsed
        rep.config = {"step": args.step, "jet": args.jet}
        return rep

    if cmd == "homotopy-check":
        action = sc.require_action()
        loops = [sc.get_loop(n) for n in _loop_names(sc, args.loop)]
        if len(loops) < 2:
            raise ScenarioError("homotopy-check needs at least two loops")
        return homotopy_invariance_check(action, loops, cfg)

    if cmd == "verdict":
        action = sc.require_action()
        germs = [holonomy(action, sc.get_loop(n), cfg) for n in _loop_names(sc, args.loop)]
        rep = globalizability_verdict(germs, sc.flags)
        rep.config = {
            "loops": _loop_names(sc, args.loop),
            "flags": vars(sc.flags),
            "note": "verdict is conditional on the declared loops generating "
            "the relevant homotopy classes",
        }
        return rep

    if cmd == "verify-embedding":
        alpha = _extract_alpha(sc)
        primitive = (
            ex.parse_expr(args.primitive, ("z",))
            if args.primitive
            else _polynomial_primitive(alpha)
        )
        return verify_example_embedding(
            alpha, primitive, samples=min(args.samples, 50), seed=args.seed, cfg=cfg
        )

    if cmd == "support":
        action = sc.require_action()
        grid = sample_even_points(action.domain, args.samples, args.seed)
        pts = support_sample(action, grid)
        rep = Report("support")
        rep.add(
            f"{len(pts)} of {len(grid)} sampled points in the support",
            True,
            None,
            str(pts[:5]) if pts else None,
        )
        return rep

    raise ScenarioError(f"unknown command {cmd!r}")


def _extract_alpha(sc):
    """Coefficient alpha(z) of theta1*theta2 in the z-component of the even
    generator image."""
    action = sc.require_action()
    for name in action.algebra.even_basis():
        X = action.image(name)
        for cname, sf in X.even_coeffs.items():
            for I, e in sf.terms.items():
                if len(I) == 2:
                    return e
    return ex.ZERO


def _polynomial_primitive(alpha):
    poly = ex.as_polynomial(alpha, ("z",))
    if poly is None:
        raise ScenarioError(
            "alpha is not polynomial; supply the primitive with --primitive"
        )
    out = ex.ZERO
    for (k,), c in poly.items():
        out = ex.add(out, ex.mul(ex.Const(c / (k + 1)), ex.power(ex.Var("z"), k + 1)))
    return out


def render(rep: Report, as_json: bool) -> str:
    if as_json:
        return json.dumps(rep.as_dict(), sort_keys=True, indent=2, default=str)
    text = rep.render_text()
    timing = getattr(rep, "timing", None)
    if timing is not None:
        text += f"\n  elapsed: {timing:.2f}s"
    return text


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        rep = _run(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SuperflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(render(rep, args.json))
    if rep.verdict is not None:
        return 3 if rep.verdict == "Inconclusive" else 0
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
