"""Distributions, path transport, holonomy germs and globalizability.

Paths in the acting group are given by right-logarithmic-derivative data:
a path is a sequence of segments with coefficients xi_k(t) of an even
algebra element in the chosen basis.  Transport integrates the
time-dependent field sum_k xi_k(t) * lambda(e_k); a loop whose reduced
path returns to the base point yields a holonomy germ.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .dynamics import (
    FlowConfig,
    TimeDependentField,
    _JetODE,
    flow_even,
    flow_time_dependent,
)
from .errors import ContradictionError, NotALoopError, ParityError
from .fields import InfinitesimalAction, SuperVectorField, bracket
from .grassmann import (
    GrassmannNumber,
    SuperDomain,
    SuperFunction,
    eval_superfunction,
    grassmannify,
    sample_even_points,
)
from .jets import JetSuperMap, compose, jet_of_superfunction
from .report import Report


# -- involutivity -------------------------------------------------------------


@dataclass
class DistributionSpec:
    """Generators of a distribution, optionally tagged with the structure
    constants they are expected to realize."""

    fields: list
    # (i, j, expected) with expected a complex vector over the generators,
    # or None for a plain membership test of [V_i, V_j]
    pairs: list = field(default_factory=list)
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if not self.fields:
            raise ValueError("a distribution needs at least one generator")
        if not self.labels:
            self.labels = [f"V{i + 1}" for i in range(len(self.fields))]
        if not self.pairs:
            self.pairs = []
            for i, V in enumerate(self.fields):
                for j in range(i, len(self.fields)):
                    if i == j and self.fields[i].parity() == 0:
                        continue  # [V,V]=0 identically for even V
                    self.pairs.append((i, j, None))

    @classmethod
    def from_fields(cls, fields):
        return cls(list(fields))

    @classmethod
    def from_action(cls, action: InfinitesimalAction):
        """D_lambda generators; each bracket is additionally required to
        match the structure constants, so a failing homomorphism shows up
        as an involutivity residual."""
        g = action.algebra
        c = g.c()
        fields_ = [action.image(name) for name in g.basis]
        pairs = []
        for i in range(len(g.basis)):
            for j in range(i, len(g.basis)):
                if i == j and g.parities[i] == 0:
                    continue
                pairs.append((i, j, c[i, j]))
        return cls(fields_, pairs, list(g.basis))


def _odd_basis(n):
    from itertools import combinations

    out = [()]
    for size in range(1, n + 1):
        out.extend(combinations(range(n), size))
    return out


def _flatten(values: dict, coords, basis_index, n):
    """Stack the Grassmann components of a field value at a point."""
    v = np.zeros(len(coords) * len(basis_index), dtype=np.complex128)
    for ci, c in enumerate(coords):
        g = values.get(c)
        if g is None:
            continue
        for I, a in g.terms.items():
            v[ci * len(basis_index) + basis_index[I]] = a
    return v


def involutivity_check(
    spec: DistributionSpec, samples: int = 100, seed: int = 0, tol: float = 1e-8
) -> Report:
    """Pointwise Lambda-module membership of the bracket generators.

    At each sample the span over Grassmann coefficients is a finite linear
    system; least-squares residual above tol certifies non-involutivity,
    success at every sample is consistency with involutivity.
    """
    rep = Report("involutive")
    domain = spec.fields[0].domain
    n = domain.n
    coords = domain.even_coords + domain.odd_coords
    gr_basis = _odd_basis(n)
    basis_index = {I: k for k, I in enumerate(gr_basis)}
    r = len(spec.fields)
    has_formal = any(exp is not None for _, _, exp in spec.pairs)
    block = len(coords) * len(gr_basis)
    width = block + (r * len(gr_basis) if has_formal else 0)

    if not spec.pairs:
        # a single even generator brackets to zero identically
        rep.add("no brackets to check", True, 0.0)
        return rep

    points = sample_even_points(domain, samples, seed) if domain.even_coords else [{}]
    brackets = [
        (i, j, exp, bracket(spec.fields[i], spec.fields[j])) for i, j, exp in spec.pairs
    ]

    for i, j, expected, B in brackets:
        worst = 0.0
        witness = None
        for p in points:
            cols = []
            for k, V in enumerate(spec.fields):
                vals = {c: eval_superfunction(V.coeff(c), p) for c in
                        list(V.even_coeffs) + list(V.odd_coeffs)}
                base_vec = _flatten(vals, coords, basis_index, n)
                for I in gr_basis:
                    gI = GrassmannNumber(n, {I: 1.0})
                    mvals = {c: gI * g for c, g in vals.items()}
                    col = np.zeros(width, dtype=np.complex128)
                    col[:block] = _flatten(mvals, coords, basis_index, n)
                    if has_formal:
                        # formal slot: coefficient g_I applied to the unit
                        # marker of generator k
                        col[block + k * len(gr_basis) + basis_index[I]] = 1.0
                    cols.append(col)
            A = np.column_stack(cols)
            b = np.zeros(width, dtype=np.complex128)
            bvals = {
                c: eval_superfunction(B.coeff(c), p)
                for c in list(B.even_coeffs) + list(B.odd_coeffs)
            }
            b[:block] = _flatten(bvals, coords, basis_index, n)
            if has_formal and expected is not None:
                for k in range(r):
                    b[block + k * len(gr_basis)] = expected[k]
            sol, *_ = np.linalg.lstsq(A, b, rcond=None)
            res = float(np.max(np.abs(A @ sol - b))) if width else 0.0
            if res > worst:
                worst, witness = res, f"point {p}, bracket {B}"
        name = f"[{spec.labels[i]},{spec.labels[j]}] in span"
        rep.add(name, worst <= tol, worst, witness if worst > tol else None)
    rep.config = {"samples": samples, "seed": seed, "tol": tol}
    return rep


# -- paths and transport ------------------------------------------------------


@dataclass
class PathSegment:
    coeffs: dict  # basis name -> Expr in the formal time variable t
    t0: float
    t1: float


@dataclass
class GroupPath:
    segments: list
    base: dict
    closure_tolerance: float = 1e-6
    winding_note: int | None = None

    def reversed(self):
        """Traverse the same group path backwards."""
        segs = []
        for s in reversed(self.segments):
            span = s.t0 + s.t1
            flipped = {
                k: ex.neg(ex.substitute_expr(e, {"t": ex.sub(ex.Const(span), ex.Var("t"))}))
                for k, e in s.coeffs.items()
            }
            segs.append(PathSegment(flipped, s.t0, s.t1))
        return GroupPath(segs, dict(self.base), self.closure_tolerance, None)


def _segment_field(action: InfinitesimalAction, seg: PathSegment):
    g = action.algebra
    terms = []
    for name, e in seg.coeffs.items():
        if name not in g.basis:
            raise KeyError(f"unknown basis element {name!r} in path segment")
        if g.parities[g.basis.index(name)] != 0:
            raise ParityError("path coefficients must pair with even basis elements")
        fn = ex.compile_expr(e, "complex" if action.domain.field == "complex" else "real")
        lam = action.image(name)
        if not lam.is_zero_field() and lam.parity() != 0:
            raise ParityError(f"lambda({name}) must be an even field for transport")
        terms.append((lambda t, fn=fn: fn({"t": t}), lam))
    return TimeDependentField(terms)


def transport(
    action: InfinitesimalAction,
    path: GroupPath,
    cfg: FlowConfig = FlowConfig(jet_order=2),
    base: dict | None = None,
) -> JetSuperMap:
    """Time-ordered flow of lambda(xi(t)) along the path segments."""
    if base is None:
        base = path.base
    domain = action.domain
    ode = _JetODE(domain, base, cfg.jet_order, ())
    for seg in path.segments:
        tdf = _segment_field(action, seg)
        flow_time_dependent(tdf, (seg.t0, seg.t1), base, cfg, ode=ode)
    return ode.jet


@dataclass
class HolonomyGerm:
    jet: JetSuperMap
    base: dict
    closure_residual: float
    truncated: bool = False

    @property
    def triviality_residual(self) -> float:
        return self.jet.deviation_from_identity()

    def is_trivial(self, tol: float = 1e-6) -> bool:
        return self.triviality_residual <= tol

    def coefficient(self, target: str, md: tuple, mi_names: tuple):
        """Read one germ coefficient: target component, displacement
        multidegree, odd generator names."""
        ctx = self.jet.ctx
        mi = tuple(sorted(ctx.odd.index(nm) for nm in mi_names))
        return self.jet.components[target].vec[ctx.index[(md, mi)]]

    def describe(self) -> str:
        return describe_jet(self.jet)


def describe_jet(jet: JetSuperMap, tol: float = 1e-9) -> str:
    """Human-readable difference of a pullback germ from the identity."""
    parts = []
    ctx = jet.ctx
    ident = JetSuperMap.identity(jet.domain, jet.base, ctx.order, jet.extra_odd())
    for name in jet.domain.even_coords + jet.domain.odd_coords:
        diff = jet.components[name] - ident.components[name]
        terms = []
        for k, (md, mi) in enumerate(ctx.basis):
            v = diff.vec[k]
            if abs(v) <= tol:
                continue
            if abs(v.imag) <= tol:
                v = v.real
            mono = "*".join(
                [f"u_{ctx.even[p]}^{d}" if d > 1 else f"u_{ctx.even[p]}"
                 for p, d in enumerate(md) if d]
                + [ctx.odd[j] for j in mi]
            )
            terms.append(f"({v:.9g})" + (f"*{mono}" if mono else ""))
        if terms:
            parts.append(f"{name} -> {name} + " + " + ".join(terms))
    return "; ".join(parts) if parts else "identity"


def holonomy(
    action: InfinitesimalAction,
    loop: GroupPath,
    cfg: FlowConfig = FlowConfig(jet_order=2),
    base: dict | None = None,
) -> HolonomyGerm:
    """Transport around a loop and wrap the germ; the reduced path must
    return to the base point within the loop's closure tolerance."""
    if base is None:
        base = loop.base
    jet = transport(action, loop, cfg, base)
    residual = max(
        (abs(jet.components[n].body() - base[n]) for n in action.domain.even_coords),
        default=0.0,
    )
    if residual > loop.closure_tolerance:
        raise NotALoopError(residual)
    # flag coefficients clipped at the top displacement order
    ctx = jet.ctx
    truncated = False
    ident = JetSuperMap.identity(action.domain, base, ctx.order, ())
    for name, jp in jet.components.items():
        diff = jp - ident.components[name]
        for k, (md, mi) in enumerate(ctx.basis):
            if sum(md) == ctx.order and abs(diff.vec[k]) > 1e-9:
                truncated = True
    if truncated:
        import warnings

        warnings.warn(
            "holonomy germ has coefficients at the jet truncation order; "
            "increase the jet order to see the full germ",
            stacklevel=2,
        )
    return HolonomyGerm(jet, dict(base), residual, truncated)


def homotopy_invariance_check(
    action: InfinitesimalAction,
    loops: list,
    cfg: FlowConfig = FlowConfig(jet_order=2),
    tol: float = 1e-5,
) -> Report:
    """Germs of the supplied (homotopic) loops must agree pairwise."""
    rep = Report("homotopy-check")
    germs = [holonomy(action, lp, cfg) for lp in loops]
    for a in range(len(germs)):
        for b in range(a + 1, len(germs)):
            dev = germs[a].jet.deviation(germs[b].jet)
            rep.add(
                f"loop {a + 1} germ == loop {b + 1} germ",
                dev <= tol,
                dev,
                None if dev <= tol else germs[b].describe(),
            )
    return rep


# -- verdicts -----------------------------------------------------------------


@dataclass
class VerdictFlags:
    reduced_action_global: bool = False
    simply_connected: bool = False
    support_compact: bool = False
    global_flow_generators: bool = False


def globalizability_verdict(
    germs: list,
    flags: VerdictFlags,
    germ_tol: float = 1e-6,
) -> Report:
    """Apply the verdict rules to the supplied loop germs and flags.

    The germs must come from a user-declared generating set of loops; the
    verdict is conditional on that declaration.  Rules, in order:
    (a) a nontrivial germ defeats the holonomy-free condition;
    (b) trivial holonomy plus a globalizable reduced action globalizes,
        uniquely so over a simply connected group;
    (c) a simply connected group with relatively compact support or
        globally flowing generators acts globally;
    (d) otherwise nothing is established.
    """
    rep = Report("verdict")
    nontrivial = []
    for k, g in enumerate(germs):
        res = g.triviality_residual
        trivial = res <= germ_tol
        rep.add(
            f"loop {k + 1} germ trivial" if trivial else f"loop {k + 1} germ nontrivial",
            True,
            res,
            None if trivial else g.describe(),
        )
        if not trivial:
            nontrivial.append(g)

    if nontrivial:
        if flags.simply_connected and (
            flags.support_compact or flags.global_flow_generators
        ):
            raise ContradictionError(
                "nontrivial holonomy contradicts the declared global-action "
                "hypotheses (simply connected group with compact support or "
                "global flows); check the flags or the loops"
            )
        rep.verdict = "NotGlobalizable"
        rep.rule = "rule (a): nontrivial holonomy germ, the holonomy-free condition fails"
        return rep

    holonomy_free = bool(germs) or flags.simply_connected
    if holonomy_free and flags.reduced_action_global:
        if flags.simply_connected:
            rep.verdict = "Global"
            rep.rule = (
                "rule (b): trivial holonomy, globalizable reduced action, "
                "simply connected group; the globalization is unique"
            )
        else:
            rep.verdict = "Globalizable"
            rep.rule = "rule (b): trivial holonomy and globalizable reduced action"
        return rep

    if flags.simply_connected and (flags.support_compact or flags.global_flow_generators):
        rep.verdict = "Global"
        rep.rule = (
            "rule (c): simply connected group with relatively compact support "
            "or globally flowing generators"
        )
        return rep

    rep.verdict = "Inconclusive"
    rep.rule = "rule (d): no rule's hypotheses are established"
    return rep


# -- closed-form example embedding -------------------------------------------


def verify_example_embedding(
    alpha: ex.Expr,
    primitive: ex.Expr,
    samples: int = 50,
    seed: int = 0,
    tol: float = 1e-6,
    cfg: FlowConfig = FlowConfig(jet_order=2),
) -> Report:
    """For X_alpha = (1 + alpha(z) theta1 theta2) d/dz with a primitive A of
    alpha, the embedding z -> z - A(z) theta1 theta2 intertwines the flow of
    X_alpha with the even translation flow."""
    rep = Report("verify-embedding")
    domain = SuperDomain(("z",), ("theta1", "theta2"), field="complex")
    dA = ex.diff(primitive, "z")
    ok, res = _exprs_equal(dA, alpha, seed)
    rep.add("dA/dz == alpha", ok, res)

    coeff = SuperFunction.from_expr(domain, ex.ONE) + grassmannify(
        domain, ex.mul(alpha, ex.mul(ex.Var("theta1"), ex.Var("theta2")))
    )
    X = SuperVectorField(domain, {"z": coeff}, {})
    iota_z = SuperFunction.from_expr(domain, ex.Var("z")) - grassmannify(
        domain, ex.mul(primitive, ex.mul(ex.Var("theta1"), ex.Var("theta2")))
    )

    rng = np.random.default_rng(seed)
    worst = 0.0
    witness = None
    for _ in range(samples):
        z0 = complex(rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5))
        t = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
        # flow then embed: the flow pullback applied to iota*(z)
        fj = flow_even(X, t, {"z": z0}, cfg)
        lhs = jet_of_superfunction(iota_z, fj)
        # embed then translate: iota*(z + t) = iota*(z) + t
        ident = JetSuperMap.identity(domain, {"z": z0}, cfg.jet_order, ())
        rhs = jet_of_superfunction(iota_z, ident) + ident.ctx.const(t)
        dev = (lhs - rhs).max_abs()
        if dev > worst:
            worst, witness = dev, f"z={z0}, t={t}"
    rep.add("flow-then-embed == embed-then-translate", worst <= tol, worst,
            witness if worst > tol else None)
    return rep


def _exprs_equal(a: ex.Expr, b: ex.Expr, seed=0, samples=30, tol=1e-9):
    rng = np.random.default_rng(seed)
    fa = ex.compile_expr(a, "complex")
    fb = ex.compile_expr(b, "complex")
    worst = 0.0
    for _ in range(samples):
        z = complex(rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0))
        worst = max(worst, abs(fa({"z": z}) - fb({"z": z})))
    return worst <= tol, worst
