"""Flows of even super vector fields and local R^{m|n}/C^{m|n}-actions.

The flow state is a JetSuperMap: nilpotency of the odd variables plus jet
truncation make the flow equation an exactly finite ODE system, which a
fixed-step RK4 integrates deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CommutationError,
    DomainEvalError,
    FlowDomainExitError,
    ParityError,
)
from .fields import SuperVectorField, apply, bracket, fields_equal
from .grassmann import (
    SuperFunction,
    gr_mul,
    sample_even_points,
    substitute,
)
from .jets import (
    JetSuperMap,
    compose,
    get_context,
    jet_of_superfunction,
    superfunction_to_jet,
)
from .report import Report


@dataclass(frozen=True)
class FlowConfig:
    step: float = 1e-3
    jet_order: int = 0  # 0 for point flows; 2 is the usual germ order
    samples: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step size must be positive")
        if not 0 <= self.jet_order <= 4:
            raise ValueError("jet order must lie in 0..4")

    def germ(self, order=2):
        if self.jet_order >= order:
            return self
        return FlowConfig(self.step, order, self.samples, self.seed)


def _require_even(X: SuperVectorField, what="flow"):
    p = X.parity()
    if p == 1:
        raise ParityError(f"{what} requires an even vector field")
    if p is None and not X.is_zero_field():
        raise ParityError(f"{what} requires a homogeneous even vector field")


class _JetODE:
    """RK4 on the finite jet coefficient system d/dt phi*(c) = phi*(X_t(c))."""

    def __init__(self, domain, base, order, extra_odd):
        self.domain = domain
        self.jet = JetSuperMap.identity(domain, base, order, extra_odd)
        self.ctx = self.jet.ctx

    def rhs(self, comps, terms):
        """terms: list of (scalar coefficient, SuperVectorField)."""
        even_images = {n: comps[n] for n in self.domain.even_coords}
        odd_images = {n: comps[n] for n in self.domain.odd_coords}
        out = {}
        for scalar, X in terms:
            if scalar == 0:
                continue
            for name in list(X.even_coeffs) + list(X.odd_coeffs):
                sf = X.coeff(name)
                jp = superfunction_to_jet(sf, even_images, odd_images, self.ctx).scale(scalar)
                out[name] = out[name] + jp if name in out else jp
        return out

    def step(self, h, terms_at):
        """One RK4 step; terms_at(s) gives the field combination at the
        integration parameter s in [0, 1] relative to this step."""
        comps = self.jet.components
        try:
            k1 = self.rhs(comps, terms_at(0.0))
            k2 = self.rhs(_axpy(comps, h / 2, k1), terms_at(0.5))
            k3 = self.rhs(_axpy(comps, h / 2, k2), terms_at(0.5))
            k4 = self.rhs(_axpy(comps, h, k3), terms_at(1.0))
        except DomainEvalError as exc:
            raise _StepFailed(exc)
        new = dict(comps)
        for name in set(k1) | set(k2) | set(k3) | set(k4):
            delta = None
            for w, k in ((1.0, k1), (2.0, k2), (2.0, k3), (1.0, k4)):
                if name in k:
                    piece = k[name].scale(w * h / 6)
                    delta = piece if delta is None else delta + piece
            if delta is not None:
                new[name] = new[name] + delta
        self.jet = JetSuperMap(self.domain, self.jet.base, self.ctx, new)
        self._check_in_domain()

    def _check_in_domain(self, tol=1e-9):
        if not self.domain.excluded:
            return
        image = self.jet.body_image()
        for name, value in self.domain.excluded:
            if abs(image[name] - value) <= tol:
                raise _StepFailed(
                    DomainEvalError(f"trajectory reached excluded locus {name} = {value}")
                )


class _StepFailed(Exception):
    def __init__(self, cause):
        self.cause = cause


def _axpy(comps, a, k):
    out = dict(comps)
    for name, jp in k.items():
        out[name] = out[name] + jp.scale(a)
    return out


def flow_even(
    X: SuperVectorField,
    t,
    base: dict,
    cfg: FlowConfig = FlowConfig(),
    extra_odd=(),
) -> JetSuperMap:
    """Pullback germ of the time-t flow of an even field at an even base
    point.  Complex times are traversed along the straight segment 0 -> t."""
    _require_even(X)
    ode = _JetODE(X.domain, base, cfg.jet_order, extra_odd)
    if t == 0 or X.is_zero_field():
        return ode.jet
    n_steps = max(1, math.ceil(abs(t) / cfg.step))
    h = 1.0 / n_steps  # parametrise the segment s in [0,1], velocity t*X
    terms = [(t, X)]
    for i in range(n_steps):
        try:
            ode.step(h, lambda s: terms)
        except _StepFailed as exc:
            raise FlowDomainExitError((i / n_steps) * t, exc.cause) from exc.cause
    return ode.jet


class TimeDependentField:
    """Linear combination sum_k xi_k(t) * X_k with scalar coefficient
    functions; the X_k stay fixed so jet substitution caches stay warm."""

    def __init__(self, terms):
        self.terms = list(terms)  # (callable t -> scalar, SuperVectorField)

    @classmethod
    def constant(cls, X):
        return cls([(lambda t: 1.0, X)])

    @classmethod
    def from_callable(cls, fn, probe_times=()):
        """Wrap a t -> SuperVectorField callable (slow path)."""
        obj = cls([])
        obj._fn = fn
        return obj

    def at(self, t):
        if hasattr(self, "_fn"):
            return [(1.0, self._fn(t))]
        return [(f(t), X) for f, X in self.terms]

    def field_at(self, t):
        out = None
        for c, X in self.at(t):
            Xc = X.scale(c)
            out = Xc if out is None else out + Xc
        return out


def flow_time_dependent(
    field_of_t,
    t_span,
    base: dict,
    cfg: FlowConfig = FlowConfig(),
    extra_odd=(),
    ode: "_JetODE | None" = None,
) -> JetSuperMap:
    """Time-ordered integration of the jet hierarchy with a t-dependent even
    field.  field_of_t is a TimeDependentField or a callable t -> field."""
    if callable(field_of_t):
        field_of_t = TimeDependentField.from_callable(field_of_t)
    t0, t1 = t_span
    if ode is None:
        ode = _JetODE(next(iter(field_of_t.at(t0)))[1].domain, base, cfg.jet_order, extra_odd)
    if t1 == t0:
        return ode.jet
    n_steps = max(1, math.ceil(abs(t1 - t0) / cfg.step))
    h = (t1 - t0) / n_steps
    for i in range(n_steps):
        ta = t0 + i * h
        try:
            ode.step(h, lambda s: field_of_t.at(ta + s * h))
        except _StepFailed as exc:
            raise FlowDomainExitError(ta, exc.cause) from exc.cause
    return ode.jet


# -- odd exponential ----------------------------------------------------------


def check_supercommuting(fields, tol=1e-9, samples=100, seed=0) -> Report:
    """All pairs must super-commute; odd fields must also self-commute."""
    rep = Report("commutation")
    items = list(fields)
    for i, X in enumerate(items):
        for j in range(i, len(items)):
            Y = items[j]
            if i == j and X.parity() != 1:
                continue  # [X,X]=0 automatically for even X
            B = bracket(X, Y)
            eq, r = fields_equal(B, SuperVectorField.zero(X.domain), tol, samples, seed)
            rep.add(
                f"[gen{i},gen{j}] = 0",
                eq,
                r,
                None if eq else f"residual field {B}",
            )
    return rep


def lift_field(X: SuperVectorField, ext_domain) -> SuperVectorField:
    """Re-express a field on M as a field on an extension of M by extra odd
    parameters (which come first in the odd coordinate order)."""
    shift = ext_domain.n - X.domain.n

    def lift_sf(sf):
        return SuperFunction(
            ext_domain, {tuple(k + shift for k in I): e for I, e in sf.terms.items()}
        )

    return SuperVectorField(
        ext_domain,
        {n: lift_sf(sf) for n, sf in X.even_coeffs.items()},
        {n: lift_sf(sf) for n, sf in X.odd_coeffs.items()},
    )


def odd_exponential(Ys, tau_names=None, validate=True, tol=1e-9, samples=100, seed=0):
    """Pullback of exp(sum tau_j Y_j) for commuting odd fields.

    Returns (extended domain with the tau parameters prepended, dict
    coordinate -> SuperFunction over the extended domain).  The series ends
    at order n because the nilpotent operator has vanishing (n+1)-st power.
    """
    Ys = list(Ys)
    for Y in Ys:
        if not Y.is_zero_field() and Y.parity() != 1:
            raise ParityError("odd exponential requires odd vector fields")
    if validate and Ys:
        rep = check_supercommuting(Ys, tol, samples, seed)
        if not rep.passed:
            fail = rep.first_failure()
            raise CommutationError(
                f"odd generators do not super-commute: {fail.name}: {fail.witness}",
                residual=fail.residual,
            )
    if not Ys:
        raise ValueError("odd_exponential needs at least one field")
    domain = Ys[0].domain
    if tau_names is None:
        tau_names = tuple(f"tau{j + 1}" for j in range(len(Ys)))
    ext = domain.with_odds(tuple(tau_names) + domain.odd_coords)
    lifted = [lift_field(Y, ext) for Y in Ys]
    taus = [SuperFunction.coordinate(ext, name) for name in tau_names]

    def D(f):
        out = SuperFunction.zero(ext)
        for tau, Y in zip(taus, lifted):
            out = out + gr_mul(tau, apply(Y, f))
        return out

    pullback = {}
    for name in domain.even_coords + domain.odd_coords:
        f = SuperFunction.coordinate(ext, name)
        total = f
        term = f
        for k in range(1, len(Ys) + 1):
            term = D(term).scale(1.0 / k)
            if term.is_zero_sf():
                break
            total = total + term
        pullback[name] = total
    return ext, pullback


# -- local actions ------------------------------------------------------------


@dataclass
class LocalActionEvaluator:
    """phi = beta o (id x alpha): composed even flows after the finite odd
    exponential; evaluation yields pullback germs with formal odd
    parameters."""

    evens: list
    odds: list
    cfg: FlowConfig
    tau_names: tuple = ()
    extended_domain: object = None
    alpha_pullback: dict = field(default_factory=dict)

    @property
    def domain(self):
        if self.evens:
            return self.evens[0].domain
        return self.odds[0].domain

    def default_base(self):
        base = {}
        excluded = dict(self.domain.excluded)
        for name in self.domain.even_coords:
            v = 0.0 if self.domain.field == "real" else 0j
            while name in excluded and abs(v - excluded[name]) < 0.5:
                v = v + 1.0
            base[name] = v
        return base

    def rhs_jets(self, i, jet: JetSuperMap):
        """Right-hand side of the jet ODE for even generator i at a given
        jet state; at the identity jet this is the parameter derivative of
        the action pullback at 0."""
        X = self.evens[i]
        even_images = {n: jet.components[n] for n in self.domain.even_coords}
        odd_images = {n: jet.components[n] for n in self.domain.odd_coords}
        out = {}
        for name in list(X.even_coeffs) + list(X.odd_coeffs):
            out[name] = superfunction_to_jet(X.coeff(name), even_images, odd_images, jet.ctx)
        return out

    def _beta_jet(self, t_values, base, order, gens):
        jet = JetSuperMap.identity(self.domain, base, order, gens)
        # beta = phi^{X_1}_{t_1} o ... o phi^{X_m}_{t_m}: innermost first
        for i in reversed(range(len(self.evens))):
            inner = jet
            cfg = FlowConfig(self.cfg.step, order, self.cfg.samples, self.cfg.seed)
            outer = flow_even(self.evens[i], t_values[i], inner.body_image(), cfg, gens)
            jet = compose(outer, inner)
        return jet

    def evaluate(
        self, t_values=(), base=None, order=2, tau_names=None, extra_left=()
    ) -> JetSuperMap:
        """Pullback germ of the action at even parameters t and formal odd
        parameters (named tau_names), at an even base point."""
        if base is None:
            base = self.default_base()
        if tau_names is None:
            tau_names = self.tau_names
        gens = tuple(extra_left) + tuple(tau_names)
        if len(t_values) != len(self.evens):
            raise ValueError(f"expected {len(self.evens)} even parameters")
        beta = self._beta_jet(t_values, base, order, gens)
        if not self.odds:
            return beta
        # alpha* then beta*: substitute the beta-components into alpha*(c)
        ctx = beta.ctx
        even_images = {n: beta.components[n] for n in self.domain.even_coords}
        odd_images = {n: beta.components[n] for n in self.domain.odd_coords}
        for mine, theirs in zip(self.tau_names, tau_names):
            odd_images[mine] = ctx.odd_gen(theirs)
        comps = {}
        for name in self.domain.even_coords + self.domain.odd_coords:
            comps[name] = superfunction_to_jet(
                self.alpha_pullback[name], even_images, odd_images, ctx
            )
        return JetSuperMap(self.domain, dict(base), ctx, comps)

    def evaluate_with_summed_odd(
        self, t_values, base, sigma_names, tau_names, order=2
    ) -> JetSuperMap:
        """Like evaluate, with the odd parameters replaced by sums
        sigma_j + tau_j (the mu-side of the action property)."""
        if base is None:
            base = self.default_base()
        gens = tuple(sigma_names) + tuple(tau_names)
        beta = self._beta_jet(t_values, base, order, gens)
        if not self.odds:
            return beta
        ext2 = self.domain.with_odds(gens + self.domain.odd_coords)
        mapping = {}
        for j, mine in enumerate(self.tau_names):
            mapping[mine] = SuperFunction.coordinate(ext2, sigma_names[j]) + (
                SuperFunction.coordinate(ext2, tau_names[j])
            )
        for name in self.domain.even_coords:
            mapping[name] = SuperFunction.coordinate(ext2, name)
        for name in self.domain.odd_coords:
            mapping[name] = SuperFunction.coordinate(ext2, name)
        ctx = beta.ctx
        even_images = {n: beta.components[n] for n in self.domain.even_coords}
        odd_images = {n: beta.components[n] for n in self.domain.odd_coords}
        for g in gens:
            odd_images[g] = ctx.odd_gen(g)
        comps = {}
        for name in self.domain.even_coords + self.domain.odd_coords:
            summed = substitute(self.alpha_pullback[name], mapping)
            comps[name] = superfunction_to_jet(summed, even_images, odd_images, ctx)
        return JetSuperMap(self.domain, dict(base), ctx, comps)


def build_local_action(
    Xs, Ys, cfg: FlowConfig = FlowConfig(), tol=1e-9, samples=100, seed=0
) -> LocalActionEvaluator:
    """Local action evaluator from commuting even and odd generators
    (validated at construction)."""
    Xs, Ys = list(Xs), list(Ys)
    if not Xs and not Ys:
        raise ValueError("need at least one generator")
    for X in Xs:
        _require_even(X, "build_local_action even generator")
    for Y in Ys:
        if not Y.is_zero_field() and Y.parity() != 1:
            raise ParityError("odd generators must be odd")
    rep = check_supercommuting(Xs + Ys, tol, samples, seed)
    if not rep.passed:
        fail = rep.first_failure()
        raise CommutationError(
            f"generators do not super-commute: {fail.name}: {fail.witness}",
            residual=fail.residual,
        )
    tau_names = tuple(f"tau{j + 1}" for j in range(len(Ys)))
    if Ys:
        ext, alpha = odd_exponential(Ys, tau_names, validate=False)
    else:
        ext, alpha = None, {}
    return LocalActionEvaluator(Xs, Ys, cfg, tau_names, ext, alpha)


def _set_generators_to_zero(jet: JetSuperMap, names) -> JetSuperMap:
    """Project the listed odd generators to zero in every component."""
    idxs = {jet.ctx.odd.index(n) for n in names}
    comps = {}
    for cname, jp in jet.components.items():
        vec = jp.vec.copy()
        for k, (md, mi) in enumerate(jet.ctx.basis):
            if idxs.intersection(mi):
                vec[k] = 0
        comps[cname] = type(jp)(jet.ctx, vec)
    return JetSuperMap(jet.domain, jet.base, jet.ctx, comps)


def check_action_property(
    ev: LocalActionEvaluator,
    samples: int = 20,
    seed: int = 0,
    h: float = 1e-5,
    param_scale: float = 0.5,
    derivative_fields=None,
) -> Report:
    """Identity at 0, the semigroup law under jet composition, and the
    derivative property d/dt_i phi* = phi* o X_i by centred differences."""
    rep = Report("check-action")
    domain = ev.domain
    rng = np.random.default_rng(seed)
    m = len(ev.evens)
    n = len(ev.odds)
    if derivative_fields is None:
        derivative_fields = ev.evens

    def rand_params():
        if domain.field == "complex":
            return [
                complex(rng.uniform(-param_scale, param_scale), rng.uniform(-param_scale, param_scale))
                for _ in range(m)
            ]
        return [float(rng.uniform(-param_scale, param_scale)) for _ in range(m)]

    bases = sample_even_points(domain, samples, seed + 1) if domain.even_coords else [
        {} for _ in range(samples)
    ]

    # identity at parameter 0, with the formal odd parameters set to zero
    base0 = bases[0]
    j0 = _set_generators_to_zero(ev.evaluate([0] * m, base0), ev.tau_names)
    ident_dev = j0.deviation_from_identity()
    rep.add("identity at 0", ident_dev <= 1e-12, ident_dev)

    sig = tuple(f"sigma{j + 1}" for j in range(n))
    tau = tuple(f"tau{j + 1}" for j in range(n))
    worst = 0.0
    witness = None
    for base in bases:
        s, t = rand_params(), rand_params()
        try:
            jt = ev.evaluate(t, base, tau_names=tau)
            js = ev.evaluate(s, jt.body_image(), tau_names=sig)
            comp = compose(js, jt)
            st = [a + b for a, b in zip(s, t)]
            if n:
                total = ev.evaluate_with_summed_odd(st, base, sig, tau)
            else:
                total = ev.evaluate(st, base)
            dev = comp.deviation(total)
        except FlowDomainExitError:
            continue
        if dev > worst:
            worst, witness = dev, f"base={base}, s={s}, t={t}"
    rep.add("semigroup law", worst <= 1e-6, worst, witness if worst > 1e-6 else None)

    worst = 0.0
    witness = None
    for base in bases[: max(1, samples // 4)]:
        t = rand_params()
        try:
            jt = ev.evaluate(t, base)
            for i in range(m):
                tp = list(t)
                tm = list(t)
                tp[i] += h
                tm[i] -= h
                jp = ev.evaluate(tp, base)
                jm = ev.evaluate(tm, base)
                for name in domain.even_coords + domain.odd_coords:
                    fd = (jp.components[name] - jm.components[name]).scale(1 / (2 * h))
                    Xc = apply(
                        derivative_fields[i],
                        SuperFunction.coordinate(domain, name),
                    )
                    rhs = superfunction_to_jet(
                        Xc,
                        {k: jt.components[k] for k in domain.even_coords},
                        {k: jt.components[k] for k in domain.odd_coords},
                        jt.ctx,
                    )
                    dev = (fd - rhs).max_abs()
                    if dev > worst:
                        worst, witness = dev, f"d/dt_{i} at base={base}"
        except FlowDomainExitError:
            continue
    rep.add("derivative property", worst <= 1e-4, worst, witness if worst > 1e-4 else None)
    return rep


def check_flows_commute(
    X: SuperVectorField,
    Y: SuperVectorField,
    samples: int = 10,
    cfg: FlowConfig = FlowConfig(jet_order=2),
    seed: int = 0,
    t_scale: float = 0.5,
) -> Report:
    """Compare phi^X_t o phi^Y_s with phi^Y_s o phi^X_t on sampled jets."""
    rep = Report("flows-commute")
    rng = np.random.default_rng(seed)
    domain = X.domain
    bases = sample_even_points(domain, samples, seed + 1) if domain.even_coords else [
        {} for _ in range(samples)
    ]
    worst = 0.0
    witness = None
    for base in bases:
        t = float(rng.uniform(-t_scale, t_scale))
        s = float(rng.uniform(-t_scale, t_scale))
        try:
            jy = flow_even(Y, s, base, cfg)
            jx = flow_even(X, t, jy.body_image(), cfg)
            ab = compose(jx, jy)
            jx2 = flow_even(X, t, base, cfg)
            jy2 = flow_even(Y, s, jx2.body_image(), cfg)
            ba = compose(jy2, jx2)
            dev = ab.deviation(ba)
        except FlowDomainExitError:
            continue
        if dev > worst:
            worst, witness = dev, f"base={base}, t={t}, s={s}"
    rep.add("flows commute", worst <= 1e-6, worst, witness if worst > 1e-6 else None)
    return rep


def _apply_field_to_germ(X: SuperVectorField, jet: JetSuperMap) -> dict:
    """Components of X applied to each pulled-back coordinate germ."""
    domain = X.domain
    ident = JetSuperMap.identity(domain, jet.base, jet.order, jet.extra_odd())
    coeff_jets = {}
    for name in list(X.even_coeffs) + list(X.odd_coeffs):
        coeff_jets[name] = jet_of_superfunction(X.coeff(name), ident)
    out = {}
    for cname in domain.even_coords + domain.odd_coords:
        g = jet.components[cname]
        acc = jet.ctx.zero()
        for name, a in X.even_coeffs.items():
            acc = acc + coeff_jets[name] * g.du(name)
        for name, b in X.odd_coeffs.items():
            acc = acc + coeff_jets[name] * g.dodd(name)
        out[cname] = acc
    return out


def pushforward_derivative_check(
    X: SuperVectorField,
    Y: SuperVectorField,
    base: dict,
    cfg: FlowConfig = FlowConfig(jet_order=2),
    h: float = 1e-5,
    tol: float = 1e-5,
) -> Report:
    """Finite difference of (phi^Y_t)_* X at t=0 against bracket(X, Y)."""
    rep = Report("pushforward-derivative")
    _require_even(Y, "pushforward")
    domain = X.domain

    def pushforward_value(t):
        back = flow_even(Y, -t, base, cfg)
        r = back.body_image()
        fwd = flow_even(Y, t, r, cfg)
        comps = _apply_field_to_germ(X, fwd)
        even_images = {
            n: back.components[n] - back.ctx.const(fwd.base[n]) for n in domain.even_coords
        }
        odd_images = {n: back.components[n] for n in domain.odd_coords}
        for gname in fwd.ctx.odd:
            if gname not in odd_images:
                odd_images[gname] = back.ctx.odd_gen(gname)
        out = {}
        for cname in domain.even_coords + domain.odd_coords:
            germ_at_p = comps[cname].eval_poly(even_images, odd_images, back.ctx)
            out[cname] = germ_at_p.at_zero_displacement()
        return out

    plus = pushforward_value(h)
    minus = pushforward_value(-h)
    B = bracket(X, Y)
    from .grassmann import eval_superfunction

    worst = 0.0
    witness = None
    for cname in domain.even_coords + domain.odd_coords:
        fd = (plus[cname] - minus[cname]) * (1 / (2 * h))
        expected = eval_superfunction(B.coeff(cname), base)
        dev = (fd - expected).norm()
        if dev > worst:
            worst, witness = dev, f"coordinate {cname}"
    rep.add("d/dt pushforward = bracket", worst <= tol, worst, witness if worst > tol else None)
    return rep
