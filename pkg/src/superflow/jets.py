"""Truncated jet algebra with Grassmann coefficients.

The numeric state of flows, transport and holonomy germs: for each target
coordinate a finite coefficient vector indexed by (multidegree in the even
displacement variables, odd multi-index).  Truncating the displacement
degree at the jet order and using the nilpotency of the odd generators
turns the flow equation into an exactly finite ODE system.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from . import expr as ex
from .errors import DomainEvalError, ParityError
from .grassmann import SuperDomain, SuperFunction, GrassmannNumber, merge_indices


@lru_cache(maxsize=None)
def _diff_cached(e, name):
    return ex.diff(e, name)


def _multidegrees(m, order):
    if m == 0:
        return [()]
    out = []
    for md in product(range(order + 1), repeat=m):
        if sum(md) <= order:
            out.append(md)
    out.sort(key=lambda md: (sum(md), md))
    return out


def _subsets(n):
    out = [()]
    for size in range(1, n + 1):
        from itertools import combinations

        out.extend(combinations(range(n), size))
    return out


@lru_cache(maxsize=None)
def get_context(even: tuple, odd: tuple, order: int):
    return JetContext(even, odd, order)


class JetContext:
    """Shared basis and multiplication table for jet coefficients."""

    def __init__(self, even, odd, order):
        self.even = tuple(even)
        self.odd = tuple(odd)
        self.order = order
        self.basis = [
            (md, mi) for md in _multidegrees(len(self.even), order) for mi in _subsets(len(self.odd))
        ]
        self.index = {b: i for i, b in enumerate(self.basis)}
        self.dim = len(self.basis)
        self._table = None

    def __hash__(self):
        return hash((self.even, self.odd, self.order))

    def __eq__(self, other):
        return (
            isinstance(other, JetContext)
            and (self.even, self.odd, self.order) == (other.even, other.odd, other.order)
        )

    def table(self):
        if self._table is None:
            ii, jj, kk, ss = [], [], [], []
            for i, (mda, mia) in enumerate(self.basis):
                for j, (mdb, mib) in enumerate(self.basis):
                    md = tuple(a + b for a, b in zip(mda, mdb))
                    if sum(md) > self.order:
                        continue
                    merged = merge_indices(mia, mib)
                    if merged is None:
                        continue
                    mi, sign = merged
                    ii.append(i)
                    jj.append(j)
                    kk.append(self.index[(md, mi)])
                    ss.append(sign)
            self._table = (
                np.array(ii, dtype=np.intp),
                np.array(jj, dtype=np.intp),
                np.array(kk, dtype=np.intp),
                np.array(ss, dtype=np.complex128),
            )
        return self._table

    # -- constructors ----------------------------------------------------

    def zero(self):
        return JetPoly(self, np.zeros(self.dim, dtype=np.complex128))

    def const(self, value):
        v = np.zeros(self.dim, dtype=np.complex128)
        v[self.index[(tuple(0 for _ in self.even), ())]] = value
        return JetPoly(self, v)

    def displacement(self, name):
        i = self.even.index(name)
        md = tuple(1 if k == i else 0 for k in range(len(self.even)))
        v = np.zeros(self.dim, dtype=np.complex128)
        v[self.index[(md, ())]] = 1.0
        return JetPoly(self, v)

    def odd_gen(self, name):
        j = self.odd.index(name)
        v = np.zeros(self.dim, dtype=np.complex128)
        v[self.index[(tuple(0 for _ in self.even), (j,))]] = 1.0
        return JetPoly(self, v)


class JetPoly:
    __slots__ = ("ctx", "vec")

    def __init__(self, ctx, vec):
        self.ctx = ctx
        self.vec = vec

    def copy(self):
        return JetPoly(self.ctx, self.vec.copy())

    def __add__(self, other):
        return JetPoly(self.ctx, self.vec + other.vec)

    def __sub__(self, other):
        return JetPoly(self.ctx, self.vec - other.vec)

    def __neg__(self):
        return JetPoly(self.ctx, -self.vec)

    def scale(self, c):
        return JetPoly(self.ctx, self.vec * c)

    def __mul__(self, other):
        if not isinstance(other, JetPoly):
            return self.scale(other)
        ii, jj, kk, ss = self.ctx.table()
        out = np.zeros(self.ctx.dim, dtype=np.complex128)
        np.add.at(out, kk, ss * self.vec[ii] * other.vec[jj])
        return JetPoly(self.ctx, out)

    __rmul__ = __mul__

    def body(self):
        return self.vec[self.ctx.index[(tuple(0 for _ in self.ctx.even), ())]]

    def is_zero(self, tol=0.0):
        if tol == 0.0:
            return not self.vec.any()
        return bool(np.all(np.abs(self.vec) <= tol))

    def max_abs(self):
        return float(np.max(np.abs(self.vec))) if self.ctx.dim else 0.0

    def parity(self):
        parities = {len(mi) % 2 for (md, mi), v in zip(self.ctx.basis, self.vec) if v != 0}
        if not parities:
            return None
        return parities.pop() if len(parities) == 1 else None

    def du(self, name):
        """Derivative with respect to an even displacement variable."""
        i = self.ctx.even.index(name)
        out = np.zeros(self.ctx.dim, dtype=np.complex128)
        for k, (md, mi) in enumerate(self.ctx.basis):
            if md[i] == 0 or self.vec[k] == 0:
                continue
            md2 = tuple(d - 1 if j == i else d for j, d in enumerate(md))
            out[self.ctx.index[(md2, mi)]] += md[i] * self.vec[k]
        return JetPoly(self.ctx, out)

    def dodd(self, name):
        """Left derivative with respect to an odd generator."""
        j = self.ctx.odd.index(name)
        out = np.zeros(self.ctx.dim, dtype=np.complex128)
        for k, (md, mi) in enumerate(self.ctx.basis):
            if j not in mi or self.vec[k] == 0:
                continue
            pos = mi.index(j)
            mi2 = mi[:pos] + mi[pos + 1 :]
            sign = 1 if pos % 2 == 0 else -1
            out[self.ctx.index[(md, mi2)]] += sign * self.vec[k]
        return JetPoly(self.ctx, out)

    def at_zero_displacement(self):
        """Forget displacement: the Grassmann number at the base point."""
        terms = {}
        for k, (md, mi) in enumerate(self.ctx.basis):
            if any(md) or self.vec[k] == 0:
                continue
            terms[mi] = self.vec[k]
        return GrassmannNumber(len(self.ctx.odd), terms)

    def embed(self, ctx2):
        """Re-express in a context with a superset of generators."""
        if ctx2 is self.ctx:
            return self
        emap = [ctx2.even.index(n) for n in self.ctx.even]
        omap = [ctx2.odd.index(n) for n in self.ctx.odd]
        out = np.zeros(ctx2.dim, dtype=np.complex128)
        for k, (md, mi) in enumerate(self.ctx.basis):
            if self.vec[k] == 0:
                continue
            md2 = [0] * len(ctx2.even)
            for pos, d in enumerate(md):
                md2[emap[pos]] = d
            if sum(md2) > ctx2.order:
                raise ValueError("jet order too small for embedding")
            mi2 = tuple(sorted(omap[j] for j in mi))
            # generator renaming is order preserving in all our uses; a
            # permutation would need a sign which we do not support here
            if list(mi2) != [omap[j] for j in mi]:
                raise ValueError("odd generator embedding must preserve order")
            out[ctx2.index[(tuple(md2), mi2)]] += self.vec[k]
        return JetPoly(ctx2, out)

    def eval_poly(self, even_images: dict, odd_images: dict, ctx2):
        """Evaluate as a polynomial: displacement names -> JetPoly images,
        odd generator names -> JetPoly images, all in ctx2."""
        # cache powers of the even images
        powers = {name: [ctx2.const(1.0)] for name in self.ctx.even}
        out = ctx2.zero()
        for k, (md, mi) in enumerate(self.ctx.basis):
            c = self.vec[k]
            if c == 0:
                continue
            term = ctx2.const(c)
            for pos, d in enumerate(md):
                if d == 0:
                    continue
                name = self.ctx.even[pos]
                plist = powers[name]
                while len(plist) <= d:
                    plist.append(plist[-1] * even_images[name])
                term = term * plist[d]
            dead = False
            for j in mi:
                img = odd_images[self.ctx.odd[j]]
                term = term * img
                if term.is_zero():
                    dead = True
                    break
            if not dead:
                out = out + term
        return out


@dataclass
class JetSuperMap:
    """Numeric germ of a morphism pullback at an even base point."""

    domain: SuperDomain
    base: dict
    ctx: JetContext
    components: dict  # coordinate name -> JetPoly

    @classmethod
    def identity(cls, domain: SuperDomain, base: dict, order: int, extra_odd=()):
        ctx = get_context(domain.even_coords, tuple(extra_odd) + domain.odd_coords, order)
        comps = {}
        for name in domain.even_coords:
            comps[name] = ctx.const(base[name])
            if order > 0:
                comps[name] = comps[name] + ctx.displacement(name)
        for name in domain.odd_coords:
            comps[name] = ctx.odd_gen(name)
        return cls(domain, dict(base), ctx, comps)

    @property
    def order(self):
        return self.ctx.order

    def extra_odd(self):
        return tuple(n for n in self.ctx.odd if n not in self.domain.odd_coords)

    def body_image(self):
        out = {}
        for name in self.domain.even_coords:
            v = self.components[name].body()
            out[name] = complex(v) if self.domain.field == "complex" else float(v.real)
        return out

    def check_parities(self):
        for name in self.domain.even_coords:
            p = self.components[name].parity()
            if p not in (0, None):
                raise ParityError(f"even component {name} is not even")
        for name in self.domain.odd_coords:
            p = self.components[name].parity()
            if p not in (1, None):
                raise ParityError(f"odd component {name} is not odd")

    def component_vector(self):
        return np.concatenate(
            [self.components[n].vec for n in self.domain.even_coords + self.domain.odd_coords]
        )

    def deviation(self, other: "JetSuperMap") -> float:
        """Sup-norm of the coefficient difference, over a common context."""
        odds = list(dict.fromkeys(self.ctx.odd + other.ctx.odd))
        order = max(self.ctx.order, other.ctx.order)
        ctx = get_context(self.domain.even_coords, tuple(odds), order)
        dev = 0.0
        for name in self.domain.even_coords + self.domain.odd_coords:
            a = self.components[name].embed(ctx)
            b = other.components[name].embed(ctx)
            dev = max(dev, (a - b).max_abs())
        return dev

    def deviation_from_identity(self) -> float:
        ident = JetSuperMap.identity(self.domain, self.base, self.ctx.order, self.extra_odd())
        return self.deviation(ident)


def compose(outer: JetSuperMap, inner: JetSuperMap, tol: float = 1e-6) -> JetSuperMap:
    """Germ of outer_map o inner_map; outer must be based at inner's body image."""
    img = inner.body_image()
    for name in outer.domain.even_coords:
        if abs(img[name] - outer.base[name]) > tol:
            raise ValueError(
                f"composition mismatch on {name}: inner body image {img[name]} "
                f"!= outer base {outer.base[name]}"
            )
    inner_odds = inner.ctx.odd
    extra = tuple(n for n in outer.ctx.odd if n not in inner_odds)
    ctx = get_context(inner.ctx.even, extra + inner_odds, max(outer.order, inner.order))

    even_images = {}
    for name in outer.domain.even_coords:
        even_images[name] = inner.components[name].embed(ctx) - ctx.const(outer.base[name])
    odd_images = {}
    for name in outer.ctx.odd:
        if name in inner.components:
            odd_images[name] = inner.components[name].embed(ctx)
        else:
            odd_images[name] = ctx.odd_gen(name)

    comps = {}
    for name in outer.domain.even_coords + outer.domain.odd_coords:
        comps[name] = outer.components[name].eval_poly(even_images, odd_images, ctx)
    return JetSuperMap(inner.domain, dict(inner.base), ctx, comps)


def superfunction_to_jet(
    f: SuperFunction, even_images: dict, odd_images: dict, ctx: JetContext
) -> JetPoly:
    """Finite nilpotent Taylor expansion of a superfunction through coordinate
    images given as jet coefficients."""
    field = f.domain.field
    bases = {}
    nil_powers = {}
    for name in f.domain.even_coords:
        img = even_images[name]
        b = img.body()
        if field == "real":
            b = b.real
        bases[name] = b
        nil = img - ctx.const(img.body())
        powers = [ctx.const(1.0)]
        acc = powers[0]
        while True:
            acc = acc * nil
            if acc.is_zero():
                break
            powers.append(acc)
        nil_powers[name] = powers

    nil_names = [n for n in f.domain.even_coords if len(nil_powers[n]) > 1]

    out = ctx.zero()
    for I, e in f.terms.items():
        term = _taylor_jet(e, bases, nil_names, nil_powers, ctx, field)
        dead = False
        for j in I:
            term = term * odd_images[f.domain.odd_coords[j]]
            if term.is_zero():
                dead = True
                break
        if not dead:
            out = out + term
    return out


def _taylor_jet(e, bases, nil_names, nil_powers, ctx, field):
    out = ctx.zero()

    def rec(k, deriv, prefactor, accum):
        nonlocal out
        if accum is not None and accum.is_zero():
            return
        if k == len(nil_names):
            val = ex.compile_expr(deriv, field)(bases)
            if val == 0:
                return
            piece = ctx.const(val * prefactor) if accum is None else accum.scale(val * prefactor)
            out = out + piece
            return
        name = nil_names[k]
        d = deriv
        fact = 1.0
        for a, p in enumerate(nil_powers[name]):
            if a > 0:
                d = _diff_cached(d, name)
                if ex.is_zero(d):
                    break
                fact *= a
            nxt = accum if a == 0 else (p if accum is None else accum * p)
            rec(k + 1, d, prefactor / fact, nxt)

    rec(0, e, 1.0, None)
    return out


def jet_of_superfunction(f: SuperFunction, jet: JetSuperMap) -> JetPoly:
    """Pull a superfunction back through a jet germ: f o (jet map)."""
    even_images = {n: jet.components[n] for n in f.domain.even_coords}
    odd_images = {n: jet.components[n] for n in f.domain.odd_coords}
    return superfunction_to_jet(f, even_images, odd_images, jet.ctx)


def jetpoly_to_superfunction(p: JetPoly, domain: SuperDomain, base: dict) -> SuperFunction:
    """Reconstruct a polynomial superfunction from jet coefficients at base."""
    terms = {}
    for k, (md, mi) in enumerate(p.ctx.basis):
        c = p.vec[k]
        if c == 0:
            continue
        if domain.field == "real":
            c = c.real
        coeff = ex.Const(c)
        for pos, d in enumerate(md):
            if d == 0:
                continue
            name = p.ctx.even[pos]
            disp = ex.sub(ex.Var(name), ex.Const(base[name] if domain.field == "complex" else complex(base[name]).real))
            coeff = ex.mul(coeff, ex.power(disp, d))
        # map jet odd generators back to domain odd indices
        try:
            I = tuple(domain.odd_index(p.ctx.odd[j]) for j in mi)
        except ValueError:
            raise ParityError(
                "jet coefficient involves odd generators outside the domain"
            )
        terms[I] = ex.add(terms[I], coeff) if I in terms else coeff
    return SuperFunction(domain, terms)
