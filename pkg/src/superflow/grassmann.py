"""Grassmann multi-index algebra and superfunctions.

A superfunction is a finite map from strictly increasing odd multi-indices
to even-coordinate expressions; products pick up the sign of the merge
sort that recanonicalises the indices, and repeated indices annihilate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import expr as ex
from .errors import DomainEvalError, DomainMismatchError, ParityError

MultiIndex = tuple  # strictly increasing tuple of odd-coordinate positions


@dataclass(frozen=True)
class SuperDomain:
    even_coords: tuple
    odd_coords: tuple
    field: str = "real"  # "real" or "complex"
    excluded: tuple = ()  # ((coord name, excluded value), ...): advisory locus

    def __post_init__(self):
        object.__setattr__(self, "even_coords", tuple(self.even_coords))
        object.__setattr__(self, "odd_coords", tuple(self.odd_coords))
        object.__setattr__(self, "excluded", tuple(self.excluded))
        names = self.even_coords + self.odd_coords
        if len(set(names)) != len(names):
            raise ValueError("coordinate names must be disjoint")
        if self.field not in ("real", "complex"):
            raise ValueError(f"unknown field tag {self.field!r}")

    @property
    def m(self):
        return len(self.even_coords)

    @property
    def n(self):
        return len(self.odd_coords)

    def odd_index(self, name):
        return self.odd_coords.index(name)

    def is_even_coord(self, name):
        return name in self.even_coords

    def with_odds(self, odd_coords):
        return SuperDomain(self.even_coords, tuple(odd_coords), self.field, self.excluded)


def merge_indices(a: MultiIndex, b: MultiIndex):
    """Merge two sorted multi-indices; return (merged, sign) or None if a
    generator repeats (square of an odd generator vanishes)."""
    if not a:
        return b, 1
    if not b:
        return a, 1
    out = []
    sign = 1
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            return None
        if a[i] < b[j]:
            out.append(a[i])
            i += 1
        else:
            # b[j] jumps over the remaining entries of a
            if (len(a) - i) % 2 == 1:
                sign = -sign
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out), sign


def index_parity(I: MultiIndex) -> int:
    return len(I) % 2


class SuperFunction:
    """domain plus finite map multi-index -> coefficient Expr."""

    __slots__ = ("domain", "terms")

    def __init__(self, domain: SuperDomain, terms: dict | None = None):
        self.domain = domain
        self.terms = {}
        if terms:
            for I, e in terms.items():
                if not ex.is_zero(e):
                    self.terms[tuple(I)] = e

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, domain):
        return cls(domain)

    @classmethod
    def one(cls, domain):
        return cls(domain, {(): ex.ONE})

    @classmethod
    def from_expr(cls, domain, e):
        return cls(domain, {(): e})

    @classmethod
    def constant(cls, domain, value):
        return cls(domain, {(): ex.Const(value)})

    @classmethod
    def coordinate(cls, domain, name):
        if name in domain.even_coords:
            return cls(domain, {(): ex.Var(name)})
        if name in domain.odd_coords:
            return cls(domain, {(domain.odd_index(name),): ex.ONE})
        raise KeyError(f"unknown coordinate {name!r}")

    # -- structure -----------------------------------------------------------

    def is_zero_sf(self):
        return not self.terms

    def parity(self):
        """0 (even), 1 (odd) or None for non-homogeneous / zero."""
        parities = {index_parity(I) for I in self.terms}
        if not parities:
            return None
        if len(parities) == 1:
            return parities.pop()
        return None

    def is_homogeneous(self, p=None):
        if p is None:
            return self.parity() is not None or self.is_zero_sf()
        return all(index_parity(I) == p for I in self.terms)

    def homogeneous_part(self, p):
        return SuperFunction(
            self.domain, {I: e for I, e in self.terms.items() if index_parity(I) == p}
        )

    def body_expr(self):
        return self.terms.get((), ex.ZERO)

    def is_polynomial(self):
        return all(
            ex.is_polynomial(e, self.domain.even_coords) for e in self.terms.values()
        )

    # -- algebra -------------------------------------------------------------

    def _check_domain(self, other):
        if self.domain != other.domain:
            raise DomainMismatchError(
                f"superfunctions live on different domains: "
                f"{self.domain} vs {other.domain}"
            )

    def __add__(self, other):
        self._check_domain(other)
        out = dict(self.terms)
        for I, e in other.terms.items():
            out[I] = ex.add(out[I], e) if I in out else e
        return SuperFunction(self.domain, out)

    def __sub__(self, other):
        self._check_domain(other)
        out = dict(self.terms)
        for I, e in other.terms.items():
            out[I] = ex.sub(out[I], e) if I in out else ex.neg(e)
        return SuperFunction(self.domain, out)

    def __neg__(self):
        return SuperFunction(self.domain, {I: ex.neg(e) for I, e in self.terms.items()})

    def scale(self, c):
        if isinstance(c, ex.Expr):
            k = c
        else:
            k = ex.Const(c)
        return SuperFunction(self.domain, {I: ex.mul(k, e) for I, e in self.terms.items()})

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for I in sorted(self.terms, key=lambda I: (len(I), I)):
            mono = "*".join(self.domain.odd_coords[i] for i in I)
            coeff = ex.to_str(self.terms[I])
            if mono:
                coeff = f"({coeff})*{mono}" if coeff != "1" else mono
            parts.append(coeff)
        return " + ".join(parts)

    __repr__ = __str__


def grassmannify(domain: SuperDomain, e) -> SuperFunction:
    """Superfunction from an expression that may mention odd coordinates.

    Products expand with the Grassmann sign rules; division, powers and
    function calls of arguments with a nilpotent part go through the finite
    Taylor expansion around the body.
    """
    if isinstance(e, ex.Const):
        return SuperFunction(domain, {(): e})
    if isinstance(e, ex.Var):
        return SuperFunction.coordinate(domain, e.name)
    if isinstance(e, ex.Add):
        return grassmannify(domain, e.left) + grassmannify(domain, e.right)
    if isinstance(e, ex.Sub):
        return grassmannify(domain, e.left) - grassmannify(domain, e.right)
    if isinstance(e, ex.Neg):
        return -grassmannify(domain, e.operand)
    if isinstance(e, ex.Mul):
        return gr_mul(grassmannify(domain, e.left), grassmannify(domain, e.right))
    if isinstance(e, ex.Pow) and e.exponent >= 0:
        out = SuperFunction.one(domain)
        base = grassmannify(domain, e.base)
        for _ in range(e.exponent):
            out = gr_mul(out, base)
        return out
    # division, negative powers and calls: Taylor through an auxiliary slot
    aux = SuperDomain(("w",), (), domain.field)
    if isinstance(e, ex.Div):
        num = grassmannify(domain, e.left)
        den = grassmannify(domain, e.right)
        if not den.is_homogeneous(0):
            raise ParityError("cannot divide by an odd quantity")
        inv = substitute(
            SuperFunction.from_expr(aux, ex.div(ex.ONE, ex.Var("w"))), {"w": den}
        )
        return gr_mul(num, inv)
    if isinstance(e, ex.Pow):
        base = grassmannify(domain, e.base)
        if not base.is_homogeneous(0):
            raise ParityError("cannot invert an odd quantity")
        return substitute(
            SuperFunction.from_expr(aux, ex.power(ex.Var("w"), e.exponent)),
            {"w": base},
        )
    if isinstance(e, ex.Call):
        arg = grassmannify(domain, e.arg)
        if not arg.is_homogeneous(0):
            raise ParityError(f"{e.func} of an odd quantity is undefined")
        return substitute(
            SuperFunction.from_expr(aux, ex.Call(e.func, ex.Var("w"))), {"w": arg}
        )
    raise TypeError(f"unsupported expression node {type(e).__name__}")


def gr_mul(f: SuperFunction, g: SuperFunction) -> SuperFunction:
    """Graded product; theta_i*theta_j = -theta_j*theta_i, theta_i^2 = 0."""
    f._check_domain(g)
    out = {}
    for I, a in f.terms.items():
        for J, b in g.terms.items():
            merged = merge_indices(I, J)
            if merged is None:
                continue
            K, sign = merged
            term = ex.mul(a, b)
            if sign < 0:
                term = ex.neg(term)
            out[K] = ex.add(out[K], term) if K in out else term
    return SuperFunction(f.domain, out)


def odd_partial(f: SuperFunction, j: int) -> SuperFunction:
    """Left derivative with respect to the j-th odd coordinate."""
    if not 0 <= j < f.domain.n:
        raise IndexError(f"odd index {j} out of range")
    out = {}
    for I, e in f.terms.items():
        if j not in I:
            continue
        pos = I.index(j)
        K = I[:pos] + I[pos + 1 :]
        out[K] = e if pos % 2 == 0 else ex.neg(e)
    return SuperFunction(f.domain, out)


def even_partial(f: SuperFunction, i) -> SuperFunction:
    """Derivative with respect to an even coordinate (index or name)."""
    name = f.domain.even_coords[i] if isinstance(i, int) else i
    if name not in f.domain.even_coords:
        raise KeyError(f"unknown even coordinate {name!r}")
    return SuperFunction(
        f.domain, {I: ex.diff(e, name) for I, e in f.terms.items()}
    )


class GrassmannNumber:
    """Element of the Grassmann algebra with numeric coefficients."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: dict | None = None):
        self.n = n
        self.terms = {}
        if terms:
            for I, v in terms.items():
                if v != 0:
                    self.terms[tuple(I)] = v

    @property
    def body(self):
        return self.terms.get((), 0)

    def soul(self):
        return GrassmannNumber(self.n, {I: v for I, v in self.terms.items() if I})

    def __add__(self, other):
        out = dict(self.terms)
        for I, v in other.terms.items():
            out[I] = out.get(I, 0) + v
        return GrassmannNumber(self.n, out)

    def __sub__(self, other):
        out = dict(self.terms)
        for I, v in other.terms.items():
            out[I] = out.get(I, 0) - v
        return GrassmannNumber(self.n, out)

    def __mul__(self, other):
        if not isinstance(other, GrassmannNumber):
            return GrassmannNumber(self.n, {I: v * other for I, v in self.terms.items()})
        out = {}
        for I, a in self.terms.items():
            for J, b in other.terms.items():
                merged = merge_indices(I, J)
                if merged is None:
                    continue
                K, sign = merged
                out[K] = out.get(K, 0) + sign * a * b
        return GrassmannNumber(self.n, out)

    __rmul__ = __mul__

    def is_zero(self, tol=0.0):
        return all(abs(v) <= tol for v in self.terms.values())

    def norm(self):
        return max((abs(v) for v in self.terms.values()), default=0.0)

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(
            f"{v}*theta{I}" if I else f"{v}"
            for I, v in sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0]))
        )

    __repr__ = __str__


def point_in_domain(domain: SuperDomain, point: dict, margin: float = 0.0) -> bool:
    for name, value in domain.excluded:
        if name in point and abs(point[name] - value) <= margin:
            return False
    return True


def eval_superfunction(f: SuperFunction, point: dict) -> GrassmannNumber:
    """Evaluate every coefficient at an even point."""
    if not point_in_domain(f.domain, point):
        raise DomainEvalError(f"point {point} lies on the excluded locus")
    out = {}
    for I, e in f.terms.items():
        out[I] = ex.eval_expr(e, point, f.domain.field)
    return GrassmannNumber(f.domain.n, out)


def substitute(f: SuperFunction, images: dict) -> SuperFunction:
    """Pullback composition: rewrite f in terms of coordinate images.

    images maps every coordinate name of f.domain to a SuperFunction on a
    common target domain.  Even coordinates must receive even images and
    odd coordinates odd images; the nilpotent part of an even image enters
    through the finite Taylor expansion of the coefficients.
    """
    if not f.terms:
        targets = {g.domain for g in images.values()}
        target = targets.pop() if len(targets) == 1 else f.domain
        return SuperFunction.zero(target)
    target = None
    for g in images.values():
        if target is None:
            target = g.domain
        elif g.domain != target:
            raise DomainMismatchError("coordinate images live on different domains")
    images = dict(images)
    for name in f.domain.even_coords + f.domain.odd_coords:
        if name not in images:
            # same-named coordinates map to themselves by default
            images[name] = SuperFunction.coordinate(target, name)
    for name in f.domain.even_coords + f.domain.odd_coords:
        g = images[name]
        want = 0 if name in f.domain.even_coords else 1
        if not g.is_zero_sf() and not g.is_homogeneous(want):
            kind = "even" if want == 0 else "odd"
            raise ParityError(f"image of {kind} coordinate {name!r} must be {kind}")

    # even image = base expression + nilpotent correction
    bases = {}
    nils = {}
    for name in f.domain.even_coords:
        g = images[name]
        bases[name] = g.body_expr()
        nil = SuperFunction(
            target, {I: e for I, e in g.terms.items() if I}
        )
        if not nil.is_zero_sf():
            nils[name] = nil

    nil_names = list(nils)
    # powers of each nilpotent part, up to vanishing
    nil_powers = {}
    for name in nil_names:
        powers = [SuperFunction.one(target)]
        acc = SuperFunction.one(target)
        for _ in range(target.n):
            acc = gr_mul(acc, nils[name])
            if acc.is_zero_sf():
                break
            powers.append(acc)
        nil_powers[name] = powers

    def taylor(expr):
        """Finite Taylor sum of expr around the even bases."""
        out = SuperFunction.zero(target)

        def rec(k, alpha, deriv, factorial):
            if k == len(nil_names):
                base_val = ex.substitute_expr(deriv, bases)
                if ex.is_zero(base_val):
                    return
                term = SuperFunction.from_expr(target, base_val)
                for name, a in zip(nil_names, alpha):
                    if a:
                        term = gr_mul(term, nil_powers[name][a])
                nonlocal out
                out = out + term.scale(ex.Const(1 / factorial))
                return
            name = nil_names[k]
            d = deriv
            fact = factorial
            for a in range(len(nil_powers[name])):
                rec(k + 1, alpha + (a,), d, fact)
                d = ex.diff(d, name)
                if ex.is_zero(d):
                    break
                fact *= a + 1

        rec(0, (), expr, 1)
        return out

    result = SuperFunction.zero(target)
    for I, e in f.terms.items():
        term = taylor(e)
        for j in I:
            term = gr_mul(term, images[f.domain.odd_coords[j]])
            if term.is_zero_sf():
                break
        result = result + term
    return result


# -- equality policy ----------------------------------------------------------


def sample_even_points(domain: SuperDomain, count: int, seed: int = 0, radius: float = 2.0):
    """Deterministic sample points for the equality policy; rejection keeps
    a margin of 0.1 from the excluded locus."""
    import numpy as np

    rng = np.random.default_rng(seed)
    points = []
    guard = 0
    while len(points) < count:
        guard += 1
        if guard > 100 * count + 100:
            raise RuntimeError("rejection sampling failed to find domain points")
        p = {}
        for name in domain.even_coords:
            if domain.field == "complex":
                p[name] = complex(rng.uniform(-radius, radius), rng.uniform(-radius, radius))
            else:
                p[name] = float(rng.uniform(-radius, radius))
        if point_in_domain(domain, p, margin=0.1):
            points.append(p)
        if not domain.even_coords:
            # purely odd domain: a single empty point suffices
            return [dict() for _ in range(count)]
    return points


def superfunctions_equal(
    f: SuperFunction,
    g: SuperFunction,
    tol: float = 1e-9,
    samples: int = 100,
    seed: int = 0,
):
    """Equality per the documented policy.

    Polynomial pairs compare exactly by expanded coefficients; otherwise
    the difference is evaluated at deterministic sample points.  Returns
    (equal, residual).
    """
    f._check_domain(g)
    if f.is_polynomial() and g.is_polynomial():
        residual = 0.0
        keys = set(f.terms) | set(g.terms)
        for I in keys:
            pa = ex.as_polynomial(f.terms.get(I, ex.ZERO), f.domain.even_coords)
            pb = ex.as_polynomial(g.terms.get(I, ex.ZERO), f.domain.even_coords)
            monos = set(pa) | set(pb)
            for mono in monos:
                d = abs(pa.get(mono, 0) - pb.get(mono, 0))
                residual = max(residual, d)
        return residual <= 1e-12, residual
    diff = f - g
    residual = 0.0
    for p in sample_even_points(f.domain, samples, seed):
        residual = max(residual, eval_superfunction(diff, p).norm())
    return residual <= tol, residual
