"""Super vector fields, the super Lie bracket and Lie superalgebras."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import DomainMismatchError, ParityError
from .grassmann import (
    SuperDomain,
    SuperFunction,
    even_partial,
    gr_mul,
    odd_partial,
    sample_even_points,
    superfunctions_equal,
)
from .jets import JetSuperMap, jet_of_superfunction, jetpoly_to_superfunction
from .report import Report

EVEN, ODD = 0, 1


class SuperVectorField:
    """Sum a_i d/dx_i + b_j d/dtheta_j with superfunction coefficients."""

    __slots__ = ("domain", "even_coeffs", "odd_coeffs")

    def __init__(self, domain: SuperDomain, even_coeffs=None, odd_coeffs=None):
        self.domain = domain
        self.even_coeffs = {}
        self.odd_coeffs = {}
        for name, sf in (even_coeffs or {}).items():
            if name not in domain.even_coords:
                raise KeyError(f"unknown even coordinate {name!r}")
            if not sf.is_zero_sf():
                self.even_coeffs[name] = sf
        for name, sf in (odd_coeffs or {}).items():
            if name not in domain.odd_coords:
                raise KeyError(f"unknown odd coordinate {name!r}")
            if not sf.is_zero_sf():
                self.odd_coeffs[name] = sf

    @classmethod
    def zero(cls, domain):
        return cls(domain)

    @classmethod
    def partial(cls, domain, name):
        one = SuperFunction.one(domain)
        if name in domain.even_coords:
            return cls(domain, {name: one})
        return cls(domain, odd_coeffs={name: one})

    def coeff(self, name) -> SuperFunction:
        if name in self.domain.even_coords:
            return self.even_coeffs.get(name, SuperFunction.zero(self.domain))
        if name in self.domain.odd_coords:
            return self.odd_coeffs.get(name, SuperFunction.zero(self.domain))
        raise KeyError(f"unknown coordinate {name!r}")

    def is_zero_field(self):
        return not self.even_coeffs and not self.odd_coeffs

    def parity(self):
        """0, 1, or None if mixed/zero.

        An even field has even coefficients on even directions and odd
        coefficients on odd directions; an odd field the reverse.
        """
        parities = set()
        for sf in self.even_coeffs.values():
            p = sf.parity()
            if p is None:
                return None
            parities.add(p)
        for sf in self.odd_coeffs.values():
            p = sf.parity()
            if p is None:
                return None
            parities.add((p + 1) % 2)
        if not parities:
            return None
        return parities.pop() if len(parities) == 1 else None

    def homogeneous_part(self, p):
        evens = {n: sf.homogeneous_part(p) for n, sf in self.even_coeffs.items()}
        odds = {n: sf.homogeneous_part((p + 1) % 2) for n, sf in self.odd_coeffs.items()}
        return SuperVectorField(self.domain, evens, odds)

    def __add__(self, other):
        if self.domain != other.domain:
            raise DomainMismatchError("fields on different domains")
        evens = dict(self.even_coeffs)
        for n, sf in other.even_coeffs.items():
            evens[n] = evens[n] + sf if n in evens else sf
        odds = dict(self.odd_coeffs)
        for n, sf in other.odd_coeffs.items():
            odds[n] = odds[n] + sf if n in odds else sf
        return SuperVectorField(self.domain, evens, odds)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return SuperVectorField(
            self.domain,
            {n: sf.scale(c) for n, sf in self.even_coeffs.items()},
            {n: sf.scale(c) for n, sf in self.odd_coeffs.items()},
        )

    def __str__(self):
        parts = []
        for n in self.domain.even_coords + self.domain.odd_coords:
            sf = self.coeff(n)
            if not sf.is_zero_sf():
                parts.append(f"({sf}) d/d{n}")
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__


def apply(X: SuperVectorField, f: SuperFunction) -> SuperFunction:
    """Derivation action of X on f; coefficients multiply from the left."""
    if X.domain != f.domain:
        raise DomainMismatchError("field and function on different domains")
    out = SuperFunction.zero(f.domain)
    for name, a in X.even_coeffs.items():
        out = out + gr_mul(a, even_partial(f, name))
    for name, b in X.odd_coeffs.items():
        out = out + gr_mul(b, odd_partial(f, f.domain.odd_index(name)))
    return out


def _bracket_homogeneous(X, Y, px, py):
    sign = -1 if (px and py) else 1
    evens = {}
    odds = {}
    domain = X.domain
    for name in domain.even_coords + domain.odd_coords:
        term = apply(X, Y.coeff(name)) - apply(Y, X.coeff(name)).scale(sign)
        if term.is_zero_sf():
            continue
        if name in domain.even_coords:
            evens[name] = term
        else:
            odds[name] = term
    return SuperVectorField(domain, evens, odds)


def bracket(X: SuperVectorField, Y: SuperVectorField) -> SuperVectorField:
    """Super Lie bracket [X,Y] = XY - (-1)^{|X||Y|}YX, computed on
    homogeneous parts and summed."""
    if X.domain != Y.domain:
        raise DomainMismatchError("fields on different domains")
    out = SuperVectorField.zero(X.domain)
    for px in (EVEN, ODD):
        Xp = X.homogeneous_part(px)
        if Xp.is_zero_field():
            continue
        for py in (EVEN, ODD):
            Yp = Y.homogeneous_part(py)
            if Yp.is_zero_field():
                continue
            out = out + _bracket_homogeneous(Xp, Yp, px, py)
    return out


def reduced_field(X: SuperVectorField) -> SuperVectorField:
    """Underlying classical field on the purely even domain; odd fields
    reduce to zero."""
    reduced_domain = SuperDomain(
        X.domain.even_coords, (), X.domain.field, X.domain.excluded
    )
    evens = {}
    for name, sf in X.even_coeffs.items():
        body = sf.body_expr()
        if not ex.is_zero(body):
            evens[name] = SuperFunction.from_expr(reduced_domain, body)
    return SuperVectorField(reduced_domain, evens)


def fields_equal(X, Y, tol=1e-9, samples=100, seed=0):
    """Equality of fields by the coefficient equality policy; returns
    (equal, residual)."""
    if X.domain != Y.domain:
        raise DomainMismatchError("fields on different domains")
    residual = 0.0
    for name in X.domain.even_coords + X.domain.odd_coords:
        eq, r = superfunctions_equal(X.coeff(name), Y.coeff(name), tol, samples, seed)
        residual = max(residual, r)
        if not eq:
            return False, residual
    return True, residual


# -- Lie superalgebras --------------------------------------------------------


@dataclass(frozen=True)
class LieSuperAlgebra:
    """Finite-dimensional basis with parities and numeric structure constants
    c[i,j,k] for [e_i, e_j] = sum_k c[i,j,k] e_k."""

    basis: tuple
    parities: tuple
    constants: tuple  # nested tuples, shape (dim, dim, dim)

    def __post_init__(self):
        dim = len(self.basis)
        c = np.asarray(self.constants, dtype=complex)
        if c.shape != (dim, dim, dim):
            raise ValueError(f"structure constants must have shape {(dim, dim, dim)}")

    @classmethod
    def build(cls, basis, parities, brackets=None):
        """brackets: {(name_i, name_j): {name_k: coeff}}; graded antisymmetric
        completion is filled in automatically."""
        basis = tuple(basis)
        parities = tuple(parities)
        dim = len(basis)
        idx = {n: i for i, n in enumerate(basis)}
        c = np.zeros((dim, dim, dim), dtype=complex)
        for (a, b), targets in (brackets or {}).items():
            i, j = idx[a], idx[b]
            for t, v in targets.items():
                c[i, j, idx[t]] = v
        # fill the graded-antisymmetric counterpart where unspecified:
        # c_ji = -(-1)^{p_i p_j} c_ij
        for i in range(dim):
            for j in range(dim):
                sign = 1 if (parities[i] and parities[j]) else -1
                for k in range(dim):
                    if c[j, i, k] == 0 and c[i, j, k] != 0 and (i != j):
                        c[j, i, k] = sign * c[i, j, k]
        return cls(basis, parities, tuple(tuple(tuple(x) for x in row) for row in c))

    @property
    def dim(self):
        return len(self.basis)

    def c(self):
        return np.asarray(self.constants, dtype=complex)

    def parity(self, name):
        return self.parities[self.basis.index(name)]

    def even_basis(self):
        return [n for n, p in zip(self.basis, self.parities) if p == EVEN]

    def odd_basis(self):
        return [n for n, p in zip(self.basis, self.parities) if p == ODD]


def check_algebra(g: LieSuperAlgebra, tol: float = 1e-10) -> Report:
    """Verify graded antisymmetry, parity consistency and the super Jacobi
    identity of the structure constants."""
    rep = Report("check-algebra")
    c = g.c()
    p = g.parities
    dim = g.dim

    worst = 0.0
    witness = None
    for i in range(dim):
        for j in range(dim):
            sign = -1 if (p[i] and p[j]) else 1
            r = np.max(np.abs(c[i, j] + sign * c[j, i]))
            if r > worst:
                worst, witness = r, f"[{g.basis[i]},{g.basis[j]}]"
    rep.add("graded antisymmetry", worst <= tol, float(worst), witness if worst > tol else None)

    worst = 0.0
    witness = None
    for i in range(dim):
        for j in range(dim):
            for k in range(dim):
                if (p[i] + p[j]) % 2 != p[k] and abs(c[i, j, k]) > worst:
                    worst = abs(c[i, j, k])
                    witness = f"c[{g.basis[i]},{g.basis[j]}]^{g.basis[k]}"
    rep.add("parity consistency", worst <= tol, float(worst), witness if worst > tol else None)

    worst = 0.0
    witness = None
    for i in range(dim):
        for j in range(dim):
            for k in range(dim):
                sgn_ik = -1 if (p[i] and p[k]) else 1
                sgn_ji = -1 if (p[j] and p[i]) else 1
                sgn_kj = -1 if (p[k] and p[j]) else 1
                total = np.zeros(dim, dtype=complex)
                for m in range(dim):
                    total += sgn_ik * c[j, k, m] * c[i, m]
                    total += sgn_ji * c[k, i, m] * c[j, m]
                    total += sgn_kj * c[i, j, m] * c[k, m]
                r = np.max(np.abs(total))
                if r > worst:
                    worst = float(r)
                    witness = f"({g.basis[i]},{g.basis[j]},{g.basis[k]})"
    rep.add("super Jacobi", worst <= tol, worst, witness if worst > tol else None)
    return rep


@dataclass
class InfinitesimalAction:
    """Map from algebra basis elements to super vector fields on M."""

    algebra: LieSuperAlgebra
    images: dict  # basis name -> SuperVectorField

    def __post_init__(self):
        for name in self.algebra.basis:
            if name not in self.images:
                raise KeyError(f"no image for basis element {name!r}")
            X = self.images[name]
            want = self.algebra.parity(name)
            if not X.is_zero_field() and X.parity() != want:
                raise ParityError(
                    f"image of {name} must have parity {want}, got {X.parity()}"
                )

    @property
    def domain(self):
        return next(iter(self.images.values())).domain

    def image(self, name) -> SuperVectorField:
        return self.images[name]


def check_homomorphism(
    action: InfinitesimalAction, samples: int = 100, seed: int = 0, tol: float = 1e-9
) -> Report:
    """Compare lambda([e_i,e_j]) with [lambda(e_i), lambda(e_j)] for every
    basis pair, using the sampling equality policy."""
    rep = Report("check-homomorphism")
    alg_rep = check_algebra(action.algebra)
    if not alg_rep.passed:
        rep.extend(alg_rep)
        return rep
    g = action.algebra
    c = g.c()
    for i, a in enumerate(g.basis):
        for j, b in enumerate(g.basis[i:], start=i):
            lhs = bracket(action.image(a), action.image(b))
            rhs = SuperVectorField.zero(action.domain)
            for k, t in enumerate(g.basis):
                if c[i, j, k] != 0:
                    rhs = rhs + action.image(t).scale(
                        c[i, j, k] if action.domain.field == "complex" else c[i, j, k].real
                    )
            eq, r = fields_equal(lhs, rhs, tol, samples, seed)
            witness = None if eq else f"pair ({a},{b}): residual field {lhs - rhs}"
            rep.add(f"homomorphism [{a},{b}]", eq, r, witness)
    return rep


def induced_infinitesimal(evaluator, direction: int, base=None, order: int = 2) -> SuperVectorField:
    """Extract a generator back out of a local-action evaluator.

    Even directions read the parameter derivative at zero off the jet
    integrator's right-hand side at the identity jet; odd directions take
    the tau-linear coefficient of the odd exponential pullback.
    """
    domain = evaluator.domain
    m = len(evaluator.evens)
    n = len(evaluator.odds)
    if not 0 <= direction < m + n:
        raise IndexError(f"direction {direction} out of range for {m}+{n} generators")
    if direction < m:
        if base is None:
            base = evaluator.default_base()
        ident = JetSuperMap.identity(domain, base, order)
        rhs = evaluator.rhs_jets(direction, ident)
        evens = {}
        odds = {}
        for name, jp in rhs.items():
            sf = jetpoly_to_superfunction(jp, domain, base)
            if sf.is_zero_sf():
                continue
            if name in domain.even_coords:
                evens[name] = sf
            else:
                odds[name] = sf
        return SuperVectorField(domain, evens, odds)

    j = direction - m
    tau = evaluator.tau_names[j]
    ext_domain = evaluator.extended_domain
    tau_pos = ext_domain.odd_index(tau)
    n_tau = len(evaluator.tau_names)
    evens = {}
    odds = {}
    for name in domain.even_coords + domain.odd_coords:
        sf_ext = evaluator.alpha_pullback[name]
        lin = odd_partial(sf_ext, tau_pos)
        # drop terms still involving other odd parameters (set them to zero)
        terms = {}
        for I, e in lin.terms.items():
            if any(k < n_tau for k in I):
                continue
            terms[tuple(k - n_tau for k in I)] = e
        sf = SuperFunction(domain, terms)
        if sf.is_zero_sf():
            continue
        if name in domain.even_coords:
            evens[name] = sf
        else:
            odds[name] = sf
    return SuperVectorField(domain, evens, odds)


def support_sample(action: InfinitesimalAction, grid, tol: float = 1e-12):
    """Grid points where some reduced even-basis image is nonzero."""
    out = []
    for p in grid:
        hit = False
        for name in action.algebra.even_basis():
            red = reduced_field(action.image(name))
            for coeff in red.even_coeffs.values():
                val = ex.eval_expr(coeff.body_expr(), p, action.domain.field)
                if abs(val) > tol:
                    hit = True
                    break
            if hit:
                break
        if hit:
            out.append(p)
    return out
