"""Deterministic random instances shared by the unit and acceptance tests."""

import numpy as np

from superflow import expr as ex
from superflow.grassmann import SuperDomain, SuperFunction
from superflow.fields import SuperVectorField

DOM12 = SuperDomain(("x",), ("theta1", "theta2"))

# monomial bases by parity, as (coefficient expr, odd multi-index)
_EVEN_MONOS = [
    (ex.ONE, ()),
    (ex.Var("x"), ()),
    (ex.Pow(ex.Var("x"), 2), ()),
    (ex.ONE, (0, 1)),
    (ex.Var("x"), (0, 1)),
]
_ODD_MONOS = [
    (ex.ONE, (0,)),
    (ex.ONE, (1,)),
    (ex.Var("x"), (0,)),
    (ex.Var("x"), (1,)),
]


def random_superfunction(rng, parity, domain=DOM12):
    monos = _EVEN_MONOS if parity == 0 else _ODD_MONOS
    terms = {}
    for coeff, I in monos:
        c = int(rng.integers(-2, 3))
        if c == 0:
            continue
        piece = ex.mul(ex.Const(c), coeff)
        terms[I] = ex.add(terms[I], piece) if I in terms else piece
    return SuperFunction(domain, terms)


def random_field(rng, parity, domain=DOM12):
    """Random homogeneous polynomial super vector field."""
    evens = {}
    odds = {}
    for name in domain.even_coords:
        evens[name] = random_superfunction(rng, parity, domain)
    for name in domain.odd_coords:
        odds[name] = random_superfunction(rng, 1 - parity, domain)
    return SuperVectorField(domain, evens, odds)


def seeded_rng(seed):
    return np.random.default_rng(seed)
