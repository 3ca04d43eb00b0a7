"""Shared test utilities.

The polynomial oracle works in exact rational arithmetic (Fraction
coefficients, Fraction evaluation points) so derivative values compared
against jets are independently exact, not produced by the code under test.
"""

import math
from fractions import Fraction

import numpy as np

from extrinsicq import jets


# ---- exact polynomial oracle ---------------------------------------------
# A polynomial is a dict {exponent tuple: Fraction coefficient}.


def poly_random(rng, nvars, degree, nterms=7):
    p = {}
    for _ in range(nterms):
        alpha = tuple(int(rng.integers(0, degree + 1)) for _ in range(nvars))
        if sum(alpha) > degree:
            continue
        c = Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4)))
        p[alpha] = p.get(alpha, Fraction(0)) + c
    p = {a: c for a, c in p.items() if c != 0}
    if not p:
        p[(0,) * nvars] = Fraction(1)
    return p


def poly_add(p, q):
    out = dict(p)
    for a, c in q.items():
        out[a] = out.get(a, Fraction(0)) + c
    return {a: c for a, c in out.items() if c != 0}


def poly_mul(p, q):
    out = {}
    for a, ca in p.items():
        for b, cb in q.items():
            k = tuple(x + y for x, y in zip(a, b))
            out[k] = out.get(k, Fraction(0)) + ca * cb
    return {a: c for a, c in out.items() if c != 0}


def poly_partial(p, var):
    out = {}
    for a, c in p.items():
        if a[var] == 0:
            continue
        b = list(a)
        b[var] -= 1
        out[tuple(b)] = out.get(tuple(b), Fraction(0)) + c * a[var]
    return out


def poly_eval(p, point):
    tot = Fraction(0)
    for a, c in p.items():
        term = c
        for x, k in zip(point, a):
            term *= x**k
        tot += term
    return tot


def poly_derivative_value(p, beta, point):
    """Exact value of the mixed partial d^beta p at ``point``."""
    for var, k in enumerate(beta):
        for _ in range(k):
            p = poly_partial(p, var)
    return poly_eval(p, point)


def poly_substitute(p, inners):
    """p(b_1(x), ..., b_k(x)) as a polynomial in the inner variables."""
    nv = len(next(iter(inners[0])))
    out = {}
    for alpha, c in p.items():
        term = {(0,) * nv: c}
        for v, k in enumerate(alpha):
            for _ in range(k):
                term = poly_mul(term, inners[v])
        out = poly_add(out, term)
    return out


def poly_jet(p, space, point):
    """The jet of polynomial p at ``point``, built through jet arithmetic."""
    xs = [jets.seed_variable(space, v, float(point[v])) for v in range(space.nvars)]
    total = jets.constant(space, 0.0)
    for alpha, c in p.items():
        term = jets.constant(space, float(c))
        for v, k in enumerate(alpha):
            if k:
                term = term * jets.powi(xs[v], k)
        total = total + term
    return total


def jval(j, B=None):
    """A jet's value as a 1-d array regardless of batching."""
    v = np.atleast_1d(np.asarray(j.value, dtype=np.float64))
    if B is not None and v.shape[0] != B:
        v = np.broadcast_to(v, (B,))
    return v


# ---- finite differences ----------------------------------------------------


def central_difference(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def fd_rate(f, exact, x, h0=1e-2):
    """Observed convergence order of the central difference toward ``exact``."""
    e1 = abs(central_difference(f, x, h0) - exact)
    e2 = abs(central_difference(f, x, h0 / 2.0) - exact)
    return math.log2(e1 / e2)


def richardson_partial(f, x, i, h=1e-3):
    """Richardson-extrapolated first partial of callable f at point array x."""
    x = np.asarray(x, dtype=np.float64)

    def diff(step):
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        return (f(xp) - f(xm)) / (2.0 * step)

    d1 = diff(h)
    d2 = diff(h / 2.0)
    return (4.0 * d2 - d1) / 3.0
