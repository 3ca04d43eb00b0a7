"""Truncated multivariate Taylor expansions (jets) with batched coefficients.

A jet holds the Taylor coefficients of a smooth quantity about a point, up
to a fixed total degree, in a dense graded-lexicographic layout.  Arithmetic
is exact on the retained coefficients: operations never approximate, they
only truncate.  The coefficient array may carry a trailing batch axis so a
single jet represents the expansion of the same field at many points at
once; unbatched and batched operands mix freely.

Degrees are bookkept explicitly.  Asking for information beyond the stored
degree raises DegreeExhaustedError rather than returning garbage, and
domain violations (log of a nonpositive value, division by zero) raise
SingularFieldError.
"""

import functools
import math

import numpy as np

MAX_NVARS = 6
MAX_DEGREE = 8

# reciprocal refuses anything this close to zero
_DIV_FLOOR = 1e-300


class JetError(ValueError):
    """Structural misuse of the jet algebra: spaces, shapes, arguments."""


class DegreeExhaustedError(JetError):
    """A coefficient or derivative beyond the stored degree was requested."""


class SingularFieldError(ArithmeticError):
    """An operation left the domain of the function being expanded."""


@functools.lru_cache(maxsize=None)
def _grade_block(nvars, grade):
    """Multi-indices of exact total degree ``grade``, lexicographic order."""
    if nvars == 1:
        return ((grade,),)
    return tuple(
        (k,) + rest
        for k in range(grade, -1, -1)
        for rest in _grade_block(nvars - 1, grade - k)
    )


class JetSpace:
    """Shared coefficient layout for jets in ``nvars`` variables at ``degree``.

    Multi-indices are ordered by total degree, then lexicographically with
    earlier variables dominant.  The grading means the degree-d space is a
    prefix of every higher-degree space over the same variables, so
    truncation is a slice and no reindexing ever happens.

    Do not construct directly; go through :func:`jet_space` so tables are
    shared.
    """

    __slots__ = ("nvars", "degree", "mi", "index", "ncoeffs", "_mul", "_partials")

    def __init__(self, nvars, degree):
        self.nvars = nvars
        self.degree = degree
        mi = []
        for q in range(degree + 1):
            mi.extend(_grade_block(nvars, q))
        self.mi = tuple(mi)
        self.index = {a: i for i, a in enumerate(self.mi)}
        self.ncoeffs = len(self.mi)
        self._mul = None
        self._partials = {}

    def prefix_count(self, d):
        """Number of multi-indices of total degree at most d."""
        return math.comb(d + self.nvars, self.nvars)

    def mul_table(self):
        """Index triple (I, J, starts) driving truncated Cauchy products.

        Pairs are grouped by target index so the product reduces to one
        gather-multiply and one add.reduceat.  Every target has at least one
        pair (alpha = alpha + 0), which keeps ``starts`` strictly increasing
        and reduceat's empty-segment quirk out of play.
        """
        if self._mul is None:
            ks, iis, jjs = [], [], []
            for i, a in enumerate(self.mi):
                jmax = self.prefix_count(self.degree - sum(a))
                for j in range(jmax):
                    b = self.mi[j]
                    ks.append(self.index[tuple(x + y for x, y in zip(a, b))])
                    iis.append(i)
                    jjs.append(j)
            order = np.argsort(np.asarray(ks), kind="stable")
            k_sorted = np.asarray(ks)[order]
            self._mul = (
                np.asarray(iis, dtype=np.intp)[order],
                np.asarray(jjs, dtype=np.intp)[order],
                np.searchsorted(k_sorted, np.arange(self.ncoeffs)),
            )
        return self._mul

    def partial_table(self, var):
        """(src, fac) arrays so that (d/dx_var a)[r] = fac[r] * a[src[r]]."""
        tab = self._partials.get(var)
        if tab is None:
            n_out = self.prefix_count(self.degree - 1)
            src = np.empty(n_out, dtype=np.intp)
            fac = np.empty(n_out)
            for r, beta in enumerate(self.mi[:n_out]):
                alpha = list(beta)
                alpha[var] += 1
                src[r] = self.index[tuple(alpha)]
                fac[r] = beta[var] + 1
            self._partials[var] = tab = (src, fac)
        return tab


@functools.lru_cache(maxsize=None)
def jet_space(nvars, degree):
    """The (cached) jet space in ``nvars`` variables truncated at ``degree``."""
    if not 1 <= nvars <= MAX_NVARS:
        raise JetError(f"nvars must be in 1..{MAX_NVARS}, got {nvars}")
    if not 0 <= degree <= MAX_DEGREE:
        raise JetError(f"degree must be in 0..{MAX_DEGREE}, got {degree}")
    return JetSpace(nvars, degree)


def _as_value(c):
    c = np.asarray(c, dtype=np.float64)
    if c.ndim not in (0, 1):
        raise JetError(f"scalar operand must be a number or a 1-d batch, got shape {c.shape}")
    return c


def _align(x, y):
    """Lift unbatched coefficients against batched ones; check batch sizes."""
    if x.ndim == y.ndim:
        if x.ndim == 2 and x.shape[1] != y.shape[1]:
            raise JetError(f"batch sizes differ: {x.shape[1]} vs {y.shape[1]}")
        return x, y
    if x.ndim == 1:
        return x[:, None], y
    return x, y[:, None]


def _common(a, b):
    """Truncate two jets to their shared degree; insist on matching variables."""
    if a.space.nvars != b.space.nvars:
        raise JetError(
            f"jets live over different variables: {a.space.nvars} vs {b.space.nvars}"
        )
    d = min(a.space.degree, b.space.degree)
    return a.truncate(d), b.truncate(d)


class Jet:
    """Taylor coefficients of one scalar quantity in a fixed JetSpace.

    ``coeffs`` has shape (ncoeffs,) or (ncoeffs, batch), float64.
    """

    __slots__ = ("space", "coeffs")

    def __init__(self, space, coeffs):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.ndim not in (1, 2) or coeffs.shape[0] != space.ncoeffs:
            raise JetError(
                f"coefficient shape {coeffs.shape} does not fit a space "
                f"with {space.ncoeffs} coefficients"
            )
        self.space = space
        self.coeffs = coeffs

    @property
    def nvars(self):
        return self.space.nvars

    @property
    def degree(self):
        return self.space.degree

    @property
    def batch(self):
        return None if self.coeffs.ndim == 1 else self.coeffs.shape[1]

    @property
    def value(self):
        """Value at the expansion point: the constant coefficient."""
        return self.coeffs[0]

    def __repr__(self):
        b = "" if self.batch is None else f", batch={self.batch}"
        return f"Jet(nvars={self.nvars}, degree={self.degree}{b})"

    # ---- ring operations -------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = _common(self, other)
            ca, cb = _align(a.coeffs, b.coeffs)
            return Jet(a.space, ca + cb)
        return self._shift(_as_value(other))

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __sub__(self, other):
        if isinstance(other, Jet):
            a, b = _common(self, other)
            ca, cb = _align(a.coeffs, b.coeffs)
            return Jet(a.space, ca - cb)
        return self._shift(-_as_value(other))

    def __rsub__(self, other):
        return (-self)._shift(_as_value(other))

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = _common(self, other)
            I, J, starts = a.space.mul_table()
            ca, cb = _align(a.coeffs, b.coeffs)
            return Jet(a.space, np.add.reduceat(ca[I] * cb[J], starts, axis=0))
        return self._scale(_as_value(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * recip(other)
        c = _as_value(other)
        if np.min(np.abs(c)) < _DIV_FLOOR:
            raise SingularFieldError("division by zero")
        return self._scale(1.0 / c)

    def __rtruediv__(self, other):
        return recip(self)._scale(_as_value(other))

    def __pow__(self, r):
        if isinstance(r, (int, np.integer)) or (isinstance(r, float) and r.is_integer()):
            return powi(self, int(r))
        return powf(self, r)

    def _shift(self, c):
        if c.ndim == 1 and self.coeffs.ndim == 1:
            out = np.repeat(self.coeffs[:, None], c.shape[0], axis=1)
        else:
            out = self.coeffs.copy()
        out[0] = out[0] + c
        return Jet(self.space, out)

    def _scale(self, c):
        if c.ndim == 1 and self.coeffs.ndim == 1:
            return Jet(self.space, self.coeffs[:, None] * c)
        return Jet(self.space, self.coeffs * c)

    # ---- calculus --------------------------------------------------------

    def partial(self, var):
        """Derivative with respect to variable ``var``; costs one degree."""
        if not 0 <= var < self.nvars:
            raise JetError(f"variable index {var} out of range for {self.nvars} variables")
        if self.degree == 0:
            raise DegreeExhaustedError(
                "cannot differentiate a degree-0 jet; request a higher working degree"
            )
        src, fac = self.space.partial_table(var)
        out_space = jet_space(self.nvars, self.degree - 1)
        f = fac if self.coeffs.ndim == 1 else fac[:, None]
        return Jet(out_space, self.coeffs[src] * f)

    def truncate(self, d):
        """Forget coefficients above degree d.  A prefix slice, never a copy."""
        if d == self.degree:
            return self
        if d > self.degree:
            raise DegreeExhaustedError(
                f"cannot extend a degree-{self.degree} jet to degree {d}"
            )
        space = jet_space(self.nvars, d)
        return Jet(space, self.coeffs[: space.ncoeffs])

    def coeff(self, alpha):
        """Raw Taylor coefficient of the monomial with exponents ``alpha``."""
        alpha = tuple(int(k) for k in alpha)
        if len(alpha) != self.nvars or any(k < 0 for k in alpha):
            raise JetError(f"bad multi-index {alpha} for {self.nvars} variables")
        if sum(alpha) > self.degree:
            raise DegreeExhaustedError(
                f"coefficient {alpha} has degree {sum(alpha)}, jet stores {self.degree}"
            )
        return self.coeffs[self.space.index[alpha]]

    def extract(self, alpha):
        """Mixed partial derivative at the expansion point: alpha! * coeff."""
        c = self.coeff(alpha)
        scale = 1.0
        for k in alpha:
            scale *= math.factorial(int(k))
        return c * scale


def constant(space, value):
    """Jet of a constant.  ``value`` may be a scalar or a (batch,) array."""
    value = _as_value(value)
    if value.ndim == 0:
        coeffs = np.zeros(space.ncoeffs)
    else:
        coeffs = np.zeros((space.ncoeffs, value.shape[0]))
    coeffs[0] = value
    return Jet(space, coeffs)


def seed_variable(space, var, value):
    """Jet of the coordinate function x_var expanded where it equals ``value``."""
    if not 0 <= var < space.nvars:
        raise JetError(f"variable index {var} out of range for {space.nvars} variables")
    if space.degree < 1:
        raise JetError("coordinate seeds need degree >= 1 to carry their linear term")
    j = constant(space, value)
    e = tuple(1 if k == var else 0 for k in range(space.nvars))
    j.coeffs[space.index[e]] = 1.0
    return j


# ---- elementary functions ----------------------------------------------
#
# Each is the composition of a one-variable Taylor series s_0 + s_1 w + ...
# with the offset jet w = a - a.value, evaluated by Horner.  Since w has no
# constant term, the series only needs degree+1 coefficients and the result
# is exact through the truncation degree.


def _series(a, coeffs_for):
    a0 = a.value
    d = a.degree
    s = coeffs_for(a0, d)
    if d == 0:
        return constant(a.space, s[0])
    w = Jet(a.space, a.coeffs.copy())
    w.coeffs[0] = 0.0
    r = constant(a.space, s[d])
    for k in range(d - 1, -1, -1):
        r = r * w + s[k]
    return r


def exp(a):
    def series(a0, d):
        e = np.exp(a0)
        return [e / math.factorial(k) for k in range(d + 1)]

    return _series(a, series)


def log(a):
    def series(a0, d):
        if np.any(a0 <= 0.0):
            raise SingularFieldError("log of a nonpositive value")
        out = [np.log(a0)]
        for k in range(1, d + 1):
            out.append((-1.0) ** (k - 1) / (k * a0**k))
        return out

    return _series(a, series)


def sin(a):
    def series(a0, d):
        s, c = np.sin(a0), np.cos(a0)
        cyc = (s, c, -s, -c)
        return [cyc[k % 4] / math.factorial(k) for k in range(d + 1)]

    return _series(a, series)


def cos(a):
    def series(a0, d):
        s, c = np.sin(a0), np.cos(a0)
        cyc = (c, -s, -c, s)
        return [cyc[k % 4] / math.factorial(k) for k in range(d + 1)]

    return _series(a, series)


def powf(a, r):
    """a**r for a real exponent; the base value must be positive."""

    def series(a0, d):
        if np.any(a0 <= 0.0):
            raise SingularFieldError(f"power {r} of a nonpositive value")
        out = []
        b = 1.0  # running binom(r, k)
        for k in range(d + 1):
            out.append(b * a0 ** (r - k))
            b = b * (r - k) / (k + 1)
        return out

    return _series(a, series)


def sqrt(a):
    return powf(a, 0.5)


def recip(a):
    def series(a0, d):
        if np.min(np.abs(a0)) < _DIV_FLOOR:
            raise SingularFieldError("division by a vanishing value")
        inv = 1.0 / a0
        out = [inv]
        for k in range(1, d + 1):
            out.append(out[-1] * -inv)
        return out

    return _series(a, series)


def powi(a, n):
    """Integer power by binary exponentiation; negative n goes through recip."""
    n = int(n)
    if n < 0:
        return recip(powi(a, -n))
    out = None
    base = a
    while n:
        if n & 1:
            out = base if out is None else out * base
        n >>= 1
        if n:
            base = base * base
    return out if out is not None else constant(a.space, 1.0)


def compose(outer, args):
    """Substitute inner jets into ``outer``'s Taylor polynomial.

    ``args[j]`` is the expansion of the j-th outer variable as a jet over the
    inner variables.  Its constant term must be the point ``outer`` was
    expanded about; only the offsets ``args[j] - args[j].value`` enter, so a
    mismatch is the caller's bug and is not detectable here.  The result is
    truncated to min(outer.degree, inner degree): coefficients of ``outer``
    beyond its stored degree are unknown and would pollute anything higher.

    Monomials in the offsets are built grade by grade, each from a parent one
    grade down, so the work is one jet product per retained outer monomial.
    """
    if len(args) != outer.nvars:
        raise JetError(
            f"outer jet has {outer.nvars} variables, got {len(args)} arguments"
        )
    inner_space = args[0].space
    for b in args[1:]:
        if b.space is not inner_space:
            raise JetError("composition arguments must share a single jet space")
    d = min(outer.degree, inner_space.degree)
    space = jet_space(inner_space.nvars, d)
    w = []
    for b in args:
        c = b.coeffs[: space.ncoeffs].copy()
        c[0] = 0.0
        w.append(Jet(space, c))
    result = constant(space, outer.coeffs[0])
    prev = {(0,) * outer.nvars: constant(space, 1.0)}
    for q in range(1, d + 1):
        cur = {}
        for alpha in _grade_block(outer.nvars, q):
            j = next(i for i, e in enumerate(alpha) if e)
            parent = list(alpha)
            parent[j] -= 1
            m = prev[tuple(parent)] * w[j]
            cur[alpha] = m
            c = outer.coeffs[outer.space.index[alpha]]
            if np.any(c):
                result = result + m * c
        prev = cur
    return result
