"""Embedded hypersurfaces: induced metric, second fundamental form, and the
ambient curvature data that extrinsic operators consume.

An Embedding is a chart-to-ambient map given componentwise as expressions,
together with an ambient metric and an orientation sign.  Evaluation happens
in an EmbeddedSurfaceContext, which is a full GeometryContext for the
induced metric (so all intrinsic machinery applies unchanged) and also owns
an ambient MetricContext whose jets are seeded along the image of the
embedding.  Ambient quantities come across in two steps: curvature is
computed as jets in the ambient variables, then composed with the embedding
component jets to become jets in the surface variables.

The unit normal is built from the generalized cross product of the tangent
frame (cofactor covector, raised with the ambient metric and normalized);
its overall sign is the embedding's sigma.  With sigma = +1 a graph's last
ambient component points upward and the standard spherical parametrization
points outward, so round spheres get H = +1/r.
"""

import numpy as np

from . import curvature, jets
from .exprlang import ExprError, parse_expression
from .geometry import Field, GeometryContext, MetricContext, _invert_spd, _sum
from .jets import DegreeExhaustedError, JetError


class Embedding:
    """A hypersurface chart, its ambient metric, the map, and an orientation."""

    __slots__ = ("chart", "ambient_metric", "iota_texts", "iota_exprs", "sigma")

    def __init__(self, chart, ambient_metric, iota, sigma=1.0):
        if ambient_metric.chart.dim != chart.dim + 1:
            raise JetError(
                f"ambient dimension {ambient_metric.chart.dim} must exceed the "
                f"surface dimension {chart.dim} by one"
            )
        iota = tuple(str(t) for t in iota)
        if len(iota) != ambient_metric.chart.dim:
            raise JetError(
                f"embedding needs {ambient_metric.chart.dim} components, got {len(iota)}"
            )
        if sigma not in (1.0, -1.0, 1, -1):
            raise JetError(f"sigma must be +1 or -1, got {sigma}")
        exprs = []
        for a, text in enumerate(iota):
            try:
                exprs.append(parse_expression(text, chart.names))
            except ExprError as err:
                err.args = (f"embedding component {a + 1}: {err.args[0]}",)
                raise
        self.chart = chart
        self.ambient_metric = ambient_metric
        self.iota_texts = iota
        self.iota_exprs = tuple(exprs)
        self.sigma = float(sigma)

    def flipped(self):
        """The same surface with the opposite normal."""
        return Embedding(self.chart, self.ambient_metric, self.iota_texts, -self.sigma)

    def __repr__(self):
        return f"Embedding(dim {self.chart.dim} -> {self.ambient_metric.chart.dim})"


class EmbeddedSurfaceContext(GeometryContext):
    """GeometryContext of the induced metric, plus the ambient context.

    Intrinsic quantities (curvature of the induced metric, intrinsic
    operators) see this as an ordinary geometry context; the functions below
    add the extrinsic ones, cached here alongside everything else.
    """

    def __init__(self, embedding, points, degree_cap=6):
        super().__init__(embedding.chart, points, degree_cap)
        self.embedding = embedding
        sp0 = jets.jet_space(self.dim, 0)
        args0 = [jets.constant(sp0, self.points[i]) for i in range(self.dim)]
        B = self.nbatch
        rows = []
        for e in embedding.iota_exprs:
            v = np.atleast_1d(np.asarray(e(args0).value, dtype=np.float64))
            rows.append(np.broadcast_to(v, (B,)))
        self.ambient = MetricContext(
            embedding.ambient_metric, np.array(rows), degree_cap
        )

    def g(self, d):
        return self.get("g", d, lambda dd: _induced_metric(self, dd))


def iota_jets(sctx, d):
    """Embedding components as surface jets."""
    return sctx.get(
        "iota", d, lambda dd: [e(sctx.coords(dd)) for e in sctx.embedding.iota_exprs]
    )


def tangents(sctx, d):
    """t[i][a] = d iota^a / dx^i."""

    def build(dd):
        io = iota_jets(sctx, dd + 1)
        return [[io[a].partial(i) for a in range(len(io))] for i in range(sctx.dim)]

    return sctx.get("tangents", d, build)


def ambient_metric_on_surface(sctx, d):
    """The ambient metric components evaluated along the embedding."""

    def build(dd):
        io = iota_jets(sctx, dd)
        m = sctx.embedding.ambient_metric
        na = m.chart.dim
        out = [[None] * na for _ in range(na)]
        for a in range(na):
            for b in range(a, na):
                out[a][b] = out[b][a] = m.exprs[a][b](io)
        return out

    return sctx.get("gbar", d, build)


def ambient_inverse_on_surface(sctx, d):
    def build(dd):
        return _invert_spd(ambient_metric_on_surface(sctx, dd), sctx, dd)[0]

    return sctx.get("gbar_inv", d, build)


def _induced_metric(sctx, d):
    n = sctx.dim
    t = tangents(sctx, d)
    gb = ambient_metric_on_surface(sctx, d)
    na = n + 1
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            s = _sum(
                [gb[a][b] * (t[i][a] * t[j][b]) for a in range(na) for b in range(na)],
                sctx,
                d,
            )
            out[i][j] = out[j][i] = s
    return out


def _det(M):
    n = len(M)
    if n == 1:
        return M[0][0]
    total = None
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in M[1:]]
        term = M[0][j] * _det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total


def normal(sctx, d):
    """Unit normal nu^a (ambient index up), oriented by the embedding's sigma."""

    def build(dd):
        n = sctx.dim
        na = n + 1
        t = tangents(sctx, dd)
        cof = []
        for a in range(na):
            minor = [[t[i][b] for b in range(na) if b != a] for i in range(n)]
            m = _det(minor)
            if (n + a) % 2:
                m = -m
            cof.append(m)
        gbi = ambient_inverse_on_surface(sctx, dd)
        raised = [
            _sum([gbi[a][b] * cof[b] for b in range(na)], sctx, dd) for a in range(na)
        ]
        norm_sq = _sum([raised[a] * cof[a] for a in range(na)], sctx, dd)
        scale = jets.recip(jets.sqrt(norm_sq)) * sctx.embedding.sigma
        return [scale * raised[a] for a in range(na)]

    return sctx.get("normal", d, build)


def pulled_christoffel(sctx, d):
    """Ambient Christoffel symbols composed with the embedding."""

    def build(dd):
        ga = sctx.ambient.gamma(dd)
        io = iota_jets(sctx, dd)
        na = sctx.dim + 1
        out = [[[None] * na for _ in range(na)] for _ in range(na)]
        for k in range(na):
            for i in range(na):
                for j in range(i, na):
                    p = jets.compose(ga[k][i][j], io)
                    out[k][i][j] = out[k][j][i] = p
        return out

    return sctx.get("gammabar", d, build)


def second_fundamental(sctx, d):
    """L_ij = gbar(nabla_i nu, t_j) along the surface."""

    def build(dd):
        n = sctx.dim
        na = n + 1
        nu = normal(sctx, dd + 1)
        t = tangents(sctx, dd)
        gb = ambient_metric_on_surface(sctx, dd)
        gab = pulled_christoffel(sctx, dd)
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            dnu = [nu[a].partial(i) for a in range(na)]
            cov = []
            for a in range(na):
                s = dnu[a]
                for b in range(na):
                    for c in range(na):
                        s = s + gab[a][b][c] * (t[i][b] * nu[c])
                cov.append(s)
            for j in range(n):
                out[i][j] = _sum(
                    [gb[a][b] * (cov[a] * t[j][b]) for a in range(na) for b in range(na)],
                    sctx,
                    dd,
                )
        return out

    return sctx.get("second_fundamental", d, build)


def mean_curvature(sctx, d):
    """H = (1/n) h^{ij} L_ij."""

    def build(dd):
        n = sctx.dim
        L = second_fundamental(sctx, dd)
        hi = sctx.ginv(dd)
        return _sum(
            [hi[i][j] * L[i][j] for i in range(n) for j in range(n)], sctx, dd
        ) * (1.0 / n)

    return sctx.get("mean_curvature", d, build)


def tracefree_second_fundamental(sctx, d):
    def build(dd):
        n = sctx.dim
        L = second_fundamental(sctx, dd)
        H = mean_curvature(sctx, dd)
        h = sctx.g(dd)
        return [[L[i][j] - H * h[i][j] for j in range(n)] for i in range(n)]

    return sctx.get("tracefree_L", d, build)


def pull(sctx, ambient_jet, d):
    """Compose an ambient-variable jet with the embedding at surface degree d."""
    return jets.compose(ambient_jet, iota_jets(sctx, d))


def pulled_schouten(sctx, d):
    """Ambient Schouten tensor along the surface, ambient indices."""

    def build(dd):
        rb = curvature.schouten(sctx.ambient, dd)
        io = iota_jets(sctx, dd)
        na = sctx.dim + 1
        out = [[None] * na for _ in range(na)]
        for a in range(na):
            for b in range(a, na):
                p = jets.compose(rb[a][b], io)
                out[a][b] = out[b][a] = p
        return out

    return sctx.get("rhobar", d, build)


def pulled_weyl(sctx, d):
    """Ambient Weyl tensor along the surface, ambient indices."""

    def build(dd):
        W = curvature.weyl(sctx.ambient, dd)
        io = iota_jets(sctx, dd)
        na = sctx.dim + 1
        zero = jets.constant(jets.jet_space(sctx.dim, dd), 0.0)
        out = [[[[zero] * na for _ in range(na)] for _ in range(na)] for _ in range(na)]
        for a in range(na):
            for b in range(a + 1, na):
                for c in range(na):
                    for e in range(c + 1, na):
                        if (a, b) > (c, e):
                            continue
                        p = jets.compose(W[a][b][c][e], io)
                        out[a][b][c][e] = p
                        out[b][a][c][e] = -p
                        out[a][b][e][c] = -p
                        out[b][a][e][c] = p
                        if (a, b) != (c, e):
                            out[c][e][a][b] = p
                            out[e][c][a][b] = -p
                            out[c][e][b][a] = -p
                            out[e][c][b][a] = p
        return out

    return sctx.get("weylbar", d, build)


def jbar(sctx, d):
    """Ambient J along the surface."""

    def build(dd):
        return pull(sctx, curvature.jfun(sctx.ambient, dd), dd)

    return sctx.get("jbar", d, build)


def rho_bar_nn(sctx, d):
    """rhobar(nu, nu)."""

    def build(dd):
        na = sctx.dim + 1
        rb = pulled_schouten(sctx, dd)
        nu = normal(sctx, dd)
        return _sum(
            [rb[a][b] * (nu[a] * nu[b]) for a in range(na) for b in range(na)],
            sctx,
            dd,
        )

    return sctx.get("rhobar_nn", d, build)


def rho_bar_tangential(sctx, d):
    """The pullback iota* rhobar as a surface 2-tensor."""

    def build(dd):
        n = sctx.dim
        na = n + 1
        rb = pulled_schouten(sctx, dd)
        t = tangents(sctx, dd)
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                s = _sum(
                    [rb[a][b] * (t[i][a] * t[j][b]) for a in range(na) for b in range(na)],
                    sctx,
                    dd,
                )
                out[i][j] = out[j][i] = s
        return out

    return sctx.get("rhobar_tt", d, build)


def rho_bar_normal_tangential(sctx, d):
    """rhobar(nu, t_i) as a surface covector."""

    def build(dd):
        n = sctx.dim
        na = n + 1
        rb = pulled_schouten(sctx, dd)
        nu = normal(sctx, dd)
        t = tangents(sctx, dd)
        Y = [None] * na
        for b in range(na):
            Y[b] = _sum([nu[a] * rb[a][b] for a in range(na)], sctx, dd)
        return [
            _sum([Y[b] * t[i][b] for b in range(na)], sctx, dd) for i in range(n)
        ]

    return sctx.get("rhobar_nt", d, build)


def normal_riemann(sctx, d):
    """The 2-tensor Rbar(nu, t_i, t_j, nu) of normal ambient curvature."""

    def build(dd):
        n = sctx.dim
        na = n + 1
        R = [
            [[[jets.compose(c, iota_jets(sctx, dd)) for c in row3] for row3 in row2] for row2 in row1]
            for row1 in curvature.riemann(sctx.ambient, dd)
        ]
        nu = normal(sctx, dd)
        t = tangents(sctx, dd)
        X = [[None] * na for _ in range(na)]
        for b in range(na):
            for c in range(na):
                X[b][c] = _sum(
                    [(nu[a] * nu[e]) * R[a][b][c][e] for a in range(na) for e in range(na)],
                    sctx,
                    dd,
                )
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                out[i][j] = _sum(
                    [X[b][c] * (t[i][b] * t[j][c]) for b in range(na) for c in range(na)],
                    sctx,
                    dd,
                )
        return out

    return sctx.get("normal_riemann", d, build)


def normal_weyl(sctx, d):
    """The 2-tensor Wbar(nu, t_i, t_j, nu), conformally invariant of weight 0."""

    def build(dd):
        n = sctx.dim
        na = n + 1
        W = pulled_weyl(sctx, dd)
        nu = normal(sctx, dd)
        t = tangents(sctx, dd)
        X = [[None] * na for _ in range(na)]
        for b in range(na):
            for c in range(na):
                X[b][c] = _sum(
                    [(nu[a] * nu[e]) * W[a][b][c][e] for a in range(na) for e in range(na)],
                    sctx,
                    dd,
                )
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                out[i][j] = _sum(
                    [X[b][c] * (t[i][b] * t[j][c]) for b in range(na) for c in range(na)],
                    sctx,
                    dd,
                )
        return out

    return sctx.get("normal_weyl", d, build)


def fialkow(sctx, d):
    """iota* rhobar - rho + H Lo + (1/2) H^2 h; needs surface dimension >= 3."""

    def build(dd):
        n = sctx.dim
        rt = rho_bar_tangential(sctx, dd)
        rho = curvature.schouten(sctx, dd)
        H = mean_curvature(sctx, dd)
        Lo = tracefree_second_fundamental(sctx, dd)
        h = sctx.g(dd)
        HH = H * H * 0.5
        return [
            [rt[i][j] - rho[i][j] + H * Lo[i][j] + HH * h[i][j] for j in range(n)]
            for i in range(n)
        ]

    return sctx.get("fialkow", d, build)


def _pulled_nabla_rho(sctx, d):
    """Ambient covariant derivative of Schouten along the surface: N[c][a][b]."""

    def build(dd):
        na = sctx.dim + 1
        rb1 = curvature.schouten(sctx.ambient, dd + 1)
        ga = sctx.ambient.gamma(dd)
        io = iota_jets(sctx, dd)
        out = [[[None] * na for _ in range(na)] for _ in range(na)]
        for c in range(na):
            for a in range(na):
                for b in range(a, na):
                    t = rb1[a][b].partial(c)
                    for e in range(na):
                        t = t - ga[e][c][a] * rb1[e][b] - ga[e][c][b] * rb1[a][e]
                    p = jets.compose(t, io)
                    out[c][a][b] = out[c][b][a] = p
        return out

    return sctx.get("nabla_rhobar", d, build)


def nabla0_rho_tangential(sctx, d):
    """(nabla_nu rhobar)(t_i, t_j) as a surface 2-tensor."""

    def build(dd):
        n = sctx.dim
        na = n + 1
        N = _pulled_nabla_rho(sctx, dd)
        nu = normal(sctx, dd)
        t = tangents(sctx, dd)
        X = [[None] * na for _ in range(na)]
        for a in range(na):
            for b in range(a, na):
                s = _sum([nu[c] * N[c][a][b] for c in range(na)], sctx, dd)
                X[a][b] = X[b][a] = s
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                s = _sum(
                    [X[a][b] * (t[i][a] * t[j][b]) for a in range(na) for b in range(na)],
                    sctx,
                    dd,
                )
                out[i][j] = out[j][i] = s
        return out

    return sctx.get("nabla0_rho_tt", d, build)


def nabla0_rho_normal(sctx, d):
    """(nabla_nu rhobar)(nu, t_i) as a surface covector."""

    def build(dd):
        n = sctx.dim
        na = n + 1
        N = _pulled_nabla_rho(sctx, dd)
        nu = normal(sctx, dd)
        t = tangents(sctx, dd)
        Y = [None] * na
        for b in range(na):
            Y[b] = _sum(
                [(nu[c] * nu[a]) * N[c][a][b] for c in range(na) for a in range(na)],
                sctx,
                dd,
            )
        return [
            _sum([Y[b] * t[i][b] for b in range(na)], sctx, dd) for i in range(n)
        ]

    return sctx.get("nabla0_rho_n", d, build)


def nabla0_weyl_normal(sctx, d=0):
    """(nabla_nu Wbar)(nu, t_i, t_j, nu) as a surface 2-tensor of values.

    Only needed, and only computed, at degree 0: the contraction is assembled
    from constant and linear jet coefficients with one einsum instead of
    composing all five-index components.
    """
    if d != 0:
        raise DegreeExhaustedError(
            "the Weyl normal derivative term is evaluated pointwise (degree 0 only)"
        )

    def build(dd):
        n = sctx.dim
        na = n + 1
        B = sctx.nbatch
        amb = sctx.ambient
        W1 = curvature.weyl(amb, 1)
        ga = amb.gamma(0)

        def arr(j):
            return np.broadcast_to(np.atleast_1d(np.asarray(j.value)), (B,))

        Wv = np.empty((na, na, na, na, B))
        dWv = np.empty((na, na, na, na, na, B))
        unit = [tuple(1 if k == e else 0 for k in range(na)) for e in range(na)]
        for a in range(na):
            for b in range(na):
                for c in range(na):
                    for f in range(na):
                        j = W1[a][b][c][f]
                        Wv[a, b, c, f] = arr(j)
                        for e in range(na):
                            dWv[e, a, b, c, f] = np.broadcast_to(
                                np.atleast_1d(np.asarray(j.extract(unit[e]))), (B,)
                            )
        Gv = np.empty((na, na, na, B))
        for k in range(na):
            for i in range(na):
                for j_ in range(na):
                    Gv[k, i, j_] = arr(ga[k][i][j_])
        nW = (
            dWv
            - np.einsum("feaZ,fbcdZ->eabcdZ", Gv, Wv)
            - np.einsum("febZ,afcdZ->eabcdZ", Gv, Wv)
            - np.einsum("fecZ,abfdZ->eabcdZ", Gv, Wv)
            - np.einsum("fedZ,abcfZ->eabcdZ", Gv, Wv)
        )
        nu = normal(sctx, 0)
        t = tangents(sctx, 0)
        nuv = np.array([arr(x) for x in nu])
        tv = np.array([[arr(x) for x in row] for row in t])
        T = np.einsum("eabcdZ,eZ,aZ,ibZ,jcZ,dZ->ijZ", nW, nuv, nuv, tv, tv, nuv)
        sp = jets.jet_space(n, 0)
        return [[jets.constant(sp, T[i, j]) for j in range(n)] for i in range(n)]

    return sctx.get("nabla0_weyl", 0, build)


def ambient_expression_field(text, ambient_chart):
    """A surface scalar field from an expression in the ambient coordinates."""
    expr = parse_expression(text, ambient_chart.names)
    return Field(0, lambda ctx, d: expr(iota_jets(ctx, d)))
