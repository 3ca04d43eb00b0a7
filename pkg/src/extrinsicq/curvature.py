"""Curvature of a geometry context: Riemann, Ricci, scalar, Schouten, Weyl.

Everything here takes a context from geometry.py and a degree, returns
nested lists of jets, and caches on the context, so ambient and induced
metrics share one code path.

Conventions, pinned jointly by the round-sphere tests: the curvature
operator is

    R^m_{ijk} = d_j Gamma^m_{ik} - d_i Gamma^m_{jk}
                + Gamma^m_{ja} Gamma^a_{ik} - Gamma^m_{ia} Gamma^a_{jk}

lowered on the last slot, R_{ijkl} = g_{lm} R^m_{ijk}.  With these signs the
unit sphere satisfies R_{ijkl} = g_ik g_jl - g_il g_jk, sectional curvatures
of round spheres are positive, Ric = (n-1) g, and scal = n(n-1)."""

from . import jets
from .geometry import _matmul, _sum
from .jets import JetError


def riemann(ctx, d):
    """Fully covariant curvature tensor R[i][j][k][l]."""

    def build(dd):
        n = ctx.dim
        ga = ctx.gamma(dd + 1)
        g = ctx.g(dd)
        lo = [[[[None] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
        zero = jets.constant(jets.jet_space(n, dd), 0.0)
        for i in range(n):
            for k in range(n):
                for l in range(n):
                    lo[i][i][k][l] = zero
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(n):
                    up = []
                    for m in range(n):
                        t = ga[m][i][k].partial(j) - ga[m][j][k].partial(i)
                        for a in range(n):
                            t = t + ga[m][j][a] * ga[a][i][k] - ga[m][i][a] * ga[a][j][k]
                        up.append(t)
                    for l in range(n):
                        r = _sum([g[l][m] * up[m] for m in range(n)], ctx, dd)
                        lo[i][j][k][l] = r
                        lo[j][i][k][l] = -r
        return lo

    return ctx.get("riemann", d, build)


def ricci(ctx, d):
    """Ric_ab = g^{kl} R_{akbl}."""

    def build(dd):
        n = ctx.dim
        R = riemann(ctx, dd)
        gi = ctx.ginv(dd)
        out = [[None] * n for _ in range(n)]
        for a in range(n):
            for b in range(a, n):
                s = _sum(
                    [gi[k][l] * R[a][k][b][l] for k in range(n) for l in range(n)],
                    ctx,
                    dd,
                )
                out[a][b] = out[b][a] = s
        return out

    return ctx.get("ricci", d, build)


def scal(ctx, d):
    def build(dd):
        n = ctx.dim
        ric = ricci(ctx, dd)
        gi = ctx.ginv(dd)
        return _sum([gi[a][b] * ric[a][b] for a in range(n) for b in range(n)], ctx, dd)

    return ctx.get("scal", d, build)


def jfun(ctx, d):
    """The trace-adjusted scalar curvature J = scal / (2 (n - 1))."""

    def build(dd):
        return scal(ctx, dd) * (1.0 / (2.0 * (ctx.dim - 1)))

    return ctx.get("J", d, build)


def schouten(ctx, d):
    """rho = (Ric - J g) / (n - 2); needs dimension at least 3."""
    if ctx.dim < 3:
        raise JetError("the Schouten tensor needs dimension >= 3")

    def build(dd):
        n = ctx.dim
        ric = ricci(ctx, dd)
        J = jfun(ctx, dd)
        g = ctx.g(dd)
        c = 1.0 / (n - 2)
        return [
            [(ric[i][j] - J * g[i][j]) * c for j in range(n)] for i in range(n)
        ]

    return ctx.get("schouten", d, build)


def _kulkarni_nomizu(A, B, n):
    """(A ^ B)_{ijkl} = A_ik B_jl + B_ik A_jl - A_il B_jk - B_il A_jk."""
    out = [[[[None] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    out[i][j][k][l] = (
                        A[i][k] * B[j][l]
                        + B[i][k] * A[j][l]
                        - A[i][l] * B[j][k]
                        - B[i][l] * A[j][k]
                    )
    return out


def weyl_norm_sq(ctx, d):
    """|W|^2 with all four indices raised against the metric."""

    def build(dd):
        n = ctx.dim
        W = weyl(ctx, dd)
        gi = ctx.ginv(dd)

        def raise_first(T):
            out = [[[[None] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        for i in range(n):
                            out[i][j][k][l] = _sum(
                                [gi[i][a] * T[a][j][k][l] for a in range(n)], ctx, dd
                            )
            return out

        def rot(T):
            # cycle indices so each raise_first hits a fresh slot
            return [
                [[[T[j][k][l][i] for l in range(n)] for k in range(n)] for j in range(n)]
                for i in range(n)
            ]

        up = W
        for _ in range(4):
            up = rot(raise_first(up))
        return _sum(
            [
                up[i][j][k][l] * W[i][j][k][l]
                for i in range(n)
                for j in range(n)
                for k in range(n)
                for l in range(n)
            ],
            ctx,
            dd,
        )

    return ctx.get("weylnormsq", d, build)


def weyl(ctx, d):
    """Conformally invariant part of curvature: W = R - rho ^ g (KN product).

    Identically zero in dimension 3; an error in dimension 2 where the
    decomposition does not exist.
    """
    if ctx.dim < 3:
        raise JetError("the Weyl tensor needs dimension >= 3")

    def build(dd):
        n = ctx.dim
        R = riemann(ctx, dd)
        rho_wedge_g = _kulkarni_nomizu(schouten(ctx, dd), ctx.g(dd), n)
        out = [[[[None] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        out[i][j][k][l] = R[i][j][k][l] - rho_wedge_g[i][j][k][l]
        return out

    return ctx.get("weyl", d, build)
