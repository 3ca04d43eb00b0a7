import numpy as np
import pytest

from extrinsicq import curvature
from extrinsicq.geometry import (
    Axis,
    Chart,
    Field,
    Metric,
    MetricContext,
    differential,
    divergence2,
    expression_field,
    hessian,
    inner11,
    metric_field,
)
from extrinsicq.exprlang import parse_expression
from extrinsicq.jets import JetError
from helpers import jval

TWO_PI = 2.0 * np.pi


def torus_chart(n):
    return Chart([Axis(f"x{i+1}", 0.0, TWO_PI, periodic=True) for i in range(n)])


def sphere_metric(n, r=1.0):
    """Round S^n in polar coordinates; axis k carries sin^2 of all before it."""
    axes = [Axis(f"x{i+1}", 0.0, np.pi) for i in range(n - 1)]
    axes.append(Axis(f"x{n}", 0.0, TWO_PI, periodic=True))
    comps = {}
    for k in range(n):
        factors = [f"{r * r}"] + [f"sin(x{j+1})^2" for j in range(k)]
        comps[f"g{k+1}{k+1}"] = "*".join(factors)
    return Metric.from_dict(Chart(axes), comps)


def pert_t3():
    return Metric.from_dict(
        torus_chart(3),
        {
            "g11": "1 + 0.1*sin(x1)*cos(x2)",
            "g22": "1 + 0.08*cos(x2)*sin(x3)",
            "g33": "1 + 0.06*sin(x3)*cos(x1)",
            "g12": "0.05*sin(x1 + x3)",
            "g23": "0.04*cos(x1 + x2)",
        },
    )


def pert_t4():
    return Metric.from_dict(
        torus_chart(4),
        {
            "g11": "1 + 0.08*sin(x1)*cos(x2)",
            "g22": "1 + 0.07*cos(x2)*sin(x3)",
            "g33": "1 + 0.06*sin(x3)*cos(x4)",
            "g44": "1 + 0.05*cos(x4)*sin(x1)",
            "g12": "0.04*sin(x1 + x2)",
            "g13": "0.03*cos(x2 + x4)",
            "g24": "0.03*sin(x3 + x1)",
            "g34": "0.02*cos(x1 + x3)",
        },
    )


def product_s2_s2(r1=1.0, r2=2.0):
    ch = Chart(
        [
            Axis("x1", 0.0, np.pi),
            Axis("x2", 0.0, TWO_PI, periodic=True),
            Axis("x3", 0.0, np.pi),
            Axis("x4", 0.0, TWO_PI, periodic=True),
        ]
    )
    return Metric.from_dict(
        ch,
        {
            "g11": f"{r1 * r1}",
            "g22": f"{r1 * r1}*sin(x1)^2",
            "g33": f"{r2 * r2}",
            "g44": f"{r2 * r2}*sin(x3)^2",
        },
    )


def rand_points(chart, m, seed):
    rng = np.random.default_rng(seed)
    pts = np.empty((chart.dim, m))
    for i, ax in enumerate(chart.axes):
        pad = 0.0 if ax.periodic else 0.2 * (ax.hi - ax.lo)
        pts[i] = rng.uniform(ax.lo + pad, ax.hi - pad, m)
    return pts


def tensor2_values(t, B):
    return np.array([[jval(x, B) for x in row] for row in t])


def tensor4_values(t, B):
    n = len(t)
    return np.array(
        [
            [[[jval(t[i][j][k][l], B) for l in range(n)] for k in range(n)] for j in range(n)]
            for i in range(n)
        ]
    )


@pytest.mark.parametrize("r", [1.0, 2.0])
def test_round_two_sphere(r):
    m = sphere_metric(2, r)
    pts = rand_points(m.chart, 5, 1)
    ctx = MetricContext(m, pts)
    B = ctx.nbatch
    # R_1212 = det g / r^2, positive for the round sphere
    want = r * r * np.sin(pts[0]) ** 2
    R = curvature.riemann(ctx, 0)
    np.testing.assert_allclose(jval(R[0][1][0][1], B), want, rtol=1e-11)
    ric = tensor2_values(curvature.ricci(ctx, 0), B)
    g = tensor2_values(ctx.g(0), B)
    np.testing.assert_allclose(ric, g / (r * r), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(jval(curvature.scal(ctx, 0), B), 2.0 / r**2, rtol=1e-10)
    np.testing.assert_allclose(jval(curvature.jfun(ctx, 0), B), 1.0 / r**2, rtol=1e-10)


def test_round_four_sphere():
    m = sphere_metric(4)
    pts = rand_points(m.chart, 4, 2)
    ctx = MetricContext(m, pts)
    B = ctx.nbatch
    np.testing.assert_allclose(jval(curvature.scal(ctx, 0), B), 12.0, rtol=1e-9)
    np.testing.assert_allclose(jval(curvature.jfun(ctx, 0), B), 2.0, rtol=1e-9)
    rho = tensor2_values(curvature.schouten(ctx, 0), B)
    g = tensor2_values(ctx.g(0), B)
    np.testing.assert_allclose(rho, g / 2.0, rtol=1e-9, atol=1e-11)
    W = tensor4_values(curvature.weyl(ctx, 0), B)
    assert np.max(np.abs(W)) < 1e-9
    np.testing.assert_allclose(jval(curvature.weyl_norm_sq(ctx, 0), B), 0.0, atol=1e-9)


def test_product_of_unequal_spheres():
    m = product_s2_s2(1.0, 2.0)
    pts = rand_points(m.chart, 5, 3)
    ctx = MetricContext(m, pts)
    B = ctx.nbatch
    np.testing.assert_allclose(jval(curvature.scal(ctx, 0), B), 2.5, rtol=1e-10)
    np.testing.assert_allclose(jval(curvature.jfun(ctx, 0), B), 5.0 / 12.0, rtol=1e-10)
    rho = tensor2_values(curvature.schouten(ctx, 0), B)
    g = tensor2_values(ctx.g(0), B)
    want = np.zeros_like(rho)
    want[:2, :2] = (7.0 / 24.0) * g[:2, :2]
    want[2:, 2:] = (-1.0 / 12.0) * g[2:, 2:]
    np.testing.assert_allclose(rho, want, rtol=1e-9, atol=1e-11)
    np.testing.assert_allclose(
        jval(curvature.weyl_norm_sq(ctx, 0), B), 25.0 / 12.0, rtol=1e-9
    )


def test_riemann_symmetries_generic():
    m = pert_t3()
    ctx = MetricContext(m, rand_points(m.chart, 4, 4))
    B = ctx.nbatch
    R = tensor4_values(curvature.riemann(ctx, 0), B)
    np.testing.assert_allclose(R, -np.swapaxes(R, 0, 1), atol=1e-12)
    np.testing.assert_allclose(R, -np.swapaxes(R, 2, 3), atol=1e-10)
    np.testing.assert_allclose(R, np.moveaxis(R, [0, 1, 2, 3], [2, 3, 0, 1]), atol=1e-10)
    # first Bianchi: R_{i[jkl]} = 0
    bianchi = R + np.moveaxis(R, [1, 2, 3], [2, 3, 1]) + np.moveaxis(R, [1, 2, 3], [3, 1, 2])
    np.testing.assert_allclose(bianchi, 0.0, atol=1e-10)


def test_both_ricci_contractions_agree():
    m = pert_t3()
    ctx = MetricContext(m, rand_points(m.chart, 4, 5))
    B = ctx.nbatch
    R = tensor4_values(curvature.riemann(ctx, 0), B)
    g = tensor2_values(ctx.g(0), B)
    gi = np.linalg.inv(np.moveaxis(g, 2, 0))
    ric = tensor2_values(curvature.ricci(ctx, 0), B)
    alt = np.einsum("bik,ijklb->jlb", gi, R)
    np.testing.assert_allclose(alt, ric, rtol=1e-9, atol=1e-12)


def test_contracted_second_bianchi():
    # div rho = dJ, a sharp joint test of Riemann, Ricci, and the covariant
    # derivative conventions on a generic metric
    m = pert_t3()
    ctx = MetricContext(m, rand_points(m.chart, 4, 6))
    B = ctx.nbatch
    rho = Field(2, lambda c, d: curvature.schouten(c, d))
    jf = Field(0, lambda c, d: curvature.jfun(c, d))
    lhs = divergence2(rho)(ctx, 0)
    rhs = differential(jf)(ctx, 0)
    for i in range(3):
        np.testing.assert_allclose(jval(lhs[i], B), jval(rhs[i], B), rtol=1e-8, atol=1e-11)


def test_weyl_three_dimensions_vanishes():
    m = pert_t3()
    ctx = MetricContext(m, rand_points(m.chart, 3, 7))
    W = tensor4_values(curvature.weyl(ctx, 0), ctx.nbatch)
    assert np.max(np.abs(W)) < 1e-9


def test_weyl_trace_free_generic():
    m = pert_t4()
    ctx = MetricContext(m, rand_points(m.chart, 3, 8))
    B = ctx.nbatch
    W = tensor4_values(curvature.weyl(ctx, 0), B)
    g = tensor2_values(ctx.g(0), B)
    gi = np.linalg.inv(np.moveaxis(g, 2, 0))
    tr = np.einsum("bik,ijklb->jlb", gi, W)
    np.testing.assert_allclose(tr, 0.0, atol=1e-10)


def test_weyl_conformal_covariance():
    from extrinsicq.geometry import conformal_rescale

    m = pert_t4()
    phi = "0.15*sin(x1)*cos(x3) + 0.1*cos(x2)*sin(x4)"
    pts = rand_points(m.chart, 3, 9)
    ctx = MetricContext(m, pts)
    ctxh = MetricContext(conformal_rescale(m, phi), pts)
    B = ctx.nbatch
    W = tensor4_values(curvature.weyl(ctx, 0), B)
    Wh = tensor4_values(curvature.weyl(ctxh, 0), B)
    f = np.exp(2.0 * (0.15 * np.sin(pts[0]) * np.cos(pts[2]) + 0.1 * np.cos(pts[1]) * np.sin(pts[3])))
    np.testing.assert_allclose(Wh, W * f, rtol=1e-7, atol=1e-10)


def test_schouten_conformal_law():
    from extrinsicq.geometry import conformal_rescale

    m = pert_t3()
    phi_text = "0.2*sin(x1) + 0.1*cos(x2)*sin(x3)"
    pts = rand_points(m.chart, 4, 10)
    ctx = MetricContext(m, pts)
    ctxh = MetricContext(conformal_rescale(m, phi_text), pts)
    B = ctx.nbatch
    phi = expression_field(parse_expression(phi_text, m.chart.names))
    dphi = differential(phi)
    rho = tensor2_values(curvature.schouten(ctx, 0), B)
    rhoh = tensor2_values(curvature.schouten(ctxh, 0), B)
    H = tensor2_values(hessian(phi)(ctx, 0), B)
    dp = np.array([jval(x, B) for x in dphi(ctx, 0)])
    g = tensor2_values(ctx.g(0), B)
    grad_sq = jval(inner11(dphi, dphi)(ctx, 0), B)
    want = rho - H + np.einsum("ib,jb->ijb", dp, dp) - 0.5 * grad_sq[None, None, :] * g
    np.testing.assert_allclose(rhoh, want, rtol=1e-8, atol=1e-10)


def test_low_dimension_guards():
    m = Metric.from_dict(torus_chart(2), {"g11": "1", "g22": "1"})
    ctx = MetricContext(m, np.array([[0.1], [0.2]]))
    with pytest.raises(JetError):
        curvature.schouten(ctx, 0)
    with pytest.raises(JetError):
        curvature.weyl(ctx, 0)
