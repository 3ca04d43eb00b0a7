"""Numerical verification: quadrature, integration, checks, suites, reports.

Every identity the operator stack is supposed to satisfy is recast here as a
CheckResult with an explicit error, scale, tolerance, and seed.  A check
passes iff its relative error (max abs error over a data-dependent scale,
floored at one) is below its tolerance.  Conformal checks always run a phi=0
control first, which must pass at the much tighter control tolerance; that
separates genuine transformation-law failures from loss of precision in the
evaluation pipeline itself.

Suites are fixed plans of (scenario, check) rows.  Randomness is drawn per
row from a seed derived from (config.seed, row index), so a report can be
reproduced bit for bit from its own config echo.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import curvature, jets
from . import hypersurface as hs
from . import operators as ops
from .exprlang import parse_expression
from .geometry import (
    Field,
    constant_field,
    differential,
    divergence2,
    divdiv,
    expression_field,
    laplacian,
    norm2sq,
    square2,
)
from .scenarios import ScenarioError, conf_phi, parse_scenario

SCHEMA_VERSION = 1

TOL_POINT = 1e-7
TOL_INTEGRAL = 1e-5
TOL_CONTROL = 1e-12

SUITES = ("structural", "intrinsic", "extrinsic", "global", "all")
_FOURTH_ORDER_SUITES = ("intrinsic", "extrinsic", "global", "all")


class ConfigError(ValueError):
    """Invalid verification configuration; message names the field."""


@dataclass(frozen=True)
class VerifyConfig:
    """Validated plan inputs.

    ``tol_point`` and ``tol_integral`` govern the generic conformal checks;
    checks with a sharper contract (sphere reduction, constants, structural
    residuals, the phi=0 controls) carry their own fixed tolerances.
    ``nodes`` counts quadrature nodes per periodic axis, ``gauss_nodes`` per
    bounded axis.
    """

    suite: str = "all"
    scenario: str = ""
    degree: int = 6
    nodes: int = 10
    gauss_nodes: int = 12
    seed: int = 1234
    tol_point: float = TOL_POINT
    tol_integral: float = TOL_INTEGRAL
    tol_control: float = TOL_CONTROL


_CONFIG_TYPES = {
    "suite": str,
    "scenario": str,
    "degree": int,
    "nodes": int,
    "gauss_nodes": int,
    "seed": int,
    "tol_point": float,
    "tol_integral": float,
    "tol_control": float,
}


def load_config(data):
    """Validate a mapping (parsed YAML/JSON or CLI flags) into a VerifyConfig.

    Errors name the offending field.  A suite containing fourth-order
    operators requires degree >= 5; the structural suite runs from degree 3.
    """
    if not isinstance(data, dict):
        raise ConfigError(f"config must be a mapping, got {type(data).__name__}")
    kwargs = {}
    for key, raw in data.items():
        if key not in _CONFIG_TYPES:
            known = ", ".join(sorted(_CONFIG_TYPES))
            raise ConfigError(f"{key}: unknown config field (known: {known})")
        want = _CONFIG_TYPES[key]
        if want is float:
            if not isinstance(raw, (int, float)) or isinstance(raw, bool):
                raise ConfigError(f"{key}: expected a number, got {raw!r}")
            val = float(raw)
        elif want is int:
            if not isinstance(raw, int) or isinstance(raw, bool):
                raise ConfigError(f"{key}: expected an integer, got {raw!r}")
            val = raw
        else:
            if not isinstance(raw, str):
                raise ConfigError(f"{key}: expected a string, got {raw!r}")
            val = raw
        kwargs[key] = val
    cfg = VerifyConfig(**kwargs)
    if cfg.suite not in SUITES:
        raise ConfigError(f"suite: unknown suite {cfg.suite!r} (known: {', '.join(SUITES)})")
    if not 0 <= cfg.seed:
        raise ConfigError(f"seed: must be non-negative, got {cfg.seed}")
    if cfg.nodes < 4:
        raise ConfigError(f"nodes: need at least 4 per periodic axis, got {cfg.nodes}")
    if cfg.gauss_nodes < 4:
        raise ConfigError(f"gauss_nodes: need at least 4 per bounded axis, got {cfg.gauss_nodes}")
    for key in ("tol_point", "tol_integral", "tol_control"):
        if not 0.0 < getattr(cfg, key):
            raise ConfigError(f"{key}: tolerance must be positive")
    if cfg.degree > jets.MAX_DEGREE:
        raise ConfigError(f"degree: jets stop at degree {jets.MAX_DEGREE}, got {cfg.degree}")
    if cfg.suite in _FOURTH_ORDER_SUITES:
        if cfg.degree < 5:
            raise ConfigError(
                f"degree: suite {cfg.suite!r} evaluates fourth-order operators and "
                f"requires degree >= 5, got {cfg.degree}"
            )
    elif cfg.degree < 3:
        raise ConfigError(
            f"degree: suite {cfg.suite!r} requires degree >= 3, got {cfg.degree}"
        )
    if cfg.scenario:
        try:
            parse_scenario(cfg.scenario)
        except ScenarioError as err:
            raise ConfigError(f"scenario: {err}") from None
    return cfg


# ---- quadrature and integration ----------------------------------------------


class Quadrature:
    """Tensor-product rule over a chart.

    Periodic axes get the uniform trapezoid rule (spectrally accurate for
    smooth periodic integrands); bounded axes get Gauss-Legendre, whose nodes
    are strictly interior, so charts may legitimately touch coordinate
    singularities at their boundary (the poles of a polar chart).  Weights
    are positive and sum to the chart measure.  Points are laid out
    axis-major (first axis slowest), so a rule is a reproducible function of
    (chart, nodes, gauss_nodes) alone.
    """

    __slots__ = ("chart", "points", "weights", "npoints", "nodes", "gauss_nodes")

    def __init__(self, chart, nodes=12, gauss_nodes=16):
        nodes = int(nodes)
        gauss_nodes = int(gauss_nodes)
        if nodes < 1 or gauss_nodes < 1:
            raise ConfigError("quadrature needs at least one node per axis")
        xs, ws = [], []
        for ax in chart.axes:
            span = ax.hi - ax.lo
            if ax.periodic:
                x = ax.lo + span * np.arange(nodes) / nodes
                w = np.full(nodes, span / nodes)
            else:
                t, u = np.polynomial.legendre.leggauss(gauss_nodes)
                x = ax.lo + 0.5 * span * (t + 1.0)
                w = 0.5 * span * u
            xs.append(x)
            ws.append(w)
        grids = np.meshgrid(*xs, indexing="ij")
        self.points = np.stack([g.reshape(-1) for g in grids])
        wk = ws[0]
        for nxt in ws[1:]:
            wk = np.multiply.outer(wk, nxt)
        self.weights = wk.reshape(-1)
        self.chart = chart
        self.npoints = self.weights.size
        self.nodes = nodes
        self.gauss_nodes = gauss_nodes


def _vals(jet, nbatch):
    v = np.atleast_1d(np.asarray(jet.value, dtype=np.float64))
    if v.size == 1 and nbatch != 1:
        return np.full(nbatch, v[0])
    return v


def _t1vals(row, nbatch):
    return np.stack([_vals(e, nbatch) for e in row], axis=-1)


def _t2vals(mat, nbatch):
    return np.stack([np.stack([_vals(e, nbatch) for e in row], axis=-1) for row in mat], axis=-2)


def _t4vals(t, nbatch):
    return np.stack(
        [np.stack([_t2vals(mn, nbatch) for mn in row], axis=-3) for row in t], axis=-4
    )


def integrate(fields, scenario, quad, degree_cap=6, chunk=1024, absolute=False):
    """Integrals of scalar fields against the scenario's volume form.

    Evaluates every field on shared per-chunk contexts, multiplies by the
    quadrature weight times sqrt(det g) (the induced metric on embedded
    scenarios), and compensates the final summation with math.fsum.  Returns
    the list of integrals, or (integrals, integrals of |field|) when
    ``absolute`` is set.  The quadrature must have been built on the
    scenario's own chart.
    """
    if quad.chart.axes != scenario.chart.axes:
        raise ConfigError(
            f"quadrature chart {quad.chart.names} does not match "
            f"scenario chart {scenario.chart.names}"
        )
    fields = list(fields)
    parts = [[] for _ in fields]
    aparts = [[] for _ in fields]
    for lo in range(0, quad.npoints, chunk):
        sl = slice(lo, min(lo + chunk, quad.npoints))
        pts = quad.points[:, sl]
        w = quad.weights[sl]
        nb = pts.shape[1]
        ctx = scenario.context(pts, degree_cap=degree_cap)
        gm = _t2vals(ctx.g(0), nb)
        dens = w * np.sqrt(np.linalg.det(gm))
        for k, f in enumerate(fields):
            term = dens * _vals(f(ctx, 0), nb)
            parts[k].append(term)
            if absolute:
                aparts[k].append(np.abs(term))
    totals = [math.fsum(np.concatenate(p)) for p in parts]
    if absolute:
        return totals, [math.fsum(np.concatenate(p)) for p in aparts]
    return totals


# ---- check results -------------------------------------------------------------


@dataclass
class CheckResult:
    """One verified identity: pass iff rel_err < tol."""

    check: str
    scenario: str
    samples: int
    max_abs_err: float
    scale: float
    rel_err: float
    tol: float
    passed: bool
    seed: int

    @classmethod
    def build(cls, check, scenario, samples, err, scale, tol, seed):
        scale = float(max(scale, 1.0))
        err = float(err)
        rel = err / scale
        return cls(
            check=check,
            scenario=scenario,
            samples=int(samples),
            max_abs_err=err,
            scale=scale,
            rel_err=rel,
            tol=float(tol),
            passed=bool(rel < tol),
            seed=int(seed),
        )

    def as_dict(self):
        return asdict(self)


# ---- random test data -----------------------------------------------------------


def _sfield(text, chart):
    return expression_field(parse_expression(text, chart.names))


def _phi_field(scn, text):
    # conformal factors live on the ambient manifold of an embedded scenario
    if scn.kind == "embedded":
        return hs.ambient_expression_field(text, scn.ambient_chart)
    return _sfield(text, scn.chart)


def _random_text(basis, rng, amplitude=0.2):
    coeffs = rng.uniform(-amplitude, amplitude, size=len(basis))
    return " + ".join(f"({float(c)!r})*({b})" for c, b in zip(coeffs, basis))


def _points(scn, count, rng):
    cols = []
    for ax in scn.chart.axes:
        span = ax.hi - ax.lo
        if ax.periodic:
            cols.append(ax.lo + rng.random(count) * span)
        else:
            pad = 0.1 * span
            cols.append(ax.lo + pad + rng.random(count) * (span - 2.0 * pad))
    return np.stack(cols)


def _npoints(dim):
    return {2: 12, 3: 10, 4: 8}.get(dim, 4)


def _exp_weight(phi_field, weight):
    if weight == 0.0:
        return constant_field(1.0)
    return Field(0, lambda ctx, d: jets.exp(phi_field(ctx, d) * float(weight)))


# ---- conformal covariance -------------------------------------------------------

_COVARIANT_OPS = {
    "p2": (ops.p2, 2, "intrinsic"),
    "p4": (ops.p4, 4, "intrinsic"),
    "ext_p2": (ops.ext_p2, 2, "embedded"),
    "ext_p3": (ops.ext_p3, 3, "embedded"),
    "ext_p4_umbilic": (ops.ext_p4_umbilic, 4, "embedded"),
    "ext_p4_critical": (ops.ext_p4_critical, 4, "embedded"),
}


def _covariance_defect(scn, make_op, order, phi_text, f_text, cfg, pts):
    """max |Op(e^{w_in phi} f) - e^{w_out phi} Op_hat(f)| over the points.

    Here Op acts in the scenario's metric, Op_hat in the one rescaled by
    e^{2 phi}; w_out = (n + order)/2 and w_in = (n - order)/2 in the surface
    dimension n, so for intrinsic operators of order 2N these are the usual
    conformal bidegrees n/2 +- N.
    """
    n = scn.dim
    w_in, w_out = 0.5 * (n - order), 0.5 * (n + order)
    hat = scn.rescaled(phi_text)
    base_ctx = scn.context(pts, degree_cap=cfg.degree)
    hat_ctx = hat.context(pts, degree_cap=cfg.degree)
    nb = pts.shape[1]
    f = _sfield(f_text, scn.chart)
    phi = _phi_field(scn, phi_text)
    fin = _exp_weight(phi, w_in) * f
    lhs = _vals(make_op(fin)(base_ctx, 0), nb)
    phiv = _vals(phi(base_ctx, 0), nb)
    rhs = np.exp(w_out * phiv) * _vals(make_op(f)(hat_ctx, 0), nb)
    err = float(np.max(np.abs(lhs - rhs)))
    scale = float(max(np.max(np.abs(lhs)), np.max(np.abs(rhs))))
    return err, scale, nb


def check_covariance(scn, op_name, cfg, seed, pairs=1):
    """Conformal covariance of one operator on one scenario.

    Emits the phi=0 control first, then the aggregated defect over ``pairs``
    random (phi, f) draws.
    """
    make_op, order, kind = _COVARIANT_OPS[op_name]
    if kind == "embedded" and scn.kind != "embedded":
        raise ConfigError(f"{op_name} needs an embedded scenario, got {scn.name}")
    name = f"{op_name}_covariance"
    rng = np.random.default_rng(seed)
    pts = _points(scn, _npoints(scn.dim), rng)
    phi_basis = scn.ambient_basis if scn.kind == "embedded" else scn.basis
    out = []
    err0, scale0, nb0 = _covariance_defect(
        scn, make_op, order, "0", _random_text(scn.basis, rng), cfg, pts
    )
    out.append(
        CheckResult.build(f"{name}[phi=0]", scn.name, nb0, err0, scale0, cfg.tol_control, seed)
    )
    err, scale, total = 0.0, 1.0, 0
    for _ in range(pairs):
        e, s, nb = _covariance_defect(
            scn, make_op, order,
            _random_text(phi_basis, rng), _random_text(scn.basis, rng), cfg, pts,
        )
        err, scale, total = max(err, e), max(scale, s), total + nb
    out.append(CheckResult.build(name, scn.name, total, err, scale, cfg.tol_point, seed))
    return out


# ---- Q-curvature transformation laws -------------------------------------------


def _q_law_pieces(which):
    if which == "q2":
        return ops.q2, ops.p2, 2, -1.0, "intrinsic", False
    if which == "ext_q2":
        return ops.ext_q2, ops.ext_p2, 2, -1.0, "embedded", False
    if which == "ext_q3":
        return ops.ext_q3, ops.ext_p3, 3, +1.0, "embedded", False
    if which == "q4":
        return ops.q4, ops.p4, 4, +1.0, "intrinsic", False
    if which == "ext_q4":
        return ops.ext_q4_umbilic, ops.ext_p4_umbilic, 4, +1.0, "embedded", True
    raise ConfigError(f"unknown Q-curvature law {which!r}")


def _q_law_defect(scn, which, phi_text, cfg, pts):
    q_op, p_op, n, sign, kind, _ = _q_law_pieces(which)
    if scn.dim != n:
        raise ConfigError(f"{which} law lives in dimension {n}, scenario has {scn.dim}")
    if kind == "embedded" and scn.kind != "embedded":
        raise ConfigError(f"{which} law needs an embedded scenario")
    hat = scn.rescaled(phi_text)
    base_ctx = scn.context(pts, degree_cap=cfg.degree)
    hat_ctx = hat.context(pts, degree_cap=cfg.degree)
    nb = pts.shape[1]
    phi = _phi_field(scn, phi_text)
    phiv = _vals(phi(base_ctx, 0), nb)
    lhs = np.exp(n * phiv) * _vals(q_op()(hat_ctx, 0), nb)
    rhs = _vals(q_op()(base_ctx, 0), nb) + sign * _vals(p_op(phi)(base_ctx, 0), nb)
    err = float(np.max(np.abs(lhs - rhs)))
    scale = float(max(np.max(np.abs(lhs)), np.max(np.abs(rhs))))
    return err, scale, nb


def check_q_law(scn, which, cfg, seed, pairs=1):
    """The law e^{n phi} Q_hat = Q -+ P(phi); minus in dimension two."""
    rng = np.random.default_rng(seed)
    pts = _points(scn, _npoints(scn.dim), rng)
    phi_basis = scn.ambient_basis if scn.kind == "embedded" else scn.basis
    name = f"{which}_law"
    out = []
    err0, scale0, nb0 = _q_law_defect(scn, which, "0", cfg, pts)
    out.append(
        CheckResult.build(f"{name}[phi=0]", scn.name, nb0, err0, scale0, cfg.tol_control, seed)
    )
    err, scale, total = 0.0, 1.0, 0
    for _ in range(pairs):
        e, s, nb = _q_law_defect(scn, which, _random_text(phi_basis, rng), cfg, pts)
        err, scale, total = max(err, e), max(scale, s), total + nb
    out.append(CheckResult.build(name, scn.name, total, err, scale, cfg.tol_point, seed))
    return out


# ---- pointwise invariant --------------------------------------------------------


def check_c_invariance(scn, cfg, seed, phis=3):
    """e^{4 phi} C_hat = C pointwise on a non-umbilic 4-dimensional surface."""
    if scn.dim != 4 or scn.kind != "embedded":
        raise ConfigError("the pointwise invariant lives on 4-dimensional hypersurfaces")
    rng = np.random.default_rng(seed)
    pts = _points(scn, _npoints(4), rng)
    nb = pts.shape[1]
    base_ctx = scn.context(pts, degree_cap=cfg.degree)
    base = _vals(ops.c_invariant()(base_ctx, 0), nb)
    out = []

    def defect(phi_text):
        hat = scn.rescaled(phi_text)
        hat_ctx = hat.context(pts, degree_cap=cfg.degree)
        phiv = _vals(_phi_field(scn, phi_text)(base_ctx, 0), nb)
        lhs = np.exp(4.0 * phiv) * _vals(ops.c_invariant()(hat_ctx, 0), nb)
        return float(np.max(np.abs(lhs - base))), float(np.max(np.abs(base)))

    err0, scale0 = defect("0")
    out.append(
        CheckResult.build("c_invariance[phi=0]", scn.name, nb, err0, scale0, cfg.tol_control, seed)
    )
    err, scale = 0.0, 1.0
    for _ in range(phis):
        e, s = defect(_random_text(scn.ambient_basis, rng))
        err, scale = max(err, e), max(scale, s)
    out.append(
        CheckResult.build("c_invariance", scn.name, nb * phis, err, scale, cfg.tol_point, seed)
    )
    return out


# ---- umbilic normal-derivative identity ----------------------------------------


def check_normal_derivative_identity(scn, cfg, seed):
    """The umbilic identity relating delta(nabla_0 rho), the Laplacian of
    rho(nu,nu) + H^2, and delta delta W; residual is checked pointwise."""
    rng = np.random.default_rng(seed)
    pts = _points(scn, _npoints(scn.dim), rng)
    nb = pts.shape[1]
    ctx = scn.context(pts, degree_cap=cfg.degree)
    res = _vals(ops.normal_derivative_identity()(ctx, 0), nb)
    ingredient = laplacian(
        ops.rho_bar_nn_field() + ops.mean_curvature_field() * ops.mean_curvature_field()
    )
    scale = float(np.max(np.abs(_vals(ingredient(ctx, 0), nb))))
    return [
        CheckResult.build(
            "normal_derivative_identity",
            scn.name,
            nb,
            float(np.max(np.abs(res))),
            scale,
            1e-8,
            seed,
        )
    ]


# ---- reductions and frozen values -----------------------------------------------


def check_sphere_reduction(scn, cfg, seed):
    """In a flat ambient the extrinsic P4 and Q4 reduce to the intrinsic ones."""
    rng = np.random.default_rng(seed)
    pts = _points(scn, _npoints(scn.dim), rng)
    nb = pts.shape[1]
    ctx = scn.context(pts, degree_cap=cfg.degree)
    f = _sfield(_random_text(scn.basis, rng), scn.chart)
    pe = _vals(ops.ext_p4_umbilic(f)(ctx, 0), nb)
    pi = _vals(ops.p4(f)(ctx, 0), nb)
    qe = _vals(ops.ext_q4_umbilic()(ctx, 0), nb)
    qi = _vals(ops.q4()(ctx, 0), nb)
    return [
        CheckResult.build(
            "ext_p4_reduces_to_p4",
            scn.name,
            nb,
            float(np.max(np.abs(pe - pi))),
            float(np.max(np.abs(pi))),
            1e-10,
            seed,
        ),
        CheckResult.build(
            "ext_q4_reduces_to_q4",
            scn.name,
            nb,
            float(np.max(np.abs(qe - qi))),
            float(np.max(np.abs(qi))),
            1e-10,
            seed,
        ),
    ]


def check_slice_values(scn, cfg, seed):
    """Frozen values on the S2(1) x S2(2) slice: the ambient-curvature
    correction Q4_ext - Q4 equals 9/32 and Q4_ext itself equals 25/96."""
    rng = np.random.default_rng(seed)
    pts = _points(scn, _npoints(scn.dim), rng)
    nb = pts.shape[1]
    ctx = scn.context(pts, degree_cap=cfg.degree)
    corr = _vals((ops.ext_q4_umbilic() - ops.q4())(ctx, 0), nb)
    qe = _vals(ops.ext_q4_umbilic()(ctx, 0), nb)
    return [
        CheckResult.build(
            "slice_correction_value",
            scn.name,
            nb,
            float(np.max(np.abs(corr - 9.0 / 32.0))),
            9.0 / 32.0,
            1e-9,
            seed,
        ),
        CheckResult.build(
            "slice_ext_q4_value",
            scn.name,
            nb,
            float(np.max(np.abs(qe - 25.0 / 96.0))),
            25.0 / 96.0,
            1e-9,
            seed,
        ),
    ]


def check_sphere_q3(scn, cfg, seed):
    """On the round sphere in flat space the Fialkow tensor and the
    third-order extrinsic Q both vanish."""
    rng = np.random.default_rng(seed)
    pts = _points(scn, _npoints(scn.dim), rng)
    nb = pts.shape[1]
    ctx = scn.context(pts, degree_cap=cfg.degree)
    fia = _t2vals(ops.fialkow_field()(ctx, 0), nb)
    q3 = _vals(ops.ext_q3()(ctx, 0), nb)
    return [
        CheckResult.build(
            "sphere_fialkow_vanishes",
            scn.name,
            nb,
            float(np.max(np.abs(fia))),
            1.0,
            1e-10,
            seed,
        ),
        CheckResult.build(
            "sphere_ext_q3_vanishes", scn.name, nb, float(np.max(np.abs(q3))), 1.0, 1e-10, seed
        ),
    ]


def check_ext_p4_constants(scn, cfg, seed):
    """The critical extrinsic P4 has no zeroth-order term: P4(1) = 0."""
    rng = np.random.default_rng(seed)
    pts = _points(scn, _npoints(scn.dim), rng)
    nb = pts.shape[1]
    ctx = scn.context(pts, degree_cap=cfg.degree)
    v = _vals(ops.ext_p4_critical(constant_field(1.0))(ctx, 0), nb)
    return [
        CheckResult.build(
            "ext_p4_kills_constants", scn.name, nb, float(np.max(np.abs(v))), 1.0, 1e-10, seed
        )
    ]


# ---- integral checks ------------------------------------------------------------


def check_self_adjoint(scn, cfg, seed):
    """integral of f P4(g) equals integral of g P4(f) for the critical
    extrinsic operator (formal self-adjointness, no boundary here)."""
    rng = np.random.default_rng(seed)
    quad = Quadrature(scn.chart, cfg.nodes, cfg.gauss_nodes)
    f = _sfield(_random_text(scn.basis, rng), scn.chart)
    g = _sfield(_random_text(scn.basis, rng), scn.chart)
    a, b = integrate(
        [f * ops.ext_p4_critical(g), g * ops.ext_p4_critical(f)],
        scn,
        quad,
        degree_cap=cfg.degree,
    )
    return [
        CheckResult.build(
            "ext_p4_self_adjoint",
            scn.name,
            quad.npoints,
            abs(a - b),
            max(abs(a), abs(b)),
            cfg.tol_point,
            seed,
        )
    ]


def check_gauss_bonnet(scn, cfg, seed):
    """In dimension four, integral of Q4 + |W|^2/4 equals 8 pi^2 chi."""
    if scn.dim != 4:
        raise ConfigError(f"Gauss-Bonnet check needs a 4-dimensional scenario, got {scn.dim}")
    if scn.euler is None:
        raise ConfigError(f"scenario {scn.name} has no recorded Euler characteristic")
    quad = Quadrature(scn.chart, cfg.nodes, cfg.gauss_nodes)
    integrand = ops.q4() + Field(0, curvature.weyl_norm_sq) * 0.25
    (total,), (absolute,) = integrate(
        [integrand], scn, quad, degree_cap=cfg.degree, absolute=True
    )
    target = 8.0 * math.pi**2 * scn.euler
    return [
        CheckResult.build(
            "gauss_bonnet",
            scn.name,
            quad.npoints,
            abs(total - target),
            max(abs(target), absolute),
            cfg.tol_integral,
            seed,
        )
    ]


def _total_q4_fields():
    return [ops.integrand_i1() + ops.integrand_i2() + ops.integrand_i3()]


def check_global_invariant(scn, cfg, seed, expected=None):
    """The total fourth-order extrinsic curvature integral is unchanged by a
    conformal rescaling of the ambient metric.  ``expected`` additionally
    pins the base value (closed form, where one is known).

    The phi=0 control compares the integrand pointwise on one chunk of the
    quadrature grid; a second full integration pass would only re-test the
    summation."""
    quad = Quadrature(scn.chart, cfg.nodes, cfg.gauss_nodes)
    field = _total_q4_fields()[0]
    (base,), (absolute,) = integrate(
        [field], scn, quad, degree_cap=cfg.degree, absolute=True
    )
    out = []
    nb = min(256, quad.npoints)
    cpts = quad.points[:, :nb]
    bvals = _vals(field(scn.context(cpts, degree_cap=cfg.degree), 0), nb)
    cvals = _vals(field(scn.rescaled("0").context(cpts, degree_cap=cfg.degree), 0), nb)
    out.append(
        CheckResult.build(
            "total_q4_invariance[phi=0]",
            scn.name,
            nb,
            float(np.max(np.abs(cvals - bvals))),
            float(np.max(np.abs(bvals))),
            cfg.tol_control,
            seed,
        )
    )
    phi = conf_phi(
        scn.name,
        round_s=scn.name.startswith("ROUND_S("),
        sphere_in_flat=scn.name.startswith("SPHERE_IN_FLAT("),
    )
    (hat,) = integrate([field], scn.rescaled(phi), quad, degree_cap=cfg.degree)
    out.append(
        CheckResult.build(
            "total_q4_invariance",
            scn.name,
            quad.npoints,
            abs(hat - base),
            max(abs(base), absolute),
            cfg.tol_integral,
            seed,
        )
    )
    if expected is not None:
        out.append(
            CheckResult.build(
                "total_q4_value",
                scn.name,
                quad.npoints,
                abs(base - expected),
                abs(expected),
                cfg.tol_integral,
                seed,
            )
        )
    return out


def check_divergence_integrals(scn, cfg, seed):
    """Total divergences integrate to zero on a closed hypersurface."""
    lo = ops.tracefree_shape_field()
    fields = [
        divdiv(ops.normal_weyl_field()),
        divdiv(square2(lo)),
        laplacian(norm2sq(lo)),
    ]
    names = ["divdiv_normal_weyl", "divdiv_shape_squared", "laplacian_shape_norm"]
    quad = Quadrature(scn.chart, cfg.nodes, cfg.gauss_nodes)
    totals, absolutes = integrate(fields, scn, quad, degree_cap=cfg.degree, absolute=True)
    return [
        CheckResult.build(
            f"divergence_integral[{nm}]",
            scn.name,
            quad.npoints,
            abs(t),
            a,
            1e-7,
            seed,
        )
        for nm, t, a in zip(names, totals, absolutes)
    ]


def check_q4_audit(scn, gb_scn, cfg, seed):
    """The |rho|^2 coefficient in Q4: 2 is shipped, 1 is the candidate it was
    audited against.  The shipped value must pass both the n=4 covariance of
    P4 and Gauss-Bonnet on the round 4-sphere; the rejected value must fail
    at least one of the two by more than a factor-level margin (1e-2).

    In the critical dimension P4 itself carries Q4 with coefficient n/2 - 2
    = 0, so the n=4 operator is blind to the choice and the rejection is
    carried by the Gauss-Bonnet leg (off by |rho|^2 vol(S4) = 8 pi^2/3).
    For the rejection result the reported error is the shortfall of the
    wrong coefficient's defect below the margin, zero when clearly rejected.
    """
    rng = np.random.default_rng(seed)
    pts = _points(scn, _npoints(scn.dim), rng)
    phi_text = _random_text(scn.basis, rng)
    f_text = _random_text(scn.basis, rng)
    out = []
    cov = {}
    for c in (2.0, 1.0):
        err, scale, nb = _covariance_defect(
            scn, lambda fld, c=c: ops.p4(fld, c_rho=c), 4, phi_text, f_text, cfg, pts
        )
        cov[c] = err / max(scale, 1.0)
        if c == 2.0:
            out.append(
                CheckResult.build(
                    "q4_audit[c=2 covariance]", scn.name, nb, err, scale, cfg.tol_point, seed
                )
            )
    quad = Quadrature(gb_scn.chart, cfg.nodes, cfg.gauss_nodes)
    totals = integrate(
        [ops.q4(c_rho=2.0), ops.q4(c_rho=1.0)], gb_scn, quad, degree_cap=cfg.degree
    )
    target = 16.0 * math.pi**2
    gb = {c: abs(t - target) / target for c, t in zip((2.0, 1.0), totals)}
    out.append(
        CheckResult.build(
            "q4_audit[c=2 gauss_bonnet]",
            gb_scn.name,
            quad.npoints,
            abs(totals[0] - target),
            target,
            1e-6,
            seed,
        )
    )
    margin = 1e-2
    shortfall = max(0.0, margin - max(gb[1.0], cov[1.0]))
    out.append(
        CheckResult.build(
            "q4_audit[c=1 rejected]",
            gb_scn.name,
            quad.npoints + pts.shape[1],
            shortfall,
            1.0,
            cfg.tol_point,
            seed,
        )
    )
    good_passes = cov[2.0] < cfg.tol_point and gb[2.0] < 1e-6
    bad_fails = max(gb[1.0], cov[1.0]) > margin
    out.append(
        CheckResult.build(
            "q4_audit[exactly one passes]",
            gb_scn.name,
            quad.npoints + pts.shape[1],
            0.0 if (good_passes and bad_fails) else 1.0,
            1.0,
            cfg.tol_point,
            seed,
        )
    )
    return out


# ---- structural identities ------------------------------------------------------


def check_structural(scn, cfg, seed):
    """Trace, symmetry, and Bianchi residuals; conformal weights of the
    extrinsic tensors on embedded scenarios.

    An embedded scenario spends one jet degree on the embedding map, so the
    configured degree is bumped by one there; the suite's degree floor of 3
    refers to the metric jets themselves.
    """
    rng = np.random.default_rng(seed)
    pts = _points(scn, _npoints(scn.dim), rng)
    nb = pts.shape[1]
    cap = cfg.degree + (1 if scn.kind == "embedded" else 0)
    ctx = scn.context(pts, degree_cap=min(cap, jets.MAX_DEGREE))
    n = scn.dim
    tol = 1e-9
    out = []

    def emit(name, residual, scale=1.0):
        out.append(
            CheckResult.build(name, scn.name, nb, float(np.max(np.abs(residual))), scale, tol, seed)
        )

    # arrays here are batch-first: R is (nb, i, j, k, l)
    R = _t4vals(curvature.riemann(ctx, 0), nb)
    first = R + np.moveaxis(R, [2, 3, 4], [3, 4, 2]) + np.moveaxis(R, [2, 3, 4], [4, 2, 3])
    emit("bianchi_first", first, float(np.max(np.abs(R))))
    div_rho = _t1vals(divergence2(Field(2, curvature.schouten))(ctx, 0), nb)
    dj = _t1vals(differential(Field(0, curvature.jfun))(ctx, 0), nb)
    emit("bianchi_second_contracted", div_rho - dj, float(np.max(np.abs(dj))))
    if n >= 4:
        # the Weyl tensor is identically zero in dimension three
        W = _t4vals(curvature.weyl(ctx, 0), nb)
        ginv = np.linalg.inv(_t2vals(ctx.g(0), nb))
        tr = np.einsum("bik,bijkl->bjl", ginv, W)
        emit("weyl_tracefree", tr, float(np.max(np.abs(W))))
    if scn.kind == "embedded":
        hinv = np.linalg.inv(_t2vals(ctx.g(0), nb))
        L = _t2vals(hs.second_fundamental(ctx, 0), nb)
        H = _vals(hs.mean_curvature(ctx, 0), nb)
        emit("shape_trace", np.einsum("bij,bij->b", hinv, L) - n * H,
             float(np.max(np.abs(H))) * n)
        Lo = _t2vals(ops.tracefree_shape_field()(ctx, 0), nb)
        emit("tracefree_shape_trace", np.einsum("bij,bij->b", hinv, Lo),
             float(np.max(np.abs(Lo))))
        Wn = _t2vals(ops.normal_weyl_field()(ctx, 0), nb)
        emit("normal_weyl_trace", np.einsum("bij,bij->b", hinv, Wn),
             float(np.max(np.abs(Wn))))
        phi_text = conf_phi(
            scn.name,
            round_s=scn.name.startswith("ROUND_S("),
            sphere_in_flat=scn.name.startswith("SPHERE_IN_FLAT("),
        )
        hat_ctx = scn.rescaled(phi_text).context(pts, degree_cap=min(cap, jets.MAX_DEGREE))
        phiv = _vals(_phi_field(scn, phi_text)(ctx, 0), nb)
        for nm, fld, weight in (
            ("tracefree_shape_weight", ops.tracefree_shape_field(), 1.0),
            ("normal_weyl_weight", ops.normal_weyl_field(), 0.0),
            ("fialkow_weight", ops.fialkow_field(), 0.0),
        ):
            base = _t2vals(fld(ctx, 0), nb)
            hatv = _t2vals(fld(hat_ctx, 0), nb)
            factor = np.exp(weight * phiv)[..., None, None]
            out.append(
                CheckResult.build(
                    nm,
                    scn.name,
                    nb,
                    float(np.max(np.abs(hatv - factor * base))),
                    float(np.max(np.abs(base))),
                    1e-8,
                    seed,
                )
            )
    return out


# ---- suite plans ----------------------------------------------------------------


def _plan(cfg):
    rows = []

    def row(scenario_text, fn):
        rows.append((scenario_text, fn))

    if cfg.suite in ("structural", "all"):
        for name in (
            "PERT_T3",
            "PERT_T4",
            "ROUND_S(3,1.3)",
            "SLICE(S2xS2)",
            "GRAPH(T3_IN_T4)",
            "GRAPH(T4_IN_PERT_T5)",
        ):
            row(name, lambda s, c, sd: check_structural(s, c, sd))

    if cfg.suite in ("intrinsic", "all"):
        for name in ("FLAT_T2", "PERT_T3", "CONF_PERTURBED(ROUND_S(4,1))"):
            row(name, lambda s, c, sd: check_covariance(s, "p2", c, sd))
        for name in ("PERT_T4", "CONF_PERTURBED(FLAT_T4)", "PERT_T5"):
            row(name, lambda s, c, sd: check_covariance(s, "p4", c, sd))
        row("PERT_T4", lambda s, c, sd: check_q_law(s, "q4", c, sd))
        row(
            "PERT_T4",
            lambda s, c, sd: check_q4_audit(s, parse_scenario("ROUND_S(4,1)"), c, sd),
        )

    if cfg.suite in ("extrinsic", "all"):
        row("GRAPH(T2_IN_T3)", lambda s, c, sd: check_q_law(s, "ext_q2", c, sd))
        row("GRAPH(T3_IN_T4)", lambda s, c, sd: check_q_law(s, "ext_q3", c, sd))
        row("GRAPH(T2_IN_T3)", lambda s, c, sd: check_covariance(s, "ext_p2", c, sd))
        row("GRAPH(T3_IN_T4)", lambda s, c, sd: check_covariance(s, "ext_p3", c, sd))
        row("GRAPH(T4_IN_T5)", lambda s, c, sd: check_covariance(s, "ext_p3", c, sd))
        row("GRAPH(T4_IN_PERT_T5)", lambda s, c, sd: check_covariance(s, "ext_p4_critical", c, sd))
        row("GRAPH(T4_IN_T5)", lambda s, c, sd: check_ext_p4_constants(s, c, sd))
        row("GRAPH(T4_IN_T5)", lambda s, c, sd: check_self_adjoint(s, c, sd))
        row("GRAPH(T4_IN_PERT_T5)", lambda s, c, sd: check_c_invariance(s, c, sd))
        row("GRAPH(T4_IN_T5)", lambda s, c, sd: check_c_invariance(s, c, sd))
        row("SPHERE_IN_FLAT(4,1)", lambda s, c, sd: check_sphere_reduction(s, c, sd))
        row("SPHERE_IN_FLAT(3,1)", lambda s, c, sd: check_sphere_q3(s, c, sd))
        row("SLICE(S2xS2)", lambda s, c, sd: check_slice_values(s, c, sd))
        row("SLICE(S2xS2)", lambda s, c, sd: check_q_law(s, "ext_q4", c, sd))
        row(
            "CONF_PERTURBED(SLICE(PERT_T3))",
            lambda s, c, sd: check_normal_derivative_identity(s, c, sd),
        )
        row(
            "CONF_PERTURBED(SLICE(PERT_T4))",
            lambda s, c, sd: check_normal_derivative_identity(s, c, sd),
        )

    if cfg.suite in ("global", "all"):
        row("ROUND_S(4,1)", lambda s, c, sd: check_gauss_bonnet(s, c, sd))
        row("FLAT_T4", lambda s, c, sd: check_gauss_bonnet(s, c, sd))
        row("PERT_T4", lambda s, c, sd: check_gauss_bonnet(s, c, sd))
        row("SLICE(S2xS2)", lambda s, c, sd: check_gauss_bonnet(s, c, sd))
        row(
            "SLICE(S2xS2)",
            lambda s, c, sd: check_global_invariant(s, c, sd, expected=50.0 * math.pi**2 / 3.0),
        )
        row("GRAPH(T4_IN_T5)", lambda s, c, sd: check_global_invariant(s, c, sd))
        row("GRAPH(T4_IN_PERT_T5)", lambda s, c, sd: check_divergence_integrals(s, c, sd))

    if cfg.scenario:
        rows = [(name, fn) for name, fn in rows if name == cfg.scenario]
        if not rows:
            raise ConfigError(
                f"scenario: {cfg.scenario!r} does not appear in suite {cfg.suite!r}"
            )
    return rows


def _row_seed(base, index):
    return int(np.random.SeedSequence((base, index)).generate_state(1)[0])


def run_suite(cfg, emit=None):
    """Execute the plan for ``cfg`` and return the aggregate report dict.

    ``emit``, when given, receives each CheckResult dict as it is produced
    (the CLI streams these as JSON lines).  The report embeds the full config
    so a run can be reproduced bit for bit from its own output.
    """
    rows = _plan(cfg)
    by_scenario = {}
    order = []
    for idx, (scn_text, fn) in enumerate(rows):
        scn = parse_scenario(scn_text)
        results = fn(scn, cfg, _row_seed(cfg.seed, idx))
        if scn_text not in by_scenario:
            by_scenario[scn_text] = []
            order.append(scn_text)
        for res in results:
            d = res.as_dict()
            by_scenario[scn_text].append(d)
            if emit is not None:
                emit(d)
    all_checks = [c for name in order for c in by_scenario[name]]
    return {
        "schema_version": SCHEMA_VERSION,
        "suite": cfg.suite,
        "config": asdict(cfg),
        "scenarios": [{"name": name, "checks": by_scenario[name]} for name in order],
        "passed": all(c["passed"] for c in all_checks),
        "counts": {
            "passed": sum(1 for c in all_checks if c["passed"]),
            "failed": sum(1 for c in all_checks if not c["passed"]),
        },
    }


_CSV_COLUMNS = (
    "scenario",
    "check",
    "samples",
    "max_abs_err",
    "scale",
    "rel_err",
    "tol",
    "passed",
    "seed",
)


def report_csv(report):
    """Flatten an aggregate report to CSV, one row per check."""
    lines = [",".join(_CSV_COLUMNS)]
    for block in report["scenarios"]:
        for c in block["checks"]:
            cells = []
            for col in _CSV_COLUMNS:
                v = c[col]
                if isinstance(v, bool):
                    cells.append("true" if v else "false")
                elif isinstance(v, float):
                    cells.append(repr(v))
                else:
                    cells.append(str(v).replace(",", ";"))
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
