"""Scenario registry: each entry composes the library into one verification experiment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from ..classflow import (FlowSpec, PhasePoint, escape_bound_scan, flow_exact_harmonic,
                         flow_numeric, symplectic_check, check_scaling_identity)
from ..fields import check_assumption_A, eval_symbols, field_from_spec, make_field
from ..quantum import (PropagatorSpec, SpatialGrid, WaveFunction, apply_weyl, coherent_state,
                       fourier_transform, harmonic_phase_map, propagate_H0_exact,
                       propagate_H_numeric, _smooth_window)
from ..scattering import (check_evolution_scaling, classical_recurrence_check, high_energy_limit,
                          inverse_scattering_evolution, inverse_scattering_map, recurrence_map,
                          resonance_structure, scattering_evolution, scattering_map, tilde_gamma)
from ..wavefront import DEFAULT_H, PhaseGrid, decay_exponent, detect_peak, wf_detect
from .results import Context

PI = float(np.pi)
BUMP = {"family": "rational", "dimension": 1, "mu": 2.0, "params": {"c": 0.5}}


@dataclass(frozen=True)
class Scenario:
    name: str
    statement: str
    defaults: dict
    run: Callable[[object, Context], None]


REGISTRY: dict[str, Scenario] = {}


def scenario(name: str, statement: str, **defaults):
    def wrap(fn):
        d = {"schema_version": 1, "scenario": name, "seed": 0}
        d.update(defaults)
        REGISTRY[name] = Scenario(name, statement, d, fn)
        return fn
    return wrap


def _pt(x, xi) -> dict:
    return {"x": list(np.atleast_1d(x).astype(float)), "xi": list(np.atleast_1d(xi).astype(float))}


# ---------------------------------------------------------------------------
# grids for semiclassical packets


def packet_grid(field, X: PhasePoint, h: float) -> SpatialGrid:
    """Grid holding a width-sqrt(h) packet on the energy shell of X for all times.

    Position reach is sqrt(2E)/h, momentum reach sqrt(2E/a_min)/h, each
    padded by a multiple of the packet width.
    """
    sym = eval_symbols(field, X.x, X.xi)
    energy = max(float(sym.p), 0.5 * float(X.x @ X.x + X.xi @ X.xi))
    reach = np.sqrt(2 * energy)
    L = reach / h + 7.0 / np.sqrt(h) + 2.0
    probe = np.linspace(-L, L, 2001)[:, None]
    a_min = float(np.min(field.metric(probe)[:, 0, 0]))
    kmax = np.sqrt(2 * energy / min(a_min, 1.0)) / h + 10.0 / np.sqrt(h)
    N = int(2 ** np.ceil(np.log2(2 * L * kmax / PI)))
    return SpatialGrid((L,), (N,))


def _c_stable(errors, hs):
    """err/sqrt(h) per h and the ratio of the largest to the coarsest value."""
    C = np.asarray(errors) / np.sqrt(np.asarray(hs))
    return C, float(np.max(C) / C[0])


# ---------------------------------------------------------------------------
# classical flows


@scenario("flow_flat_exact", "numeric Hamiltonian flow of the flat oscillator equals the exact rotation",
          field={"family": "flat", "dimension": 2, "nu": [1.0, 1.4142135623730951]}, samples=20,
          tolerances={"flow": 1e-12})
def _flow_flat_exact(cfg, ctx):
    field = cfg.field()
    rng = cfg.rng()
    n = field.dimension
    rtol = cfg.tol("flow", 1e-12)
    spec = FlowSpec("p", None, rtol, max(1e-13, rtol * 1e-2))
    rows, errs, drifts, defects = [], [], [], []
    for k in range(cfg.raw["samples"]):
        t = float(rng.uniform(-2 * PI, 2 * PI))
        X = PhasePoint(rng.uniform(-2, 2, n), rng.uniform(-2, 2, n))
        traj = flow_numeric(field, spec, (0.0, t), X)
        err = traj.endpoint.distance(flow_exact_harmonic(field.nu, 1.0, t, X))
        defect = symplectic_check(field, spec, t, X) if k < 5 else float("nan")
        errs.append(err)
        drifts.append(traj.energy_drift)
        if k < 5:
            defects.append(defect)
        rows.append([k, t, err, traj.energy_drift, defect])
    ctx.table("flow_errors", ["sample", "t", "error", "energy_drift", "symplectic_defect"], rows)
    ctx.check("max flow error", max(errs), 1e-8)
    ctx.check("max relative energy drift", max(drifts), 1e-9)
    ctx.check("max symplectic defect", max(defects), 1e-6)


SCALING_FIELDS = [
    BUMP,
    {"family": "offdiag", "dimension": 2, "mu": 2.0, "params": {"c": 0.4}},
    {"family": "gaussian", "dimension": 2, "mu": 2.0, "params": {"c": 0.3, "width": 1.0},
     "nu": [1.0, 1.5]},
    {"family": "potential", "dimension": 1, "mu": 2.5, "params": {"v": 0.3}},
]


@scenario("scaling_identities",
          "momentum scaling of the p-flow (position and momentum parts) and of the scattering evolution",
          fields=SCALING_FIELDS, samples=50, tolerances={"flow": 1e-12})
def _scaling_identities(cfg, ctx):
    fields = [field_from_spec(s) for s in cfg.raw["fields"]]
    rng = cfg.rng()
    rtol = cfg.tol("flow", 1e-12)
    rows = []
    worst = np.zeros(3)
    for k in range(cfg.raw["samples"]):
        j = int(rng.integers(len(fields)))
        field = fields[j]
        lam = float(rng.uniform(1, 32))
        t = float(rng.uniform(0, PI))
        n = field.dimension
        xi = rng.uniform(-1.5, 1.5, n)
        if np.linalg.norm(xi) < 0.3:
            xi = xi / max(np.linalg.norm(xi), 1e-3) * 0.3
        X = PhasePoint(rng.uniform(-1.5, 1.5, n), xi)
        rx, rxi = check_scaling_identity(field, lam, t, X, rel_tol=rtol, abs_tol=1e-13)
        rs = check_evolution_scaling(field, lam, t, X, rel_tol=rtol)
        worst = np.maximum(worst, [rx, rxi, rs])
        rows.append([k, field.family, n, lam, t, rx, rxi, rs])
    ctx.table("scaling_residuals", ["sample", "family", "dimension", "lambda", "t",
                                    "position_residual", "momentum_residual", "evolution_residual"],
              rows)
    ctx.check("position scaling residual", worst[0], 1e-7)
    ctx.check("momentum scaling residual", worst[1], 1e-7)
    ctx.check("scattering evolution scaling residual", worst[2], 1e-7)


def trapped_ring():
    """Ring field with a stable circular geodesic and a phase point on it."""
    width = 0.25 ** 0.25
    field = make_field("ring", 2, c=-0.5, ring_radius=1.0, width=width)

    def A(u):  # conformal factor 1 + c exp(-(u - 1)^2 / w^4), u = r^2
        return 1.0 - 0.5 * np.exp(-((u - 1.0) ** 2) / width**4)

    def dA(u):
        return 0.5 * np.exp(-((u - 1.0) ** 2) / width**4) * 2 * (u - 1.0) / width**4

    # circular geodesic of the metric A|xi|^2: u A'(u) = A(u)
    u = brentq(lambda u: u * dA(u) - A(u), 1.0, 1.5)
    return field, PhasePoint([np.sqrt(u), 0.0], [0.0, 1.0])


@scenario("lemma21_escape",
          "linear escape bound |x(t)| >= c1 t - c2 for the scaled flow, and its failure on a trapped orbit",
          field=BUMP, lambdas=[4, 8, 16, 32], delta=0.5,
          points=[_pt(0.0, 1.0), _pt(0.5, -0.7), _pt(-1.0, 0.8), _pt(2.0, 1.5), _pt(-0.3, 1.2)])
def _lemma21_escape(cfg, ctx):
    field = cfg.field()
    lams = cfg.raw["lambdas"]
    delta = cfg.raw["delta"]
    fit = escape_bound_scan(field, lams, delta, cfg.points())
    rows = [[lam, c2] for lam, c2 in sorted(fit.c2_by_lambda.items())]
    ctx.table("escape_offsets", ["lambda", "c2"], rows)
    ring, Xr = trapped_ring()
    trapped = escape_bound_scan(ring, lams, delta, [Xr])
    ctx.record(c1=fit.c1, c2=fit.c2, delta_ok=fit.delta_ok, trapped_c1=trapped.c1,
               trapped_point=[Xr.x, Xr.xi])
    ctx.check("escape rate c1", fit.c1, 0.0, ">")
    ctx.check("offsets c2 stable across lambda", fit.ok, True, "==")
    ctx.check("trapped ring point reported as violation", trapped.ok, False, "==")


def _high_energy(cfg, ctx, window):
    field = cfg.field()
    X = cfg.points()[0]
    lams = cfg.raw["lambdas"]
    sigma = float(cfg.raw["sigma"])
    mu = field.decay_mu
    for s, tag in ((sigma, "forward"), (-sigma, "backward")):
        tab = high_energy_limit(field, s, X, lams, tol=cfg.tol("scattering", 1e-10))
        ctx.table(f"high_energy_{tag}", ["lambda", "error"], zip(tab.lambdas, tab.errors))
        ctx.record(**{f"slope_{tag}": tab.slope, f"limit_{tag}": [tab.limit.x, tab.limit.xi]})
        ctx.check(f"{tag}: E(lambda) decreasing", tab.decreasing, True, "==")
        if window is not None:
            ctx.check(f"{tag}: log-log slope", tab.slope, window, "in")
        ctx.check(f"{tag}: slope at most -(mu-1)+0.3", tab.slope, -(mu - 1) + 0.3)


@scenario("thm24_high_energy",
          "S^lam_{sigma lam} tends to S+ (sigma > 0) and S- (sigma < 0) as lam grows",
          field=BUMP, points=[_pt(0.0, 1.0)], lambdas=[4, 8, 16, 32, 64], sigma=PI / 2,
          params={"slope_window": [-1.3, -0.7]})
def _thm24(cfg, ctx):
    window = cfg.raw.get("params", {}).get("slope_window")
    _high_energy(cfg, ctx, tuple(window) if window else None)


@scenario("lemma23_rate",
          "convergence rate of the scaled scattering evolution is at least lam^-(mu-1)",
          field={"family": "rational", "dimension": 1, "mu": 3.0, "params": {"c": 0.5}},
          points=[_pt(0.3, 1.0)], lambdas=[32, 64, 128, 256, 512], sigma=PI / 2)
def _lemma23(cfg, ctx):
    _high_energy(cfg, ctx, None)


# ---------------------------------------------------------------------------
# scattering maps


@scenario("scattering_identities",
          "flat S+- are the identity, kinetic energy is carried to infinity, inverses round-trip",
          field=BUMP, points=[_pt(0.0, 1.0), _pt(0.7, -0.5), _pt(-1.5, 0.8)])
def _scattering_identities(cfg, ctx):
    field = cfg.field()
    tol = cfg.tol("scattering", 1e-10)
    flat_err = 0.0
    for n in (1, 2):
        flat = make_field("flat", n)
        for X in (PhasePoint(np.full(n, 0.4), np.full(n, 0.9)), PhasePoint(np.full(n, -1.0), np.full(n, 0.3))):
            for d in "+-":
                flat_err = max(flat_err, scattering_map(flat, X, d, tol).point.distance(X))
            flat_err = max(flat_err, recurrence_map(flat, X, "+", tol).distance(X.antipode()))
    rows, energy_err, trip_err = [], 0.0, 0.0
    for i, X in enumerate(cfg.points()):
        k = float(eval_symbols(field, X.x, X.xi).k)
        for d in "+-":
            S = scattering_map(field, X, d, tol).point
            e = abs(0.5 * S.xi @ S.xi - k)
            back = inverse_scattering_map(field, S, d, tol)
            r = back.distance(X)
            energy_err, trip_err = max(energy_err, e), max(trip_err, r)
            rows.append([i, d, S.x[0], S.xi[0], e, r])
    ctx.table("scattering_identities", ["point", "direction", "x_out", "xi_out",
                                        "energy_error", "roundtrip_error"], rows)
    ctx.check("flat S and recurrence error", flat_err, 1e-8)
    ctx.check("kinetic energy identity error", energy_err, 1e-8)
    ctx.check("inverse round-trip error", trip_err, 1e-7)


# ---------------------------------------------------------------------------
# exact harmonic propagation


@scenario("h0_identities",
          "exp(-itH0) has period 2 pi, is parity at pi and the Fourier transform at pi/2; "
          "nu = (1, 2) gives a partial parity at pi",
          grid={"L": 20.0, "N": 4096}, h_list=[0.5], points=[_pt(1.0, 1.0)])
def _h0_identities(cfg, ctx):
    g = SpatialGrid((cfg.raw["grid"]["L"],), (cfg.raw["grid"]["N"],))
    X = cfg.points()[0]
    u = coherent_state(g, cfg.raw["h_list"][0], X.x, X.xi)
    period = propagate_H0_exact(1.0, 2 * PI, u, drop_zero_point=True).distance(u)
    parity = propagate_H0_exact(1.0, PI, u, drop_zero_point=True).distance(u.reflected())
    fourier = propagate_H0_exact(1.0, PI / 2, u, drop_zero_point=True).distance(fourier_transform(u))
    physical = propagate_H0_exact(1.0, PI, u).distance(u.reflected().with_values(-1j * u.reflected().values))
    # two-dimensional resonant oscillator, sigma from the resonance structure
    structure = resonance_structure((1, 2))
    g2 = SpatialGrid((10.0, 10.0), (256, 256))
    v = coherent_state(g2, 0.25, [1.0, -0.5], [0.5, 0.3])
    flip = [ax for ax, s in enumerate(structure.sigma) if s < 0]
    partial = propagate_H0_exact((1.0, 2.0), structure.t0, v, drop_zero_point=True).distance(
        v.with_values(g2.reflect(v.values, flip)))
    ctx.table("h0_identities", ["identity", "l2_error"],
              [["period_2pi", period], ["parity_pi", parity], ["fourier_half_pi", fourier],
               ["physical_parity_phase", physical], ["partial_parity_nu12", partial]])
    ctx.record(resonance_t0=structure.t0, sigma=structure.sigma)
    for name, val in (("period 2 pi", period), ("parity at pi", parity),
                      ("Fourier at pi/2", fourier), ("partial parity nu=(1,2)", partial)):
        ctx.check(f"{name} L2 error", val, 1e-8)


def _gauss_symbol(x0, xi0, sx, sxi):
    def a(x, xi):
        return np.exp(-((x - x0) ** 2) / (2 * sx**2) - ((xi - xi0) ** 2) / (2 * sxi**2))
    return a


@scenario("egorov_flat_exact",
          "exact conjugation of a Weyl operator by exp(-itH0) is the rotated symbol",
          grid={"L": 20.0, "N": 4096}, h_list=[1 / 32], times=[PI / 3], points=[_pt(0.5, 0.5)])
def _egorov(cfg, ctx):
    g = SpatialGrid((cfg.raw["grid"]["L"],), (cfg.raw["grid"]["N"],))
    h = cfg.raw["h_list"][0]
    t = cfg.raw["times"][0]
    X = cfg.points()[0]
    u = coherent_state(g, h, X.x, X.xi)
    # center the symbol on the rotated packet so the operator acts nontrivially
    cx, cxi = harmonic_phase_map(h, t, X.x[0], X.xi[0])
    a = _gauss_symbol(round(float(cx)), round(4 * float(cxi)) / 4, 1.0, 0.3)
    lhs = propagate_H0_exact(1.0, -t, apply_weyl(a, h, propagate_H0_exact(1.0, t, u)))
    rhs = apply_weyl(lambda x, xi: a(*harmonic_phase_map(h, t, x, xi)), h, u)
    res = lhs.distance(rhs)
    ctx.table("egorov", ["h", "t", "residual", "rhs_norm"], [[h, t, res, rhs.norm()]])
    ctx.check("rhs norm nonzero", rhs.norm(), 1e-3, ">")
    ctx.check("conjugation residual", res, 1e-6)


# ---------------------------------------------------------------------------
# quantum-classical correspondence


def _thm11(cfg, ctx, t0):
    field = cfg.field()
    Xp = cfg.points()[0]
    hs = cfg.raw["h_list"]
    direction = "-" if t0 > 0 else "+"
    limit = inverse_scattering_map(field, Xp, direction, cfg.tol("scattering", 1e-10))
    spec = PropagatorSpec(dt=cfg.tol("dt", 1e-2))
    rows, errs = [], []
    for h in hs:
        g = packet_grid(field, limit, h)
        u0 = propagate_H0_exact(1.0, -t0, coherent_state(g, h, Xp.x, Xp.xi))
        ut = propagate_H_numeric(field, 1.0, t0, u0, spec)
        finite = inverse_scattering_evolution(field, -t0 / h, Xp, lam=1 / h)
        peak = detect_peak(ut, h, limit, radius=0.5)
        err = peak.distance(limit)
        errs.append(err)
        rows.append([h, g.L[0], g.N[0], peak.x[0], peak.xi[0], limit.x[0], limit.xi[0],
                     err, err / np.sqrt(h), peak.distance(finite)])
    ctx.table("peak_tracking", ["h", "L", "N", "peak_x", "peak_xi", "predicted_x", "predicted_xi",
                                "error", "C", "error_to_finite_lambda"], rows)
    C, ratio = _c_stable(errs, hs)
    ctx.record(C=C, predicted=[limit.x, limit.xi])
    ctx.check("max C_h / C_coarsest", ratio, 2.0)
    ctx.check("max error / sqrt(h)", float(np.max(C)), 1.0)


@scenario("thm11_forward",
          "for 0 < t0 < pi the packet prepared at X' (free picture) sits at S-^-1(X') at time t0",
          field=BUMP, points=[_pt(0.3, 1.0)], h_list=[1 / 16, 1 / 32, 1 / 64], times=[PI / 2])
def _thm11_forward(cfg, ctx):
    t0 = float(cfg.raw["times"][0])
    if not 0 < t0 < PI:
        raise ValueError("thm11_forward needs 0 < t0 < pi")
    _thm11(cfg, ctx, t0)


@scenario("thm11_backward",
          "for -pi < t0 < 0 the packet prepared at X' (free picture) sits at S+^-1(X') at time t0",
          field=BUMP, points=[_pt(0.3, 1.0)], h_list=[1 / 16, 1 / 32, 1 / 64], times=[-PI / 2])
def _thm11_backward(cfg, ctx):
    t0 = float(cfg.raw["times"][0])
    if not -PI < t0 < 0:
        raise ValueError("thm11_backward needs -pi < t0 < 0")
    _thm11(cfg, ctx, t0)


@scenario("thm13_recurrence",
          "at t = pi a packet at X' reappears at S-^-1 o Gamma o S+(X')",
          field={"family": "rational", "dimension": 1, "mu": 2.0, "params": {"c": 0.1}},
          points=[_pt(0.3, 1.0)], h_list=[1 / 16, 1 / 32, 1 / 64])
def _thm13(cfg, ctx):
    field = cfg.field()
    Xp = cfg.points()[0]
    hs = cfg.raw["h_list"]
    pred = recurrence_map(field, Xp, "-", cfg.tol("scattering", 1e-10))
    naive = Xp.antipode()
    spec = PropagatorSpec(dt=cfg.tol("dt", 1e-2))
    rows, errs = [], []
    for h in hs:
        g = packet_grid(field, Xp, h)
        ut = propagate_H_numeric(field, 1.0, PI, coherent_state(g, h, Xp.x, Xp.xi), spec)
        peak = detect_peak(ut, h, pred, radius=0.5)
        err = peak.distance(pred)
        errs.append(err)
        rows.append([h, g.L[0], g.N[0], peak.x[0], peak.xi[0], pred.x[0], pred.xi[0], err,
                     err / np.sqrt(h), peak.distance(naive)])
    ctx.table("recurrence_peaks", ["h", "L", "N", "peak_x", "peak_xi", "predicted_x",
                                   "predicted_xi", "error", "C", "distance_to_antipode"], rows)
    C, ratio = _c_stable(errs, hs)
    ctx.record(C=C, predicted=[pred.x, pred.xi], antipode_offset=pred.distance(naive))
    ctx.check("max error / sqrt(h)", float(np.max(C)), 1.0)
    ctx.check("max C_h / C_coarsest", ratio, 2.0)
    ctx.check("prediction resolved from the antipode (offset / max error)",
              pred.distance(naive) / max(errs), 10.0, ">")


@scenario("thm13_recurrence_flat",
          "flat metric: at t = pi the wavefront peak sits at Gamma(X')",
          points=[_pt(0.3, 1.0)], h_list=list(DEFAULT_H))
def _thm13_flat(cfg, ctx):
    Xp = cfg.points()[0]
    G = Xp.antipode()
    hs = cfg.raw["h_list"]
    grids = {}

    def grid_for(h):
        if h not in grids:
            L = float(np.ceil(np.max(np.abs(Xp.x)) + 8 * np.sqrt(h) + 4))
            kmax = np.max(np.abs(Xp.xi)) / h + 10 / np.sqrt(h)
            grids[h] = SpatialGrid((L,), (int(2 ** np.ceil(np.log2(2 * L * kmax / PI))),))
        return grids[h]

    def state(h):
        return propagate_H0_exact(1.0, PI, coherent_state(grid_for(h), h, Xp.x, Xp.xi))

    rows, worst = [], 0.0
    for h in hs:
        u = state(h)
        peak = detect_peak(u, h, G, radius=0.5)
        dx = grid_for(h).dx[0]
        worst = max(worst, peak.distance(G) / dx)
        par = u.distance(coherent_state(grid_for(h), h, Xp.x, Xp.xi).reflected().with_values(
            -1j * coherent_state(grid_for(h), h, Xp.x, Xp.xi).reflected().values))
        rows.append([h, dx, peak.x[0], peak.xi[0], peak.distance(G), par])
    ctx.table("flat_recurrence", ["h", "dx", "peak_x", "peak_xi", "error", "parity_l2_error"], rows)
    # numeric propagation against the exact parity, at the coarsest h, on a grid holding the orbit
    h = hs[0]
    flat = make_field("flat", 1)
    u0 = coherent_state(packet_grid(flat, Xp, h), h, Xp.x, Xp.xi)
    num_err = propagate_H_numeric(flat, 1.0, PI, u0).distance(propagate_H0_exact(1.0, PI, u0))
    rep = wf_detect(state, PhaseGrid((G.x[0] - 1, G.x[0] + 1), (G.xi[0] - 1, G.xi[0] + 1), (9, 9)),
                    hs if len(hs) >= 4 else DEFAULT_H)
    ctx.record(wf_peak=[rep.peak.x, rep.peak.xi], numeric_vs_exact=num_err)
    ctx.check("peak error / grid spacing", worst, 1.0)
    ctx.check("max parity L2 error", max(r[-1] for r in rows), 1e-8)
    ctx.check("numeric vs exact propagation at pi", num_err, 1e-8)
    ctx.check("wf_detect peak distance / sqrt(h_min)", rep.peak.distance(G) / np.sqrt(min(rep.h_sequence)),
              1.0)
    ctx.check("wf_detect classifies Gamma(X') in_WF", rep.classification[len(rep.points) // 2],
              "in_WF", "==")


# ---------------------------------------------------------------------------
# inhomogeneous oscillators (classical statements plus exact flat propagation)


@scenario("thm41_nonresonant",
          "nu = (1, sqrt 2): no recurrence, and beyond t = pi the scaled evolution still tends to S-",
          field={"family": "rational", "dimension": 2, "mu": 2.0, "params": {"c": 0.5},
                 "nu": [1.0, 1.4142135623730951]},
          points=[_pt([0.3, -0.2], [0.8, 0.6])], lambdas=[4, 8, 16, 32, 64], times=[1.5 * PI])
def _thm41(cfg, ctx):
    field = cfg.field()
    X = cfg.points()[0]
    t = float(cfg.raw["times"][0])
    structure = resonance_structure(field.nu, search_bound=1000)
    limit = scattering_map(field, X, "-").point
    errs = []
    for lam in cfg.raw["lambdas"]:
        errs.append(scattering_evolution(field, -t * lam, X, lam).distance(limit))
    ctx.table("nonresonant_limit", ["lambda", "error"], zip(cfg.raw["lambdas"], errs))
    # flat exact propagation never returns to the initial state
    g = SpatialGrid((8.0, 8.0), (128, 128))
    v = coherent_state(g, 0.25, [1.0, 0.5], [0.5, -0.5])
    ts = np.linspace(0.5, 4 * PI, 64)
    overlap = max(abs(v.inner(propagate_H0_exact(field.nu, s, v, drop_zero_point=True))) for s in ts)
    ctx.record(limit=[limit.x, limit.xi], max_return_overlap=overlap)
    ctx.check("resonance search finds no t0", structure.resonant, False, "==")
    ctx.check("E(lambda) decreasing", bool(np.all(np.diff(errs) < 0)), True, "==")
    ctx.check("E(lambda_max)", errs[-1], 0.05)
    ctx.check("max |<u, exp(-itH0) u>| over t in (0, 4 pi]", overlap, 0.99)


@scenario("thm42_resonant",
          "nu = (1, 2): at t0 = pi the scaled flow tends to S-^-1 o G~ o S+ with G~ the partial reflection",
          field={"family": "rational", "dimension": 2, "mu": 2.0, "params": {"c": 0.5}, "nu": [1.0, 2.0]},
          points=[_pt([0.3, -0.2], [0.8, 0.6])], lambdas=[4, 8, 16, 32, 64])
def _thm42(cfg, ctx):
    field = cfg.field()
    X = cfg.points()[0]
    structure = resonance_structure(tuple(int(v) if float(v).is_integer() else v for v in field.nu))
    gamma = lambda Z: tilde_gamma(structure, Z)  # noqa: E731
    pred = recurrence_map(field, X, "-", gamma=gamma)
    errs = []
    for lam in cfg.raw["lambdas"]:
        Z, _ = classical_recurrence_check(field, X, lam, gamma=gamma)
        errs.append(Z.distance(pred))
    ctx.table("resonant_recurrence", ["lambda", "error"], zip(cfg.raw["lambdas"], errs))
    g = SpatialGrid((10.0, 10.0), (256, 256))
    v = coherent_state(g, 0.25, [1.0, -0.5], [0.5, 0.3])
    flip = [ax for ax, s in enumerate(structure.sigma) if s < 0]
    partial = propagate_H0_exact(field.nu, structure.t0, v, drop_zero_point=True).distance(
        v.with_values(g.reflect(v.values, flip)))
    ctx.record(t0=structure.t0, m=structure.m, sigma=structure.sigma, predicted=[pred.x, pred.xi])
    ctx.check("resonance t0", structure.t0, PI, "==")
    ctx.check("E(lambda) decreasing", bool(np.all(np.diff(errs) < 0)), True, "==")
    ctx.check("E(lambda_max)", errs[-1], 0.05)
    ctx.check("flat partial parity L2 error", partial, 1e-8)


# ---------------------------------------------------------------------------
# wavefront calibration and assumption audit


def step_function(L: float = 4.0, N: int = 16384) -> WaveFunction:
    """Heaviside step at 0 (value 1/2 on the jump), tapered smoothly to 0 over 1.875 < x < 2.25."""
    g = SpatialGrid((L,), (N,))
    x = g.axes[0]
    v = np.where(x > 0, 1.0, 0.0)
    v[np.isclose(x, 0.0)] = 0.5
    return WaveFunction(g, v * _smooth_window(np.maximum(x - 1.5, 0.0) / 0.75))


def gaussian_function(L: float = 8.0, N: int = 4096) -> WaveFunction:
    g = SpatialGrid((L,), (N,))
    x = g.axes[0]
    return WaveFunction(g, np.pi ** -0.25 * np.exp(-x * x / 2))


def h_subsequences(hs, min_len: int = 4):
    hs = list(hs)
    return [hs[i:j] for i in range(len(hs)) for j in range(i + min_len, len(hs) + 1)]


@scenario("wf_calibration",
          "decay-exponent thresholds: Gaussian smooth, step in_WF at the jump and smooth away from it",
          h_list=list(DEFAULT_H))
def _wf_calibration(cfg, ctx):
    step, gauss = step_function(), gaussian_function()
    rows = []
    g_min, s_lo, s_hi, far_min = np.inf, np.inf, -np.inf, np.inf
    cls_ok = True
    for seq in h_subsequences(cfg.raw["h_list"]):
        fg = decay_exponent(gauss, PhasePoint([0.0], [1.0]), seq)
        fs = decay_exponent(step, PhasePoint([0.0], [1.0]), seq)
        ff = decay_exponent(step, PhasePoint([1.0], [1.0]), seq)
        label = f"{seq[0]:.6g}..{seq[-1]:.6g}"
        for name, f in (("gaussian(0,1)", fg), ("step(0,1)", fs), ("step(1,1)", ff)):
            rows.append([label, name, f.slope, f.residual, f.classify()])
        g_min = min(g_min, fg.slope)
        s_lo, s_hi = min(s_lo, fs.slope), max(s_hi, fs.slope)
        far_min = min(far_min, ff.slope)
        cls_ok &= (fg.classify() == "smooth" and fs.classify() == "in_WF" and ff.classify() == "smooth")
    ctx.table("wf_calibration", ["h_sequence", "case", "slope", "residual", "classification"], rows)
    ctx.check("min Gaussian slope", g_min, 3.0, ">=")
    ctx.check("step slope range at the jump", [s_lo, s_hi], [0.35, 0.65], "in_all")
    ctx.check("min step slope at distance 1", far_min, 3.0, ">=")
    ctx.check("all classifications as expected", cls_ok, True, "==")


@scenario("assumption_audit", "numerical audit of the short-range decay assumption on the field",
          field=BUMP)
def _audit(cfg, ctx):
    field = cfg.field()
    rep = check_assumption_A(field)
    ctx.record(margin=rep.margin, constants_metric=rep.constants_metric,
               constants_potential=rep.constants_potential, violations=len(rep.violations))
    ctx.table("audit_constants", ["part", "order", "constant"],
              [["metric", k, v] for k, v in sorted(rep.constants_metric.items())]
              + [["potential", k, v] for k, v in sorted(rep.constants_potential.items())])
    ctx.check("assumption holds", rep.ok, True, "==")


def list_scenarios() -> list[tuple[str, str]]:
    return [(s.name, s.statement) for s in REGISTRY.values()]
