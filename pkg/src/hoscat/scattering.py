"""Classical scattering: nontrapping, S+/-, scattering evolutions, recurrence and resonance."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .classflow import (FlowSpec, PhasePoint, as_point, flow_exact_harmonic, flow_numeric,
                        integrate)
from .errors import DivergenceError, InputError, InversionError, NonConvergenceError
from .fields import CoefficientField

Array = np.ndarray

T_MAX = 2.0**16


@dataclass(frozen=True)
class ScatteringData:
    x_out: Array
    xi_out: Array
    direction: str
    T_used: float
    tail_estimate: float
    converged: bool

    @property
    def point(self) -> PhasePoint:
        return PhasePoint(self.x_out, self.xi_out)


@dataclass(frozen=True)
class NontrappingReport:
    forward: str
    backward: str
    escape_time: float | None
    max_radius: float
    T_max: float
    R_escape: float
    escape_time_backward: float | None = None


@dataclass(frozen=True)
class ResonanceStructure:
    resonant: bool
    t0: float | None
    m: tuple
    sigma: tuple
    search_bound: int


def _sign(direction) -> int:
    if direction in ("+", 1, "plus", "forward"):
        return 1
    if direction in ("-", -1, "minus", "backward"):
        return -1
    raise InputError(f"direction must be '+' or '-', got {direction!r}")


def _require_momentum(X: PhasePoint):
    if not np.any(X.xi):
        raise InputError("xi = 0 lies outside the scattering phase space")


# ---------------------------------------------------------------------------
# nontrapping


def classify_nontrapping(field: CoefficientField, X, T_max: float = 1e3, R_escape: float = 20.0,
                         rel_tol: float = 1e-10) -> NontrappingReport:
    """Classify X as forward/backward nontrapping for the kinetic flow of k.

    A direction is ``nontrapping`` once |x| > R_escape while moving outward with
    radial speed at least half the total speed and nonnegative radial
    acceleration; ``trapped_up_to_horizon`` if |x| never exceeds R_escape up to
    T_max; ``undetermined`` otherwise.
    """
    X = as_point(X)
    _require_momentum(X)
    if T_max <= 0 or R_escape <= 0:
        raise InputError("T_max and R_escape must be positive")
    n = field.dimension
    spec = FlowSpec("k", rel_tol=rel_tol, abs_tol=rel_tol * 1e-2, max_steps=10**6)
    from .classflow import hamiltonian_vector_field
    rhs = hamiltonian_vector_field(field, spec)

    def escaped(t, z):
        x = z[:n]
        r = np.linalg.norm(x)
        if r <= R_escape:
            return False
        v = rhs(t, z)[:n] * np.sign(t if t != 0 else 1.0)
        radial = float(x @ v) / r
        return radial >= 0.5 * np.linalg.norm(v)

    results, times, rmax = [], [], 0.0
    for sgn in (1.0, -1.0):
        traj = flow_numeric(field, spec, (0.0, sgn * T_max), X, stop_when=escaped)
        radii = np.linalg.norm(traj.points[:, :n], axis=1)
        rmax = max(rmax, float(radii.max()))
        if escaped(traj.times[-1], traj.points[-1]):
            results.append("nontrapping")
            times.append(abs(float(traj.times[-1])))
        elif radii.max() <= R_escape:
            results.append("trapped_up_to_horizon")
            times.append(None)
        else:
            results.append("undetermined")
            times.append(None)
    return NontrappingReport(results[0], results[1], times[0], rmax, float(T_max),
                             float(R_escape), times[1])


# ---------------------------------------------------------------------------
# scattering maps


def _interaction_rhs(field: CoefficientField):
    """(z, eta) with y = z + t eta: exp(-t H_k0) o exp(t H_k) in interaction variables."""
    n = field.dimension
    def rhs(t, w):
        z, eta = w[:n], w[n:]
        y = z + t * eta
        force = 0.5 * np.einsum("jkl,j,k->l", field.metric_grad(y), eta, eta)
        deta = -force
        dz = field.deviation(y) @ eta + t * force
        return np.concatenate([dz, deta])

    return rhs


def _born_tail(field: CoefficientField, T: float, w: Array, sgn: int, mu: float) -> Array:
    """Integral of the interaction velocity along the frozen straight line from T to infinity.

    With s = T e^v the integrand decays like e^{(1 - mu) v}; a panelled
    Gauss-Legendre rule on v in [0, 40 / (mu - 1)] is accurate to round-off.
    """
    n = field.dimension
    z, eta = w[:n], w[n:]
    nodes, weights = _TAIL_RULE
    vmax = 40.0 / max(mu - 1.0, 0.25)
    v = nodes * vmax
    s = T * np.exp(v)
    t = sgn * s
    y = z[None, :] + t[:, None] * eta[None, :]
    a = field.deviation(y)
    force = 0.5 * np.einsum("mjkl,j,k->ml", field.metric_grad(y), eta, eta)
    vel = np.concatenate([a @ eta + t[:, None] * force, -force], axis=1)
    return sgn * (weights * vmax * s) @ vel


def _panel_rule(panels: int = 64, order: int = 16):
    x, wt = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    mids, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    nodes = (mids[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * wt[None, :]).ravel()
    return nodes, weights


_TAIL_RULE = _panel_rule()


def scattering_map(field: CoefficientField, X, direction="+", tol: float = 1e-10,
                   T0: float = 32.0, T_max: float = T_MAX, rel_tol: float | None = None,
                   ) -> ScatteringData:
    """S_+(X) or S_-(X) = lim exp(-t H_k0) o exp(t H_k)(X) as t -> +-infinity.

    The kinetic flow is integrated in interaction variables (z, eta) = (x - t xi, xi),
    whose velocity decays like <t>^-mu. At each horizon T the remaining tail is
    estimated by integrating the same velocity along the frozen straight line
    (first Born approximation); T doubles until the tail-corrected limits at T
    and T/2 agree to ``tol``.
    """
    X = as_point(X)
    _require_momentum(X)
    if X.n != field.dimension:
        raise InputError("dimension mismatch")
    sgn = _sign(direction)
    dsym = "+" if sgn > 0 else "-"
    if field.is_flat:
        return ScatteringData(X.x.copy(), X.xi.copy(), dsym, 0.0, 0.0, True)

    rtol = rel_tol if rel_tol is not None else max(1e-13, min(1e-3, tol * 1e-2))
    rhs = _interaction_rhs(field)
    n = field.dimension
    speed = float(np.linalg.norm(X.xi))
    w = X.vec.copy()
    t = 0.0
    T = T0
    prev = None
    diff = np.inf
    while True:
        try:
            traj = integrate(rhs, t, sgn * T, w, rtol, rtol * 1e-3, 10**6)
        except DivergenceError as exc:
            raise NonConvergenceError(f"integration failed before T={T}", best=prev) from exc
        w = traj.points[-1]
        t = sgn * T
        y = w[:n] + t * w[n:]
        if T >= 128 and np.linalg.norm(y) < 0.1 * speed * T:
            raise NonConvergenceError(
                f"trajectory not escaping: |x(T)|={np.linalg.norm(y):.3g} at T={T}",
                best=prev)
        limit = w + _born_tail(field, T, w, sgn, field.decay_mu)
        if prev is not None:
            diff = float(np.max(np.abs(limit - prev)))
            if diff <= tol:
                return ScatteringData(limit[:n], limit[n:], dsym, T, diff, True)
        prev = limit
        if 2 * T > T_max:
            raise NonConvergenceError(
                f"tail not certified by T_max={T_max}: last change {diff:.3g} > tol {tol:.3g}",
                best=ScatteringData(limit[:n], limit[n:], dsym, T, diff, False))
        T *= 2


def _fd_jacobian(fun, z, step):
    m = z.shape[0]
    J = np.empty((m, m))
    for i in range(m):
        e = np.zeros(m)
        e[i] = step
        J[:, i] = (fun(z + e) - fun(z - e)) / (2 * step)
    return J


def scattering_jacobian(field, X, direction="+", tol=1e-10, step=1e-6) -> Array:
    X = as_point(X)
    return _fd_jacobian(lambda z: scattering_map(field, PhasePoint.from_vec(z), direction,
                                                 tol).point.vec, X.vec, step)


def inverse_scattering_map(field: CoefficientField, Y, direction="+", tol: float = 1e-10,
                           max_iter: int = 50) -> PhasePoint:
    """Solve S_dir(X) = Y by damped Newton iteration from X = Y."""
    Y = as_point(Y)
    _require_momentum(Y)
    if field.is_flat:
        return Y
    target = Y.vec
    fd = 1e-6 * (1.0 + float(np.linalg.norm(target)))
    stol = tol * 1e-2

    def F(z):
        return scattering_map(field, PhasePoint.from_vec(z), direction, stol).point.vec - target

    z = target.copy()
    r = F(z)
    res = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if res <= tol:
            return PhasePoint.from_vec(z)
        J = _fd_jacobian(F, z, fd)
        try:
            dz = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise InversionError("singular scattering Jacobian", PhasePoint.from_vec(z), res) from exc
        step = 1.0
        while step > 1e-6:
            cand = z + step * dz
            try:
                rc = F(cand)
            except (NonConvergenceError, InputError):
                step *= 0.5
                continue
            if np.linalg.norm(rc) < res:
                z, r, res = cand, rc, float(np.linalg.norm(rc))
                break
            step *= 0.5
        else:
            break
    if res <= tol:
        return PhasePoint.from_vec(z)
    raise InversionError(f"Newton stagnated at residual {res:.3g}", PhasePoint.from_vec(z), res)


# ---------------------------------------------------------------------------
# scattering evolutions


def scattering_evolution(field: CoefficientField, t: float, X, lam: float | None = None,
                         rel_tol: float = 1e-11) -> PhasePoint:
    """S_t(X) = exp(-t H_p0) o exp(t H_p)(X), or S_t^lam with the scaled pair."""
    X = as_point(X)
    if not np.isfinite(t):
        raise InputError("t must be finite")
    if lam is not None and not lam > 0:
        raise InputError("lambda must be positive")
    if t == 0:
        return X
    kind = "p" if lam is None else "p_lambda"
    spec = FlowSpec(kind, lam, rel_tol, max(1e-13, rel_tol * 1e-2), max_steps=10**6)
    Z = flow_numeric(field, spec, (0.0, t), X).endpoint
    return flow_exact_harmonic(field.nu, 1.0 if lam is None else lam, -t, Z)


def inverse_scattering_evolution(field: CoefficientField, t: float, X, lam: float | None = None,
                                 rel_tol: float = 1e-11) -> PhasePoint:
    """(S_t^lam)^-1 = exp(-t H_p^lam) o exp(t H_p0^lam)."""
    X = as_point(X)
    if t == 0:
        return X
    Z = flow_exact_harmonic(field.nu, 1.0 if lam is None else lam, t, X)
    kind = "p" if lam is None else "p_lambda"
    spec = FlowSpec(kind, lam, rel_tol, max(1e-13, rel_tol * 1e-2), max_steps=10**6)
    return flow_numeric(field, spec, (0.0, -t), Z).endpoint


def check_evolution_scaling(field: CoefficientField, lam: float, t: float, X,
                            rel_tol: float = 1e-12) -> float:
    """|S_t(J_lam X) - J_lam S^lam_{lam t}(X)|, both sides integrated separately."""
    X = as_point(X)
    lhs = scattering_evolution(field, t, X.scale_momentum(lam), None, rel_tol)
    rhs = scattering_evolution(field, lam * t, X, lam, rel_tol).scale_momentum(lam)
    return lhs.distance(rhs)


@dataclass
class HighEnergyTable:
    lambdas: Array
    errors: Array
    slope: float
    limit: PhasePoint
    direction: str
    unscaled_pairs: list = dc_field(default_factory=list)

    @property
    def decreasing(self) -> bool:
        return bool(np.all(np.diff(self.errors) < 0))


def fit_loglog_slope(xs, ys) -> float:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    keep = ys > 0
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(xs[keep]), np.log(ys[keep]), 1)[0])


def high_energy_limit(field: CoefficientField, sigma: float, X, lambda_sequence: Sequence[float],
                      tol: float = 1e-10, rel_tol: float = 1e-11) -> HighEnergyTable:
    """Distances E(lam) = |S^lam_{sigma lam}(X) - S_+-(X)| with their log-log slope.

    sigma in (0, pi) compares with S_+, sigma in (-pi, 0) with S_-.
    """
    X = as_point(X)
    if not (0 < abs(sigma) < np.pi):
        raise InputError("sigma must lie in (-pi, 0) or (0, pi)")
    lams = np.asarray(lambda_sequence, dtype=float)
    if np.any(np.diff(lams) <= 0):
        raise InputError("lambda sequence must be increasing")
    direction = "+" if sigma > 0 else "-"
    limit = scattering_map(field, X, direction, tol).point
    errors, pairs = [], []
    for lam in lams:
        Z = scattering_evolution(field, sigma * lam, X, lam, rel_tol)
        errors.append(Z.distance(limit))
        # same quantity through S_sigma(x, lam xi), then undo J_lam
        W = scattering_evolution(field, sigma, X.scale_momentum(lam), None, rel_tol)
        pairs.append((W.x, W.xi / lam))
    errors = np.array(errors)
    return HighEnergyTable(lams, errors, fit_loglog_slope(lams, errors), limit, direction, pairs)


# ---------------------------------------------------------------------------
# recurrence and resonance


def antipode(X) -> PhasePoint:
    return as_point(X).antipode()


def recurrence_map(field: CoefficientField, X, direction="+", tol: float = 1e-10,
                   gamma: Callable[[PhasePoint], PhasePoint] | None = None) -> PhasePoint:
    """direction '+': S_+^-1 o G o S_-;  direction '-': S_-^-1 o G o S_+.

    ``gamma`` defaults to the antipode; pass a partial reflection for resonant
    inhomogeneous oscillators.
    """
    sgn = _sign(direction)
    gamma = antipode if gamma is None else gamma
    first, last = ("-", "+") if sgn > 0 else ("+", "-")
    mid = gamma(scattering_map(field, X, first, tol * 1e-1).point)
    return inverse_scattering_map(field, mid, last, tol)


def _as_exact(v):
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    return None


def resonance_structure(nu, search_bound: int = 1000, tol: float = 1e-9) -> ResonanceStructure:
    """Smallest t0 > 0 with t0 nu_j in pi Z for all j, searched over t0 = p pi / nu_1.

    Integer or Fraction weights are tested exactly; floats to ``tol``.
    """
    nu = list(nu)
    if not nu or any(float(v) <= 0 for v in nu):
        raise InputError("nu must be a nonempty positive vector")
    if search_bound < 1:
        raise InputError("search_bound must be >= 1")
    exact = [_as_exact(v) for v in nu]
    if all(e is not None for e in exact):
        for p in range(1, search_bound + 1):
            ratios = [p * e / exact[0] for e in exact]
            if all(r.denominator == 1 for r in ratios):
                m = tuple(int(r) for r in ratios)
                return ResonanceStructure(True, float(p * np.pi / exact[0]), m,
                                          tuple(1 if k % 2 == 0 else -1 for k in m), search_bound)
    else:
        vals = np.array([float(v) for v in nu])
        for p in range(1, search_bound + 1):
            ratios = p * vals / vals[0]
            m = np.rint(ratios)
            if np.all(np.abs(ratios - m) <= tol * np.maximum(1.0, ratios)):
                m = tuple(int(k) for k in m)
                return ResonanceStructure(True, float(p * np.pi / vals[0]), m,
                                          tuple(1 if k % 2 == 0 else -1 for k in m), search_bound)
    return ResonanceStructure(False, None, (), (), search_bound)


def tilde_gamma(structure: ResonanceStructure, X) -> PhasePoint:
    """Coordinate-wise reflection (sigma_j x_j, sigma_j xi_j)."""
    if not structure.resonant:
        raise InputError("tilde_gamma needs a resonant structure")
    X = as_point(X)
    s = np.asarray(structure.sigma, dtype=float)
    if s.shape[0] != X.n:
        raise InputError("sigma length does not match phase point dimension")
    return PhasePoint(s * X.x, s * X.xi)


# ---------------------------------------------------------------------------
# principal symbol of the conjugated test operator


@dataclass
class Pushforward:
    values: Array
    support_image: PhasePoint | None
    limit_image: PhasePoint | None


def principal_symbol_pushforward(field: CoefficientField, f: Callable[[Array, Array], Array],
                                 lam: float, t: float, points: Array,
                                 support_center=None, tol: float = 1e-10) -> Pushforward:
    """psi_0(t; x, xi) = f((S^lam_{lam t})^-1 (x, xi / lam)) at the given phase points.

    ``points`` has shape (m, 2n). With ``support_center`` the image
    J_lam S^lam_{lam t}(center) is returned as support certificate, together
    with its high-energy limit J_lam S_-(center) (S_+ for t > 0).
    """
    if lam < 1:
        raise InputError("lambda must be >= 1")
    if not -np.pi <= t <= 0:
        raise InputError("t must lie in [-pi, 0]")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = field.dimension
    vals = np.empty(pts.shape[0])
    for i, z in enumerate(pts):
        Z = PhasePoint(z[:n], z[n:] / lam)
        W = inverse_scattering_evolution(field, lam * t, Z, lam)
        vals[i] = np.asarray(f(W.x, W.xi)).item()
    support = limit = None
    if support_center is not None:
        C = as_point(support_center)
        support = scattering_evolution(field, lam * t, C, lam).scale_momentum(lam)
        if t != 0:
            limit = scattering_map(field, C, "-" if t < 0 else "+", tol).point.scale_momentum(lam)
    return Pushforward(vals, support, limit)


def classical_recurrence_check(field: CoefficientField, X, lam: float, gamma=None,
                               rel_tol: float = 1e-11) -> tuple[PhasePoint, PhasePoint]:
    """Endpoint of exp(lam pi H_{p^lam})(X) next to its predicted limit S_-^-1 G S_+(X)."""
    X = as_point(X)
    spec = FlowSpec("p_lambda", lam, rel_tol, max(1e-13, rel_tol * 1e-2), max_steps=10**6)
    Z = flow_numeric(field, spec, (0.0, lam * np.pi), X).endpoint
    return Z, recurrence_map(field, X, "-", gamma=gamma)
