"""Hamilton flows: closed-form harmonic/free flows and an adaptive numeric flow."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import DOP853, OdeSolution

from .errors import DivergenceError, FieldError, InputError, LemmaViolation
from .fields import CoefficientField, harmonic_rotation

Array = np.ndarray


@dataclass(frozen=True)
class PhasePoint:
    """A point (x, xi) of R^{2n}."""

    x: Array
    xi: Array

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float)).copy()
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float)).copy()
        if x.shape != xi.shape or x.ndim != 1:
            raise InputError("x and xi must be 1-d arrays of equal length")
        if not (np.isfinite(x).all() and np.isfinite(xi).all()):
            raise InputError("phase point has non-finite entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def vec(self) -> Array:
        return np.concatenate([self.x, self.xi])

    @classmethod
    def from_vec(cls, z) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        n = z.shape[0] // 2
        return cls(z[:n], z[n:])

    def antipode(self) -> "PhasePoint":
        return PhasePoint(-self.x, -self.xi)

    def scale_momentum(self, lam: float) -> "PhasePoint":
        """J_lam(x, xi) = (x, lam xi)."""
        return PhasePoint(self.x, lam * self.xi)

    def distance(self, other: "PhasePoint") -> float:
        return float(np.linalg.norm(self.vec - other.vec))

    def __iter__(self):
        yield self.x
        yield self.xi


def as_point(X) -> PhasePoint:
    if isinstance(X, PhasePoint):
        return X
    if isinstance(X, tuple) and len(X) == 2:
        return PhasePoint(*X)
    return PhasePoint.from_vec(X)


HAMILTONIANS = ("p", "k", "p0", "k0", "p_lambda", "p0_lambda", "ell")


@dataclass(frozen=True)
class FlowSpec:
    hamiltonian: str = "p"
    lam: float | None = None
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 200_000

    def __post_init__(self):
        if self.hamiltonian not in HAMILTONIANS:
            raise InputError(f"unknown hamiltonian {self.hamiltonian!r}")
        for tol in (self.rel_tol, self.abs_tol):
            if not 1e-13 <= tol <= 1e-3:
                raise InputError(f"tolerance {tol} outside [1e-13, 1e-3]")
        if self.hamiltonian in ("p_lambda", "p0_lambda") and not (self.lam and self.lam > 0):
            raise InputError(f"{self.hamiltonian} needs a positive lam")
        if self.lam is not None and self.lam <= 0:
            raise InputError("lam must be positive")
        if self.max_steps < 1:
            raise InputError("max_steps must be positive")

    @property
    def autonomous(self) -> bool:
        return self.hamiltonian != "ell"

    @property
    def scale(self) -> float:
        return 1.0 if self.lam is None else float(self.lam)


@dataclass
class Trajectory:
    times: Array
    points: Array  # (m, 2n)
    energies: Array
    tolerance_used: float
    solution: OdeSolution | None = None

    @property
    def endpoint(self) -> PhasePoint:
        return PhasePoint.from_vec(self.points[-1])

    def at(self, t) -> Array:
        """Dense-output state(s) at time(s) t."""
        if self.solution is None:
            raise InputError("trajectory has no dense output")
        return self.solution(t)

    @property
    def energy_drift(self) -> float:
        e0 = self.energies[0]
        return float(np.max(np.abs(self.energies - e0)) / (1.0 + abs(e0)))


# ---------------------------------------------------------------------------
# closed-form flows


def flow_exact_harmonic(nu, lam: float, t: float, X) -> PhasePoint:
    """exp(t H_{p0^lam}) with frequencies nu: a coordinate-wise rotation."""
    if not lam > 0:
        raise InputError("lambda must be positive")
    nu = np.asarray(nu, dtype=float)
    if np.any(nu <= 0):
        raise InputError("nu must be positive")
    X = as_point(X)
    c, s_over_w, minus_ws = harmonic_rotation(nu, lam, t)
    return PhasePoint(c * X.x + s_over_w * X.xi, minus_ws * X.x + c * X.xi)


def flow_exact_free(t: float, X) -> PhasePoint:
    """exp(t H_{k0})(x, xi) = (x + t xi, xi)."""
    X = as_point(X)
    return PhasePoint(X.x + t * X.xi, X.xi)


# ---------------------------------------------------------------------------
# vector fields


def _metric_parts(field, x):
    a = field.metric(x)
    da = field.metric_grad(x)
    return a, da


def hamiltonian_function(field: CoefficientField, spec: FlowSpec) -> Callable[[float, Array], float]:
    """Value h(t, z) of the Hamiltonian selected by ``spec``."""
    n = field.dimension
    nu2 = field.nu**2
    inv_lam2 = 1.0 / spec.scale**2
    kind = spec.hamiltonian

    def value(t, z):
        x, xi = z[:n], z[n:]
        if kind == "ell":
            from .fields import _ell
            return _ell(field, t, x, xi, spec.scale)[0]
        if kind in ("k0", "p0", "p0_lambda"):
            kin = 0.5 * float(xi @ xi)
        else:
            kin = 0.5 * float(xi @ field.metric(x) @ xi)
        if kind in ("k", "k0"):
            return kin
        harm = 0.5 * float(np.sum(nu2 * x * x))
        if kind == "p0":
            return kin + harm
        if kind == "p0_lambda":
            return kin + harm * inv_lam2
        pot = float(field.potential(x))
        if kind == "p":
            return kin + harm + pot
        return kin + (harm + pot) * inv_lam2

    return value


def hamiltonian_vector_field(field: CoefficientField, spec: FlowSpec) -> Callable[[float, Array], Array]:
    """Right-hand side (dh/dxi, -dh/dx) of Hamilton's equations."""
    n = field.dimension
    nu2 = field.nu**2
    kind = spec.hamiltonian
    lam = spec.scale
    inv_lam2 = 1.0 / lam**2

    if kind == "ell":
        from .fields import _ell

        def rhs(t, z):
            _, g = _ell(field, t, z[:n], z[n:], lam)
            return np.concatenate([g.xi, -g.x])
        return rhs

    def rhs(t, z):
        x, xi = z[:n], z[n:]
        if kind in ("k0", "p0", "p0_lambda"):
            dxi = xi
            dx = np.zeros(n)
        else:
            a = field.metric(x)
            da = field.metric_grad(x)
            dxi = a @ xi
            dx = 0.5 * np.einsum("jkl,j,k->l", da, xi, xi)
        if kind == "p":
            dx = dx + nu2 * x + field.potential_grad(x)
        elif kind == "p_lambda":
            dx = dx + (nu2 * x + field.potential_grad(x)) * inv_lam2
        elif kind == "p0":
            dx = dx + nu2 * x
        elif kind == "p0_lambda":
            dx = dx + nu2 * x * inv_lam2
        return np.concatenate([dxi, -dx])

    return rhs


def integrate(rhs, t0: float, t1: float, z0: Array, rel_tol: float, abs_tol: float,
              max_steps: int, energy=None, stop_when=None) -> Trajectory:
    """Adaptive DOP853 integration with dense output and step bookkeeping.

    ``stop_when(t, z)`` is evaluated after every accepted step; returning True
    ends the integration early.
    """
    z0 = np.asarray(z0, dtype=float)

    def checked(t, z):
        out = rhs(t, z)
        if not np.all(np.isfinite(out)):
            raise FieldError(f"non-finite vector field at t={t}, z={z}")
        return out

    times = [t0]
    points = [z0.copy()]
    energies = [energy(t0, z0) if energy else 0.0]
    if t1 == t0:
        return Trajectory(np.array(times), np.array(points), np.array(energies), rel_tol, None)
    solver = DOP853(checked, t0, z0, t1, rtol=rel_tol, atol=abs_tol)
    interpolants = []
    steps = 0
    while solver.status == "running":
        if steps >= max_steps:
            partial = Trajectory(np.array(times), np.array(points), np.array(energies), rel_tol,
                                 OdeSolution(np.array(times), interpolants) if interpolants else None)
            raise DivergenceError(f"step budget {max_steps} exhausted at t={solver.t}", partial)
        message = solver.step()
        if solver.status == "failed":
            raise DivergenceError(f"integrator failed at t={solver.t}: {message}")
        steps += 1
        interpolants.append(solver.dense_output())
        times.append(solver.t)
        points.append(solver.y.copy())
        energies.append(energy(solver.t, solver.y) if energy else 0.0)
        if stop_when is not None and stop_when(solver.t, solver.y):
            break
    return Trajectory(np.array(times), np.array(points), np.array(energies), rel_tol,
                      OdeSolution(np.array(times), interpolants))


def flow_numeric(field: CoefficientField, spec: FlowSpec, t_span, X, stop_when=None) -> Trajectory:
    """Integrate the Hamilton flow of ``spec.hamiltonian`` over ``t_span``.

    The full vector field is integrated (no splitting of the harmonic part).
    Energies are recorded at every accepted step; for the time-dependent ``ell``
    generator they are the values l(t, z(t)) and are not conserved.
    """
    X = as_point(X)
    if X.n != field.dimension:
        raise InputError(f"phase point dimension {X.n} != field dimension {field.dimension}")
    t0, t1 = (0.0, float(t_span)) if np.isscalar(t_span) else map(float, t_span)
    rhs = hamiltonian_vector_field(field, spec)
    energy = hamiltonian_function(field, spec)
    return integrate(rhs, t0, t1, X.vec, spec.rel_tol, spec.abs_tol, spec.max_steps,
                     energy, stop_when)


def flow_endpoint(field, spec, t, X) -> PhasePoint:
    return flow_numeric(field, spec, (0.0, t), X).endpoint


# ---------------------------------------------------------------------------
# checks


def check_scaling_identity(field: CoefficientField, lam: float, t: float, X,
                           rel_tol: float = 1e-11, abs_tol: float = 1e-13) -> tuple[float, float]:
    """Residuals of the momentum-scaling identities for the p-flow.

    Returns ``(|pi1 exp(tH_p)(x, lam xi) - pi1 exp(lam t H_{p^lam})(x, xi)|,
    |pi2 exp(tH_p)(x, lam xi) - lam pi2 exp(lam t H_{p^lam})(x, xi)|)``.
    """
    if not lam > 0:
        raise InputError("lambda must be positive")
    X = as_point(X)
    lhs = flow_endpoint(field, FlowSpec("p", None, rel_tol, abs_tol), t, X.scale_momentum(lam))
    if lam == 1.0:
        rhs = flow_endpoint(field, FlowSpec("p", None, rel_tol, abs_tol), t, X)
    else:
        rhs = flow_endpoint(field, FlowSpec("p_lambda", lam, rel_tol, abs_tol), lam * t, X)
    return (float(np.linalg.norm(lhs.x - rhs.x)), float(np.linalg.norm(lhs.xi - lam * rhs.xi)))



def symplectic_form(n: int) -> Array:
    return np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])


def symplectic_defect(flow_map: Callable[[Array], Array], X, fd_step: float) -> float:
    """max |J^T Omega J - Omega| for the central-difference Jacobian J of ``flow_map``."""
    if not 1e-7 <= fd_step <= 1e-3:
        raise InputError("fd_step must lie in [1e-7, 1e-3]")
    z = as_point(X).vec
    m = z.shape[0]
    J = np.empty((m, m))
    for i in range(m):
        e = np.zeros(m)
        e[i] = fd_step
        J[:, i] = (flow_map(z + e) - flow_map(z - e)) / (2 * fd_step)
    omega = symplectic_form(m // 2)
    return float(np.max(np.abs(J.T @ omega @ J - omega)))


def symplectic_check(field: CoefficientField, spec: FlowSpec, t: float, X,
                     fd_step: float = 1e-5) -> float:
    """Symplectic defect of the numeric time-t flow at X."""
    def flow_map(z):
        return flow_numeric(field, spec, (0.0, t), PhasePoint.from_vec(z)).points[-1]
    return symplectic_defect(flow_map, X, fd_step)


# ---------------------------------------------------------------------------
# linear escape bound


@dataclass
class EscapeFit:
    c1: float
    c2: float
    delta_ok: float
    ok: bool
    c2_by_lambda: dict
    witness: tuple | None = None
    message: str = ""


def _envelope(times: Array, radii: Array) -> tuple[float, float]:
    """Lower line through the endpoint: slope from the first half, offset over all."""
    T, rT = times[-1], radii[-1]
    first = times <= 0.5 * T
    slope = float(np.max((rT - radii[first]) / (T - times[first])))
    return slope, float(np.max(slope * times - radii))


def escape_bound_scan(field: CoefficientField, lambda_list: Sequence[float], delta: float,
                      samples: Sequence, rel_tol: float = 1e-10, n_times: int = 400,
                      n_delta: int = 8, rate_floor: float = 0.05, raise_on_violation: bool = False,
                      ) -> EscapeFit:
    """Fit |pi1 exp(t H_{p^lam})(X)| >= c1 t - c2 on 0 <= t <= lam*delta.

    For each trajectory the envelope line passes through the endpoint with the
    smallest slope keeping it below the first half of the orbit; ``c1`` is the
    minimum of those slopes and ``c2`` the offset needed to bound every sample.
    The fit holds when ``c1`` exceeds ``rate_floor`` times the slowest initial
    speed and the per-lambda offsets stay bounded (largest <= 2 x smallest + 1).
    ``delta_ok`` is the largest fraction of ``delta`` (on an ``n_delta`` grid) for
    which the fit holds.
    """
    if delta <= 0:
        raise InputError("delta must be positive")
    samples = [as_point(X) for X in samples]
    for X in samples:
        if not np.any(X.xi):
            raise InputError("escape scan needs xi != 0")
    speeds = [float(np.linalg.norm(field.metric(X.x) @ X.xi)) for X in samples]
    floor = rate_floor * min(speeds)

    curves = []  # (lam, sample index, times, radii)
    for lam in lambda_list:
        spec = FlowSpec("p_lambda", float(lam), rel_tol, rel_tol * 1e-2)
        T = lam * delta
        ts = np.linspace(0.0, T, n_times)
        for i, X in enumerate(samples):
            traj = flow_numeric(field, spec, (0.0, T), X)
            ys = traj.at(ts)[: field.dimension]
            curves.append((float(lam), i, ts, np.linalg.norm(ys, axis=0)))

    def fit(frac):
        c1 = np.inf
        witness = None
        parts = []
        for lam, i, ts, rs in curves:
            keep = ts <= frac * ts[-1] + 1e-12
            s, _ = _envelope(ts[keep], rs[keep])
            parts.append((lam, i, ts[keep], rs[keep]))
            if s < c1:
                c1, witness = s, (lam, i)
        c2_by_lam = {}
        for lam, i, ts, rs in parts:
            c2_by_lam[lam] = max(c2_by_lam.get(lam, 0.0), float(np.max(c1 * ts - rs)), 0.0)
        vals = np.array(list(c2_by_lam.values()))
        stable = vals.max() <= 2.0 * vals.min() + 1.0
        return c1, float(vals.max()), c2_by_lam, bool(c1 > floor and stable), witness

    c1, c2, c2_by_lam, ok, witness = fit(1.0)
    delta_ok = 0.0
    for frac in np.linspace(1.0, 1.0 / n_delta, n_delta):
        if fit(frac)[3]:
            delta_ok = float(frac * delta)
            break
    message = "" if ok else (
        f"escape bound fails: c1={c1:.4g} (floor {floor:.3g}), offsets {c2_by_lam}")
    result = EscapeFit(float(c1), c2, delta_ok, ok, c2_by_lam,
                       None if ok else (witness[0], witness[1], samples[witness[1]]), message)
    if not ok and raise_on_violation:
        raise LemmaViolation(message, witness=result.witness)
    return result
