"""Perturbation fields and the classical symbols built from them.

A :class:`CoefficientField` bundles a metric ``a(x)``, a potential ``V(x)``, the
decay rate ``mu`` and the oscillator frequencies ``nu``.  All field callables are
vectorised over leading axes: ``x`` has shape ``(..., n)`` and the metric comes
back as ``(..., n, n)`` with gradient ``(..., n, n, n)`` indexed ``[j, k, l]`` for
``d a_jk / d x_l``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, NamedTuple

import numpy as np

from .errors import FieldError, InputError

Array = np.ndarray


def japanese(x: Array) -> Array:
    """<x> = sqrt(1 + |x|^2) over the last axis."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(1.0 + np.sum(x * x, axis=-1))


@dataclass(frozen=True)
class CoefficientField:
    """Short-range perturbation data of the oscillator ``H``.

    ``metric`` / ``metric_grad`` / ``potential`` / ``potential_grad`` take
    positions of shape ``(..., n)``.
    """

    dimension: int
    metric: Callable[[Array], Array]
    metric_grad: Callable[[Array], Array]
    potential: Callable[[Array], Array]
    potential_grad: Callable[[Array], Array]
    decay_mu: float
    oscillator_weights: Array
    derivative_order: int = 2
    family: str = "custom"
    params: dict = dc_field(default_factory=dict)
    metric_deviation: Callable[[Array], Array] | None = None

    def deviation(self, x) -> Array:
        """a(x) - I, free of cancellation when the family provides it."""
        if self.metric_deviation is not None:
            return self.metric_deviation(x)
        return self.metric(x) - np.eye(self.dimension)

    def __post_init__(self):
        if self.dimension < 1:
            raise InputError("dimension must be positive")
        nu = np.asarray(self.oscillator_weights, dtype=float).reshape(-1)
        if nu.shape != (self.dimension,):
            raise InputError(f"oscillator_weights must have length {self.dimension}")
        if np.any(nu <= 0):
            raise InputError("oscillator weights must be positive")
        object.__setattr__(self, "oscillator_weights", nu)
        if self.decay_mu <= 1:
            raise InputError("decay rate mu must exceed 1")
        if self.derivative_order < 2:
            raise InputError("derivative_order must be at least 2")

    @property
    def nu(self) -> Array:
        return self.oscillator_weights

    @property
    def is_flat(self) -> bool:
        return self.family == "flat"

    def with_weights(self, nu) -> "CoefficientField":
        """Same perturbation, different oscillator frequencies."""
        return CoefficientField(
            self.dimension, self.metric, self.metric_grad, self.potential,
            self.potential_grad, self.decay_mu, np.asarray(nu, dtype=float),
            self.derivative_order, self.family, dict(self.params), self.metric_deviation,
        )


# ---------------------------------------------------------------------------
# built-in families


def _identity_metric(n):
    def metric(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(n), x.shape[:-1] + (n, n)).copy()

    def metric_grad(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (n, n, n))

    return metric, metric_grad


def _rational_potential(coef, mu):
    """V = coef * <x>^(2 - mu)."""

    def potential(x):
        return coef * japanese(x) ** (2.0 - mu)

    def potential_grad(x):
        x = np.asarray(x, dtype=float)
        jx = japanese(x)
        return (coef * (2.0 - mu) * jx ** (-mu))[..., None] * x

    return potential, potential_grad


def _conformal(n, profile):
    """Metric a = (1 + B(x)) I from a profile returning (B, grad B)."""

    def metric(x):
        B, _ = profile(np.asarray(x, dtype=float))
        return (1.0 + B)[..., None, None] * np.eye(n)

    def deviation(x):
        B, _ = profile(np.asarray(x, dtype=float))
        return B[..., None, None] * np.eye(n)

    def metric_grad(x):
        _, dA = profile(np.asarray(x, dtype=float))
        return np.eye(n)[..., None] * dA[..., None, None, :]

    return metric, metric_grad, deviation


def make_field(family: str, dimension: int = 1, *, c: float = 0.0, mu: float = 2.0,
               width: float = 1.0, ring_radius: float = 1.0, v: float = 0.0,
               nu=None) -> CoefficientField:
    """Build one of the registered field families.

    Families
    --------
    ``flat``
        a = I, V = 0.
    ``rational``
        a = (1 + c <x>^-mu) I.
    ``offdiag``
        a_jk = delta_jk + c <x>^(-mu-2) x_j x_k  (anisotropic, off-diagonal).
    ``gaussian``
        a = (1 + c exp(-|x|^2 / width^2)) I.
    ``ring``
        a = (1 + c exp(-(|x|^2 - ring_radius^2)^2 / width^4)) I; with c < 0 this
        carries a stable circular geodesic in two dimensions.
    ``potential``
        a = I, V = v <x>^(2 - mu).

    Any family accepts ``v`` to add the rational potential on top of the metric.
    """
    n = int(dimension)
    nu = np.ones(n) if nu is None else np.asarray(nu, dtype=float)
    params = dict(c=c, mu=mu, width=width, ring_radius=ring_radius, v=v)

    deviation = None
    if family in ("flat", "potential"):
        metric, metric_grad = _identity_metric(n)
    elif family == "rational":
        def profile(x):
            jx = japanese(x)
            A = c * jx ** (-mu)
            dA = (-c * mu * jx ** (-mu - 2.0))[..., None] * x
            return A, dA
        metric, metric_grad, deviation = _conformal(n, profile)
    elif family == "gaussian":
        def profile(x):
            g = np.exp(-np.sum(x * x, axis=-1) / width**2)
            return c * g, (-2.0 * c * g / width**2)[..., None] * x
        metric, metric_grad, deviation = _conformal(n, profile)
    elif family == "ring":
        def profile(x):
            s = np.sum(x * x, axis=-1) - ring_radius**2
            g = np.exp(-(s * s) / width**4)
            return c * g, (-4.0 * c * s * g / width**4)[..., None] * x
        metric, metric_grad, deviation = _conformal(n, profile)
    elif family == "offdiag":
        def metric(x):
            return np.eye(n) + deviation(x)

        def deviation(x):
            x = np.asarray(x, dtype=float)
            w = c * japanese(x) ** (-mu - 2.0)
            return w[..., None, None] * x[..., :, None] * x[..., None, :]

        def metric_grad(x):
            x = np.asarray(x, dtype=float)
            jx = japanese(x)
            w = c * jx ** (-mu - 2.0)
            dw = (-c * (mu + 2.0) * jx ** (-mu - 4.0))[..., None] * x
            eye = np.eye(n)
            xx = x[..., :, None] * x[..., None, :]
            # d(x_j x_k)/dx_l = delta_jl x_k + x_j delta_kl
            dxx = eye[:, None, :] * x[..., None, :, None] + x[..., :, None, None] * eye[None, :, :]
            return w[..., None, None, None] * dxx + xx[..., None] * dw[..., None, None, :]
    else:
        raise InputError(f"unknown field family {family!r}")

    if family == "flat":
        v = 0.0
        params = dict(c=0.0, mu=mu, width=width, ring_radius=ring_radius, v=0.0)
    potential, potential_grad = _rational_potential(v, mu)
    if family == "potential" and c != 0.0 and v == 0.0:
        # allow ``c`` as the potential strength for this family
        params["v"] = c
        potential, potential_grad = _rational_potential(c, mu)

    return CoefficientField(n, metric, metric_grad, potential, potential_grad,
                            float(mu), nu, 2, family, params, deviation)


def flat_field(dimension: int = 1, nu=None) -> CoefficientField:
    return make_field("flat", dimension, nu=nu)


FAMILIES = ("flat", "rational", "offdiag", "gaussian", "ring", "potential")


def field_from_spec(spec: dict) -> CoefficientField:
    """Build a field from a config mapping ``{family, dimension, params, mu, nu}``."""
    params = dict(spec.get("params", {}))
    if "mu" in spec:
        params["mu"] = spec["mu"]
    return make_field(spec["family"], spec.get("dimension", 1), nu=spec.get("nu"), **params)


def diagonalize_harmonic(b) -> tuple[Array, Array]:
    """Frequencies ``nu`` and orthogonal ``Q`` with ``Q.T @ b @ Q = diag(nu**2)``."""
    b = np.asarray(b, dtype=float)
    if not np.allclose(b, b.T):
        raise InputError("harmonic matrix must be symmetric")
    evals, Q = np.linalg.eigh(b)
    if np.any(evals <= 0):
        raise InputError("harmonic matrix must be positive definite")
    return np.sqrt(evals), Q


# ---------------------------------------------------------------------------
# symbols


class Gradient(NamedTuple):
    x: Array
    xi: Array


@dataclass(frozen=True)
class SymbolValues:
    p: float
    p0: float
    k: float
    k0: float
    p_grad: Gradient
    p0_grad: Gradient
    k_grad: Gradient
    k0_grad: Gradient


def _check_point(field: CoefficientField, x, xi):
    x = np.asarray(x, dtype=float).reshape(-1)
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if x.shape != (field.dimension,) or xi.shape != (field.dimension,):
        raise InputError(
            f"expected length-{field.dimension} position and momentum, got {x.shape}, {xi.shape}")
    return x, xi


def _symbols(field, x, xi, inv_lam2):
    nu2 = field.nu**2
    a = field.metric(x)
    da = field.metric_grad(x)
    V = float(field.potential(x))
    dV = field.potential_grad(x)

    a_xi = a @ xi
    k = 0.5 * float(xi @ a_xi)
    k_grad = Gradient(0.5 * np.einsum("jkl,j,k->l", da, xi, xi), a_xi)
    k0 = 0.5 * float(xi @ xi)
    k0_grad = Gradient(np.zeros_like(x), xi.copy())

    harm = 0.5 * float(np.sum(nu2 * x * x)) * inv_lam2
    harm_grad = nu2 * x * inv_lam2
    p = k + harm + V * inv_lam2
    p_grad = Gradient(k_grad.x + harm_grad + dV * inv_lam2, k_grad.xi.copy())
    p0 = k0 + harm
    p0_grad = Gradient(harm_grad.copy(), xi.copy())
    values = SymbolValues(p, p0, k, k0, p_grad, p0_grad, k_grad, k0_grad)
    if not np.isfinite([p, p0, k, k0]).all():
        raise FieldError(f"non-finite symbol value at x={x}, xi={xi}")
    return values


def eval_symbols(field: CoefficientField, x, xi) -> SymbolValues:
    """p, p0, k, k0 and their exact phase-space gradients at (x, xi)."""
    x, xi = _check_point(field, x, xi)
    return _symbols(field, x, xi, 1.0)


def eval_scaled_symbols(field: CoefficientField, lam: float, x, xi) -> SymbolValues:
    """High-energy rescaled symbols: harmonic and potential terms divided by lam^2.

    ``p`` and ``p0`` of the result are p^lam and p0^lam; ``k``/``k0`` are unchanged.
    """
    if not lam > 0:
        raise InputError("lambda must be positive")
    x, xi = _check_point(field, x, xi)
    return _symbols(field, x, xi, 1.0 / (float(lam) * float(lam)))


def harmonic_rotation(nu: Array, lam: float, t: float):
    """Per-coordinate coefficients (c, s/w, -w s) of exp(t H_{p0^lam}), w = nu/lam."""
    w = np.asarray(nu, dtype=float) / lam
    c = np.cos(w * t)
    s = np.sin(w * t)
    return c, s / w, -w * s


def eval_ell(field: CoefficientField, t: float, x, xi, lam: float | None = None):
    """The interaction-picture generator l(t; x, xi) = p o exp(t H_p0) - p0.

    With ``lam`` given this is the rescaled l^lam built from p^lam and p0^lam.
    Returns ``(value, Gradient)``.
    """
    x, xi = _check_point(field, x, xi)
    lam = 1.0 if lam is None else float(lam)
    if not lam > 0:
        raise InputError("lambda must be positive")
    return _ell(field, t, x, xi, lam)


def _ell(field, t, x, xi, lam):
    c, s_over_w, minus_ws = harmonic_rotation(field.nu, lam, t)
    y = c * x + s_over_w * xi
    eta = minus_ws * x + c * xi
    inv_lam2 = 1.0 / (lam * lam)
    a = field.metric(y)
    da = field.metric_grad(y)
    b = a - np.eye(field.dimension)
    b_eta = b @ eta
    value = 0.5 * float(eta @ b_eta) + float(field.potential(y)) * inv_lam2
    gy = 0.5 * np.einsum("jkl,j,k->l", da, eta, eta) + field.potential_grad(y) * inv_lam2
    geta = b_eta
    # chain rule through the linear rotation (y, eta) = R (x, xi)
    grad = Gradient(c * gy + minus_ws * geta, s_over_w * gy + c * geta)
    return value, grad


# ---------------------------------------------------------------------------
# Assumption A audit


@dataclass
class AuditReport:
    constants_metric: dict
    constants_potential: dict
    margin: float
    violations: list
    radius: float
    orders: int

    @property
    def ok(self) -> bool:
        return not self.violations


def _multi_indices(n, order):
    if order == 0:
        return [()]
    out = []
    def rec(prefix, start, left):
        if left == 0:
            out.append(tuple(prefix))
            return
        for i in range(start, n):
            rec(prefix + [i], i, left - 1)
    rec([], 0, order)
    return out


def _radial_samples(n, radius, n_radii=400, n_dirs=16):
    r = np.concatenate([[0.0], np.geomspace(1e-3, radius, n_radii - 1)])
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif n == 2:
        ang = np.linspace(0, 2 * np.pi, n_dirs, endpoint=False)
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    else:
        rng = np.random.default_rng(0)
        dirs = rng.normal(size=(n_dirs, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pts = r[:, None, None] * dirs[None, :, :]
    return r, pts.reshape(-1, n)


def _derivative(fun_grad, x, alpha):
    """d^alpha of a quantity whose analytic gradient is ``fun_grad`` (last axis)."""
    # order 1 analytic; order 2 by central differences of the analytic gradient
    if len(alpha) == 1:
        return fun_grad(x)[..., alpha[0]]
    l, m = alpha
    step = 1e-4 * japanese(x)
    e = np.zeros(x.shape[-1])
    e[m] = 1.0
    xp = x + step[..., None] * e
    xm = x - step[..., None] * e
    return (fun_grad(xp)[..., l] - fun_grad(xm)[..., l]) / (2 * step)


def check_assumption_A(field: CoefficientField, radius: float = 100.0, orders: int = 2,
                       n_radii: int = 400) -> AuditReport:
    """Fit the decay constants of a - I and V on a radial grid.

    For each multi-index alpha with |alpha| <= orders the constant is the sampled
    supremum of |d^alpha (a_jk - delta_jk)| <x>^(mu+|alpha|) (and
    |d^alpha V| <x>^(|alpha|+mu-2)).  A decay violation is flagged when the
    weighted quantity still grows polynomially over the outer decade of radii.
    A metric failing positive definiteness raises ``FieldError`` with the point.
    """
    if radius <= 0:
        raise InputError("radius must be positive")
    if orders > field.derivative_order:
        raise InputError(f"orders {orders} exceeds derivative_order {field.derivative_order}")
    n = field.dimension
    mu = field.decay_mu
    r, pts = _radial_samples(n, radius, n_radii)
    a = field.metric(pts)
    eig = np.linalg.eigvalsh(a)
    min_eig = eig[:, 0]
    if np.any(min_eig <= 0):
        i = int(np.argmin(min_eig))
        raise FieldError(f"metric not positive definite at x={pts[i]} "
                         f"(smallest eigenvalue {min_eig[i]:.6g})", witness=pts[i])
    jx = japanese(pts)
    outer = np.linalg.norm(pts, axis=-1) >= radius / 10

    const_a, const_v, violations = {}, {}, []

    def record(store, key, vals, weight_exp, label):
        weighted = np.abs(vals).reshape(len(pts), -1).max(axis=1) * jx**weight_exp
        store[key] = float(weighted.max())
        w_out = weighted[outer]
        if w_out.size and w_out.max() > 1e-300:
            rr = np.log(jx[outer])
            ww = np.log(np.maximum(w_out, 1e-300))
            slope = np.polyfit(rr, ww, 1)[0] if np.ptp(rr) > 0 else 0.0
            if slope > 0.05 and w_out.max() > 1e-12:
                violations.append(f"{label} alpha={key}: weighted bound grows like <x>^{slope:.2f}")

    eye = np.eye(n)
    for order in range(orders + 1):
        for alpha in _multi_indices(n, order):
            if order == 0:
                da = a - eye
                dv = field.potential(pts)
            else:
                if order == 1:
                    da = field.metric_grad(pts)[..., alpha[0]]
                else:
                    da = _derivative2_metric(field, pts, alpha)
                dv = _derivative(field.potential_grad, pts, alpha)
            record(const_a, alpha, da, mu + order, "metric")
            record(const_v, alpha, dv, mu + order - 2.0, "potential")
    return AuditReport(const_a, const_v, float(min_eig.min()), violations, radius, orders)


def _derivative2_metric(field, pts, alpha):
    l, m = alpha
    step = 1e-4 * japanese(pts)
    e = np.zeros(pts.shape[-1])
    e[m] = 1.0
    gp = field.metric_grad(pts + step[..., None] * e)[..., l]
    gm = field.metric_grad(pts - step[..., None] * e)[..., l]
    return (gp - gm) / (2 * step[..., None, None])
