"""Grid wavefunctions and propagators for H0 and the perturbed oscillator H."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import fft as sfft
from scipy.special import jv

from .errors import DomainError, GridError, InputError, QuadratureError, StabilityError
from .fields import CoefficientField

Array = np.ndarray


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("HOSCAT_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# grids and states


@dataclass(frozen=True)
class SpatialGrid:
    """Periodic grid on prod_j [-L_j, L_j) with N_j points per axis."""

    L: tuple
    N: tuple

    def __post_init__(self):
        L = tuple(float(v) for v in np.atleast_1d(self.L))
        N = tuple(int(v) for v in np.atleast_1d(self.N))
        if len(L) != len(N) or len(L) not in (1, 2):
            raise GridError("grid dimension must be 1 or 2 with matching L and N")
        for n_ in N:
            if n_ < 2 or n_ & (n_ - 1):
                raise GridError(f"point count {n_} is not a power of two")
        if any(v <= 0 for v in L):
            raise GridError("extent L must be positive")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "N", N)

    @classmethod
    def uniform(cls, dimension: int, L: float, N: int) -> "SpatialGrid":
        return cls((L,) * dimension, (N,) * dimension)

    @property
    def dimension(self) -> int:
        return len(self.N)

    @property
    def shape(self) -> tuple:
        return self.N

    @property
    def dx(self) -> tuple:
        return tuple(2 * L / N for L, N in zip(self.L, self.N))

    @property
    def cell(self) -> float:
        return float(np.prod(self.dx))

    @property
    def axes(self) -> list:
        return [-L + dx * np.arange(N) for L, N, dx in zip(self.L, self.N, self.dx)]

    def mesh(self) -> list:
        return np.meshgrid(*self.axes, indexing="ij")

    def points(self) -> Array:
        """All grid points, shape (*N, n)."""
        return np.stack(self.mesh(), axis=-1)

    @property
    def nyquist(self) -> tuple:
        return tuple(np.pi / dx for dx in self.dx)

    def wavenumbers(self, zero_nyquist: bool = True) -> list:
        out = []
        for N, dx in zip(self.N, self.dx):
            k = 2 * np.pi * sfft.fftfreq(N, d=dx)
            if zero_nyquist:
                k[N // 2] = 0.0
            out.append(k)
        return out

    def reflect(self, values: Array, axes: Sequence[int] | None = None) -> Array:
        """u(x) -> u(-x) on the chosen axes: index k -> (N - k) mod N."""
        axes = range(self.dimension) if axes is None else axes
        out = values
        for ax in axes:
            out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
        return out


@dataclass
class WaveFunction:
    grid: SpatialGrid
    values: Array
    declared_h: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise GridError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        self.values = v

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell))

    def inner(self, other: "WaveFunction") -> complex:
        return complex(np.vdot(self.values, other.values) * self.grid.cell)

    def distance(self, other: "WaveFunction") -> float:
        return float(np.sqrt(np.sum(np.abs(self.values - other.values) ** 2) * self.grid.cell))

    def boundary_mass(self, shell: float = 0.05) -> float:
        """Fraction of the mass in the outer ``shell`` of every axis."""
        total = np.sum(np.abs(self.values) ** 2)
        if total == 0:
            return 0.0
        mask = np.zeros(self.grid.shape, dtype=bool)
        for ax, (L, x) in enumerate(zip(self.grid.L, self.grid.axes)):
            edge = np.abs(x) >= (1 - shell) * L
            shape = [1] * self.grid.dimension
            shape[ax] = -1
            mask |= edge.reshape(shape)
        return float(np.sum(np.abs(self.values[mask]) ** 2) / total)

    def reflected(self, axes=None) -> "WaveFunction":
        return WaveFunction(self.grid, self.grid.reflect(self.values, axes), self.declared_h)

    def with_values(self, values) -> "WaveFunction":
        return WaveFunction(self.grid, values, self.declared_h)

    def position_mean(self) -> Array:
        w = np.abs(self.values) ** 2
        w = w / w.sum()
        return np.array([np.sum(w * X) for X in self.grid.mesh()])

    def momentum_mean(self) -> Array:
        """Mean of D = -i d/dx, computed spectrally."""
        u = self.values
        total = np.sum(np.abs(u) ** 2)
        out = []
        for ax, k in enumerate(self.grid.wavenumbers()):
            shape = [1] * self.grid.dimension
            shape[ax] = -1
            Du = sfft.ifft(k.reshape(shape) * sfft.fft(u, axis=ax), axis=ax)
            out.append(float(np.real(np.vdot(u, Du)) / total))
        return np.array(out)

    def save(self, path) -> None:
        write_wf(path, self)


def write_wf(path, u: WaveFunction) -> None:
    """Little-endian header (n, N_j, L_j, h) then interleaved re/im doubles, row-major."""
    g = u.grid
    h = np.nan if u.declared_h is None else float(u.declared_h)
    with open(path, "wb") as fh:
        np.array([g.dimension, *g.N], dtype="<i8").tofile(fh)
        np.array([*g.L, h], dtype="<f8").tofile(fh)
        inter = np.empty(u.values.size * 2, dtype="<f8")
        flat = np.ascontiguousarray(u.values).ravel()
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        inter.tofile(fh)


def read_wf(path) -> WaveFunction:
    with open(path, "rb") as fh:
        n = int(np.fromfile(fh, dtype="<i8", count=1)[0])
        if n not in (1, 2):
            raise GridError(f"corrupt .wf header: dimension {n}")
        N = tuple(int(v) for v in np.fromfile(fh, dtype="<i8", count=n))
        rest = np.fromfile(fh, dtype="<f8", count=n + 1)
        L, h = tuple(rest[:n]), float(rest[n])
        data = np.fromfile(fh, dtype="<f8")
    if data.size != 2 * int(np.prod(N)):
        raise GridError(".wf payload size does not match header")
    vals = (data[0::2] + 1j * data[1::2]).reshape(N)
    return WaveFunction(SpatialGrid(L, N), vals, None if np.isnan(h) else h)


def coherent_state(grid: SpatialGrid, h: float, x0, xi0, check: bool = True) -> WaveFunction:
    """(pi h)^{-n/4} exp(i xi0.(x - x0)/h - |x - x0|^2/(2h))."""
    if not 0 < h <= 1:
        raise InputError("h must lie in (0, 1]")
    n = grid.dimension
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (n,))
    xi0 = np.broadcast_to(np.asarray(xi0, dtype=float), (n,))
    if check:
        width = 8.0 * np.sqrt(h)
        for j in range(n):
            kmax = abs(xi0[j]) / h + 10.0 / np.sqrt(h)
            if grid.nyquist[j] < max(kmax, 2 * abs(xi0[j]) / h):
                raise GridError(f"axis {j}: Nyquist {grid.nyquist[j]:.4g} too small for "
                                f"momentum {abs(xi0[j]) / h:.4g}")
            if abs(x0[j]) + width > grid.L[j]:
                raise GridError(f"axis {j}: center {x0[j]} too close to the boundary")
    X = grid.mesh()
    phase = sum(xi0[j] * (X[j] - x0[j]) for j in range(n)) / h
    r2 = sum((X[j] - x0[j]) ** 2 for j in range(n))
    vals = (np.pi * h) ** (-n / 4) * np.exp(1j * phase - r2 / (2 * h))
    return WaveFunction(grid, vals, h)


# ---------------------------------------------------------------------------
# Fourier transform


def _czt_axis(u: Array, axis: int, x0: float, dx: float, xi0: float, dxi: float, M: int) -> Array:
    """sum_k u_k exp(-i x_k xi_m) dx along ``axis`` for xi_m = xi0 + m dxi.

    Bluestein's algorithm with chirp phases built from the exact angle
    dx * dxi, so no rounding of exp(-i dx dxi) is amplified by k^2.
    """
    u = np.moveaxis(u, axis, -1)
    N = u.shape[-1]
    theta = dx * dxi
    k = np.arange(N, dtype=float)
    m = np.arange(M, dtype=float)
    pre = np.exp(-1j * (k * dx * xi0 + 0.5 * theta * k * k))
    L = sfft.next_fast_len(N + M - 1)
    lag = np.arange(-(N - 1), M, dtype=float)
    chirp = np.zeros(L, dtype=complex)
    chirp[: M] = np.exp(0.5j * theta * lag[N - 1:] ** 2)
    chirp[L - (N - 1):] = np.exp(0.5j * theta * lag[: N - 1] ** 2)
    w = _workers()
    conv = sfft.ifft(sfft.fft(u * pre, n=L, axis=-1, workers=w) * sfft.fft(chirp), axis=-1,
                     workers=w)[..., :M]
    xi = xi0 + dxi * m
    post = np.exp(-1j * (0.5 * theta * m * m + x0 * xi)) * dx / np.sqrt(2 * np.pi)
    return np.moveaxis(conv * post, -1, axis)


def fourier_transform(u: WaveFunction, out_grid: SpatialGrid | None = None,
                      inverse: bool = False) -> WaveFunction:
    """(2 pi)^{-n/2} int e^{-i x.xi} u(x) dx sampled on ``out_grid`` (default: same grid).

    The sum is evaluated exactly on the sampled points by a chirp z-transform.
    """
    g = u.grid
    og = g if out_grid is None else out_grid
    if og.dimension != g.dimension:
        raise InputError("output grid dimension mismatch")
    vals = np.conj(u.values) if inverse else u.values
    for ax in range(g.dimension):
        vals = _czt_axis(vals, ax, -g.L[ax], g.dx[ax], -og.L[ax], og.dx[ax], og.N[ax])
    if inverse:
        # F* u = conj(F conj(u))
        vals = np.conj(vals)
    return WaveFunction(og, vals, u.declared_h)


# ---------------------------------------------------------------------------
# exact H0 propagation


def _along(arr: Array, axis: int, ndim: int) -> Array:
    shape = [1] * ndim
    shape[axis] = -1
    return arr.reshape(shape)


def propagate_H0_exact(nu, t: float, u: WaveFunction, drop_zero_point: bool = False) -> WaveFunction:
    """exp(-i t H0) with H0 = sum_j (-d_j^2 + nu_j^2 x_j^2)/2, per axis.

    Each axis angle nu_j t is split as k pi + r with r in (-pi/2, pi/2]; the k
    half-periods act as reflections times exp(-i k pi/2), and exp(-i r K)
    factorises exactly as chirp(tan(r/2)) . free(sin r) . chirp(tan(r/2)).
    ``drop_zero_point`` removes the global phase exp(-i t sum nu_j / 2).
    """
    g = u.grid
    n = g.dimension
    nu = np.broadcast_to(np.asarray(nu, dtype=float), (n,))
    if np.any(nu <= 0):
        raise InputError("nu must be positive")
    vals = u.values.copy()
    phase = 0.0
    for ax in range(n):
        theta = nu[ax] * t
        k = int(np.floor(theta / np.pi + 0.5))
        r = theta - k * np.pi
        if r <= -np.pi / 2:
            k -= 1
            r += np.pi
        if abs(r) < 1e-15:
            r = 0.0
        if k % 2:
            vals = g.reflect(vals, [ax])
        phase -= k * np.pi / 2
        if drop_zero_point:
            phase += theta / 2
        if r != 0.0:
            x = _along(g.axes[ax], ax, n)
            kk = _along(g.wavenumbers(zero_nyquist=False)[ax], ax, n)
            chirp = np.exp(-0.5j * nu[ax] * np.tan(r / 2) * x * x)
            vals = vals * chirp
            vals = sfft.ifft(np.exp(-0.5j * np.sin(r) / nu[ax] * kk * kk)
                             * sfft.fft(vals, axis=ax, workers=_workers()), axis=ax,
                             workers=_workers())
            vals = vals * chirp
    return WaveFunction(g, vals * np.exp(1j * phase), u.declared_h)


# ---------------------------------------------------------------------------
# perturbed propagation


@dataclass(frozen=True)
class PropagatorSpec:
    """Chebyshev propagator settings.

    ``dt`` caps the step; ``tol`` is the truncation threshold of the Chebyshev
    series; ``max_defect`` bounds the norm change of a single step.
    """

    dt: float = 1e-2
    tol: float = 1e-14
    max_defect: float = 1e-8
    boundary_tol: float = 1e-10

    def __post_init__(self):
        if not 0 < self.dt <= 1e-2:
            raise InputError("dt must lie in (0, 1e-2]")
        if self.max_defect > 1e-8 or self.max_defect <= 0:
            raise InputError("max_defect must lie in (0, 1e-8]")
        if not 0 < self.tol < 1e-6:
            raise InputError("tol must lie in (0, 1e-6)")


@dataclass
class PropagationLog:
    steps: int
    norm_drift: float
    max_boundary_mass: float
    matvecs: int
    spectral_bounds: tuple


class GridHamiltonian:
    """H = 1/2 sum D_j a_jk D_k + 1/2 sum nu_j^2 x_j^2 + V on a periodic grid.

    D = -i d/dx is spectral with the Nyquist mode zeroed, so H is Hermitian.
    """

    def __init__(self, field: CoefficientField, grid: SpatialGrid, nu=None):
        if field.dimension != grid.dimension:
            raise InputError("field and grid dimensions differ")
        self.grid = grid
        n = grid.dimension
        nu = field.nu if nu is None else np.broadcast_to(np.asarray(nu, float), (n,))
        pts = grid.points()
        self.flat_metric = field.is_flat
        self.a = None if field.is_flat else field.metric(pts)
        W = 0.5 * sum(nu[j] ** 2 * pts[..., j] ** 2 for j in range(n))
        self.W = W + field.potential(pts)
        self.k = [_along(k, ax, n) for ax, k in enumerate(grid.wavenumbers())]
        self.matvecs = 0

    def spectral_bounds(self) -> tuple:
        """Certified [E_min, E_max]: the kinetic part is >= 0 and <= max eig(a) |k|^2 / 2."""
        if self.a is None:
            amax = 1.0
        else:
            amax = float(np.linalg.eigvalsh(self.a).max())
        kmax2 = sum(float(np.max(k**2)) for k in self.k)
        lo = float(self.W.min())
        hi = 0.5 * amax * kmax2 + float(self.W.max())
        pad = 1e-3 * (hi - lo) + 1e-12
        return lo - pad, hi + pad

    def _D(self, u, ax):
        w = _workers()
        return sfft.ifft(self.k[ax] * sfft.fft(u, axis=ax, workers=w), axis=ax, workers=w)

    def __call__(self, u: Array) -> Array:
        self.matvecs += 1
        n = self.grid.dimension
        grads = [self._D(u, ax) for ax in range(n)]
        if self.flat_metric:
            flux = grads
        else:
            flux = [sum(self.a[..., j, k] * grads[k] for k in range(n)) for j in range(n)]
        kin = sum(self._D(flux[j], j) for j in range(n))
        return 0.5 * kin + self.W * u


def _chebyshev_coefficients(x: float, tol: float) -> Array:
    """Bessel coefficients J_k(x), truncated once past k > x they drop below ``tol``."""
    kmax = int(x + 10.0 * max(x, 1.0) ** (1.0 / 3.0) + 40)
    c = jv(np.arange(kmax + 1), x)
    tail = np.nonzero((np.arange(kmax + 1) > x) & (np.abs(c) < tol))[0]
    return c[: tail[0] + 1] if tail.size else c


def _chebyshev_step(H: GridHamiltonian, v: Array, tau: float, bounds: tuple, tol: float) -> Array:
    """exp(-i tau H) v = exp(-i tau c) sum_k (2 - d_k0) (-i)^k J_k(tau r) T_k((H - c) / r) v."""
    lo, hi = bounds
    c0, r = 0.5 * (hi + lo), 0.5 * (hi - lo)
    coef = _chebyshev_coefficients(tau * r, tol)

    def Hs(w):
        return (H(w) - c0 * w) / r

    t_prev = v
    t_cur = Hs(v)
    out = coef[0] * t_prev + 2 * (-1j) * coef[1] * t_cur
    phase = -1j
    for k in range(2, coef.size):
        t_next = 2 * Hs(t_cur) - t_prev
        phase *= -1j
        out = out + 2 * phase * coef[k] * t_next
        t_prev, t_cur = t_cur, t_next
    return np.exp(-1j * tau * c0) * out


def propagate_H_numeric(field: CoefficientField, nu, t: float, u: WaveFunction,
                        spec: PropagatorSpec = PropagatorSpec(), log: list | None = None,
                        hamiltonian: GridHamiltonian | None = None) -> WaveFunction:
    """exp(-i t H) u by Chebyshev expansion of the grid Hamiltonian, in steps of at most dt.

    The series is spectrally accurate over the certified spectral interval, so
    no splitting error arises; norm drift and boundary mass are monitored after
    every step.
    """
    if u.boundary_mass() > spec.boundary_tol:
        raise DomainError(f"input boundary mass {u.boundary_mass():.3g} exceeds "
                          f"{spec.boundary_tol:.1g}")
    H = hamiltonian or GridHamiltonian(field, u.grid, nu)
    bounds = H.spectral_bounds()
    sgn = 1.0 if t >= 0 else -1.0
    n_steps = int(np.ceil(abs(t) / spec.dt - 1e-12)) if t != 0 else 0
    tau = abs(t) / n_steps if n_steps else 0.0
    v = u.values.copy()
    norm0 = np.linalg.norm(v)
    max_bm = 0.0
    for step in range(n_steps):
        before = np.linalg.norm(v)
        if sgn > 0:
            v_new = _chebyshev_step(H, v, tau, bounds, spec.tol)
        else:
            # H is real-symmetric, so exp(+i tau H) v = conj(exp(-i tau H) conj(v))
            v_new = np.conj(_chebyshev_step(H, np.conj(v), tau, bounds, spec.tol))
        drift = abs(np.linalg.norm(v_new) / before - 1.0)
        if drift > spec.max_defect:
            raise StabilityError(f"norm drift {drift:.3g} in one step exceeds {spec.max_defect:.1g}")
        v = v_new
        bm = WaveFunction(u.grid, v).boundary_mass()
        max_bm = max(max_bm, bm)
        if bm > spec.boundary_tol:
            raise DomainError(f"boundary mass {bm:.3g} at t={sgn * tau * (step + 1):.4g}; "
                              "enlarge the grid")
    total_drift = abs(np.linalg.norm(v) / norm0 - 1.0) if norm0 else 0.0
    if total_drift > max(n_steps, 1) * spec.max_defect:
        raise StabilityError(f"total norm drift {total_drift:.3g}")
    if log is not None:
        log.append(PropagationLog(n_steps, total_drift, max_bm, H.matvecs, bounds))
    return WaveFunction(u.grid, v, u.declared_h)


# ---------------------------------------------------------------------------
# Weyl quantization (n = 1)


def apply_weyl(symbol: Callable[[Array, Array], Array], h: float, u: WaveFunction,
               xi_cutoff: float | None = None, rel_tol: float = 1e-14,
               content_tol: float = 1e-10, x_support: tuple | None = None) -> WaveFunction:
    """a^w(x, hD) u by banded kernel quadrature on a one-dimensional grid.

    K(m, s) = (2 pi h)^{-1} int e^{i s xi / h} a(m, xi) d xi is summed over the
    dual grid xi = h k, which makes constant symbols act exactly. Then
    a^w u(x_i) = sum_j K(x_i - s_j / 2, s_j) u(x_i - s_j) dx.

    ``xi_cutoff`` declares that ``symbol`` is only meaningful for
    |xi| <= xi_cutoff; it is then smoothly truncated there, and u must carry
    no momentum content beyond half the cutoff.

    ``x_support = (lo, hi)`` declares that the symbol vanishes for x outside
    [lo, hi]; the sum then runs over midpoints in that interval with the full
    periodic lag range, which suits symbols that are narrow in x but whose
    kernel is long in s.
    """
    g = u.grid
    if g.dimension != 1:
        raise InputError("apply_weyl supports one-dimensional grids only")
    if not 0 < h <= 1:
        raise InputError("h must lie in (0, 1]")
    N, dx = g.N[0], g.dx[0]
    x = g.axes[0]
    k = 2 * np.pi * sfft.fftfreq(N, d=dx)
    xi = h * k

    sym = symbol
    if xi_cutoff is not None:
        uk = np.abs(sfft.fft(u.values)) ** 2
        outside = uk[np.abs(xi) > 0.5 * xi_cutoff].sum() / max(uk.sum(), 1e-300)
        if outside > content_tol:
            raise QuadratureError(f"momentum content beyond the declared cutoff: {outside:.3g}")
        window = _smooth_window(np.abs(xi) / xi_cutoff)

        def sym(m, s, _a=symbol, _w=window):
            return _a(m, s) * _w
    amp = np.abs(u.values)
    if amp.max() == 0:
        return u.with_values(np.zeros(N, dtype=complex))

    def kernel_rows(m):
        A = np.asarray(sym(m[:, None], xi[None, :]), dtype=complex)
        A = np.broadcast_to(A, (m.size, N))
        # sum_k a(m, h k) e^{i s_j k} / (N dx) for s_j = j dx, j in fft order
        return sfft.ifft(A, axis=1) / dx

    if x_support is not None:
        return u.with_values(_weyl_by_midpoints(kernel_rows, u.values, x[0], dx, x_support))

    # estimate the band from a coarse sample of midpoints inside the support
    active = np.nonzero(amp > rel_tol * amp.max())[0]
    lo, hi = active.min(), active.max()
    sample = x[np.unique(np.linspace(lo, hi, 16).astype(int))]
    prof = np.abs(kernel_rows(sample)).max(axis=0)
    lag = np.abs(sfft.fftfreq(N, d=1.0 / N)).astype(int)
    thresh = rel_tol * prof.max()
    sig = lag[prof > thresh]
    J = int(sig.max()) + 2 if sig.size else 0
    if J >= N // 2 - 1:
        raise QuadratureError("Weyl kernel does not decay within the grid; declare xi_cutoff")

    rows = np.arange(max(lo - J, 0), min(hi + J, N - 1) + 1)
    offsets = np.arange(-J, J + 1)
    q = 2 * rows[:, None] - offsets[None, :]          # midpoint index on the half grid
    qmin, qmax = q.min(), q.max()
    mids = x[0] + 0.5 * dx * np.arange(qmin, qmax + 1)
    cols = offsets % N
    table = np.empty((mids.size, offsets.size), dtype=complex)
    chunk = max(1, 2**22 // N)
    for s in range(0, mids.size, chunk):
        table[s:s + chunk] = kernel_rows(mids[s:s + chunk])[:, cols]
    edge = np.abs(table[:, [0, -1]]).max() if J > 0 else 0.0
    if J > 0 and edge > 10 * thresh:
        raise QuadratureError(f"Weyl kernel not decayed at band edge ({edge:.3g})")
    src = rows[:, None] - offsets[None, :]
    valid = (src >= 0) & (src < N)
    uu = np.where(valid, u.values[np.clip(src, 0, N - 1)], 0.0)
    K = table[q - qmin, np.arange(offsets.size)[None, :]]
    out = np.zeros(N, dtype=complex)
    out[rows] = np.sum(K * uu, axis=1) * dx
    return u.with_values(out)


def _weyl_by_midpoints(kernel_rows, values: Array, x0: float, dx: float, support) -> Array:
    """Scatter sum over half-grid midpoints q in the support: out[(q+j)/2] += K u[(q-j)/2] dx."""
    N = values.size
    lo, hi = support
    qlo = max(int(np.floor(2 * (lo - x0) / dx)), -N)
    qhi = min(int(np.ceil(2 * (hi - x0) / dx)), 3 * N)
    lags = np.rint(sfft.fftfreq(N, d=1.0 / N)).astype(int)
    out_re = np.zeros(N)
    out_im = np.zeros(N)
    chunk = max(1, 2**21 // N)
    for start in range(qlo, qhi + 1, chunk):
        q = np.arange(start, min(start + chunk, qhi + 1))
        K = kernel_rows(x0 + 0.5 * dx * q)
        qq, jj = np.broadcast_arrays(q[:, None], lags[None, :])
        even = ((qq + jj) % 2) == 0
        i = (qq + jj) // 2
        src = (qq - jj) // 2
        ok = even & (i >= 0) & (i < N) & (src >= 0) & (src < N)
        contrib = K[ok] * values[src[ok]]
        out_re += np.bincount(i[ok], weights=contrib.real, minlength=N)
        out_im += np.bincount(i[ok], weights=contrib.imag, minlength=N)
    return (out_re + 1j * out_im) * dx


def _smooth_window(r: Array) -> Array:
    """1 on r <= 0.5, 0 on r >= 1, C-infinity in between."""
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    mid = (r > 0.5) & (r < 1)
    s = (r[mid] - 0.5) / 0.5

    def f(z):
        return np.where(z > 0, np.exp(-1.0 / np.maximum(z, 1e-300)), 0.0)

    out[mid] = f(1 - s) / (f(1 - s) + f(s))
    out[r >= 1] = 0.0
    return out


def harmonic_phase_map(h: float, t: float, x, xi):
    """Phi^h_t(x, xi) = (cos t x + sin t xi / h, -h sin t x + cos t xi).

    Conjugation identity: e^{itH0} a^w(x, hD) e^{-itH0} = (a o Phi^h_t)^w(x, hD).
    """
    c, s = np.cos(t), np.sin(t)
    return c * x + s * xi / h, -h * s * x + c * xi
