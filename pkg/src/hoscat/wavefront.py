"""Finite-h wavefront proxies: FBI transform, decay exponents, detection, rotated symbols."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence, Union

import numpy as np
from scipy import fft as sfft

from .classflow import PhasePoint, as_point
from .errors import InputError
from .quantum import WaveFunction, _smooth_window, apply_weyl, harmonic_phase_map

Array = np.ndarray
Family = Union[WaveFunction, Callable[[float], WaveFunction]]

S_THR = 1.5
S_SMOOTH = 3.0
RESIDUAL_CAP = 0.15
FLOOR = 1e-15
GAUSS_K = 39.0
DEFAULT_H = (1 / 8, 1 / 16, 1 / 32, 1 / 64, 1 / 128)

PROXY_NOTE = ("finite-h proxy: exponents are fitted decay rates of microlocal norms over the "
              "listed h values; they stand in for, and do not certify, the C-infinity wavefront set")


@dataclass(frozen=True)
class PhaseGrid:
    """Rectangular lattice in (x, xi) for n = 1."""

    x_range: tuple
    xi_range: tuple
    counts: tuple = (41, 41)

    def __post_init__(self):
        if self.x_range[1] <= self.x_range[0] or self.xi_range[1] <= self.xi_range[0]:
            raise InputError("phase grid ranges must be increasing")
        if min(self.counts) < 1:
            raise InputError("phase grid counts must be positive")

    @property
    def xs(self) -> Array:
        return np.linspace(*self.x_range, self.counts[0])

    @property
    def xis(self) -> Array:
        return np.linspace(*self.xi_range, self.counts[1])

    def points(self) -> list:
        return [PhasePoint([x], [xi]) for x in self.xs for xi in self.xis]

    def check_margin(self, grid, h: float) -> None:
        """The x range must sit 3 sqrt(h) inside the spatial grid."""
        m = 3 * np.sqrt(h)
        L = grid.L[0]
        if self.x_range[0] - m < -L or self.x_range[1] + m > L:
            raise InputError(f"phase grid x range {self.x_range} too close to the spatial boundary")


def fbi_constant(h: float, n: int, normalization: str) -> float:
    if normalization == "isometric":
        return 2.0 ** (-n / 2) * (np.pi * h) ** (-3 * n / 4)
    if normalization == "peak":
        return (np.pi * h) ** (-n / 4)
    raise InputError(f"unknown normalization {normalization!r}")


def _window(h: float, dx: float) -> int:
    # exp(-d^2/(2h)) < 1e-18 beyond d = sqrt(2 h 41.5)
    return int(np.ceil(np.sqrt(83.0 * h) / dx))


def fbi_values(u: WaveFunction, h: float, xs: Array, xis: Array,
               normalization: str = "isometric") -> Array:
    """Complex T_h u on the lattice xs x xis (n = 1), shape (len(xs), len(xis)).

    T_h u(x, xi) = c int exp(-i xi y / h - (x - y)^2 / (2h)) u(y) dy, evaluated
    per x-slice over the Gaussian window by a chirp z-transform in xi.
    """
    g = u.grid
    if g.dimension != 1:
        raise InputError("fbi_values handles one-dimensional grids; use fbi_points for n = 2")
    if not 0 < h <= 1:
        raise InputError("h must lie in (0, 1]")
    from .quantum import _czt_axis
    xs = np.atleast_1d(np.asarray(xs, float))
    xis = np.atleast_1d(np.asarray(xis, float))
    y = g.axes[0]
    dx = g.dx[0]
    N = g.N[0]
    W = _window(h, dx)
    c = fbi_constant(h, 1, normalization)
    out = np.zeros((xs.size, xis.size), dtype=complex)
    uniform = xis.size > 1 and np.allclose(np.diff(xis), xis[1] - xis[0])
    for i, x in enumerate(xs):
        centre = int(round((x - y[0]) / dx))
        lo, hi = max(centre - W, 0), min(centre + W + 1, N)
        if lo >= hi:
            continue
        seg = u.values[lo:hi] * np.exp(-((x - y[lo:hi]) ** 2) / (2 * h))
        if uniform:
            dxi = (xis[1] - xis[0]) / h
            out[i] = _czt_axis(seg, 0, y[lo], dx, xis[0] / h, dxi, xis.size) * np.sqrt(2 * np.pi)
        else:
            out[i] = np.exp(-1j * np.outer(xis, y[lo:hi]) / h) @ seg * dx
    return c * out


def fbi_points(u: WaveFunction, h: float, points: Sequence, normalization: str = "isometric") -> Array:
    """Complex T_h u at arbitrary phase points, any grid dimension (direct sums)."""
    g = u.grid
    n = g.dimension
    c = fbi_constant(h, n, normalization)
    mesh = g.mesh()
    out = np.empty(len(points), dtype=complex)
    for k, P in enumerate(points):
        P = as_point(P)
        if P.n != n:
            raise InputError("phase point dimension mismatch")
        sl = []
        for ax in range(n):
            W = _window(h, g.dx[ax])
            centre = int(round((P.x[ax] + g.L[ax]) / g.dx[ax]))
            sl.append(slice(max(centre - W, 0), min(centre + W + 1, g.N[ax])))
        sl = tuple(sl)
        r2 = sum((mesh[ax][sl] - P.x[ax]) ** 2 for ax in range(n))
        ph = sum(P.xi[ax] * mesh[ax][sl] for ax in range(n)) / h
        out[k] = c * np.sum(np.exp(-1j * ph - r2 / (2 * h)) * u.values[sl]) * g.cell
    return out


def fbi_transform(u: WaveFunction, h: float, grid: PhaseGrid, normalization: str = "isometric",
                  check_margin: bool = True) -> Array:
    """|T_h u| on a phase lattice."""
    if check_margin:
        grid.check_margin(u.grid, h)
    return np.abs(fbi_values(u, h, grid.xs, grid.xis, normalization))


# ---------------------------------------------------------------------------
# decay exponents


@dataclass
class DecayFit:
    slope: float
    residual: float
    magnitudes: Array
    h_sequence: Array
    floor_limited: bool = False

    def classify(self, s_thr=S_THR, s_smooth=S_SMOOTH, cap=RESIDUAL_CAP) -> str:
        return classify_slope(self.slope, self.residual, self.floor_limited, s_thr, s_smooth, cap)


def classify_slope(slope, residual, floor_limited=False, s_thr=S_THR, s_smooth=S_SMOOTH,
                   cap=RESIDUAL_CAP) -> str:
    if floor_limited and not np.isfinite(slope):
        return "smooth"
    if slope >= s_smooth:
        return "smooth"
    if slope <= s_thr and residual <= cap:
        return "in_WF"
    return "inconclusive"


def fit_decay(hs, mags) -> DecayFit:
    """Least-squares slope of log10 M against log10 h over the values above the floor."""
    hs = np.asarray(hs, float)
    mags = np.asarray(mags, float)
    keep = mags > FLOOR
    if keep.sum() < 2:
        slope = np.inf if keep.sum() < len(mags) else np.nan
        return DecayFit(slope, np.nan, mags, hs, True)
    lh, lm = np.log10(hs[keep]), np.log10(mags[keep])
    coef = np.polyfit(lh, lm, 1)
    resid = float(np.sqrt(np.mean((np.polyval(coef, lh) - lm) ** 2)))
    return DecayFit(float(coef[0]), resid, mags, hs, bool(keep.sum() < len(mags)))


def _check_h_sequence(hs) -> Array:
    hs = np.asarray(hs, float)
    if hs.size < 4:
        raise InputError("at least four h values are required")
    if np.any(hs <= 0) or np.any(hs > 1):
        raise InputError("h values must lie in (0, 1]")
    ratios = hs[1:] / hs[:-1]
    if not np.allclose(ratios, ratios[0], rtol=1e-6):
        raise InputError("h values must form a geometric sequence")
    return hs


def _state(family: Family, h: float) -> WaveFunction:
    return family if isinstance(family, WaveFunction) else family(h)


def box_norm(u: WaveFunction, h: float, point, radius: float = 0.25) -> float:
    """(int int_box |T_h u|^2 dx dxi)^{1/2} over the square of half-width ``radius``.

    With the isometric normalization this is the phase-space mass of u near
    the point, the same quantity a cutoff symbol a^w(x, hD) u measures.
    """
    P = as_point(point)
    step = min(0.25 * np.sqrt(h), radius / 4)
    m = int(np.ceil(radius / step))
    offs = np.linspace(-radius, radius, 2 * m + 1)
    T = fbi_values(u, h, P.x[0] + offs, P.xi[0] + offs, "isometric")
    d = offs[1] - offs[0]
    w = np.ones_like(offs)
    w[0] = w[-1] = 0.5
    return float(np.sqrt(np.einsum("i,j,ij->", w, w, np.abs(T) ** 2) * d * d))


def decay_exponent(u_family: Family, point, h_sequence=DEFAULT_H, radius: float = 0.25) -> DecayFit:
    """Slope s of M(h) ~ h^s, M the box norm of T_h u_h around ``point``."""
    hs = _check_h_sequence(h_sequence)
    mags = [box_norm(_state(u_family, h), h, point, radius) for h in hs]
    return fit_decay(hs, mags)


# ---------------------------------------------------------------------------
# detection


@dataclass
class WFReport:
    points: list
    exponents: Array
    residuals: Array
    classification: list
    h_sequence: Array
    s_thr: float = S_THR
    s_smooth: float = S_SMOOTH
    peak: PhasePoint | None = None
    note: str = PROXY_NOTE
    extra: dict = dc_field(default_factory=dict)

    def in_wf(self) -> list:
        return [p for p, c in zip(self.points, self.classification) if c == "in_WF"]

    def to_csv(self, path) -> None:
        n = self.points[0].n if self.points else 1
        with open(path, "w", newline="") as fh:
            fh.write(f"# {self.note}\n")
            fh.write("# h_sequence=" + ";".join(f"{h:.10g}" for h in self.h_sequence) + "\n")
            w = csv.writer(fh)
            w.writerow([f"x{j}" for j in range(n)] + [f"xi{j}" for j in range(n)]
                       + ["exponent", "residual", "classification"])
            for P, s, r, c in zip(self.points, self.exponents, self.residuals, self.classification):
                w.writerow([f"{v:.10g}" for v in P.x] + [f"{v:.10g}" for v in P.xi]
                           + [f"{s:.10g}", f"{r:.10g}", c])


def _box_sums(A: Array, m: int) -> Array:
    """Sum over (2m+1)^2 windows with a summed-area table, zero padded."""
    P = np.pad(A, m)
    S = np.zeros((P.shape[0] + 1, P.shape[1] + 1))
    S[1:, 1:] = P.cumsum(0).cumsum(1)
    k = 2 * m + 1
    return S[k:, k:] - S[:-k, k:] - S[k:, :-k] + S[:-k, :-k]


def locate_peak(values: Array, xs: Array, xis: Array) -> PhasePoint:
    """Lattice argmax of |T| refined by a parabola through log|T| per axis."""
    A = np.abs(values)
    i, j = np.unravel_index(np.argmax(A), A.shape)

    def refine(f, k, grid):
        if 0 < k < len(grid) - 1 and np.all(f[k - 1:k + 2] > 0):
            a, b, c = np.log(f[k - 1:k + 2])
            den = a - 2 * b + c
            if den < 0:
                return grid[k] + 0.5 * (a - c) / den * (grid[1] - grid[0])
        return grid[k]

    return PhasePoint([refine(A[:, j], i, xs)], [refine(A[i, :], j, xis)])


def wf_detect(u_family: Family, region: PhaseGrid, h_sequence=DEFAULT_H, radius: float = 0.25,
              s_thr: float = S_THR, s_smooth: float = S_SMOOTH, cap: float = RESIDUAL_CAP,
              ) -> WFReport:
    """Decay exponents and classifications over a phase lattice (n = 1).

    Box norms are assembled from one fine FBI lattice per h. The peak of the
    smallest-h transform is reported for concentrated states.
    """
    hs = _check_h_sequence(h_sequence)
    xs, xis = region.xs, region.xis
    step = 0.25 * np.sqrt(hs.min())
    for arr in (xs, xis):
        if arr.size > 1:
            step = min(step, float(arr[1] - arr[0]))
    m = int(np.ceil(radius / step))
    step = radius / m
    fx = np.arange(xs[0] - radius, xs[-1] + radius + 0.5 * step, step)
    fxi = np.arange(xis[0] - radius, xis[-1] + radius + 0.5 * step, step)
    ix = np.rint((xs - fx[0]) / step).astype(int)
    ixi = np.rint((xis - fxi[0]) / step).astype(int)
    mags = np.zeros((hs.size, xs.size, xis.size))
    peak = None
    for k, h in enumerate(hs):
        u = _state(u_family, h)
        region.check_margin(u.grid, h)
        T = fbi_values(u, h, fx, fxi, "isometric")
        sums = _box_sums(np.abs(T) ** 2, m)
        mags[k] = np.sqrt(np.maximum(sums[np.ix_(ix, ixi)], 0.0) * step * step)
        if h == hs.min():
            peak = locate_peak(T, fx, fxi)
    points, exps, res, cls = [], [], [], []
    for a, x in enumerate(xs):
        for b, xi in enumerate(xis):
            fit = fit_decay(hs, mags[:, a, b])
            points.append(PhasePoint([x], [xi]))
            exps.append(fit.slope)
            res.append(fit.residual)
            cls.append(classify_slope(fit.slope, fit.residual, fit.floor_limited, s_thr,
                                      s_smooth, cap))
    return WFReport(points, np.array(exps), np.array(res), cls, hs, s_thr, s_smooth, peak)


def detect_peak(u: WaveFunction, h: float, guess, radius: float = 1.0,
                n_points: int = 81) -> PhasePoint:
    """Peak of |T_h u| near ``guess`` (n = 1), on a lattice refined twice around the maximum."""
    P = as_point(guess)
    xc, xic = P.x[0], P.xi[0]
    r = radius
    for _ in range(3):
        xs = np.linspace(xc - r, xc + r, n_points)
        xis = np.linspace(xic - r, xic + r, n_points)
        T = fbi_values(u, h, xs, xis, "peak")
        Q = locate_peak(T, xs, xis)
        xc, xic = Q.x[0], Q.xi[0]
        r = max(r / 8, 4 * (xs[1] - xs[0]))
    return PhasePoint([xc], [xic])


# ---------------------------------------------------------------------------
# rotated symbol test


@dataclass(frozen=True)
class PhaseBump:
    """Compactly supported symbol around ``center`` vanishing beyond ``radius``.

    "gaussian" is a Gaussian truncated at the 1e-17 level; its Weyl kernel
    decays like a Gaussian, which keeps the decay fits clean at moderate h.
    "plateau" equals 1 within radius/2 and is C-infinity with exp(-1/r) tails.
    """

    center: PhasePoint
    radius: float = 0.5
    profile: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if self.center.n != 1 or self.radius <= 0:
            raise InputError("PhaseBump needs a one-dimensional center and positive radius")
        if self.profile not in ("gaussian", "plateau"):
            raise InputError(f"unknown bump profile {self.profile!r}")

    def __call__(self, x, xi):
        r = np.hypot(x - self.center.x[0], xi - self.center.xi[0]) / self.radius
        if self.profile == "plateau":
            return _smooth_window(r)
        # exp(-r^2 GAUSS_K) drops below 1e-17 at r = 1, cut there
        return np.where(r < 1, np.exp(-GAUSS_K * r * r), 0.0)


def _rotated_support(a, t: float, h: float):
    # support of a o Phi^h_t is Phi^h_{-t}(disc): x = cos t X - sin t Xi / h
    if not isinstance(a, PhaseBump):
        return None
    c, s = np.cos(t), np.sin(t)
    xc = c * a.center.x[0] - s * a.center.xi[0] / h
    half = a.radius * np.hypot(c, s / h)
    return (xc - half, xc + half)


def rotated_norm(u0: WaveFunction, a, t: float, h: float) -> float:
    """|| (a o Phi^h_t)^w(x, hD) u0 ||, which equals || a^w e^{-itH0} u0 || by exact Egorov."""

    def rotated(x, xi):
        return a(*harmonic_phase_map(h, t, x, xi))

    return apply_weyl(rotated, h, u0, x_support=_rotated_support(a, t, h)).norm()


def rotated_symbol_test(u0: Family, a, t: float, h_sequence=DEFAULT_H) -> DecayFit:
    """Decay fit across h of the rotated-symbol norms (n = 1).

    ``a`` is a phase symbol a(x, xi); a PhaseBump also supplies its support,
    which lets the Weyl quadrature skip everything outside it.
    """
    hs = _check_h_sequence(h_sequence)
    if _state(u0, hs[0]).grid.dimension != 1:
        raise InputError("rotated_symbol_test handles n = 1")
    mags = [rotated_norm(_state(u0, h), a, t, h) for h in hs]
    return fit_decay(hs, mags)


def dual_coherent_state(grid, h: float, x0: float, xi0: float) -> WaveFunction:
    """Wide Gaussian whose quarter-period H0 image is coherent at (xi0, -x0).

    Centered at x0/h with plane-wave momentum xi0 and width h^{-1/2}, so the
    Fourier transform is a width-sqrt(h) packet at position xi0 and
    semiclassical momentum -x0.
    """
    if grid.dimension != 1:
        raise InputError("dual_coherent_state is one-dimensional")
    x = grid.axes[0]
    c = x0 / h
    if abs(c) + 8.0 / np.sqrt(h) > grid.L[0]:
        raise InputError("grid too small for the dual coherent state")
    vals = (np.pi / h) ** (-0.25) * np.exp(1j * xi0 * (x - c) - h * (x - c) ** 2 / 2)
    return WaveFunction(grid, vals, h)
