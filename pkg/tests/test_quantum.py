import numpy as np
import pytest
from hypothesis import given, strategies as st

from hoscat.classflow import FlowSpec, PhasePoint, flow_numeric
from hoscat.errors import DomainError, GridError, InputError, QuadratureError
from hoscat.fields import flat_field, make_field
from hoscat.harness.scenarios import packet_grid
from hoscat.quantum import (PropagatorSpec, SpatialGrid, WaveFunction, apply_weyl, coherent_state,
                            fourier_transform, harmonic_phase_map, propagate_H0_exact,
                            propagate_H_numeric, read_wf, write_wf)

REF = SpatialGrid((20.0,), (4096,))
SMALL = SpatialGrid((12.0,), (256,))


def gaussian(grid, x0=0.0):
    x = grid.axes[0]
    return WaveFunction(grid, np.pi ** -0.25 * np.exp(-((x - x0) ** 2) / 2))


@given(h=st.floats(0.05, 1.0), x0=st.floats(-3, 3), xi0=st.floats(-1, 1))
def test_coherent_state_moments(h, x0, xi0):
    u = coherent_state(SpatialGrid((16.0,), (1024,)), h, [x0], [xi0])
    assert u.norm() == pytest.approx(1.0, abs=1e-10)
    assert u.position_mean()[0] == pytest.approx(x0, abs=1e-8 * np.sqrt(h))
    assert u.momentum_mean()[0] == pytest.approx(xi0 / h, abs=1e-8 / h)


def test_coherent_state_two_dimensional():
    g = SpatialGrid((8.0, 8.0), (128, 128))
    u = coherent_state(g, 0.25, [1.0, -0.5], [0.5, 0.25])
    assert u.norm() == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(u.position_mean(), [1.0, -0.5], atol=1e-9)
    assert np.allclose(u.momentum_mean(), [2.0, 1.0], atol=1e-8)


def test_coherent_state_grid_checks():
    with pytest.raises(GridError):
        coherent_state(SpatialGrid((10.0,), (64,)), 0.05, [0.0], [1.0])
    with pytest.raises(GridError):
        coherent_state(SMALL, 0.25, [11.0], [0.0])
    with pytest.raises(InputError):
        coherent_state(SMALL, 1.5, [0.0], [0.0])


def test_fourier_of_coherent_state_is_gaussian():
    h = 0.25
    u = coherent_state(REF, h, [1.5], [0.0])
    v = fourier_transform(u)
    k = REF.axes[0]
    # |F u|(k) = (h / pi)^{1/4} exp(-h k^2 / 2)
    assert np.max(np.abs(np.abs(v.values) - (h / np.pi) ** 0.25 * np.exp(-h * k * k / 2))) < 1e-12
    assert v.norm() == pytest.approx(1.0, abs=1e-12)


def test_fourier_identities():
    u = gaussian(REF)
    assert fourier_transform(u).distance(u) <= 1e-10
    w = coherent_state(REF, 0.5, [1.0], [1.0])
    f2 = fourier_transform(fourier_transform(w))
    assert f2.distance(w.reflected()) <= 1e-10
    assert fourier_transform(f2).norm() == pytest.approx(1.0, abs=1e-12)
    assert fourier_transform(fourier_transform(f2)).distance(w) <= 1e-10
    assert fourier_transform(fourier_transform(w), inverse=True).distance(w) <= 1e-10


def test_h0_period_parity_fourier():
    u = coherent_state(REF, 0.5, [1.0], [1.0])
    assert propagate_H0_exact(1.0, 2 * np.pi, u, drop_zero_point=True).distance(u) <= 1e-8
    assert propagate_H0_exact(1.0, np.pi, u, drop_zero_point=True).distance(u.reflected()) <= 1e-8
    assert propagate_H0_exact(1.0, np.pi / 2, u, drop_zero_point=True).distance(
        fourier_transform(u)) <= 1e-8
    # with the zero-point phase the period carries the sign e^{-i pi}
    assert propagate_H0_exact(1.0, 2 * np.pi, u).distance(u.with_values(-u.values)) <= 1e-8


@given(s=st.floats(-4, 4), t=st.floats(-4, 4))
def test_h0_group_law_and_unitarity(s, t):
    u = coherent_state(SMALL, 0.5, [1.0], [0.5])
    a = propagate_H0_exact(1.0, t, propagate_H0_exact(1.0, s, u))
    b = propagate_H0_exact(1.0, s + t, u)
    assert a.distance(b) <= 1e-9
    assert b.norm() == pytest.approx(1.0, abs=1e-12)


def test_h0_partial_parity_for_resonant_weights():
    g = SpatialGrid((8.0, 8.0), (128, 128))
    v = coherent_state(g, 0.25, [1.0, -0.5], [0.5, 0.3])
    w = propagate_H0_exact((1.0, 2.0), np.pi, v, drop_zero_point=True)
    assert w.distance(v.with_values(g.reflect(v.values, [0]))) <= 1e-8


def test_h0_near_resonant_time_is_continuous():
    u = coherent_state(SMALL, 0.5, [1.0], [0.5])
    a = propagate_H0_exact(1.0, np.pi + 1e-8, u)
    assert a.distance(propagate_H0_exact(1.0, np.pi, u)) <= 1e-7


def _flat_case(h=1 / 8):
    flat = flat_field(1)
    X = PhasePoint([0.3], [1.0])
    g = packet_grid(flat, X, h)
    return flat, coherent_state(g, h, X.x, X.xi)


@pytest.mark.parametrize("t", [np.pi / 4, np.pi / 2, np.pi])
def test_flat_numeric_matches_exact(t):
    flat, u = _flat_case()
    assert propagate_H_numeric(flat, 1.0, t, u).distance(propagate_H0_exact(1.0, t, u)) <= 1e-6


def test_flat_numeric_matches_exact_in_two_dimensions():
    flat = flat_field(2, nu=[1.0, 2.0])
    g = SpatialGrid((8.0, 8.0), (128, 128))
    u = coherent_state(g, 0.5, [1.0, -0.5], [0.5, 0.3])
    a = propagate_H_numeric(flat, flat.nu, 1.0, u)
    assert a.distance(propagate_H0_exact(flat.nu, 1.0, u)) <= 1e-6


def test_numeric_backward_inverts_forward(bump):
    _, u = _flat_case()
    g = u.grid
    v = propagate_H_numeric(bump, 1.0, 0.7, u)
    assert propagate_H_numeric(bump, 1.0, -0.7, v).distance(u) <= 1e-9
    assert v.grid is g


def test_bump_unitarity(bump):
    X = PhasePoint([0.3], [1.0])
    h = 1 / 8
    u = coherent_state(packet_grid(bump, X, h), h, X.x, X.xi)
    assert propagate_H_numeric(bump, 1.0, np.pi, u).norm() == pytest.approx(1.0, abs=1e-6)


def test_first_order_perturbation_scaling():
    X = PhasePoint([0.3], [1.0])
    h = 1 / 8
    g = packet_grid(make_field("rational", 1, c=0.1), X, h)
    u = coherent_state(g, h, X.x, X.xi)
    ref = propagate_H0_exact(1.0, np.pi, u)
    cs = np.array([1e-3, 1e-2, 1e-1])
    d = [propagate_H_numeric(make_field("rational", 1, c=c), 1.0, np.pi, u).distance(ref) for c in cs]
    slope = np.polyfit(np.log(cs), np.log(d), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.2)


def test_boundary_monitor():
    g = SpatialGrid((6.0,), (128,))
    u = coherent_state(g, 0.5, [5.0], [0.0], check=False)
    with pytest.raises(DomainError):
        propagate_H_numeric(flat_field(1), 1.0, 0.1, u)


def test_propagator_spec_validation():
    with pytest.raises(InputError):
        PropagatorSpec(dt=0.1)
    with pytest.raises(InputError):
        PropagatorSpec(max_defect=1e-6)


def test_ehrenfest_tracking(bump):
    """Means follow the classical flow from (x0, xi0 / h) in the (x, h p) frame."""
    X = PhasePoint([0.3], [1.0])
    hs = [1 / 8, 1 / 16, 1 / 32]
    ts = np.linspace(0, np.pi, 9)
    spec = FlowSpec("p", rel_tol=1e-11, abs_tol=1e-13)
    errs, mom_errs = [], []
    for h in hs:
        u = coherent_state(packet_grid(bump, X, h), h, X.x, X.xi)
        traj = flow_numeric(bump, spec, (0.0, np.pi), PhasePoint(X.x, X.xi / h))
        e = em = 0.0
        for a, b in zip(ts[:-1], ts[1:]):
            u = propagate_H_numeric(bump, 1.0, b - a, u)
            z = traj.at(b)
            dp = h * abs(u.momentum_mean()[0] - z[1])
            e = max(e, abs(u.position_mean()[0] - z[0]) + dp)
            em = max(em, dp)
        errs.append(e)
        mom_errs.append(em)
    C = np.array(errs) / np.sqrt(hs)
    assert C.max() <= 2 * C.min()
    assert C.max() <= 1.0
    # the scaled momentum error shrinks with h; the position offset is the classical
    # ensemble average over the packet's spread and does not vanish
    assert mom_errs[-1] < 0.5 * mom_errs[0]


def test_weyl_identity_and_position():
    u = coherent_state(SpatialGrid((10.0,), (512,)), 0.25, [0.5], [0.5])
    assert apply_weyl(lambda x, xi: np.ones_like(x * xi), 0.25, u).distance(u) <= 1e-8
    x = u.grid.axes[0]
    xu = apply_weyl(lambda x, xi: x + 0 * xi, 0.25, u)
    assert xu.distance(u.with_values(x * u.values)) <= 1e-8


def test_weyl_momentum_symbol_is_h_derivative():
    h = 0.25
    u = coherent_state(SpatialGrid((20.0,), (2048,)), h, [0.5], [0.5])
    v = apply_weyl(lambda x, xi: xi + 0 * x, h, u, xi_cutoff=12.0)
    x = u.grid.axes[0]
    expected = (0.5 + 1j * (x - 0.5)) * u.values  # h D of the Gaussian packet
    assert v.distance(u.with_values(expected)) <= 1e-8


def test_weyl_real_symbol_is_hermitian():
    h = 0.25
    g = SpatialGrid((10.0,), (512,))
    u = coherent_state(g, h, [0.5], [0.5])
    w = coherent_state(g, h, [-0.3], [0.2])

    def a(x, xi):
        return np.exp(-(x**2) - (xi - 0.3) ** 2)

    lhs = w.inner(apply_weyl(a, h, u))
    rhs = np.conj(u.inner(apply_weyl(a, h, w)))
    assert abs(lhs - rhs) <= 1e-10


def test_weyl_cutoff_checks():
    u = coherent_state(SpatialGrid((10.0,), (512,)), 0.25, [0.0], [1.0])
    with pytest.raises(QuadratureError):
        apply_weyl(lambda x, xi: xi + 0 * x, 0.25, u, xi_cutoff=1.0)
    with pytest.raises(InputError):
        apply_weyl(lambda x, xi: 1 + 0 * x, 0.25, WaveFunction(SpatialGrid((4.0, 4.0), (8, 8)),
                                                              np.zeros((8, 8))))


def test_exact_egorov_flat():
    h, t = 1 / 32, np.pi / 3
    g = SpatialGrid((20.0,), (4096,))
    u = coherent_state(g, h, [0.5], [0.5])
    cx, cxi = harmonic_phase_map(h, t, 0.5, 0.5)

    def a(x, xi):
        return np.exp(-((x - round(cx)) ** 2) - ((xi - round(4 * cxi) / 4) / 0.3) ** 2)

    def rotated(x, xi):
        return a(*harmonic_phase_map(h, t, x, xi))

    lhs = propagate_H0_exact(1.0, -t, apply_weyl(a, h, propagate_H0_exact(1.0, t, u)))
    rhs = apply_weyl(rotated, h, u)
    assert lhs.norm() > 1e-3
    assert lhs.distance(rhs) <= 1e-6


def test_wf_file_round_trip(tmp_path):
    g = SpatialGrid((8.0, 6.0), (32, 16))
    u = coherent_state(g, 0.5, [1.0, -0.5], [0.5, 0.3], check=False)
    path = tmp_path / "state.wf"
    write_wf(path, u)
    v = read_wf(path)
    assert v.grid.N == g.N and v.grid.L == g.L and v.declared_h == 0.5
    assert np.array_equal(v.values, u.values)
    raw = path.read_bytes()
    assert int.from_bytes(raw[:8], "little") == 2
    assert len(raw) == 8 * (1 + 2 + 2 + 1) + 16 * 32 * 16
    u1 = WaveFunction(SpatialGrid((4.0,), (8,)), np.arange(8) * (1 + 2j))
    u1.save(tmp_path / "plain.wf")
    assert read_wf(tmp_path / "plain.wf").declared_h is None


def test_grid_validation():
    with pytest.raises(GridError):
        SpatialGrid((4.0,), (100,))
    with pytest.raises(GridError):
        WaveFunction(SpatialGrid((4.0,), (8,)), np.zeros(4))
