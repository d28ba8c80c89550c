import math

import numpy as np
import pytest

from ift_rigidity.charts import (
    circle_pair,
    parabola_pair,
    parabola_phi,
    parabola_psi,
    shrinking_pair,
    shrinking_radius_demo,
    shrinking_radius_table,
    shrinking_witness,
)
from ift_rigidity.exceptions import (
    ChainConditionFailed,
    Diverged,
    ExactnessFailed,
    MaxIterations,
    NotEmbedding,
    NotInFiber,
    NotInNeighborhood,
    OutOfChart,
)
from ift_rigidity.ift import (
    DifferentiableMap,
    certify_neighborhood,
    check_jacobian,
    estimate_deriv_lipschitz,
    finite_difference_jacobian,
    kernel_inclusion,
    quasi_isometry_constants,
    recenter,
    solve_fiber,
    transition_map,
    with_lipschitz,
)


def sample_in_w(rng, pair_name, constants, n):
    """Fibre targets y = phi(x) with ||y|| < w_radius, from the analytic
    parametrisation of each curve."""
    out = []
    while len(out) < n:
        a = rng.uniform(-1, 1) * constants.w_radius
        if pair_name == "parabola":
            y = np.array([a, a * a])
        else:
            y = np.array([math.sin(a), math.cos(a) - 1.0])
        if np.linalg.norm(y) < constants.w_radius:
            out.append((a, y))
    return out


def test_parabola_constants():
    c = certify_neighborhood(*parabola_pair())
    assert (c.c1, c.c2, c.cmax) == (1.0, 1.0, 1.0)
    assert c.delta == 1.0 / 12.0
    assert c.w_radius == pytest.approx(1.0 / 108.0, abs=1e-15)
    assert c.x0_radius == pytest.approx(1.0 / (12 * 162), abs=1e-15)
    assert not c.lipschitz_heuristic


def test_scaled_parabola_constants():
    c = certify_neighborhood(parabola_phi(0.5), parabola_psi())
    assert c.c1 == pytest.approx(2.0)
    assert c.cmax == pytest.approx(2.0)


def test_domain_radius_caps_delta():
    c = certify_neighborhood(parabola_phi(domain_radius=0.01), parabola_psi())
    assert c.delta == 0.01


def test_linear_maps_delta_is_domain_radius():
    phi = DifferentiableMap(lambda x: np.array([x[0], 0.0]), 1, 2, jac=lambda x: np.array([[1.0], [0.0]]),
                            deriv_lipschitz=0.0, domain_radius=0.3)
    psi = DifferentiableMap(lambda y: np.array([y[1]]), 2, 1, jac=lambda y: np.array([[0.0, 1.0]]),
                            deriv_lipschitz=0.0, domain_radius=0.7)
    assert certify_neighborhood(phi, psi).delta == 0.3


def test_certify_rejects_broken_chain():
    phi, _ = parabola_pair()
    psi = DifferentiableMap(lambda y: np.array([y[1] - 2 * y[0] ** 2]), 2, 1,
                            jac=lambda y: np.array([[-4 * y[0], 1.0]]), deriv_lipschitz=4.0)
    with pytest.raises(ChainConditionFailed):
        certify_neighborhood(phi, psi)


def test_certify_rejects_inexact():
    phi = DifferentiableMap(lambda x: np.zeros(2), 1, 2, jac=lambda x: np.zeros((2, 1)), deriv_lipschitz=0.0)
    psi = DifferentiableMap(lambda y: np.array([y[1]]), 2, 1, jac=lambda y: np.array([[0.0, 1.0]]),
                            deriv_lipschitz=0.0)
    with pytest.raises(ExactnessFailed):
        certify_neighborhood(phi, psi)


def test_solve_fiber_zero_target():
    phi, psi = parabola_pair()
    c = certify_neighborhood(phi, psi)
    x, trace = solve_fiber(phi, psi, np.zeros(2), c)
    assert np.all(x == 0) and trace.converged and trace.iterations <= 1


def test_solve_fiber_parabola_example():
    phi, psi = parabola_pair()
    c = certify_neighborhood(phi, psi)
    a = 0.01
    with pytest.raises(NotInNeighborhood):
        solve_fiber(phi, psi, np.array([a, a * a]), c)
    x, trace = solve_fiber(phi, psi, np.array([a, a * a]), c, override_radius=True)
    assert abs(x[0] - a) <= 1e-10


def test_solve_fiber_circle_example():
    phi, psi = circle_pair()
    c = certify_neighborhood(phi, psi)
    a = 0.02
    y = np.array([math.sin(a), math.cos(a) - 1.0])
    x, trace = solve_fiber(phi, psi, y, c, override_radius=True)
    assert abs(x[0] - math.atan2(y[0], y[1] + 1.0)) <= 1e-9
    assert trace.converged


def test_solve_fiber_rejects_off_fiber():
    phi, psi = parabola_pair()
    c = certify_neighborhood(phi, psi)
    with pytest.raises(NotInFiber):
        solve_fiber(phi, psi, np.array([0.001, 0.5]), c)


def test_solve_fiber_divergence_detected():
    phi, psi = circle_pair()
    c = certify_neighborhood(phi, psi)
    a = 3.0
    y = np.array([math.sin(a), math.cos(a) - 1.0])
    with pytest.raises((Diverged, MaxIterations)):
        solve_fiber(phi, psi, y, c, override_radius=True)


@pytest.mark.parametrize("name", ["parabola", "circle"])
def test_round_trip_halving_and_bounds(rng, name):
    phi, psi = parabola_pair() if name == "parabola" else circle_pair()
    c = certify_neighborhood(phi, psi)
    for a, y in sample_in_w(rng, name, c, 100):
        x, trace = solve_fiber(phi, psi, y, c)
        assert trace.converged
        assert np.linalg.norm(phi(x) - y) <= 1e-9
        assert np.linalg.norm(x) < c.delta / 2 + 1e-9
        u = trace.u_norms
        for n in range(1, len(u) - 1):
            assert u[n + 1] <= 0.5 * u[n] + 1e-12
        for un, vn in zip(u, trace.v_norms):
            assert vn <= 2 * c.cmax ** 3 * un + 1e-15
        assert abs(x[0] - a) <= 1e-9


def test_quasi_isometry_examples(rng):
    iso = DifferentiableMap(lambda x: x.copy(), 2, 2, jac=lambda x: np.eye(2), deriv_lipschitz=0.0)
    q = quasi_isometry_constants(iso)
    assert (q.c, q.C) == pytest.approx((0.25, 1.25))
    dbl = DifferentiableMap(lambda x: 2 * x, 1, 1, jac=lambda x: np.array([[2.0]]), deriv_lipschitz=0.0)
    assert quasi_isometry_constants(dbl)[:2] == pytest.approx((0.5, 2.5))

    phi = parabola_phi()
    q = quasi_isometry_constants(phi)
    assert (q.c, q.C, q.ball_radius) == pytest.approx((0.25, 1.25, 0.125))
    for _ in range(500):
        x, y = rng.uniform(-q.ball_radius, q.ball_radius, size=(2, 1))
        d = np.linalg.norm(phi(x) - phi(y))
        assert q.c * abs(x - y)[0] <= d + 1e-15
        assert d <= q.C * abs(x - y)[0] + 1e-15

    flat = DifferentiableMap(lambda x: np.array([x[0] ** 2]), 1, 1, jac=lambda x: np.array([[2 * x[0]]]),
                             deriv_lipschitz=2.0)
    with pytest.raises(NotEmbedding):
        quasi_isometry_constants(flat)


def test_transition_map_identity():
    phi, psi = parabola_pair()
    c = certify_neighborhood(phi, psi)
    xp, diff = transition_map(phi, phi, psi, np.array([0.004]), c)
    assert xp == pytest.approx([0.004], abs=1e-12)
    assert diff == pytest.approx(np.eye(1))


def test_transition_map_scaled_parabola():
    phi1, psi = parabola_pair()
    phi2 = parabola_phi(2.0)
    c1 = certify_neighborhood(phi1, psi)
    c2 = certify_neighborhood(phi2, psi)
    # the scale-2 chart certifies a much smaller W, so stay well inside both
    for x in (1e-5, -1.5e-5, 5e-6, 0.004):
        xp, diff = transition_map(phi1, phi2, psi, np.array([x]), c1)
        assert xp[0] == pytest.approx(2 * x, abs=1e-12)
        assert diff[0, 0] == pytest.approx(2.0, abs=1e-9)

        def trans(z):
            return transition_map(phi1, phi2, psi, z, c1)[0]
        fd = finite_difference_jacobian(trans, np.array([x]), 1e-5)
        assert abs(fd[0, 0] - diff[0, 0]) <= 1e-6

        if np.linalg.norm(phi1(xp)) < c2.w_radius:
            back, _ = transition_map(phi2, phi1, psi, xp, c2)
            assert abs(back[0] - x) <= 1e-8
    with pytest.raises(OutOfChart):
        transition_map(phi1, phi2, psi, np.array([0.2]), c1)


def test_declared_jacobians_match_fd(rng):
    maps = list(parabola_pair()) + list(circle_pair()) + list(shrinking_pair(4))[1:]
    for fmap in maps:
        pts = [rng.uniform(-0.3, 0.3, fmap.domain_dim) for _ in range(10)]
        assert check_jacobian(fmap, pts) <= 1e-6


def test_fd_fallback_jacobian():
    f = DifferentiableMap(lambda x: np.array([np.sin(x[0]) * x[1]]), 2, 1)
    j = f.jacobian(np.array([0.3, 2.0]))
    assert j == pytest.approx(np.array([[2 * math.cos(0.3), math.sin(0.3)]]), abs=1e-8)


def test_lipschitz_estimate_is_a_lower_bound_for_known_map():
    phi = parabola_phi()
    est = estimate_deriv_lipschitz(with_lipschitz(phi, None), n_pairs=200)
    assert 0 < est <= 2.0 + 1e-6
    assert est == pytest.approx(2.0, rel=1e-3)


def test_heuristic_flag_when_lipschitz_missing():
    phi, psi = parabola_pair()
    c = certify_neighborhood(with_lipschitz(phi, None), psi, lipschitz_pairs=100)
    assert c.lipschitz_heuristic


def test_shrinking_radius():
    assert shrinking_radius_demo(1) == pytest.approx(1.0 / 162.0, rel=1e-12)
    radii = [shrinking_radius_demo(n) for n in range(1, 11)]
    assert all(b < a for a, b in zip(radii, radii[1:]))
    for n in range(1, 11):
        _, psi = shrinking_pair(n)
        assert np.linalg.norm(psi(shrinking_witness(n))) <= 1e-15
        assert radii[n - 1] == pytest.approx(1.0 / (162.0 * n ** 6), rel=1e-12)
    rows = shrinking_radius_table(3)
    assert [r[0] for r in rows] == [1, 2, 3]


def test_witness_escapes_certified_ball():
    # the nonzero zero e_N / N of psi is never reached by phi = 0; it lies outside delta
    for n in range(1, 6):
        phi, psi = shrinking_pair(n)
        c = certify_neighborhood(phi, psi)
        assert np.linalg.norm(shrinking_witness(n)) >= c.delta


def test_recenter_is_certifiable():
    phi, psi = parabola_pair()
    phi_u, psi_u = recenter(phi, psi, np.array([0.1]))
    c = certify_neighborhood(phi_u, psi_u)
    x = np.array([0.003])
    y = phi_u(x)
    z, _ = solve_fiber(phi_u, psi_u, y, c, override_radius=True)
    assert z[0] == pytest.approx(0.003, abs=1e-10)


def test_kernel_inclusion_chart():
    psi = DifferentiableMap(lambda y: np.array([y[2]]), 3, 1, jac=lambda y: np.array([[0.0, 0.0, 1.0]]),
                            deriv_lipschitz=0.0)
    phi = kernel_inclusion(psi)
    assert phi.domain_dim == 2
    c = certify_neighborhood(phi, psi)
    y = np.array([1e-3, -2e-3, 0.0])
    x, _ = solve_fiber(phi, psi, y, c, override_radius=True)
    assert np.linalg.norm(phi(x) - y) <= 1e-12
