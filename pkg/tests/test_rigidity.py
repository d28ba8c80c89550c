import numpy as np
import pytest

from ift_rigidity.cohomology import GammaModule, delta0, delta1, saturate_relators
from ift_rigidity.exceptions import InvalidRepresentation, NotInNeighborhood, NotRigid
from ift_rigidity.ift import finite_difference_jacobian
from ift_rigidity.liegroup import Representation, exp, preset
from ift_rigidity.rigidity import (
    alpha_coords,
    attach_conjugator,
    build_phi,
    build_psi,
    certify_rigidity_charts,
    chain_residual,
    check_local_rigidity,
    conjugation_residual,
    recover_conjugator,
    solve_conjugator,
)
from ift_rigidity.words import Presentation

from conftest import CORPUS, load


def conjugated(rep, eta):
    h = exp(eta)
    hinv = exp(-eta)
    return Representation(rep.presentation, tuple(h @ m @ hinv for m in rep.images), rep.group)


def random_eta(rng, n, size):
    eta = rng.standard_normal((n, n))
    return eta * size / np.linalg.norm(eta)


@pytest.fixture(scope="module")
def gl2_rigid():
    pres, rep = load("z3.pres", "z3_gl2.rep")
    report = check_local_rigidity(rep)
    charts = certify_rigidity_charts(rep, report.relator_subset)
    return rep, report, charts


def test_phi_at_identity_and_abelian():
    _, rep = load("z3.pres", "z3_so2.rep")
    phi = build_phi(rep)
    # zero up to rounding in the stored inverses
    assert np.abs(phi(np.zeros(1))).max() <= 1e-14
    for xi in (0.1, -0.3, 0.5):
        assert np.abs(phi(np.array([xi]))).max() <= 1e-15


@pytest.mark.parametrize("pres_name,rep_name", CORPUS)
def test_differentials_match_coboundaries(pres_name, rep_name):
    pres, rep = load(pres_name, rep_name)
    module = GammaModule.from_representation(rep)
    subset = saturate_relators(module, pres)
    phi, psi = build_phi(rep), build_psi(rep, subset)
    # finite differences of the raw maps, independent of any declared Jacobian
    fd_phi = finite_difference_jacobian(phi.fun, np.zeros(phi.domain_dim), 1e-5, phi.codomain_dim)
    fd_psi = finite_difference_jacobian(psi.fun, np.zeros(psi.domain_dim), 1e-5, psi.codomain_dim)
    assert np.abs(fd_phi - delta0(module, pres)).max(initial=0.0) <= 1e-6
    assert np.abs(fd_psi - delta1(module, pres, subset)).max(initial=0.0) <= 1e-6


@pytest.mark.parametrize("pres_name,rep_name", CORPUS)
def test_chain_condition(pres_name, rep_name):
    _, rep = load(pres_name, rep_name)
    assert chain_residual(rep, n_points=20, radius=1e-2) <= 1e-10


def test_psi_vanishes_on_nearby_homomorphism(rng):
    for pres_name, rep_name in [("z3.pres", "z3_gl2.rep"), ("surface2.pres", "surface2_so3.rep")]:
        pres, rep = load(pres_name, rep_name)
        subset = saturate_relators(GammaModule.from_representation(rep), pres)
        psi = build_psi(rep, subset)
        assert np.abs(psi(np.zeros(psi.domain_dim))).max(initial=0.0) <= 1e-13
        basis = rep.group.basis
        eta = sum(c * b for c, b in zip(rng.standard_normal(len(basis)), basis)) * 1e-2
        rp = conjugated(rep, eta)
        assert np.linalg.norm(psi(alpha_coords(rep, rp))) <= 1e-9


def test_verdicts():
    _, rep = load("z3.pres", "z3_so2.rep")
    r = check_local_rigidity(rep)
    assert (r.h1_dim, r.rigid) == (0, True)
    _, rep = load("z.pres", "z_sl2.rep")
    r = check_local_rigidity(rep)
    assert (r.h1_dim, r.rigid) == (1, False)
    assert r.closed_image.startswith("automatic")


def test_trivial_group_is_rigid():
    rep = Representation(Presentation(()), (), preset("sl2"))
    r = check_local_rigidity(rep)
    assert (r.h1_dim, r.rigid) == (0, True)


@pytest.mark.parametrize("pres_name,rep_name", CORPUS)
def test_verdict_consistency(pres_name, rep_name):
    _, rep = load(pres_name, rep_name)
    r = check_local_rigidity(rep)
    assert r.rigid == (r.h1_dim == 0)
    assert r.conjugator is None
    assert r.nullity_d1 == r.nullity_d1_full
    assert max(r.differential_residuals) <= 1e-6


def test_recover_identity(gl2_rigid):
    rep, report, charts = gl2_rigid
    g, res = recover_conjugator(rep, rep, report=report, charts=charts)
    assert np.abs(g - np.eye(2)).max() <= 1e-12
    assert res <= 1e-12


@pytest.mark.parametrize("size", [1e-4, 1e-3])
def test_recover_conjugated_perturbation(gl2_rigid, rng, size):
    rep, report, charts = gl2_rigid
    for _ in range(5):
        rp = conjugated(rep, random_eta(rng, 2, size))
        g, res = recover_conjugator(rep, rp, override_radius=True, report=report, charts=charts)
        assert res <= 1e-8
        assert conjugation_residual(rep, rp, g) == res


def test_recover_requires_certified_radius(gl2_rigid, rng):
    rep, report, charts = gl2_rigid
    rp = conjugated(rep, random_eta(rng, 2, 1e-3))
    assert np.linalg.norm(alpha_coords(rep, rp)) > charts[2].w_radius
    with pytest.raises(NotInNeighborhood):
        recover_conjugator(rep, rp, report=report, charts=charts)


def test_recover_inside_certified_radius(gl2_rigid, rng):
    rep, report, charts = gl2_rigid
    w = charts[2].w_radius
    rp = conjugated(rep, random_eta(rng, 2, w / 20))
    assert np.linalg.norm(alpha_coords(rep, rp)) < w
    g, res = recover_conjugator(rep, rp, report=report, charts=charts)
    assert res <= 1e-8


def test_not_rigid_refuses():
    _, rep = load("z.pres", "z_sl2.rep")
    with pytest.raises(NotRigid):
        recover_conjugator(rep, rep)


def test_non_homomorphism_rejected():
    pres, rep = load("z3.pres", "z3_gl2.rep")
    bad = rep.images[0] @ exp(np.array([[0.0, -1e-2], [1e-2, 0.0]]))
    with pytest.raises(InvalidRepresentation):
        Representation(pres, (bad,), rep.group)


def test_report_with_conjugator(gl2_rigid, rng):
    rep, report, charts = gl2_rigid
    rp = conjugated(rep, random_eta(rng, 2, 1e-4))
    sol = solve_conjugator(rep, rp, override_radius=True, report=report, charts=charts)
    import copy
    full = attach_conjugator(copy.copy(report), sol)
    keys = [k for k, _ in full.items()]
    assert "conjugator_row_0" in keys and "conjugation_residual" in keys
    assert full.conjugation_residual <= 1e-8
