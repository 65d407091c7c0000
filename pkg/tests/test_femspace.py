import numpy as np
import pytest
from scipy.integrate import quad

from lflts.femspace import (applyA, assemble, errorNorms, loadVector, mapCoarse, mapFine)
from lflts.mesh import RegionSpec, buildLocallyRefined


def mesh_of(h=0.1, fine=(1.6, 2.4), p=2, domain=(0.0, 4.0)):
    return buildLocallyRefined(RegionSpec(domain, h, fine, p))


def test_p1_uniform_entries():
    sp1 = assemble(buildLocallyRefined(RegionSpec((0.0, 1.0), 0.1)), 1, "dirichlet", c2=4.0)
    assert sp1.n_dofs == 9
    assert np.allclose(sp1.lumped_mass, 0.1)
    K = sp1.stiffness.toarray()
    assert np.allclose(K[4, 3:6], [-40.0, 80.0, -40.0])


def test_p2_simpson_weights():
    m = buildLocallyRefined(RegionSpec((0.0, 0.3), 0.3))
    s2 = assemble(m, 2, "neumann")
    assert np.allclose(s2.lumped_mass, [0.05, 0.2, 0.05])
    assert np.allclose(s2.stiffness.toarray(), np.array([[7, -8, 1], [-8, 16, -8], [1, -8, 7]]) / 0.9)


def test_dirichlet_removes_ends():
    m = mesh_of()
    for deg in (1, 2):
        s = assemble(m, deg, "dirichlet")
        assert not s.active[0] and not s.active[-1] and s.active[1:-1].all()
        assert np.all(s.lumped_mass > 0)


def test_bad_arguments():
    m = mesh_of()
    with pytest.raises(ValueError):
        assemble(m, 3)
    with pytest.raises(ValueError):
        assemble(m, 1, "robin")
    with pytest.raises(ValueError):
        assemble(m, 1, c2=-1.0)
    with pytest.raises(ValueError):
        assemble(m, 1, s=0)


@pytest.mark.parametrize("deg", [1, 2])
@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_A_symmetric_psd(deg, bc):
    s = assemble(mesh_of(), deg, bc)
    rng = np.random.default_rng(0)
    K = s.stiffness
    assert abs(K - K.T).max() < 1e-14
    for _ in range(5):
        u, v = rng.standard_normal((2, s.n_dofs))
        assert s.inner(applyA(s, u), v) == pytest.approx(s.inner(u, applyA(s, v)), rel=1e-12)
        assert s.inner(applyA(s, u), u) >= 0


@pytest.mark.parametrize("deg", [1, 2])
def test_neumann_constant_kernel(deg):
    s = assemble(mesh_of(), deg, "neumann")
    assert np.max(np.abs(applyA(s, np.ones(s.n_dofs)))) < 1e-10
    assert np.all(applyA(s, np.zeros(s.n_dofs)) == 0)


@pytest.mark.parametrize("deg", [1, 2])
def test_load_constant_and_zero(deg):
    s = assemble(mesh_of(), deg, "neumann")
    assert np.allclose(loadVector(s, lambda x, t: 3.0 * t + 0 * x, 0.5), 1.5, atol=1e-12)
    assert np.all(loadVector(s, lambda x, t: 0.0 * x, 0.5) == 0)


def test_load_matches_quad():
    s = assemble(mesh_of(0.2), 1, "dirichlet")
    f = lambda x, t: np.exp(-(x - 2.0) ** 2 * 10) * (1 + t)  # noqa: E731
    fs = loadVector(s, f, 0.3)
    z = s.coords
    for j in (3, 10, 17):
        hat = lambda x, j=j: np.interp(x, z, np.eye(s.n_dofs)[j], left=0, right=0)  # noqa: E731
        want, _ = quad(lambda x: f(x, 0.3) * hat(x), z[j] - 0.2, z[j] + 0.2, points=[z[j]])
        assert fs[j] == pytest.approx(want / s.lumped_mass[j], rel=1e-10)


@pytest.mark.parametrize("deg", [1, 2])
def test_mapping_s1(deg):
    s = assemble(mesh_of(), deg, "dirichlet", s=1)
    assert set(np.unique(s.eta)) <= {0.0, 1.0}
    rng = np.random.default_rng(1)
    u, v = rng.standard_normal((2, s.n_dofs))
    assert np.array_equal(mapFine(s, mapFine(s, u)), mapFine(s, u))
    assert abs(s.inner(mapFine(s, u), mapCoarse(s, v))) < 1e-14
    assert np.array_equal(mapFine(s, u) + mapCoarse(s, u), u)
    # fine dofs: every dof in the closure of the fine region
    x = s.coords
    assert np.array_equal(s.eta == 1, (x >= 1.6 - 1e-12) & (x <= 2.4 + 1e-12))


@pytest.mark.parametrize("deg", [1, 2])
def test_mapping_weighted(deg):
    s = assemble(mesh_of(), deg, "dirichlet", s=3)
    rng = np.random.default_rng(2)
    u = rng.standard_normal(s.n_dofs)
    assert np.allclose(mapFine(s, u) + mapCoarse(s, u), u, rtol=0, atol=1e-15)
    x = s.coords
    # eta is the piecewise linear (1 - dist/3)_+ at every dof
    dist_x = np.maximum(0.0, np.maximum(1.6 - x, x - 2.4)) / 0.1
    assert np.allclose(s.eta, np.maximum(0.0, 1.0 - dist_x / 3.0), atol=1e-12)


def test_eta_identity():
    m = buildLocallyRefined(RegionSpec((0.0, 1.0), 0.1, (0.0, 1.0), 2))
    s = assemble(m, 2, "dirichlet")
    u = np.arange(s.n_dofs, dtype=float)
    assert np.array_equal(mapFine(s, u), u) and not mapCoarse(s, u).any()


@pytest.mark.parametrize("deg", [1, 2])
def test_error_norms_reproduce_polynomials(deg):
    s = assemble(mesh_of(0.2), deg, "neumann")
    poly = (lambda x: 1.0 + 0.5 * x) if deg == 1 else (lambda x: 1.0 - x + 0.3 * x**2)
    dpoly = (lambda x: 0.5 + 0 * x) if deg == 1 else (lambda x: -1.0 + 0.6 * x)
    e = errorNorms(s, s.interpolate(poly), poly, dpoly)
    assert e.l2 < 1e-12 and e.h1 < 1e-12


def test_error_norms_zero_exact_is_absolute():
    s = assemble(mesh_of(0.2), 1, "neumann")
    u = np.ones(s.n_dofs)
    e = errorNorms(s, u, lambda x: 0 * x, lambda x: 0 * x)
    assert e.l2_rel == e.l2 == pytest.approx(2.0, rel=1e-12)
    assert e.h1_rel == e.h1


def test_error_norm_sin_interpolant():
    s = assemble(buildLocallyRefined(RegionSpec((0.0, 1.0), 0.1)), 1, "dirichlet")
    u = s.interpolate(lambda x: np.sin(np.pi * x))
    e = errorNorms(s, u, lambda x: np.sin(np.pi * x), lambda x: np.pi * np.cos(np.pi * x))
    # dense adaptive quadrature oracle
    xs = np.linspace(0, 1, 11)
    want = sum(quad(lambda x: (np.interp(x, xs, np.sin(np.pi * xs)) - np.sin(np.pi * x)) ** 2,
                    a, b)[0] for a, b in zip(xs[:-1], xs[1:]))
    assert e.l2 == pytest.approx(np.sqrt(want), rel=1e-8)
    classical = np.pi**2 / np.sqrt(120) * 0.1**2 * np.sqrt(0.5)
    assert abs(e.l2 / classical - 1) < 0.1


def test_evaluate_nodes_and_derivative():
    s = assemble(mesh_of(0.2), 2, "neumann")
    u = s.interpolate(lambda x: x**2)
    assert np.allclose(s.evaluate(u, s.coords), s.coords**2, atol=1e-12)
    xs = np.linspace(0.01, 3.99, 37)
    assert np.allclose(s.evaluate(u, xs, derivative=True), 2 * xs, atol=1e-10)


def test_norm_equivalence():
    rng = np.random.default_rng(3)
    ratios = []
    for h in (0.04, 0.02, 0.01):
        for deg in (1, 2):
            s = assemble(mesh_of(h), deg, "dirichlet")
            for _ in range(1000 // 6 + 1):
                u = rng.standard_normal(s.n_dofs)
                z = lambda x: 0 * x  # noqa: E731
                l2 = errorNorms(s, u, z, z).l2
                ratios.append(s.norm(u) / l2)
    ratios = np.array(ratios)
    assert ratios.min() >= 0.5 and ratios.max() <= 2.0


def _power_max_eig(s, mask, iters=400):
    rng = np.random.default_rng(0)
    u = rng.standard_normal(s.n_dofs) * mask
    lam = 0.0
    for _ in range(iters):
        w = applyA(s, u) * mask
        lam = s.inner(w, u) / s.inner(u, u)
        u = w / s.norm(w)
    return lam


def test_coarse_eigenvalue_scaling():
    lams = []
    for h in (0.04, 0.02):
        s = assemble(mesh_of(h), 1, "dirichlet")
        lams.append(_power_max_eig(s, 1.0 - s.eta))
    assert lams[1] / lams[0] == pytest.approx(4.0, rel=0.2)


def test_csv_rows():
    s = assemble(mesh_of(0.4), 1, "dirichlet")
    rows = s.to_csv_rows(np.zeros(s.n_dofs))
    assert len(rows) == s.n_dofs and rows[0][0] == pytest.approx(0.4)
