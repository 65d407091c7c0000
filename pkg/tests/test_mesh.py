import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

from lflts.mesh import RegionSpec, buildLocallyRefined, etaWeights, fineLayers, graph_distance


@pytest.fixture
def pulse_mesh():
    return buildLocallyRefined(RegionSpec((0.0, 4.0), 0.1, (1.6, 2.4), 2))


def test_element_counts(pulse_mesh):
    m = pulse_mesh
    assert m.n_elements == 48
    assert m.fine_flags.sum() == 16
    assert m.h_coarse == pytest.approx(0.1) and m.h_fine == pytest.approx(0.05)
    assert m.h_fine <= m.h_coarse


def test_conformity(pulse_mesh):
    m = pulse_mesh
    assert np.all(np.diff(m.vertices) > 0)
    assert m.vertices[0] == 0.0 and m.vertices[-1] == 4.0
    assert np.all(m.elements[1:, 0] == m.elements[:-1, 1])
    assert np.sum(m.lengths) == pytest.approx(4.0, rel=1e-14)


def test_interface_distances(pulse_mesh):
    m = pulse_mesh
    i = int(np.argmin(np.abs(m.vertices - 1.6)))
    assert m.dist[i] == 0 and m.dist[i - 1] == 1
    # dist 0 exactly on vertices of fine elements
    fine_verts = np.unique(m.elements[m.fine_flags])
    assert set(np.flatnonzero(m.dist == 0)) == set(fine_verts)


def test_lipschitz(pulse_mesh):
    d = pulse_mesh.dist[pulse_mesh.elements]
    assert np.all(np.abs(d[:, 0] - d[:, 1]) <= 1)


def test_uniform_mesh_sentinel():
    m = buildLocallyRefined(RegionSpec((0.0, 1.0), 0.1))
    assert m.n_elements == 10
    assert not m.fine_flags.any()
    assert np.all(np.isinf(m.dist))
    assert np.all(etaWeights(m, 3) == 0)
    assert not fineLayers(m, 5).any()


def test_arrays_readonly(pulse_mesh):
    with pytest.raises(ValueError):
        pulse_mesh.vertices[0] = 1.0


@pytest.mark.parametrize("spec", [
    RegionSpec((0.0, 4.0), 0.03),
    RegionSpec((0.0, 4.0), 0.1, (1.63, 2.4), 2),
    RegionSpec((0.0, 4.0), 0.1, (1.6, 4.5), 2),
    RegionSpec((0.0, 4.0), 0.1, (1.6, 2.4), 0),
    RegionSpec((1.0, 0.0), 0.1),
])
def test_rejects_bad_geometry(spec):
    with pytest.raises(ValueError):
        buildLocallyRefined(spec)


def _floyd_oracle(mesh):
    n = mesh.n_vertices
    e = mesh.elements
    A = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
    D = shortest_path(A, method="FW", directed=False, unweighted=True)
    src = np.unique(e[mesh.fine_flags])
    if len(src) == 0:
        return np.full(n, np.inf)
    return D[src].min(axis=0)


@pytest.mark.parametrize("spec", [
    RegionSpec((0.0, 4.0), 0.1, (1.6, 2.4), 2),
    RegionSpec((0.0, 4.0), 0.1, (2.0, 2.4), 5),
    RegionSpec((0.0, 1.0), 0.05, (0.5, 1.0), 2),
    RegionSpec((0.0, 1.0), 0.05, (0.0, 0.2), 3),
    RegionSpec((0.0, 1.0), 0.1, (0.3, 0.3), 2),
])
def test_bfs_matches_all_pairs(spec):
    m = buildLocallyRefined(spec)
    assert m.n_vertices <= 200
    assert np.array_equal(m.dist, _floyd_oracle(m))


def test_graph_distance_disconnected():
    elements = np.array([[0, 1], [2, 3]])
    d = graph_distance(4, elements, np.array([True, False]))
    assert list(d[:2]) == [0, 0] and np.all(np.isinf(d[2:]))


def test_eta_examples(pulse_mesh):
    m = pulse_mesh
    eta1 = etaWeights(m, 1)
    assert np.array_equal(eta1, (m.dist == 0).astype(float))
    eta3 = etaWeights(m, 3)
    assert np.allclose(eta3[m.dist == 2], 1.0 / 3.0)
    assert np.all(eta3[m.dist >= 3] == 0)
    assert np.all((eta3 >= 0) & (eta3 <= 1))
    with pytest.raises(ValueError):
        etaWeights(m, 0)


def test_eta_monotone_in_distance(pulse_mesh):
    m = pulse_mesh
    for s in (1, 2, 5):
        eta = etaWeights(m, s)
        order = np.argsort(m.dist, kind="stable")
        assert np.all(np.diff(eta[order]) <= 0)


def test_layers(pulse_mesh):
    m = pulse_mesh
    assert np.array_equal(fineLayers(m, 0), m.fine_flags)
    l1 = fineLayers(m, 1)
    assert l1.sum() == m.fine_flags.sum() + 2
    prev = fineLayers(m, 0)
    for r in range(1, 30):
        cur = fineLayers(m, r)
        assert np.all(cur[prev])
        prev = cur
    assert prev.all()
    with pytest.raises(ValueError):
        fineLayers(m, -1)


def test_layers_by_closure(pulse_mesh):
    # Omega_f^{+r}: elements touching the closure of Omega_f^{+(r-1)}
    m = pulse_mesh
    cur = m.fine_flags.copy()
    for r in range(1, 8):
        verts = np.unique(m.elements[cur])
        cur = np.isin(m.elements, verts).any(axis=1)
        assert np.array_equal(cur, fineLayers(m, r))


def test_summary(pulse_mesh):
    s = pulse_mesh.summary()
    assert s["n_elements"] == 48 and s["n_fine_elements"] == 16
    assert s["layer_1_elements"] == 18
