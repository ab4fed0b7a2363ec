import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoinfer import Ball, Box, Cloud, DiscreteMeasure, GeometryError, Offset, boundary_measure, hausdorff, wasserstein1
from geoinfer.measures import MAX_ATOMS
from geoinfer.stability import transport_bound
from scipy.spatial.distance import cdist


def brute_w1(A, B):
    C = cdist(A, B)
    n = len(A)
    return min(math.fsum(C[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def unit(P):
    return DiscreteMeasure(P, np.ones(len(P)))


def test_dirac_and_identity():
    x, y = np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])
    assert wasserstein1(unit(x), unit(y))[0] == pytest.approx(5.0)
    P = np.random.default_rng(0).random((7, 3))
    assert wasserstein1(unit(P), unit(P))[0] == pytest.approx(0.0, abs=1e-15)


def test_crossing_case():
    cost, plan = wasserstein1(unit(np.array([[0, 0], [1, 0]])), unit(np.array([[0, 1], [1, 1]])))
    assert cost == 2.0
    assert sorted((i, j) for i, j, _ in plan.flows) == [(0, 0), (1, 1)]


def test_matches_enumeration_small():
    rng = np.random.default_rng(1)
    for n in range(1, 7):
        for _ in range(10):
            A, B = rng.normal(size=(n, 2)), rng.normal(size=(n, 2))
            cost, plan = wasserstein1(unit(A), unit(B))
            assert cost == pytest.approx(brute_w1(A, B), rel=1e-15, abs=0)


def test_plan_marginals():
    rng = np.random.default_rng(2)
    a, b = rng.random(8), rng.random(11)
    b *= a.sum() / b.sum()
    mu, nu = DiscreteMeasure(rng.random((8, 2)), a), DiscreteMeasure(rng.random((11, 2)), b)
    cost, plan = wasserstein1(mu, nu)
    T = plan.matrix(8, 11)
    assert np.all(T >= 0)
    assert np.allclose(T.sum(axis=1), a, rtol=1e-9)
    assert np.allclose(T.sum(axis=0), b, rtol=1e-9)
    assert cost == pytest.approx(np.sum(T * cdist(mu.atoms, nu.atoms)), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32))
def test_w1_metric_properties(seed):
    rng = np.random.default_rng(seed)
    ms = []
    for _ in range(3):
        n = int(rng.integers(1, 50))
        w = rng.random(n)
        ms.append(DiscreteMeasure(rng.normal(size=(n, 2)), w / w.sum()))
    a, b, c = ms
    ab, ba = wasserstein1(a, b)[0], wasserstein1(b, a)[0]
    assert ab == pytest.approx(ba, rel=1e-9, abs=1e-12)
    assert wasserstein1(a, c)[0] <= ab + wasserstein1(b, c)[0] + 1e-9


def test_unbalanced_and_too_large():
    with pytest.raises(ValueError, match="unbalanced"):
        wasserstein1(unit(np.zeros((1, 2))), DiscreteMeasure(np.zeros((1, 2)), [2.0]))
    big = DiscreteMeasure(np.zeros((MAX_ATOMS + 1, 1)), np.ones(MAX_ATOMS + 1))
    with pytest.raises(ValueError):
        wasserstein1(big, big)


def test_hausdorff_examples():
    P = np.random.default_rng(3).random((30, 2))
    assert hausdorff(P, P) == 0
    assert hausdorff([[0.0]], [[3.0]]) == 3
    assert hausdorff([[0, 0]], [[0, 0], [1, 0]]) == 1


def test_hausdorff_brute_force():
    rng = np.random.default_rng(4)
    A, B = rng.random((40, 3)), rng.random((25, 3))
    D = cdist(A, B)
    assert hausdorff(Cloud(A), Cloud(B)) == pytest.approx(max(D.min(axis=1).max(), D.min(axis=0).max()))


def test_boundary_measure_single_point():
    m = boundary_measure(Cloud([[0.2, 0.3]]), Box([-1, -1], [1, 1]), 1000, 0)
    assert len(m) == 1 and m.masses[0] == pytest.approx(4.0) and m.total == 4.0


def test_boundary_measure_two_points_symmetric():
    n = 100_000
    m = boundary_measure(Cloud([[-1, 0], [1, 0]]), ([-2, -2], [2, 2]), n, 5)
    assert m.total == 16.0
    assert math.fsum(m.masses) == pytest.approx(16.0, rel=1e-12)
    sd = 16 * math.sqrt(0.25 / n)  # standard deviation of each half's mass
    assert abs(m.masses[0] - 8) <= 3 * sd
    assert abs(m.masses[0] - m.masses[1]) <= 3 * 2 * sd


def test_boundary_measure_offset_ball():
    m = boundary_measure(Cloud([[0.0, 0.0, 0.0]]), Offset(1.0), 200_000, 1)
    assert m.total == pytest.approx(4 / 3 * math.pi, rel=0.01)


def test_boundary_measure_analytic_shape_atoms_on_K():
    B = Ball([0, 0], 1)
    m = boundary_measure(B, Offset(0.5), 5000, 2)
    assert np.all(np.linalg.norm(m.atoms, axis=1) <= 1 + 1e-12)


def test_acceptance_mismatch():
    K = Cloud([[0.0, 0.0], [100.0, 100.0]])
    with pytest.raises(GeometryError, match="E/bounding box mismatch"):
        boundary_measure(K, Offset(0.01), 1000, 0)


def test_measure_csv_round_trip(tmp_path):
    m = boundary_measure(Cloud(np.random.default_rng(7).random((5, 2))), ([0, 0], [1, 1]), 3000, 9)
    path = tmp_path / "m.csv"
    m.to_csv(path)
    back = DiscreteMeasure.from_csv(path)
    assert np.array_equal(back.atoms, m.atoms) and np.array_equal(back.masses, m.masses)
    assert back.total == m.total and back.seed == 9


def test_measure_invariants():
    with pytest.raises(ValueError):
        DiscreteMeasure([[0, 0]], [-1.0])
    with pytest.raises(ValueError):
        DiscreteMeasure([[0, 0], [1, 1]], [1.0])
    with pytest.raises(ValueError):
        DiscreteMeasure([[0, 0]], [1.0], total=2.0)
    assert DiscreteMeasure([[0, 0], [1, 1]], [1.0, 3.0]).normalized().masses.tolist() == [0.25, 0.75]


def test_transport_bound_coupled():
    rng = np.random.default_rng(8)
    K, K2 = Cloud(rng.random((20, 2))), Cloud(rng.random((15, 2)))
    tb = transport_bound(K, K2, ([-0.5, -0.5], [1.5, 1.5]), 20_000, 0)
    # with a shared stream the identity coupling bounds W1 sample-wise
    assert tb.w1 <= tb.l1.value + 1e-12
    assert tb.holds
