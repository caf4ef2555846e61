import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import sparse

from riccilab.geometry import metric_from_positions, perturb, rescale_to_area
from riccilab.mesh import build_flat_torus, build_icosphere
from riccilab.spectral import (EigenSolverError, assemble_mass, assemble_stiffness,
                               dense_reference_spectrum, first_nonzero,
                               first_nonzero_eigenpair, rayleigh_quotient)

from conftest import unit_tetrahedron


def _pair(metric):
    return assemble_stiffness(metric), assemble_mass(metric)


def test_tetrahedron_matrices():
    L, M = _pair(unit_tetrahedron())
    Ld = L.toarray()
    off = Ld[~np.eye(4, dtype=bool)]
    assert np.allclose(off, -1 / math.sqrt(3), atol=1e-15)
    assert np.allclose(M.diagonal(), math.sqrt(3) / 4, atol=1e-15)


def test_tetrahedron_triple_eigenvalue():
    L, M = _pair(unit_tetrahedron())
    spec = dense_reference_spectrum(L, M)
    assert abs(spec[0]) < 1e-9 * spec[1]
    assert np.allclose(spec[1:], spec[1], rtol=1e-12)
    # closed form: L = (4I - J)/sqrt(3), M = sqrt(3)/4 I, so lambda = 16/3
    assert math.isclose(spec[1], 16 / 3, rel_tol=1e-12)
    sol = first_nonzero_eigenpair(L, M)
    assert math.isclose(sol.lambda1, 16 / 3, rel_tol=1e-12)


def test_stiffness_structure():
    m = perturb(metric_from_positions(build_icosphere(2)), 0.2, 1)
    L, _ = _pair(m)
    assert abs(L - L.T).max() == 0
    assert np.abs(L @ np.ones(L.shape[0])).max() < 1e-12


def test_flat_torus_stiffness_psd():
    _, m = build_flat_torus(4, 4)
    L, _ = _pair(m)
    rng = np.random.default_rng(0)
    Ld = L.toarray()
    for _ in range(100):
        f = rng.standard_normal(16)
        assert f @ Ld @ f >= -1e-10 * (f @ f)
    assert np.linalg.eigvalsh(Ld).min() > -1e-12


def test_mass_matrix():
    m = metric_from_positions(build_icosphere(2))
    M = assemble_mass(m)
    assert abs(M.diagonal().sum() - m.total_area()) < 1e-12 * m.total_area()
    M2 = assemble_mass(rescale_to_area(m, 2 * m.total_area()))
    assert np.allclose(M2.diagonal(), 2 * M.diagonal(), rtol=1e-13)


def test_rayleigh_quotient_basics():
    m = perturb(metric_from_positions(build_icosphere(2)), 0.1, 2)
    L, M = _pair(m)
    n = L.shape[0]
    assert abs(rayleigh_quotient(L, M, np.ones(n))) < 1e-14
    sol = first_nonzero_eigenpair(L, M)
    assert abs(rayleigh_quotient(L, M, sol.phi) - sol.lambda1) <= 1e-10 * sol.lambda1
    num = sol.phi @ (L @ sol.phi)
    shifted = sol.phi + 5.0
    assert math.isclose(shifted @ (L @ shifted), num, rel_tol=1e-10)


def test_sphere_anchor():
    m = rescale_to_area(metric_from_positions(build_icosphere(3)), 4 * math.pi)
    sol = first_nonzero_eigenpair(*_pair(m))
    assert abs(sol.lambda1 - 2.0) / 2.0 < 0.02
    # oracle cross-check on the coarser sphere
    m2 = rescale_to_area(metric_from_positions(build_icosphere(2)), 4 * math.pi)
    L2, M2 = _pair(m2)
    ref = first_nonzero(dense_reference_spectrum(L2, M2))
    assert math.isclose(first_nonzero_eigenpair(L2, M2).lambda1, ref, rel_tol=1e-8)


def test_torus_anchor():
    _, m = build_flat_torus(16, 16)
    sol = first_nonzero_eigenpair(*_pair(m))
    assert abs(sol.lambda1 - 4 * math.pi ** 2) / (4 * math.pi ** 2) < 0.02
    _, m8 = build_flat_torus(8, 8)
    L8, M8 = _pair(m8)
    ref = first_nonzero(dense_reference_spectrum(L8, M8))
    assert math.isclose(first_nonzero_eigenpair(L8, M8).lambda1, ref, rel_tol=1e-8)


def test_icosphere1_first_cluster():
    L, M = _pair(metric_from_positions(build_icosphere(1)))
    spec = dense_reference_spectrum(L, M)
    cluster = spec[1:4]
    assert np.ptp(cluster) < 1e-6 * cluster[0]
    assert spec[4] > cluster[0] * (1 + 1e-3)


def test_torus_kernel_is_simple():
    _, m = build_flat_torus(4, 4)
    spec = dense_reference_spectrum(*_pair(m))
    assert np.sum(np.abs(spec) < 1e-9 * spec[1]) == 1


def test_dense_guard():
    L = sparse.identity(2001, format="csr")
    with pytest.raises(ValueError):
        dense_reference_spectrum(L, L)


def test_solution_certificate():
    m = perturb(metric_from_positions(build_icosphere(3)), 0.3, 42)
    L, M = _pair(m)
    tol = 1e-10
    sol = first_nonzero_eigenpair(L, M, tol)
    mass = M.diagonal()
    phi = sol.phi
    m_norm = math.sqrt(phi @ (mass * phi))
    assert abs(phi @ mass) <= 1e-10 * m_norm * math.sqrt(mass.sum())
    res = np.linalg.norm(L @ phi - sol.lambda1 * mass * phi) / (
        sol.lambda1 * np.linalg.norm(mass * phi))
    assert res <= tol
    assert sol.lambda1 > 0


def test_solver_raises_when_unreachable():
    L, M = _pair(metric_from_positions(build_icosphere(2)))
    with pytest.raises(EigenSolverError):
        first_nonzero_eigenpair(L, M, tolerance=1e-30, max_restarts=1)


_SPECTRAL_METRICS = [
    metric_from_positions(build_icosphere(1)),
    metric_from_positions(build_icosphere(2)),
    build_flat_torus(6, 6)[1],
]


@settings(max_examples=15, deadline=None)
@given(k=st.integers(0, 2), seed=st.integers(0, 2**32 - 1),
       c=st.floats(-1.5, 1.5, allow_nan=False))
def test_spectrum_scale_covariance(k, seed, c):
    m = perturb(_SPECTRAL_METRICS[k], 0.1, seed)
    lam = first_nonzero_eigenpair(*_pair(m)).lambda1
    lam_c = first_nonzero_eigenpair(*_pair(m.with_u(m.u + c))).lambda1
    assert math.isclose(lam_c, math.exp(-2 * c) * lam, rel_tol=1e-9)


@settings(max_examples=10, deadline=None)
@given(k=st.integers(0, 2), seed=st.integers(0, 2**32 - 1))
def test_rayleigh_lower_bound_and_shift_invariance(k, seed):
    m = perturb(_SPECTRAL_METRICS[k], 0.1, seed)
    L, M = _pair(m)
    lam = first_nonzero_eigenpair(L, M).lambda1
    mass = M.diagonal()
    rng = np.random.default_rng(seed)
    for _ in range(100):
        f = rng.standard_normal(len(mass))
        f -= (f @ mass) / mass.sum()
        assert rayleigh_quotient(L, M, f) >= lam - 1e-9 * lam
        c = rng.uniform(-10, 10)
        e0 = f @ (L @ f)
        assert math.isclose((f + c) @ (L @ (f + c)), e0, rel_tol=1e-10)
