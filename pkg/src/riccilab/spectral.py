"""Cotangent Laplacian, lumped mass and the first nonzero eigenpair."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse import linalg as spla

from .geometry import ConformalMetric, check_triangles, corner_cotangents, vertex_areas

logger = logging.getLogger(__name__)


class EigenSolverError(RuntimeError):
    """The eigensolver hit its iteration cap before meeting the residual tolerance."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


@dataclass(frozen=True)
class SpectralSolution:
    lambda1: float
    phi: np.ndarray
    residual: float
    iterations: int


def assemble_stiffness(metric: ConformalMetric) -> sparse.csr_matrix:
    """Cotangent stiffness matrix.

    Off-diagonal ``(i, j)`` is ``-(cot alpha + cot beta) / 2`` over the two
    angles opposite edge ``ij``; the diagonal makes every row sum to zero.
    ``f @ L @ f`` is the Dirichlet energy of the piecewise-linear
    interpolant of ``f``. Negative weights from non-Delaunay edges are kept.
    """
    mesh = metric.mesh
    lengths = metric.face_lengths()
    check_triangles(lengths)
    cot = corner_cotangents(lengths)
    nv = mesh.n_vertices
    # each face contributes cot(corner k)/2 to the edge opposite corner k
    w = np.zeros(mesh.n_edges)
    np.add.at(w, mesh.face_edges.ravel(), 0.5 * cot.ravel())
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    diag = np.bincount(i, weights=w, minlength=nv) + np.bincount(j, weights=w, minlength=nv)
    rows = np.concatenate([i, j, np.arange(nv)])
    cols = np.concatenate([j, i, np.arange(nv)])
    vals = np.concatenate([-w, -w, diag])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(nv, nv))


def assemble_mass(metric: ConformalMetric) -> sparse.dia_matrix:
    """Diagonal lumped mass: the dual vertex areas of `curvature_state`."""
    return sparse.diags(vertex_areas(metric))


def _diag(M):
    return M.diagonal() if sparse.issparse(M) else np.diag(M)


def rayleigh_quotient(L, M, f) -> float:
    """``(f L f) / (f M f)``."""
    f = np.asarray(f, dtype=float)
    den = float(f @ (M @ f))
    if not den > 0:
        raise ValueError("f has zero M-norm")
    return float(f @ (L @ f)) / den


def _project_constants(x, m):
    """Remove the M-weighted mean from each column of ``x``."""
    return x - np.outer(np.ones(len(m)), m @ x) / m.sum() if x.ndim == 2 \
        else x - (m @ x) / m.sum()


def relative_residual(L, M, lam, phi) -> float:
    Mphi = M @ phi
    return float(np.linalg.norm(L @ phi - lam * Mphi) / (lam * np.linalg.norm(Mphi)))


def first_nonzero_eigenpair(L, M, tolerance: float = 1e-10, max_restarts: int = 20,
                            nev: int = 6) -> SpectralSolution:
    """Smallest positive generalized eigenpair of ``L phi = lambda M phi``.

    Shift-invert Lanczos (ARPACK) on ``(L - sigma M)^-1 M`` with a small
    negative shift. The shifted operator is composed with the M-orthogonal
    projector onto mean-zero functions, so the constant kernel is mapped to
    zero and never enters the Krylov space. ``nev`` eigenvalues are
    requested so that a nearly degenerate lowest cluster is resolved and
    its smallest member reported. The result is polished by a final
    projected inverse-iteration and Rayleigh quotient.

    Raises
    ------
    EigenSolverError
        If the relative residual is still above ``tolerance`` after
        ``max_restarts`` polishing sweeps.
    """
    if not 0 < tolerance <= 1e-2:
        raise ValueError("tolerance must lie in (0, 1e-2]")
    L = sparse.csc_matrix(L)
    m = _diag(M)
    n = L.shape[0]
    Md = sparse.diags(m)
    sigma = -float(L.diagonal().sum() / m.sum()) / n
    solve = spla.factorized(sparse.csc_matrix(L - sigma * Md))

    def opinv(x):
        return _project_constants(solve(x), m)

    k = max(1, min(nev, n - 2))
    op = spla.LinearOperator((n, n), matvec=opinv, dtype=float)
    if n <= 8:
        # too small for ARPACK; the mean-zero subspace is tiny, solve it directly
        vals, vecs = _projected_dense(L.toarray(), m)
        iters = 0
    else:
        rng = np.random.default_rng(0)
        v0 = _project_constants(rng.standard_normal(n), m)
        vals, vecs = spla.eigsh(L, k=k, M=Md, sigma=sigma, which="LM", OPinv=op,
                                v0=v0, tol=0.0)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        iters = k
    phi = _project_constants(vecs[:, 0], m)
    phi = phi / np.sqrt(phi @ (m * phi))
    lam = rayleigh_quotient(L, Md, phi)
    res = relative_residual(L, Md, lam, phi)
    best = res
    for sweep in range(max_restarts):
        if res <= tolerance:
            break
        phi = _project_constants(solve(m * phi), m)
        phi = phi / np.sqrt(phi @ (m * phi))
        lam = rayleigh_quotient(L, Md, phi)
        res = relative_residual(L, Md, lam, phi)
        best = min(best, res)
        iters += 1
    if res > tolerance:
        raise EigenSolverError(f"eigensolver stalled at relative residual {best:.3e}", best)
    if not lam > 0:
        raise EigenSolverError(f"nonpositive eigenvalue {lam!r}", res)
    return SpectralSolution(lam, phi, res, iters)


def _projected_dense(L, m):
    """Rayleigh-Ritz on the whole M-mean-zero subspace."""
    Q = scipy.linalg.null_space(m[None, :])
    vals, y = scipy.linalg.eigh(Q.T @ L @ Q, Q.T @ (m[:, None] * Q))
    return vals, Q @ y


def dense_reference_spectrum(L, M) -> np.ndarray:
    """Full generalized spectrum by a dense symmetric-definite solve."""
    n = L.shape[0]
    if n > 2000:
        raise ValueError(f"dense reference limited to 2000 vertices, got {n}")
    Ld = L.toarray() if sparse.issparse(L) else np.asarray(L)
    Md = M.toarray() if sparse.issparse(M) else np.asarray(M)
    return scipy.linalg.eigh(Ld, Md, eigvals_only=True)


def first_nonzero(spectrum) -> float:
    """Second-smallest value of a spectrum (the kernel of a connected mesh is simple)."""
    return float(np.sort(np.asarray(spectrum))[1])
