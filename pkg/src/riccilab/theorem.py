"""Numerical check of the upper-limit estimate for lambda_1 along the flow.

Given a converged `~riccilab.flow.FlowTrace`, the limit metric is the last
sample. For a test function ``f`` with mean zero against the limit measure,
every earlier sample carries

    c_t = 1' M_t f,      h_t = f - c_t / V,

and the variational characterization of the first nonzero eigenvalue gives

    lambda_1(t) <= (f' L_t f) / (f' M_t f - c_t**2 / V).

The verdict compares ``lambda_1(T)`` with the maximum of ``lambda_1`` over a
trailing window of samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .spectral import assemble_mass, assemble_stiffness, first_nonzero_eigenpair


class TheoremLabError(ValueError):
    pass


def _mass_diag(M):
    """Diagonal of a lumped mass matrix, or the vector itself."""
    if isinstance(M, np.ndarray) and M.ndim == 1:
        return M.astype(float, copy=False)
    return np.asarray(M.diagonal(), dtype=float)


def weighted_mean(f, M) -> float:
    """``1' M f``: the integral of ``f`` against the lumped measure."""
    f = np.asarray(f, dtype=float)
    m = _mass_diag(M)
    if f.shape != m.shape:
        raise TheoremLabError("f and M have different sizes")
    return float(m @ f)


def centered_test_function(f, M, V: float) -> np.ndarray:
    """``h = f - (1' M f / V) * 1``."""
    if not V > 0:
        raise TheoremLabError("V must be positive")
    f = np.asarray(f, dtype=float)
    return f - weighted_mean(f, M) / V


class CenteringCheck(NamedTuple):
    c: float
    h: np.ndarray
    centering: float
    energy_error: float
    norm_error: float


def check_centering(f, L, M, V: float) -> CenteringCheck:
    """Centre ``f`` and measure the two identities the bound relies on.

    ``energy_error`` is the relative gap between ``h' L h`` and ``f' L f``;
    ``norm_error`` the relative gap between ``h' M h`` and
    ``f' M f - c**2 / V``. ``centering`` is ``|1' M h|``.
    """
    f = np.asarray(f, dtype=float)
    m = _mass_diag(M)
    c = weighted_mean(f, m)
    h = centered_test_function(f, m, V)
    eh, ef = float(h @ (L @ h)), float(f @ (L @ f))
    nh, nf = float(h @ (m * h)), float(f @ (m * f)) - c * c / V
    energy = abs(eh - ef) / max(abs(ef), np.finfo(float).tiny)
    norm = abs(nh - nf) / max(abs(nf), np.finfo(float).tiny)
    return CenteringCheck(c, h, abs(float(m @ h)), energy, norm)


class RayleighBound(NamedTuple):
    t: float
    lambda1: float
    bound: float
    c: float
    centering: float
    energy_error: float
    norm_error: float

    @property
    def violated(self) -> bool:
        return self.lambda1 > self.bound + 1e-9 * self.lambda1


def _sample_matrices(trace, k):
    metric = trace.metric_at(k)
    return assemble_stiffness(metric), assemble_mass(metric)


def _check_admissible(f, mT):
    norm_f = float(np.linalg.norm(f))
    if norm_f == 0 or np.ptp(f) <= 1e-14 * np.abs(f).max():
        raise TheoremLabError("f is constant; its centred version vanishes")
    if abs(mT @ f) > 1e-8 * norm_f * mT.sum():
        raise TheoremLabError("f is not mean-zero against the final measure")


def _bound_table(trace, tests) -> list[list[RayleighBound]]:
    """Bound series for several test functions, one matrix build per sample."""
    n = len(trace.samples)
    mT = _mass_diag(_sample_matrices(trace, n - 1)[1])
    for f in tests:
        _check_admissible(f, mT)
    table = [[] for _ in tests]
    for k, s in enumerate(trace.samples):
        L, M = _sample_matrices(trace, k)
        m = _mass_diag(M)
        V = float(m.sum())
        for row, f in zip(table, tests):
            chk = check_centering(f, L, m, V)
            den = float(f @ (m * f)) - chk.c ** 2 / V
            if not den > 0:
                raise TheoremLabError(f"nonpositive denominator {den:.3e} at t={s.t:.6g}")
            row.append(RayleighBound(s.t, s.lambda1, float(f @ (L @ f)) / den, chk.c,
                                     chk.centering, chk.energy_error, chk.norm_error))
    return table


def rayleigh_bound_series(trace, f) -> list[RayleighBound]:
    """The test-function bound at every sample of ``trace``.

    ``f`` must have mean zero against the final sample's mass matrix (to
    ``1e-8 * |f| * V``) and must not be constant. At each sample ``V`` is
    that sample's total area ``1' M_t 1``, which renormalized runs hold
    fixed.

    Raises
    ------
    TheoremLabError
        If ``f`` fails the mean-zero precondition or a denominator
        ``f' M_t f - c_t**2 / V`` is not positive (``f`` numerically
        constant).
    """
    return _bound_table(trace, [np.asarray(f, dtype=float)])[0]


def tail_limsup(trace, window_fraction: float = 0.2) -> float:
    """Max of ``lambda1`` over the last ``max(5, ceil(window_fraction * N))`` samples.

    ``trace`` may also be a plain sequence of eigenvalues.
    """
    if not 0 < window_fraction <= 1:
        raise TheoremLabError("window_fraction must lie in (0, 1]")
    lams = _lambdas(trace)
    if len(lams) == 0:
        raise TheoremLabError("empty trace")
    w = max(5, math.ceil(window_fraction * len(lams)))
    return float(np.max(lams[-w:]))


def _lambdas(trace) -> np.ndarray:
    if hasattr(trace, "samples"):
        return np.array([s.lambda1 for s in trace.samples], dtype=float)
    return np.asarray(trace, dtype=float)


@dataclass
class VerificationReport:
    """Outcome of `semicontinuity_verdict`.

    ``h_centering_max`` is the largest ``|1' M_t h_t|`` over samples and test
    functions, divided by ``|f| * V``. ``identity_max_err`` is the worst
    relative error of the energy and norm identities of `check_centering`.
    ``bound_gap_min`` is the smallest ``(bound - lambda1) / lambda1``.
    """

    status: str
    lambda_final: float
    tail_limsup: float
    margin: float
    epsilon_semi: float
    semicontinuity_pass: bool
    converged: bool
    n_samples: int
    window_fraction: float
    rayleigh_violations: int = 0
    rayleigh_checked: int = 0
    c_series: list[tuple[float, float]] = field(default_factory=list)
    h_centering_max: float = 0.0
    identity_max_err: float = 0.0
    bound_gap_min: float = math.nan

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "semicontinuity_pass": self.semicontinuity_pass,
            "converged": self.converged,
            "lambda_final": self.lambda_final,
            "tail_limsup": self.tail_limsup,
            "margin": self.margin,
            "epsilon_semi": self.epsilon_semi,
            "window_fraction": self.window_fraction,
            "n_samples": self.n_samples,
            "rayleigh_violations": self.rayleigh_violations,
            "rayleigh_checked": self.rayleigh_checked,
            "h_centering_max": self.h_centering_max,
            "identity_max_err": self.identity_max_err,
            "bound_gap_min": self.bound_gap_min,
            "c_series": [[t, c] for t, c in self.c_series],
        }


def random_test_functions(M, count: int, seed: int = 0) -> np.ndarray:
    """``count`` seeded Gaussian functions projected to M-mean zero (rows)."""
    m = _mass_diag(M)
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((count, len(m)))
    return F - np.outer(F @ m, np.ones(len(m))) / m.sum()


def semicontinuity_verdict(trace, epsilon_rel: float = 1e-6, window_fraction: float = 0.2,
                           n_random: int = 20, seed: int = 0,
                           check_rayleigh: bool = True) -> VerificationReport:
    """Compare ``lambda_1`` of the limit metric with the tail limsup.

    Passes iff ``lambda_final >= tail_limsup - eps`` with
    ``eps = (epsilon_rel + 2 * solver_tol) * lambda_final``. An unconverged
    trace gives status ``"inconclusive"`` and never ``"fail"``.

    With ``check_rayleigh`` the bound series is evaluated for ``f = phi_T``
    (the final eigenvector) and ``n_random`` random mean-zero functions,
    and the report collects violations, the centering residual, the worst
    identity error and the ``c_t`` series of ``phi_T``.
    """
    lams = _lambdas(trace)
    lam_final = float(lams[-1])
    limsup = tail_limsup(lams, window_fraction)
    solver_tol = getattr(trace, "solver_tol", 0.0)
    eps = (epsilon_rel + 2 * solver_tol) * lam_final
    margin = lam_final - limsup
    converged = bool(getattr(trace, "converged", True))
    passed = converged and margin >= -eps
    status = "inconclusive" if not converged else ("pass" if passed else "fail")
    report = VerificationReport(status, lam_final, limsup, margin, eps, passed, converged,
                                len(lams), window_fraction)
    if not check_rayleigh or getattr(trace, "final_metric", None) is None:
        return report

    L_T, M_T = _sample_matrices(trace, len(trace.samples) - 1)
    sol = first_nonzero_eigenpair(L_T, M_T, solver_tol or 1e-10)
    tests = [sol.phi] + list(random_test_functions(M_T, n_random, seed))
    table = _bound_table(trace, tests)
    report.c_series = [(b.t, b.c) for b in table[0]]
    VT = float(_mass_diag(M_T).sum())
    gaps = []
    for f, series in zip(tests, table):
        scale = float(np.linalg.norm(f)) * VT
        for b in series:
            report.rayleigh_checked += 1
            report.rayleigh_violations += int(b.violated)
            report.h_centering_max = max(report.h_centering_max, b.centering / scale)
            report.identity_max_err = max(report.identity_max_err, b.energy_error,
                                          b.norm_error)
            gaps.append((b.bound - b.lambda1) / b.lambda1)
    report.bound_gap_min = float(min(gaps))
    return report


def summarize(report: VerificationReport) -> Sequence[str]:
    return [
        f"status={report.status} lambda_final={report.lambda_final:.12g} "
        f"tail_limsup={report.tail_limsup:.12g} margin={report.margin:.3e} "
        f"eps={report.epsilon_semi:.3e}",
        f"rayleigh violations={report.rayleigh_violations}/{report.rayleigh_checked} "
        f"centering={report.h_centering_max:.3e} identity_err={report.identity_max_err:.3e}",
    ]
