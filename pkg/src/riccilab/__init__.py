"""Normalized Ricci flow on triangulated surfaces and the first Laplacian eigenvalue.

Submodules
----------
mesh      closed triangle meshes, OFF ingestion, icosphere and flat-torus builders
geometry  vertex-scaling conformal metrics, angle defects, dual areas
spectral  cotangent stiffness, lumped mass, first nonzero eigenpair
flow      explicit-Euler normalized Ricci flow with area renormalization
theorem   test-function bounds, tail limsup and the semicontinuity verdict
cli       JSON-configured command line and byte-stable outputs
"""

from .flow import FlowConfig, FlowTrace, area_evolution_check, flow_step, run_flow, velocity
from .geometry import (ConformalMetric, CurvatureState, angle_defects, corner_angles, curvature_state,
                       metric_from_positions, perturb, rescale_to_area)
from .mesh import (TriMesh, build_flat_torus, build_icosphere, euler_characteristic,
                   load_off, read_off)
from .spectral import (SpectralSolution, assemble_mass, assemble_stiffness,
                       dense_reference_spectrum, first_nonzero_eigenpair, rayleigh_quotient)
from .theorem import (VerificationReport, centered_test_function, rayleigh_bound_series,
                      semicontinuity_verdict, tail_limsup, weighted_mean)

__version__ = "0.1.0"

__all__ = [
    "ConformalMetric", "CurvatureState", "FlowConfig", "FlowTrace", "SpectralSolution",
    "TriMesh", "VerificationReport", "angle_defects", "area_evolution_check", "assemble_mass",
    "assemble_stiffness", "build_flat_torus", "build_icosphere", "centered_test_function",
    "corner_angles", "curvature_state", "dense_reference_spectrum", "euler_characteristic",
    "first_nonzero_eigenpair", "flow_step", "load_off", "metric_from_positions", "perturb",
    "rayleigh_bound_series", "rayleigh_quotient", "read_off", "rescale_to_area", "run_flow",
    "semicontinuity_verdict", "tail_limsup", "velocity", "weighted_mean",
]
