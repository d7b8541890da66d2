"""Steady-state transmission zeros of distance-based planar formations."""

from .dcgain import (
    CrossCoupling,
    DcGainBlock,
    Verdict,
    ZeroTestResult,
    cross_coupling,
    dc_gain_block,
    kernel_projector,
    pinned_check,
    transmission_zero_test,
)
from .dynamics import FrequencyResponseTable, SimResult, frequency_response, lti_response, nonlinear_simulate
from .framework import (
    FormationSpec,
    Framework,
    ModalDecomposition,
    build_framework,
    modal_decomposition,
    nullspace_via_pivot,
    rbm_basis,
    rigidity_function,
    rigidity_matrix,
)
from .genericity import GenericityReport, bisect_zero, genericity_experiment, sample_configuration
from .geometry import (
    HalfPlane,
    Membership,
    Placement,
    TransmissionPolygon,
    locus_residual,
    polygon_membership,
    spatial_locus,
    transmission_polygon,
)
from .io import bundled_formation, parse_formation_file

__version__ = "0.1.0"
