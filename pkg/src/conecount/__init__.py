"""conecount: primitive integer points on light cones of rational quadratic
forms, with counting functions, closed-form main terms, and experiment
campaigns checking the counting laws at desk scale."""

__version__ = "0.1.0"

from .quadform import EllipsoidForm, QuadraticSpace, parse_form_spec, parse_form_text
from .enumeration import (
    ConePoint,
    brute_force_primitive,
    count_all,
    enumerate_by_norm,
    enumerate_primitive,
    primitive_points,
)
from .geometry import (
    ApproxRegion,
    GeneralizedSector,
    PolarPoint,
    Sector,
    SphericalCap,
    c_cap,
    cap_measure_exact,
    cap_measure_leading,
    contains,
    from_polar,
    parse_psi,
    parse_region,
    region_measure,
    sector_measure,
    to_polar,
)
from .group import GroupElement, NeighborhoodSpec, iwasawa_a, iwasawa_u, rotation_k, sample_sphere, section
from .counting import (
    CountReport,
    ExponentTable,
    count_cap,
    count_khintchine,
    cross_check_identity,
    estimate_kappa,
    i_sum,
    j_sum,
    predicted_exponents,
)
from .valdist import (
    Box,
    HomogeneousFormOnCone,
    LinearMapOnCone,
    c_nm,
    count_homog,
    count_linear,
    predict_homog_measure,
    predict_linear_measure,
    v_F,
    v_L,
    v_L_closed_form,
)
from .spectral import SeparableFunction, m_ff, mellin, p_d
from .experiments import ExperimentConfig, FitResult, fit_exponent, run_experiment
