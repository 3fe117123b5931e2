"""kobalt: certified Kobayashi-distance bounds, Gromov-product diagnostics,
almost-geodesic certification, Wolff-Denjoy iteration and boundary-type
computations on convex domains in C^d."""

__version__ = "0.1.0"

from .boundary import (
    INFINITE_TYPE,
    DomainOracle,
    LineTypeResult,
    ScalingSequence,
    frankel_scaling,
    homogeneous_model,
    line_type,
    local_hausdorff_distance,
    vanishing_order,
)
from .dynamics import (
    Automorphism,
    Classification,
    OrbitRecord,
    SelfMap,
    WolffReport,
    ball_mobius,
    ball_unitary,
    cayley_conjugate,
    check_automorphism,
    classify,
    compose,
    ellipsoid_rotation,
    hyperbolic_search,
    iterate_orbit,
    limit_set_sample,
    siegel_classify_direct,
    siegel_dilation,
    siegel_translation,
    siegel_unitary,
    translation_check,
    wolff_denjoy,
)
from .geometry import (
    BoundaryPoint,
    ComplexHyperplane,
    ConvexDomain,
    boundary_data,
    boundary_distance,
    convexity_probe,
    validate_domain,
    directional_boundary_distance,
    nearest_boundary_point,
    same_complex_tangent,
    sample_interior,
    supporting_hyperplanes,
)
from .hyperbolicity import (
    ParamCurve,
    QuasiGeodesicCert,
    certify_quasi_geodesic,
    four_point_delta,
    normal_curve,
    product_dichotomy_experiment,
    two_face_curve,
    visibility_probe,
)
from .metrics import (
    DistanceInterval,
    MetricSample,
    dist_disk,
    dist_halfplane,
    distance_interval,
    gromov_product_interval,
    infinitesimal_bounds,
    lower_distance,
    siegel_distance_interval,
    upper_distance,
)
from .models import (
    PolynomialEllipsoid,
    SiegelDomain,
    WeightVector,
    WeightedPolynomial,
    ball_domain,
    cayley_inverse,
    cayley_map,
    diagonal_ellipsoid,
    domain_from_spec,
    flat_face_domain,
    validate_balanced,
    weight,
)
