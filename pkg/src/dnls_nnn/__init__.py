"""Stable/unstable manifolds, homoclinic intersections, and lattice solitons
of a 4-d polynomial map arising from a cubic lattice equation with
next-to-adjacent coupling."""

__version__ = "0.1.0"

from .maps import (  # noqa: F401
    ModelParams,
    SYMMETRIES,
    apply_symmetry,
    conjugacy_check_2d,
    fixed_points,
    iterate_orbit,
    map2_apply,
    map2_inverse,
    map2_jacobian,
    map4_apply,
    map4_inverse,
    map4_jacobian,
    nonwandering_bound,
)
from .spectral import (  # noqa: F401
    ALL_REAL,
    CRITICAL_A,
    MIXED,
    TWO_PAIRS_COMPLEX,
    EigenSystem,
    NonHyperbolicError,
    ReciprocalQuartic,
    characteristic_poly,
    classify_eigenvalues,
    discriminant,
    eigenvectors_at_origin,
    solve_reciprocal_quartic,
    sturm_real_root_test,
)
from .manifold import (  # noqa: F401
    GaugeError,
    ManifoldSeries,
    ResonanceError,
    SeriesOverflowError,
    compute_manifold,
    compute_manifold_pair,
    conjugacy_residual,
    cubic_convolution,
    evaluate_series,
    load_series,
    rescale_series,
    save_series,
    series_from_dict,
    series_jacobian,
    series_to_dict,
    solve_order_block,
)
from .homoclinic import (  # noqa: F401
    FitResult,
    HomoclinicSolution,
    MatchFailure,
    ScanCell,
    det_curve_fit,
    multistart_search,
    newton_match,
    scan_parameters,
    symmetric_search,
    transversality_det,
)
from .soliton import (  # noqa: F401
    Orbit2D,
    ProfileError,
    SolitonProfile,
    build_profile,
    mirror_defect,
    portrait_2d,
    stationary_residual,
)
