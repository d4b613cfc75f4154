"""Numerical laboratory for volume-preserving curvature flow of closed
planar curves: a constrained semi-implicit integrator with exact discrete
area conservation, monotonicity and density diagnostics, parabolic
rescaling tools for singularities, and mean-curvature integrals over
surfaces of revolution.
"""

from . import errors
from .blowup import (RescalingFrame, TypeReport, classify_type,
                     extinction_fit, hbar_decay_check, psi_invariance_check,
                     rescale, shrinker_residual, shrinker_residual_battery,
                     write_blowup_report)
from .diagnostics import (AsymptoticReport, Certificate, DensityQuery,
                          DensityResult, DiagnosticsSeries,
                          LocalDensityReport, asymptotic_ratio_scan,
                          clearing_out_certificate, clearing_out_threshold,
                          diameter_derivative_check, gaussian_density,
                          l2_multiplier_bound_check, local_density,
                          polyline_length_in_ball, running_max_envelope,
                          series, uniform_diameter_condition,
                          write_series_csv)
from .flow import (FlowConfig, FlowHistory, curvature_evolution_residual,
                   run, step)
from .geometry import (ClosedCurve, GeoCache, average_curvature_nonlocal,
                       build_cache, detect_touch, polygon_diameter,
                       read_snapshot, resample_uniform, shoelace_area,
                       write_snapshot)
from .revolution import (ArcProfile, LineProfile, PieceGroup, PieceIntegrals,
                         TrilobiteSurface, assemble_trilobite,
                         balance_trilobite, closed_form_integrals,
                         hbar_derivative_at_zero, quadrature_integrals,
                         reference_l, write_trilobite_report)
from .runner import (SUITES, config_from_dict, load_config, load_history,
                     run_scenario, verify_suite, write_run_directory)
from .scenarios import (ScenarioConfig, capsule, circle, dumbbell, ellipse,
                        figure_eight, make_scenario)

__version__ = "0.1.0"
