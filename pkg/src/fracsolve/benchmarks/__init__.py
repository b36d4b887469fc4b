"""Reference solutions and validation problems."""

from __future__ import annotations

from .analytic import (ErrorReport, central_window, convergence_rate,
                       error_norms, griffith_opening,
                       griffith_pressurized_length, griffith_solution,
                       griffith_stress_y, phan_solution)
from .cases import (CASES, CONVERGENCE_STUDIES, CaseRun, run_borja,
                    run_checkerboard, run_griffith, run_kgd, run_penny,
                    run_phan)
from .selfsimilar import (kgd_half_length, kgd_profiles, kgd_reference,
                          kgd_scales, penny_profiles, penny_radius,
                          penny_reference, penny_scales)

__all__ = [
    "CASES",
    "CONVERGENCE_STUDIES",
    "CaseRun",
    "ErrorReport",
    "central_window",
    "convergence_rate",
    "error_norms",
    "griffith_opening",
    "griffith_pressurized_length",
    "griffith_solution",
    "griffith_stress_y",
    "kgd_half_length",
    "kgd_profiles",
    "kgd_reference",
    "kgd_scales",
    "penny_profiles",
    "penny_radius",
    "penny_reference",
    "penny_scales",
    "phan_solution",
    "run_borja",
    "run_checkerboard",
    "run_griffith",
    "run_kgd",
    "run_penny",
    "run_phan",
]
