"""Joint navigation/sensing beamforming: conic backend, penalised SDP, the
outer loop and comparison designs."""

from .algorithm import (BeamformingSolution, OptimizerSettings, evaluate_beams, initial_point,
                        run_algorithm1)
from .baselines import (baseline_ls, baseline_navigation_only, baseline_uwr, baseline_zfbf,
                        position_rmse)
from .conic import ConicProblem, ConicResult, conic_solve
from .sdp import build_penalized_sdp, lmi_census, sca_linearize_fim_entry

__all__ = [
    "BeamformingSolution", "OptimizerSettings", "evaluate_beams", "initial_point", "run_algorithm1",
    "baseline_ls", "baseline_navigation_only", "baseline_uwr", "baseline_zfbf", "position_rmse",
    "ConicProblem", "ConicResult", "conic_solve", "build_penalized_sdp", "lmi_census",
    "sca_linearize_fim_entry",
]
