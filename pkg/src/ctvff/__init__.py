"""RLS receivers with variable forgetting factors for DS-CDMA interference suppression."""
from .analysis import (CtvffPrediction, QCovariance, estimate_q_covariance, predict_ctvff,
                       predict_lambda_inf, predict_ss_mse, predict_tracking_mse)
from .config import AlgorithmConfig, ConfigError, Event, ScenarioConfig, load_config
from .filters import (CtvffState, GvffState, NumericalDivergenceError, RlsState, SgState,
                      count_extra_ops, ctvff_update, detect, gvff_lambda, gvff_update,
                      rake_filter, rls_step, sg_step)
from .harness import (MetricsTrace, SweepTable, predict_for_config, run_monte_carlo,
                      run_trial, sinr_of, sweep)
from .presets import PRESETS, Preset, get_preset
from .signal_model import (AnalyticalEnv, ChannelState, SpreadingCode, build_constraint_matrix,
                           build_isi_matrices, compute_analytical_env, gen_spreading_codes,
                           init_channel, jakes_step, synth_received)

__version__ = "0.1.0"

__all__ = [
    "CtvffPrediction", "QCovariance", "estimate_q_covariance", "predict_ctvff",
    "predict_lambda_inf", "predict_ss_mse", "predict_tracking_mse",
    "AlgorithmConfig", "ConfigError", "Event", "ScenarioConfig", "load_config",
    "CtvffState", "GvffState", "NumericalDivergenceError", "RlsState", "SgState",
    "count_extra_ops", "ctvff_update", "detect", "gvff_lambda", "gvff_update",
    "rake_filter", "rls_step", "sg_step",
    "MetricsTrace", "SweepTable", "predict_for_config", "run_monte_carlo",
    "run_trial", "sinr_of", "sweep",
    "PRESETS", "Preset", "get_preset",
    "AnalyticalEnv", "ChannelState", "SpreadingCode", "build_constraint_matrix",
    "build_isi_matrices", "compute_analytical_env", "gen_spreading_codes",
    "init_channel", "jakes_step", "synth_received",
    "__version__",
]
