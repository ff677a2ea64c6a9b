"""
Closed-form steady state versus simulation
==========================================

For a static channel the CTVFF forgetting factor settles at a value that
depends only on its three smoothing constants and the minimum MSE of the
optimum linear receiver. The excess MSE then follows from the usual RLS
misadjustment formula. This demo computes both predictions, then runs the
receiver and compares.
"""
import sys

from dataclasses import replace

import numpy as np

from ctvff import get_preset, predict_for_config, run_monte_carlo
from ctvff.harness import steady_state_window
from ctvff.scenario import env_at, scenario_setup, trial_channel, trial_seeds

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 50
preset = get_preset("fig9")
cfg = dict(preset.variants)["static"]
cfg = replace(cfg, runs=runs)
alg = next(a for a in cfg.algorithms if a.kind == "ctvff")

###############################################################################
# The environment
# ---------------
# Exact covariance of the received vector and the optimum (MMSE) receiver
# for the desired user.

setup = scenario_setup(cfg)
H = trial_channel(cfg, trial_seeds(cfg.seed, 1)[0])
env = env_at(setup, H[0], H[1], H[2], cfg.total_symbols)
print(f"M = {env.M}, minimum MSE = {env.xi_min:.5f}")

###############################################################################
# Predictions
# -----------
# The unclamped limit may lie above the upper bound of the forgetting
# factor; the receiver cannot go there, so the prediction is clamped too.

pred = predict_for_config(cfg)[alg.label]
print(f"lambda_inf  {pred.lambda_inf:.6f} (unclamped {pred.lambda_inf_unclamped:.7f})")
print(f"steady MSE  {pred.ss_mse:.5f}")

###############################################################################
# Simulation
# ----------

trace = run_monte_carlo(cfg)
a = trace.index(alg.label)
win = steady_state_window(trace.total_symbols)
sim_mse = float(np.mean(trace.mse[a, win]))
print(f"simulated MSE {sim_mse:.5f} over the last {win.stop - win.start} symbols, "
      f"{runs} runs")
print(f"difference  {10 * np.log10(sim_mse / pred.ss_mse):+.2f} dB")
print(f"mean lambda {np.mean(trace.lam[a, win]):.6f}")
