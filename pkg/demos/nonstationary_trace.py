"""
Tracking a sudden change in the user population
===============================================

Six users are active from the start; four more switch on at symbol 1000.
Each receiver is trained on 250 known symbols and then runs
decision-directed. We watch the forgetting factor of the two variable
schemes and the SINR of every receiver around the event.

Run with ``python demos/nonstationary_trace.py [runs]``. Twenty runs take a
few seconds; the full 200-run experiment is
``ctvff-sim run --preset fig4 --out fig4.csv``.
"""
import sys

import numpy as np

from ctvff import get_preset, run_monte_carlo

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 20
preset = get_preset("fig4").with_overrides(runs=runs, seed=7)
cfg = preset.config
trace = run_monte_carlo(cfg)

###############################################################################
# Forgetting factor around the event
# ----------------------------------
# Symbols are 1-based in the scenario, so the entering users first transmit
# at array index 1000.

ctv, gv = (trace.index(a.label) for a in cfg.algorithms[:2])
print(f"{'symbol':>7} {'ctvff lambda':>13} {'gvff lambda':>12}")
for i in (900, 990, 1000, 1005, 1020, 1050, 1100, 1300, 1600, 1999):
    print(f"{i + 1:7d} {trace.lam[ctv, i]:13.6f} {trace.lam[gv, i]:12.6f}")

###############################################################################
# SINR before and after
# ---------------------
# Averages over 100-symbol windows, linear mean then dB.


def window_db(a, lo, hi):
    return 10 * np.log10(np.mean(10 ** (trace.sinr_db[a, lo:hi] / 10)))


windows = [(800, 900), (900, 1000), (1000, 1100), (1100, 1200), (1500, 1600), (1900, 2000)]
print()
print(f"{'window':>11}" + "".join(f"{name:>10}" for name in trace.algorithms))
for lo, hi in windows:
    row = "".join(f"{window_db(a, lo, hi):10.2f}" for a in range(len(trace.algorithms)))
    print(f"{lo + 1:5d}-{hi:<5d}{row}")

###############################################################################
# Steady state and cost
# ---------------------
# BER is counted over the decision-directed symbols only. The op columns are
# the extra arithmetic spent on adapting the forgetting factor, accumulated
# over the whole run.

print()
for label, s in trace.steady_state().items():
    a = trace.index(label)
    print(f"{label:6s} SINR {s['sinr_db']:6.2f} dB  BER {s['ber']:.4f}  "
          f"cumulative ops {int(trace.mult_ops[a, -1])} mult / {int(trace.add_ops[a, -1])} add  "
          f"diverged {int(trace.diverged_runs[a])}")
