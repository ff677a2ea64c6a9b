"""
Spreading codes and the cost of adapting lambda
===============================================

Two quick facts behind the receiver: the Gold family used for spreading,
and how much extra arithmetic each forgetting-factor rule needs per symbol
as the filter length grows.
"""
import numpy as np

from ctvff import count_extra_ops, gen_spreading_codes
from ctvff.signal_model import gold_family

###############################################################################
# Gold codes
# ----------
# Periodic cross-correlations of a length-31 family take only the three
# values -1, -9 and 7.

fam = 1 - 2 * gold_family(31).astype(int)
F = np.fft.fft(fam, axis=1)
xc = np.rint(np.fft.ifft(F[0] * np.conj(F[1:]), axis=1).real).astype(int)
print("length 31 cross-correlation values:", sorted(set(xc.ravel().tolist())))

codes = gen_spreading_codes(6, 15, seed=0)
print("first code, N = 15:", np.sign(codes[0].chips).astype(int))

###############################################################################
# Operation counts
# ----------------
# The constant-time rule costs the same for every filter length; the
# gradient rule grows with the square of it.

print(f"\n{'M':>4} {'ctvff':>10} {'gvff mult':>11} {'gvff add':>10}")
for M in (8, 17, 32, 64, 128):
    cm, ca = count_extra_ops("ctvff", M)
    gm, ga = count_extra_ops("gvff", M)
    print(f"{M:4d} {f'{cm}/{ca}':>10} {gm:11d} {ga:10d}")
