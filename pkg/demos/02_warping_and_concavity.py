"""Warping-function machinery: slopes, concavity residuals, normalization.

sin is the equality case of the K=1 concavity condition; shifting it up
breaks the condition by exactly the shift.  The induced fiber bound
K_f = -min(K f^2 + slope^2) and the log-slope comparison bound are what
the precompactness harness certifies.
"""

import math

import numpy as np

from conelab import WarpingFunction, fk_concavity, normalize_and_bound, slopes
from conelab.warp import mollify_fk, preset

f = preset("sin", 0.0, math.pi, 201)
rep = fk_concavity(f, 1.0)
print(f"sin on (0, pi), K=1: residual max {rep.max_violation:.2e}, "
      f"concave={rep.is_concave}")
print(f"  K_f = {rep.Kf:.4f} attained at t = {rep.argmin_G:.4f} "
      f"(analytic value -1)")

shifted = WarpingFunction(f.ts, f.vals + 0.1)
rep2 = fk_concavity(shifted, 1.0)
print(f"sin + 0.1: residual max {rep2.max_violation:.4f}, "
      f"concave={rep2.is_concave}")

two_sin = WarpingFunction(f.ts, 2.0 * f.vals)
g, lam, ok = normalize_and_bound(two_sin, 1.0)
print(f"2 sin normalized: lambda={lam}, log-slope bound holds: {ok}")

tent = WarpingFunction(np.linspace(0, 2, 161),
                       1.0 - np.abs(np.linspace(0, 2, 161) - 1.0))
smooth = mollify_fk(tent, 0.0, 0.05)
print(f"tent mollified at eta=0.05: sup gap "
      f"{np.abs(smooth.vals - tent.vals).max():.4f}, "
      f"still concave: {fk_concavity(smooth, 0.0).is_concave}")
print(f"tent slope at the peak: {slopes(tent)[80]:.1f} "
      f"(local maximum convention)")
