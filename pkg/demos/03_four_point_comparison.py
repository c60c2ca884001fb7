"""4-point comparison against the constant-curvature 2D models.

The flat strip must pass at K=0 and the cos-warped cone over a short arc
at K=-1 (its warping satisfies the K=1 concavity equation, the equality
case of the curvature theorem).  Margins compare the cone's upper table
against an interval enclosure of the model comparison distance, so a
negative margin beyond tolerance is a genuine violation certificate.
A non-geometric separation assignment injected directly is flagged.
"""

import math

import numpy as np

from conelab import (FourPointConfig, GeneralizedCone, WarpingFunction,
                     circle_arc, config_margin, segment, tcbb_verify)

ts = np.linspace(0.0, 2.0, 81)
strip = GeneralizedCone(WarpingFunction(ts, np.ones(81)), segment(1.0, 41),
                        dist_steps=40, window=8, dist_refine=2)
rep = tcbb_verify(strip, K=0.0, samples=200, tol=0.02, seed=7)
print(f"flat strip, K=0: pass={rep['pass']}, "
      f"worst margin={rep['worst_margin']:.4f}, counts={rep['counts']}")

ts2 = np.linspace(-math.pi / 2 * 0.96, math.pi / 2 * 0.96, 81)
cos_cone = GeneralizedCone(WarpingFunction(ts2, np.cos(ts2)),
                           circle_arc(1.0, 0.8, 33), dist_steps=40,
                           window=8, dist_refine=2)
rep2 = tcbb_verify(cos_cone, K=-1.0, samples=200, tol=0.02, seed=11)
print(f"cos-warped arc cone, K=-1: pass={rep2['pass']}, "
      f"worst margin={rep2['worst_margin']:.4f}")

bad = FourPointConfig(
    tau_yx=1.0,
    tau_yz1=math.sqrt(6.25 - 0.01), tau_yz2=math.sqrt(16.0 - 0.0225),
    tau_xz1=math.sqrt(2.25 - 0.01), tau_xz2=math.sqrt(9.0 - 0.0225),
    tau_z1z2=0.3)
print(f"injected non-geometric assignment: margin = "
      f"{config_margin(bad, 0.0):.4f}  (flagged)")
