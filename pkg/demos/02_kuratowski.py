"""Kuratowski functionals give an isometric sup-norm frame on any finite space."""
import numpy as np

from metric_frames import frame_bounds, from_points, kuratowski_frame
from metric_frames.frames import FrameSystem, synthesis_norm_check
from metric_frames.seq_norms import SequenceNormSpec

rng = np.random.default_rng(0)
M = from_points(rng.normal(size=(12, 2)), base_index=0)
C = kuratowski_frame(M)
fb = frame_bounds(C.system)
print(f"sup norm: a={fb.a}, b={fb.b}")
for name, chk in C.checks.items():
    print(f"  {name}: ok={chk['ok']}")

# in l^2 the same maps are no longer isometric: several coordinates move at once
F2 = FrameSystem(C.system.family, SequenceNormSpec(2.0))
fb2 = frame_bounds(F2)
print(f"l^2: a={fb2.a:.3f}, b={fb2.b:.3f}, worst pair {fb2.witness_high}")
rep = synthesis_norm_check(F2, fb2.b, trials=200, seed=1)
print(f"synthesis operator against b={fb2.b:.3f}: {rep.verdict} (max {rep.max_found:.3f})")
