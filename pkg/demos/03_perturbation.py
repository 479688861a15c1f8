"""Predict the bounds of a perturbed family, then check them by exact scan."""
import numpy as np

from metric_frames import (FrameSystem, PerturbationParams, frame_bounds, from_points,
                           kuratowski_frame, perturb_and_certify, quadratic_closeness)
from metric_frames.perturbation import minimal_gamma
from metric_frames.seq_norms import SequenceNormSpec

rng = np.random.default_rng(3)
M = from_points(rng.normal(size=(10, 2)), base_index=0)
F = FrameSystem(kuratowski_frame(M).system.family, SequenceNormSpec(2.0))
fb = frame_bounds(F)
print(f"original bounds ({fb.a:.4f}, {fb.b:.4f})")

H = 0.03 * rng.normal(size=F.family.values.shape)
H[:, M.base_index] = 0.0
G = F.with_values(1.05 * F.family.values + H)

for alpha in (0.0, 0.05, 0.1):
    gamma = minimal_gamma(F, G, alpha, 0.0)
    rep = perturb_and_certify(F, G, PerturbationParams(alpha, 0.0, gamma))
    lo, hi = rep.predicted
    print(f"alpha={alpha:.2f} gamma={gamma:.4f}: predicted [{lo:.4f}, {hi:.4f}] "
          f"actual [{rep.actual.a:.4f}, {rep.actual.b:.4f}] passed={rep.passed}")

c = quadratic_closeness(F, G)
print(f"closeness r={c.r:.4f}: prediction {c.predicted}")

# without slack the prefix hypothesis fails and the prediction is refused
rep = perturb_and_certify(F, G, PerturbationParams())
print(f"zero parameters: applicable={rep.applicable}, witness={rep.hypothesis.witness}")
