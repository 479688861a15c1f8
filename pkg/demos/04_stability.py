"""Rebuild a decoder for a perturbed linear frame by Neumann iteration."""
import numpy as np

from metric_frames import stability_reconstruct
from metric_frames.perturbation import smooth_perturbation

A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
Ap = np.linalg.pinv(A)
axis = np.linspace(-1, 1, 9)
X = np.stack(np.meshgrid(axis, axis, indexing="ij"), -1).reshape(-1, 2)
X = np.vstack([[0.0, 0.0], X[np.any(X != 0, axis=1)]])

for eps in (0.01, 0.05, 0.2):
    h = smooth_perturbation(3, 2, eps, seed=0)
    rep = stability_reconstruct(X, lambda x: A @ x, lambda c: Ap @ c, lambda x: A @ x + h(x))
    print(f"eps={eps:.2f}  q={rep.q:.4f}  iterations<={max(rep.iterations)}  "
          f"worst step ratio={rep.worst_step_ratio:.4f}  "
          f"max |T(theta_g x) - x|={rep.max_reconstruction_error:.1e}")
