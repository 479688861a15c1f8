"""Norms in the Lipschitz-free space by linear programming."""
import numpy as np

from metric_frames import embed, free_norm, free_norm_oracle, from_points, linearize

M = from_points([[0.0], [1.0], [2.0], [4.0]], base_index=0)
for m in (embed(M, 1) - embed(M, 3), embed(M, 2) + embed(M, 1) - 2 * embed(M, 3)):
    cert = free_norm(M, m)
    print(f"m={m.coefficients.tolist()}: ||m||={cert.value:.6f} "
          f"(oracle {free_norm_oracle(M, m):.6f}), optimal f={np.round(cert.optimal_f, 6)}")

# T_f(m) = sum m_i f(i) has operator norm Lip(f), attained on a two-point molecule
f = np.array([0.0, 0.5, -1.0, 2.0])
T = linearize(f, M)
value, pair = T.two_point_norm()
print(f"||T_f|| = {value} attained at {pair}")
