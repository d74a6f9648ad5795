"""The intrinsic-reward family and the ascending dropout gate.

Run: python demos/03_rewards.py
"""

import numpy as np

from gridskills import (RewardSpec, WeightFn, apply_dropout, ascending_weight,
                        build_code_matrix, compute_batch_rewards, reward_ap_average,
                        reward_ap_min, reward_diayn, reward_tuned_vic)

K = 10
code = build_code_matrix(K)
rng = np.random.default_rng(1)

# A discriminator that mildly favors the right skill.
z = 4
y_hat = 0.4 * code.entries[z].astype(float) + rng.normal(size=code.n_pairs) * 0.05
probs = np.full(K, 0.06)
probs[z] = 1 - 0.06 * (K - 1)

print("reward scales for one moderately-classified state:")
print(f"  diayn (log-prob + baseline): {reward_diayn(probs, z, K):+.3f}")
print(f"  tuned vic beta=10 (probability): {reward_tuned_vic(np.log(probs), z, 10.0):+.3f}")
print(f"  ap average (probability): {reward_ap_average(code, y_hat, z):+.3f}")
print(f"  ap min (worst pair): {reward_ap_min(code, y_hat, z):+.3f}")

print("\nascending weights W(t) over a 40-step episode:")
for fn in WeightFn:
    row = [ascending_weight(t, 40, fn) for t in (1, 10, 20, 30, 40)]
    print(f"  {fn.value:>9}: " + "  ".join(f"{w:.4f}" for w in row))

# The dropout gate keeps the reward with probability W(t): early steps are
# mostly silenced, the final step always pays.
rng = np.random.default_rng(2)
print("\ndropout gate, quadratic weights, r=1.0, 10k draws per step:")
for t in (1, 10, 20, 30, 40):
    kept = np.mean([apply_dropout(1.0, t, 40, WeightFn.QUADRATIC, rng) for _ in range(10_000)])
    print(f"  t={t:>2}: empirical mean {kept:.4f} vs W(t) {ascending_weight(t, 40, WeightFn.QUADRATIC):.4f}")

# Batch dispatch: the apart kind = ap_min + ascending dropout.
spec = RewardSpec(kind="apart")
t = np.arange(1, 41)
logits = np.tile(2.0 * code.entries[z], (40, 1)).astype(float)
r = compute_batch_rewards(spec, code, logits, np.full(40, z), t, 40, np.random.default_rng(3))
print(f"\napart rewards along one confident episode (nonzero at {np.count_nonzero(r)}/40 steps, "
      f"final step {r[-1]:.3f})")
