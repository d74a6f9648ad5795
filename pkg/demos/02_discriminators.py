"""One-vs-all vs all-pairs classification on skill labels.

Shows the code matrix, the two loss surfaces, and how the all-pairs outputs
fold back into class scores.

Run: python demos/02_discriminators.py
"""

import numpy as np

from gridskills import (DiscOutput, ap_class_scores, ap_loss_and_grad, ap_targets,
                        build_code_matrix, ova_loss_and_grad, predict_class)

K = 5
code = build_code_matrix(K)
print(f"code matrix for K={K} (rows = classes, columns = pairs "
      f"{sorted(code.pair_index, key=code.pair_index.get)}):")
print(code.entries)

z = 2
print(f"\npair targets for class {z}: {ap_targets(code, z).astype(int)}")

# A confident, correct AP output: strong tanh outputs matching the target row.
logits = 2.0 * ap_targets(code, z)
out = DiscOutput("ap", logits)
loss, grad = ap_loss_and_grad(out, z, code, mask_dont_cares=True)
print(f"\nconfident correct AP output: loss {loss:.4f}")
print(f"class scores {np.round(ap_class_scores(code, out.activated), 3)}"
      f" -> predicted class {predict_class(out, code)}")

# The same situation through a one-vs-all head.
ova_logits = np.zeros(K)
ova_logits[z] = 2.0
out_ova = DiscOutput("ova", ova_logits, beta=1.0)
loss_ova, _ = ova_loss_and_grad(out_ova, z)
print(f"\nOvA with the same margin: loss {loss_ova:.4f}, "
      f"p = {np.round(out_ova.activated, 3)}")

# Masking don't-cares: the loss ignores pair columns irrelevant to z.
rng = np.random.default_rng(0)
noisy = logits.copy()
noisy[code.entries[z] == 0] += rng.normal(size=(code.entries[z] == 0).sum()) * 10
loss_noisy, _ = ap_loss_and_grad(DiscOutput("ap", noisy), z, code, mask_dont_cares=True)
print(f"\nmasked loss after scrambling the don't-care columns: {loss_noisy:.4f} "
      f"(unchanged: {abs(loss_noisy - loss) < 1e-12})")
