"""
Partial-label losses on a single example
========================================

One instance, candidate set {0, 2}, and the five training losses side by
side.  Each returns (value, gradient w.r.t. logits); the gradients show
the shared mechanic: push candidate logits up, non-candidates down, with
the losses differing in how they spread credit inside the set.
"""
import numpy as np

from cpl import (
    loss_cav,
    loss_cc,
    loss_lw,
    loss_rc,
    loss_soft_ce,
    loss_supervised_ce,
    make_soft_target,
    softmax_row,
)

np.set_printoptions(precision=4, suppress=True)
logits = np.array([1.2, 0.3, 0.8, -0.5])
s = np.array([1, 0, 1, 0])  # 0/1 membership over the 4 classes
probs = softmax_row(logits)
print("logits:        ", logits)
print("probabilities: ", probs)
print("candidate set: ", [int(k) for k in np.flatnonzero(s)])

# CC treats the whole set as one event: -log(sum of candidate probs).
# RC and LW weight candidates by the model's own (detached) confidence.
# CAV trains toward the currently best candidate only.  Soft-CE freezes
# a normalized target distribution over the set and applies plain CE.
value, grad = loss_cc(logits, s)
print(f"\nCC     value {value:.4f}  grad {grad}")
value, grad = loss_rc(logits, s, probs)
print(f"RC     value {value:.4f}  grad {grad}")
value, grad = loss_cav(logits, s)
print(f"CAV    value {value:.4f}  grad {grad}")
value, grad = loss_lw(logits, s, leverage=1.0)
print(f"LW     value {value:.4f}  grad {grad}")
target = make_soft_target(probs, s)
value, grad = loss_soft_ce(logits, target)
print(f"SoftCE value {value:.4f}  grad {grad}  (target {target.y})")

# Every gradient sums to zero (softmax shift invariance).  CC lifts the
# whole candidate set; CAV commits to the current best candidate and
# treats the other candidates like non-candidates.
print()
for name, fn in (("cc", loss_cc), ("cav", loss_cav)):
    _, g = fn(logits, s)
    lifted = [int(k) for k in np.flatnonzero(g < 0)]
    print(f"{name}: grad sum {g.sum():+.2e}, classes pushed up: {lifted}")

# A singleton candidate set is ordinary supervised cross-entropy.
singleton = np.array([0, 0, 1, 0])
ce_value, ce_grad = loss_supervised_ce(logits, 2)
for name, got in (
    ("cc", loss_cc(logits, singleton)),
    ("rc", loss_rc(logits, singleton, probs)),
    ("cav", loss_cav(logits, singleton)),
    ("softce", loss_soft_ce(logits, make_soft_target(probs, singleton))),
):
    print(f"|S|=1 {name}: {got[0]:.6f} vs supervised CE {ce_value:.6f}")
