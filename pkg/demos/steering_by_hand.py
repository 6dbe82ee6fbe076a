"""Expert/anti-expert steering on a two-token vocabulary, step by step.

Run with ``python3 demos/steering_by_hand.py``.
"""

import numpy as np

from ctrlprompt.decoding import SteeringParams, steered_distribution

base = np.zeros(2)
expert = np.array([1.0, 0.0])  # prefers token 0
anti = np.array([0.0, 1.0])  # prefers token 1

for alpha in (0.0, 0.5, 1.2, 3.0):
    sp = SteeringParams(alpha=alpha, filter_p=1.0, p=1.0, temperature=1.0)
    probs = steered_distribution(base, expert, anti, sp)
    print(f"alpha={alpha:<4} P(token 0)={probs[0]:.4f}")

# the base pre-filter removes tokens the base model finds implausible,
# however strongly the experts disagree
base = np.log(np.array([0.7, 0.25, 0.05]))
push = np.array([0.0, 0.0, 10.0])
for filter_p in (1.0, 0.9):
    sp = SteeringParams(alpha=1.0, filter_p=filter_p, p=1.0, temperature=1.0)
    print(f"filter_p={filter_p}: {np.round(steered_distribution(base, push, np.zeros(3), sp), 4)}")
