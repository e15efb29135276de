"""
Planted scenarios from a Markov simulator
=========================================

A three-state transition matrix generates verdicts; its stationary
distribution predicts the long-run q-score.  Scenarios chain several models
into one history with known group labels.
"""

# %%
from intermittence import (
    TransitionModel, bundled_scenarios, classify_all, expected_q, generate_dataset,
    generate_sequence, stationary_distribution,
)
from intermittence.verdicts import full_sequence_scores

m = TransitionModel.two_state(stay_pass=0.9, stay_fail=0.5)
print("stationary:", stationary_distribution(m).round(4))
print("expected q:", expected_q(m))            # 1/6

# %%
# The empirical q of a long run converges to the expectation.  The same seed
# always gives the same sequence.
for steps in (100, 10_000, 100_000):
    seq = generate_sequence(m, steps, seed=42)
    print(f"{steps:>7} steps  q = {float(full_sequence_scores(seq).q):.4f}")

# %%
# The bundled suite: every scenario carries the groups it should land in.
suite = bundled_scenarios()
synth = generate_dataset(suite, seed=7)
got = {a.key: set(a.groups) for a in classify_all(synth.histories.values())}
for key, truth in synth.ground_truth.items():
    found = got.get(key, set())
    mark = "ok " if found == truth else "BAD"
    print(f"{mark} {key.test_script:<22} expected {sorted(truth)}  got {sorted(found)}")
