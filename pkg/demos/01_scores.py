"""
Scoring a verdict history
=========================

Count verdict transitions, turn them into q- and p-scores, then slide a
window along a longer history.
"""

# %%
# Eight nightly verdicts of one test: F P P F F P F F.  Transitions are
# counted between consecutive executions, so eight verdicts give seven.
import numpy as np

from intermittence import TestCaseKey, VerdictHistory, count_transitions, p_score, q_score, windowed_scores
from intermittence.verdicts import parse_letters

seq = parse_letters("FPPFFPFF")
n = count_transitions(seq)
print(n.n)              # rows: from pass/fail/invalid, columns: to

# %%
# q is the share of transitions that change the verdict.  It stays an exact
# fraction until you ask for a float.
q = q_score(n)
p = p_score(seq)
print(f"q = {q} ~ {float(q):.2f}, p = {p} = {float(p)}")

# %%
# A longer history: steady passes, a short burst of alternation, steady
# passes again.  The window of 6 sees the burst as q = 1 for a few nights.
h = VerdictHistory.from_verdicts(TestCaseKey("ts01", "demo", "default"),
                                 "P" * 10 + "FPFPF" + "P" * 15)
s6 = windowed_scores(h, 6)
s13 = windowed_scores(h, 13)
for end, q6, p6 in s6.points():
    if q6 > 0:
        print(f"{h.nights[end]}  q6={q6:.2f}  p6={p6:.2f}")

# %%
# The larger window smooths the same burst into a lower, longer bump.
print("max q6 =", s6.q.max(), " max q13 =", np.round(s13.q.max(), 3))
