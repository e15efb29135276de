"""
Grouping tests and summarizing a population
============================================

Group A: some window was strongly intermittent (high q) and the test now
passes.  Group B: some window mostly failed (low p) and the test now passes,
without being in group A for the same window size.
"""

# %%
from intermittence import (
    TestCaseKey, VerdictHistory, classify_all, classify_one, group_overlap, population_summary, A6, B6,
)
from intermittence.classify import classifiable_counts
from intermittence.report import summary_report


def hist(name, letters):
    return VerdictHistory.from_verdicts(TestCaseKey("ts01", name, "default"), letters)


histories = [
    hist("flipper", "PF" * 6 + "P" * 30),       # alternates, then settles
    hist("outage", "F" * 10 + "P" * 30),        # fails for a while, then settles
    hist("steady", "P" * 40),
    hist("broken", "P" * 20 + "F" * 20),        # still failing: no group
    hist("new", "PFP"),                          # too short for any window
]

# %%
# One test against one spec returns the reason and the first triggering
# window.  B specs need their same-window A spec to apply the exclusion.
m = classify_one(histories[1], B6, partners=[A6])
print(bool(m), m.reason, m.evidence)
print(classify_one(histories[4], A6).reason)

# %%
# All four default groups at once.  Tests in no group are left out.
assignments = classify_all(histories)
for a in assignments:
    print(a.key, a.groups)

# %%
# Population statistics over tests with at least two executions, and the
# overlap matrix between groups.
labels = ["A6", "A13", "B6", "B13"]
overlap = group_overlap(assignments, labels)
sizes = {label: int(overlap.counts[i, i]) for i, label in enumerate(labels)}
summary = population_summary(histories)
print(summary_report(summary, sizes, classifiable_counts(histories), overlap).text)
