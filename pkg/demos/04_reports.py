"""
Timelines, heatmaps and a root-cause ledger
===========================================

Reports are plain SVG written as text, each with a JSONL sidecar holding the
exact plotted numbers.  Output goes to ``$INTERMITTENCE_OUTPUT_DIR`` or
``demo_out/`` next to this script.
"""

# %%
import os
from pathlib import Path

from intermittence import bundled_scenarios, classify_all, generate_dataset, windowed_scores
from intermittence.report import ROOT_CAUSE_TAXONOMY, Annotation, heatmap_report, ledger_report, timeline_report
from intermittence.store import Dataset

out = Path(os.environ.get("INTERMITTENCE_OUTPUT_DIR") or Path(__file__).with_name("demo_out"))
out.mkdir(exist_ok=True)

synth = generate_dataset(bundled_scenarios(), seed=1)
dataset = Dataset.from_histories(synth.histories.values())

# %%
# A timeline: one marker per execution (shape and colour per verdict), with
# dashed q and dotted p curves for windows 6 and 13.
key = next(k for k in dataset.histories if k.test_script == "burst-then-outage")
h = dataset.histories[key]
g = timeline_report(h, [windowed_scores(h, 6), windowed_scores(h, 13)])
g.write(out / "timeline.svg", out / "timeline.jsonl")
print(g.sidecar.splitlines()[-1])

# %%
# A heatmap: one row per test, one column per night; blank hatched cells
# mark nights a test did not run.
heatmap_report(dataset).write(out / "heatmap.svg", out / "heatmap.jsonl")

# %%
# A ledger: annotate grouped tests with a root cause and a fix id.  Tests
# sharing a fix count once in the distinct-fix column.
print([" / ".join(p) for p in ROOT_CAUSE_TAXONOMY.paths()][:5])
assignments = classify_all(dataset)
notes = []
for i, a in enumerate(assignments):
    category = "HW Allocation / link breaker" if i % 2 else "TC Assumptions / timing"
    notes.append(Annotation(a.key, category, fix_id=f"fix-{i % 3}"))
ledger = ledger_report(assignments, notes)
print(ledger.render_text())
(out / "ledger.md").write_text(ledger.render_markdown())
