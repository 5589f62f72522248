"""
End to end on the bundled SELEX reads
=====================================

Runs the pipeline into ``demo_run/`` and prints the pieces worth looking
at: the anomaly labels, the attribution extremes, the clusters flagged by
their delta score and the per-cluster picks.
"""

# %%
import json
from pathlib import Path

from boltzfold.cli import main
from boltzfold.selex import parse_profiles

work = Path("demo_run")
main(["pipeline", "--workdir", str(work), "--seed", "0"])

# %%
profiles = parse_profiles((work / "profiles.tsv").read_text())
for p in profiles:
    if p.label != "NONE":
        print(p.id, p.label, f"score={p.final_cpm_score:.3f}", f"pressure={p.total_pressure:+.2f}")

# %%
attr = json.loads((work / "attribution.json").read_text())
print("most negative:", [f["feature"] for f in attr["top_neg"]])
print("most positive:", [f["feature"] for f in attr["top_pos"]])

# %%
report = json.loads((work / "anomalies.json").read_text())
for c, info in sorted(report.items(), key=lambda kv: -kv[1]["delta"]):
    flag = "*" if info["anomalous"] else " "
    print(f"{flag} cluster {c:>2}  delta={info['delta']:+.3f}  size={len(info['members'])}")

print(json.loads((work / "recommendations.json").read_text()))
print("figures:", sorted(p.name for p in (work / "figures").iterdir()))
