"""TSV / JSON forms of topic models, clusterings, coordinates and reports."""

from __future__ import annotations

import io
import json

import numpy as np

from ..core import ParseError
from .attribution import AttributionModel, ClusterAnomalyReport
from .clustering import Clustering
from .topics import TopicModel


def _fmt(v) -> str:
    return repr(float(v))


def format_table(header: list[str], ids: list[str], values: np.ndarray, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    buf.write("\t".join(header) + "\n")
    for rid, row in zip(ids, np.atleast_2d(values)):
        buf.write(rid + "\t" + "\t".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def parse_table(text: str) -> tuple[list[str], list[str], np.ndarray]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty table", 1)
    header = lines[0].split("\t")
    ids, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(fields)}", lineno)
        ids.append(fields[0])
        try:
            rows.append([float(x) for x in fields[1:]])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    return header, ids, np.array(rows, dtype=float).reshape(len(ids), len(header) - 1)


def format_topics(model: TopicModel, ids: list[str], columns: list[str]) -> tuple[str, str]:
    """(document-topic TSV, topic-feature TSV)."""
    names = [f"topic{t + 1}" for t in range(model.topics)]
    m = format_table(["id"] + names, ids, model.M, f"final_objective={model.final_objective!r}")
    h = format_table(["topic"] + list(columns), names, model.H)
    return m, h


def format_clustering(cl: Clustering, ids: list[str]) -> str:
    buf = io.StringIO()
    buf.write(f"# k={cl.k} silhouette={cl.silhouette!r}\n")
    buf.write("id\tcluster\n")
    for rid, c in zip(ids, cl.assignments):
        buf.write(f"{rid}\t{int(c)}\n")
    return buf.getvalue()


def parse_clustering(text: str) -> tuple[list[str], Clustering]:
    silhouette = 0.0
    ids, labels = [], []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if tok.startswith("silhouette="):
                    silhouette = float(tok.split("=", 1)[1])
            continue
        fields = line.split("\t")
        if not header_seen:
            if fields[:2] != ["id", "cluster"]:
                raise ParseError("missing clustering header", lineno)
            header_seen = True
            continue
        if len(fields) != 2:
            raise ParseError(f"expected 2 fields, got {len(fields)}", lineno)
        try:
            labels.append(int(fields[1]))
        except ValueError:
            raise ParseError(f"bad cluster id {fields[1]!r}", lineno) from None
        ids.append(fields[0])
    assignments = np.array(labels, dtype=int)
    return ids, Clustering(assignments, int(assignments.max()) if len(assignments) else 0, silhouette)


def format_coordinates(Y: np.ndarray, ids: list[str]) -> str:
    return format_table(["id", "x", "y"], ids, Y)


def attribution_json(model: AttributionModel) -> str:
    def named(cols):
        return [{"feature": model.columns[c], "coefficient": float(model.w[c])} for c in cols]

    return json.dumps({
        "lambda": model.lam,
        "coefficients": {name: float(v) for name, v in zip(model.columns, model.w)},
        "negative_set": [model.columns[c] for c in model.negative_set],
        "positive_set": [model.columns[c] for c in model.positive_set],
        "top_neg": named(model.top_neg),
        "top_pos": named(model.top_pos),
    }, indent=1) + "\n"


def report_json(report: ClusterAnomalyReport, ids: list[str]) -> str:
    out = {}
    for c in sorted(report.delta):
        entry = {
            "delta": report.delta[c],
            "members": [ids[r] for r in report.members[c]],
            "anomalous": c in report.anomalous,
        }
        if c in report.recommended:
            entry["recommended"] = list(report.recommended[c])
        out[str(c)] = entry
    return json.dumps(out, indent=1) + "\n"
