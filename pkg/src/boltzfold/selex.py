"""SELEX read tables: parsing, mutation filtering, CPM scores, pressure, labels."""

from __future__ import annotations

import io
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path

from .core import ParseError, Sequence, ValidationError

NONE, HC_LP, LC_HP = "NONE", "HC_LP", "LC_HP"
LABELS = (NONE, HC_LP, LC_HP)


@dataclass(frozen=True)
class SelexRecord:
    library: str
    round: int
    sequence: str
    count: int

    def __post_init__(self):
        if self.count < 0:
            raise ValidationError(f"negative count for {self.sequence}")


@dataclass
class LibraryStats:
    cpm_per_round: dict[int, float]
    pressure: float


@dataclass
class AptamerProfile:
    id: str
    sequence: str
    libraries: dict[str, LibraryStats] = field(default_factory=dict)
    final_cpm_score: float = 0.0
    total_pressure: float = 0.0
    label: str = NONE

    def __post_init__(self):
        if not 0.0 <= self.final_cpm_score <= 1.0:
            raise ValidationError(f"final_cpm_score {self.final_cpm_score} outside [0, 1]")
        if self.label not in LABELS:
            raise ValidationError(f"unknown label {self.label!r}")


# --- parsing ---------------------------------------------------------------


def parse_reads_text(text: str) -> list[SelexRecord]:
    """Parse ``library<TAB>round<TAB>sequence<TAB>count`` lines; duplicate keys are summed."""
    totals: dict[tuple[str, int, str], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(fields)}", lineno)
        library, rnd, seq, count = (f.strip() for f in fields)
        if not library:
            raise ParseError("empty library name", lineno)
        try:
            rnd_i = int(rnd)
        except ValueError:
            raise ParseError(f"bad round {rnd!r}", lineno) from None
        try:
            count_i = int(count)
        except ValueError:
            raise ParseError(f"bad count {count!r}", lineno) from None
        if count_i < 0:
            raise ParseError(f"negative count {count_i}", lineno)
        try:
            bases = Sequence(seq).bases
        except ValidationError as exc:
            raise ParseError(str(exc), lineno) from None
        key = (library, rnd_i, bases)
        totals[key] = totals.get(key, 0) + count_i
    return [SelexRecord(lib, rnd, seq, n) for (lib, rnd, seq), n in sorted(totals.items())]


def parse_reads(path: str | os.PathLike) -> list[SelexRecord]:
    return parse_reads_text(Path(path).read_text())


def format_reads(records) -> str:
    return "".join(f"{r.library}\t{r.round}\t{r.sequence}\t{r.count}\n" for r in records)


# --- helpers ---------------------------------------------------------------


def _rounds_by_library(records) -> dict[str, list[int]]:
    rounds: dict[str, set[int]] = defaultdict(set)
    for r in records:
        rounds[r.library].add(r.round)
    return {lib: sorted(rs) for lib, rs in sorted(rounds.items())}


def _counts(records) -> dict[tuple[str, int], dict[str, int]]:
    table: dict[tuple[str, int], dict[str, int]] = defaultdict(dict)
    for r in records:
        pool = table[(r.library, r.round)]
        pool[r.sequence] = pool.get(r.sequence, 0) + r.count
    return table


def percentile(values, q: float) -> float:
    """Nearest-rank percentile: the ``ceil(q/100 * n)``-th smallest value."""
    data = sorted(values)
    if not data:
        raise ValidationError("percentile of an empty list")
    if not 0 <= q <= 100:
        raise ValidationError("percentile must lie in [0, 100]")
    rank = max(1, math.ceil(q / 100 * len(data)))
    return data[rank - 1]


# --- operations ---------------------------------------------------------------


def filter_mutations(records) -> list[SelexRecord]:
    """Drop, per library, every sequence missing from that library's earliest round."""
    records = list(records)
    rounds = _rounds_by_library(records)
    for lib, rs in rounds.items():
        if len(rs) < 2:
            raise ValidationError(f"library {lib} has a single round; mutation filtering needs two")
    founders = {lib: {r.sequence for r in records if r.library == lib and r.round == rs[0] and r.count > 0}
                for lib, rs in rounds.items()}
    return [r for r in records if r.sequence in founders[r.library]]


def normalize_counts(records) -> dict[str, float]:
    """Decile-placed CPM score per sequence (see module notes on binning)."""
    records = list(records)
    if not records:
        raise ValidationError("no records to normalize")
    pools = _counts(records)
    totals = {key: sum(pool.values()) for key, pool in pools.items()}
    rounds = _rounds_by_library(records)
    cpm: dict[str, float] = {}
    for lib, rs in rounds.items():
        # last round in which each sequence appears, per library
        last: dict[str, int] = {}
        for rnd in rs:
            for seq, n in pools[(lib, rnd)].items():
                if n > 0:
                    last[seq] = rnd
        for seq, rnd in last.items():
            value = 1e6 * pools[(lib, rnd)][seq] / totals[(lib, rnd)]
            cpm[seq] = max(cpm.get(seq, 0.0), value)
    # sequences whose counts are all zero still receive a score
    for r in records:
        cpm.setdefault(r.sequence, 0.0)
    return decile_scores(cpm)


def decile_scores(values: dict[str, float]) -> dict[str, float]:
    """Rank ``values`` ascending (ties by key), split ranks into 10 bins, place at bin midpoints."""
    order = sorted(values, key=lambda s: (values[s], s))
    n = len(order)
    bins: list[list[str]] = [[] for _ in range(10)]
    for t, seq in enumerate(order):
        bins[math.ceil(10 * (t + 1) / n) - 1].append(seq)
    scores = {}
    for j, members in enumerate(bins):
        m = len(members)
        for u, seq in enumerate(members):
            scores[seq] = j / 10 + (u + 0.5) / (10 * m)
    return scores


def library_pressures(records) -> dict[str, dict[str, float]]:
    """Per library: sequence -> (C_last - C_first) / C_first over the library's round span."""
    records = list(records)
    pools = _counts(records)
    out: dict[str, dict[str, float]] = {}
    for lib, rs in _rounds_by_library(records).items():
        first, last = pools[(lib, rs[0])], pools[(lib, rs[-1])]
        members = set()
        for rnd in rs:
            members.update(s for s, n in pools[(lib, rnd)].items())
        rho = {}
        for seq in sorted(members):
            c_x = first.get(seq, 0)
            if c_x <= 0:
                raise RuntimeError(f"{seq} has no count in the first round of {lib}; filter_mutations first")
            rho[seq] = (last.get(seq, 0) - c_x) / c_x
        out[lib] = rho
    return out


def selective_pressure(records) -> dict[str, float]:
    total: dict[str, float] = {}
    for rho in library_pressures(records).values():
        for seq, value in rho.items():
            total[seq] = total.get(seq, 0.0) + value
    return total


def label_anomalies(profiles: list[AptamerProfile], count_percentile: float = 90,
                    pressure_percentile: float = 10) -> list[AptamerProfile]:
    """HC_LP: score >= high cut and pressure <= low cut; LC_HP mirrors both tails.

    A tail pair that collapses to one value (low cut == high cut) carries no
    information, so nothing is labelled on that axis.
    """
    if len(profiles) < 10:
        raise ValidationError(f"need at least 10 profiles to label anomalies, got {len(profiles)}")
    scores = [p.final_cpm_score for p in profiles]
    pressures = [p.total_pressure for p in profiles]
    c_hi, c_lo = percentile(scores, count_percentile), percentile(scores, 100 - count_percentile)
    r_lo, r_hi = percentile(pressures, pressure_percentile), percentile(pressures, 100 - pressure_percentile)
    informative = c_lo < c_hi and r_lo < r_hi
    out = []
    for p in profiles:
        label = NONE
        if informative:
            if p.final_cpm_score >= c_hi and p.total_pressure <= r_lo:
                label = HC_LP
            elif p.final_cpm_score <= c_lo and p.total_pressure >= r_hi:
                label = LC_HP
        out.append(replace(p, label=label))
    return out


def build_profiles(records, count_percentile: float = 90, pressure_percentile: float = 10,
                   filtered: bool = False) -> list[AptamerProfile]:
    """Full ingest chain: filter, CPM score, pressure, labels. Ids follow sequence order."""
    records = list(records) if filtered else filter_mutations(records)
    if not records:
        raise ValidationError("no sequences survive mutation filtering")
    scores = normalize_counts(records)
    per_lib = library_pressures(records)
    pools = _counts(records)
    totals = {key: sum(pool.values()) for key, pool in pools.items()}
    rounds = _rounds_by_library(records)
    seqs = sorted(scores)
    width = max(4, len(str(len(seqs))))
    profiles = []
    for idx, seq in enumerate(seqs, start=1):
        libs = {}
        for lib, rs in rounds.items():
            if seq not in per_lib[lib]:
                continue
            cpm = {rnd: (1e6 * pools[(lib, rnd)].get(seq, 0) / totals[(lib, rnd)] if totals[(lib, rnd)] else 0.0)
                   for rnd in rs}
            libs[lib] = LibraryStats(cpm, per_lib[lib][seq])
        profiles.append(AptamerProfile(f"apt{idx:0{width}d}", seq, libs, scores[seq],
                                       sum(s.pressure for s in libs.values())))
    if len(profiles) >= 10:
        profiles = label_anomalies(profiles, count_percentile, pressure_percentile)
    return profiles


# --- profile TSV ---------------------------------------------------------------

PROFILE_HEADER = ("id", "sequence", "final_cpm_score", "total_pressure", "label")


def format_profiles(profiles) -> str:
    buf = io.StringIO()
    buf.write("\t".join(PROFILE_HEADER) + "\n")
    for p in profiles:
        buf.write(f"{p.id}\t{p.sequence}\t{p.final_cpm_score!r}\t{p.total_pressure!r}\t{p.label}\n")
    return buf.getvalue()


def parse_profiles(text: str) -> list[AptamerProfile]:
    lines = text.splitlines()
    if not lines or tuple(lines[0].split("\t")) != PROFILE_HEADER:
        raise ParseError("missing profile header", 1)
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise ParseError(f"expected 5 fields, got {len(fields)}", lineno)
        try:
            out.append(AptamerProfile(fields[0], Sequence(fields[1]).bases, {}, float(fields[2]),
                                      float(fields[3]), fields[4]))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    return out
