"""Sparse motif fingerprints and their ensemble expectations.

Three feature families share one machinery: bag-of-faces keyed by
``(type, energy)``, bag-of-neighbourhoods keyed by rooted-ball isomorphism
class, and plain k-mer counts. Expected fingerprints weight per-structure
counts by ensemble probability.
"""

from __future__ import annotations

import io
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable

import numpy as np

from .core import SecondaryStructure, ValidationError, as_sequence
from .energy import TOYPARAMS, EnergyParameters
from .structure_graph import StructureGraph, build_graph, extract_faces, motzkin_path, rooted_neighborhood_key

log = logging.getLogger(__name__)

FACE, NEIGHBORHOOD, KMER = "FACE", "NEIGHBORHOOD", "KMER"
SEGMENT_PREFIX = {FACE: "FACE", NEIGHBORHOOD: "NBH", KMER: "KMER"}
DEFAULT_RADIUS = 4
DEFAULT_K = 4

# run diagnostics: features seen at inference time that the dictionary lacks
diagnostics: Counter = Counter()


@dataclass(frozen=True)
class FeatureDictionary:
    kind: str
    entries: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in SEGMENT_PREFIX:
            raise ValidationError(f"unknown dictionary kind {self.kind!r}")
        entries = tuple(self.entries)
        if len(set(entries)) != len(entries):
            raise ValidationError("dictionary keys must be unique")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "index", {k: c for c, k in enumerate(entries)})

    def __len__(self) -> int:
        return len(self.entries)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "entries": list(self.entries)})

    @classmethod
    def from_json(cls, text: str) -> "FeatureDictionary":
        data = json.loads(text)
        return cls(data["kind"], tuple(data["entries"]))


@dataclass
class Fingerprint:
    dictionary: FeatureDictionary
    values: dict[int, float]
    dropped: int = 0

    def __post_init__(self):
        d = len(self.dictionary)
        for col, v in self.values.items():
            if not 0 <= col < d:
                raise ValidationError(f"column {col} outside dictionary of size {d}")
            if v < 0:
                raise ValidationError("fingerprint values must be nonnegative")

    def to_dense(self) -> np.ndarray:
        out = np.zeros(len(self.dictionary))
        for col, v in self.values.items():
            out[col] = v
        return out

    def as_dict(self) -> dict[str, float]:
        return {self.dictionary.entries[c]: v for c, v in sorted(self.values.items())}

    def total(self) -> float:
        return float(sum(self.values.values()))

    def to_json(self, id: str) -> str:
        return json.dumps({"id": id, "segment": SEGMENT_PREFIX[self.dictionary.kind], "values": self.as_dict()})


def _from_counts(counts: Counter, dictionary: FeatureDictionary) -> Fingerprint:
    values: dict[int, float] = {}
    dropped = 0
    for key, n in counts.items():
        col = dictionary.index.get(key)
        if col is None:
            dropped += n
        else:
            values[col] = values.get(col, 0.0) + float(n)
    if dropped:
        diagnostics["dropped_features"] += dropped
    return Fingerprint(dictionary, values, dropped)


# --- raw key counts ---------------------------------------------------------------


def face_counts(graph: StructureGraph, params: EnergyParameters = TOYPARAMS) -> Counter:
    return Counter(f.bof_key for f in extract_faces(graph, params))


def neighborhood_counts(graph: StructureGraph, radius: int = DEFAULT_RADIUS) -> Counter:
    return Counter(rooted_neighborhood_key(graph, c, radius) for c in range(1, graph.n_nodes + 1))


def kmer_keys(k: int) -> tuple[str, ...]:
    return tuple("".join(p) for p in product("ACGT", repeat=k))


def kmer_dictionary(k: int = DEFAULT_K) -> FeatureDictionary:
    if k < 1:
        raise ValidationError("k must be >= 1")
    return FeatureDictionary(KMER, kmer_keys(k))


# --- per-structure fingerprints ---------------------------------------------------


def bag_of_faces(graph: StructureGraph, params: EnergyParameters = TOYPARAMS,
                 dictionary: FeatureDictionary | None = None) -> Fingerprint:
    counts = face_counts(graph, params)
    if dictionary is None:
        dictionary = FeatureDictionary(FACE, tuple(sorted(counts)))
    elif dictionary.kind != FACE:
        raise ValidationError(f"bag_of_faces needs a FACE dictionary, got {dictionary.kind}")
    return _from_counts(counts, dictionary)


def bag_of_neighborhoods(graph: StructureGraph, radius: int = DEFAULT_RADIUS,
                         dictionary: FeatureDictionary | None = None) -> Fingerprint:
    counts = neighborhood_counts(graph, radius)
    if dictionary is None:
        dictionary = FeatureDictionary(NEIGHBORHOOD, tuple(sorted(counts)))
    elif dictionary.kind != NEIGHBORHOOD:
        raise ValidationError(f"bag_of_neighborhoods needs a NEIGHBORHOOD dictionary, got {dictionary.kind}")
    return _from_counts(counts, dictionary)


def kmer_counts(seq, k: int = DEFAULT_K, dictionary: FeatureDictionary | None = None) -> Fingerprint:
    seq = as_sequence(seq)
    if k < 1:
        raise ValidationError("k must be >= 1")
    if len(seq) < k:
        raise ValidationError(f"sequence of length {len(seq)} is shorter than k={k}")
    s = seq.bases
    counts = Counter(s[i:i + k] for i in range(len(s) - k + 1))
    return _from_counts(counts, dictionary or kmer_dictionary(k))


# --- expectations ---------------------------------------------------------------


def expected_fingerprint(seq, ensemble, feature_fn: Callable[..., Fingerprint],
                         dictionary: FeatureDictionary, **feature_kwargs) -> Fingerprint:
    """Probability-weighted sum of ``feature_fn`` over the ensemble entries.

    ``feature_fn`` is :func:`bag_of_faces` or :func:`bag_of_neighborhoods`;
    extra keyword arguments (``params``, ``radius``) are passed through.
    """
    seq = as_sequence(seq)
    if not ensemble.entries:
        raise ValidationError("ensemble has no entries")
    if ensemble.sequence != seq.bases:
        raise ValidationError("ensemble does not belong to this sequence")
    acc: dict[int, float] = {}
    dropped = 0.0
    for structure, _, p in ensemble.entries:
        fp = feature_fn(build_graph(seq, structure), dictionary=dictionary, **feature_kwargs)
        dropped += p * fp.dropped
        for col, v in fp.values.items():
            acc[col] = acc.get(col, 0.0) + p * v
    out = Fingerprint(dictionary, acc)
    out.dropped = dropped
    return out


def expected_counts(seq, ensemble, kind: str, params: EnergyParameters = TOYPARAMS,
                    radius: int = DEFAULT_RADIUS) -> dict[str, float]:
    """Dictionary-free expectation: feature key -> expected count.

    Its key set is exactly what :func:`build_dictionary` collects for this
    ensemble, so one pass serves both dictionary building and embedding.
    """
    seq = as_sequence(seq)
    if not ensemble.entries:
        raise ValidationError("ensemble has no entries")
    acc: dict[str, float] = {}
    for structure, _, p in ensemble.entries:
        graph = build_graph(seq, structure)
        counts = face_counts(graph, params) if kind == FACE else neighborhood_counts(graph, radius)
        for key, n in counts.items():
            acc[key] = acc.get(key, 0.0) + p * n
    return acc


def fingerprint_from_counts(counts: dict[str, float], dictionary: FeatureDictionary) -> Fingerprint:
    return _from_counts(Counter(counts), dictionary)


def _structure_keys(seq, structure, kind, radius_or_k, params) -> Iterable[str]:
    graph = build_graph(seq, structure)
    if kind == FACE:
        return face_counts(graph, params).keys()
    return neighborhood_counts(graph, radius_or_k).keys()


def build_dictionary(corpus, kind: str, radius_or_k: int | None = None,
                     params: EnergyParameters = TOYPARAMS) -> FeatureDictionary:
    """Sorted union of the feature keys over every structure of every ensemble.

    ``corpus`` is a sequence of ``(sequence, ensemble)`` pairs.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValidationError("corpus is empty")
    if kind == KMER:
        return kmer_dictionary(radius_or_k or DEFAULT_K)
    if kind not in (FACE, NEIGHBORHOOD):
        raise ValidationError(f"unknown dictionary kind {kind!r}")
    radius = DEFAULT_RADIUS if radius_or_k is None else radius_or_k
    keys: set[str] = set()
    for seq, ensemble in corpus:
        seq = as_sequence(seq)
        for structure, _, _ in ensemble.entries:
            keys.update(_structure_keys(seq, structure, kind, radius, params))
    return FeatureDictionary(kind, tuple(sorted(keys)))


# --- feature matrices ---------------------------------------------------------------


@dataclass
class FeatureMatrix:
    ids: list[str]
    columns: list[str]
    spans: dict[str, tuple[int, int]]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.ids), len(self.columns)):
            raise ValidationError(f"matrix shape {self.values.shape} does not match "
                                  f"{len(self.ids)} ids x {len(self.columns)} columns")
        if (self.values < 0).any():
            raise ValidationError("feature matrix must be nonnegative")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def segment(self, name: str) -> np.ndarray:
        start, stop = self.spans[name]
        return self.values[:, start:stop]

    def to_tsv(self) -> str:
        buf = io.StringIO()
        buf.write("id\t" + "\t".join(self.columns) + "\n")
        for rid, row in zip(self.ids, self.values):
            buf.write(rid + "\t" + "\t".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_tsv(cls, text: str) -> "FeatureMatrix":
        lines = text.rstrip("\n").split("\n")
        columns = lines[0].split("\t")[1:]
        ids, rows = [], []
        for line in lines[1:]:
            fields = line.split("\t")
            ids.append(fields[0])
            rows.append([float(x) for x in fields[1:]])
        spans: dict[str, tuple[int, int]] = {}
        for c, name in enumerate(columns):
            seg = name.split(":", 1)[0]
            start, _ = spans.get(seg, (c, c))
            spans[seg] = (start, c + 1)
        values = np.array(rows, dtype=float).reshape(len(ids), len(columns))
        return cls(ids, columns, spans, values)


def stack_segments(ids: list[str], segments: list[tuple[FeatureDictionary, list[Fingerprint]]]) -> FeatureMatrix:
    """Concatenate per-row fingerprints of several dictionaries side by side."""
    if not ids:
        raise ValidationError("cannot assemble a matrix from an empty corpus")
    columns: list[str] = []
    spans: dict[str, tuple[int, int]] = {}
    blocks = []
    for dictionary, fps in segments:
        if len(fps) != len(ids):
            raise ValidationError(f"{len(fps)} fingerprints for {len(ids)} rows")
        block = np.zeros((len(ids), len(dictionary)))
        for r, fp in enumerate(fps):
            if fp.dictionary.entries != dictionary.entries:
                raise ValidationError(f"row {ids[r]} was fingerprinted with a different {dictionary.kind} dictionary")
            for col, v in fp.values.items():
                block[r, col] = v
        name = SEGMENT_PREFIX[dictionary.kind]
        spans[name] = (len(columns), len(columns) + len(dictionary))
        columns.extend(f"{name}:{key}" for key in dictionary.entries)
        blocks.append(block)
    values = np.hstack(blocks) if blocks else np.zeros((len(ids), 0))
    return FeatureMatrix(list(ids), columns, spans, values)


def assemble_matrix(corpus, segments, params: EnergyParameters = TOYPARAMS,
                    radius: int = DEFAULT_RADIUS) -> FeatureMatrix:
    """Expected-fingerprint matrix for a corpus of ``(sequence, ensemble)`` pairs.

    Each segment is a :class:`FeatureDictionary`; FACE and NEIGHBORHOOD
    segments take ensemble expectations, KMER segments count the sequence.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValidationError("cannot assemble a matrix from an empty corpus")
    ids = [as_sequence(s).id or f"seq{r + 1}" for r, (s, _) in enumerate(corpus)]
    built = []
    for dictionary in segments:
        fps = []
        for seq, ensemble in corpus:
            if dictionary.kind == KMER:
                k = len(dictionary.entries[0])
                fps.append(kmer_counts(seq, k, dictionary))
            elif dictionary.kind == FACE:
                fps.append(expected_fingerprint(seq, ensemble, bag_of_faces, dictionary, params=params))
            else:
                fps.append(expected_fingerprint(seq, ensemble, bag_of_neighborhoods, dictionary, radius=radius))
        built.append((dictionary, fps))
    return stack_segments(ids, built)


# --- similarity search ---------------------------------------------------------------


def epsilon_neighborhood(dataset, query, epsilon: float) -> set[int]:
    """Indices of rows within Euclidean distance ``epsilon`` of ``query``.

    ``dataset`` may be a :class:`FeatureMatrix`, a 2-D array, or a list of
    equal-length vectors (e.g. Motzkin paths). ``query`` is a vector or a row
    index into the dataset.
    """
    if epsilon < 0:
        raise ValidationError("epsilon must be nonnegative")
    if isinstance(dataset, FeatureMatrix):
        data = dataset.values
    else:
        rows = [np.asarray(r, dtype=float) for r in dataset]
        if len({r.shape for r in rows}) > 1:
            raise ValidationError("dataset rows have different lengths")
        data = np.vstack(rows) if rows else np.zeros((0, 0))
    if isinstance(query, (int, np.integer)):
        q = data[int(query)]
    else:
        q = np.asarray(query, dtype=float)
    if data.size and q.shape != data.shape[1:]:
        raise ValidationError(f"query dimension {q.shape} does not match dataset {data.shape[1:]}")
    dist = np.sqrt(((data - q) ** 2).sum(axis=1)) if data.size else np.zeros(0)
    return {int(r) for r in np.flatnonzero(dist <= epsilon)}


def motzkin_vectors(structures: Iterable[SecondaryStructure]) -> list[list[int]]:
    return [motzkin_path(st) for st in structures]
