"""Structure graphs, face decomposition, Motzkin paths and rooted neighbourhoods."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

from .core import Sequence, SecondaryStructure, ValidationError, as_sequence
from .energy import EnergyParameters, face_energy

STACK, HAIRPIN, INTERNAL, BULGE, MULTIBRANCH = "STACK", "HAIRPIN", "INTERNAL", "BULGE", "MULTIBRANCH"
PATH, PAIR = "path", "pair"


@dataclass(frozen=True)
class StructureGraph:
    sequence: Sequence
    structure: SecondaryStructure
    path_edges: tuple[tuple[int, int], ...]
    pair_edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[tuple[int, str], ...], ...] = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.sequence)

    def node_label(self, v: int) -> str:
        return self.sequence[v - 1]

    def neighbors(self, v: int) -> tuple[tuple[int, str], ...]:
        """``(neighbour, edge_label)`` for 1-based node ``v``."""
        return self.adjacency[v - 1]


def build_graph(seq, structure: SecondaryStructure) -> StructureGraph:
    seq = as_sequence(seq)
    if len(seq) != structure.length:
        raise ValidationError(f"sequence length {len(seq)} != structure length {structure.length}")
    n = len(seq)
    path_edges = tuple((i, i + 1) for i in range(1, n))
    adj: list[list[tuple[int, str]]] = [[] for _ in range(n)]
    for i, j in path_edges:
        adj[i - 1].append((j, PATH))
        adj[j - 1].append((i, PATH))
    for i, j in structure.pairs:
        adj[i - 1].append((j, PAIR))
        adj[j - 1].append((i, PAIR))
    return StructureGraph(seq, structure, path_edges, structure.pairs, tuple(tuple(sorted(a)) for a in adj))


@dataclass(frozen=True)
class Face:
    face_type: str
    defining_pair: tuple[int, int]
    nested_pairs: tuple[tuple[int, int], ...]
    unpaired_lengths: tuple[int, ...]
    energy: float
    label_key: str

    @property
    def motif(self) -> str:
        """Type plus loop lengths, without nucleotides."""
        return motif_of(self.face_type, self.nested_pairs, self.unpaired_lengths)

    @property
    def bof_key(self) -> str:
        """``(type, energy)`` key used by bag-of-faces; energy rounded to 0.1."""
        return f"{self.motif}@{round(self.energy, 1) + 0.0:+.1f}"


def motif_of(face_type: str, nested, gaps) -> str:
    if face_type == STACK:
        return STACK
    if face_type == HAIRPIN:
        return f"{HAIRPIN}:{gaps[0]}"
    if face_type == BULGE:
        return f"{BULGE}:{sum(gaps)}"
    if face_type == INTERNAL:
        return f"{INTERNAL}:{gaps[0]}+{gaps[1]}"
    return f"MULTI:{len(nested) + 1}+{sum(gaps)}"


def classify_face(defining_pair, nested_pairs, gaps=None) -> str:
    i, j = defining_pair
    if not nested_pairs:
        return HAIRPIN
    if len(nested_pairs) >= 2:
        return MULTIBRANCH
    k, l = nested_pairs[0]
    left, right = k - i - 1, j - l - 1
    if left == 0 and right == 0:
        return STACK
    if left == 0 or right == 0:
        return BULGE
    return INTERNAL


def _children(table: list[int], i: int, j: int):
    """Directly nested pairs and the unpaired run lengths between them."""
    nested = []
    gaps = []
    run = 0
    k = i + 1
    while k < j:
        partner = table[k - 1]
        if partner > k:
            nested.append((k, partner))
            gaps.append(run)
            run = 0
            k = partner + 1
        else:
            run += 1
            k += 1
    gaps.append(run)
    return nested, gaps


def _label_key(seq: str, face_type: str, i: int, j: int, nested, gaps) -> str:
    motif = motif_of(face_type, nested, gaps)
    if face_type == MULTIBRANCH:
        return motif
    closing = seq[i - 1] + seq[j - 1]
    if face_type == HAIRPIN:
        return f"{motif}:{closing}"
    k, l = nested[0]
    return f"{motif}:{closing}/{seq[k - 1]}{seq[l - 1]}"


def _faces(seq: Sequence, structure: SecondaryStructure, params: EnergyParameters) -> list[Face]:
    table = structure.pair_table
    text = seq.bases
    faces = []
    for i, j in structure.pairs:
        nested, gaps = _children(table, i, j)
        kind = classify_face((i, j), nested, gaps)
        if kind == HAIRPIN:
            lengths = (gaps[0],)
        elif kind == MULTIBRANCH:
            lengths = tuple(gaps)
        elif kind == STACK:
            lengths = (0, 0)
        else:
            lengths = (gaps[0], gaps[1])
        face = Face(kind, (i, j), tuple(nested), lengths, 0.0, _label_key(text, kind, i, j, nested, gaps))
        faces.append(replace(face, energy=face_energy(face, text, params)))
    return faces


def extract_faces(graph: StructureGraph, params: EnergyParameters) -> list[Face]:
    """One interior face per pair edge, ordered by defining pair."""
    return _faces(graph.sequence, graph.structure, params)


def structure_energy(seq, structure: SecondaryStructure, params: EnergyParameters) -> float:
    """Total energy as the plain sum over interior faces (exterior loop is free).

    Same classification as :func:`extract_faces` without building ``Face``
    objects; the two are checked against each other in the tests.
    """
    s = str(seq)
    table = structure.pair_table
    total = 0.0
    for i, j in structure.pairs:
        nested, gaps = _children(table, i, j)
        if not nested:
            total += params.hairpin(gaps[0])
        elif len(nested) == 1:
            k, l = nested[0]
            total += params.interior(s[i - 1], s[j - 1], s[k - 1], s[l - 1], gaps[0], gaps[1])
        else:
            total += params.multibranch(len(nested) + 1, sum(gaps))
    return total


def motzkin_path(structure: SecondaryStructure) -> list[int]:
    y = 0
    values = []
    for partner, pos in zip(structure.pair_table, range(1, structure.length + 1)):
        if partner > pos:
            y += 1
        elif partner:
            y -= 1
        values.append(y)
    return values


# --- rooted neighbourhoods ---------------------------------------------------

_EDGE_CODE = {PATH: "p", PAIR: "b"}


def _refine(colors: list[int], adj) -> list[int]:
    while True:
        sigs = [(colors[v], tuple(sorted((lab, colors[u]) for u, lab in adj[v]))) for v in range(len(colors))]
        rank = {s: r for r, s in enumerate(sorted(set(sigs)))}
        new = [rank[s] for s in sigs]
        if len(rank) == len(set(colors)):
            return new
        colors = new


def _certificate(colors, edges):
    return tuple(sorted((min(colors[u], colors[v]), max(colors[u], colors[v]), lab) for u, v, lab in edges))


def _search(colors, adj, edges):
    colors = _refine(colors, adj)
    counts: dict[int, int] = {}
    for c in colors:
        counts[c] = counts.get(c, 0) + 1
    split = [c for c, m in counts.items() if m > 1]
    if not split:
        return _certificate(colors, edges)
    target = min(split)
    best = None
    for v, c in enumerate(colors):
        if c != target:
            continue
        branch = [2 * x for x in colors]
        branch[v] -= 1
        cert = _search(branch, adj, edges)
        if best is None or cert < best:
            best = cert
    return best


def canonical_rooted_form(n_nodes: int, edges, root: int) -> str:
    """Canonical string of an edge-labelled graph rooted at ``root`` (0-based nodes).

    Colour refinement plus individualisation over every tie, keeping the
    smallest certificate; exact for any graph, cheap for the small
    near-path balls seen here.
    """
    adj: list[list[tuple[int, str]]] = [[] for _ in range(n_nodes)]
    for u, v, lab in edges:
        adj[u].append((v, lab))
        adj[v].append((u, lab))
    colors = [0 if v == root else 1 for v in range(n_nodes)]
    cert = _search(colors, adj, edges)
    return f"{n_nodes}|" + ",".join(f"{a}{lab}{b}" for a, b, lab in cert)


def ball(graph: StructureGraph, center: int, radius: int) -> list[int]:
    dist = {center: 0}
    queue = deque([center])
    while queue:
        u = queue.popleft()
        if dist[u] == radius:
            continue
        for v, _ in graph.neighbors(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return sorted(dist)


def induced_edges(graph: StructureGraph, nodes) -> list[tuple[int, int, str]]:
    inside = set(nodes)
    out = []
    for u in nodes:
        for v, lab in graph.neighbors(u):
            if u < v and v in inside:
                out.append((u, v, lab))
    return out


_KEY_CACHE: dict[tuple, str] = {}


def rooted_neighborhood_key(graph: StructureGraph, center: int, radius: int) -> str:
    """Isomorphism-class key of the radius-``radius`` ball around ``center``.

    Edge labels and the root are kept; nucleotide labels are dropped.
    """
    if not 1 <= center <= graph.n_nodes:
        raise ValidationError(f"center {center} outside graph of {graph.n_nodes} nodes")
    if radius < 0:
        raise ValidationError("radius must be >= 0")
    nodes = ball(graph, center, radius)
    edges = induced_edges(graph, nodes)
    # translation-invariant description; equal descriptions are identical graphs
    local = (radius, tuple(v - center for v in nodes),
             tuple((u - center, v - center, _EDGE_CODE[lab]) for u, v, lab in edges))
    key = _KEY_CACHE.get(local)
    if key is None:
        index = {v: k for k, v in enumerate(nodes)}
        key = canonical_rooted_form(len(nodes), [(index[u], index[v], _EDGE_CODE[lab]) for u, v, lab in edges],
                                    index[center])
        if len(_KEY_CACHE) < 500_000:
            _KEY_CACHE[local] = key
    return key
