"""MFE folding, partition functions, pair probabilities and Boltzmann ensembles.

All dynamic programs share one unambiguous grammar over 0-based closed
intervals:

* ``B(i, j)``  -- ``i`` pairs with ``j``; hairpin, two-pair loop, or multiloop
* ``M1(i, j)`` -- exactly one branch starting at ``i``, unpaired tail to ``j``
* ``M(i, j)``  -- one or more branches inside a multiloop segment
* ``E(j)``     -- exterior prefix of length ``j``

The multiloop uses the affine model ``a + b*branches + c*unpaired`` with the
closing pair counted as a branch.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Iterable

import numpy as np

from .core import SecondaryStructure, ValidationError, as_sequence
from .energy import TOYPARAMS, EnergyParameters, Thermo
from .structure_graph import structure_energy

EXHAUSTIVE_LIMIT = 30
NEG_INF = -math.inf
TIE_TOL = 1e-9

# --- helpers ------------------------------------------------------------------


def _lse(values) -> float:
    values = [v for v in values if v != NEG_INF]
    if not values:
        return NEG_INF
    m = max(values)
    return m + math.log(sum(math.exp(v - m) for v in values))


def _lae(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def _pairing_matrix(s: str, params: EnergyParameters) -> list[list[bool]]:
    n = len(s)
    m = params.min_hairpin_unpaired
    return [[j - i - 1 >= m and params.can_pair(s[i], s[j]) for j in range(n)] for i in range(n)]


# --- minimum free energy ------------------------------------------------------
#
# Each cell keeps (energy, t0, t1): the lexicographically smallest co-optimal
# pair list under two orders. t0 treats "list ended" as smaller than any pair
# (plain tuple order); t1 treats it as larger. Concatenating a left part with
# a right part needs t1 of the left unless the right part may be empty, which
# makes the exact tie-break compositional.

_END = (math.inf, math.inf)
_EMPTY = (0.0, (), ())


def _t1_key(t):
    return t + (_END,)


def _cat(left, right, extra=0.0):
    e = left[0] + right[0] + extra
    t0 = left[1] if right[1] == () else left[2] + right[1]
    return e, t0, left[2] + right[2]


def _best(cands):
    if not cands:
        return None
    e = min(c[0] for c in cands)
    tied = [c for c in cands if c[0] <= e + TIE_TOL]
    return e, min(c[1] for c in tied), min((c[2] for c in tied), key=_t1_key)


def fold_mfe(seq, params: EnergyParameters = TOYPARAMS) -> tuple[SecondaryStructure, float]:
    """Minimum free energy structure and its energy.

    Among co-optimal structures the one with the lexicographically smallest
    sorted pair list is returned (the empty structure when it ties).
    """
    seq = as_sequence(seq)
    s = seq.bases
    n = len(s)
    m = params.min_hairpin_unpaired
    cp = _pairing_matrix(s, params)
    a, b, c = params.multibranch_offset_a, params.multibranch_per_branch_b, params.multibranch_per_unpaired_c
    VB: dict[tuple[int, int], tuple] = {}
    VM1: dict[tuple[int, int], tuple] = {}
    VM: dict[tuple[int, int], tuple] = {}

    for d in range(m + 1, n):
        for i in range(0, n - d):
            j = i + d
            if cp[i][j]:
                P = (0.0, ((i + 1, j + 1),), ((i + 1, j + 1),))
                cands = [(params.hairpin(j - i - 1), P[1], P[2])]
                # two-pair loops: score first, build tuples only for ties
                scored = []
                for k in range(i + 1, j - m - 1):
                    for l in range(k + m + 1, j):
                        inner = VB.get((k, l))
                        if inner is not None:
                            e = params.interior(s[i], s[j], s[k], s[l], k - i - 1, j - l - 1) + inner[0]
                            scored.append((e, inner))
                for u in range(i + 2, j):
                    left, right = VM.get((i + 1, u - 1)), VM1.get((u, j - 1))
                    if left is not None and right is not None:
                        scored.append((a + b + left[0] + right[0], (left, right)))
                if scored:
                    floor = min(min(e for e, _ in scored), cands[0][0])
                    for e, part in scored:
                        if e > floor + TIE_TOL:
                            continue
                        if isinstance(part[0], tuple):
                            cand = _cat(_cat(P, part[0]), part[1])
                        else:
                            cand = _cat(P, part)
                        cands.append((e, cand[1], cand[2]))
                VB[(i, j)] = _best(cands)

            cands = []
            for l in range(i + m + 1, j + 1):
                inner = VB.get((i, l))
                if inner is not None:
                    cands.append((inner[0] + b + c * (j - l), inner[1], inner[2]))
            if cands:
                VM1[(i, j)] = _best(cands)

            cands = []
            for u in range(i, j - m):
                right = VM1.get((u, j))
                if right is None:
                    continue
                cands.append(_cat((c * (u - i), (), ()), right))
                left = VM.get((i, u - 1))
                if left is not None:
                    cands.append(_cat(left, right))
            if cands:
                VM[(i, j)] = _best(cands)

    F = [_EMPTY]
    for j in range(n):
        cands = [F[j]]
        for k in range(0, j - m):
            inner = VB.get((k, j))
            if inner is not None:
                cands.append(_cat(F[k], inner))
        F.append(_best(cands))

    structure = SecondaryStructure(n, F[n][1])
    return structure, structure_energy(seq, structure, params) + 0.0


# --- partition function ---------------------------------------------------------


@dataclass
class InsideTables:
    """Log-space inside tables of the partition-function grammar."""

    sequence: str
    params: EnergyParameters
    beta: float
    QB: np.ndarray
    QM1: np.ndarray
    QM: np.ndarray
    E: np.ndarray
    cp: list = field(repr=False)

    @property
    def log_z(self) -> float:
        return float(self.E[-1])


def inside(seq, params: EnergyParameters = TOYPARAMS, thermo: Thermo = Thermo(),
           unpaired: Iterable[int] = ()) -> InsideTables:
    """Inside pass; positions listed in ``unpaired`` (1-based) are barred from pairing."""
    seq = as_sequence(seq)
    s = seq.bases
    n = len(s)
    m = params.min_hairpin_unpaired
    beta = thermo.beta
    cp = _pairing_matrix(s, params)
    for pos in unpaired:
        for k in range(n):
            cp[pos - 1][k] = cp[k][pos - 1] = False
    a, b, c = params.multibranch_offset_a, params.multibranch_per_branch_b, params.multibranch_per_unpaired_c
    QB = np.full((n, n), NEG_INF)
    QM1 = np.full((n, n), NEG_INF)
    QM = np.full((n, n), NEG_INF)

    for d in range(m + 1, n):
        for i in range(0, n - d):
            j = i + d
            if cp[i][j]:
                terms = [-beta * params.hairpin(j - i - 1)]
                for k in range(i + 1, j - m - 1):
                    row = QB[k]
                    for l in range(k + m + 1, j):
                        if row[l] != NEG_INF:
                            e = params.interior(s[i], s[j], s[k], s[l], k - i - 1, j - l - 1)
                            terms.append(row[l] - beta * e)
                multi = [QM[i + 1, u - 1] + QM1[u, j - 1] for u in range(i + 2, j)]
                ml = _lse(multi)
                if ml != NEG_INF:
                    terms.append(ml - beta * (a + b))
                QB[i, j] = _lse(terms)

            QM1[i, j] = _lse([QB[i, l] - beta * (b + c * (j - l)) for l in range(i + m + 1, j + 1)])

            terms = []
            for u in range(i, j - m):
                right = QM1[u, j]
                if right == NEG_INF:
                    continue
                left = -beta * c * (u - i)
                if u > i:
                    left = _lae(left, QM[i, u - 1])
                terms.append(left + right)
            QM[i, j] = _lse(terms)

    E = np.zeros(n + 1)
    for j in range(n):
        E[j + 1] = _lse([E[j]] + [E[k] + QB[k, j] for k in range(0, j - m) if QB[k, j] != NEG_INF])
    return InsideTables(s, params, beta, QB, QM1, QM, E, cp)


def partition_function(seq, params: EnergyParameters = TOYPARAMS, thermo: Thermo = Thermo()) -> tuple[float, float]:
    """Return ``(Z, G)`` with ``G = -kT ln Z`` in kcal/mol."""
    log_z = inside(seq, params, thermo).log_z
    return math.exp(log_z), -thermo.kT * log_z + 0.0


@dataclass(frozen=True)
class PairProbabilityMatrix:
    p_pair: np.ndarray  # (n, n), upper triangle, 0-based indices
    p_unpaired: np.ndarray

    def pair(self, i: int, j: int) -> float:
        """Probability of the 1-based pair ``(i, j)``."""
        i, j = min(i, j), max(i, j)
        return float(self.p_pair[i - 1, j - 1])


def outside(tab: InsideTables) -> np.ndarray:
    """Log-space outside values of ``B``; ``exp(out + QB - logZ)`` is P(pair)."""
    s, params, beta = tab.sequence, tab.params, tab.beta
    n = len(s)
    m = params.min_hairpin_unpaired
    a, b, c = params.multibranch_offset_a, params.multibranch_per_branch_b, params.multibranch_per_unpaired_c
    QB, QM1, QM, E = tab.QB, tab.QM1, tab.QM, tab.E
    OB = np.full((n, n), NEG_INF)
    OM1 = np.full((n, n), NEG_INF)
    OM = np.full((n, n), NEG_INF)
    OE = np.full(n + 1, NEG_INF)
    OE[n] = 0.0
    for j in range(n - 1, -1, -1):
        o = OE[j + 1]
        OE[j] = _lae(OE[j], o)
        for k in range(0, j - m):
            if QB[k, j] != NEG_INF:
                OE[k] = _lae(OE[k], o + QB[k, j])
                OB[k, j] = _lae(OB[k, j], o + E[k])

    for d in range(n - 1, m, -1):
        for i in range(0, n - d):
            j = i + d
            o = OM[i, j]
            if o != NEG_INF:
                for u in range(i, j - m):
                    right = QM1[u, j]
                    if right == NEG_INF:
                        continue
                    left = -beta * c * (u - i)
                    if u > i:
                        left = _lae(left, QM[i, u - 1])
                        if QM[i, u - 1] != NEG_INF:
                            OM[i, u - 1] = _lae(OM[i, u - 1], o + right)
                    OM1[u, j] = _lae(OM1[u, j], o + left)
            o = OM1[i, j]
            if o != NEG_INF:
                for l in range(i + m + 1, j + 1):
                    if QB[i, l] != NEG_INF:
                        OB[i, l] = _lae(OB[i, l], o - beta * (b + c * (j - l)))
            o = OB[i, j]
            if o != NEG_INF and QB[i, j] != NEG_INF:
                for k in range(i + 1, j - m - 1):
                    for l in range(k + m + 1, j):
                        if QB[k, l] != NEG_INF:
                            e = params.interior(s[i], s[j], s[k], s[l], k - i - 1, j - l - 1)
                            OB[k, l] = _lae(OB[k, l], o - beta * e)
                w = o - beta * (a + b)
                for u in range(i + 2, j):
                    left, right = QM[i + 1, u - 1], QM1[u, j - 1]
                    if left != NEG_INF and right != NEG_INF:
                        OM[i + 1, u - 1] = _lae(OM[i + 1, u - 1], w + right)
                        OM1[u, j - 1] = _lae(OM1[u, j - 1], w + left)
    return OB


def base_pair_probabilities(seq, params: EnergyParameters = TOYPARAMS,
                            thermo: Thermo = Thermo()) -> PairProbabilityMatrix:
    tab = inside(seq, params, thermo)
    OB = outside(tab)
    n = len(tab.sequence)
    with np.errstate(invalid="ignore"):
        P = np.exp(OB + tab.QB - tab.log_z)
    P = np.nan_to_num(np.triu(P, 1))
    full = P + P.T
    return PairProbabilityMatrix(P, 1.0 - full.sum(axis=1)) if n else PairProbabilityMatrix(P, np.ones(0))


def unpaired_probabilities(seq, params: EnergyParameters = TOYPARAMS, thermo: Thermo = Thermo()) -> np.ndarray:
    """P(position i unpaired) as ``Z(i barred) / Z``, one constrained inside pass per position.

    Independent of the outside recursion, so it cross-checks pair probabilities.
    """
    seq = as_sequence(seq)
    log_z = inside(seq, params, thermo).log_z
    return np.array([math.exp(inside(seq, params, thermo, (i,)).log_z - log_z) for i in range(1, len(seq) + 1)])


# --- brute-force enumeration ---------------------------------------------------


def enumerate_structures(seq, params: EnergyParameters = TOYPARAMS,
                         limit: int = EXHAUSTIVE_LIMIT) -> list[tuple[SecondaryStructure, float]]:
    """Every admissible structure with its face-additive energy (oracle)."""
    seq = as_sequence(seq)
    n = len(seq)
    if n > limit:
        raise ValidationError(f"sequence length {n} exceeds exhaustive_limit={limit}")
    s = seq.bases
    m = params.min_hairpin_unpaired
    memo: dict[tuple[int, int], list[tuple]] = {}

    def gen(i: int, j: int) -> list[tuple]:
        if j - i < m + 1:
            return [()]
        key = (i, j)
        if key in memo:
            return memo[key]
        out = list(gen(i + 1, j))
        for k in range(i + m + 1, j + 1):
            if params.can_pair(s[i], s[k]):
                head = ((i + 1, k + 1),)
                rest = gen(k + 1, j)
                for inner in gen(i + 1, k - 1):
                    for tail in rest:
                        out.append(head + inner + tail)
        memo[key] = out
        return out

    structures = [SecondaryStructure._trusted(n, pairs) for pairs in gen(0, n - 1)]
    return [(st, structure_energy(seq, st, params) + 0.0) for st in structures]


# --- ensembles -------------------------------------------------------------------


@dataclass
class EnsembleDistribution:
    sequence: str
    entries: list[tuple[SecondaryStructure, float, float]]
    partition_value: float
    ensemble_free_energy: float
    mode: str
    sample_count: int | None = None
    seed: int | None = None
    samples: list[SecondaryStructure] | None = field(default=None, repr=False)

    def probability(self, structure: SecondaryStructure | str) -> float:
        if isinstance(structure, str):
            structure = SecondaryStructure.from_dotbracket(structure)
        return sum(p for st, _, p in self.entries if st == structure)


class Sampler:
    """Stochastic traceback through the inside tables."""

    def __init__(self, tab: InsideTables):
        self.tab = tab
        self._cdfs: dict[tuple, tuple[list[float], list]] = {}

    def _options(self, node):
        tab = self.tab
        s, params, beta = tab.sequence, tab.params, tab.beta
        m = params.min_hairpin_unpaired
        a, b, c = params.multibranch_offset_a, params.multibranch_per_branch_b, params.multibranch_per_unpaired_c
        QB, QM1, QM, E = tab.QB, tab.QM1, tab.QM, tab.E
        kind = node[0]
        opts = []
        if kind == "E":
            j = node[1] - 1
            opts.append((E[j], ("E", j)))
            for k in range(0, j - m):
                if QB[k, j] != NEG_INF:
                    opts.append((E[k] + QB[k, j], ("E", k), ("B", k, j)))
        elif kind == "B":
            _, i, j = node
            opts.append((-beta * params.hairpin(j - i - 1),))
            for k in range(i + 1, j - m - 1):
                for l in range(k + m + 1, j):
                    if QB[k, l] != NEG_INF:
                        e = params.interior(s[i], s[j], s[k], s[l], k - i - 1, j - l - 1)
                        opts.append((QB[k, l] - beta * e, ("B", k, l)))
            for u in range(i + 2, j):
                w = QM[i + 1, u - 1] + QM1[u, j - 1]
                if w != NEG_INF:
                    opts.append((w - beta * (a + b), ("M", i + 1, u - 1), ("M1", u, j - 1)))
        elif kind == "M1":
            _, i, j = node
            for l in range(i + m + 1, j + 1):
                if QB[i, l] != NEG_INF:
                    opts.append((QB[i, l] - beta * (b + c * (j - l)), ("B", i, l)))
        else:
            _, i, j = node
            for u in range(i, j - m):
                right = QM1[u, j]
                if right == NEG_INF:
                    continue
                opts.append((-beta * c * (u - i) + right, ("M1", u, j)))
                if u > i and QM[i, u - 1] != NEG_INF:
                    opts.append((QM[i, u - 1] + right, ("M", i, u - 1), ("M1", u, j)))
        top = max(o[0] for o in opts)
        cdf = list(accumulate(math.exp(o[0] - top) for o in opts))
        return cdf, [o[1:] for o in opts]

    def _choose(self, node, rng):
        cached = self._cdfs.get(node)
        if cached is None:
            cached = self._cdfs[node] = self._options(node)
        cdf, children = cached
        idx = bisect_right(cdf, rng.random() * cdf[-1])
        return children[min(idx, len(children) - 1)]

    def sample(self, rng) -> SecondaryStructure:
        n = len(self.tab.sequence)
        pairs = []
        stack = [("E", n)]
        while stack:
            node = stack.pop()
            if node[0] == "E" and node[1] == 0:
                continue
            if node[0] == "B":
                pairs.append((node[1] + 1, node[2] + 1))
            stack.extend(self._choose(node, rng))
        return SecondaryStructure(n, tuple(pairs))


def make_rng(seed: int) -> np.random.Generator:
    """Seeded counter-based (Philox, 64-bit) generator used for all sampling."""
    return np.random.Generator(np.random.Philox(seed))


def sample_structures(seq, n_samples: int, seed: int = 0, params: EnergyParameters = TOYPARAMS,
                      thermo: Thermo = Thermo()) -> list[SecondaryStructure]:
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    sampler = Sampler(inside(seq, params, thermo))
    rng = make_rng(seed)
    return [sampler.sample(rng) for _ in range(n_samples)]


def boltzmann_ensemble(seq, params: EnergyParameters = TOYPARAMS, thermo: Thermo = Thermo(),
                       n_samples: int = 1000, seed: int = 0, mode: str = "sampled",
                       exhaustive_limit: int = EXHAUSTIVE_LIMIT) -> EnsembleDistribution:
    """Boltzmann ensemble, exhaustive (exact probabilities) or by stochastic traceback.

    Sampled entries list each distinct structure once with its empirical
    frequency, most frequent first; the raw draw order is kept in ``samples``.
    """
    seq = as_sequence(seq)
    if mode == "exhaustive":
        listed = enumerate_structures(seq, params, exhaustive_limit)
        logw = np.array([-thermo.beta * e for _, e in listed])
        log_z = _lse(logw.tolist())
        probs = np.exp(logw - log_z)
        entries = [(st, e, float(p)) for (st, e), p in zip(listed, probs)]
        return EnsembleDistribution(seq.bases, entries, math.exp(log_z), -thermo.kT * log_z + 0.0, "exhaustive")
    if mode != "sampled":
        raise ValidationError(f"unknown ensemble mode {mode!r}")
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1 in sampled mode")
    tab = inside(seq, params, thermo)
    sampler = Sampler(tab)
    rng = make_rng(seed)
    draws = [sampler.sample(rng) for _ in range(n_samples)]
    counts = Counter(draws)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0].pairs))
    entries = [(st, structure_energy(seq, st, params) + 0.0, k / n_samples) for st, k in ordered]
    return EnsembleDistribution(seq.bases, entries, math.exp(tab.log_z), -thermo.kT * tab.log_z + 0.0,
                                "sampled", n_samples, seed, draws)
