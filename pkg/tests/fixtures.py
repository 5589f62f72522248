"""Constructed SELEX read sets with known anomaly labels."""

import random

from boltzfold.selex import SelexRecord


def planted_reads(n=100, seed=0):
    """Two-round, one-library reads for ``n`` aptamers.

    Regular aptamers have final count and pressure rising together, so
    neither anomaly quadrant is populated by them. Two planted sequences
    sit in the quadrants: a dominant but shrinking one (HC_LP) and a rare
    but fast-growing one (LC_HP).
    """
    rng = random.Random(seed)
    seqs = set()
    while len(seqs) < n:
        seqs.add("".join(rng.choice("ACGT") for _ in range(20)))
    seqs = sorted(seqs)
    rng.shuffle(seqs)
    hc, lc, regular = seqs[0], seqs[1], seqs[2:]
    records = []
    for i, s in enumerate(regular):
        c0 = 100 + i
        records += [SelexRecord("L1", 1, s, c0), SelexRecord("L1", 3, s, round(c0 * (1 + i / 50)))]
    records += [SelexRecord("L1", 1, hc, 5000), SelexRecord("L1", 3, hc, 2500)]
    records += [SelexRecord("L1", 1, lc, 1), SelexRecord("L1", 3, lc, 10)]
    return records, {hc: "HC_LP", lc: "LC_HP"}


def blobs(n_per=50, dim=5, spread=0.3, seed=0):
    """Three well-separated isotropic Gaussian blobs; returns (X, labels 0..2)."""
    import numpy as np
    rng = np.random.default_rng(seed)
    centers = np.eye(3, dim) * 6.0
    X = np.vstack([c + spread * rng.standard_normal((n_per, dim)) for c in centers])
    return X, np.repeat(np.arange(3), n_per)


def agreement(a, b):
    """Fraction of rows on which two labelings agree under the best relabeling."""
    from itertools import permutations
    import numpy as np
    a, b = np.asarray(a), np.asarray(b)
    la, lb = sorted(set(a.tolist())), sorted(set(b.tolist()))
    if len(la) > len(lb):
        a, b, la, lb = b, a, lb, la
    best = 0
    for perm in permutations(lb, len(la)):
        m = dict(zip(la, perm))
        best = max(best, sum(m[x] == y for x, y in zip(a.tolist(), b.tolist())))
    return best / len(a)
