"""Small synthetic SELEX read tables for demos, tests and the bundled dataset."""

from __future__ import annotations

import numpy as np

from .selex import SelexRecord

LIBRARIES = {"libA": (2, 4), "libB": (3, 5)}

# stem halves that fold into hairpins under the toy pairing rules
_STEMS = ["GGCGC", "CCGAG", "GTCAG", "ATGCC"]
_LOOPS = ["TTCG", "AAAGA", "CATTAC", "GAGTTTA"]


def _revcomp(s: str) -> str:
    return s[::-1].translate(str.maketrans("ACGT", "TGCA"))


def _family_member(rng, family: int) -> str:
    stem = _STEMS[family]
    loop = _LOOPS[family]
    left = "".join(rng.choice(list("ACGT"), size=int(rng.integers(2, 6))))
    right = "".join(rng.choice(list("ACGT"), size=int(rng.integers(2, 6))))
    return left + stem + loop + _revcomp(stem) + right


def synthetic_reads(n_sequences: int = 40, n_mutants: int = 6, seed: int = 7) -> list[SelexRecord]:
    """Two two-round libraries over ``n_sequences`` founders drawn from four
    hairpin families, plus late-round mutants that mutation filtering drops.

    Founder 0 is planted high-count / shrinking, founder 1 low-count / growing.
    """
    rng = np.random.default_rng(seed)
    seqs: list[str] = []
    while len(seqs) < n_sequences + n_mutants:
        s = _family_member(rng, len(seqs) % len(_STEMS))
        if s not in seqs:
            seqs.append(s)
    founders, mutants = seqs[:n_sequences], seqs[n_sequences:]
    records = []
    for idx, seq in enumerate(founders):
        for lib, (first, last) in LIBRARIES.items():
            # a quarter of founders are seen in one library only
            if idx % 4 == 3 and lib == "libB":
                continue
            c0 = int(rng.integers(20, 60))
            growth = float(rng.uniform(0.3, 3.0))
            if idx == 0:
                c0, growth = 2000, 0.25
            elif idx == 1:
                c0, growth = 1, 4.0
            records.append(SelexRecord(lib, first, seq, c0))
            records.append(SelexRecord(lib, last, seq, max(0, int(round(c0 * growth)))))
    for seq in mutants:
        lib = "libA" if rng.random() < 0.5 else "libB"
        records.append(SelexRecord(lib, LIBRARIES[lib][1], seq, int(rng.integers(1, 4))))
    return sorted(records, key=lambda r: (r.library, r.round, r.sequence))
