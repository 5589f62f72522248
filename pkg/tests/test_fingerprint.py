import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boltzfold import TOYPARAMS, SecondaryStructure, ValidationError, boltzmann_ensemble, build_graph
from boltzfold.fingerprint import FACE, KMER, NEIGHBORHOOD, FeatureDictionary, FeatureMatrix, Fingerprint, \
    assemble_matrix, bag_of_faces, bag_of_neighborhoods, build_dictionary, diagnostics, epsilon_neighborhood, \
    expected_counts, expected_fingerprint, kmer_counts, kmer_dictionary, motzkin_vectors
from boltzfold.structure_graph import extract_faces
from oracles import oracle_ensemble, oracle_expected_faces, random_corpus

# frozen from oracle_expected_faces("GGGAAACCC") in tests/oracles.py
GGGAAACCC_FACES = {
    "BULGE:1@+4.3": 3.0416753659757213e-06,
    "HAIRPIN:3@+3.0": 0.8122313656934675,
    "HAIRPIN:4@+3.5": 0.027674683402552518,
    "HAIRPIN:5@+4.0": 0.006584231680038969,
    "HAIRPIN:6@+4.5": 0.0002013873199870629,
    "HAIRPIN:7@+5.0": 4.460648353030283e-05,
    "INTERNAL:1+1@+5.1": 2.864523081018635e-07,
    "STACK@-2.0": 1.62461446475553,
}


def db(s):
    return SecondaryStructure.from_dotbracket(s)


def test_bag_of_faces_examples():
    fp = bag_of_faces(build_graph("GGGAAACCC", db("(((...)))")))
    assert fp.as_dict() == {"STACK@-2.0": 2.0, "HAIRPIN:3@+3.0": 1.0}
    assert fp.total() == 3
    d = FeatureDictionary(FACE, ("HAIRPIN:3@+3.0", "STACK@-2.0"))
    assert bag_of_faces(build_graph("AAAA", db("....")), dictionary=d).to_dense().tolist() == [0.0, 0.0]
    with pytest.raises(ValidationError):
        bag_of_faces(build_graph("AAAA", db("....")), dictionary=kmer_dictionary(2))


def test_neighborhood_examples():
    fp = bag_of_neighborhoods(build_graph("A", db(".")), radius=3)
    assert list(fp.as_dict().values()) == [1.0]
    n = 7
    counts = sorted(bag_of_neighborhoods(build_graph("A" * n, db("." * n)), radius=1).as_dict().values())
    assert counts == [2.0, n - 2.0]
    fp = bag_of_neighborhoods(build_graph("GGGAAACCC", db("(((...)))")), radius=1)
    # ends {1, 9}; stem interiors {2, 3, 7, 8}; loop {4, 5, 6}
    assert sorted(fp.as_dict().values()) == [2.0, 3.0, 4.0]
    assert fp.total() == 9


def test_kmer_examples():
    assert kmer_counts("AAAA").as_dict() == {"AAAA": 1.0}
    fp = kmer_counts("GGGAAACCC")
    assert len(fp.values) == 6 and set(fp.values.values()) == {1.0}
    assert len(kmer_dictionary(4)) == 256
    assert kmer_dictionary(4).entries[:2] == ("AAAA", "AAAC")
    with pytest.raises(ValidationError):
        kmer_counts("ACG", 4)


def test_dropped_features_are_counted():
    before = diagnostics["dropped_features"]
    d = FeatureDictionary(FACE, ("STACK@-2.0",))
    fp = bag_of_faces(build_graph("GGGAAACCC", db("(((...)))")), dictionary=d)
    assert fp.as_dict() == {"STACK@-2.0": 2.0} and fp.dropped == 1
    assert diagnostics["dropped_features"] == before + 1


def test_fingerprint_rejects_bad_values():
    d = FeatureDictionary(FACE, ("a",))
    with pytest.raises(ValidationError):
        Fingerprint(d, {0: -1.0})
    with pytest.raises(ValidationError):
        Fingerprint(d, {3: 1.0})
    with pytest.raises(ValidationError):
        FeatureDictionary(FACE, ("a", "a"))


def test_dictionary_json_round_trip():
    d = FeatureDictionary(NEIGHBORHOOD, ("z", "a", "m"))
    back = FeatureDictionary.from_json(d.to_json())
    assert back == d and back.entries == ("z", "a", "m") and back.index["m"] == 2


def test_expected_faces_examples():
    ens = boltzmann_ensemble("AAAA", mode="exhaustive")
    d = FeatureDictionary(FACE, ("STACK@-2.0",))
    assert expected_fingerprint("AAAA", ens, bag_of_faces, d).total() == 0.0
    ens = boltzmann_ensemble("GGGAAACCC", mode="exhaustive")
    d = build_dictionary([("GGGAAACCC", ens)], FACE)
    assert d.entries == tuple(sorted(GGGAAACCC_FACES))
    got = expected_fingerprint("GGGAAACCC", ens, bag_of_faces, d).as_dict()
    for key, value in GGGAAACCC_FACES.items():
        assert got[key] == pytest.approx(value, abs=1e-12)


def test_degenerate_ensemble_is_identity():
    ens = boltzmann_ensemble("AAAAAAAA", n_samples=50, seed=0)
    d = build_dictionary([("AAAAAAAA", ens)], NEIGHBORHOOD, 2)
    exp = expected_fingerprint("AAAAAAAA", ens, bag_of_neighborhoods, d, radius=2)
    one = bag_of_neighborhoods(build_graph("AAAAAAAA", db("........")), radius=2, dictionary=d)
    assert exp.as_dict() == pytest.approx(one.as_dict())


def test_expected_errors():
    ens = boltzmann_ensemble("GGGAAACCC", mode="exhaustive")
    d = kmer_dictionary(2)
    with pytest.raises(ValidationError):
        expected_fingerprint("GGGAAACCA", ens, bag_of_faces, FeatureDictionary(FACE, ()))
    ens.entries = []
    with pytest.raises(ValidationError):
        expected_fingerprint("GGGAAACCC", ens, bag_of_faces, FeatureDictionary(FACE, ()))
    assert len(d) == 16


@pytest.mark.parametrize("s", random_corpus(8, 8, 15, seed=21))
def test_expected_faces_match_oracle(s):
    ens = boltzmann_ensemble(s, mode="exhaustive")
    ref = oracle_expected_faces(s)
    got = expected_counts(s, ens, FACE)
    assert got.keys() == ref.keys()
    for k in ref:
        assert abs(got[k] - ref[k]) <= 1e-9


def _exact_moments(s):
    entries, _ = oracle_ensemble(s)
    mean, sq = Counter(), Counter()
    for x, _, p in entries:
        for key, n in Counter(f.bof_key for f in extract_faces(build_graph(s, x), TOYPARAMS)).items():
            mean[key] += p * n
            sq[key] += p * n * n
    return mean, {k: sq[k] - mean[k] ** 2 for k in mean}


def _poisson_tail(k, lam):
    """P(X >= k) for X ~ Poisson(lam)."""
    return 1.0 - math.fsum(math.exp(-lam + i * math.log(lam) - math.lgamma(i + 1)) for i in range(k)) if k else 1.0


@pytest.mark.parametrize("s", random_corpus(4, 10, 14, seed=5))
def test_sampled_expectation_is_consistent(s):
    # Gaussian band where n*p is large enough for it; exact Poisson tail for rare faces
    n = 3000
    mean, var = _exact_moments(s)
    got = expected_counts(s, boltzmann_ensemble(s, n_samples=n, seed=2), FACE)
    assert set(got) <= set(mean)
    for key, m in mean.items():
        g = got.get(key, 0.0)
        if n * m >= 10:
            assert abs(g - m) <= 5 * math.sqrt(var[key] / n)
        else:
            assert _poisson_tail(round(g * n), n * m) >= 1e-6


def test_build_dictionary_examples():
    ens = boltzmann_ensemble("AAAAAA", mode="exhaustive")
    assert build_dictionary([("AAAAAA", ens)], FACE).entries == ()
    assert len(build_dictionary([("AAAAAA", ens)], KMER, 4)) == 256
    corpus = [(s, boltzmann_ensemble(s, mode="exhaustive")) for s in random_corpus(4, 8, 12, seed=1)]
    assert build_dictionary(corpus, NEIGHBORHOOD, 2) == build_dictionary(list(corpus), NEIGHBORHOOD, 2)
    with pytest.raises(ValidationError):
        build_dictionary([], FACE)


def test_assemble_matrix_and_tsv_round_trip():
    ens = boltzmann_ensemble("GGGAAACCC", mode="exhaustive")
    faces = build_dictionary([("GGGAAACCC", ens)], FACE)
    m = assemble_matrix([("GGGAAACCC", ens)], [faces, kmer_dictionary(4)])
    assert m.shape == (1, len(faces) + 256)
    assert m.spans == {"FACE": (0, len(faces)), "KMER": (len(faces), len(faces) + 256)}
    assert m.segment("KMER").sum() == 6
    back = FeatureMatrix.from_tsv(m.to_tsv())
    assert back.ids == m.ids and back.columns == m.columns and back.spans == m.spans
    assert np.array_equal(back.values, m.values)
    assert m.to_tsv().startswith("id\tFACE:")
    with pytest.raises(ValidationError):
        assemble_matrix([], [faces])
    with pytest.raises(ValidationError):
        FeatureMatrix(["a"], ["x", "y"], {}, np.zeros((1, 3)))


def test_epsilon_examples():
    data = [[0.0, 0.0], [0.5, 0.0], [0.0, 1.5]]
    assert epsilon_neighborhood(data, 0, 1.0) == {0, 1}
    assert 2 in epsilon_neighborhood(data, 2, 0.0)
    paths = motzkin_vectors([db("((...))"), db("((...))"), db(".(...).")])
    assert epsilon_neighborhood(paths, 0, 0.0) == {0, 1}
    with pytest.raises(ValidationError):
        epsilon_neighborhood(data, 0, -0.1)
    with pytest.raises(ValidationError):
        epsilon_neighborhood(data, [1.0, 2.0, 3.0], 1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.floats(-5, 5), min_size=3, max_size=3), min_size=1, max_size=12),
       st.floats(0, 4), st.floats(0, 4))
def test_epsilon_monotone(rows, e1, e2):
    lo, hi = sorted((e1, e2))
    assert epsilon_neighborhood(rows, 0, lo) <= epsilon_neighborhood(rows, 0, hi)


@settings(max_examples=25, deadline=None)
@given(st.text(alphabet="ACGT", min_size=4, max_size=14))
def test_conservation_and_nonnegativity(s):
    ens = boltzmann_ensemble(s, mode="exhaustive")
    assert kmer_counts(s).total() == len(s) - 3
    for x, _, _ in ens.entries[:5]:
        g = build_graph(s, x)
        assert bag_of_faces(g).total() == len(x.pairs)
        assert bag_of_neighborhoods(g, radius=2).total() == len(s)
    counts = expected_counts(s, ens, NEIGHBORHOOD, radius=2)
    assert all(v >= 0 for v in counts.values())
    assert math.isclose(sum(counts.values()), len(s), rel_tol=1e-9)
