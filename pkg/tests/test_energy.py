import math

import pytest

from boltzfold import TOYPARAMS, EnergyParameters, ParseError, Thermo, ValidationError, load_parameters, \
    parse_parameters
from boltzfold.energy import dump_parameters, face_energy
from boltzfold.structure_graph import Face


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.tsv"
    p.write_text("")
    assert load_parameters(p) == TOYPARAMS


def test_stack_line_maps_to_table():
    params = parse_parameters("STACK GC CG -2.0\n")
    assert params.stack_table[("G", "C", "C", "G")] == -2.0
    params = parse_parameters("STACK\tGC\tCG\t-3.25\n")
    assert params.stack("G", "C", "C", "G") == -3.25


def test_parse_error_has_line_number():
    with pytest.raises(ParseError) as exc:
        parse_parameters("# header\nHAIRPIN_BASE 3.0\nHAIRPIN_BASE abc\n")
    assert exc.value.line == 3


@pytest.mark.parametrize("text", ["BOGUS 1.0", "STACK GC 1.0", "PAIR GX", "MIN_HAIRPIN x"])
def test_malformed_records(text):
    with pytest.raises(ParseError):
        parse_parameters(text)


def test_non_finite_rejected():
    with pytest.raises(ValidationError):
        parse_parameters("HAIRPIN_BASE inf\n")
    with pytest.raises(ValidationError):
        EnergyParameters(min_hairpin_unpaired=0)


def test_stack_on_disallowed_pair_rejected():
    with pytest.raises(ValidationError, match="disallowed"):
        parse_parameters("PAIR GC\nSTACK GC AT -1.0\n")


def test_env_var(tmp_path, monkeypatch):
    p = tmp_path / "p.tsv"
    p.write_text("HAIRPIN_BASE 9.0\n")
    monkeypatch.setenv("BOLTZFOLD_PARAMS", str(p))
    assert load_parameters().hairpin_base == 9.0
    monkeypatch.delenv("BOLTZFOLD_PARAMS")
    assert load_parameters() is TOYPARAMS


def test_dump_round_trip():
    assert parse_parameters(dump_parameters(TOYPARAMS)) == TOYPARAMS


def test_thermo():
    th = Thermo()
    assert th.beta == pytest.approx(1 / (1.98e-3 * 310.15), rel=1e-15)
    with pytest.raises(ValidationError):
        Thermo(0.0)


def _face(kind, pair, nested=(), lengths=()):
    return Face(kind, pair, nested, lengths, 0.0, "")


def test_face_energy_formulas():
    seq = "GGGAAACCC"
    assert face_energy(_face("HAIRPIN", (3, 7), (), (3,)), seq, TOYPARAMS) == 3.0
    assert face_energy(_face("STACK", (1, 9), ((2, 8),), (0, 0)), seq, TOYPARAMS) == -2.0
    assert face_energy(_face("BULGE", (1, 9), ((3, 8),), (1, 0)), seq, TOYPARAMS) == pytest.approx(4.3)
    assert face_energy(_face("INTERNAL", (1, 9), ((3, 7),), (1, 1)), seq, TOYPARAMS) == pytest.approx(5.1)
    # closing pair counts as a branch: 3.4 + 0.4 * 3 + 0.0 * 2
    mb = _face("MULTIBRANCH", (1, 20), ((2, 8), (10, 18)), (0, 1, 1))
    assert face_energy(mb, "G" * 20, TOYPARAMS) == pytest.approx(4.6)


def test_wobble_stack_and_missing_key():
    assert TOYPARAMS.stack("G", "T", "G", "C") == -1.0
    sparse = EnergyParameters(stack_table={("G", "C", "G", "C"): -2.0})
    with pytest.raises(KeyError):
        sparse.stack("A", "T", "A", "T")


def test_hairpin_affine():
    for L in range(3, 12):
        assert math.isclose(TOYPARAMS.hairpin(L), 3.0 + 0.5 * (L - 3))
