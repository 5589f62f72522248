import pytest
from hypothesis import given, strategies as st

from boltzfold import ParseError, SecondaryStructure, Sequence, ValidationError


def test_sequence_uppercases_and_rejects_bad_bases():
    assert Sequence("ggga").bases == "GGGA"
    with pytest.raises(ValidationError, match="'X' at position 3"):
        Sequence("GGXA")
    with pytest.raises(ValidationError):
        Sequence("")


def test_dotbracket_round_trip_and_pair_table():
    s = SecondaryStructure.from_dotbracket("((..((...))..))")
    assert s.pairs == ((1, 15), (2, 14), (5, 11), (6, 10))
    assert s.dotbracket == "((..((...))..))"
    assert SecondaryStructure.from_pair_table(s.pair_table) == s
    assert s.pair_table[0] == 15 and s.pair_table[2] == 0


@pytest.mark.parametrize("db", ["(()", "())", "(.x)"])
def test_bad_dotbracket(db):
    with pytest.raises(ValidationError):
        SecondaryStructure.from_dotbracket(db)


def test_crossing_and_reuse_rejected():
    with pytest.raises(ValidationError, match="cross"):
        SecondaryStructure(8, ((1, 5), (3, 7)))
    with pytest.raises(ValidationError, match="reused"):
        SecondaryStructure(8, ((1, 5), (5, 8)))
    with pytest.raises(ValidationError, match="range"):
        SecondaryStructure(4, ((1, 5),))


def test_validate_against_sequence():
    s = SecondaryStructure.from_dotbracket("(((...)))")
    s.validate(Sequence("GGGAAACCC"), [frozenset("GC")], 3)
    with pytest.raises(ValidationError, match="fewer than"):
        SecondaryStructure.from_dotbracket("((.))").validate(Sequence("GGACC"), [frozenset("GC")], 3)
    with pytest.raises(ValidationError, match="not an allowed pair"):
        s.validate(Sequence("GGAAAACCC"), [frozenset("GC")], 3)


def test_parse_error_carries_line():
    err = ParseError("bad", 7)
    assert err.line == 7 and str(err) == "line 7: bad"


@st.composite
def dotbrackets(draw, max_pairs=8):
    out = ""
    for _ in range(draw(st.integers(0, max_pairs))):
        inner = draw(st.sampled_from(["", ".", "..."]))
        out = draw(st.sampled_from([f"({out}{inner})", f"{out}({inner})", f".{out}"]))
    return out or "."


@given(dotbrackets())
def test_dotbracket_pair_table_inverse(db):
    s = SecondaryStructure.from_dotbracket(db)
    assert s.dotbracket == db
    assert SecondaryStructure.from_pair_table(s.pair_table) == s
