"""Shared sequence/structure types and exceptions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence as _Seq

ALPHABET = frozenset("ACGT")


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class ParseError(ValidationError):
    """A text record could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Sequence:
    bases: str
    id: str = ""

    def __post_init__(self):
        bases = self.bases.upper()
        if not bases:
            raise ValidationError("sequence is empty")
        for pos, b in enumerate(bases, start=1):
            if b not in ALPHABET:
                raise ValidationError(f"invalid base {b!r} at position {pos} in sequence {self.bases!r}")
        object.__setattr__(self, "bases", bases)

    def __len__(self) -> int:
        return len(self.bases)

    def __getitem__(self, idx):
        return self.bases[idx]

    def __str__(self) -> str:
        return self.bases


def as_sequence(seq) -> Sequence:
    return seq if isinstance(seq, Sequence) else Sequence(str(seq))


@dataclass(frozen=True, order=True)
class SecondaryStructure:
    """A non-crossing partial matching over positions ``1..length``.

    ``pairs`` holds 1-based ``(i, j)`` tuples with ``i < j``, sorted by
    opening position. Validity against a sequence (pairing rules, hairpin
    gap) is checked separately by :meth:`validate`.
    """

    length: int
    pairs: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        pairs = tuple(sorted((min(p), max(p)) for p in self.pairs))
        object.__setattr__(self, "pairs", pairs)
        seen = set()
        for i, j in pairs:
            if not 1 <= i < j <= self.length:
                raise ValidationError(f"pair ({i}, {j}) out of range for length {self.length}")
            if i in seen or j in seen:
                raise ValidationError(f"position reused by pair ({i}, {j})")
            seen.update((i, j))
        stack: list[int] = []
        table = self.pair_table
        for pos in range(1, self.length + 1):
            partner = table[pos - 1]
            if partner > pos:
                stack.append(pos)
            elif partner and partner < pos:
                if not stack or stack.pop() != partner:
                    raise ValidationError("pairs cross; pseudoknots are not representable")

    @classmethod
    def _trusted(cls, length: int, pairs: tuple) -> "SecondaryStructure":
        """Skip validation for pair tuples produced sorted and well-formed internally."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "length", length)
        object.__setattr__(obj, "pairs", pairs)
        return obj

    @classmethod
    def empty(cls, length: int) -> "SecondaryStructure":
        return cls(length, ())

    @classmethod
    def from_dotbracket(cls, db: str) -> "SecondaryStructure":
        stack: list[int] = []
        pairs = []
        for pos, ch in enumerate(db, start=1):
            if ch == "(":
                stack.append(pos)
            elif ch == ")":
                if not stack:
                    raise ValidationError(f"unbalanced ')' at position {pos}")
                pairs.append((stack.pop(), pos))
            elif ch != ".":
                raise ValidationError(f"invalid dot-bracket character {ch!r} at position {pos}")
        if stack:
            raise ValidationError(f"unbalanced '(' at position {stack[-1]}")
        return cls(len(db), tuple(pairs))

    @classmethod
    def from_pair_table(cls, table: _Seq[int]) -> "SecondaryStructure":
        pairs = []
        for pos, partner in enumerate(table, start=1):
            if partner and table[partner - 1] != pos:
                raise ValidationError(f"asymmetric pair table at position {pos}")
            if partner > pos:
                pairs.append((pos, partner))
        return cls(len(table), tuple(pairs))

    @property
    def pair_table(self) -> list[int]:
        """Partner per position (1-based), 0 when unpaired."""
        table = [0] * self.length
        for i, j in self.pairs:
            table[i - 1] = j
            table[j - 1] = i
        return table

    @property
    def dotbracket(self) -> str:
        chars = ["."] * self.length
        for i, j in self.pairs:
            chars[i - 1] = "("
            chars[j - 1] = ")"
        return "".join(chars)

    def __str__(self) -> str:
        return self.dotbracket

    def validate(self, seq: Sequence, allowed_pairs: Iterable[frozenset], min_hairpin: int) -> None:
        if len(seq) != self.length:
            raise ValidationError(f"structure length {self.length} != sequence length {len(seq)}")
        allowed = set(allowed_pairs)
        for i, j in self.pairs:
            if j - i - 1 < min_hairpin:
                raise ValidationError(f"pair ({i}, {j}) encloses fewer than {min_hairpin} unpaired bases")
            if frozenset((seq[i - 1], seq[j - 1])) not in allowed:
                raise ValidationError(f"pair ({i}, {j}) {seq[i - 1]}-{seq[j - 1]} is not an allowed pair")
