"""Additive face-energy parameters and the per-face energy function."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Mapping

from .core import ParseError, ValidationError

PARAMS_ENV = "BOLTZFOLD_PARAMS"

StackKey = tuple[str, str, str, str]


def _pair(xy: str) -> frozenset:
    return frozenset(xy.upper())


def _default_stacks(allowed: frozenset) -> dict[StackKey, float]:
    oriented = [(a, b) for a, b in product("ACGT", repeat=2) if frozenset((a, b)) in allowed]
    stacks = {}
    for (a, b), (c, d) in product(oriented, repeat=2):
        wobble = {a, b} == {"G", "T"} or {c, d} == {"G", "T"}
        stacks[(a, b, c, d)] = -1.0 if wobble else -2.0
    return stacks


TOY_ALLOWED = frozenset({_pair("AT"), _pair("CG"), _pair("GT")})


@dataclass(frozen=True)
class EnergyParameters:
    """Affine loop penalties plus a nearest-neighbour stack table (kcal/mol).

    Stack keys are ``(closing_5', closing_3', inner_5', inner_3')``: the
    closing pair ``(s_i, s_j)`` followed by the enclosed pair
    ``(s_{i+1}, s_{j-1})``.
    """

    stack_table: Mapping[StackKey, float] = field(default_factory=lambda: _default_stacks(TOY_ALLOWED))
    hairpin_base: float = 3.0
    hairpin_per_nt: float = 0.5
    bulge_base: float = 4.0
    bulge_per_nt: float = 0.3
    internal_base: float = 4.5
    internal_per_nt: float = 0.3
    multibranch_offset_a: float = 3.4
    multibranch_per_branch_b: float = 0.4
    multibranch_per_unpaired_c: float = 0.0
    min_hairpin_unpaired: int = 3
    allowed_pairs: frozenset = TOY_ALLOWED

    def __post_init__(self):
        if self.min_hairpin_unpaired < 1:
            raise ValidationError("min_hairpin_unpaired must be >= 1")
        if not self.allowed_pairs:
            raise ValidationError("allowed_pairs is empty")
        for name in ("hairpin_base", "hairpin_per_nt", "bulge_base", "bulge_per_nt", "internal_base",
                     "internal_per_nt", "multibranch_offset_a", "multibranch_per_branch_b",
                     "multibranch_per_unpaired_c"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} is not finite")
        for key, value in self.stack_table.items():
            if frozenset(key[:2]) not in self.allowed_pairs or frozenset(key[2:]) not in self.allowed_pairs:
                raise ValidationError(f"stack {''.join(key[:2])}/{''.join(key[2:])} uses a disallowed pair")
            if not math.isfinite(value):
                raise ValidationError(f"stack {''.join(key[:2])}/{''.join(key[2:])} energy is not finite")
        object.__setattr__(self, "stack_table", dict(self.stack_table))

    def can_pair(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.allowed_pairs

    def stack(self, a: str, b: str, c: str, d: str) -> float:
        """Energy of closing pair ``a-b`` stacked on inner pair ``c-d``."""
        table = self.stack_table
        if (a, b, c, d) in table:
            return table[(a, b, c, d)]
        # same stack read from the opposite strand
        if (d, c, b, a) in table:
            return table[(d, c, b, a)]
        raise KeyError(f"no stack energy for {a}{b}/{c}{d}")

    def hairpin(self, loop_len: int) -> float:
        return self.hairpin_base + self.hairpin_per_nt * (loop_len - self.min_hairpin_unpaired)

    def bulge(self, bulge_len: int) -> float:
        return self.bulge_base + self.bulge_per_nt * bulge_len

    def internal(self, left: int, right: int) -> float:
        return self.internal_base + self.internal_per_nt * (left + right)

    def multibranch(self, branches: int, unpaired: int) -> float:
        return (self.multibranch_offset_a + self.multibranch_per_branch_b * branches
                + self.multibranch_per_unpaired_c * unpaired)

    def interior(self, a: str, b: str, c: str, d: str, left: int, right: int) -> float:
        """Two-pair loop closed by ``a-b`` enclosing ``c-d`` with the given gaps."""
        if left == 0 and right == 0:
            return self.stack(a, b, c, d)
        if left == 0 or right == 0:
            return self.bulge(left + right)
        return self.internal(left, right)


TOYPARAMS = EnergyParameters()


@dataclass(frozen=True)
class Thermo:
    temperature_kelvin: float = 310.15
    boltzmann_constant: float = 1.98e-3

    def __post_init__(self):
        if not self.temperature_kelvin > 0:
            raise ValidationError("temperature must be positive")
        if not self.boltzmann_constant > 0:
            raise ValidationError("Boltzmann constant must be positive")

    @property
    def kT(self) -> float:
        return self.boltzmann_constant * self.temperature_kelvin

    @property
    def beta(self) -> float:
        return 1.0 / self.kT


_SCALARS = {
    "HAIRPIN_BASE": "hairpin_base",
    "HAIRPIN_PER_NT": "hairpin_per_nt",
    "BULGE_BASE": "bulge_base",
    "BULGE_PER_NT": "bulge_per_nt",
    "INTERNAL_BASE": "internal_base",
    "INTERNAL_PER_NT": "internal_per_nt",
    "MULTI_A": "multibranch_offset_a",
    "MULTI_B": "multibranch_per_branch_b",
    "MULTI_C": "multibranch_per_unpaired_c",
}


def _parse_pair(token: str, lineno: int) -> tuple[str, str]:
    token = token.upper()
    if len(token) != 2 or any(ch not in "ACGT" for ch in token):
        raise ParseError(f"bad pair {token!r}", lineno)
    return token[0], token[1]


def _parse_float(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"bad energy value {token!r}", lineno) from None


def parse_parameters(text: str) -> EnergyParameters:
    scalars: dict[str, float] = {}
    stacks: dict[StackKey, float] = {}
    pairs: set[frozenset] = set()
    min_hairpin = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t") if "\t" in line else line.split()
        kind = fields[0].upper()
        if kind == "STACK":
            if len(fields) != 4:
                raise ParseError("STACK needs <pair> <pair> <kcal/mol>", lineno)
            outer = _parse_pair(fields[1], lineno)
            inner = _parse_pair(fields[2], lineno)
            stacks[outer + inner] = _parse_float(fields[3], lineno)
        elif kind in _SCALARS:
            if len(fields) != 2:
                raise ParseError(f"{kind} needs one value", lineno)
            scalars[_SCALARS[kind]] = _parse_float(fields[1], lineno)
        elif kind == "MIN_HAIRPIN":
            if len(fields) != 2:
                raise ParseError("MIN_HAIRPIN needs one value", lineno)
            try:
                min_hairpin = int(fields[1])
            except ValueError:
                raise ParseError(f"bad integer {fields[1]!r}", lineno) from None
        elif kind == "PAIR":
            if len(fields) != 2:
                raise ParseError("PAIR needs one <XY> token", lineno)
            pairs.add(frozenset(_parse_pair(fields[1], lineno)))
        else:
            raise ParseError(f"unknown record kind {fields[0]!r}", lineno)

    allowed = frozenset(pairs) if pairs else TOY_ALLOWED
    table = _default_stacks(allowed)
    table.update(stacks)
    kwargs: dict = dict(scalars, stack_table=table, allowed_pairs=allowed)
    if min_hairpin is not None:
        kwargs["min_hairpin_unpaired"] = min_hairpin
    return EnergyParameters(**kwargs)


def load_parameters(path: str | os.PathLike | None = None) -> EnergyParameters:
    """Read a parameter TSV; unspecified entries keep their TOYPARAMS value.

    With ``path=None`` the ``BOLTZFOLD_PARAMS`` environment variable is
    consulted, and TOYPARAMS is returned when it is unset.
    """
    if path is None:
        path = os.environ.get(PARAMS_ENV)
        if not path:
            return TOYPARAMS
    return parse_parameters(Path(path).read_text())


def dump_parameters(params: EnergyParameters) -> str:
    lines = ["# boltzfold energy parameters (kcal/mol)"]
    for pair in sorted("".join(sorted(p)) for p in params.allowed_pairs):
        lines.append(f"PAIR\t{pair}")
    for tag, attr in _SCALARS.items():
        lines.append(f"{tag}\t{getattr(params, attr)!r}")
    lines.append(f"MIN_HAIRPIN\t{params.min_hairpin_unpaired}")
    for key in sorted(params.stack_table):
        lines.append(f"STACK\t{key[0]}{key[1]}\t{key[2]}{key[3]}\t{params.stack_table[key]!r}")
    return "\n".join(lines) + "\n"


def face_energy(face, sequence, params: EnergyParameters) -> float:
    """Energy of one interior face (any object shaped like ``structure_graph.Face``)."""
    seq = str(sequence)
    i, j = face.defining_pair
    kind = face.face_type
    if kind == "HAIRPIN":
        return params.hairpin(j - i - 1)
    if kind == "STACK":
        k, l = face.nested_pairs[0]
        return params.stack(seq[i - 1], seq[j - 1], seq[k - 1], seq[l - 1])
    if kind == "BULGE":
        return params.bulge(sum(face.unpaired_lengths))
    if kind == "INTERNAL":
        left, right = face.unpaired_lengths
        return params.internal(left, right)
    if kind == "MULTIBRANCH":
        return params.multibranch(len(face.nested_pairs) + 1, sum(face.unpaired_lengths))
    raise ValueError(f"unknown face type {kind!r}")
