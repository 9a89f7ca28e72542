"""Martingale tables on the binary tree, their measures and cdfs.

A table assigns an exact rational to every word up to a declared depth
and satisfies the fair-split identity M(s0) + M(s1) = 2 M(s) exactly.
``signed`` tables drop the nonnegativity requirement. Partial tables
(``complete=False``) carry values only on a visited set of words, e.g.
along one branch plus siblings, and support the same cdf queries where
their entries suffice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping

from .dyadics import (
    ONE,
    ZERO,
    all_words,
    check_word,
    dyadic_level,
    is_dyadic,
    minimal_word,
    parse_rat,
    rat_str,
    words_up_to,
)
from .errors import (
    ContractError,
    DepthError,
    IncompleteTableError,
    InvalidBoundsError,
    ParseError,
    StagingError,
    UnfairTableError,
)
from .piecewise import PiecewiseFn


def fairness_violations(values: Mapping[str, Fraction]) -> list[tuple[str, Fraction]]:
    """Words where both children exist and the fair split fails, with residuals."""
    out = []
    for word, v in values.items():
        c0, c1 = word + "0", word + "1"
        if c0 in values and c1 in values:
            residual = values[c0] + values[c1] - 2 * v
            if residual != 0:
                out.append((word, residual))
    return out


class MartingaleTable:
    """Depth-bounded fair table; the builder rejects unfair input."""

    signed = False

    def __init__(
        self,
        values: Mapping[str, Fraction],
        depth: int | None = None,
        *,
        complete: bool = True,
        check: bool = True,
    ):
        vals = {check_word(w): Fraction(v) for w, v in values.items()}
        if depth is None:
            depth = max((len(w) for w in vals), default=0)
        self.depth = depth
        self.values = vals
        self.complete = complete
        if check:
            self.validate()

    def validate(self) -> None:
        if self.complete:
            want = (1 << (self.depth + 1)) - 1
            if len(self.values) != want or any(len(w) > self.depth for w in self.values):
                raise IncompleteTableError(
                    f"table must hold all {want} words up to depth {self.depth}"
                )
        if not self.signed:
            bad = [(w, v) for w, v in self.values.items() if v < 0]
            if bad:
                raise ContractError(f"negative value at {bad[0][0]!r}: {bad[0][1]}")
        bad = fairness_violations(self.values)
        if bad:
            raise UnfairTableError(bad)

    @classmethod
    def from_function(cls, fn: Callable[[str], Fraction], depth: int) -> "MartingaleTable":
        return cls({w: fn(w) for w in words_up_to(depth)}, depth)

    def value(self, word: str) -> Fraction:
        try:
            return self.values[word]
        except KeyError:
            raise DepthError(f"word {word!r} not covered by table") from None

    def words(self, level: int | None = None) -> Iterator[str]:
        if level is None:
            yield from self.values
        else:
            if level > self.depth:
                raise DepthError(f"level {level} exceeds depth {self.depth}")
            if self.complete:
                yield from all_words(level)
            else:
                yield from (w for w in self.values if len(w) == level)

    def check_fairness(self) -> list[tuple[str, Fraction]]:
        """Re-check on demand; empty list iff fair everywhere."""
        return fairness_violations(self.values)

    def measure(self, word: str) -> Fraction:
        """Mass of the dyadic interval of ``word``: M(w) * 2^-|w|."""
        return self.value(word) / (1 << len(word))

    def cdf(self, x) -> Fraction:
        """Measure of [0, x) for dyadic x resolving within the depth.

        Sums the left-sibling masses along the binary expansion of x, so
        partial tables covering one branch plus siblings suffice.
        """
        x = Fraction(x)
        if not ZERO <= x <= ONE:
            raise DepthError(f"{x} outside [0, 1]")
        if x == ONE:
            return self.value("")
        if not is_dyadic(x) or dyadic_level(x) > self.depth:
            raise DepthError(f"resolution of {x} exceeds table depth {self.depth}")
        word = minimal_word(x)
        total = ZERO
        for i, bit in enumerate(word):
            if bit == "1":
                total += self.value(word[:i] + "0") / (1 << (i + 1))
        return total

    def cdf_fn(self) -> Callable[[Fraction], Fraction]:
        return self.cdf

    def cdf_piecewise(self) -> PiecewiseFn:
        """The cdf as an exact piecewise-linear function at full depth."""
        if not self.complete:
            raise IncompleteTableError("piecewise cdf needs a complete table")
        n = self.depth
        step = Fraction(1, 1 << n)
        vals = [ZERO]
        bps = [ZERO]
        for w in all_words(n):
            vals.append(vals[-1] + self.measure(w))
            bps.append(bps[-1] + step)
        return PiecewiseFn.linear(bps, vals)

    def __eq__(self, other):
        return (
            isinstance(other, MartingaleTable)
            and self.signed == other.signed
            and self.depth == other.depth
            and self.values == other.values
        )

    def __hash__(self):
        return hash((self.signed, self.depth, tuple(sorted(self.values.items()))))

    def __repr__(self):
        kind = "signed " if self.signed else ""
        return f"<{kind}table depth {self.depth}, {len(self.values)} words>"

    def to_jsonl(self, stage: int | None = None) -> str:
        lines = []
        for w in sorted(self.values, key=lambda w: (len(w), w)):
            rec = {"word": w, "value": rat_str(self.values[w])}
            if stage is not None:
                rec["stage"] = stage
            lines.append(json.dumps(rec))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "MartingaleTable":
        vals = {}
        for ln, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            rec = _parse_record(line, ln)
            if "stage" in rec:
                raise ParseError(f"line {ln}: staged record in a plain table file")
            vals[check_word(rec["word"])] = parse_rat(rec["value"])
        return cls(vals)


class SignedMartingaleTable(MartingaleTable):
    """Fair table with values of either sign."""

    signed = True


def _parse_record(line: str, ln: int) -> dict:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {ln}: {exc}") from None
    if not isinstance(rec, dict) or "word" not in rec or "value" not in rec:
        raise ParseError(f"line {ln}: expected {{word, value}} record")
    return rec


def check_fairness(table: MartingaleTable) -> list[tuple[str, Fraction]]:
    return table.check_fairness()


def measure_of_word(table: MartingaleTable, word: str) -> Fraction:
    return table.measure(word)


def cdf_at_dyadic(table: MartingaleTable, x) -> Fraction:
    return table.cdf(x)


@dataclass(frozen=True)
class ValueBounds:
    """Claimed global bounds c <= M(w) <= d for a table."""

    lower: Fraction
    upper: Fraction

    def __post_init__(self):
        if not (0 <= self.lower < self.upper):
            raise ContractError(f"need 0 <= c < d, got c={self.lower}, d={self.upper}")

    def violations(self, table: MartingaleTable) -> list[tuple[str, Fraction]]:
        return [
            (w, v)
            for w, v in table.values.items()
            if not self.lower <= v <= self.upper
        ]


@dataclass(frozen=True)
class Enclosure:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ContractError(f"empty enclosure [{self.lo}, {self.hi}]")

    def contains(self, value: Fraction) -> bool:
        return self.lo <= value <= self.hi

    def contains_interval(self, lo: Fraction, hi: Fraction) -> bool:
        return self.lo <= lo and hi <= self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo


def dyadic_bracket(table: MartingaleTable, x: Fraction, y: Fraction) -> tuple[Fraction, Fraction]:
    """[lo, hi] bracketing the measure of [x, y) from depth-level cells."""
    n = table.depth
    scale = 1 << n
    i = (x * scale).__floor__()
    j = -((-y * scale).__floor__())  # ceil
    lo = ZERO
    if i + 1 <= j - 1:
        lo = table.cdf(Fraction(j - 1, scale)) - table.cdf(Fraction(i + 1, scale))
    hi = table.cdf(Fraction(min(j, scale), scale)) - table.cdf(Fraction(i, scale))
    return lo, hi


def cdf_enclosure(table: MartingaleTable, bounds: ValueBounds, x, y) -> Enclosure:
    """Valid enclosure of cdf(M)(y) - cdf(M)(x) for rationals 0 <= x < y <= 1.

    Intersects the bound band [c(y-x), d(y-x)] with the dyadic bracket
    read off the table; the table is verified against the bounds first.
    """
    x, y = Fraction(x), Fraction(y)
    if not ZERO <= x < y <= ONE:
        raise ContractError(f"need 0 <= x < y <= 1, got {x}, {y}")
    bad = bounds.violations(table)
    if bad:
        raise InvalidBoundsError(
            f"table violates [{bounds.lower}, {bounds.upper}] at {bad[0][0]!r} = {bad[0][1]}"
        )
    band_lo, band_hi = bounds.lower * (y - x), bounds.upper * (y - x)
    brk_lo, brk_hi = dyadic_bracket(table, x, y)
    return Enclosure(max(band_lo, brk_lo), min(band_hi, brk_hi))


def level_variation(table: MartingaleTable, word: str, level: int) -> Fraction:
    """Average of |M| over the level-``level`` descendants of ``word``."""
    a = len(word)
    if not a <= level <= table.depth:
        raise DepthError(f"need |word| <= level <= depth, got {a}, {level}, {table.depth}")
    rel = level - a
    total = sum((abs(table.value(word + eta)) for eta in all_words(rel)), ZERO)
    return total / (1 << rel)


def variation_lower_bound(table: MartingaleTable, word: str) -> Fraction:
    """Deepest-level variation average: a certified lower bound of the sup."""
    return level_variation(table, word, table.depth)


class StagedMartingale:
    """Monotone family of fair tables sharing one depth (append-only)."""

    def __init__(self, stages: Iterable[MartingaleTable]):
        stages = tuple(stages)
        if not stages:
            raise StagingError("need at least one stage")
        depth = stages[0].depth
        for i, st in enumerate(stages):
            if st.depth != depth:
                raise StagingError(f"stage {i} depth {st.depth} != {depth}")
            if st.signed:
                raise StagingError("stages must be plain (nonnegative) tables")
        for i in range(len(stages) - 1):
            for w, v in stages[i].values.items():
                if stages[i + 1].values[w] < v:
                    raise StagingError(
                        f"stage {i + 1} drops below stage {i} at {w!r}"
                    )
        self.stages = stages
        self.depth = depth

    @property
    def stage_count(self) -> int:
        return len(self.stages)

    def stage(self, s: int) -> MartingaleTable:
        if not 0 <= s < len(self.stages):
            raise StagingError(f"stage {s} out of range")
        return self.stages[s]

    def sup_value(self, word: str) -> Fraction:
        """Best available lower approximation: the last stage's value."""
        return self.stages[-1].value(word)

    def appended(self, stage: MartingaleTable) -> "StagedMartingale":
        return StagedMartingale(self.stages + (stage,))

    def to_jsonl(self) -> str:
        return "".join(st.to_jsonl(stage=s) for s, st in enumerate(self.stages))

    @classmethod
    def from_jsonl(cls, text: str) -> "StagedMartingale":
        by_stage: dict[int, dict[str, Fraction]] = {}
        for ln, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            rec = _parse_record(line, ln)
            if "stage" not in rec:
                raise ParseError(f"line {ln}: staged file needs a stage field")
            s = rec["stage"]
            if not isinstance(s, int) or s < 0:
                raise ParseError(f"line {ln}: bad stage {s!r}")
            by_stage.setdefault(s, {})[check_word(rec["word"])] = parse_rat(rec["value"])
        if sorted(by_stage) != list(range(len(by_stage))):
            raise ParseError(f"stages must be 0..{len(by_stage) - 1} without gaps")
        return cls(MartingaleTable(by_stage[s]) for s in sorted(by_stage))


def sup_stages(staged: StagedMartingale, word: str) -> Fraction:
    return staged.sup_value(word)


def zero_table(depth: int) -> MartingaleTable:
    return MartingaleTable.from_function(lambda w: ZERO, depth)


def constant_table(value, depth: int) -> MartingaleTable:
    v = Fraction(value)
    return MartingaleTable.from_function(lambda w: v, depth)
