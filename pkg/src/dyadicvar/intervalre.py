"""Interval oracles: stage-indexed lower approximations to f(q) - f(p).

An oracle serves exact rational approximations ``approx(p, q, s)`` to
the increments of a nondecreasing function over dyadic pairs, monotone
in the stage ``s`` and additive over adjacent intervals at each stage.
Sources: a finite prefix-free machine (single stage, exact), a linear
function, the cdfs of a staged martingale, or an explicit increment
table. The converse direction reads a staged martingale off an oracle
via M_s(w) = 2^|w| * approx(0.w, 0.w + 2^-|w|, s).
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Mapping

from .dyadics import (
    ONE,
    ZERO,
    all_words,
    check_word,
    is_dyadic,
    parse_rat,
    rat_str,
    word_value,
    words_up_to,
)
from .errors import (
    ContractError,
    DepthError,
    MachineError,
    NonAdditiveOracleError,
    ParseError,
    StagingError,
)
from .martingale import MartingaleTable, StagedMartingale


class PrefixFreeMachine:
    """Finite map from binary programs to dyadic outputs in [0, 1)."""

    def __init__(self, table: Mapping[str, Fraction]):
        entries = {check_word(w): Fraction(v) for w, v in table.items()}
        for w, v in entries.items():
            if not (ZERO <= v < ONE and is_dyadic(v)):
                raise MachineError(f"output {v} at {w!r} is not a dyadic in [0, 1)")
        keys = sorted(entries)
        for a, b in zip(keys, keys[1:]):
            if b.startswith(a):
                raise MachineError(f"domain not prefix-free: {a!r} prefixes {b!r}")
        self.table = entries

    def halting_mass(self) -> Fraction:
        """Total measure of the domain; at most 1 by prefix-freeness."""
        return sum((Fraction(1, 1 << len(w)) for w in self.table), ZERO)

    def to_json(self) -> dict:
        return {w: rat_str(v) for w, v in sorted(self.table.items())}

    @classmethod
    def from_json(cls, obj) -> "PrefixFreeMachine":
        if not isinstance(obj, dict):
            raise ParseError("machine file must be a JSON object")
        return cls({w: parse_rat(v) for w, v in obj.items()})

    @classmethod
    def loads(cls, text: str) -> "PrefixFreeMachine":
        try:
            return cls.from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad machine file: {exc}") from None


def fs_eval(machine: PrefixFreeMachine, x) -> Fraction:
    """Probability that the machine prints a dyadic rational below x.

    Left-continuous and nondecreasing in x; the strict inequality
    ``output < x`` is what makes it left- rather than right-continuous.
    """
    x = Fraction(x)
    if not ZERO <= x <= ONE:
        raise ContractError(f"{x} outside [0, 1]")
    return sum(
        (Fraction(1, 1 << len(w)) for w, v in machine.table.items() if v < x),
        ZERO,
    )


class IntervalOracle:
    """Base: exact stage-indexed increment approximations on dyadic pairs."""

    stage_count: int = 1
    lipschitz: Fraction | None = None

    def approx(self, p: Fraction, q: Fraction, s: int) -> Fraction:
        raise NotImplementedError

    def _check_stage(self, s: int) -> None:
        if not 0 <= s < self.stage_count:
            raise StagingError(f"stage {s} out of range 0..{self.stage_count - 1}")


class LinearOracle(IntervalOracle):
    """Oracle of f(x) = c x: increments c (q - p), constant in the stage."""

    def __init__(self, c, stage_count: int = 1):
        self.c = Fraction(c)
        if self.c < 0:
            raise ContractError("slope must be nonnegative")
        self.stage_count = stage_count
        self.lipschitz = self.c

    def approx(self, p, q, s):
        self._check_stage(s)
        return self.c * (Fraction(q) - Fraction(p))


class MachineOracle(IntervalOracle):
    """Single-stage exact oracle of the machine's output distribution."""

    def __init__(self, machine: PrefixFreeMachine):
        self.machine = machine
        self.stage_count = 1
        self.lipschitz = None

    def approx(self, p, q, s):
        self._check_stage(s)
        return fs_eval(self.machine, q) - fs_eval(self.machine, p)


class StagedCdfOracle(IntervalOracle):
    """Increments of the stage cdfs of a monotone martingale family."""

    def __init__(self, staged: StagedMartingale, lipschitz=None):
        self.staged = staged
        self.stage_count = staged.stage_count
        self.lipschitz = None if lipschitz is None else Fraction(lipschitz)

    def approx(self, p, q, s):
        self._check_stage(s)
        st = self.staged.stage(s)
        return st.cdf(q) - st.cdf(p)


class IncrementOracle(IntervalOracle):
    """Explicit increments on basic dyadic intervals, per stage.

    ``entries[s][w]`` is the stage-s increment over [0.w, 0.w + 2^-|w|).
    General grid pairs are served by summing the canonical dyadic
    decomposition; additivity across levels is checked, not repaired.
    """

    def __init__(self, entries: list[dict[str, Fraction]], depth: int, lipschitz=None):
        self.entries = [
            {check_word(w): Fraction(v) for w, v in stage.items()} for stage in entries
        ]
        self.depth = depth
        self.stage_count = len(entries)
        self.lipschitz = None if lipschitz is None else Fraction(lipschitz)
        for s, stage in enumerate(self.entries):
            for w in words_up_to(depth):
                if w not in stage:
                    raise ParseError(f"stage {s} missing word {w!r}")

    def approx(self, p, q, s):
        self._check_stage(s)
        p, q = Fraction(p), Fraction(q)
        if p == q:
            return ZERO
        total = ZERO
        for w in _dyadic_cover(p, q, self.depth):
            total += self.entries[s][w]
        return total

    def to_jsonl(self) -> str:
        lines = []
        for s, stage in enumerate(self.entries):
            for w in sorted(stage, key=lambda w: (len(w), w)):
                lines.append(json.dumps({"word": w, "stage": s, "value": rat_str(stage[w])}))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str, lipschitz=None) -> "IncrementOracle":
        by_stage: dict[int, dict[str, Fraction]] = {}
        for ln, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {ln}: {exc}") from None
            if not {"word", "stage", "value"} <= rec.keys():
                raise ParseError(f"line {ln}: expected {{word, stage, value}}")
            by_stage.setdefault(rec["stage"], {})[rec["word"]] = parse_rat(rec["value"])
        if sorted(by_stage) != list(range(len(by_stage))):
            raise ParseError("stages must be 0..k without gaps")
        depth = max(len(w) for w in by_stage[0])
        return cls([by_stage[s] for s in sorted(by_stage)], depth, lipschitz)


def _dyadic_cover(p: Fraction, q: Fraction, depth: int) -> list[str]:
    """Maximal basic dyadic intervals tiling [p, q); endpoints at 2^-depth."""
    scale = 1 << depth
    lo, hi = p * scale, q * scale
    if lo.denominator != 1 or hi.denominator != 1:
        raise DepthError(f"pair ({p}, {q}) not on the level-{depth} grid")
    lo, hi = lo.numerator, hi.numerator
    words = []
    while lo < hi:
        size = (lo & -lo) if lo else 1 << (hi.bit_length() - 1)
        while size > hi - lo:
            size >>= 1
        level = depth - (size.bit_length() - 1)
        words.append(format(lo // size, f"0{level}b") if level else "")
        lo += size
    return words


def additivity_residuals(
    oracle: IntervalOracle, depth: int, stages: int | None = None
) -> list[tuple[int, str, Fraction]]:
    """Stage-wise residuals approx(p,r,s) + approx(r,q,s) - approx(p,q,s).

    Checked on every basic dyadic split down to ``depth``; the worst
    residual is the diagnostic for non-additive oracles.
    """
    stages = oracle.stage_count if stages is None else stages
    out = []
    for s in range(stages):
        for level in range(depth):
            for w in all_words(level):
                p, mid, q = (
                    word_value(w),
                    word_value(w + "1"),
                    word_value(w) + Fraction(1, 1 << level),
                )
                residual = (
                    oracle.approx(p, mid, s)
                    + oracle.approx(mid, q, s)
                    - oracle.approx(p, q, s)
                )
                if residual != 0:
                    out.append((s, w, residual))
    return out


def oracle_to_staged(oracle: IntervalOracle, depth: int, stages: int | None = None) -> StagedMartingale:
    """Read the staged martingale M_s(w) = 2^|w| approx(0.w, ..., s) off an oracle.

    Stage additivity is a hard precondition: a violation is reported
    with its worst residual, never redistributed.
    """
    stages = oracle.stage_count if stages is None else stages
    if depth < 1 or stages < 1:
        raise ContractError("need depth >= 1 and stages >= 1")
    residuals = additivity_residuals(oracle, depth, stages)
    if residuals:
        worst = max(residuals, key=lambda t: abs(t[2]))
        raise NonAdditiveOracleError(
            f"oracle not additive at stage {worst[0]}, word {worst[1]!r}"
            f" (worst residual {worst[2]}; {len(residuals)} violations)",
            worst_residual=worst[2],
        )
    tables = []
    for s in range(stages):
        vals = {}
        for w in words_up_to(depth):
            width = Fraction(1, 1 << len(w))
            lo = word_value(w)
            vals[w] = oracle.approx(lo, lo + width, s) / width
        tables.append(MartingaleTable(vals, depth))
    return StagedMartingale(tables)


def oracle_from_machine(machine: PrefixFreeMachine) -> MachineOracle:
    return MachineOracle(machine)


def parse_oracle_descriptor(desc: str, read_file) -> IntervalOracle:
    """Descriptors: ``linear:<c>``, ``machine:<file>``, ``table:<file>``."""
    kind, _, arg = desc.partition(":")
    if kind == "linear":
        return LinearOracle(parse_rat(arg))
    if kind == "machine":
        return MachineOracle(PrefixFreeMachine.loads(read_file(arg)))
    if kind == "table":
        return IncrementOracle.from_jsonl(read_file(arg))
    raise ParseError(f"unknown oracle descriptor {desc!r}")
