"""Savings transform and the threshold-switching bounded martingale.

Given a fair nonnegative martingale M with the savings property
(a capital drop of at most 1 along any extension), the builder produces
a fair martingale B that starts at 2 in the "up" phase, adds M's
winnings until hitting 3 (switch to "down"), subtracts them until
hitting 2 (switch back), and always stays within [1, 4]. Its cdf is a
Lipschitz function whose basic dyadic slopes along a path equal B, so
phase switches along a branch certify slope oscillation between 2 and 3.

Tables can be built exhaustively to a depth, or along a single target
branch (values kept for the branch and its siblings only), which keeps
depth-60 runs cheap while still supporting cdf queries near the branch.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .dyadics import ZERO, all_words, check_word
from .errors import ContractError, ParameterError, PreconditionError
from .martingale import MartingaleTable

UP = "up"
DOWN = "down"

TWO = Fraction(2)
THREE = Fraction(3)

Strategy = Callable[[str], Fraction]


def constant_strategy(value) -> Strategy:
    """Never bets; capital is flat."""
    v = Fraction(value)
    if v < 0:
        raise ParameterError("capital must be nonnegative")
    return lambda word: v


def double_on_bit(bit: int, initial=1) -> Strategy:
    """Stakes everything on the next bit being ``bit`` at every step."""
    if bit not in (0, 1):
        raise ParameterError("bit must be 0 or 1")
    v0 = Fraction(initial)

    def value(word: str) -> Fraction:
        v = v0
        for c in word:
            v = 2 * v if int(c) == bit else ZERO
        return v

    return value


def double_on_pattern(pattern: str, initial=1) -> Strategy:
    """Stakes everything on the next bit following a repeating pattern."""
    check_word(pattern)
    if not pattern:
        raise ParameterError("pattern must be nonempty")
    v0 = Fraction(initial)

    def value(word: str) -> Fraction:
        v = v0
        for i, c in enumerate(word):
            v = 2 * v if c == pattern[i % len(pattern)] else ZERO
        return v

    return value


STRATEGIES: dict[str, Strategy] = {
    "constant": constant_strategy(2),
    "double-on-0": double_on_bit(0),
    "double-on-1": double_on_bit(1),
}


def named_strategy(name: str) -> Strategy:
    if name in STRATEGIES:
        return STRATEGIES[name]
    if name.startswith("double-on-pattern:"):
        return double_on_pattern(name.split(":", 1)[1])
    raise ParameterError(f"unknown strategy {name!r}")


def strategy_table(strategy: Strategy, depth: int) -> MartingaleTable:
    return MartingaleTable.from_function(strategy, depth)


def _savings_step(save: Fraction, active: Fraction) -> tuple[Fraction, Fraction]:
    if active >= TWO:
        return save + active - 1, Fraction(1)
    return save, active


def savings_fn(strategy: Strategy) -> Strategy:
    """Savings transform of a capital function, evaluated by path walk.

    The capital is split into a locked ``save`` part and an ``active``
    part betting proportionally as the input; whenever the active part
    reaches 2 the excess above 1 is locked. The result is halved so any
    later drop is at most 1.
    """
    cache: dict[str, tuple[Fraction, Fraction]] = {}

    def parts(word: str) -> tuple[Fraction, Fraction]:
        if word in cache:
            return cache[word]
        if word == "":
            state = _savings_step(ZERO, strategy(""))
        else:
            save, active = parts(word[:-1])
            prev, cur = strategy(word[:-1]), strategy(word)
            ratio = cur / prev if prev != 0 else Fraction(1)
            state = _savings_step(save, active * ratio)
        cache[word] = state
        return state

    def value(word: str) -> Fraction:
        save, active = parts(word)
        return (save + active) / 2

    return value


def savings_transform(table: MartingaleTable) -> MartingaleTable:
    """Savings transform of a complete fair table (exhaustive)."""
    src = table.value
    out = savings_fn(src)
    return MartingaleTable.from_function(out, table.depth)


def min_descendant_drop(table: MartingaleTable) -> Fraction:
    """min over pairs (w, extension e) of M(we) - M(w); >= -1 iff savings."""
    floor: dict[str, Fraction] = {}
    for level in range(table.depth, -1, -1):
        for w in all_words(level):
            v = table.value(w)
            if level == table.depth:
                floor[w] = v
            else:
                floor[w] = min(v, floor[w + "0"], floor[w + "1"])
    worst = ZERO
    for w, v in table.values.items():
        worst = min(worst, floor[w] - v)
    return worst


def _check_savings_near_path(values: dict[str, Fraction], path: str) -> None:
    """Drop bound M(we) >= M(w) - 1 over all visited ancestor/descendant pairs."""
    running_max = values[""]
    for i in range(len(path)):
        for b in "01":
            v = values[path[:i] + b]
            if v < running_max - 1:
                raise PreconditionError(
                    f"savings property fails at {path[:i] + b!r}: "
                    f"drop {v - running_max} below -1"
                )
        running_max = max(running_max, values[path[: i + 1]])


@dataclass
class PhaseTable:
    """Threshold martingale values and phases; complete or branch-only."""

    values: dict[str, Fraction]
    phases: dict[str, str]
    depth: int
    complete: bool

    def value(self, word: str) -> Fraction:
        try:
            return self.values[word]
        except KeyError:
            raise ContractError(f"word {word!r} not covered") from None

    def phase(self, word: str) -> str:
        return self.phases[word]

    def as_table(self) -> MartingaleTable:
        return MartingaleTable(self.values, self.depth, complete=self.complete)

    def cdf(self, x) -> Fraction:
        return self.as_table().cdf(x)

    def phase_violations(self) -> list[tuple[str, str, Fraction]]:
        """Words violating up => B < 3, down => B > 2, or 1 <= B <= 4."""
        bad = []
        for w, v in self.values.items():
            ph = self.phases[w]
            if ph == UP and not v < THREE:
                bad.append((w, "up-but-not-below-3", v))
            if ph == DOWN and not v > TWO:
                bad.append((w, "down-but-not-above-2", v))
            if not Fraction(1) <= v <= Fraction(4):
                bad.append((w, "outside-[1,4]", v))
        return bad

    def value_range(self) -> tuple[Fraction, Fraction]:
        return min(self.values.values()), max(self.values.values())


def _children(b: Fraction, phase: str, m_parent: Fraction, m0: Fraction, m1: Fraction):
    """Phase rules for one split; returns ((B0, phase0), (B1, phase1))."""
    deltas = (m0 - m_parent, m1 - m_parent)
    if phase == UP:
        r = (b + deltas[0], b + deltas[1])
        if r[0] < THREE and r[1] < THREE:
            return (r[0], UP), (r[1], UP)
        k = 0 if r[0] >= THREE else 1
        if r[1 - k] >= THREE:
            raise ContractError("both children reach the up threshold; unfair input?")
        out = [(THREE, DOWN), (2 * b - THREE, UP)]
    else:
        r = (b - deltas[0], b - deltas[1])
        if r[0] > TWO and r[1] > TWO:
            return (r[0], DOWN), (r[1], DOWN)
        k = 0 if r[0] <= TWO else 1
        if r[1 - k] <= TWO:
            raise ContractError("both children reach the down threshold; unfair input?")
        out = [(TWO, UP), (2 * b - TWO, DOWN)]
    return (out[0], out[1]) if k == 0 else (out[1], out[0])


def build_oscillator(table: MartingaleTable, depth: int | None = None) -> PhaseTable:
    """Exhaustive phase table from a fair table with the savings property."""
    depth = table.depth if depth is None else depth
    if depth > table.depth:
        raise ContractError(f"depth {depth} exceeds table depth {table.depth}")
    worst = min_descendant_drop(table)
    if worst < -1:
        raise PreconditionError(f"savings property fails: worst drop {worst}")
    values = {"": TWO}
    phases = {"": UP}
    for level in range(depth):
        for w in all_words(level):
            (b0, p0), (b1, p1) = _children(
                values[w], phases[w], table.value(w), table.value(w + "0"), table.value(w + "1")
            )
            values[w + "0"], phases[w + "0"] = b0, p0
            values[w + "1"], phases[w + "1"] = b1, p1
    return PhaseTable(values, phases, depth, complete=True)


def oscillator_along(strategy: Strategy, target: str) -> PhaseTable:
    """Phase table along one branch (plus siblings) for a capital function.

    The savings property is verified along the visited branch; the
    resulting partial table supports cdf queries at the branch's dyadic
    neighbourhood, which is all that slope reports need.
    """
    check_word(target)
    m: dict[str, Fraction] = {"": strategy("")}
    for i in range(len(target)):
        w = target[:i]
        for b in "01":
            m[w + b] = strategy(w + b)
    _check_savings_near_path(m, target)
    values = {"": TWO}
    phases = {"": UP}
    for i in range(len(target)):
        w = target[:i]
        (b0, p0), (b1, p1) = _children(values[w], phases[w], m[w], m[w + "0"], m[w + "1"])
        values[w + "0"], phases[w + "0"] = b0, p0
        values[w + "1"], phases[w + "1"] = b1, p1
    return PhaseTable(values, phases, len(target), complete=False)


def count_crossings(phase_table: PhaseTable, target: str) -> int:
    """Number of phase switches along the prefixes of the target."""
    check_word(target)
    switches = 0
    for i in range(len(target)):
        if phase_table.phase(target[: i + 1]) != phase_table.phase(target[:i]):
            switches += 1
    return switches
