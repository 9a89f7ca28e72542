"""Constructive synthesis of functions with prescribed variation.

* ``zigzag_fn`` builds the slope +-1 sawtooth supported on one dyadic
  interval; its total variation is exactly the interval length.
* ``zigzag_sum`` stacks zigzags over a nondecreasing stage list, giving
  a 1-Lipschitz function whose variation equals the last stage value.
* ``build_signed_martingale`` turns a monotone staged family into a
  fair signed table L whose level averages of |L| approximate each
  stage within 2^-s, recording the schedule of switch levels.
* ``compute_stage_gates`` finds, per stage, the level from which all
  cell masses are below 2^-s, and derives gated switch levels that keep
  the built L's cell masses summable band by band.
* ``variation_preimage`` composes the above: from an interval oracle
  with Lipschitz bound c it builds a c-Lipschitz piecewise-linear g
  whose grid variation tracks the oracle's function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from .dyadics import ONE, ZERO, all_words, dyadic_level, is_dyadic, word_value
from .errors import (
    ContractError,
    NonAtomicWitnessError,
    ParameterError,
    ScheduleError,
)
from .intervalre import IntervalOracle, oracle_to_staged
from .martingale import (
    MartingaleTable,
    SignedMartingaleTable,
    StagedMartingale,
    level_variation,
    zero_table,
)
from .piecewise import LINEAR, PiecewiseFn


@dataclass(frozen=True)
class ZigzagSpec:
    """Sawtooth on [lo, hi] with teeth of width 2^-teeth_level."""

    lo: Fraction
    hi: Fraction
    teeth_level: int

    def __post_init__(self):
        lo, hi, k = self.lo, self.hi, self.teeth_level
        if not (ZERO <= lo <= hi <= ONE):
            raise ParameterError(f"need 0 <= lo <= hi <= 1, got {lo}, {hi}")
        if not (is_dyadic(lo) and is_dyadic(hi)):
            raise ParameterError("zigzag endpoints must be dyadic")
        level = max(dyadic_level(lo), dyadic_level(hi))
        if k < level:
            raise ParameterError(
                f"teeth level {k} coarser than endpoint level {level}"
            )

    @property
    def teeth(self) -> int:
        return int((self.hi - self.lo) * (1 << self.teeth_level))


def zigzag_eval(spec: ZigzagSpec, x) -> Fraction:
    """Height of the sawtooth at x: slope +-1 inside [lo, hi], 0 outside."""
    x = Fraction(x)
    if not ZERO <= x <= ONE:
        raise ParameterError(f"{x} outside [0, 1]")
    if x <= spec.lo or x >= spec.hi:
        return ZERO
    width = Fraction(1, 1 << spec.teeth_level)
    offset = (x - spec.lo) % width
    return min(offset, width - offset)


def zigzag_fn(spec: ZigzagSpec) -> PiecewiseFn:
    """The sawtooth as an exact piecewise-linear function on [0, 1]."""
    bps, vals = _zigzag_points(spec)
    if bps[0] != ZERO:
        bps.insert(0, ZERO)
        vals.insert(0, ZERO)
    if bps[-1] != ONE:
        bps.append(ONE)
        vals.append(ZERO)
    return PiecewiseFn(LINEAR, bps, vals)


def _zigzag_points(spec: ZigzagSpec) -> tuple[list[Fraction], list[Fraction]]:
    if spec.lo == spec.hi:
        return [spec.lo], [ZERO]
    half = Fraction(1, 1 << (spec.teeth_level + 1))
    bps, vals = [], []
    t = spec.lo
    for i in range(2 * spec.teeth + 1):
        bps.append(t)
        vals.append(ZERO if i % 2 == 0 else half)
        t += half
    return bps, vals


def zigzag_sum(alphas) -> PiecewiseFn:
    """Stack zigzags over consecutive stages of a nondecreasing dyadic list.

    Stage s covers [alpha_s, alpha_s+1] with teeth level
    max(s + 1, endpoint level); the result is 1-Lipschitz, has total
    variation alpha_last, and is constant to the right of alpha_last.
    Stage s must resolve at level s (repeat entries to wait a stage).
    """
    alphas = [Fraction(a) for a in alphas]
    if not alphas:
        raise ScheduleError("need at least one stage")
    if alphas[0] != ZERO:
        raise ScheduleError(f"stage list must start at 0, got {alphas[0]}")
    for s, a in enumerate(alphas):
        if not (ZERO <= a <= ONE) or not is_dyadic(a):
            raise ScheduleError(f"stage {s} value {a} not a dyadic in [0, 1]")
        if dyadic_level(a) > s:
            raise ScheduleError(
                f"stage {s} value {a} resolves only at level {dyadic_level(a)}"
            )
        if s and a < alphas[s - 1]:
            raise ScheduleError("stage list must be nondecreasing")
    bps = [ZERO]
    vals = [ZERO]
    for s in range(len(alphas) - 1):
        lo, hi = alphas[s], alphas[s + 1]
        if lo == hi:
            continue
        level = max(dyadic_level(lo), dyadic_level(hi))
        spec = ZigzagSpec(lo, hi, max(s + 1, level))
        zb, zv = _zigzag_points(spec)
        if bps[-1] == zb[0]:
            bps.pop()
            vals.pop()
        bps.extend(zb)
        vals.extend(zv)
    if bps[-1] != ONE:
        bps.append(ONE)
        vals.append(ZERO)
    if len(bps) == 1:
        return PiecewiseFn.constant(ZERO, LINEAR)
    return PiecewiseFn(LINEAR, bps, vals)


class TraceEntry(NamedTuple):
    stage: int
    level: int
    word: str
    rule: str
    preferred: int


@dataclass
class StageSchedule:
    """Realized switch levels and boundary deficits of a signed build."""

    boundaries: list[int]
    deficits: list[Fraction]
    stage_of_level: list[int]
    complete: bool
    gates: list[tuple[int, int | None]] | None = None

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.boundaries, self.boundaries[1:])):
            raise ScheduleError("boundary levels must be strictly increasing")
        if self.gates is not None:
            for s in range(len(self.gates) - 1):
                j = self.gates[s][1]
                if j is not None and j < self.gates[s + 1][0]:
                    raise ScheduleError(
                        f"gate j_{s} = {j} below next smallness level {self.gates[s + 1][0]}"
                    )


@dataclass
class SignedSynthesis:
    table: SignedMartingaleTable
    schedule: StageSchedule
    staged: StagedMartingale
    trace: list[TraceEntry] = field(repr=False, default_factory=list)

    @property
    def complete(self) -> bool:
        return self.schedule.complete


def build_signed_martingale(
    staged: StagedMartingale,
    target_depth: int,
    level_cap: int = 24,
    gates: list[tuple[int, int | None]] | None = None,
    record_trace: bool = True,
) -> SignedSynthesis:
    """Fair signed table L with |L| <= active stage and vanishing deficits.

    Children of w are split so that one child locks to +-M_s while the
    other keeps the fair balance; the active stage advances once the
    level average of |L| comes within 2^-s of M_s on the stage's
    reference level (and, when gated, the switch level is reached).
    Stops flagged-partial when the level cap or table depth is hit with
    a boundary still open.
    """
    depth_limit = min(level_cap, staged.depth)
    if not 1 <= target_depth <= depth_limit:
        raise ContractError(
            f"target depth {target_depth} outside 1..{depth_limit}"
        )
    usable = staged.stage_count if gates is None else max(1, staged.stage_count - 1)
    values: dict[str, Fraction] = {"": ZERO}
    boundaries = [0]
    deficits: list[Fraction] = []
    stage_of_level = [0]
    trace: list[TraceEntry] = []
    s = 0
    pending = True
    level = 0
    while level < depth_limit and (pending or level < target_depth):
        table = staged.stage(s)
        for w in all_words(level):
            lw = values[w]
            m0, m1 = table.value(w + "0"), table.value(w + "1")
            a = 0 if m0 <= m1 else 1
            ma = m0 if a == 0 else m1
            if lw >= 0:
                la, lb, rule = ma, 2 * lw - ma, "pos"
            else:
                la, lb, rule = -ma, 2 * lw + ma, "neg"
            values[w + str(a)] = la
            values[w + str(1 - a)] = lb
            if record_trace:
                trace.append(TraceEntry(s, level + 1, w, rule, a))
        level += 1
        stage_of_level.append(s)
        if pending:
            ref = boundaries[-1]
            deficit = max(
                table.value(w) - _level_avg(values, w, level) for w in all_words(ref)
            )
            gate_ok = True
            if gates is not None and s + 1 < usable:
                gate_ok = level >= (gates[s + 1][1] or 0)
            if deficit <= Fraction(1, 1 << s) and gate_ok:
                boundaries.append(level)
                deficits.append(deficit)
                if s + 1 < usable:
                    s += 1
                else:
                    pending = False
    schedule = StageSchedule(boundaries, deficits, stage_of_level, not pending, gates)
    signed = SignedMartingaleTable(values, depth=level)
    return SignedSynthesis(signed, schedule, staged, trace)


def _level_avg(values: dict[str, Fraction], word: str, level: int) -> Fraction:
    rel = level - len(word)
    total = sum((abs(values[word + eta]) for eta in all_words(rel)), ZERO)
    return total / (1 << rel)


def compute_stage_gates(
    staged: StagedMartingale, depth_cap: int = 24
) -> list[tuple[int, int | None]]:
    """Per-stage pairs (k_s, j_s): smallness levels and gated switch levels.

    k_s is the least level from which every cell mass 2^-|w| M_s(w)
    stays below 2^-s (cell masses shrink with depth, so one witness
    level suffices); j_s, the level at which the build may switch to
    stage s, is pushed to at least k_s+1 so that the stage-s band of
    the built L has cell masses below 2^-(s+1). The family must begin
    with two zero stages (see ``with_zero_prefix``). A stage betting
    everything along one branch has no witness level and raises.
    """
    ks = [_smallness_level(staged.stage(s), s, depth_cap) for s in range(staged.stage_count)]
    gates: list[tuple[int, int | None]] = []
    prev_j = -1
    for s in range(staged.stage_count):
        if s + 1 < staged.stage_count:
            j = max(ks[s + 1], 0 if s == 0 else prev_j + 1)
            prev_j = j
        else:
            j = None
        gates.append((ks[s], j))
    if gates[0][1] not in (None, 0):
        raise ContractError(
            "family must start with two zero stages; use with_zero_prefix()"
        )
    return gates


def _smallness_level(table: MartingaleTable, s: int, depth_cap: int) -> int:
    bound = Fraction(1, 1 << s)
    limit = min(depth_cap, table.depth)
    for lev in range(limit + 1):
        worst = max(table.value(w) for w in all_words(lev))
        if worst / (1 << lev) <= bound:
            return lev
    raise NonAtomicWitnessError(
        f"no level <= {limit} has all cell masses below 2^-{s}"
        " (stage concentrates on one branch?)"
    )


def with_zero_prefix(staged: StagedMartingale) -> StagedMartingale:
    """Prepend zero stages until the first two stages vanish."""
    zero = zero_table(staged.depth)
    stages = list(staged.stages)
    while len(stages) < 2 or any(v != 0 for v in stages[1].values.values()):
        stages.insert(0, zero)
    return StagedMartingale(stages)


def gated_synthesis(
    staged: StagedMartingale,
    target_depth: int,
    depth_cap: int = 24,
    level_cap: int = 24,
) -> SignedSynthesis:
    """Signed build driven by stage gates (zero stages prepended first)."""
    staged = with_zero_prefix(staged)
    gates = compute_stage_gates(staged, depth_cap)
    return build_signed_martingale(
        staged, target_depth, level_cap=level_cap, gates=gates
    )


def band_stage(schedule: StageSchedule, level: int) -> int:
    """The stage active when the given level was built."""
    if not 0 <= level < len(schedule.stage_of_level):
        raise ContractError(f"level {level} outside the built range")
    return schedule.stage_of_level[level]


def band_increment_check(
    synthesis: SignedSynthesis, word: str, a
) -> tuple[Fraction, Fraction]:
    """Signed mass of [0.w, a) against the band bound 2^-s.

    Valid for dyadic a inside the cell of w; the bound telescopes the
    per-band cell masses, so it needs a gated (or otherwise band-small)
    build to be meaningful.
    """
    a = Fraction(a)
    lo, hi = word_value(word), word_value(word) + Fraction(1, 1 << len(word))
    if not lo < a <= hi:
        raise ContractError(f"{a} outside the cell ({lo}, {hi}] of {word!r}")
    mass = synthesis.table.cdf(a) - synthesis.table.cdf(lo)
    s = band_stage(synthesis.schedule, len(word))
    return mass, Fraction(1, 1 << s)


def sign_lock_violations(synthesis: SignedSynthesis) -> list[tuple[str, str]]:
    """Parents locked to +-M_s whose children fail to inherit the lock."""
    bad = []
    values = synthesis.table.values
    for entry in synthesis.trace:
        stage = synthesis.staged.stage(entry.stage)
        w = entry.word
        lw, mw = values[w], stage.value(w)
        for sign in (1, -1):
            if lw == sign * mw:
                for b in "01":
                    if values[w + b] != sign * stage.value(w + b):
                        bad.append((w + b, f"parent locked at {sign:+d}M"))
    return bad


def envelope_violations(synthesis: SignedSynthesis) -> list[tuple[str, Fraction]]:
    """Words where |L| exceeds the stage active when their level was built."""
    bad = []
    schedule = synthesis.schedule
    for w, v in synthesis.table.values.items():
        stage = synthesis.staged.stage(schedule.stage_of_level[len(w)])
        if abs(v) > stage.value(w):
            bad.append((w, abs(v) - stage.value(w)))
    return bad


def boundary_deficit_violations(synthesis: SignedSynthesis) -> list[tuple[int, str, Fraction]]:
    """Completed boundaries where the deficit leaves [0, 2^-s]."""
    bad = []
    sched = synthesis.schedule
    for s in range(len(sched.deficits)):
        ref, nxt = sched.boundaries[s], sched.boundaries[s + 1]
        stage = synthesis.staged.stage(sched.stage_of_level[nxt])
        for w in all_words(ref):
            deficit = stage.value(w) - level_variation(synthesis.table, w, nxt)
            if not ZERO <= deficit <= Fraction(1, 1 << s):
                bad.append((s, w, deficit))
    return bad


def band_bound_violations(synthesis: SignedSynthesis) -> list[tuple[str, Fraction]]:
    """Words whose cell mass 2^-|w| |L(w)| exceeds the band bound 2^-(s+1)."""
    bad = []
    schedule = synthesis.schedule
    for w, v in synthesis.table.values.items():
        if not w:
            continue
        s = schedule.stage_of_level[len(w)]
        mass = abs(v) / (1 << len(w))
        if mass > Fraction(1, 1 << (s + 1)):
            bad.append((w, mass))
    return bad


@dataclass
class PreimageResult:
    """Computable piecewise-linear g whose variation tracks the oracle."""

    fn: PiecewiseFn
    synthesis: SignedSynthesis
    staged: StagedMartingale
    depth: int
    final_deficit: Fraction
    lipschitz: Fraction


def variation_preimage(
    oracle: IntervalOracle, depth: int, level_cap: int = 24
) -> PreimageResult:
    """From an interval oracle with Lipschitz bound c, build g with V_g = f.

    g interpolates the partial sums g(0.w) = 2^-depth * sum of L at the
    level-depth words left of w; it is c-Lipschitz on the grid and its
    grid variation over [0, x] matches the oracle's final stage at x up
    to the realized final deficit.
    """
    if oracle.lipschitz is None:
        raise ContractError("oracle must declare a Lipschitz bound")
    staged = oracle_to_staged(oracle, depth)
    syn = build_signed_martingale(staged, depth, level_cap=level_cap)
    table = syn.table
    n = table.depth
    step = Fraction(1, 1 << n)
    bps, vals = [ZERO], [ZERO]
    for w in all_words(n):
        bps.append(bps[-1] + step)
        vals.append(vals[-1] + table.value(w) * step)
    fn = PiecewiseFn(LINEAR, bps, vals)
    s_last = syn.schedule.stage_of_level[-1]
    ref = syn.schedule.boundaries[min(s_last, len(syn.schedule.boundaries) - 1)]
    last = staged.stage(s_last)
    final_deficit = max(
        last.value(w) - level_variation(table, w, n) for w in all_words(ref)
    )
    return PreimageResult(fn, syn, staged, n, final_deficit, oracle.lipschitz)
