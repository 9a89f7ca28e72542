"""Schnorr tests, their refinement, and cube-average oscillation.

A ``Sigma01Enum`` is a finite monotone enumeration of cube sets; a
``SchnorrTest`` serves one enumeration per index m with mass at most
2^-m and an effective measure modulus. ``refine_test`` rebuilds a test
(G_m) whose member m+1 collects, inside each cube C entering member m,
an inner member so small that later members occupy a vanishing share of
C. Averages over the provenance cubes of the alternating band function
then oscillate between +1 and -1, which is what the reports certify.

``char_approx`` produces the continuous ramp approximant to a cube-set
indicator with an exact p-norm certificate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .cubes import (
    CubeCombination,
    DyadicCube,
    DyadicCubeSet,
    cube_of_point,
    intervals_1d,
)
from .dyadics import ONE, ZERO, check_word, is_dyadic
from .errors import (
    AmbiguityError,
    ClassError,
    ContractError,
    ParameterError,
)
from .piecewise import (
    LINEAR,
    PiecewiseFn,
    difference_abs_pow_integral,
    lp_power_norm,
)


class Sigma01Enum:
    """Monotone stagewise enumeration of an open set by cube sets."""

    def __init__(self, dim: int, stages: Sequence[DyadicCubeSet]):
        stages = list(stages)
        if not stages:
            raise ContractError("need at least one stage")
        for i, st in enumerate(stages):
            if st.dim != dim:
                raise ContractError(f"stage {i} has dimension {st.dim}, expected {dim}")
            if i and not st.includes(stages[i - 1]):
                raise ContractError(f"stage {i} does not include stage {i - 1}")
        self.dim = dim
        self.stages = stages

    @classmethod
    def single(cls, cube_set: DyadicCubeSet) -> "Sigma01Enum":
        return cls(cube_set.dim, [cube_set])

    @property
    def stage_count(self) -> int:
        return len(self.stages)

    def stage(self, t: int) -> DyadicCubeSet:
        """Stage t, clamped to the final stage beyond the enumeration."""
        if t < 0:
            raise ContractError("stage must be nonnegative")
        return self.stages[min(t, len(self.stages) - 1)]

    def final(self) -> DyadicCubeSet:
        return self.stages[-1]

    def limit_measure(self) -> Fraction:
        return self.final().measure()

    def modulus(self, bound: Fraction) -> int:
        """Least stage t with measure(final minus stage t) < bound."""
        if bound <= 0:
            raise ParameterError("bound must be positive")
        final = self.final()
        for t, st in enumerate(self.stages):
            if final.difference(st).measure() < bound:
                return t
        raise ContractError("no stage within bound")  # unreachable: final works


class SchnorrTest:
    """Uniform family of small enumerations with effective measure."""

    def __init__(self, dim: int):
        self.dim = dim

    def member(self, m: int) -> Sigma01Enum:
        raise NotImplementedError

    def member_count(self) -> int | None:
        """None for an unbounded family."""
        return None

    def modulus(self, m: int, eps: Fraction) -> int:
        return self.member(m).modulus(eps)

    def validate_member(self, m: int) -> Sigma01Enum:
        enum = self.member(m)
        bound = Fraction(1, 1 << m)
        for t, st in enumerate(enum.stages):
            if st.measure() > bound:
                raise ContractError(
                    f"member {m} stage {t} has mass {st.measure()} > 2^-{m}"
                )
        return enum


class ExplicitTest(SchnorrTest):
    def __init__(self, dim: int, members: Sequence[Sigma01Enum]):
        super().__init__(dim)
        self._members = list(members)

    def member(self, m: int) -> Sigma01Enum:
        if not 0 <= m < len(self._members):
            raise ContractError(f"member {m} not available (have {len(self._members)})")
        return self._members[m]

    def member_count(self) -> int:
        return len(self._members)


def _point_from_spec(z, dim: int) -> tuple[Fraction, ...]:
    point = tuple(Fraction(x) for x in z)
    if len(point) != dim:
        raise ParameterError(f"point has {len(point)} coordinates, expected {dim}")
    for j, x in enumerate(point):
        if not ZERO <= x <= ONE:
            raise ParameterError(f"coordinate {j} = {x} outside [0, 1]")
        if is_dyadic(x):
            raise AmbiguityError(
                f"coordinate {j} = {x} is dyadic; supply a bit-stream prefix instead"
            )
    return point


def deinterleave(bits: str, dim: int) -> list[str]:
    """Split an interleaved expansion into per-coordinate bit strings."""
    check_word(bits)
    return [bits[j::dim] for j in range(dim)]


class PointTest(SchnorrTest):
    """Canonical test capturing one point: member m is its cube at level
    ceil(m / n), a single-stage enumeration of mass 2^(-n ceil(m/n))."""

    def __init__(self, z, dim: int, bits: str | None = None):
        super().__init__(dim)
        if bits is not None:
            self.coords = None
            self.coord_bits = deinterleave(bits, dim)
        else:
            self.coords = _point_from_spec(z, dim)
            self.coord_bits = None

    def _cube_at(self, level: int) -> DyadicCube:
        if self.coords is not None:
            return cube_of_point(self.coords, level, self.dim)
        corner = []
        for j, cb in enumerate(self.coord_bits):
            if len(cb) < level:
                raise ContractError(
                    f"prefix too short: coordinate {j} has {len(cb)} bits, need {level}"
                )
            corner.append(int(cb[:level], 2) if level else 0)
        return DyadicCube(self.dim, level, tuple(corner))

    def member(self, m: int) -> Sigma01Enum:
        level = -(-m // self.dim)
        return Sigma01Enum.single(DyadicCubeSet.from_cube(self._cube_at(level)))


def point_test(z=None, dim: int = 1, bits: str | None = None) -> PointTest:
    return PointTest(z, dim, bits)


@dataclass
class CubeEntry:
    """A cube enumerated into a refinement level, with its provenance."""

    cube: DyadicCube
    stage: int
    inner_index: int | None = None  # member chosen to refine this cube


@dataclass
class RefinedLevel:
    enum: Sigma01Enum
    entries: list[CubeEntry]


@dataclass
class RefinedTest:
    """Refinement output: levels G_0..G_mmax with per-cube provenance."""

    dim: int
    levels: list[RefinedLevel]
    partial: bool

    def level_set(self, m: int) -> DyadicCubeSet:
        return self.levels[m].enum.final()

    @property
    def mmax(self) -> int:
        return len(self.levels) - 1

    def provenance_chain(self, point_contains: Callable[[DyadicCube], bool]) -> list[DyadicCube]:
        """The nested cubes (one per level) selected by a containment test."""
        chain = []
        for lev in self.levels:
            hits = [e.cube for e in lev.entries if point_contains(e.cube)]
            if not hits:
                break
            chain.append(hits[0])
        return chain


def _inner_index(m: int, cube: DyadicCube, stage: int) -> int:
    # least r >= stage with 2^-r <= 2^-(m+1) * measure(cube); the measure
    # is 2^-(dim * level), so r = max(stage, m + 1 + dim * level).
    return max(stage, m + 1 + cube.dim * cube.level)


def refine_test(
    test: SchnorrTest, mmax: int, stage_budget: int = 64
) -> RefinedTest:
    """Rebuild a test so later members shrink geometrically inside cubes.

    Level 0 is [0, 1]^n. When a cube C enters level m at stage s, the
    inner member r = max(s, least index with 2^-r <= 2^-(m+1) mass(C))
    is intersected with C and enumerated into level m+1 from stage s on,
    interior-disjointness from earlier content enforced by exact
    difference. Every level keeps stagewise mass at most 2^-m.
    """
    if mmax < 0:
        raise ParameterError("mmax must be >= 0")
    dim = test.dim
    unit = DyadicCube(dim, 0, (0,) * dim)
    levels = [
        RefinedLevel(
            Sigma01Enum(dim, [DyadicCubeSet.full(dim)]),
            [CubeEntry(unit, 0, _inner_index(0, unit, 0))],
        )
    ]
    partial = False
    for m in range(mmax):
        stage_sets: list[DyadicCubeSet] = []
        entries: list[CubeEntry] = []
        current = DyadicCubeSet.empty(dim)
        events: list[tuple[int, CubeEntry, Sigma01Enum]] = []
        for entry in levels[m].entries:
            r = entry.inner_index
            count = test.member_count()
            if count is not None and r >= count:
                partial = True
                continue
            events.append((entry.stage, entry, test.validate_member(r)))
        for t in range(stage_budget + 1):
            added_any = False
            for start, entry, inner in events:
                if t < start:
                    continue
                cube_set = DyadicCubeSet.from_cube(entry.cube)
                new = inner.stage(t - start).intersect(cube_set).difference(current)
                if not new.is_empty():
                    added_any = True
                    for leaf in new.leaves():
                        entries.append(
                            CubeEntry(leaf, t, _inner_index(m + 1, leaf, t))
                        )
                    current = current.union(new)
            stage_sets.append(current)
            done = all(
                inner.stage_count <= t - start + 1
                for start, _, inner in events
            ) if events else True
            if done and not added_any and t > 0:
                break
            if t == stage_budget and not done:
                partial = True
        levels.append(RefinedLevel(Sigma01Enum(dim, stage_sets or [current]), entries))
    return RefinedTest(dim, levels, partial)


def level_mass_violations(refined: RefinedTest) -> list[tuple[int, int, Fraction]]:
    """Stagewise masses above 2^-m, per (m, stage, mass)."""
    bad = []
    for m, lev in enumerate(refined.levels):
        bound = Fraction(1, 1 << m)
        for t, st in enumerate(lev.enum.stages):
            mass = st.measure()
            if mass > bound:
                bad.append((m, t, mass))
    return bad


def modulus_for_level(
    refined: RefinedTest, test: SchnorrTest, m: int, eps: Fraction
) -> tuple[int, Fraction]:
    """Stage t with mass(level m+1 beyond stage t) < 2 eps, certified.

    Follows the effective-measure argument: find s good for level m at
    eps, then push every inner member selected for a level-m cube below
    eps / (2 N), N the number of cubes enumerated by stage s.
    """
    if eps <= 0:
        raise ParameterError("eps must be positive")
    if not 0 <= m < refined.mmax:
        raise ContractError(f"level {m + 1} not built")
    if m == 0:
        s = 0
    else:
        s, _ = modulus_for_level(refined, test, m - 1, eps / 2)
    level = refined.levels[m]
    enum = level.enum
    entries = [e for e in level.entries if e.stage <= s and e.inner_index is not None]
    n_cubes = max(1, len(entries))
    t = s
    for e in entries:
        inner = test.member(e.inner_index)
        t = max(t, e.stage + inner.modulus(eps / (2 * n_cubes)))
    nxt = refined.levels[m + 1].enum
    residual = nxt.final().difference(nxt.stage(t)).measure()
    if residual >= 2 * eps:
        raise ContractError(
            f"modulus certificate failed: residual {residual} >= {2 * eps}"
        )
    return t, residual


def truncated_alternating(refined: RefinedTest, m: int, start: int = 0) -> CubeCombination:
    """sum over i in [start, m] of (-1)^i 1_{G_i} as a cube combination."""
    if not 0 <= start <= m <= refined.mmax:
        raise ParameterError(f"need 0 <= start <= m <= {refined.mmax}")
    terms = [
        (Fraction(-1) ** i, refined.level_set(i)) for i in range(start, m + 1)
    ]
    return CubeCombination(refined.dim, terms)


def band_function(refined: RefinedTest, m: int) -> CubeCombination:
    """The +-1 valued band form: (-1)^i between levels i and i+1.

    Equals 1_{G_0} + 2 sum_{i=1..m} (-1)^i 1_{G_i}; on G_i minus G_i+1
    (i < m) its value is (-1)^i, and (-1)^m on G_m.
    """
    if not 0 <= m <= refined.mmax:
        raise ParameterError(f"need 0 <= m <= {refined.mmax}")
    terms = [(ONE, refined.level_set(0))]
    for i in range(1, m + 1):
        terms.append((2 * Fraction(-1) ** i, refined.level_set(i)))
    return CubeCombination(refined.dim, terms)


def g_partial_eval(refined: RefinedTest, point, m: int) -> Fraction:
    """Truncated alternating sum at a point, by interior membership."""
    return truncated_alternating(refined, m).eval(point)


def cube_average(refined: RefinedTest, cube: DyadicCube, m: int) -> Fraction:
    """Exact average of the band function (truncated at m) over a cube."""
    region = DyadicCubeSet.from_cube(cube)
    return band_function(refined, m).integral(region) / cube.measure


def tail_l1_norm(refined: RefinedTest, start: int, m: int) -> Fraction:
    """Exact L1 norm of the literal alternating tail sum_{i=start..m}."""
    return truncated_alternating(refined, m, start).abs_pow_integral(1)


@dataclass
class RampApprox:
    """Continuous ramp h = max(0, 1 - N d(x, S)) with an exact certificate."""

    dim: int
    base: DyadicCubeSet
    slope: int
    stage: int
    p: int
    error_power: Fraction  # certified bound on |1_V - h|_p^p
    fn: PiecewiseFn | None  # exact one-dimensional profile, if dim == 1

    def eval(self, point) -> Fraction:
        if self.fn is None:
            raise ClassError("pointwise ramp evaluation is exact only in dimension 1")
        return self.fn(point[0] if isinstance(point, (tuple, list)) else point)


def _ramp_profile_1d(base: DyadicCubeSet, slope: int) -> PiecewiseFn:
    """Exact piecewise-linear h(x) = max(0, 1 - slope * d(x, base))."""
    spans = intervals_1d(base)
    if not spans:
        return PiecewiseFn.constant(ZERO, LINEAR)
    width = Fraction(1, slope)
    pts: list[Fraction] = []
    vals: list[Fraction] = []

    def add(x: Fraction, v: Fraction) -> None:
        if ZERO <= x <= ONE and (not pts or x > pts[-1]):
            pts.append(x)
            vals.append(v)

    first_lo = spans[0][0]
    if first_lo > ZERO:
        add(ZERO, max(ZERO, 1 - slope * first_lo))
        if first_lo - width > ZERO:
            add(first_lo - width, ZERO)
    for i, (lo, hi) in enumerate(spans):
        add(lo, ONE)
        add(hi, ONE)
        nxt = spans[i + 1][0] if i + 1 < len(spans) else None
        if nxt is None:
            if hi < ONE:
                if hi + width < ONE:
                    add(hi + width, ZERO)
                    add(ONE, ZERO)
                else:
                    add(ONE, max(ZERO, 1 - slope * (1 - hi)))
        else:
            gap = nxt - hi
            if gap >= 2 * width:
                add(hi + width, ZERO)
                add(nxt - width, ZERO)
            else:
                mid = hi + gap / 2
                add(mid, 1 - slope * gap / 2)
    return PiecewiseFn(LINEAR, pts, vals)


def _indicator_1d(cube_set: DyadicCubeSet) -> PiecewiseFn:
    spans = intervals_1d(cube_set)
    pts = sorted({ZERO, ONE, *(x for span in spans for x in span)})
    vals = []
    for lo, hi in zip(pts, pts[1:]):
        inside = any(a <= lo and hi <= b for a, b in spans)
        vals.append(ONE if inside else ZERO)
    return PiecewiseFn.step(pts, vals)


def _collar_bound(base: DyadicCubeSet, slope: int) -> Fraction:
    """Mass of the 1/slope collar around the base, leafwise over-count."""
    total = ZERO
    width = Fraction(2, slope)
    for leaf in base.leaves():
        side = leaf.side
        total += (side + width) ** base.dim - leaf.measure
    return total


def char_approx(enum: Sigma01Enum, eps: Fraction, p: int = 1) -> RampApprox:
    """Continuous approximant h to the enumerated set's indicator.

    Picks the stage t with mass(V minus V_t) < (eps/2)^p, then the
    smallest power-of-two slope N whose ramp certificate puts
    |1_V - h|_p^p below eps^p. In dimension 1 the certificate is the
    exact integral of |1_V - h|^p; in higher dimensions it is the exact
    collar enclosure.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ParameterError("eps must be positive")
    if p < 1:
        raise ParameterError("p must be a positive integer")
    target = eps**p
    stage_bound = (eps / 2) ** p
    t = enum.modulus(stage_bound)
    base = enum.stage(t)
    final = enum.final()
    if base.is_empty():
        # h = 0; the certificate is the missing mass alone
        err = final.measure()
        if err >= target:
            raise ContractError("empty stage cannot meet the certificate")
        return RampApprox(
            enum.dim, base, 1, t, p, err, PiecewiseFn.constant(ZERO, LINEAR) if enum.dim == 1 else None
        )
    slope = 1
    while True:
        if enum.dim == 1:
            h = _ramp_profile_1d(base, slope)
            err = difference_abs_pow_integral(_indicator_1d(final), h, p)
        else:
            h = None
            missing = final.difference(base).measure()
            err = missing + _collar_bound(base, slope)
        if err < target:
            return RampApprox(enum.dim, base, slope, t, p, err, h)
        slope *= 2
        if slope > 1 << 62:
            raise ContractError("no ramp slope certifies the requested accuracy")


def lp_norm_pow(f, p: int = 1) -> Fraction:
    """Exact integral of |f|^p for step/linear profiles or cube combinations."""
    if isinstance(f, PiecewiseFn):
        return lp_power_norm(f, p)
    if isinstance(f, CubeCombination):
        return f.abs_pow_integral(p)
    raise ClassError(f"unsupported function class {type(f).__name__}")
