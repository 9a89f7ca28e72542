"""Exact piecewise functions on [0, 1] and their variation calculus.

Two modes:

* ``step``  -- constant on each breakpoint interval; evaluation at an
  interior breakpoint takes the right limit (left-closed intervals).
* ``linear`` -- continuous piecewise-linear interpolation of breakpoint
  values.

All breakpoints and values are exact rationals; every operation below is
exact. Grid variation, p-variation, integrals and dyadic slope bounds
live here as free functions.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .dyadics import ONE, ZERO, check_word, parse_rat, rat_str, word_value
from .errors import (
    ClassError,
    DegeneratePairError,
    EmptyIntervalError,
    InsufficientPrefixError,
    ParameterError,
    ParseError,
)

STEP = "step"
LINEAR = "linear"


class PiecewiseFn:
    """Exact step or piecewise-linear function on [0, 1]."""

    __slots__ = ("mode", "breakpoints", "values")

    def __init__(self, mode: str, breakpoints: Sequence[Fraction], values: Sequence[Fraction]):
        if mode not in (STEP, LINEAR):
            raise ParameterError(f"unknown mode {mode!r}")
        bps = tuple(Fraction(b) for b in breakpoints)
        vals = tuple(Fraction(v) for v in values)
        if len(bps) < 2 or bps[0] != ZERO or bps[-1] != ONE:
            raise ParameterError("breakpoints must run from 0 to 1")
        if any(a >= b for a, b in zip(bps, bps[1:])):
            raise ParameterError("breakpoints must be strictly increasing")
        want = len(bps) - 1 if mode == STEP else len(bps)
        if len(vals) != want:
            raise ParameterError(f"expected {want} values, got {len(vals)}")
        self.mode = mode
        self.breakpoints = bps
        self.values = vals

    @classmethod
    def step(cls, breakpoints, values) -> "PiecewiseFn":
        return cls(STEP, breakpoints, values)

    @classmethod
    def linear(cls, breakpoints, values) -> "PiecewiseFn":
        return cls(LINEAR, breakpoints, values)

    @classmethod
    def constant(cls, value, mode: str = STEP) -> "PiecewiseFn":
        v = Fraction(value)
        vals = [v] if mode == STEP else [v, v]
        return cls(mode, [ZERO, ONE], vals)

    @classmethod
    def identity(cls) -> "PiecewiseFn":
        return cls(LINEAR, [ZERO, ONE], [ZERO, ONE])

    def _segment(self, x: Fraction) -> int:
        """Index i with breakpoints[i] <= x, right-limit convention."""
        i = bisect_right(self.breakpoints, x) - 1
        return min(i, len(self.breakpoints) - 2)

    def __call__(self, x) -> Fraction:
        x = Fraction(x)
        if not ZERO <= x <= ONE:
            raise ParameterError(f"{x} outside [0, 1]")
        i = self._segment(x)
        if self.mode == STEP:
            return self.values[i]
        x0, x1 = self.breakpoints[i], self.breakpoints[i + 1]
        v0, v1 = self.values[i], self.values[i + 1]
        return v0 + (v1 - v0) * (x - x0) / (x1 - x0)

    def segments(self) -> Iterator[tuple[Fraction, Fraction, Fraction, Fraction]]:
        """Yield (t0, t1, v0, v1): endpoint values of each affine piece."""
        for i in range(len(self.breakpoints) - 1):
            t0, t1 = self.breakpoints[i], self.breakpoints[i + 1]
            if self.mode == STEP:
                v = self.values[i]
                yield t0, t1, v, v
            else:
                yield t0, t1, self.values[i], self.values[i + 1]

    def slopes(self) -> list[Fraction]:
        return [(v1 - v0) / (t1 - t0) for t0, t1, v0, v1 in self.segments()]

    def integral_to(self, x) -> Fraction:
        """Exact Riemann integral over [0, x]."""
        x = Fraction(x)
        if not ZERO <= x <= ONE:
            raise ParameterError(f"{x} outside [0, 1]")
        total = ZERO
        for t0, t1, v0, v1 in self.segments():
            if x <= t0:
                break
            hi = min(x, t1)
            if self.mode == STEP:
                total += v0 * (hi - t0)
            else:
                vhi = v0 + (v1 - v0) * (hi - t0) / (t1 - t0)
                total += (v0 + vhi) * (hi - t0) / 2
        return total

    def antiderivative(self) -> "PiecewiseFn":
        """x -> integral over [0, x]; exact only for step mode."""
        if self.mode != STEP:
            raise ClassError("antiderivative of a linear-mode function is not piecewise linear")
        vals = [ZERO]
        for (t0, t1, v, _) in self.segments():
            vals.append(vals[-1] + v * (t1 - t0))
        return PiecewiseFn(LINEAR, self.breakpoints, vals)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PiecewiseFn)
            and self.mode == other.mode
            and self.breakpoints == other.breakpoints
            and self.values == other.values
        )

    def __hash__(self):
        return hash((self.mode, self.breakpoints, self.values))

    def __repr__(self):
        return f"PiecewiseFn({self.mode}, {len(self.breakpoints) - 1} pieces)"

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "breakpoints": [rat_str(b) for b in self.breakpoints],
            "values": [rat_str(v) for v in self.values],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PiecewiseFn":
        try:
            mode = obj["mode"]
            bps = [parse_rat(s) for s in obj["breakpoints"]]
            vals = [parse_rat(s) for s in obj["values"]]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"bad function record: {exc}") from None
        return cls(mode, bps, vals)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "PiecewiseFn":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad function file: {exc}") from None
        return cls.from_json(obj)


@dataclass(frozen=True)
class DerivBounds:
    """Extremes of basic dyadic-interval slopes along a bit prefix."""

    from_depth: int
    to_depth: int
    min_slope: Fraction
    max_slope: Fraction

    def __post_init__(self):
        if self.min_slope > self.max_slope:
            raise ParameterError("min slope exceeds max slope")


def slope(f: Callable[[Fraction], Fraction], x, y) -> Fraction:
    """Exact difference quotient (f(y) - f(x)) / (y - x)."""
    x, y = Fraction(x), Fraction(y)
    if x == y:
        raise DegeneratePairError(f"slope at degenerate pair x = y = {x}")
    return (f(y) - f(x)) / (y - x)


def _as_integer_power(p) -> int:
    p = Fraction(p)
    if p < 1:
        raise ParameterError(f"power p = {p} must be >= 1")
    if p.denominator != 1:
        raise ParameterError(f"non-integer power p = {p} has no exact grid sum")
    return p.numerator


def grid_points(x: Fraction, y: Fraction, depth: int) -> list[Fraction]:
    """x, y, and every multiple of 2^-depth strictly between them."""
    step = Fraction(1, 1 << depth)
    pts = [x]
    k = (x / step).__floor__() + 1
    t = k * step
    while t < y:
        if t > x:
            pts.append(t)
        t += step
    pts.append(y)
    return pts


def grid_variation(f, x, y, depth: int, p=1) -> Fraction:
    """Variation sum of f over the level-``depth`` dyadic grid in [x, y].

    p = 1 gives the plain variation sum; integer p > 1 weights each
    increment as |df|^p / |dt|^(p-1).
    """
    x, y = Fraction(x), Fraction(y)
    if x >= y:
        raise EmptyIntervalError(f"empty interval [{x}, {y}]")
    power = _as_integer_power(p)
    pts = grid_points(x, y, depth)
    vals = [f(t) for t in pts]
    if power == 1:
        return sum((abs(b - a) for a, b in zip(vals, vals[1:])), ZERO)
    total = ZERO
    for (t0, t1, v0, v1) in zip(pts, pts[1:], vals, vals[1:]):
        total += abs(v1 - v0) ** power / (t1 - t0) ** (power - 1)
    return total


def exact_variation(f: PiecewiseFn, x, y) -> Fraction:
    """Total variation of f over [x, y], summed piece by piece."""
    x, y = Fraction(x), Fraction(y)
    if x >= y:
        raise EmptyIntervalError(f"empty interval [{x}, {y}]")
    total = ZERO
    fx = f(x)
    for t0, t1, _, _ in f.segments():
        lo, hi = max(t0, x), min(t1, y)
        if lo >= hi:
            continue
        v_hi = f(hi)
        total += abs(v_hi - fx)
        fx = v_hi
    return total


def integrate_piecewise(f: PiecewiseFn, x) -> Fraction:
    return f.integral_to(x)


def _int_nth_root(k: int, n: int) -> int:
    """floor(k ** (1/n)) by Newton iteration on integers."""
    if k < 2:
        return k
    x = 1 << -(-k.bit_length() // n)
    while True:
        y = ((n - 1) * x + k // x ** (n - 1)) // n
        if y >= x:
            return x
        x = y


def _nth_root_exact(x: Fraction, n: int) -> Fraction | None:
    if x < 0:
        return None
    num = _int_nth_root(x.numerator, n)
    den = _int_nth_root(x.denominator, n)
    if num ** n == x.numerator and den ** n == x.denominator:
        return Fraction(num, den)
    return None


def p_variation(f: PiecewiseFn, p=1) -> Fraction:
    """p-variation of f over [0, 1]: exact supremum on this class.

    For p = 1 this is the total variation. For integer p > 1 the
    supremum over partitions of a piecewise-linear or step function is
    attained on the breakpoint partition (step jumps contribute an
    unbounded supremum and raise).
    """
    power = _as_integer_power(p)
    if power == 1:
        return exact_variation(f, ZERO, ONE)
    if f.mode == STEP:
        jumps = any(v0 != v1 for v0, v1 in zip(f.values, f.values[1:]))
        if jumps:
            raise ClassError("p-variation of a discontinuous step function is infinite for p > 1")
        return ZERO
    total = ZERO
    for t0, t1, v0, v1 in f.segments():
        total += abs(v1 - v0) ** power / (t1 - t0) ** (power - 1)
    return total


def variation_norm(f: PiecewiseFn, p=1):
    """|f(0)| + (p-variation)^(1/p).

    Returns an exact rational when the root is rational (always for
    p = 1); otherwise the pair (|f(0)|, p-variation) for comparison in
    p-th-power form.
    """
    power = _as_integer_power(p)
    head = abs(f(ZERO))
    vp = p_variation(f, power)
    if power == 1:
        return head + vp
    root = _nth_root_exact(vp, power)
    if root is not None:
        return head + root
    return (head, vp)


def dyadic_deriv_bounds(f, z_prefix: str, from_depth: int, to_depth: int) -> DerivBounds:
    """Min and max slope of f over the basic dyadic intervals along a prefix.

    For n in [from_depth, to_depth] the interval at depth n is
    [0.(z|n), 0.(z|n) + 2^-n]; this is a proxy for derivative bounds,
    blind to non-dyadic intervals.
    """
    check_word(z_prefix)
    if not 0 <= from_depth <= to_depth:
        raise ParameterError("need 0 <= from_depth <= to_depth")
    if to_depth > len(z_prefix):
        raise InsufficientPrefixError(
            f"depth {to_depth} exceeds prefix length {len(z_prefix)}"
        )
    lo = hi = None
    for n in range(from_depth, to_depth + 1):
        left = word_value(z_prefix[:n])
        s = slope(f, left, left + Fraction(1, 1 << n))
        lo = s if lo is None or s < lo else lo
        hi = s if hi is None or s > hi else hi
    return DerivBounds(from_depth, to_depth, lo, hi)


def _abs_pow_integral_affine(v0: Fraction, v1: Fraction, width: Fraction, power: int) -> Fraction:
    """Integral of |v(t)|^power over a width-``width`` affine piece."""
    if width == 0:
        return ZERO
    if v0 == v1:
        return abs(v0) ** power * width
    if v0 * v1 < 0:
        w0 = width * abs(v0) / (abs(v0) + abs(v1))
        return (
            _abs_pow_integral_affine(v0, ZERO, w0, power)
            + _abs_pow_integral_affine(ZERO, v1, width - w0, power)
        )
    # single-signed: integral of |v|^p with |v| affine between |v0| and |v1|
    a0, a1 = abs(v0), abs(v1)
    return width * (a1 ** (power + 1) - a0 ** (power + 1)) / ((power + 1) * (a1 - a0))


def lp_power_norm(f: PiecewiseFn, p=1) -> Fraction:
    """Exact integral of |f|^p over [0, 1] (the p-norm in p-th-power form)."""
    power = _as_integer_power(p)
    total = ZERO
    for t0, t1, v0, v1 in f.segments():
        total += _abs_pow_integral_affine(v0, v1, t1 - t0, power)
    return total


def difference_abs_pow_integral(f: PiecewiseFn, g: PiecewiseFn, p=1) -> Fraction:
    """Exact integral of |f - g|^p over [0, 1] on merged breakpoints."""
    power = _as_integer_power(p)
    pts = sorted(set(f.breakpoints) | set(g.breakpoints))
    total = ZERO
    for t0, t1 in zip(pts, pts[1:]):
        # both functions are affine on (t0, t1); sample one-sided limits
        fv0, fv1 = _onesided(f, t0, t1)
        gv0, gv1 = _onesided(g, t0, t1)
        total += _abs_pow_integral_affine(fv0 - gv0, fv1 - gv1, t1 - t0, power)
    return total


def _onesided(f: PiecewiseFn, t0: Fraction, t1: Fraction) -> tuple[Fraction, Fraction]:
    if f.mode == STEP:
        v = f(t0)
        return v, v
    return f(t0), f(t1)
