"""Exact finite unions of axis-aligned dyadic cubes in [0, 1]^n.

A cube set is a 2^n-ary tree whose nodes are ``full``, ``empty``, or a
tuple of 2^n children, kept canonical (no node with uniform children
left unmerged). Boolean algebra and Lebesgue measure are exact; all
set assertions are interior assertions, boundaries carry no measure.

``CubeCombination`` layers rational coefficients over cube sets and
integrates |f|^p exactly on the common refinement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .dyadics import ONE, ZERO
from .errors import (
    BoundaryError,
    ClassError,
    DimensionMismatchError,
    ParameterError,
    ParseError,
)

FULL = "full"
EMPTY = "empty"


def _canon(children: tuple) -> object:
    if all(c == FULL for c in children):
        return FULL
    if all(c == EMPTY for c in children):
        return EMPTY
    return children


def _split(node, arity: int) -> tuple:
    if isinstance(node, tuple):
        return node
    return (node,) * arity


def _union(a, b, arity):
    if a == FULL or b == FULL:
        return FULL
    if a == EMPTY:
        return b
    if b == EMPTY:
        return a
    ca, cb = _split(a, arity), _split(b, arity)
    return _canon(tuple(_union(x, y, arity) for x, y in zip(ca, cb)))


def _intersect(a, b, arity):
    if a == EMPTY or b == EMPTY:
        return EMPTY
    if a == FULL:
        return b
    if b == FULL:
        return a
    ca, cb = _split(a, arity), _split(b, arity)
    return _canon(tuple(_intersect(x, y, arity) for x, y in zip(ca, cb)))


def _difference(a, b, arity):
    if a == EMPTY or b == FULL:
        return EMPTY
    if b == EMPTY:
        return a
    ca, cb = _split(a, arity), _split(b, arity)
    return _canon(tuple(_difference(x, y, arity) for x, y in zip(ca, cb)))


def _measure(node, arity) -> Fraction:
    if node == FULL:
        return ONE
    if node == EMPTY:
        return ZERO
    return sum((_measure(c, arity) for c in node), ZERO) / arity


@dataclass(frozen=True)
class DyadicCube:
    """Product of n intervals [i 2^-k, (i+1) 2^-k]."""

    dim: int
    level: int
    corner: tuple[int, ...]

    def __post_init__(self):
        if self.dim < 1 or self.level < 0 or len(self.corner) != self.dim:
            raise ParameterError("bad cube parameters")
        top = 1 << self.level
        if any(not 0 <= i < top for i in self.corner):
            raise ParameterError(f"corner {self.corner} outside level {self.level}")

    @property
    def measure(self) -> Fraction:
        return Fraction(1, 1 << (self.dim * self.level))

    @property
    def side(self) -> Fraction:
        return Fraction(1, 1 << self.level)

    def interval(self, axis: int) -> tuple[Fraction, Fraction]:
        lo = Fraction(self.corner[axis], 1 << self.level)
        return lo, lo + self.side

    def contains(self, point: Sequence[Fraction]) -> bool:
        for j in range(self.dim):
            lo, hi = self.interval(j)
            if not lo <= Fraction(point[j]) <= hi:
                return False
        return True

    def child(self, bits: int) -> "DyadicCube":
        corner = tuple(2 * self.corner[j] + ((bits >> j) & 1) for j in range(self.dim))
        return DyadicCube(self.dim, self.level + 1, corner)


class DyadicCubeSet:
    """Canonical 2^n-ary tree over [0, 1]^n with exact measure."""

    __slots__ = ("dim", "root")

    def __init__(self, dim: int, root):
        if dim < 1:
            raise ParameterError("dimension must be >= 1")
        self.dim = dim
        self.root = root

    @classmethod
    def empty(cls, dim: int) -> "DyadicCubeSet":
        return cls(dim, EMPTY)

    @classmethod
    def full(cls, dim: int) -> "DyadicCubeSet":
        return cls(dim, FULL)

    @classmethod
    def from_cube(cls, cube: DyadicCube) -> "DyadicCubeSet":
        arity = 1 << cube.dim
        node = FULL
        for level in range(cube.level - 1, -1, -1):
            bits = 0
            for j in range(cube.dim):
                bits |= ((cube.corner[j] >> (cube.level - 1 - level)) & 1) << j
            children = [EMPTY] * arity
            children[bits] = node
            node = tuple(children)
        return cls(cube.dim, node)

    @classmethod
    def from_cubes(cls, dim: int, cubes) -> "DyadicCubeSet":
        out = cls.empty(dim)
        for c in cubes:
            out = out.union(cls.from_cube(c))
        return out

    @property
    def arity(self) -> int:
        return 1 << self.dim

    def _match(self, other: "DyadicCubeSet") -> None:
        if not isinstance(other, DyadicCubeSet) or other.dim != self.dim:
            raise DimensionMismatchError("cube sets live in different dimensions")

    def union(self, other) -> "DyadicCubeSet":
        self._match(other)
        return DyadicCubeSet(self.dim, _union(self.root, other.root, self.arity))

    def intersect(self, other) -> "DyadicCubeSet":
        self._match(other)
        return DyadicCubeSet(self.dim, _intersect(self.root, other.root, self.arity))

    def difference(self, other) -> "DyadicCubeSet":
        self._match(other)
        return DyadicCubeSet(self.dim, _difference(self.root, other.root, self.arity))

    def measure(self) -> Fraction:
        return _measure(self.root, self.arity)

    def is_empty(self) -> bool:
        return self.root == EMPTY

    def includes(self, other) -> bool:
        """Interior inclusion: other minus self has no mass."""
        return other.difference(self).is_empty()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DyadicCubeSet)
            and self.dim == other.dim
            and self.root == other.root
        )

    def __hash__(self):
        return hash((self.dim, self.root))

    def __repr__(self):
        return f"<cube set dim {self.dim}, measure {self.measure()}>"

    def leaves(self) -> Iterator[DyadicCube]:
        """Full leaf cubes, in tree order."""

        def walk(node, cube: DyadicCube):
            if node == FULL:
                yield cube
            elif node != EMPTY:
                for bits, child in enumerate(node):
                    yield from walk(child, cube.child(bits))

        yield from walk(self.root, DyadicCube(self.dim, 0, (0,) * self.dim))

    def leaf_count(self) -> int:
        return sum(1 for _ in self.leaves())

    def contains_point(self, point: Sequence[Fraction]) -> bool:
        """Interior membership; points on an internal face raise."""
        point = tuple(Fraction(x) for x in point)
        if len(point) != self.dim or any(not ZERO <= x <= ONE for x in point):
            raise ParameterError(f"point {point} outside [0, 1]^{self.dim}")
        node = self.root
        level = 0
        while isinstance(node, tuple):
            bits = 0
            for j, x in enumerate(point):
                scaled = x * (1 << (level + 1))
                if scaled.denominator == 1 and x not in (ZERO, ONE):
                    raise BoundaryError(
                        f"coordinate {j} of {point} lies on a level-{level + 1} face"
                    )
                idx = min(scaled.__floor__(), (1 << (level + 1)) - 1)
                bits |= (idx & 1) << j
            node = node[bits]
            level += 1
        return node == FULL

    def to_json(self) -> dict:
        def render(node):
            if isinstance(node, tuple):
                return [render(c) for c in node]
            return node

        return {"dim": self.dim, "node": render(self.root)}

    @classmethod
    def from_json(cls, obj) -> "DyadicCubeSet":
        if not isinstance(obj, dict) or "dim" not in obj or "node" not in obj:
            raise ParseError("cube-set file must be {dim, node}")
        dim = obj["dim"]
        arity = 1 << dim

        def parse(node):
            if node in (FULL, EMPTY):
                return node
            if not isinstance(node, list) or len(node) != arity:
                raise ParseError(f"bad node {node!r}: need {arity} children")
            return _canon(tuple(parse(c) for c in node))

        return cls(dim, parse(obj["node"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "DyadicCubeSet":
        try:
            return cls.from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad cube-set file: {exc}") from None


def cube_of_point(point: Sequence[Fraction], level: int, dim: int) -> DyadicCube:
    """The level-k cube whose closure contains the point."""
    point = tuple(Fraction(x) for x in point)
    if len(point) != dim:
        raise ParameterError(f"point has dimension {len(point)}, expected {dim}")
    top = 1 << level
    corner = tuple(min((x * top).__floor__(), top - 1) for x in point)
    return DyadicCube(dim, level, corner)


def intervals_1d(cube_set: DyadicCubeSet) -> list[tuple[Fraction, Fraction]]:
    """Maximal closed intervals of a one-dimensional cube set."""
    if cube_set.dim != 1:
        raise ClassError("interval form needs dimension 1")
    out: list[tuple[Fraction, Fraction]] = []
    for leaf in cube_set.leaves():
        lo, hi = leaf.interval(0)
        if out and out[-1][1] == lo:
            out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


class CubeCombination:
    """Rational linear combination of cube-set indicators."""

    def __init__(self, dim: int, terms: Sequence[tuple[Fraction, DyadicCubeSet]]):
        self.dim = dim
        self.terms = [(Fraction(c), s) for c, s in terms]
        for _, s in self.terms:
            if s.dim != dim:
                raise DimensionMismatchError("term dimension mismatch")

    def eval(self, point) -> Fraction:
        return sum(
            (c for c, s in self.terms if s.contains_point(point)),
            ZERO,
        )

    def integral(self, region: DyadicCubeSet | None = None) -> Fraction:
        total = ZERO
        for c, s in self.terms:
            part = s if region is None else s.intersect(region)
            total += c * part.measure()
        return total

    def abs_pow_integral(self, p: int = 1, region: DyadicCubeSet | None = None) -> Fraction:
        """Exact integral of |f|^p over the region (default [0, 1]^n)."""
        if p < 1:
            raise ParameterError("p must be a positive integer")
        arity = 1 << self.dim
        coefs = tuple(c for c, _ in self.terms)
        roots = tuple(s.root for _, s in self.terms)
        reg = FULL if region is None else region.root

        def walk(nodes, reg_node) -> Fraction:
            if reg_node == EMPTY:
                return ZERO
            if all(not isinstance(n, tuple) for n in nodes) and not isinstance(
                reg_node, tuple
            ):
                value = sum(
                    (c for c, n in zip(coefs, nodes) if n == FULL), ZERO
                )
                return abs(value) ** p
            parts = [_split(n, arity) for n in nodes]
            reg_parts = _split(reg_node, arity)
            total = ZERO
            for i in range(arity):
                total += walk(tuple(pt[i] for pt in parts), reg_parts[i])
            return total / arity

        return walk(roots, reg)


def lp_power_norm_combination(f: CubeCombination, p: int = 1) -> Fraction:
    return f.abs_pow_integral(p)
