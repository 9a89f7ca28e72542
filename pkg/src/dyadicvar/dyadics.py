"""Exact rationals, dyadic rationals, and finite binary words.

Rationals are plain ``fractions.Fraction`` values. Binary words are
strings over ``"01"``; the empty word is allowed and denotes the root of
the binary tree. A word ``w`` is identified with the dyadic rational
``0.w`` in ``[0, 1)``.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterator

from .errors import InsufficientPrefixError, ParameterError, ParseError

Rat = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


def parse_rat(text: str) -> Fraction:
    """Parse ``"p/q"`` or ``"p"`` into an exact rational."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad rational {text!r}: {exc}") from None


def rat_str(x: Fraction) -> str:
    """Exact decimal-free rendering, ``p/q`` or ``p`` for integers."""
    return str(x)


def is_dyadic(x: Fraction) -> bool:
    """True when x has a power-of-two denominator."""
    d = x.denominator
    return d & (d - 1) == 0


def dyadic_level(x: Fraction) -> int:
    """Least k with x * 2**k integral; error for non-dyadic x."""
    if not is_dyadic(x):
        raise ParameterError(f"{x} is not a dyadic rational")
    return x.denominator.bit_length() - 1


def check_word(word: str) -> str:
    if any(c not in "01" for c in word):
        raise ParseError(f"bad binary word {word!r}")
    return word


def word_value(word: str) -> Fraction:
    """The dyadic rational 0.w in [0, 1)."""
    if not word:
        return ZERO
    return Fraction(int(word, 2), 1 << len(word))


def word_interval(word: str) -> tuple[Fraction, Fraction]:
    """The half-open interval [0.w, 0.w + 2^-|w|) as its endpoints."""
    lo = word_value(word)
    return lo, lo + Fraction(1, 1 << len(word))


def all_words(length: int) -> Iterator[str]:
    """All binary words of exactly the given length, lexicographically."""
    if length == 0:
        yield ""
        return
    for bits in itertools.product("01", repeat=length):
        yield "".join(bits)


def words_up_to(depth: int) -> Iterator[str]:
    for n in range(depth + 1):
        yield from all_words(n)


def bits_of(x: Fraction, length: int) -> str:
    """First ``length`` binary digits of x in [0, 1)."""
    if not ZERO <= x < ONE:
        raise ParameterError(f"{x} outside [0, 1)")
    k = (x * (1 << length)).__floor__()
    return format(k, f"0{length}b") if length else ""


def dyadic_to_word(x: Fraction, level: int) -> str:
    """Word w of the given length with 0.w == x; x must resolve at that level."""
    scaled = x * (1 << level)
    if scaled.denominator != 1:
        raise ParameterError(f"{x} is not a multiple of 2^-{level}")
    k = scaled.numerator
    if not 0 <= k < (1 << level) or (level == 0 and k != 0):
        raise ParameterError(f"{x} outside [0, 1) at level {level}")
    return format(k, f"0{level}b") if level else ""


def minimal_word(x: Fraction) -> str:
    """Shortest word w with 0.w == x, for dyadic x in [0, 1)."""
    return dyadic_to_word(x, dyadic_level(x))


def prefix(word: str, depth: int) -> str:
    if depth > len(word):
        raise InsufficientPrefixError(f"need {depth} bits, prefix has {len(word)}")
    return word[:depth]
