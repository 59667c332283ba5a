"""Polynomials over the coefficient rings Z_m.

Image patches become polynomials over Z_256 (pixel intensities as
coefficients) and token sequences become polynomials over Z_|V| (token ids as
coefficients). The representation is positional and fixed-length: coefficient
k is the degree-k term and trailing zeros are never stripped, so encoders can
emit a declared degree bound and downstream linear maps see a fixed input
width. An empty coefficient sequence is the zero polynomial.

All values are immutable and all operations are pure, so they are safe to
share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import zip_longest
from typing import Iterable, Sequence

from .errors import DomainError

PIXEL_MODULUS = 256


@dataclass(frozen=True)
class RingPoly:
    """A polynomial over Z_modulus, coefficients listed from degree 0 up."""

    modulus: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.modulus, int) or self.modulus < 2:
            raise DomainError(f"modulus must be an integer >= 2, got {self.modulus!r}")
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        for k, c in enumerate(self.coeffs):
            if not isinstance(c, int) or isinstance(c, bool):
                raise DomainError(f"coefficient at index {k} is not an integer: {c!r}")
            if not 0 <= c < self.modulus:
                raise DomainError(
                    f"coefficient at index {k} out of range [0, {self.modulus - 1}]: {c}"
                )

    def __len__(self) -> int:
        return len(self.coeffs)


def zero(modulus: int) -> RingPoly:
    """The zero polynomial of Z_modulus (empty coefficient sequence)."""
    return RingPoly(modulus, ())


def encode_patch(pixels: Sequence[int]) -> RingPoly:
    """Encode a flattened pixel patch as a polynomial over Z_256.

    Pixel k becomes the degree-k coefficient. The patch must be non-empty and
    every pixel must lie in [0, 255].
    """
    pixels = list(pixels)
    if not pixels:
        raise DomainError("patch must contain at least one pixel")
    for k, v in enumerate(pixels):
        if not isinstance(v, int) or isinstance(v, bool):
            raise DomainError(f"pixel at index {k} is not an integer: {v!r}")
        if not 0 <= v <= 255:
            raise DomainError(f"pixel at index {k} out of range [0, 255]: {v}")
    return RingPoly(PIXEL_MODULUS, tuple(pixels))


def encode_tokens(tokens: Iterable[int], vocab_size: int) -> RingPoly:
    """Encode a token-id sequence as a polynomial over Z_vocab_size.

    An empty sequence encodes the zero polynomial.
    """
    if not isinstance(vocab_size, int) or vocab_size < 2:
        raise DomainError(f"vocab_size must be an integer >= 2, got {vocab_size!r}")
    toks = list(tokens)
    for k, t in enumerate(toks):
        if not isinstance(t, int) or isinstance(t, bool):
            raise DomainError(f"token at index {k} is not an integer: {t!r}")
        if not 0 <= t < vocab_size:
            raise DomainError(
                f"token at index {k} out of range [0, {vocab_size - 1}]: {t}"
            )
    return RingPoly(vocab_size, tuple(toks))


def decode(p: RingPoly) -> list[int]:
    """Return the coefficient sequence verbatim (inverse of the encoders)."""
    return list(p.coeffs)


def ring_add(a: RingPoly, b: RingPoly) -> RingPoly:
    """Coefficient-wise sum mod m; the shorter operand is zero-padded."""
    if a.modulus != b.modulus:
        raise DomainError(f"modulus mismatch: {a.modulus} != {b.modulus}")
    m = a.modulus
    coeffs = tuple((x + y) % m for x, y in zip_longest(a.coeffs, b.coeffs, fillvalue=0))
    return RingPoly(m, coeffs)


def ring_mul(a: RingPoly, b: RingPoly) -> RingPoly:
    """Convolution product with coefficients reduced mod m.

    Result length is len(a) + len(b) - 1, or zero if either operand is the
    zero polynomial. Kept for algebraic completeness and property tests; the
    embedding pipeline consumes coefficient vectors directly.
    """
    if a.modulus != b.modulus:
        raise DomainError(f"modulus mismatch: {a.modulus} != {b.modulus}")
    m = a.modulus
    if not a.coeffs or not b.coeffs:
        return zero(m)
    out = [0] * (len(a.coeffs) + len(b.coeffs) - 1)
    for i, x in enumerate(a.coeffs):
        if x == 0:
            continue
        for j, y in enumerate(b.coeffs):
            out[i + j] = (out[i + j] + x * y) % m
    return RingPoly(m, tuple(out))
