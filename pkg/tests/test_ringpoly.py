import numpy as np
import pytest

from fiberalign.errors import DomainError
from fiberalign.ringpoly import (
    RingPoly,
    decode,
    encode_patch,
    encode_tokens,
    ring_add,
    ring_mul,
    zero,
)


def test_encode_patch_example():
    p = encode_patch([7, 255, 12])
    assert p.modulus == 256
    assert p.coeffs == (7, 255, 12)


def test_encode_patch_zero_constant():
    assert encode_patch([0]).coeffs == (0,)


def test_patch_round_trip():
    assert decode(encode_patch([5, 0, 0, 200])) == [5, 0, 0, 200]


def test_patch_out_of_range_names_index():
    with pytest.raises(DomainError, match="index 1"):
        encode_patch([3, 300])
    with pytest.raises(DomainError, match="index 0"):
        encode_patch([-1])


def test_patch_must_be_nonempty():
    with pytest.raises(DomainError):
        encode_patch([])


def test_patch_rejects_non_integers():
    with pytest.raises(DomainError):
        encode_patch([1.5, 2])


def test_encode_tokens_example():
    q = encode_tokens([101, 2023], 50000)
    assert q.modulus == 50000
    assert q.coeffs == (101, 2023)


def test_encode_tokens_empty_is_zero_poly():
    assert encode_tokens([], 50000).coeffs == ()


def test_encode_tokens_boundary():
    assert encode_tokens([49999], 50000).coeffs == (49999,)


def test_encode_tokens_rejects_out_of_vocab():
    with pytest.raises(DomainError, match="index 0"):
        encode_tokens([50000], 50000)


def test_decode_zero_poly():
    assert decode(zero(256)) == []


def test_decode_of_sum_with_zero():
    p = encode_patch([9, 8])
    assert decode(ring_add(p, zero(256))) == decode(p)


def test_ring_add_wraps():
    a = RingPoly(256, (250, 7))
    b = RingPoly(256, (10, 250))
    assert ring_add(a, b).coeffs == (4, 1)


def test_ring_add_identity():
    p = RingPoly(256, (1, 2, 3))
    assert ring_add(p, zero(256)) == p


def test_ring_add_complement():
    p = RingPoly(7, (0, 3, 6))
    comp = RingPoly(7, tuple(6 - c for c in p.coeffs))
    assert ring_add(p, comp).coeffs == (6, 6, 6)


def test_ring_add_zero_pads_shorter():
    a = RingPoly(256, (1,))
    b = RingPoly(256, (1, 2, 3))
    assert ring_add(a, b).coeffs == (2, 2, 3)


def test_ring_add_modulus_mismatch():
    with pytest.raises(DomainError, match="modulus"):
        ring_add(RingPoly(256, (1,)), RingPoly(7, (1,)))


def test_ring_mul_binomial():
    p = RingPoly(256, (1, 1))
    assert ring_mul(p, p).coeffs == (1, 2, 1)


def test_ring_mul_by_zero_poly():
    p = RingPoly(256, (1, 2))
    assert ring_mul(p, zero(256)).coeffs == ()


def test_ring_mul_zero_divisor():
    # 256 mod 256 = 0: a nonzero product collapses to all-zero coefficients
    a = RingPoly(256, (128, 0))
    b = RingPoly(256, (2,))
    assert ring_mul(a, b).coeffs == (0, 0)


def test_ring_mul_modulus_mismatch():
    with pytest.raises(DomainError):
        ring_mul(RingPoly(256, (1,)), RingPoly(255, (1,)))


def _random_poly(rng, modulus, max_len=6):
    length = int(rng.integers(0, max_len + 1))
    return RingPoly(modulus, tuple(int(v) for v in rng.integers(0, modulus, length)))


@pytest.mark.parametrize("modulus", [256, 7])
def test_ring_axioms_randomized(modulus):
    rng = np.random.default_rng(1234 + modulus)
    for _ in range(200):
        a = _random_poly(rng, modulus)
        b = _random_poly(rng, modulus)
        c = _random_poly(rng, modulus)
        assert ring_add(a, b) == ring_add(b, a)
        assert ring_add(ring_add(a, b), c) == ring_add(a, ring_add(b, c))
        assert ring_mul(ring_mul(a, b), c) == ring_mul(a, ring_mul(b, c))
        lhs = ring_mul(a, ring_add(b, c))
        rhs = ring_add(ring_mul(a, b), ring_mul(a, c))
        # distributivity up to positional padding: compare values, padded
        n = max(len(lhs.coeffs), len(rhs.coeffs), 1)
        pad = lambda p: p.coeffs + (0,) * (n - len(p.coeffs))
        assert pad(lhs) == pad(rhs)
        assert ring_add(a, zero(modulus)) == a
        for p in (ring_add(a, b), ring_mul(a, b)):
            assert all(0 <= v < modulus for v in p.coeffs)


def test_round_trip_randomized():
    rng = np.random.default_rng(99)
    for _ in range(500):
        pixels = [int(v) for v in rng.integers(0, 256, int(rng.integers(1, 12)))]
        assert decode(encode_patch(pixels)) == pixels
        toks = [int(v) for v in rng.integers(0, 50000, int(rng.integers(0, 12)))]
        assert decode(encode_tokens(toks, 50000)) == toks
