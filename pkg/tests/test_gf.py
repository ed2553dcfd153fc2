import itertools

import pytest

from ncbroadcast.gf import REDUCTION_POLYNOMIALS, FieldContext, is_irreducible


def naive_mul(a, b, poly, m):
    """Schoolbook carry-less product followed by long division."""
    prod = 0
    for i in range(m):
        if (b >> i) & 1:
            prod ^= a << i
    for shift in range(2 * m - 2, m - 1, -1):
        if (prod >> shift) & 1:
            prod ^= poly << (shift - m)
    return prod


def brute_irreducible(poly):
    degree = poly.bit_length() - 1
    for d in range(2, 1 << degree):
        # polynomial long division by every lower-degree candidate
        r = poly
        dd = d.bit_length() - 1
        while r.bit_length() - 1 >= dd:
            r ^= d << (r.bit_length() - 1 - dd)
        if r == 0 and 0 < dd < degree:
            return False
    return True


@pytest.mark.parametrize("m", range(1, 9))
def test_reduction_polynomials_irreducible(m):
    poly = REDUCTION_POLYNOMIALS[m]
    assert poly.bit_length() - 1 == m
    assert brute_irreducible(poly)
    assert is_irreducible(poly)


def test_conventional_polynomials():
    assert REDUCTION_POLYNOMIALS[2] == 0b111
    assert REDUCTION_POLYNOMIALS[3] == 0b1011
    assert REDUCTION_POLYNOMIALS[4] == 0b10011
    assert REDUCTION_POLYNOMIALS[8] == 0x11B


def test_is_irreducible_rejects_products():
    # (x+1)^2 = x^2+1, x(x^2+x+1)
    assert not is_irreducible(0b101)
    assert not is_irreducible(0b1110)


def test_gf4_examples():
    F = FieldContext(2)
    assert F.add(2, 3) == 1
    assert F.mul(2, 2) == 3
    assert F.mul(2, 3) == 1
    assert F.inv(2) == 3


def test_gf2_examples():
    F = FieldContext(1)
    assert F.add(1, 1) == 0
    assert F.inv(1) == 1
    for a, b in itertools.product(range(2), repeat=2):
        assert F.mul(a, b) == (a & b)
        assert F.add(a, b) == (a ^ b)


def test_gf256_known_products():
    F = FieldContext(8)
    assert F.mul(0x57, 0x83) == 0xC1
    assert F.mul(0x57, 0x13) == 0xFE
    assert F.inv(0x53) == 0xCA


@pytest.mark.parametrize("m", range(1, 9))
def test_mul_matches_schoolbook(m):
    F = FieldContext(m)
    poly = REDUCTION_POLYNOMIALS[m]
    step = 1 if m <= 5 else 7
    for a in range(0, F.size, step):
        for b in range(F.size):
            assert F.mul(a, b) == naive_mul(a, b, poly, m)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_field_axioms_exhaustive(m):
    F = FieldContext(m)
    els = range(F.size)
    for a in els:
        assert F.add(a, 0) == a
        assert F.add(a, a) == 0
        assert F.mul(a, 1) == a
        assert F.mul(a, 0) == 0
        if a:
            assert F.mul(a, F.inv(a)) == 1
            assert sum(F.mul(a, b) == 1 for b in els) == 1
    for a, b in itertools.product(els, repeat=2):
        assert F.add(a, b) == F.add(b, a)
        assert F.mul(a, b) == F.mul(b, a)
    for a, b, c in itertools.product(els, repeat=3):
        assert F.add(F.add(a, b), c) == F.add(a, F.add(b, c))
        assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))


@pytest.mark.parametrize("m", range(4, 9))
def test_inverses(m):
    F = FieldContext(m)
    for a in range(1, F.size):
        assert F.mul(a, F.inv(a)) == 1
        assert F.div(a, a) == 1


def test_inverse_of_zero_raises():
    with pytest.raises(ZeroDivisionError):
        FieldContext(3).inv(0)


def test_non_primitive_polynomial_still_works():
    # x^4+x^3+x^2+x+1 is irreducible but x has order 5
    F = FieldContext(4, 0b11111)
    for a in range(1, 16):
        assert F.mul(a, F.inv(a)) == 1
    for a, b in itertools.product(range(16), repeat=2):
        assert F.mul(a, b) == naive_mul(a, b, 0b11111, 4)


def test_reducible_polynomial_rejected():
    with pytest.raises(ValueError):
        FieldContext(2, 0b101)


@pytest.mark.parametrize("R,size", [(1, 2), (2, 2), (3, 4), (4, 4), (5, 8), (8, 8), (10, 16)])
def test_for_receivers(R, size):
    assert FieldContext.for_receivers(R).size == size


def test_membership_and_equality():
    F = FieldContext(3)
    assert 7 in F and 8 not in F and -1 not in F
    assert F == FieldContext(3)
    assert F != FieldContext(2)
    assert hash(F) == hash(FieldContext(3))
