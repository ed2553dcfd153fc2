"""Arithmetic in GF(2^m) backed by log/antilog tables.

Elements are plain ints in ``[0, 2**m)``.  Addition is XOR; multiplication
and inversion go through precomputed tables so the simulator hot path is a
couple of list lookups.
"""

from __future__ import annotations

# Conventional irreducible (primitive) polynomials, bit pattern includes x^m.
REDUCTION_POLYNOMIALS = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: 0b100011011,
}


def poly_mulmod(a: int, b: int, poly: int, m: int) -> int:
    """Carry-less product of ``a`` and ``b`` reduced modulo ``poly``."""
    result = 0
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a >> m:
            a ^= poly
    return result


def is_irreducible(poly: int) -> bool:
    """Exhaustive trial division over GF(2); fine for degree <= 16."""
    degree = poly.bit_length() - 1
    if degree < 1:
        return False
    for d in range(2, 1 << ((degree // 2) + 1)):
        if _poly_mod(poly, d) == 0:
            return False
    return True


def _poly_mod(a: int, d: int) -> int:
    dd = d.bit_length()
    while a.bit_length() >= dd:
        a ^= d << (a.bit_length() - dd)
    return a


class FieldContext:
    """The field GF(2^m).

    Immutable after construction.  ``mul_table[a][b]`` and ``inv_table[a]``
    are exposed for callers that want to skip the method-call overhead.
    """

    def __init__(self, m: int, reduction_polynomial: int | None = None):
        if m < 1:
            raise ValueError(f"field exponent must be >= 1, got {m}")
        if reduction_polynomial is None:
            if m not in REDUCTION_POLYNOMIALS:
                raise ValueError(f"no default reduction polynomial for m={m}")
            reduction_polynomial = REDUCTION_POLYNOMIALS[m]
        if reduction_polynomial.bit_length() - 1 != m:
            raise ValueError("reduction polynomial degree does not match m")
        if not is_irreducible(reduction_polynomial):
            raise ValueError(f"polynomial {reduction_polynomial:#b} is reducible")
        self.m = m
        self.size = 1 << m
        self.reduction_polynomial = reduction_polynomial
        self._build_tables()

    def _build_tables(self) -> None:
        size, m, poly = self.size, self.m, self.reduction_polynomial
        order = size - 1
        # find a generator; x itself is primitive for every default polynomial
        # but a caller-supplied irreducible need not be
        gen = None
        for cand in range(2 if size > 2 else 1, size):
            x, seen = 1, set()
            for _ in range(order):
                seen.add(x)
                x = poly_mulmod(x, cand, poly, m)
            if len(seen) == order:
                gen = cand
                break
        assert gen is not None

        exp = [0] * (2 * order)
        log = [0] * size
        x = 1
        for i in range(order):
            exp[i] = x
            log[x] = i
            x = poly_mulmod(x, gen, poly, m)
        for i in range(order, 2 * order):
            exp[i] = exp[i - order]
        self.exp_table = exp
        self.log_table = log

        mul = [[0] * size for _ in range(size)]
        for a in range(1, size):
            la = log[a]
            row = mul[a]
            for b in range(1, size):
                row[b] = exp[la + log[b]]
        self.mul_table = mul
        inv = [0] * size
        for a in range(1, size):
            inv[a] = exp[(order - log[a]) % order]
        self.inv_table = inv

    @classmethod
    def for_receivers(cls, receivers: int) -> "FieldContext":
        """Smallest GF(2^m) with at least ``receivers`` elements (and m >= 1)."""
        m = 1
        while (1 << m) < receivers:
            m += 1
        return cls(m)

    def add(self, a: int, b: int) -> int:
        return a ^ b

    sub = add

    def mul(self, a: int, b: int) -> int:
        return self.mul_table[a][b]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return self.inv_table[a]

    def div(self, a: int, b: int) -> int:
        return self.mul_table[a][self.inv(b)]

    def __contains__(self, a: object) -> bool:
        return isinstance(a, int) and 0 <= a < self.size

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FieldContext)
            and self.m == other.m
            and self.reduction_polynomial == other.reduction_polynomial
        )

    def __hash__(self) -> int:
        return hash((self.m, self.reduction_polynomial))

    def __repr__(self) -> str:
        return f"FieldContext(m={self.m}, poly={self.reduction_polynomial:#x})"
