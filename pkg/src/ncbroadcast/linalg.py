"""Coded vectors and receiver knowledge spaces over GF(2^m).

Packets are indexed absolutely from 1 and never re-indexed when the sender
drops them from its queue.  A :class:`KnowledgeSpace` keeps its basis in
fully reduced row-echelon form with each row pivoted at its *lowest* nonzero
index, so "seen" packets are exactly the pivot positions and "decoded"
packets are the single-entry rows.

Rows are stored bit-sliced: a vector over GF(2^m) is ``m`` Python ints, plane
``j`` holding bit ``j`` of every coefficient.  Adding a scaled row is then a
few big-int XORs no matter how long the window is.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from .gf import FieldContext


class CodedVector(dict):
    """Sparse coefficient vector ``{packet index: coefficient}``.

    Zero coefficients are never stored, so equality is canonical.
    """

    @classmethod
    def from_list(cls, coefficients: Iterable[int], start: int = 1) -> "CodedVector":
        return cls({i: c for i, c in enumerate(coefficients, start) if c})

    @classmethod
    def unit(cls, index: int) -> "CodedVector":
        return cls({index: 1})

    def to_list(self, length: int | None = None, start: int = 1) -> list[int]:
        if length is None:
            length = max(self, default=start - 1) - start + 1
        return [self.get(i, 0) for i in range(start, start + length)]

    @property
    def nnz(self) -> int:
        return len(self)

    @property
    def lowest(self) -> int | None:
        return min(self) if self else None

    @property
    def highest(self) -> int | None:
        return max(self) if self else None

    def pack(self, m: int, origin: int = 0) -> "Packed":
        return Packed(origin, _planes_from_items(self.items(), m, origin))


class Packed:
    """Bit-sliced vector; bit ``b`` of each plane is packet ``origin + 1 + b``."""

    __slots__ = ("origin", "planes")

    def __init__(self, origin: int, planes: Sequence[int]):
        self.origin = origin
        self.planes = tuple(planes)

    @property
    def support(self) -> int:
        out = 0
        for p in self.planes:
            out |= p
        return out

    def __bool__(self) -> bool:
        return any(self.planes)

    def __len__(self) -> int:
        return self.support.bit_count()

    @property
    def highest(self) -> int | None:
        s = self.support
        return self.origin + s.bit_length() if s else None

    def items(self):
        return _planes_to_dict(self.planes, self.origin).items()

    def to_vector(self) -> CodedVector:
        return CodedVector(_planes_to_dict(self.planes, self.origin))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Packed):
            return self.to_vector() == other.to_vector()
        if isinstance(other, Mapping):
            return self.to_vector() == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        return f"Packed({dict(self.to_vector())})"


def _planes_from_items(items, m: int, origin: int) -> list[int]:
    planes = [0] * m
    for k, c in items:
        if not c or k <= origin:
            continue
        bit = 1 << (k - origin - 1)
        j = 0
        while c:
            if c & 1:
                planes[j] |= bit
            c >>= 1
            j += 1
    return planes


def _planes_to_dict(planes: Sequence[int], origin: int) -> dict[int, int]:
    sup = 0
    for p in planes:
        sup |= p
    out = {}
    while sup:
        low = sup & -sup
        b = low.bit_length() - 1
        c = 0
        for j, p in enumerate(planes):
            if p & low:
                c |= 1 << j
        out[origin + 1 + b] = c
        sup ^= low
    return out


class _SlicedOps:
    """Scalar multiply and axpy on bit-sliced vectors for one field."""

    def __init__(self, field: FieldContext):
        m = field.m
        self.m = m
        # mix[c][j] = input planes i whose XOR gives output plane j of c * x
        self.mix = [
            [tuple(i for i in range(m) if (field.mul(c, 1 << i) >> j) & 1) for j in range(m)]
            for c in range(field.size)
        ]

    def scale(self, x: Sequence[int], c: int) -> list[int]:
        out = []
        for sources in self.mix[c]:
            acc = 0
            for i in sources:
                acc ^= x[i]
            out.append(acc)
        return out

    def axpy(self, y: list[int], c: int, x: Sequence[int]) -> None:
        for j, sources in enumerate(self.mix[c]):
            acc = y[j]
            for i in sources:
                acc ^= x[i]
            y[j] = acc


_OPS_CACHE: dict[FieldContext, _SlicedOps] = {}


def _ops(field: FieldContext) -> _SlicedOps:
    ops = _OPS_CACHE.get(field)
    if ops is None:
        ops = _OPS_CACHE[field] = _SlicedOps(field)
    return ops


def _coef(planes: Sequence[int], bit: int) -> int:
    c = 0
    for j, p in enumerate(planes):
        if (p >> bit) & 1:
            c |= 1 << j
    return c


def _support(planes: Sequence[int]) -> int:
    out = 0
    for p in planes:
        out |= p
    return out


class KnowledgeSpace:
    """Span of the vectors a node has received.

    ``rows`` maps absolute pivot index to a bit-sliced row (relative to
    ``base``) whose pivot coefficient is 1.  The decoded prefix ``1..base``
    is kept implicitly; it still counts toward rank and decoding.
    """

    __slots__ = ("field", "rows", "base", "pivots", "_ops", "_memo")

    def __init__(self, field: FieldContext, vectors: Iterable[Mapping[int, int]] = ()):
        self.field = field
        self._ops = _ops(field)
        self.rows: dict[int, list[int]] = {}
        self.base = 0
        self.pivots = 0  # bitmask of pivot positions relative to base
        # (vector, residual) from the last full reduction; cleared on mutation
        self._memo = None
        for v in vectors:
            self.insert(v)

    def copy(self) -> "KnowledgeSpace":
        other = KnowledgeSpace(self.field)
        other.rows = {p: list(r) for p, r in self.rows.items()}
        other.base = self.base
        other.pivots = self.pivots
        return other

    @property
    def rank(self) -> int:
        return self.base + len(self.rows)

    def __len__(self) -> int:
        return self.rank

    # conversion -----------------------------------------------------------

    def _planes(self, v) -> list[int]:
        base = self.base
        if isinstance(v, Packed):
            shift = base - v.origin
            if shift >= 0:
                return [p >> shift for p in v.planes]
            return [p << -shift for p in v.planes]
        return _planes_from_items(v.items(), self._ops.m, base)

    def _reduce_planes(self, r: list[int]) -> list[int]:
        hits = _support(r) & self.pivots
        if not hits:
            return r
        rows = self.rows
        offset = self.base + 1
        axpy = self._ops.axpy
        # rows are fully reduced, so eliminating one pivot never touches
        # another pivot column; a single pass over the hits suffices
        while hits:
            low = hits & -hits
            b = low.bit_length() - 1
            axpy(r, _coef(r, b), rows[offset + b])
            hits ^= low
        return r

    # queries ----------------------------------------------------------------

    def reduce(self, v) -> CodedVector:
        """Residual of ``v`` after eliminating against the basis."""
        return CodedVector(_planes_to_dict(self._reduce_planes(self._planes(v)), self.base))

    def is_innovative(self, v) -> bool:
        r = self._planes(v)
        sup = _support(r)
        if not sup:
            return False
        # elimination only writes above each pivot used, so a non-pivot
        # lowest entry survives untouched
        if not (sup & -sup) & self.pivots:
            return True
        r = self._reduce_planes(r)
        if isinstance(v, Packed):  # immutable, so identity is a safe key
            self._memo = (v, r)
        return any(r)

    def contains(self, v) -> bool:
        return not self.is_innovative(v)

    def insert(self, v) -> bool:
        """Add ``v`` to the space.  Returns True iff it was innovative."""
        memo = self._memo
        if memo is not None and memo[0] is v:
            r = list(memo[1])
        else:
            r = self._reduce_planes(self._planes(v))
        self._memo = None
        sup = _support(r)
        if not sup:
            return False
        ops = self._ops
        low = sup & -sup
        b = low.bit_length() - 1
        lead = _coef(r, b)
        if lead != 1:
            r = ops.scale(r, self.field.inv_table[lead])
        # clear the new pivot column from rows pivoted below it
        offset = self.base + 1
        below = self.pivots & (low - 1)
        while below:
            lb = below & -below
            row = self.rows[offset + lb.bit_length() - 1]
            c = _coef(row, b)
            if c:
                ops.axpy(row, c, r)
            below ^= lb
        self.rows[offset + b] = r
        self.pivots |= low
        return True

    def is_decoded(self, index: int) -> bool:
        if index <= self.base:
            return True
        row = self.rows.get(index)
        if row is None:
            return False
        sup = _support(row)
        return sup & (sup - 1) == 0

    def decoded_set(self) -> set[int]:
        out = set(range(1, self.base + 1))
        out.update(p for p in self.rows if self.is_decoded(p))
        return out

    def seen_set(self) -> set[int]:
        out = set(range(1, self.base + 1))
        out.update(self.rows)
        return out

    def oldest_unseen(self) -> int:
        """Smallest packet index that is not a pivot."""
        free = ~self.pivots
        return self.base + (free & -free).bit_length()

    def delivered_prefix(self) -> int:
        n = self.base
        while self.rows.get(n + 1) is not None and self.is_decoded(n + 1):
            n += 1
        return n

    def compact(self) -> int:
        """Fold the decoded prefix into ``base``; returns the new base."""
        n = self.delivered_prefix()
        d = n - self.base
        if d:
            self._memo = None
            rows = self.rows
            for i in range(self.base + 1, n + 1):
                del rows[i]
            for p, row in rows.items():
                for j in range(len(row)):
                    row[j] >>= d
            self.pivots >>= d
            self.base = n
        return n

    def delivery_test(self, v, n: int) -> bool:
        """True iff receiving ``v`` would let this node decode packet ``n``.

        With ``n`` the next needed packet this is the in-order delivery test:
        ``v`` lies in span(K u {e_n}) but not in K.
        """
        r = self._reduce_planes(self._planes(v))
        if not any(r):
            return False
        en = self._reduce_planes(self._planes({n: 1}))
        sup = _support(en)
        if not sup:
            return False
        # r in span(K u e_n) iff r is a nonzero multiple of reduce(e_n)
        b = (sup & -sup).bit_length() - 1
        c = self.field.div(_coef(r, b), _coef(en, b))
        return c != 0 and self._ops.scale(en, c) == r

    def basis(self) -> list[CodedVector]:
        """Explicit basis rows, decoded prefix included, in pivot order."""
        out = [CodedVector.unit(i) for i in range(1, self.base + 1)]
        out.extend(CodedVector(_planes_to_dict(self.rows[p], self.base)) for p in sorted(self.rows))
        return out

    def __repr__(self) -> str:
        return f"KnowledgeSpace(rank={self.rank}, base={self.base}, rows={len(self.rows)})"
