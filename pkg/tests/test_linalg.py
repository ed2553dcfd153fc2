import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncbroadcast.gf import FieldContext
from ncbroadcast.linalg import CodedVector, KnowledgeSpace, Packed

GF2 = FieldContext(1)
GF4 = FieldContext(2)


def V(*coeffs):
    return CodedVector.from_list(coeffs)


def space(F, *rows):
    return KnowledgeSpace(F, [V(*r) for r in rows])


# -- brute-force oracle ------------------------------------------------------

def span(F, vectors, n):
    """Every linear combination, as length-n tuples."""
    out = {tuple([0] * n)}
    for v in vectors:
        vec = [v.get(i, 0) for i in range(1, n + 1)]
        out = {
            tuple(F.add(x, F.mul(c, y)) for x, y in zip(s, vec))
            for s in out
            for c in range(F.size)
        }
    return out


def unit(i, n):
    return tuple(1 if j == i else 0 for j in range(1, n + 1))


def oracle_seen(S, n):
    seen = set()
    for vec in S:
        nz = [i for i, c in enumerate(vec, 1) if c]
        if nz:
            seen.add(nz[0])
    return seen


def oracle_decoded(S, n):
    return {i for i in range(1, n + 1) if unit(i, n) in S}


# -- spec examples -----------------------------------------------------------

def test_reduce_examples():
    assert space(GF2, [1, 1, 0], [0, 1, 1]).reduce(V(1, 0, 1)) == {}
    assert KnowledgeSpace(GF4).reduce(V(0, 2, 1)) == V(0, 2, 1)
    assert space(GF2, [1, 0, 0]).reduce(V(1, 1, 0)) == V(0, 1, 0)


def test_insert_examples():
    K = KnowledgeSpace(GF2)
    assert K.insert(V(1, 0)) and K.rank == 1
    K = space(GF2, [1, 0], [0, 1])
    assert not K.insert(V(1, 1))
    assert K.rank == 2
    K = space(GF2, [1, 1, 0])
    assert K.insert(V(0, 1, 1))
    assert not K.insert(V(1, 0, 1))


def test_is_innovative_does_not_mutate():
    K = space(GF2, [1, 1, 0])
    before = K.basis()
    assert K.is_innovative(V(0, 1, 1))
    assert not K.is_innovative(V(1, 1, 0))
    assert K.basis() == before


def test_decoded_set_examples():
    assert space(GF2, [1, 0], [0, 1]).decoded_set() == {1, 2}
    assert space(GF2, [1, 1, 0]).decoded_set() == set()
    assert space(GF2, [1, 0, 0], [0, 1, 1]).decoded_set() == {1}


def test_seen_set_examples():
    assert space(GF2, [1, 1, 0]).seen_set() == {1}
    assert space(GF2, [0, 1]).seen_set() == {2}
    assert space(GF2, [1, 0, 1], [0, 1, 1]).seen_set() == {1, 2}


def test_delivered_prefix_examples():
    assert space(GF2, [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1]).delivered_prefix() == 2
    assert KnowledgeSpace(GF2).delivered_prefix() == 0
    assert space(GF2, [1]).delivered_prefix() == 1


def test_delivery_test_examples():
    assert KnowledgeSpace(GF2).delivery_test(V(1), 1)
    assert not space(GF2, [1, 0, 0]).delivery_test(V(0, 1, 1), 2)
    assert space(GF2, [0, 1, 1]).delivery_test(V(1, 1, 1), 1)


def test_oldest_unseen():
    assert KnowledgeSpace(GF2).oldest_unseen() == 1
    assert space(GF2, [1, 1, 0]).oldest_unseen() == 2
    assert space(GF2, [1, 0, 1], [0, 1, 1]).oldest_unseen() == 3
    assert space(GF2, [0, 1]).oldest_unseen() == 1


def test_rows_normalised_and_fully_reduced():
    K = space(GF4, [2, 3, 0, 1], [0, 3, 2, 0], [2, 1, 1, 1])
    basis = K.basis()
    for i, row in enumerate(basis):
        pivot = min(row)
        assert row[pivot] == 1
        for j, other in enumerate(basis):
            if j != i:
                assert other.get(pivot, 0) == 0


def test_compact_folds_decoded_prefix():
    K = space(GF2, [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1])
    assert K.compact() == 2
    assert K.base == 2
    assert K.rank == 3
    assert K.decoded_set() == {1, 2}
    assert K.seen_set() == {1, 2, 3}
    assert not K.is_innovative(V(1, 1, 1, 1))
    assert K.is_innovative(V(0, 0, 0, 1))
    K.insert(V(0, 0, 0, 1))
    assert K.compact() == 4


def test_packed_roundtrip_and_equality():
    v = V(0, 3, 1, 0, 2)
    p = v.pack(2, origin=1)
    assert p.to_vector() == v
    assert p == v and v == p
    assert len(p) == 3
    assert p.highest == 5
    assert not Packed(0, [0, 0])


def test_coded_vector_helpers():
    v = V(0, 2, 0, 1)
    assert v.to_list() == [0, 2, 0, 1]
    assert v.to_list(6) == [0, 2, 0, 1, 0, 0]
    assert (v.lowest, v.highest, v.nnz) == (2, 4, 2)
    assert CodedVector.unit(3) == {3: 1}


# -- properties against the oracle --------------------------------------------

def vectors(F, n, max_count=6):
    vec = st.lists(st.integers(0, F.size - 1), min_size=n, max_size=n).map(
        lambda xs: CodedVector.from_list(xs)
    )
    return st.lists(vec, max_size=max_count)


def nonzero_vector(F, n):
    return st.lists(st.integers(0, F.size - 1), min_size=n, max_size=n).filter(any).map(
        lambda xs: CodedVector.from_list(xs)
    )


@pytest.mark.parametrize("F", [GF2, GF4], ids=["gf2", "gf4"])
@settings(max_examples=150, deadline=None)
@given(data=st.data())
def test_queries_match_span_oracle(F, data):
    n = data.draw(st.integers(1, 5))
    vs = data.draw(vectors(F, n))
    K = KnowledgeSpace(F)
    inserted = []
    for v in vs:
        before = span(F, inserted, n)
        key = tuple(v.get(i, 0) for i in range(1, n + 1))
        innovative = key not in before
        assert K.is_innovative(v) == innovative
        rank_before = K.rank
        assert K.insert(v) == innovative
        assert K.rank == rank_before + innovative
        inserted.append(v)
    S = span(F, inserted, n)
    assert F.size ** K.rank == len(S)
    assert K.seen_set() == oracle_seen(S, n)
    assert K.decoded_set() == oracle_decoded(S, n)
    assert K.decoded_set() <= K.seen_set()
    dp = 0
    while dp < n and unit(dp + 1, n) in S:
        dp += 1
    assert K.delivered_prefix() == dp


@pytest.mark.parametrize("F", [GF2, GF4], ids=["gf2", "gf4"])
@settings(max_examples=150, deadline=None)
@given(data=st.data())
def test_delivery_test_matches_oracle(F, data):
    n = data.draw(st.integers(1, 4))
    K = KnowledgeSpace(F, data.draw(vectors(F, n, 4)))
    v = data.draw(nonzero_vector(F, n))
    target = data.draw(st.integers(1, n))
    S = span(F, K.basis(), n)
    S_plus = span(F, [*K.basis(), CodedVector.unit(target)], n)
    key = tuple(v.get(i, 0) for i in range(1, n + 1))
    expected = key in S_plus and key not in S
    assert K.delivery_test(v, target) == expected
    if expected:
        assert K.is_innovative(v)
        # inserting v decodes the target
        K2 = K.copy()
        K2.insert(v)
        assert K2.is_decoded(target)


@pytest.mark.parametrize("F", [GF2, GF4], ids=["gf2", "gf4"])
@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_reduce_residual_is_equivalent(F, data):
    n = data.draw(st.integers(1, 5))
    K = KnowledgeSpace(F, data.draw(vectors(F, n)))
    v = data.draw(nonzero_vector(F, n))
    r = K.reduce(v)
    S = span(F, K.basis(), n)
    diff = tuple(F.add(v.get(i, 0), r.get(i, 0)) for i in range(1, n + 1))
    assert diff in S
    assert (not r) == (not K.is_innovative(v))
    # the residual never touches a pivot column
    assert not set(r) & K.seen_set()


@pytest.mark.parametrize("F", [GF2, GF4], ids=["gf2", "gf4"])
@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_basis_independent_of_insertion_order(F, data):
    n = data.draw(st.integers(1, 6))
    vs = data.draw(vectors(F, n, 7))
    order = data.draw(st.permutations(range(len(vs))))
    a = KnowledgeSpace(F, vs)
    b = KnowledgeSpace(F, [vs[i] for i in order])
    assert a.basis() == b.basis()


@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_packed_and_dict_paths_agree(data):
    F = FieldContext(3)
    n = data.draw(st.integers(1, 8))
    vs = data.draw(vectors(F, n, 8))
    a, b = KnowledgeSpace(F), KnowledgeSpace(F)
    for v in vs:
        origin = data.draw(st.integers(0, a.base))
        p = v.pack(3, origin=0)
        assert a.is_innovative(v) == b.is_innovative(p)
        assert a.insert(v) == b.insert(p)
        a.compact()
        b.compact()
        assert a.basis() == b.basis()
        # the same vector viewed from a later origin drops only decoded entries
        shifted = CodedVector({k: c for k, c in v.items() if k > origin}).pack(3, origin)
        assert a.is_innovative(shifted) == a.is_innovative(v)


@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_compact_preserves_queries(data):
    F = GF4
    n = data.draw(st.integers(1, 6))
    vs = data.draw(vectors(F, n, 8))
    K = KnowledgeSpace(F, vs)
    ref = K.copy()
    K.compact()
    assert K.rank == ref.rank
    assert K.decoded_set() == ref.decoded_set()
    assert K.seen_set() == ref.seen_set()
    assert K.basis() == ref.basis()
    for v in itertools.islice(vs, 3):
        assert K.reduce(v) == ref.reduce(v)
