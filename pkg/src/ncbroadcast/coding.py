"""Coding block: choose the transmission vector for the current slot.

All three schemes satisfy the innovation guarantee: the output is innovative
to every receiver still missing something from the transmission queue.  The
sender's view of each receiver is the receiver's own :class:`KnowledgeSpace`
(feedback is perfect, so the two copies never differ).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .gf import FieldContext
from .linalg import CodedVector, KnowledgeSpace, Packed

MAX_RLNC_DRAWS = 10**5

SCHEMES = ("a", "b", "rlnc")


class CodingError(RuntimeError):
    """No coefficient in the field keeps the transmission innovative."""


@dataclass
class CodingInput:
    transmission_list_size: int
    receiver_spaces: Sequence[KnowledgeSpace]
    field: FieldContext
    rng: random.Random | None = None
    # absolute index of the oldest packet still in the queue
    queue_start: int = 1

    @property
    def queue_end(self) -> int:
        return self.queue_start + self.transmission_list_size - 1


@dataclass
class CodingOutput:
    # RLNC returns the bit-sliced form; both compare equal to a plain dict
    vector: CodedVector | Packed
    effective_list_size: int
    draws: int = field(default=0)

    @property
    def coded_packet_count(self) -> int:
        return len(self.vector)

    def as_vector(self) -> CodedVector:
        v = self.vector
        return v.to_vector() if isinstance(v, Packed) else v


def complete_receivers(inp: CodingInput) -> set[int]:
    """Receivers whose rank already covers the whole queue."""
    end = inp.queue_end
    return {i for i, s in enumerate(inp.receiver_spaces) if s.rank >= end}


def _incomplete(inp: CodingInput) -> list[KnowledgeSpace]:
    end = inp.queue_end
    out = [s for s in inp.receiver_spaces if s.rank < end]
    if not out:
        raise ValueError("every receiver is complete; nothing to encode")
    return out


def _effective_size(inp: CodingInput) -> int:
    best = max(s.rank for s in inp.receiver_spaces)
    return min(best + 1, inp.queue_end) - inp.queue_start + 1


def encode_scheme_a(inp: CodingInput) -> CodingOutput:
    """Combine each receiver's oldest unseen packet, oldest first.

    Each coefficient is the smallest nonzero field value for which every
    receiver owning that packet sees it on reception.  Zero is the last
    resort: with M = R a group can rule out every nonzero value while the
    packet is already seen through the partial sum.
    """
    groups: dict[int, list[KnowledgeSpace]] = {}
    for s in _incomplete(inp):
        groups.setdefault(s.oldest_unseen(), []).append(s)

    size = inp.field.size
    v = CodedVector()
    for u in sorted(groups):
        # later packets never touch the residual at u, so fixing it now is final
        forbidden = {s.reduce(v).get(u, 0) for s in groups[u]}
        c = next((c for c in (*range(1, size), 0) if c not in forbidden), None)
        if c is None:
            raise CodingError(f"no coefficient for packet {u} in GF({size})")
        if c:
            v[u] = c
    return CodingOutput(v, _effective_size(inp))


def encode_scheme_b(inp: CodingInput) -> CodingOutput:
    """Minimal combination of next-needed packets, scanned newest first."""
    groups: dict[int, list[KnowledgeSpace]] = {}
    for s in _incomplete(inp):
        groups.setdefault(s.delivered_prefix() + 1, []).append(s)

    order = sorted(groups, reverse=True)
    v = CodedVector({order[0]: 1})
    size = inp.field.size
    for n in order[1:]:
        group = groups[n]
        if all(s.is_innovative(v) for s in group):
            continue
        for c in range(1, size):
            w = CodedVector(v)
            w[n] = c
            if all(s.is_innovative(w) for s in group):
                v = w
                break
        else:
            raise CodingError(f"no coefficient for packet {n} in GF({size})")
    return CodingOutput(v, _effective_size(inp))


def encode_rlnc(inp: CodingInput) -> CodingOutput:
    """Uniform random combination of the whole queue, redrawn until innovative."""
    incomplete = _incomplete(inp)
    rng = inp.rng if inp.rng is not None else random.Random()
    m = inp.field.m
    length = inp.transmission_list_size
    origin = inp.queue_start - 1
    getbits = rng.getrandbits
    for draws in range(1, MAX_RLNC_DRAWS + 1):
        # independent uniform bits give uniform coefficients in GF(2^m)
        v = Packed(origin, [getbits(length) for _ in range(m)])
        if v and all(s.is_innovative(v) for s in incomplete):
            return CodingOutput(v, inp.transmission_list_size, draws)
    raise CodingError(f"no innovative RLNC draw after {MAX_RLNC_DRAWS} attempts")


ENCODERS = {
    "a": encode_scheme_a,
    "b": encode_scheme_b,
    "rlnc": encode_rlnc,
}


def encode(scheme: str, inp: CodingInput) -> CodingOutput:
    try:
        encoder = ENCODERS[scheme]
    except KeyError:
        raise ValueError(f"unknown coding scheme {scheme!r}") from None
    return encoder(inp)
