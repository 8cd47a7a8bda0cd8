"""Bin allocation for an interleaved-FDMA band.

Bins are bookkept as a buddy system over the scheme's allowed block
sizes.  ``free[j]`` holds the start indexes of the *maximal* free
aligned blocks of size ``block_sizes[j]``: whenever every child of a
parent block is free the children are coalesced, so the free lists are
exactly the maximal free aligned ranges at all times.

Admission policies for a single request of an allowed size:

* ``min_small_change`` takes the smallest adequate free block (ties by
  lowest start) and splits it keeping the lower-indexed child.
* ``random`` picks uniformly among the maximal free blocks of exactly
  the requested size.  Only when no exact-size block exists does it
  split: it draws one of the larger maximal blocks uniformly and walks
  down with a uniform child choice at every level.

``allocate_batch_sync`` packs a whole batch into a clean band, either
sort-first (descending size, left to right) or by repeated
``min_small_change`` admissions in arrival order.  ``admit_multistream``
serves a request of arbitrary size by gathering several allowed-size
blocks, so it never blocks on fragmentation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from random import Random

from .mapping import AlignedRange, RadixScheme, bin_for_subcarrier, range_to_subcarriers

MIN_SMALL_CHANGE = "min_small_change"
RANDOM = "random"
SORT_FIRST = "sort_first"


class BatchRejected(Exception):
    """A synchronous batch exceeds capacity (or hit an unplaceable request)."""


@dataclass(frozen=True)
class Request:
    id: int
    size: int


class AdmissionStatus(enum.Enum):
    GRANTED = "granted"
    BLOCKED_OVERLOAD = "blocked_overload"
    BLOCKED_FRAGMENTATION = "blocked_fragmentation"


@dataclass(eq=False)
class Allocation:
    """Bins granted to one request, as one or more aligned ranges."""

    request_id: int
    ranges: tuple[AlignedRange, ...]
    scheme: RadixScheme

    @property
    def size(self) -> int:
        return sum(r.size for r in self.ranges)

    @cached_property
    def subcarriers(self) -> frozenset[int]:
        out: frozenset[int] = frozenset()
        for r in self.ranges:
            out |= range_to_subcarriers(r, self.scheme)
        return out


@dataclass(frozen=True)
class AdmissionOutcome:
    status: AdmissionStatus
    allocation: Allocation | None = None

    @property
    def granted(self) -> bool:
        return self.status is AdmissionStatus.GRANTED


_BLOCKED_OVERLOAD = AdmissionOutcome(AdmissionStatus.BLOCKED_OVERLOAD)
_BLOCKED_FRAGMENTATION = AdmissionOutcome(AdmissionStatus.BLOCKED_FRAGMENTATION)


class BinState:
    """Occupancy of one band: active allocations, blocked bins, free lists."""

    __slots__ = ("scheme", "free", "free_count", "occupancy", "groups", "blocked",
                 "_sizes", "_fanout", "_top")

    def __init__(self, scheme: RadixScheme, blocked_bins: tuple[int, ...] = ()):
        self.scheme = scheme
        self._sizes = scheme.block_sizes
        self._fanout = scheme.inner_radices
        self._top = scheme.levels
        self.free: list[set[int]] = [set() for _ in range(self._top + 1)]
        self.free[self._top].add(0)
        self.free_count = scheme.size
        self.occupancy = 0
        self.groups: dict[int, tuple[AlignedRange, ...]] = {}
        self.blocked = frozenset(blocked_bins)
        for b in sorted(self.blocked):
            if not 0 <= b < scheme.size:
                raise ValueError(f"blocked bin {b} out of range for band size {scheme.size}")
            self._carve(b, 0)
            self.occupancy |= 1 << b
            self.free_count -= 1

    def clone(self) -> "BinState":
        other = BinState.__new__(BinState)
        other.scheme = self.scheme
        other._sizes = self._sizes
        other._fanout = self._fanout
        other._top = self._top
        other.free = [set(fs) for fs in self.free]
        other.free_count = self.free_count
        other.occupancy = self.occupancy
        other.groups = dict(self.groups)
        other.blocked = self.blocked
        return other

    # -- free-list surgery ------------------------------------------------

    def _carve(self, start: int, level: int) -> None:
        """Claim the aligned block [start, start + sizes[level]) out of free space."""
        sizes = self._sizes
        free = self.free
        for j in range(level, self._top + 1):
            block = start - start % sizes[j]
            if block in free[j]:
                free[j].discard(block)
                self._split_towards(j, block, level, start)
                return
        raise ValueError(
            f"bins [{start}, {start + sizes[level]}) are not entirely free"
        )

    def _split_towards(self, j: int, block: int, level: int, target: int) -> None:
        """Free every part of a claimed level-j block except the target child chain."""
        sizes = self._sizes
        fanout = self._fanout
        free = self.free
        s = block
        for k in range(j - 1, level - 1, -1):
            step = sizes[k]
            idx = (target - s) // step
            add = free[k].add
            for c in range(fanout[k]):
                if c != idx:
                    add(s + c * step)
            s += idx * step

    def _release_block(self, start: int, level: int) -> None:
        """Return one aligned block to the free lists, coalescing full sibling sets."""
        free = self.free
        sizes = self._sizes
        fanout = self._fanout
        j = level
        s = start
        while j < self._top:
            parent = s - s % sizes[j + 1]
            fs = free[j]
            step = sizes[j]
            merged = True
            for c in range(fanout[j]):
                sib = parent + c * step
                if sib != s and sib not in fs:
                    merged = False
                    break
            if not merged:
                fs.add(s)
                return
            for c in range(fanout[j]):
                sib = parent + c * step
                if sib != s:
                    fs.discard(sib)
            s = parent
            j += 1
        free[self._top].add(s)

    # -- policy search ----------------------------------------------------

    def _take_min(self, n: int) -> int | None:
        free = self.free
        sizes = self._sizes
        fanout = self._fanout
        for j in range(n, self._top + 1):
            fs = free[j]
            if fs:
                start = min(fs)
                fs.discard(start)
                for k in range(j - 1, n - 1, -1):
                    step = sizes[k]
                    add = free[k].add
                    for c in range(1, fanout[k]):
                        add(start + c * step)
                return start
        return None

    def _take_random(self, n: int, rng: Random) -> int | None:
        free = self.free
        fs = free[n]
        if fs:
            if len(fs) == 1:
                start = next(iter(fs))
            else:
                start = sorted(fs)[rng.randrange(len(fs))]
            fs.discard(start)
            return start
        counts = []
        total = 0
        for j in range(n + 1, self._top + 1):
            c = len(free[j])
            counts.append(c)
            total += c
        if total == 0:
            return None
        r = rng.randrange(total)
        j = n + 1
        for c in counts:
            if r < c:
                break
            r -= c
            j += 1
        block = sorted(free[j])[r]
        free[j].discard(block)
        sizes = self._sizes
        fanout = self._fanout
        s = block
        for k in range(j - 1, n - 1, -1):
            step = sizes[k]
            idx = rng.randrange(fanout[k])
            add = free[k].add
            for c in range(fanout[k]):
                if c != idx:
                    add(s + c * step)
            s += idx * step
        return s


def free_subsets(state: BinState) -> list[AlignedRange]:
    """Maximal free aligned ranges, in increasing start order."""
    out = [
        AlignedRange(start, state._sizes[j])
        for j, fs in enumerate(state.free)
        for start in fs
    ]
    out.sort(key=lambda r: r.start)
    return out


def admit(
    state: BinState,
    request: Request,
    policy: str = MIN_SMALL_CHANGE,
    rng: Random | None = None,
) -> AdmissionOutcome:
    """Place one allowed-size request, or report why it blocked."""
    n = state.scheme.level_of(request.size)
    if request.id in state.groups:
        raise ValueError(f"request id {request.id} is already active")
    if policy == MIN_SMALL_CHANGE:
        start = state._take_min(n)
    elif policy == RANDOM:
        if rng is None:
            raise ValueError("random policy requires an rng")
        start = state._take_random(n, rng)
    else:
        raise ValueError(f"unknown admission policy {policy!r}")
    if start is None:
        if state.free_count < request.size:
            return _BLOCKED_OVERLOAD
        return _BLOCKED_FRAGMENTATION
    size = request.size
    r = AlignedRange(start, size)
    state.groups[request.id] = (r,)
    state.occupancy |= ((1 << size) - 1) << start
    state.free_count -= size
    return AdmissionOutcome(
        AdmissionStatus.GRANTED, Allocation(request.id, (r,), state.scheme)
    )


def release(state: BinState, request_id: int) -> None:
    """Free all bins held by an active request."""
    ranges = state.groups.pop(request_id, None)
    if ranges is None:
        raise ValueError(f"request id {request_id} is not active")
    level_of = state.scheme.level_of
    for r in ranges:
        state.occupancy &= ~(((1 << r.size) - 1) << r.start)
        state.free_count += r.size
        state._release_block(r.start, level_of(r.size))


def admit_multistream(
    state: BinState, request: Request, rng: Random | None = None
) -> AdmissionOutcome:
    """Serve an arbitrary-size request as several allowed-size streams.

    Gathers largest-fitting blocks first (ties by lowest start), splitting
    the smallest too-large block when nothing fits the remaining need.
    Grants whenever enough bins are free, so fragmentation never blocks.
    The rng parameter is accepted for interface symmetry; the gather is
    deterministic.
    """
    del rng
    size = request.size
    if not 1 <= size <= state.scheme.size:
        raise ValueError(f"request size {size} out of range for band size {state.scheme.size}")
    if request.id in state.groups:
        raise ValueError(f"request id {request.id} is already active")
    if state.free_count < size:
        return _BLOCKED_OVERLOAD
    free = state.free
    sizes = state._sizes
    remaining = size
    taken: list[AlignedRange] = []
    while remaining:
        j = None
        for jj in range(state._top, -1, -1):
            if sizes[jj] <= remaining and free[jj]:
                j = jj
                break
        if j is None:
            # every free block is larger than the remaining need; split the
            # smallest one (lowest start) and retry
            jj = 0
            while not free[jj]:
                jj += 1
            start = min(free[jj])
            free[jj].discard(start)
            step = sizes[jj - 1]
            add = free[jj - 1].add
            for c in range(state._fanout[jj - 1]):
                add(start + c * step)
            continue
        start = min(free[j])
        free[j].discard(start)
        taken.append(AlignedRange(start, sizes[j]))
        remaining -= sizes[j]
    taken.sort(key=lambda r: r.start)
    occ = 0
    for r in taken:
        occ |= ((1 << r.size) - 1) << r.start
    state.occupancy |= occ
    state.free_count -= size
    ranges = tuple(taken)
    state.groups[request.id] = ranges
    return AdmissionOutcome(
        AdmissionStatus.GRANTED, Allocation(request.id, ranges, state.scheme)
    )


def partition_multistream(size: int, scheme: RadixScheme) -> tuple[int, ...]:
    """Split an arbitrary size into the fewest allowed block sizes, largest first."""
    if not 1 <= size <= scheme.size:
        raise ValueError(f"size {size} out of range for band size {scheme.size}")
    parts = []
    remaining = size
    for block in reversed(scheme.block_sizes):
        while block <= remaining:
            parts.append(block)
            remaining -= block
    return tuple(parts)


def allocate_batch_sync(
    requests: list[Request],
    policy: str = SORT_FIRST,
    scheme: RadixScheme | None = None,
    *,
    state: BinState | None = None,
) -> list[Allocation]:
    """Place a whole batch on a clean band; returns allocations in input order.

    With sort_first the batch is sorted descending by size (ties by id) and
    packed left to right, which requires a band with no prior occupancy.
    With min_small_change the requests are admitted in list order, which
    also works on a band holding blocked bins.  A batch whose total size
    exceeds the free capacity raises BatchRejected.
    """
    if (scheme is None) == (state is None):
        raise ValueError("provide exactly one of scheme or state")
    if state is None:
        assert scheme is not None
        state = BinState(scheme)
    ids = [r.id for r in requests]
    if len(set(ids)) != len(ids):
        raise ValueError("request ids within a batch must be unique")
    for r in requests:
        state.scheme.level_of(r.size)
    total = sum(r.size for r in requests)
    if total > state.free_count:
        raise BatchRejected(
            f"batch needs {total} bins but only {state.free_count} of "
            f"{state.scheme.size} are free"
        )
    out: dict[int, Allocation] = {}
    if policy == SORT_FIRST:
        if state.occupancy:
            raise ValueError("sort_first packs a clean band and cannot honour prior occupancy")
        pos = 0
        for req in sorted(requests, key=lambda r: (-r.size, r.id)):
            state._carve(pos, state.scheme.level_of(req.size))
            rng_ = AlignedRange(pos, req.size)
            state.groups[req.id] = (rng_,)
            state.occupancy |= ((1 << req.size) - 1) << pos
            state.free_count -= req.size
            out[req.id] = Allocation(req.id, (rng_,), state.scheme)
            pos += req.size
    elif policy == MIN_SMALL_CHANGE:
        for req in requests:
            outcome = admit(state, req, MIN_SMALL_CHANGE)
            if not outcome.granted:
                raise BatchRejected(
                    f"request {req.id} of size {req.size} blocked "
                    f"({outcome.status.value}) despite capacity check"
                )
            assert outcome.allocation is not None
            out[req.id] = outcome.allocation
    else:
        raise ValueError(f"unknown batch policy {policy!r}")
    return [out[r.id] for r in requests]


def dcr_state(scheme: RadixScheme, dc_subcarrier: int) -> BinState:
    """A band with the bin that maps to the DC subcarrier pre-blocked."""
    return BinState(scheme, blocked_bins=(bin_for_subcarrier(dc_subcarrier, scheme),))


def check_consistency(state: BinState) -> None:
    """Validate every structural invariant of a BinState (test/debug helper)."""
    scheme = state.scheme
    m_bits = scheme.size
    occ = 0
    used = 0
    for rid, ranges in state.groups.items():
        for r in ranges:
            scheme.level_of(r.size)
            if r.stop > m_bits:
                raise AssertionError(f"group {rid} range {r} exceeds band")
            mask = ((1 << r.size) - 1) << r.start
            if occ & mask:
                raise AssertionError(f"group {rid} range {r} overlaps another allocation")
            occ |= mask
            used += r.size
    for b in state.blocked:
        mask = 1 << b
        if occ & mask:
            raise AssertionError(f"blocked bin {b} overlaps an allocation")
        occ |= mask
        used += 1
    if occ != state.occupancy:
        raise AssertionError("occupancy bitmap disagrees with groups plus blocked bins")
    if state.free_count != m_bits - used:
        raise AssertionError("free_count disagrees with occupancy")
    seen = 0
    for j, fs in enumerate(state.free):
        size = state._sizes[j]
        for start in fs:
            if start % size:
                raise AssertionError(f"free block {start}/{size} misaligned")
            mask = ((1 << size) - 1) << start
            if mask & occ:
                raise AssertionError(f"free block {start}/{size} overlaps occupancy")
            if mask & seen:
                raise AssertionError(f"free block {start}/{size} overlaps another free block")
            seen |= mask
            if j < state._top:
                parent = start - start % state._sizes[j + 1]
                siblings = {parent + c * size for c in range(state._fanout[j])}
                if siblings <= fs:
                    raise AssertionError(f"free block {start}/{size} not coalesced")
    if seen | occ != (1 << m_bits) - 1:
        raise AssertionError("free lists plus occupancy do not cover the band")
