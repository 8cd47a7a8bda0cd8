"""Admission guarantees for power-of-two bands.

Three regimes, in decreasing strength:

* full loading: any batch with total size <= 2**m can be packed on a
  clean band, so a synchronous system never blocks below capacity;
* DCR loading: with one bin pre-blocked (the image of the DC
  subcarrier) the same holds up to total size 2**m - 1;
* strict nonblocking: in asynchronous operation, no sequence of
  admissions and departures can block a request as long as the carried
  load plus the new request stays strictly below ``strict_threshold``.

The threshold is tight: ``worst_case_scenario`` gives a reachable
occupancy pattern of 2**(m-n) single bins spaced 2**n apart that
blocks a size-2**n request at a combined load of exactly
2**(m-n) + 2**n.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class LoadVector:
    """Per-size-class request counts a_n for classes n = 0..m."""

    m: int
    counts: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for n, a in self.counts.items():
            if not 0 <= n <= self.m:
                raise ValueError(f"size class {n} out of range for m={self.m}")
            if a < 0:
                raise ValueError(f"count for class {n} must be >= 0, got {a}")

    @classmethod
    def from_sizes(cls, m: int, sizes: list[int]) -> "LoadVector":
        counts: dict[int, int] = {}
        for s in sizes:
            n = s.bit_length() - 1
            if s != 1 << n or n > m:
                raise ValueError(f"size {s} is not a power of two within 2**{m}")
            counts[n] = counts.get(n, 0) + 1
        return cls(m, counts)

    @property
    def load(self) -> int:
        """Total bins requested: sum of a_n * 2**n."""
        return sum(a << n for n, a in self.counts.items())


def full_load_ok(loads: LoadVector) -> bool:
    """True when a synchronous batch of these requests always fits a clean band."""
    return loads.load <= 1 << loads.m


def dcr_load_ok(loads: LoadVector) -> bool:
    """True when the batch always fits a band with one pre-blocked bin."""
    return loads.load <= (1 << loads.m) - 1


def strict_threshold(m: int) -> int:
    """Smallest combined load at which asynchronous blocking becomes reachable.

    Equals min over n of 2**(m-n) + 2**n: 2**(m//2 + 1) for even m and
    3 * 2**((m-1)//2) for odd m.
    """
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    if m % 2 == 0:
        return 1 << (m // 2 + 1)
    return 3 << ((m - 1) // 2)


def strict_ok(loads: LoadVector) -> bool:
    """True when this load keeps every admission grantable, whatever the history."""
    return loads.load < strict_threshold(loads.m)


def worst_case_scenario(m: int, n: int) -> tuple[tuple[int, ...], int]:
    """Single-bin placements that block a size-2**n request at minimal load.

    Returns (bins, request_size): occupying one bin at every multiple of
    2**n leaves no free aligned run of that size, so a size-2**n request
    blocks with 2**(m-n) + 2**n bins in play.  For n = 0 the pattern
    degenerates to a fully loaded band (pure overload).
    """
    if not 0 <= n <= m:
        raise ValueError(f"size class {n} out of range for m={m}")
    step = 1 << n
    bins = tuple(i * step for i in range(1 << (m - n)))
    return bins, step
