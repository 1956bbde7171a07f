"""Splittable deterministic random streams.

Every particle in a simulation owns a stream keyed by (run seed, purpose
tag, initial site).  Streams are independent of the order in which the
rest of the system touches randomness, which is what makes the shared-
randomness couplings well defined: deleting or retyping particles at
other sites leaves a particle's draws untouched.

The generator is splitmix64.  It is tiny, has no numpy object overhead
(site-keyed streams are created in inner loops), and its output feeds
only waiting times, step directions, type assignments and tie-breaking
marks, all of which are also validated statistically in the test suite.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

# Purpose tags for the per-site substreams.
TAG_TYPE = 0x74797065  # initial particle type
TAG_BRAV = 0x62726176  # braveness mark
TAG_PATH = 0x70617468  # putative trajectory (waits and directions)


def mix64(z: int) -> int:
    """splitmix64 finalizer; a 64-bit bijective scrambler."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _zigzag(n: int) -> int:
    return 2 * n if n >= 0 else -2 * n - 1


def stream_key(seed: int, tag: int, site) -> int:
    """Fold (seed, tag, site coordinates) into one 64-bit stream key."""
    h = mix64((seed & _MASK64) ^ mix64(tag))
    for c in site:
        h = mix64(h ^ mix64(_zigzag(c) + 0x632BE59BD9B4E019))
    return h


class Stream:
    """Sequential splitmix64 draw source with a private state.

    Swapping two particles' unread path remainders is done by exchanging
    Stream objects: the state *is* the cursor.
    """

    __slots__ = ("_state",)

    def __init__(self, state: int):
        self._state = state & _MASK64

    @classmethod
    def for_site(cls, seed: int, tag: int, site) -> "Stream":
        return cls(stream_key(seed, tag, site))

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return mix64(self._state)

    def uniform(self) -> float:
        """U[0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def exp1(self) -> float:
        """Exp(1) waiting time."""
        return -math.log1p(-self.uniform())

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via multiply-shift."""
        return (self.next_u64() * n) >> 64


def site_type_is_a(seed: int, site, p: float) -> bool:
    """Initial type draw: A with probability p, independently per site."""
    return Stream.for_site(seed, TAG_TYPE, site).uniform() < p


def site_braveness(seed: int, site) -> float:
    return Stream.for_site(seed, TAG_BRAV, site).uniform()


def path_stream(seed: int, site) -> Stream:
    return Stream.for_site(seed, TAG_PATH, site)


def replica_seed(base_seed: int, index: int) -> int:
    """Derived seed for replica `index`: mix64(base ^ mix64(index + 1)).

    The derivation is order-free, so replicas may run in any order on
    any number of workers and still see identical randomness.
    """
    return mix64((base_seed & _MASK64) ^ mix64(index + 1))
