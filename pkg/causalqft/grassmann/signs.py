"""Parity signs of reorderings of Grassmann-graded variables.

A variable set Z is written in a fixed order. Splitting it into blocks
(Z = X + Y, or X + Y + x_n) and writing the blocks one after another permutes
the variables; only the relative order of fermionic (grade 1) variables
contributes a sign.
"""

import itertools
from collections import Counter
from dataclasses import dataclass

from causalqft.exceptions import ValidationError

BOSE = 0
FERMI = 1


class PartitionError(ValidationError):
    pass


@dataclass(frozen=True)
class GradedVar:
    id: object
    grade: int = BOSE

    def __post_init__(self):
        if self.grade not in (BOSE, FERMI):
            raise PartitionError("grade must be 0 or 1, got %r" % (self.grade,))

    @property
    def is_fermi(self):
        return self.grade == FERMI


@dataclass(frozen=True)
class Partition:
    source: tuple
    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "blocks", tuple(tuple(b) for b in self.blocks))
        self.validate()

    def validate(self):
        ids = [v.id for v in self.source]
        if len(set(ids)) != len(ids):
            raise PartitionError("duplicate variable in source %r" % (ids,))
        written = [v.id for v in self.concatenated()]
        if Counter(written) != Counter(ids):
            raise PartitionError(
                "blocks %r are not a permutation of the source %r" % (written, ids)
            )
        by_id = {v.id: v for v in self.source}
        for v in self.concatenated():
            if by_id[v.id] != v:
                raise PartitionError("variable %r changed grade in a block" % (v.id,))

    def concatenated(self):
        return tuple(itertools.chain.from_iterable(self.blocks))


def parity_sign(partition):
    """+1 or -1: parity of the inversions among fermionic variables between
    the source order and the concatenated block order."""
    position = {v.id: i for i, v in enumerate(partition.source)}
    fermions = [position[v.id] for v in partition.concatenated() if v.is_fermi]
    inversions = 0
    for i, left in enumerate(fermions):
        for right in fermions[i + 1 :]:
            if left > right:
                inversions += 1
    return -1 if inversions % 2 else 1


def reorder_sign(source, target):
    """Sign of writing `source` in the order `target` (a single block)."""
    return parity_sign(Partition(source=source, blocks=(target,)))


def two_block_partitions(source, allow_empty_first=False):
    """All splits source = X + Y keeping the source order inside each block.

    Yields (X, Y) pairs; X is non-empty unless allow_empty_first is set.
    """
    source = tuple(source)
    n = len(source)
    for size in range(0 if allow_empty_first else 1, n + 1):
        for chosen in itertools.combinations(range(n), size):
            picked = set(chosen)
            first = tuple(source[i] for i in chosen)
            second = tuple(source[i] for i in range(n) if i not in picked)
            yield first, second


def ordered_set_partitions(source):
    """All ordered partitions of source into non-empty blocks, each block in
    source order. Used by the formal inversion of the S series."""
    source = tuple(source)
    if not source:
        yield ()
        return
    for first, rest in two_block_partitions(source):
        for tail in ordered_set_partitions(rest):
            yield (first,) + tail
