import itertools

from django.test import SimpleTestCase

from .signs import (
    BOSE,
    FERMI,
    GradedVar,
    Partition,
    PartitionError,
    ordered_set_partitions,
    parity_sign,
    reorder_sign,
    two_block_partitions,
)


def bubble_sign(source, target):
    """Oracle: bubble-sort target back into source order with adjacent
    transpositions, counting only fermion-fermion swaps."""
    rank = {v.id: i for i, v in enumerate(source)}
    work = list(target)
    swaps = 0
    for _ in range(len(work)):
        for i in range(len(work) - 1):
            if rank[work[i].id] > rank[work[i + 1].id]:
                if work[i].is_fermi and work[i + 1].is_fermi:
                    swaps += 1
                work[i], work[i + 1] = work[i + 1], work[i]
    return -1 if swaps % 2 else 1


class ParitySignTest(SimpleTestCase):
    def setUp(self):
        self.f1 = GradedVar("f1", FERMI)
        self.f2 = GradedVar("f2", FERMI)
        self.f3 = GradedVar("f3", FERMI)
        self.b1 = GradedVar("b1", BOSE)

    def test_identity_partition(self):
        source = (self.f1, self.b1, self.f2)
        self.assertEqual(parity_sign(Partition(source, [[self.f1, self.b1], [self.f2]])), 1)

    def test_single_transposition(self):
        source = (self.f1, self.f2)
        self.assertEqual(parity_sign(Partition(source, [[self.f2], [self.f1]])), -1)

    def test_mixed_list_against_bubble_oracle(self):
        source = (self.f1, self.b1, self.f2, self.f3)
        target = (self.f3, self.b1, self.f1, self.f2)
        self.assertEqual(reorder_sign(source, target), bubble_sign(source, target))
        self.assertEqual(reorder_sign(source, target), 1)

    def test_every_permutation_against_bubble_oracle(self):
        source = (self.f1, self.b1, self.f2, self.f3, GradedVar("b2"))
        for target in itertools.permutations(source):
            self.assertEqual(reorder_sign(source, target), bubble_sign(source, target))

    def test_duplicate_variable_is_rejected(self):
        with self.assertRaises(PartitionError):
            Partition((self.f1, self.f1), [[self.f1], [self.f1]])

    def test_missing_variable_is_rejected(self):
        with self.assertRaises(PartitionError):
            Partition((self.f1, self.f2), [[self.f1]])

    def test_grade_must_be_zero_or_one(self):
        with self.assertRaises(PartitionError):
            GradedVar("x", 2)


class SignPropertiesTest(SimpleTestCase):
    def variables(self, grades):
        return tuple(GradedVar("v%d" % i, g) for i, g in enumerate(grades))

    def test_composition(self):
        for grades in [(1, 1, 1), (1, 0, 1, 1), (1, 1, 0, 1, 1, 0)]:
            source = self.variables(grades)
            perms = list(itertools.permutations(range(len(source))))
            for first in perms[:: max(1, len(perms) // 40)]:
                middle = tuple(source[i] for i in first)
                for second in perms[:: max(1, len(perms) // 40)]:
                    final = tuple(middle[i] for i in second)
                    self.assertEqual(
                        reorder_sign(source, final),
                        reorder_sign(source, middle) * reorder_sign(middle, final),
                    )

    def test_bose_transparency(self):
        fermions = self.variables((1, 1, 1))
        target = (fermions[2], fermions[0], fermions[1])
        plain = reorder_sign(fermions, target)
        bosons = (GradedVar("b0"), GradedVar("b1"))
        padded_source = (bosons[0],) + fermions[:2] + (bosons[1],) + fermions[2:]
        padded_target = (target[0], bosons[1], target[1], bosons[0], target[2])
        self.assertEqual(reorder_sign(padded_source, padded_target), plain)

    def test_involution(self):
        source = self.variables((1, 0, 1, 1, 1))
        for perm in itertools.permutations(range(5)):
            target = tuple(source[i] for i in perm)
            self.assertEqual(
                reorder_sign(source, target) * reorder_sign(target, source), 1
            )


class PartitionEnumerationTest(SimpleTestCase):
    def test_two_block_partitions_exclude_empty_first_block(self):
        source = tuple(GradedVar(i) for i in range(4))
        splits = list(two_block_partitions(source))
        self.assertEqual(len(splits), 2 ** 4 - 1)
        self.assertTrue(all(first for first, _ in splits))

    def test_ordered_set_partitions_count_is_fubini_number(self):
        source = tuple(GradedVar(i) for i in range(4))
        # ordered Bell numbers 1, 1, 3, 13, 75
        self.assertEqual(len(list(ordered_set_partitions(source))), 75)
