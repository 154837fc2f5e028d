"""Normal-ordered polynomials in free fields and the Wick theorem for products.

A field at a spacetime slot is the sum of an emission leg and an absorption
leg. Wick monomials hold a symbolic coefficient (a sympy expression over
pairing-function tags) and a tuple of legs kept in canonical normal order:
classical source legs first, then creation legs, then annihilation legs,
each group sorted by field kind, slot and index. Fermionic reorderings are
signed with the grassmann parity sign.

Index labels carry the slot they belong to as a suffix ("mu_x1"), so a
polynomial can be moved to other slots with `relabel`.
"""

import enum
import itertools
import json
import logging
import re
from dataclasses import dataclass

import sympy

from causalqft.exceptions import ValidationError
from causalqft.grassmann.signs import BOSE, FERMI, GradedVar, reorder_sign

logger = logging.getLogger(__name__)


class WickError(ValidationError):
    pass


class FieldKind(enum.IntEnum):
    PSI = 0
    PSIBAR = 1
    PHOTON = 2
    SCALAR = 3
    SOURCE_HBAR = 4
    SOURCE_H = 5
    SOURCE_J = 6


FERMI_FIELDS = frozenset(
    {FieldKind.PSI, FieldKind.PSIBAR, FieldKind.SOURCE_HBAR, FieldKind.SOURCE_H}
)
SOURCE_FIELDS = frozenset(
    {FieldKind.SOURCE_HBAR, FieldKind.SOURCE_H, FieldKind.SOURCE_J}
)

CLASSICAL = "classical"
CREATION = "creation"
ANNIHILATION = "annihilation"
CHARACTER_ORDER = {CLASSICAL: 0, CREATION: 1, ANNIHILATION: 2}

# (annihilation leg on the left, creation leg on the right)
CONTRACTING_PAIRS = frozenset(
    {
        (FieldKind.PSI, FieldKind.PSIBAR),
        (FieldKind.PSIBAR, FieldKind.PSI),
        (FieldKind.PHOTON, FieldKind.PHOTON),
        (FieldKind.SCALAR, FieldKind.SCALAR),
    }
)

Splus = sympy.Function("Splus")
Sminus = sympy.Function("Sminus")
Dplus = sympy.Function("Dplus")
Metric = sympy.Function("g")
Gamma = sympy.Function("gamma")

ELECTRON_MASS = sympy.Symbol("m", positive=True)


def slot_order(slot):
    """Natural order for slot labels: x2 before x10."""
    match = re.fullmatch(r"(\D*)(\d*)", slot)
    prefix, number = match.groups() if match else (slot, "")
    return (prefix, int(number) if number else -1, slot)


def index_label(base, slot):
    return "%s_%s" % (base, slot)


def slot_symbol(slot):
    return sympy.Symbol(slot)


def index_symbol(index):
    return sympy.Symbol(index or "_")


def metric(mu, nu):
    """g(mu, nu) with its arguments in a fixed order; g is symmetric."""
    first, second = sorted([mu, nu], key=str)
    return Metric(first, second)


@dataclass(frozen=True)
class FieldLeg:
    field: FieldKind
    character: str
    slot: str
    index: str = ""

    def __post_init__(self):
        try:
            object.__setattr__(self, "field", FieldKind(self.field))
        except ValueError:
            raise WickError("unknown field %r" % (self.field,))
        if self.character not in CHARACTER_ORDER:
            raise WickError("unknown leg character %r" % (self.character,))
        if (self.field in SOURCE_FIELDS) != (self.character == CLASSICAL):
            raise WickError(
                "%s legs cannot have character %s" % (self.field.name, self.character)
            )

    @property
    def grade(self):
        return FERMI if self.field in FERMI_FIELDS else BOSE

    @property
    def is_fermi(self):
        return self.grade == FERMI

    @property
    def is_classical(self):
        return self.character == CLASSICAL

    def sort_key(self):
        return (
            CHARACTER_ORDER[self.character],
            int(self.field),
            slot_order(self.slot),
            self.index,
        )

    def relabel(self, mapping):
        slot = mapping.get(self.slot, self.slot)
        index = self.index
        base, _, suffix = index.rpartition("_")
        if base and suffix in mapping:
            index = index_label(base, mapping[suffix])
        return FieldLeg(self.field, self.character, slot, index)

    def symbol(self):
        """The classical value of a source leg as a sympy symbol."""
        name = "%s(%s)" % (self.field.name.lower(), self.index or self.slot)
        return sympy.Symbol(name, commutative=not self.is_fermi)

    def to_json(self):
        return [self.field.name.lower(), self.character, self.slot, self.index]

    @classmethod
    def from_json(cls, data):
        field, character, slot, index = data
        try:
            kind = FieldKind[field.upper()]
        except KeyError:
            raise WickError("unknown field %r" % (field,))
        return cls(kind, character, slot, index)


def normal_order(legs):
    """(sign, legs) with the legs in canonical order.

    sign is 0 when a fermionic leg occurs twice: the monomial vanishes.
    """
    legs = tuple(legs)
    order = sorted(range(len(legs)), key=lambda i: legs[i].sort_key())
    ordered = tuple(legs[i] for i in order)
    for left, right in zip(ordered, ordered[1:]):
        if left == right and left.is_fermi:
            return 0, ordered
    source = tuple(GradedVar(i, leg.grade) for i, leg in enumerate(legs))
    target = tuple(source[i] for i in order)
    return reorder_sign(source, target), ordered


@dataclass(frozen=True)
class WickMonomial:
    coefficient: object
    legs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coefficient", sympy.sympify(self.coefficient))
        object.__setattr__(self, "legs", tuple(self.legs))

    @property
    def sign(self):
        return -1 if self.coefficient.could_extract_minus_sign() else 1

    @property
    def magnitude(self):
        return self.sign * self.coefficient

    @property
    def operator_legs(self):
        return tuple(leg for leg in self.legs if not leg.is_classical)


def _legs_key(legs):
    return (len(legs), tuple(leg.sort_key() for leg in legs))


class WickPolynomial:
    """Finite sum of normal-ordered monomials, merged by leg signature."""

    def __init__(self, terms=()):
        table = {}
        for term in terms:
            sign, ordered = normal_order(term.legs)
            if sign == 0:
                continue
            table[ordered] = table.get(ordered, sympy.S.Zero) + sign * term.coefficient
        self._terms = {}
        for legs, coefficient in table.items():
            coefficient = sympy.expand(coefficient)
            if coefficient != 0:
                self._terms[legs] = coefficient

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def one(cls):
        return cls([WickMonomial(1, ())])

    @property
    def terms(self):
        return [
            WickMonomial(self._terms[legs], legs)
            for legs in sorted(self._terms, key=_legs_key)
        ]

    def items(self):
        return self._terms.items()

    def coefficient(self, legs):
        sign, ordered = normal_order(legs)
        return sign * self._terms.get(ordered, sympy.S.Zero)

    def __len__(self):
        return len(self._terms)

    def is_zero(self):
        return not self._terms

    def __add__(self, other):
        return WickPolynomial(self.terms + other.terms)

    def __sub__(self, other):
        return self + other.scaled(-1)

    def __neg__(self):
        return self.scaled(-1)

    def scaled(self, factor):
        return WickPolynomial(
            WickMonomial(factor * term.coefficient, term.legs) for term in self.terms
        )

    def __eq__(self, other):
        if not isinstance(other, WickPolynomial):
            return NotImplemented
        if set(self._terms) != set(other._terms):
            return False
        return all(
            sympy.expand(self._terms[legs] - other._terms[legs]) == 0
            for legs in self._terms
        )

    __hash__ = None

    def __repr__(self):
        return "WickPolynomial(%d terms)" % len(self)

    def slots(self):
        return sorted(
            {leg.slot for legs in self._terms for leg in legs}, key=slot_order
        )

    def map_coefficients(self, function):
        return WickPolynomial(
            WickMonomial(function(term.coefficient), term.legs) for term in self.terms
        )

    def relabel(self, mapping):
        """Move the polynomial to other slots, renaming slot-suffixed indices."""
        replacements = {}
        for legs, coefficient in self._terms.items():
            for leg in legs:
                moved = leg.relabel(mapping)
                replacements[slot_symbol(leg.slot)] = slot_symbol(moved.slot)
                if leg.index:
                    replacements[index_symbol(leg.index)] = index_symbol(moved.index)
            for symbol in coefficient.free_symbols:
                if symbol.name in mapping:
                    replacements[symbol] = slot_symbol(mapping[symbol.name])
                base, _, suffix = symbol.name.rpartition("_")
                if base and suffix in mapping:
                    replacements[symbol] = index_symbol(index_label(base, mapping[suffix]))
        return WickPolynomial(
            WickMonomial(
                term.coefficient.xreplace(replacements).replace(Metric, metric),
                tuple(leg.relabel(mapping) for leg in term.legs),
            )
            for term in self.terms
        )

    def to_json(self):
        return {
            "terms": [
                {
                    "legs": [leg.to_json() for leg in term.legs],
                    "sign": term.sign,
                    "coefficient": sympy.srepr(term.coefficient),
                    "text": str(term.coefficient),
                }
                for term in self.terms
            ]
        }

    @classmethod
    def from_json(cls, data):
        try:
            return cls(
                WickMonomial(
                    sympy.sympify(entry["coefficient"]),
                    tuple(FieldLeg.from_json(leg) for leg in entry["legs"]),
                )
                for entry in data["terms"]
            )
        except (KeyError, TypeError, ValueError, sympy.SympifyError) as e:
            raise WickError("malformed Wick polynomial: %s" % e)

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True, indent=2)


@dataclass(frozen=True)
class ContractionRules:
    """Pairing functions attached to a contraction of an annihilation leg
    (left operand) with a creation leg (right operand).

    photon_mass > 0 selects the massive regularization of the photon line.
    """

    electron_mass: object = ELECTRON_MASS
    photon_mass: object = sympy.S.Zero
    scalar_mass: object = ELECTRON_MASS

    def can_contract(self, left, right):
        return (
            left.character == ANNIHILATION
            and right.character == CREATION
            and (left.field, right.field) in CONTRACTING_PAIRS
        )

    def contract(self, left, right):
        if not self.can_contract(left, right):
            raise WickError("legs %r and %r do not contract" % (left, right))
        argument = slot_symbol(left.slot) - slot_symbol(right.slot)
        first, second = index_symbol(left.index), index_symbol(right.index)
        if left.field == FieldKind.PSI:
            return Splus(first, second, self.electron_mass, argument)
        if left.field == FieldKind.PSIBAR:
            # spinor index of psi first
            return Sminus(second, first, self.electron_mass, argument)
        if left.field == FieldKind.PHOTON:
            return -metric(first, second) * Dplus(self.photon_mass, argument)
        return Dplus(self.scalar_mass, argument)


DEFAULT_RULES = ContractionRules()


def field(kind, slot, index=""):
    """A free field (or a classical source) at a slot as a Wick polynomial."""
    kind = FieldKind(kind)
    if kind in SOURCE_FIELDS:
        return WickPolynomial([WickMonomial(1, (FieldLeg(kind, CLASSICAL, slot, index),))])
    return WickPolynomial(
        [
            WickMonomial(1, (FieldLeg(kind, CREATION, slot, index),)),
            WickMonomial(1, (FieldLeg(kind, ANNIHILATION, slot, index),)),
        ]
    )


def wick_product(factors):
    """Normal product :F_1 ... F_k: of the factors: every combination of terms,
    legs concatenated and reordered, coefficients multiplied, no contractions."""
    factors = list(factors)
    if not factors:
        return WickPolynomial.one()
    terms = []
    for combination in itertools.product(*(factor.terms for factor in factors)):
        coefficient = sympy.Mul(*(term.coefficient for term in combination))
        legs = tuple(itertools.chain.from_iterable(term.legs for term in combination))
        terms.append(WickMonomial(coefficient, legs))
    return WickPolynomial(terms)


def _pairings(left, right, rules, start=0, used=frozenset()):
    if start == len(left):
        yield ()
        return
    yield from _pairings(left, right, rules, start + 1, used)
    for j, leg in enumerate(right):
        if j not in used and rules.can_contract(left[start], leg):
            for rest in _pairings(left, right, rules, start + 1, used | {j}):
                yield ((start, j),) + rest


def contractions(left, right, rules=DEFAULT_RULES):
    """Every set of contractions between two normal-ordered leg tuples.

    Yields (sign, value, remaining_legs, pairs). The sign is that of moving
    each contracted pair next to each other, left leg first, in front of the
    uncontracted legs.
    """
    left, right = tuple(left), tuple(right)
    legs = left + right
    offset = len(left)
    source = tuple(GradedVar(k, leg.grade) for k, leg in enumerate(legs))
    for pairs in _pairings(left, right, rules):
        paired = [k for i, j in pairs for k in (i, offset + j)]
        taken = set(paired)
        order = paired + [k for k in range(len(legs)) if k not in taken]
        sign = reorder_sign(source, tuple(source[k] for k in order))
        value = sympy.Mul(*(rules.contract(left[i], right[j]) for i, j in pairs))
        remaining = tuple(legs[k] for k in order[len(paired) :])
        yield sign, value, remaining, pairs


def operator_product(a, b, rules=DEFAULT_RULES):
    """A * B for normal-ordered A and B, expanded into normal-ordered form."""
    terms = []
    for left in a.terms:
        for right in b.terms:
            for sign, value, remaining, _ in contractions(left.legs, right.legs, rules):
                coefficient = sign * left.coefficient * right.coefficient * value
                terms.append(WickMonomial(coefficient, remaining))
    product = WickPolynomial(terms)
    logger.debug(
        "operator product of %d x %d terms -> %d terms", len(a), len(b), len(product)
    )
    return product


def vacuum_expectation(polynomial):
    """Sum of the coefficients of monomials without operator legs.

    Classical source legs survive as (possibly anticommuting) symbols.
    """
    total = sympy.S.Zero
    for term in polynomial.terms:
        if term.operator_legs:
            continue
        total += term.coefficient * sympy.Mul(*(leg.symbol() for leg in term.legs))
    return total


def qed_vertex(slot):
    """:psibar_a gamma^mu_ab psi_b A_mu: at the slot."""
    a, b, mu = (index_label(name, slot) for name in ("a", "b", "mu"))
    product = wick_product(
        [
            field(FieldKind.PSIBAR, slot, a),
            field(FieldKind.PSI, slot, b),
            field(FieldKind.PHOTON, slot, mu),
        ]
    )
    coupling = Gamma(index_symbol(mu), index_symbol(a), index_symbol(b))
    return product.scaled(coupling)


def qed_source_terms(slot):
    """The source couplings hbar psi, psibar h and j A at the slot."""
    a, mu = index_label("a", slot), index_label("mu", slot)
    return (
        wick_product([field(FieldKind.SOURCE_HBAR, slot, a), field(FieldKind.PSI, slot, a)])
        + wick_product(
            [field(FieldKind.PSIBAR, slot, a), field(FieldKind.SOURCE_H, slot, a)]
        )
        + wick_product(
            [field(FieldKind.SOURCE_J, slot, mu), field(FieldKind.PHOTON, slot, mu)]
        )
    )


def scalar_power(slot, power):
    """:phi^k:/k! at the slot."""
    phi = field(FieldKind.SCALAR, slot)
    return wick_product([phi] * power).scaled(sympy.Rational(1, sympy.factorial(power)))


INTERACTIONS = {
    "qed": qed_vertex,
    "phi": lambda slot: field(FieldKind.SCALAR, slot),
    "phi2": lambda slot: scalar_power(slot, 2),
    "phi3": lambda slot: scalar_power(slot, 3),
    "phi4": lambda slot: scalar_power(slot, 4),
}


def first_order(theory, slot, sources=False):
    """S_1 at a slot: i times the interaction, optionally with the QED sources."""
    try:
        interaction = INTERACTIONS[theory](slot)
    except KeyError:
        raise WickError(
            "unknown theory %r, expected one of %s" % (theory, ", ".join(sorted(INTERACTIONS)))
        )
    if sources:
        if theory != "qed":
            raise WickError("source terms exist for the qed interaction only")
        interaction = interaction + qed_source_terms(slot)
    return interaction.scaled(sympy.I)
