"""The inductive step of the causal construction of the S series.

S(g) = 1 + sum_n 1/n! S_n(x1..xn) g(x1)..g(xn) and its inverse S-bar are kept
as tables of Wick polynomials on the canonical slots x1..xk. A kernel on any
other ordered block of slots is obtained by relabelling.

From the orders below n the step builds

    A'_n(Z, xn) = sum (-1)^s(X,Y,xn) Sbar(X) S(Y, xn)
    R'_n(Z, xn) = sum (-1)^s(Y,xn,X) S(Y, xn) Sbar(X)

over the splits Z = X + Y with X non-empty, and D_n = R'_n - A'_n. Splitting
D_n gives S_n = ret D_n - R'_n = adv D_n - A'_n.

The second order is also assembled numerically on a lattice: a scalar field
with a single spatial point, so D+(t) = exp(-imt) / 2m, sampled at discrete
times.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import sympy
from django.conf import settings
from sympy.core.function import AppliedUndef

from causalqft.exceptions import ValidationError
from causalqft.grassmann.signs import (
    BOSE,
    GradedVar,
    Partition,
    ordered_set_partitions,
    parity_sign,
    two_block_partitions,
)
from causalqft.splitting.engine import split_on_lattice
from causalqft.wick.algebra import (
    ELECTRON_MASS,
    WickMonomial,
    WickPolynomial,
    first_order,
    operator_product,
    slot_symbol,
)

logger = logging.getLogger(__name__)

# retarded part of a causal coefficient, relative to the distinguished slot
Retarded = sympy.Function("ret")


class InductionError(ValidationError):
    pass


def slot(i):
    return "x%d" % i


def _total(polynomials):
    return WickPolynomial(
        itertools.chain.from_iterable(polynomial.terms for polynomial in polynomials)
    )


def _variables(count, grade, start=1):
    return tuple(GradedVar(slot(i), grade) for i in range(start, start + count))


def kernel(table, block, label="S"):
    """The order-|block| entry of the table moved to the slots of the block."""
    if not block:
        return WickPolynomial.one()
    try:
        polynomial = table[len(block)]
    except KeyError:
        raise InductionError("%s_%d is missing" % (label, len(block)))
    mapping = {slot(i): var.id for i, var in enumerate(block, start=1)}
    if all(key == value for key, value in mapping.items()):
        return polynomial
    return polynomial.relabel(mapping)


def _product(factors):
    result = WickPolynomial.one()
    for factor in factors:
        result = operator_product(result, factor)
    return result


def _check_orders(table, orders, label):
    missing = [k for k in orders if k not in table]
    if missing:
        raise InductionError(
            "%s is missing order(s) %s" % (label, ", ".join(str(k) for k in missing))
        )


def inverse_order(S, k, grade=BOSE):
    """Sbar_k as a signed sum over ordered partitions of x1..xk:

        Sbar_k(Z) = sum_r (-1)^r sum_(P1..Pr) sign S(P1) .. S(Pr)
    """
    _check_orders(S, range(1, k + 1), "S")
    source = _variables(k, grade)
    terms = []
    for blocks in ordered_set_partitions(source):
        sign = (-1) ** len(blocks) * parity_sign(Partition(source, blocks))
        terms.append(_product(kernel(S, block) for block in blocks).scaled(sign))
    return _total(terms)


def invert_series(S, n=None, grade=BOSE):
    """Sbar_1..Sbar_n from S_1..S_n, order by order from S Sbar = 1."""
    n = max(S, default=0) if n is None else n
    if n < 1:
        raise InductionError("the series needs at least its first order")
    return {k: inverse_order(S, k, grade) for k in range(1, n + 1)}


@dataclass
class OrderData:
    S: dict
    Sbar: dict = field(default_factory=dict)
    grade: int = BOSE

    def __post_init__(self):
        if 1 not in self.S:
            raise InductionError("S_1 is missing")
        if not self.Sbar:
            self.Sbar = invert_series(self.S, grade=self.grade)

    @classmethod
    def first_order(cls, theory, sources=False, grade=BOSE):
        """S_1 = i L at x1."""
        return cls({1: first_order(theory, slot(1), sources)}, grade=grade)

    @property
    def order(self):
        return max(self.S)

    def extend(self, splits=None, threads=None):
        """The data with the next order assembled by the inductive step."""
        n = self.order + 1
        step = build_Aprime_Rprime(n, self, threads)
        if callable(splits):
            splits = splits(step)
        S = dict(self.S)
        S[n] = assemble_Sn(step, splits)
        Sbar = dict(self.Sbar)
        Sbar[n] = inverse_order(S, n, self.grade)
        return OrderData(S, Sbar, self.grade)


def check_series_identity(data, n=None):
    """Residuals of S Sbar = 1 at the orders 1..n.

    The order-k residual is sum over Z = X + Y of sign S(X) Sbar(Y), with
    S and Sbar of the empty block equal to 1; it vanishes identically.
    """
    n = data.order if n is None else n
    residuals = {}
    for k in range(1, n + 1):
        source = _variables(k, data.grade)
        terms = []
        for X, Y in two_block_partitions(source, allow_empty_first=True):
            sign = parity_sign(Partition(source, (X, Y)))
            terms.append(
                operator_product(
                    kernel(data.S, X), kernel(data.Sbar, Y, "Sbar")
                ).scaled(sign)
            )
        residuals[k] = _total(terms)
    return residuals


@dataclass(frozen=True)
class PartitionTerm:
    X: tuple
    Y: tuple
    advanced_sign: int
    retarded_sign: int
    Aprime: WickPolynomial
    Rprime: WickPolynomial


@dataclass(frozen=True)
class InductiveStep:
    order: int
    last: str
    terms: tuple
    Aprime: WickPolynomial
    Rprime: WickPolynomial
    D: WickPolynomial

    @property
    def signs(self):
        return [(term.advanced_sign, term.retarded_sign) for term in self.terms]


def _partition_term(data, Z, last, X, Y):
    source = Z + (last,)
    advanced_sign = parity_sign(Partition(source, (X, Y, (last,))))
    retarded_sign = parity_sign(Partition(source, (Y, (last,), X)))
    with_last = kernel(data.S, Y + (last,))
    inverse = kernel(data.Sbar, X, "Sbar")
    return PartitionTerm(
        tuple(var.id for var in X),
        tuple(var.id for var in Y),
        advanced_sign,
        retarded_sign,
        operator_product(inverse, with_last).scaled(advanced_sign),
        operator_product(with_last, inverse).scaled(retarded_sign),
    )


def build_Aprime_Rprime(n, data, threads=None):
    if n < 1:
        raise InductionError("order must be at least 1, got %d" % n)
    if n > settings.MAX_SYMBOLIC_ORDER:
        raise InductionError(
            "order %d exceeds the symbolic limit %d (MAX_SYMBOLIC_ORDER)"
            % (n, settings.MAX_SYMBOLIC_ORDER)
        )
    _check_orders(data.S, range(1, n), "S")
    _check_orders(data.Sbar, range(1, n), "Sbar")
    Z = _variables(n - 1, data.grade)
    last = GradedVar(slot(n), data.grade)
    splits = list(two_block_partitions(Z))

    def build(pair):
        return _partition_term(data, Z, last, *pair)

    threads = settings.THREADS if threads is None else threads
    if threads > 1 and len(splits) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            terms = list(pool.map(build, splits))
    else:
        terms = [build(pair) for pair in splits]
    # canonical order, independent of the enumeration
    terms.sort(key=lambda term: (len(term.X), term.X))
    Aprime = _total(term.Aprime for term in terms)
    Rprime = _total(term.Rprime for term in terms)
    D = Rprime - Aprime
    logger.info(
        "inductive step n=%d: %d partitions, D has %d terms", n, len(terms), len(D)
    )
    return InductiveStep(n, last.id, tuple(terms), Aprime, Rprime, D)


@dataclass(frozen=True)
class LocalSplit:
    """Retarded and advanced parts of one causal coefficient, r - a = d."""

    retarded: object
    advanced: object


def symbolic_splits(step):
    """Tag every coefficient of D with its (formal) retarded part."""
    anchor = slot_symbol(step.last)
    splits = {}
    for legs, coefficient in step.D.items():
        retarded = Retarded(coefficient, anchor)
        splits[legs] = LocalSplit(retarded, retarded - coefficient)
    return splits


def assembly_routes(step, splits):
    """(ret D - R', adv D - A') as two Wick polynomials."""
    retarded, advanced = [], []
    for legs, _ in step.D.items():
        try:
            local = splits[legs]
        except KeyError:
            raise InductionError(
                "no split for the coefficient of %s"
                % ", ".join("%s(%s)" % (leg.field.name.lower(), leg.slot) for leg in legs)
            )
        retarded.append(WickMonomial(local.retarded, legs))
        advanced.append(WickMonomial(local.advanced, legs))
    return (
        WickPolynomial(retarded) - step.Rprime,
        WickPolynomial(advanced) - step.Aprime,
    )


def assemble_Sn(step, splits=None):
    if splits is None:
        splits = symbolic_splits(step)
    by_retarded, by_advanced = assembly_routes(step, splits)
    if by_retarded != by_advanced:
        raise InductionError(
            "ret D - R' and adv D - A' differ at order %d: the splits do not "
            "satisfy r - a = d" % step.order
        )
    return by_retarded


@dataclass(frozen=True)
class LatticeModel:
    mass: float = 1.0
    steps: int = 40
    spacing: float = 0.1

    def __post_init__(self):
        if self.mass <= 0:
            raise InductionError("the lattice field needs a positive mass")
        if self.steps < 1 or self.spacing <= 0:
            raise InductionError("the lattice needs steps >= 1 and a positive spacing")

    @property
    def times(self):
        return np.arange(-self.steps, self.steps + 1) * self.spacing

    def dplus(self, mass, t):
        mass = complex(mass)
        if mass == 0:
            raise InductionError("massless lines are not evaluable on the lattice")
        return np.exp(-1j * mass * t) / (2 * mass)

    def evaluate(self, coefficient, positions):
        """A coefficient at the slot positions, an array over the lattice."""
        expression = sympy.sympify(coefficient).subs(ELECTRON_MASS, self.mass)
        tags = {f.func.__name__ for f in expression.atoms(AppliedUndef)}
        if tags - {"Dplus"}:
            raise InductionError(
                "coefficient %s is not evaluable on the scalar lattice" % expression
            )
        symbols = [slot_symbol(name) for name in positions]
        unknown = expression.free_symbols - set(symbols)
        if unknown:
            raise InductionError(
                "coefficient %s depends on %s" % (expression, sorted(map(str, unknown)))
            )
        function = sympy.lambdify(
            symbols, expression, modules=[{"Dplus": self.dplus}, "numpy"]
        )
        values = function(*positions.values())
        return np.broadcast_to(np.asarray(values, dtype=complex), self.times.shape)


@dataclass(frozen=True)
class LatticeKernel:
    legs: tuple
    times: np.ndarray
    D: np.ndarray
    retarded: np.ndarray
    advanced: np.ndarray
    Rprime: np.ndarray
    Aprime: np.ndarray

    @property
    def S(self):
        return self.retarded - self.Rprime

    @property
    def S_advanced(self):
        return self.advanced - self.Aprime


def lattice_assembly(step, model):
    """Second-order kernels with x1 = t and x2 = 0, one per leg signature.

    Times are x1 - x2; the retarded part lives at t >= 0.
    """
    if step.order != 2:
        raise InductionError(
            "numeric assembly exists at second order only, got %d" % step.order
        )
    times = model.times
    positions = {slot(1): times, step.last: 0.0}
    signatures = {}
    for polynomial in (step.D, step.Rprime, step.Aprime):
        for legs, _ in polynomial.items():
            signatures.setdefault(legs, None)

    kernels = []
    for legs in signatures:
        d = model.evaluate(step.D.coefficient(legs), positions)
        # off the diagonal the theta split is exact for any singularity order
        retarded, advanced = split_on_lattice(times, d, -1)
        kernels.append(
            LatticeKernel(
                legs,
                times,
                d,
                retarded,
                advanced,
                model.evaluate(step.Rprime.coefficient(legs), positions),
                model.evaluate(step.Aprime.coefficient(legs), positions),
            )
        )
    return kernels


@dataclass(frozen=True)
class SupportReport:
    retarded_leakage: float
    advanced_leakage: float
    causal_leakage: float
    tolerance: float

    @property
    def passed(self):
        return max(self.retarded_leakage, self.advanced_leakage, self.causal_leakage) <= (
            self.tolerance
        )

    def to_json(self):
        return {
            "retarded_leakage": self.retarded_leakage,
            "advanced_leakage": self.advanced_leakage,
            "causal_leakage": self.causal_leakage,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def lattice_support_check(kernels, tolerance=1e-8):
    """Largest values of the split parts outside their half-lines.

    In one dimension the forward and backward cones of xn cover the whole
    time axis, so the causal part is only checked against r - a.
    """
    retarded = advanced = causal = 0.0
    for entry in kernels:
        times = entry.times
        past, future = times < 0, times > 0
        if past.any():
            retarded = max(retarded, float(np.max(np.abs(entry.retarded[past]))))
        if future.any():
            advanced = max(advanced, float(np.max(np.abs(entry.advanced[future]))))
        causal = max(
            causal,
            float(np.max(np.abs(entry.retarded - entry.advanced - entry.D))),
        )
    report = SupportReport(retarded, advanced, causal, tolerance)
    logger.debug("lattice support check: %s", report)
    return report
