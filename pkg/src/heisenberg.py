"""The Heisenberg quotient of H_cal for X empty, its phi-Verma modules and diagonal modules."""

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .superalgebra import Element, GlMatrix, bracket, check_rank

logger = logging.getLogger(__name__)

SignTuple = Tuple[str, ...]
HeisGen = Tuple[int, int]  # (family j, odd degree k)
Monomial = Tuple[HeisGen, ...]
HeisVector = Dict[Monomial, Fraction]


class HeisenbergError(Exception):
    """Custom exception for Heisenberg quotient errors."""

    pass


@dataclass(frozen=True)
class HeisQuotient:
    """Odd part of H_cal / H_0' with a trace-orthogonal Cartan basis."""

    n: int
    ortho_basis: Tuple[GlMatrix, ...]
    gram: Tuple[Fraction, ...]

    @property
    def t(self) -> int:
        return self.n - 1

    def pairing(self, first: HeisGen, second: HeisGen) -> Fraction:
        """Coefficient of K in [x^j_k, x^i_s]."""
        (j, k), (i, s) = first, second
        if i != j or k != -s:
            return Fraction(0)
        return 2 * self.gram[j - 1]


def good_basis(n: int) -> HeisQuotient:
    """
    Basis h^i = H_1 + ... + H_i - i H_{i+1} of the diagonal traceless matrices.

    Args:
        n: Rank (>= 3)

    Returns:
        HeisQuotient with Gram constants c_i = tr((h^i)^2) = i^2 + i
    """
    check_rank(n)
    basis = []
    for i in range(1, n):
        values = [Fraction(1)] * i + [Fraction(-i)] + [Fraction(0)] * (n - i - 1)
        basis.append(GlMatrix.diagonal(values))
    gram = tuple((h * h).trace() for h in basis)
    return HeisQuotient(n, tuple(basis), gram)


def check_quotient_brackets(q: HeisQuotient, bound: int) -> List[Tuple[HeisGen, HeisGen]]:
    """
    Recompute [h^j(k), h^i(s)] for odd |k|, |s| <= bound with the full bracket.

    The loop part must be an even-degree Cartan loop (it lies in H_0' and
    vanishes in the quotient) and the K coefficient must equal the pairing.

    Returns:
        Pairs that violate either condition
    """
    degrees = [k for k in range(-bound, bound + 1) if k % 2]
    gens = [(j, k) for j in range(1, q.t + 1) for k in degrees]
    failures = []
    for first, second in itertools.product(gens, repeat=2):
        value = bracket(
            Element.loop(q.ortho_basis[first[0] - 1], first[1]),
            Element.loop(q.ortho_basis[second[0] - 1], second[1]),
        )
        loop_ok = all(a.kind == "H" and a.degree % 2 == 0 for a in value.terms if a.kind != "K")
        if not loop_ok or value.central_part() != q.pairing(first, second):
            failures.append((first, second))
    return failures


def _parse_tuple(text: str, t: int) -> SignTuple:
    text = text.strip()
    if len(text) != t or any(ch not in "+-" for ch in text):
        raise HeisenbergError(f"Sign tuple {text!r} must have {t} characters from '+-'")
    return tuple(text)


@dataclass(frozen=True)
class PhiSignature:
    """Eventually periodic map from levels r >= 0 to sign tuples in {+,-}^t."""

    prefix: Tuple[SignTuple, ...]
    tail: Tuple[SignTuple, ...]

    def __post_init__(self) -> None:
        if not self.tail:
            raise HeisenbergError("The periodic tail of phi must be nonempty")
        widths = {len(s) for s in self.prefix + self.tail}
        if len(widths) != 1:
            raise HeisenbergError("All sign tuples of phi must have the same length")

    @classmethod
    def parse(cls, text: str, t: int) -> "PhiSignature":
        """Parse ``prefix|tail`` such as ``++,+-|++``."""
        if "|" not in text:
            raise HeisenbergError(f"phi {text!r} must have the form prefix|tail")
        head, _, rest = text.partition("|")
        prefix = tuple(_parse_tuple(p, t) for p in head.split(",") if p.strip())
        tail = tuple(_parse_tuple(p, t) for p in rest.split(",") if p.strip())
        return cls(prefix, tail)

    @classmethod
    def constant(cls, t: int, sign: str) -> "PhiSignature":
        return cls((), ((sign,) * t,))

    @property
    def t(self) -> int:
        return len(self.tail[0])

    def at(self, r: int) -> SignTuple:
        if r < len(self.prefix):
            return self.prefix[r]
        return self.tail[(r - len(self.prefix)) % len(self.tail)]

    def flip(self, r: int, j: int) -> "PhiSignature":
        """Same signature with the sign at level r, family j reversed."""
        levels = max(len(self.prefix), r + 1)
        prefix = [list(self.at(level)) for level in range(levels)]
        prefix[r][j - 1] = "-" if prefix[r][j - 1] == "+" else "+"
        offset = levels - len(self.prefix)
        tail = tuple(self.tail[(offset + i) % len(self.tail)] for i in range(len(self.tail)))
        return PhiSignature(tuple(tuple(p) for p in prefix), tail)

    def to_text(self) -> str:
        return ",".join("".join(s) for s in self.prefix) + "|" + ",".join("".join(s) for s in self.tail)

    def __str__(self) -> str:
        return self.to_text()


class PhiVermaModule:
    """M_phi(H~, a): the Grassmann algebra on the phi-negative odd generators.

    x^j_{2r+1} is raising when phi(r)_j = '+' and lowering otherwise; its
    partner x^j_{-(2r+1)} has the opposite role. K acts by ``a``.

    The window keeps monomials whose total |degree| is at most ``depth``,
    the same cut as ``phi_character``; mixed signs can reach delta degree 0
    through several factors, so the delta degree alone does not bound the basis.
    """

    def __init__(self, q: HeisQuotient, phi: PhiSignature, a: Fraction, depth: int):
        if phi.t != q.t:
            raise HeisenbergError(f"phi has {phi.t} families, quotient has {q.t}")
        if depth < 0:
            raise HeisenbergError("depth must be non-negative")
        self.q = q
        self.phi = phi
        self.a = Fraction(a)
        self.depth = depth
        self.lowering = [
            self.lowering_gen(r, j) for r in range((depth + 1) // 2) for j in range(1, q.t + 1)
        ]
        self.lowering.sort(key=self.sort_key)
        self._basis = self._enumerate()

    @staticmethod
    def sort_key(gen: HeisGen) -> Tuple[int, int, int]:
        return (abs(gen[1]), gen[1], gen[0])

    def lowering_gen(self, r: int, j: int) -> HeisGen:
        k = 2 * r + 1
        return (j, -k) if self.phi.at(r)[j - 1] == "+" else (j, k)

    def is_lowering(self, gen: HeisGen) -> bool:
        j, k = gen
        return self.lowering_gen((abs(k) - 1) // 2, j) == gen

    def partner(self, gen: HeisGen) -> HeisGen:
        return (gen[0], -gen[1])

    def _enumerate(self) -> List[Monomial]:
        basis = []
        for size in range(len(self.lowering) + 1):
            for combo in itertools.combinations(self.lowering, size):
                if sum(abs(k) for _, k in combo) <= self.depth:
                    basis.append(tuple(combo))
        return basis

    def basis(self) -> List[Monomial]:
        return list(self._basis)

    @staticmethod
    def degree(monomial: Monomial) -> int:
        return sum(k for _, k in monomial)

    def dims(self) -> Dict[int, int]:
        counts: Dict[int, int] = defaultdict(int)
        for monomial in self._basis:
            counts[self.degree(monomial)] += 1
        return dict(sorted(counts.items(), reverse=True))

    def top_vector(self) -> HeisVector:
        return {(): Fraction(1)}

    def act(self, gen: HeisGen, vector: HeisVector) -> HeisVector:
        """Exterior multiplication by lowering generators, contraction by raising ones."""
        j, k = gen
        if not k % 2 or not 1 <= j <= self.q.t:
            raise HeisenbergError(f"{gen} is not an odd generator")
        result: HeisVector = defaultdict(Fraction)
        if self.is_lowering(gen):
            for monomial, coef in vector.items():
                if gen in monomial:
                    continue
                position = sum(1 for g in monomial if self.sort_key(g) < self.sort_key(gen))
                new = monomial[:position] + (gen,) + monomial[position:]
                result[new] += coef * (-1) ** position
        else:
            partner = self.partner(gen)
            scalar = self.q.pairing(gen, partner) * self.a
            for monomial, coef in vector.items():
                if partner not in monomial:
                    continue
                position = monomial.index(partner)
                new = monomial[:position] + monomial[position + 1 :]
                result[new] += coef * scalar * (-1) ** position
        return {m: c for m, c in result.items() if c}

    def d_hat(self, r: int, j: int, vector: HeisVector) -> HeisVector:
        """x^j_{-(2r+1)} x^j_{2r+1} / (2 c_j)."""
        k = 2 * r + 1
        image = self.act((j, -k), self.act((j, k), vector))
        scale = 1 / (2 * self.q.gram[j - 1])
        return {m: c * scale for m, c in image.items()}


def phi_verma(q: HeisQuotient, phi: PhiSignature, a: Fraction, depth: int) -> PhiVermaModule:
    module = PhiVermaModule(q, phi, a, depth)
    logger.info(f"phi-Verma {phi} a={a} depth={depth}: {len(module.basis())} basis vectors")
    return module


def d_eigen(module: PhiVermaModule, vector: HeisVector, r: int, j: int) -> Fraction:
    """
    Eigenvalue of the rescaled d operator on a vector.

    Returns:
        0 or a

    Raises:
        HeisenbergError: If the vector is not an eigenvector
    """
    image = module.d_hat(r, j, vector)
    if not image:
        return Fraction(0)
    if image == {m: c * module.a for m, c in vector.items()}:
        return module.a
    raise HeisenbergError(f"Vector is not an eigenvector of d^{j}_{2 * r + 1}")


@dataclass
class LemmaReport:
    checked: int = 0
    quadratic_failures: List[Tuple[Monomial, int, int]] = field(default_factory=list)
    implication_failures: List[Tuple[Monomial, int, int]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.quadratic_failures and not self.implication_failures


def lemma_checks(module: PhiVermaModule) -> LemmaReport:
    """
    Check d^2 = a d and the two eigenvalue implications on every basis vector.

    Eigenvalue a forces x_{-(2r+1)} v = 0; eigenvalue 0 forces x_{2r+1} v = 0.
    """
    report = LemmaReport()
    levels = range((module.depth + 1) // 2)
    for monomial in module.basis():
        v = {monomial: Fraction(1)}
        for r in levels:
            for j in range(1, module.q.t + 1):
                report.checked += 1
                once = module.d_hat(r, j, v)
                twice = module.d_hat(r, j, once)
                if twice != {m: c * module.a for m, c in once.items() if c * module.a}:
                    report.quadratic_failures.append((monomial, r, j))
                if not module.a:
                    # eigenvalues 0 and a coincide
                    continue
                eigen = d_eigen(module, v, r, j)
                k = 2 * r + 1
                killer = (j, -k) if eigen == module.a else (j, k)
                if module.act(killer, v):
                    report.implication_failures.append((monomial, r, j))
    return report


@dataclass
class DiagonalData:
    """Eigenvalues mu^j_{2r+1} in {0, a}, eventually periodic in r."""

    prefix: List[Tuple[Fraction, ...]]
    tail: List[Tuple[Fraction, ...]]
    a: Fraction


def classify_diagonal(data: DiagonalData) -> PhiSignature:
    """
    phi_mu(r)_j = '+' where mu = 0 and '-' where mu = a.

    Raises:
        HeisenbergError: If a = 0 or a value lies outside {0, a}
    """
    if not data.a:
        raise HeisenbergError("Classification needs a nonzero level a")

    def signs(values: Tuple[Fraction, ...]) -> SignTuple:
        out = []
        for value in values:
            if value == 0:
                out.append("+")
            elif value == data.a:
                out.append("-")
            else:
                raise HeisenbergError(f"Eigenvalue {value} is neither 0 nor {data.a}")
        return tuple(out)

    return PhiSignature(tuple(signs(v) for v in data.prefix), tuple(signs(v) for v in data.tail))


def read_diagonal_data(module: PhiVermaModule) -> DiagonalData:
    """Eigenvalues of the d operators on the highest vector, shaped like the module's phi."""
    phi = module.phi
    top = module.top_vector()

    def level(r: int) -> Tuple[Fraction, ...]:
        return tuple(d_eigen(module, top, r, j) for j in range(1, module.q.t + 1))

    prefix = [level(r) for r in range(len(phi.prefix))]
    tail = [level(len(phi.prefix) + i) for i in range(len(phi.tail))]
    return DiagonalData(prefix, tail, module.a)


def iso_equivalent(phi1: PhiSignature, a1: Fraction, phi2: PhiSignature, a2: Fraction) -> bool:
    """Equal levels and phi1, phi2 differing in finitely many places."""
    if Fraction(a1) != Fraction(a2):
        return False
    start = max(len(phi1.prefix), len(phi2.prefix))
    period = math.lcm(len(phi1.tail), len(phi2.tail))
    return all(phi1.at(r) == phi2.at(r) for r in range(start, start + period))


@dataclass
class IsoWitness:
    vector: HeisVector
    flipped: PhiSignature
    nonzero: bool
    highest: bool
    eigen_match: bool

    @property
    def passed(self) -> bool:
        return self.nonzero and self.highest and self.eigen_match


def iso_witness(
    q: HeisQuotient, phi: PhiSignature, r: int, j: int, a: Fraction, depth: int
) -> IsoWitness:
    """
    w = x v_top for the phi-lowering generator at (r, j); w is highest for phi flipped at (r, j).
    """
    module = PhiVermaModule(q, phi, a, depth)
    gen = module.lowering_gen(r, j)
    w = module.act(gen, module.top_vector())
    flipped = module.phi.flip(r, j)
    target = PhiVermaModule(module.q, flipped, module.a, module.depth)
    raising = [
        module.partner(target.lowering_gen(level, fam))
        for level in range((module.depth + 1) // 2)
        for fam in range(1, module.q.t + 1)
    ]
    highest = all(not module.act(g, w) for g in raising)
    eigen_match = True
    if w:
        for level in range((module.depth + 1) // 2):
            for fam in range(1, module.q.t + 1):
                try:
                    value = d_eigen(module, w, level, fam)
                except HeisenbergError:
                    eigen_match = False
                    continue
                expected = Fraction(0) if flipped.at(level)[fam - 1] == "+" else module.a
                if value != expected:
                    eigen_match = False
    return IsoWitness(w, flipped, bool(w), highest, eigen_match)


def zero_sum_count(degrees: Sequence[int]) -> int:
    """Number of nonempty subsets of a multiset of degrees summing to zero."""
    counts: Dict[int, int] = {0: 1}
    for k in degrees:
        updated = dict(counts)
        for total, ways in counts.items():
            updated[total + k] = updated.get(total + k, 0) + ways
        counts = updated
    return counts[0] - 1


@dataclass
class ComponentsReport:
    finite: bool
    cycle_counts: Dict[int, int]


def finite_components(phi: PhiSignature, windows: Sequence[int] = ()) -> ComponentsReport:
    """
    Whether phi differs from a constant signature in finitely many places.

    For each window R the number of degree-zero Grassmann monomials in the
    lowering generators with |k| <= R is recorded; these cycles make the
    degree-zero component grow without bound when phi is infinitely mixed.
    """
    t = phi.t
    plus, minus = ("+",) * t, ("-",) * t
    finite = all(s == plus for s in phi.tail) or all(s == minus for s in phi.tail)
    counts = {}
    for bound in windows:
        degrees = []
        for r in range((bound + 1) // 2):
            k = 2 * r + 1
            for fam in range(t):
                degrees.append(-k if phi.at(r)[fam] == "+" else k)
        counts[bound] = zero_sum_count(degrees)
    return ComponentsReport(finite, counts)


@dataclass
class IrreducibilityReport:
    a: Fraction
    irreducible: bool
    certificates: Dict[Monomial, Fraction] = field(default_factory=dict)
    unreachable: List[Monomial] = field(default_factory=list)
    proper_submodule: List[Monomial] = field(default_factory=list)


def irreducible_iff_level(q: HeisQuotient, phi: PhiSignature, a: Fraction, depth: int) -> IrreducibilityReport:
    """
    For a != 0 every basis vector contracts back to the top; for a = 0 the
    nonempty monomials span a proper submodule killed by every raising generator.
    """
    module = phi_verma(q, phi, a, depth)
    report = IrreducibilityReport(Fraction(a), irreducible=bool(a))
    if a:
        for monomial in module.basis():
            vector = {monomial: Fraction(1)}
            for gen in monomial:
                vector = module.act(module.partner(gen), vector)
            coefficient = vector.get((), Fraction(0))
            if coefficient and len(vector) == 1:
                report.certificates[monomial] = coefficient
            else:
                report.unreachable.append(monomial)
        report.irreducible = not report.unreachable
        return report
    raising = [module.partner(g) for g in module.lowering]
    for monomial in module.basis():
        if not monomial:
            continue
        vector = {monomial: Fraction(1)}
        if all(not module.act(g, vector) for g in raising):
            report.proper_submodule.append(monomial)
    return report


def phi_character(phi: PhiSignature, depth: int) -> Dict[int, int]:
    """Grassmann generating function of the phi-lowering generators, total |degree| <= depth."""
    states: Dict[Tuple[int, int], int] = {(0, 0): 1}
    for r in range((depth + 1) // 2):
        k = 2 * r + 1
        for sign in phi.at(r):
            degree = -k if sign == "+" else k
            updated = dict(states)
            for (size, total), ways in states.items():
                if size + k <= depth:
                    key = (size + k, total + degree)
                    updated[key] = updated.get(key, 0) + ways
            states = updated
    character: Dict[int, int] = defaultdict(int)
    for (_, total), ways in states.items():
        character[total] += ways
    return dict(sorted(character.items(), reverse=True))
