"""Atoms, elements and the exact bracket of the twisted affine queer superalgebra q(n)^(2)."""

import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

logger = logging.getLogger(__name__)

Scalar = Union[int, Fraction]

ATOM_KINDS = ("E", "H", "K", "D")


class AlgebraError(Exception):
    """Custom exception for algebra construction errors."""

    pass


def check_rank(n: int) -> None:
    """Reject ranks the construction does not cover."""
    if not isinstance(n, int) or n < 3:
        raise AlgebraError(f"Rank must be an integer n >= 3, got {n!r}")


class GlMatrix:
    """Sparse n x n matrix with exact rational entries."""

    __slots__ = ("n", "_entries")

    def __init__(self, n: int, entries: Optional[Mapping[Tuple[int, int], Scalar]] = None):
        check_rank(n)
        clean: Dict[Tuple[int, int], Fraction] = {}
        for (i, j), value in (entries or {}).items():
            if not (1 <= i <= n and 1 <= j <= n):
                raise AlgebraError(f"Index ({i}, {j}) out of range for rank {n}")
            value = Fraction(value)
            if value:
                clean[(i, j)] = value
        self.n = n
        self._entries = clean

    @classmethod
    def unit(cls, n: int, i: int, j: int) -> "GlMatrix":
        return cls(n, {(i, j): 1})

    @classmethod
    def identity(cls, n: int) -> "GlMatrix":
        return cls(n, {(i, i): 1 for i in range(1, n + 1)})

    @classmethod
    def diagonal(cls, values: Iterable[Scalar]) -> "GlMatrix":
        values = list(values)
        return cls(len(values), {(i + 1, i + 1): v for i, v in enumerate(values)})

    @property
    def entries(self) -> Mapping[Tuple[int, int], Fraction]:
        return self._entries

    def _check_same_rank(self, other: "GlMatrix") -> None:
        if self.n != other.n:
            raise AlgebraError(f"Rank mismatch: {self.n} vs {other.n}")

    def __add__(self, other: "GlMatrix") -> "GlMatrix":
        self._check_same_rank(other)
        total = dict(self._entries)
        for key, value in other._entries.items():
            total[key] = total.get(key, Fraction(0)) + value
        return GlMatrix(self.n, total)

    def __neg__(self) -> "GlMatrix":
        return GlMatrix(self.n, {k: -v for k, v in self._entries.items()})

    def __sub__(self, other: "GlMatrix") -> "GlMatrix":
        return self + (-other)

    def __mul__(self, other: Union["GlMatrix", Scalar]) -> "GlMatrix":
        if isinstance(other, GlMatrix):
            self._check_same_rank(other)
            rows: Dict[int, List[Tuple[int, Fraction]]] = defaultdict(list)
            for (k, j), b in other._entries.items():
                rows[k].append((j, b))
            product: Dict[Tuple[int, int], Fraction] = defaultdict(Fraction)
            for (i, k), a in self._entries.items():
                for j, b in rows.get(k, ()):
                    product[(i, j)] += a * b
            return GlMatrix(self.n, product)
        scale = Fraction(other)
        return GlMatrix(self.n, {k: v * scale for k, v in self._entries.items()})

    def __rmul__(self, other: Scalar) -> "GlMatrix":
        return self * other

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GlMatrix):
            return NotImplemented
        return self.n == other.n and self._entries == other._entries

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self._entries.items())))

    def __repr__(self) -> str:
        body = ", ".join(f"({i},{j}): {v}" for (i, j), v in sorted(self._entries.items()))
        return f"GlMatrix(n={self.n}, {{{body}}})"

    def trace(self) -> Fraction:
        return sum((v for (i, j), v in self._entries.items() if i == j), Fraction(0))

    def is_zero(self) -> bool:
        return not self._entries

    def diagonal_values(self) -> Tuple[Fraction, ...]:
        return tuple(self._entries.get((i, i), Fraction(0)) for i in range(1, self.n + 1))


def iota(x: GlMatrix) -> GlMatrix:
    """Project gl(n) onto sl(n): x - tr(x)/n * I_n."""
    return x - GlMatrix.identity(x.n) * (x.trace() / x.n)


@dataclass(frozen=True, order=True)
class Atom:
    """Basis atom of the superalgebra.

    ``E`` is the loop root vector E_ij(k), ``H`` the loop Cartan element
    (H_i - H_{i+1})(k), ``K`` the central element and ``D`` the derivation.
    """

    kind: str
    i: int = 0
    j: int = 0
    degree: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ATOM_KINDS:
            raise AlgebraError(f"Unknown atom kind: {self.kind}")
        if self.kind == "E" and self.i == self.j:
            raise AlgebraError("Root vector atoms need i != j")
        if self.kind in ("K", "D") and (self.degree or self.i or self.j):
            raise AlgebraError(f"{self.kind} carries no indices or degree")

    @classmethod
    def root_vector(cls, i: int, j: int, degree: int = 0) -> "Atom":
        return cls("E", i, j, degree)

    @classmethod
    def cartan(cls, i: int, degree: int = 0) -> "Atom":
        return cls("H", i, 0, degree)

    @classmethod
    def central(cls) -> "Atom":
        return cls("K")

    @classmethod
    def derivation(cls) -> "Atom":
        return cls("D")

    @property
    def is_loop(self) -> bool:
        return self.kind in ("E", "H")

    @property
    def parity(self) -> int:
        return self.degree % 2 if self.is_loop else 0

    def validate_rank(self, n: int) -> None:
        if self.kind == "E" and not (1 <= self.i <= n and 1 <= self.j <= n):
            raise AlgebraError(f"Root vector {self} out of range for rank {n}")
        if self.kind == "H" and not 1 <= self.i <= n - 1:
            raise AlgebraError(f"Cartan atom {self} out of range for rank {n}")

    def matrix(self, n: int) -> GlMatrix:
        """Finite part of a loop atom as an sl(n) matrix."""
        if self.kind == "E":
            return GlMatrix.unit(n, self.i, self.j)
        if self.kind == "H":
            return GlMatrix(n, {(self.i, self.i): 1, (self.i + 1, self.i + 1): -1})
        raise AlgebraError(f"{self.kind} has no matrix part")

    def __str__(self) -> str:
        if self.kind == "E":
            return f"E{self.i}{self.j}({self.degree})"
        if self.kind == "H":
            return f"h{self.i}({self.degree})"
        return self.kind


class Element:
    """Exact rational linear combination of atoms."""

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Optional[Mapping[Atom, Scalar]] = None):
        check_rank(n)
        clean: Dict[Atom, Fraction] = {}
        for atom, coef in (terms or {}).items():
            atom.validate_rank(n)
            coef = Fraction(coef)
            if coef:
                clean[atom] = coef
        self.n = n
        self._terms = clean

    @classmethod
    def zero(cls, n: int) -> "Element":
        return cls(n)

    @classmethod
    def of(cls, n: int, atom: Atom, coef: Scalar = 1) -> "Element":
        return cls(n, {atom: coef})

    @classmethod
    def loop(cls, matrix: GlMatrix, degree: int) -> "Element":
        """Element x(k) for a traceless matrix x."""
        return cls(matrix.n, decompose_traceless(matrix, degree))

    @property
    def terms(self) -> Mapping[Atom, Fraction]:
        return self._terms

    def items(self) -> Iterator[Tuple[Atom, Fraction]]:
        return iter(sorted(self._terms.items()))

    def coefficient(self, atom: Atom) -> Fraction:
        return self._terms.get(atom, Fraction(0))

    def _check_same_rank(self, other: "Element") -> None:
        if self.n != other.n:
            raise AlgebraError(f"Rank mismatch: {self.n} vs {other.n}")

    def __add__(self, other: "Element") -> "Element":
        self._check_same_rank(other)
        total: Dict[Atom, Fraction] = defaultdict(Fraction, self._terms)
        for atom, coef in other._terms.items():
            total[atom] += coef
        return Element(self.n, total)

    def __neg__(self) -> "Element":
        return Element(self.n, {a: -c for a, c in self._terms.items()})

    def __sub__(self, other: "Element") -> "Element":
        return self + (-other)

    def __mul__(self, scale: Scalar) -> "Element":
        scale = Fraction(scale)
        return Element(self.n, {a: c * scale for a, c in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Element):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self._terms.items())))

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        return " + ".join(f"{c}*{a}" for a, c in self.items())

    @property
    def parities(self) -> frozenset:
        return frozenset(a.parity for a in self._terms)

    def is_homogeneous(self) -> bool:
        return len(self.parities) <= 1

    @property
    def parity(self) -> int:
        parities = self.parities
        if len(parities) > 1:
            raise AlgebraError(f"Element is not homogeneous: {self}")
        return next(iter(parities), 0)

    def loop_part(self, degree: int) -> GlMatrix:
        """The sl(n) matrix carried by the degree-``degree`` loop atoms."""
        total = GlMatrix(self.n)
        for atom, coef in self._terms.items():
            if atom.is_loop and atom.degree == degree:
                total = total + atom.matrix(self.n) * coef
        return total

    def central_part(self) -> Fraction:
        return self.coefficient(Atom.central())


def decompose_traceless(matrix: GlMatrix, degree: int) -> Dict[Atom, Fraction]:
    """Coordinates of a traceless matrix in the E_ij / (H_i - H_{i+1}) basis."""
    if matrix.trace():
        raise AlgebraError("Only traceless matrices live in the loop algebra")
    terms: Dict[Atom, Fraction] = {}
    for (i, j), value in matrix.entries.items():
        if i != j:
            terms[Atom.root_vector(i, j, degree)] = value
    running = Fraction(0)
    for i, value in enumerate(matrix.diagonal_values()[:-1], start=1):
        running += value
        if running:
            terms[Atom.cartan(i, degree)] = running
    return terms


@lru_cache(maxsize=None)
def atom_bracket(n: int, x: Atom, y: Atom) -> Tuple[Tuple[Atom, Fraction], ...]:
    """Bracket of two atoms as a tuple of (atom, coefficient) pairs."""
    if x.kind == "K" or y.kind == "K":
        return ()
    if x.kind == "D":
        if y.kind == "D" or not y.degree:
            return ()
        return ((y, Fraction(y.degree)),)
    if y.kind == "D":
        return ((x, Fraction(-x.degree)),) if x.degree else ()

    a, b = x.matrix(n), y.matrix(n)
    k, m = x.degree, y.degree
    central = Fraction(0)
    if (k * m) % 2 == 0:
        loop = a * b - b * a
    else:
        loop = iota(a * b + b * a)
        if k == -m:
            central = 2 * (a * b).trace()
    terms = sorted(decompose_traceless(loop, k + m).items())
    if central:
        terms.append((Atom.central(), central))
    return tuple(terms)


def bracket(a: Element, b: Element) -> Element:
    """Super bracket, extended bilinearly from atoms."""
    if a.n != b.n:
        raise AlgebraError(f"Rank mismatch: {a.n} vs {b.n}")
    total: Dict[Atom, Fraction] = defaultdict(Fraction)
    for x, cx in a.terms.items():
        for y, cy in b.terms.items():
            for atom, coef in atom_bracket(a.n, x, y):
                total[atom] += cx * cy * coef
    return Element(a.n, total)


def adD(a: Element) -> Element:
    """[D, a]: scale every loop atom by its degree."""
    return Element(a.n, {x: c * x.degree for x, c in a.terms.items() if x.is_loop})


def basis_atoms(n: int, degree_bound: int) -> List[Atom]:
    """All atoms with |degree| <= degree_bound, plus K and D."""
    check_rank(n)
    atoms: List[Atom] = []
    for k in range(-degree_bound, degree_bound + 1):
        atoms.extend(
            Atom.root_vector(i, j, k)
            for i in range(1, n + 1)
            for j in range(1, n + 1)
            if i != j
        )
        atoms.extend(Atom.cartan(i, k) for i in range(1, n))
    atoms.extend([Atom.central(), Atom.derivation()])
    return sorted(atoms)


def jacobi_sum(a: Element, b: Element, c: Element) -> Element:
    """Graded Jacobi expression; vanishes for homogeneous a, b, c."""
    pa, pb, pc = a.parity, b.parity, c.parity
    first = bracket(a, bracket(b, c)) * (-1) ** (pa * pc)
    second = bracket(b, bracket(c, a)) * (-1) ** (pb * pa)
    third = bracket(c, bracket(a, b)) * (-1) ** (pc * pb)
    return first + second + third


@dataclass
class JacobiReport:
    """Outcome of a super-Jacobi sweep."""

    n: int
    degree_bound: int
    checked: int = 0
    violations: List[Tuple[Atom, Atom, Atom]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def check_super_jacobi(degree_bound: int, n: int, exhaustive: bool = False) -> JacobiReport:
    """
    Check the graded Jacobi identity on basis atoms with |degree| <= degree_bound.

    Args:
        degree_bound: Loop degree bound (>= 1)
        n: Rank
        exhaustive: Iterate all ordered triples instead of multisets. The
            identity is invariant under permuting its arguments, so the
            multiset sweep covers the same cases.

    Returns:
        JacobiReport with the violating triples and the number checked
    """
    if degree_bound < 1:
        raise AlgebraError("degree_bound must be at least 1")
    atoms = basis_atoms(n, degree_bound)
    triples = (
        itertools.product(atoms, repeat=3)
        if exhaustive
        else itertools.combinations_with_replacement(atoms, 3)
    )
    report = JacobiReport(n=n, degree_bound=degree_bound)
    for x, y, z in triples:
        report.checked += 1
        if jacobi_sum(Element.of(n, x), Element.of(n, y), Element.of(n, z)):
            report.violations.append((x, y, z))
    logger.info(
        f"Super-Jacobi n={n} bound={degree_bound}: "
        f"{report.checked} triples, {len(report.violations)} violations"
    )
    return report


def check_loop_consistency(degree_bound: int, n: int) -> List[Tuple[Atom, Atom]]:
    """
    Compare the bracket with the plain loop commutator whenever one degree is even.

    Returns:
        Pairs of atoms where the two disagree (expected empty)
    """
    loops = [a for a in basis_atoms(n, degree_bound) if a.is_loop]
    mismatches = []
    for x, y in itertools.product(loops, repeat=2):
        if x.degree % 2 and y.degree % 2:
            continue
        a, b = x.matrix(n), y.matrix(n)
        expected = Element.loop(a * b - b * a, x.degree + y.degree)
        if bracket(Element.of(n, x), Element.of(n, y)) != expected:
            mismatches.append((x, y))
    return mismatches
