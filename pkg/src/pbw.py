"""Ordered PBW monomials and the normal-ordering rewriter."""

import logging
import threading
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .roots import CartanSplit, Gen, PositiveSystem, SubalgebraSpec, contains
from .superalgebra import bracket

logger = logging.getLogger(__name__)

Word = Tuple[Gen, ...]
BlockOf = Callable[[Gen], int]


class PBWError(Exception):
    """Custom exception for PBW engine errors."""

    pass


def family_key(gen: Gen) -> Tuple[int, ...]:
    """Order inside one degree: root vectors by height then indices, then Cartan, K, D."""
    if gen.kind == "E":
        return (0, gen.b - gen.a, gen.a, gen.b)
    if gen.kind == "hX":
        return (1, 0, gen.a)
    if gen.kind == "hU":
        return (1, 1, gen.a)
    return (2,) if gen.kind == "K" else (3,)


def _single_block(gen: Gen) -> int:
    return 0


@dataclass(frozen=True)
class PBWMonomial:
    """Ordered product of generators, even factors first, odd factors last.

    ``factors`` lists generators with multiplicity in product order; odd
    generators appear at most once.
    """

    factors: Word = ()
    sector: str = ""

    @property
    def even_block(self) -> List[Tuple[Gen, int]]:
        return _powers(g for g in self.factors if not g.parity)

    @property
    def odd_block(self) -> List[Gen]:
        return [g for g in self.factors if g.parity]

    @property
    def degree(self) -> int:
        return len(self.factors)

    def __str__(self) -> str:
        if not self.factors:
            return "1"
        parts = []
        for gen, power in _powers(self.factors):
            parts.append(f"{gen}^{power}" if power > 1 else str(gen))
        return "*".join(parts)


def _powers(gens: Iterable[Gen]) -> List[Tuple[Gen, int]]:
    result: List[Tuple[Gen, int]] = []
    for gen in gens:
        if result and result[-1][0] == gen:
            result[-1] = (gen, result[-1][1] + 1)
        else:
            result.append((gen, 1))
    return result


def _revlex(gens: Sequence[Gen]) -> Tuple[Tuple[int, ...], ...]:
    return tuple((g.degree,) + family_key(g) for g in reversed(gens))


def compare_monomials(a: PBWMonomial, b: PBWMonomial) -> int:
    """
    Total order on PBW monomials of one sector.

    Lower total degree comes first; ties compare the even blocks (degree,
    then reverse lexicographic) and then the odd blocks. A monomial with
    only odd factors sorts before one with only even factors.

    Returns:
        -1, 0 or 1

    Raises:
        PBWError: If the monomials belong to different sectors
    """
    if a.sector != b.sector:
        raise PBWError(f"Cannot compare monomials of sectors {a.sector!r} and {b.sector!r}")

    def key(m: PBWMonomial) -> tuple:
        even = [g for g in m.factors if not g.parity]
        odd = m.odd_block
        return (m.degree, len(even), _revlex(even), len(odd), _revlex(odd))

    ka, kb = key(a), key(b)
    return (ka > kb) - (ka < kb)


class UEElement:
    """Exact linear combination of ordered words."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[Word, Fraction]] = None):
        self._terms: Dict[Word, Fraction] = {
            w: Fraction(c) for w, c in (terms or {}).items() if c
        }

    @property
    def terms(self) -> Mapping[Word, Fraction]:
        return self._terms

    def items(self) -> Iterator[Tuple[Word, Fraction]]:
        return iter(sorted(self._terms.items()))

    def monomials(self, sector: str = "") -> List[PBWMonomial]:
        return [PBWMonomial(w, sector) for w in sorted(self._terms)]

    def coefficient(self, word: Word) -> Fraction:
        return self._terms.get(tuple(word), Fraction(0))

    def __add__(self, other: "UEElement") -> "UEElement":
        total: Dict[Word, Fraction] = defaultdict(Fraction, self._terms)
        for w, c in other._terms.items():
            total[w] += c
        return UEElement(total)

    def __neg__(self) -> "UEElement":
        return UEElement({w: -c for w, c in self._terms.items()})

    def __sub__(self, other: "UEElement") -> "UEElement":
        return self + (-other)

    def __mul__(self, scale: Fraction) -> "UEElement":
        return UEElement({w: c * scale for w, c in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UEElement):
            return NotImplemented
        return self._terms == other._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        return " + ".join(f"{c}*{PBWMonomial(w)}" for w, c in self.items())

    def max_degree(self) -> int:
        return max((len(w) for w in self._terms), default=0)


class Straightener:
    """Rewrites generator words into ordered PBW form.

    Words are ordered by ``(block, parity, degree, family)`` where
    ``block_of`` assigns the triangular block (lowering < Cartan < raising
    for module actions). Normal forms of whole words are memoized; the memo
    is shared between threads behind a lock.
    """

    def __init__(self, system: PositiveSystem, block_of: Optional[BlockOf] = None):
        self.system = system
        self.split = CartanSplit(system)
        self.block_of = block_of or _single_block
        self._memo: Dict[Word, Dict[Word, Fraction]] = {}
        self._brackets: Dict[Tuple[Gen, Gen], Dict[Gen, Fraction]] = {}
        self._lock = threading.Lock()

    def key(self, gen: Gen) -> tuple:
        return (self.block_of(gen), gen.parity, gen.degree) + family_key(gen)

    def gen_bracket(self, a: Gen, b: Gen) -> Dict[Gen, Fraction]:
        """[a, b] in adapted coordinates."""
        cached = self._brackets.get((a, b))
        if cached is None:
            value = bracket(self.split.to_element(a), self.split.to_element(b))
            cached = self.split.express(value)
            with self._lock:
                self._brackets[(a, b)] = cached
        return cached

    def is_ordered(self, word: Sequence[Gen]) -> bool:
        for a, b in zip(word, word[1:]):
            ka, kb = self.key(a), self.key(b)
            if ka > kb or (a == b and a.parity):
                return False
        return True

    def normal_order(self, word: Sequence[Gen]) -> UEElement:
        return UEElement(self._normal_form(tuple(word)))

    def normal_order_element(self, element: UEElement) -> UEElement:
        total: Dict[Word, Fraction] = defaultdict(Fraction)
        for word, coef in element.terms.items():
            for w, c in self._normal_form(word).items():
                total[w] += coef * c
        return UEElement(total)

    def multiply(self, left: UEElement, right: UEElement) -> UEElement:
        product: Dict[Word, Fraction] = defaultdict(Fraction)
        for wl, cl in left.terms.items():
            for wr, cr in right.terms.items():
                product[wl + wr] += cl * cr
        return self.normal_order_element(UEElement(product))

    def _normal_form(self, word: Word) -> Dict[Word, Fraction]:
        cached = self._memo.get(word)
        if cached is not None:
            return cached
        result = self._straighten(word)
        with self._lock:
            self._memo[word] = result
        return result

    def _straighten(self, word: Word) -> Dict[Word, Fraction]:
        for i in range(len(word) - 1):
            a, b = word[i], word[i + 1]
            if a == b and a.parity:
                # odd square: a*a = [a, a] / 2
                total: Dict[Word, Fraction] = defaultdict(Fraction)
                for gen, coef in self.gen_bracket(a, a).items():
                    self._accumulate(total, word[:i] + (gen,) + word[i + 2 :], coef / 2)
                return _clean(total)
            if self.key(a) > self.key(b):
                total = defaultdict(Fraction)
                sign = Fraction(-1) if a.parity and b.parity else Fraction(1)
                self._accumulate(total, word[:i] + (b, a) + word[i + 2 :], sign)
                for gen, coef in self.gen_bracket(a, b).items():
                    self._accumulate(total, word[:i] + (gen,) + word[i + 2 :], coef)
                return _clean(total)
        return {word: Fraction(1)}

    def _accumulate(self, total: Dict[Word, Fraction], word: Word, coef: Fraction) -> None:
        for w, c in self._normal_form(word).items():
            total[w] += coef * c

    def cache_size(self) -> int:
        return len(self._memo)


def _clean(total: Mapping[Word, Fraction]) -> Dict[Word, Fraction]:
    return {w: c for w, c in total.items() if c}


def normal_order(word: Sequence[Gen], sector_spec: SubalgebraSpec) -> UEElement:
    """
    Express a word of sector generators in the ordered PBW basis.

    Args:
        word: Generators, all in the enveloping algebra of the sector
        sector_spec: Subalgebra whose enveloping algebra holds the word

    Returns:
        UEElement over strictly ordered words

    Raises:
        PBWError: If a generator lies outside the sector
    """
    for gen in word:
        if not contains(sector_spec, gen):
            raise PBWError(f"{gen} lies outside sector {sector_spec.id}")
    straightener = Straightener(sector_spec.system)
    return straightener.normal_order(word)


def monomial_weight(monomial: PBWMonomial, n: int) -> Tuple[Tuple[int, ...], int]:
    """Sum of the roots of the factors as (finite part, delta degree)."""
    finite = [0] * n
    delta = 0
    for gen in monomial.factors:
        root = gen.root(n)
        if root is None:
            continue
        finite = [x + y for x, y in zip(finite, root.finite)]
        delta += root.delta
    return tuple(finite), delta
