"""Roots, positive systems, the adapted Cartan basis and the determinant of D_delta."""

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import sympy

from .superalgebra import Atom, Element, GlMatrix, bracket, check_rank

logger = logging.getLogger(__name__)

SUBALGEBRA_IDS = (
    "g_hat",
    "m_hat",
    "k_hat",
    "H_cal",
    "u_minus",
    "u_plus",
    "H_minus",
    "H_plus",
    "S_alg",
    "b_hat",
    "h_hat",
    "k_minus",
    "k_plus",
)

GEN_KINDS = ("E", "hX", "hU", "K", "D")


class RootError(Exception):
    """Custom exception for root data errors."""

    pass


@dataclass(frozen=True)
class Root:
    """Root alpha + k*delta with alpha = e_i - e_j or zero."""

    finite: Tuple[int, ...]
    delta: int = 0

    def __post_init__(self) -> None:
        nonzero = [c for c in self.finite if c]
        if nonzero and sorted(nonzero) != [-1, 1]:
            raise RootError(f"Finite part must be e_i - e_j, got {self.finite}")
        if not nonzero and self.delta == 0:
            raise RootError("The zero vector is not a root")

    @classmethod
    def real(cls, n: int, i: int, j: int, delta: int = 0) -> "Root":
        if i == j or not (1 <= i <= n and 1 <= j <= n):
            raise RootError(f"Invalid root indices ({i}, {j}) for rank {n}")
        vec = [0] * n
        vec[i - 1], vec[j - 1] = 1, -1
        return cls(tuple(vec), delta)

    @classmethod
    def imaginary(cls, n: int, delta: int) -> "Root":
        return cls((0,) * n, delta)

    @property
    def n(self) -> int:
        return len(self.finite)

    @property
    def is_imaginary(self) -> bool:
        return not any(self.finite)

    @property
    def indices(self) -> Tuple[int, int]:
        """(i, j) with finite part e_i - e_j."""
        if self.is_imaginary:
            raise RootError(f"Imaginary root {self} has no indices")
        return self.finite.index(1) + 1, self.finite.index(-1) + 1

    @property
    def parity(self) -> int:
        return self.delta % 2

    def __neg__(self) -> "Root":
        return Root(tuple(-c for c in self.finite), -self.delta)

    def __str__(self) -> str:
        if self.is_imaginary:
            return f"{self.delta}d"
        i, j = self.indices
        return f"e{i}-e{j}{self.delta:+d}d"


def bar_root(alpha: Root) -> Tuple[int, ...]:
    """e_i - e_j maps to e_i + e_j."""
    if alpha.is_imaginary:
        raise RootError(f"Imaginary root {alpha} has no bar")
    return tuple(abs(c) for c in alpha.finite)


def parse_subset(text: str, n: int) -> FrozenSet[int]:
    """
    Parse a comma-separated list of simple-root indices.

    Args:
        text: e.g. "1,3"; empty string means the empty set
        n: Rank

    Returns:
        Frozen set of indices in 1..n-1

    Raises:
        RootError: If an entry is not an integer or out of range
    """
    text = (text or "").strip()
    if not text:
        return frozenset()
    indices = set()
    for part in text.split(","):
        try:
            index = int(part.strip())
        except ValueError:
            raise RootError(f"Invalid simple-root index: {part!r}")
        if not 1 <= index <= n - 1:
            raise RootError(f"Simple-root index {index} out of range 1..{n - 1}")
        indices.add(index)
    return frozenset(indices)


@dataclass(frozen=True)
class PositiveSystem:
    """Positive system Delta(X)+ for simple roots e_i - e_{i+1} and a subset X."""

    n: int
    X: FrozenSet[int] = frozenset()

    def __post_init__(self) -> None:
        check_rank(self.n)
        object.__setattr__(self, "X", frozenset(self.X))
        bad = [i for i in self.X if not 1 <= i <= self.n - 1]
        if bad:
            raise RootError(f"X contains indices outside 1..{self.n - 1}: {sorted(bad)}")

    @property
    def simple_roots(self) -> List[Root]:
        return [Root.real(self.n, i, i + 1) for i in range(1, self.n)]

    def in_levi(self, i: int, j: int) -> bool:
        """Whether e_i - e_j lies in the root system spanned by X."""
        lo, hi = min(i, j), max(i, j)
        return all(k in self.X for k in range(lo, hi))

    def is_positive(self, root: Root) -> bool:
        if root.n != self.n:
            raise RootError(f"Root {root} does not match rank {self.n}")
        if root.is_imaginary:
            return root.delta > 0
        i, j = root.indices
        if not self.in_levi(i, j):
            return i < j
        if root.delta:
            return root.delta > 0
        return i < j

    def blocks(self) -> List[Tuple[int, ...]]:
        """Maximal runs of {1..n} joined by the simple roots in X."""
        result: List[Tuple[int, ...]] = []
        current = [1]
        for i in range(1, self.n):
            if i in self.X:
                current.append(i + 1)
            else:
                result.append(tuple(current))
                current = [i + 1]
        result.append(tuple(current))
        return result

    def label(self) -> str:
        return ",".join(str(i) for i in sorted(self.X))


@dataclass(frozen=True, order=True)
class Gen:
    """Generator in the adapted basis.

    ``E`` is E_ab(degree); ``hX`` is (H_a - H_{a+1})(degree) for a in X;
    ``hU`` is the a-th block basis vector of h^X at ``degree``; ``K`` and ``D``
    carry no indices.
    """

    kind: str
    a: int = 0
    b: int = 0
    degree: int = 0

    def __post_init__(self) -> None:
        if self.kind not in GEN_KINDS:
            raise RootError(f"Unknown generator kind: {self.kind}")

    @property
    def is_cartan(self) -> bool:
        return self.kind in ("hX", "hU")

    @property
    def is_loop(self) -> bool:
        return self.kind in ("E", "hX", "hU")

    @property
    def parity(self) -> int:
        return self.degree % 2 if self.is_loop else 0

    def root(self, n: int) -> Optional[Root]:
        """Root of the generator, or None for the zero-weight part of h_hat."""
        if self.kind == "E":
            return Root.real(n, self.a, self.b, self.degree)
        if self.is_cartan and self.degree:
            return Root.imaginary(n, self.degree)
        return None

    def __str__(self) -> str:
        if self.kind == "E":
            return f"E{self.a}{self.b}({self.degree})"
        if self.is_cartan:
            return f"{self.kind}{self.a}({self.degree})"
        return self.kind


@dataclass(frozen=True)
class SubalgebraSpec:
    id: str
    system: PositiveSystem

    def __post_init__(self) -> None:
        if self.id not in SUBALGEBRA_IDS:
            raise RootError(f"Unknown subalgebra id: {self.id}")


@dataclass(frozen=True)
class Weight:
    """Weight given by (lambda(H_1), ..., lambda(H_n)) and lambda(D)."""

    h_values: Tuple[Fraction, ...]
    d_value: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "h_values", tuple(Fraction(v) for v in self.h_values))
        object.__setattr__(self, "d_value", Fraction(self.d_value))

    @property
    def n(self) -> int:
        return len(self.h_values)

    @property
    def level(self) -> Fraction:
        """lambda(K), with K identified with I_n / n."""
        return sum(self.h_values, Fraction(0)) / self.n

    def on_diagonal(self, diag: Sequence[Fraction]) -> Fraction:
        return sum((d * v for d, v in zip(diag, self.h_values)), Fraction(0))

    def on_element(self, element: Element) -> Fraction:
        """Pair with the degree-zero Cartan, K and D part of an element."""
        total = Fraction(0)
        for atom, coef in element.terms.items():
            if atom.kind == "H" and atom.degree == 0:
                total += coef * (self.h_values[atom.i - 1] - self.h_values[atom.i])
            elif atom.kind == "K":
                total += coef * self.level
            elif atom.kind == "D":
                total += coef * self.d_value
        return total

    def to_dict(self) -> Dict[str, object]:
        return {"h": [str(v) for v in self.h_values], "d": str(self.d_value)}

    def __str__(self) -> str:
        return f"({', '.join(str(v) for v in self.h_values)}; {self.d_value})"


class CartanSplit:
    """Basis of h adapted to h = h_X + h^X.

    h_X is spanned by H_i - H_{i+1} for i in X. h^X gets the block basis
    |B_{b+1}| 1_{B_b} - |B_b| 1_{B_{b+1}} over consecutive X-blocks.
    """

    def __init__(self, system: PositiveSystem):
        self.system = system
        n = system.n
        self.levi_indices: List[int] = sorted(system.X)
        blocks = system.blocks()
        self.center_vectors: List[Tuple[Fraction, ...]] = []
        for left, right in zip(blocks, blocks[1:]):
            vec = [Fraction(0)] * n
            for i in left:
                vec[i - 1] = Fraction(len(right))
            for i in right:
                vec[i - 1] = Fraction(-len(left))
            self.center_vectors.append(tuple(vec))
        self._inverse = self._build_inverse()

    @property
    def center_dim(self) -> int:
        return len(self.center_vectors)

    def diagonal(self, gen: Gen) -> Tuple[Fraction, ...]:
        """Diagonal of a Cartan generator in H_1..H_n coordinates."""
        n = self.system.n
        if gen.kind == "hX":
            vec = [Fraction(0)] * n
            vec[gen.a - 1], vec[gen.a] = Fraction(1), Fraction(-1)
            return tuple(vec)
        if gen.kind == "hU":
            return self.center_vectors[gen.a - 1]
        raise RootError(f"{gen} is not a Cartan generator")

    def cartan_gens(self, degree: int) -> List[Gen]:
        return [Gen("hX", a, 0, degree) for a in self.levi_indices] + [
            Gen("hU", b, 0, degree) for b in range(1, self.center_dim + 1)
        ]

    def _build_inverse(self) -> List[List[Fraction]]:
        columns = []
        for gen in self.cartan_gens(0):
            diag = self.diagonal(gen)
            running, coords = Fraction(0), []
            for value in diag[:-1]:
                running += value
                coords.append(running)
            columns.append(coords)
        size = self.system.n - 1
        matrix = sympy.Matrix(size, size, lambda r, c: sympy.Rational(columns[c][r]))
        inverse = matrix.inv()
        return [
            [Fraction(int(inverse[r, c].p), int(inverse[r, c].q)) for c in range(size)]
            for r in range(size)
        ]

    def to_element(self, gen: Gen) -> Element:
        n = self.system.n
        if gen.kind == "E":
            return Element.of(n, Atom.root_vector(gen.a, gen.b, gen.degree))
        if gen.kind == "K":
            return Element.of(n, Atom.central())
        if gen.kind == "D":
            return Element.of(n, Atom.derivation())
        return Element.loop(GlMatrix.diagonal(self.diagonal(gen)), gen.degree)

    def express(self, element: Element) -> Dict[Gen, Fraction]:
        """Coordinates of an element in the adapted generator basis."""
        coords: Dict[Gen, Fraction] = {}
        cartan: Dict[int, List[Fraction]] = {}
        size = self.system.n - 1
        for atom, coef in element.terms.items():
            if atom.kind == "E":
                coords[Gen("E", atom.i, atom.j, atom.degree)] = coef
            elif atom.kind == "H":
                cartan.setdefault(atom.degree, [Fraction(0)] * size)[atom.i - 1] += coef
            else:
                coords[Gen(atom.kind)] = coef
        for degree, vec in cartan.items():
            gens = self.cartan_gens(degree)
            for r, gen in enumerate(gens):
                value = sum((self._inverse[r][c] * vec[c] for c in range(size)), Fraction(0))
                if value:
                    coords[gen] = value
        return coords


def contains(spec: SubalgebraSpec, gen: Gen) -> bool:
    """Membership of an adapted generator in a subalgebra."""
    system, sid = spec.system, spec.id
    k = gen.degree
    if gen.kind == "E":
        levi = system.in_levi(gen.a, gen.b)
        lower = gen.a > gen.b
        if sid == "g_hat":
            return True
        if sid == "u_minus":
            return not levi and lower
        if sid == "u_plus":
            return not levi and not lower
        if sid in ("m_hat", "k_hat"):
            return levi
        if sid == "k_minus":
            return levi and (k < 0 or (k == 0 and lower))
        if sid == "k_plus":
            return levi and (k > 0 or (k == 0 and not lower))
        if sid == "b_hat":
            return system.is_positive(gen.root(system.n))  # type: ignore[arg-type]
        return False
    if gen.kind in ("K", "D"):
        if sid == "H_cal":
            return gen.kind == "K"
        return sid in ("g_hat", "m_hat", "k_hat", "b_hat", "h_hat")
    center = gen.kind == "hU"
    if sid in ("g_hat", "m_hat"):
        return True
    if sid == "k_hat":
        return not center or k == 0
    if sid in ("h_hat",):
        return k == 0
    if sid == "b_hat":
        return k >= 0
    if sid == "H_cal":
        return center
    if sid == "H_minus":
        return center and k < 0
    if sid == "H_plus":
        return center and k > 0
    if sid == "S_alg":
        return center and k < 0 and k % 2 == 0
    if sid == "k_minus":
        return not center and k < 0
    if sid == "k_plus":
        return not center and k > 0
    return False


def all_gens(system: PositiveSystem, degrees: Iterable[int]) -> List[Gen]:
    split = CartanSplit(system)
    n = system.n
    gens: List[Gen] = []
    for k in degrees:
        gens.extend(
            Gen("E", a, b, k)
            for a in range(1, n + 1)
            for b in range(1, n + 1)
            if a != b
        )
        gens.extend(split.cartan_gens(k))
    gens.extend([Gen("K"), Gen("D")])
    return gens


def subalgebra_atoms(spec: SubalgebraSpec, degree_window: Tuple[int, int]) -> List[Gen]:
    """
    Basis generators of a subalgebra with loop degree in a closed window.

    Args:
        spec: Subalgebra id and positive system
        degree_window: (low, high) inclusive bounds on loop degrees

    Returns:
        Sorted list of adapted generators
    """
    low, high = degree_window
    if low > high:
        raise RootError(f"Empty degree window {degree_window}")
    gens = all_gens(spec.system, range(low, high + 1))
    if not low <= 0 <= high:
        gens = [g for g in gens if g.is_loop]
    return sorted(g for g in gens if contains(spec, g))


@dataclass
class DetPolynomial:
    """Determinant of D_delta^X as a polynomial in H_1..H_n."""

    n: int
    expr: sympy.Expr
    basis: List[Tuple[Fraction, ...]] = field(default_factory=list)

    @cached_property
    def symbols(self) -> Tuple[sympy.Symbol, ...]:
        return sympy.symbols(f"H1:{self.n + 1}")

    def evaluate(self, weight: Weight) -> Fraction:
        subs = {s: sympy.Rational(v.numerator, v.denominator) for s, v in zip(self.symbols, weight.h_values)}
        value = sympy.Rational(self.expr.subs(subs))
        return Fraction(int(value.p), int(value.q))

    def terms(self) -> Dict[Tuple[int, ...], Fraction]:
        poly = sympy.Poly(self.expr, *self.symbols)
        return {
            monom: Fraction(int(coef.p), int(coef.q))
            for monom, coef in poly.terms()
            if coef
        }

    def is_zero(self) -> bool:
        return sympy.expand(self.expr) == 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DetPolynomial):
            return NotImplemented
        return self.n == other.n and sympy.expand(self.expr - other.expr) == 0

    def __str__(self) -> str:
        return str(sympy.factor(self.expr)) if self.expr != 0 else "0"


def pairing_entry(split: CartanSplit, x: Gen, y: Gen) -> Tuple[Fraction, ...]:
    """Diagonal of [x(1), y(-1)] in gl(n), reading K as I_n / n."""
    n = split.system.n
    value = bracket(
        split.to_element(Gen(x.kind, x.a, 0, 1)),
        split.to_element(Gen(y.kind, y.a, 0, -1)),
    )
    diag = value.loop_part(0).diagonal_values()
    shift = value.central_part() / n
    return tuple(d + shift for d in diag)


def det_D_delta(system: PositiveSystem) -> DetPolynomial:
    """
    Determinant of the pairing (h^X (x) t) x (h^X (x) t^-1) -> h given by the bracket.

    Returns:
        DetPolynomial in H_1..H_n together with the h^X basis used
    """
    split = CartanSplit(system)
    symbols = sympy.symbols(f"H1:{system.n + 1}")
    gens = [Gen("hU", b) for b in range(1, split.center_dim + 1)]
    size = len(gens)
    if not size:
        return DetPolynomial(system.n, sympy.Integer(1), [])

    def entry(r: int, c: int) -> sympy.Expr:
        diag = pairing_entry(split, gens[r], gens[c])
        return sum(
            (sympy.Rational(d.numerator, d.denominator) * s for d, s in zip(diag, symbols)),
            sympy.Integer(0),
        )

    matrix = sympy.Matrix(size, size, entry)
    expr = sympy.expand(matrix.det(method="berkowitz"))
    logger.debug(f"det D_delta for n={system.n}, X={sorted(system.X)}: {expr}")
    return DetPolynomial(system.n, expr, list(split.center_vectors))


def reference_det(system: PositiveSystem) -> Optional[DetPolynomial]:
    """Closed forms quoted in the literature, where one is available."""
    n = system.n
    symbols = sympy.symbols(f"H1:{n + 1}")
    if not system.X:
        product = sympy.Mul(*symbols)
        expr = 2 ** (n - 1) * product * sum((1 / s for s in symbols), sympy.Integer(0))
        return DetPolynomial(n, sympy.expand(expr))
    if n == 3 and system.X == frozenset({1}):
        h1, h2, h3 = symbols
        return DetPolynomial(n, 2 * (h1 + h2 - 2 * h3) ** 2)
    return None


def sample_generic_weight(n: int, system: PositiveSystem, seed: int, max_attempts: int = 1000) -> Weight:
    """
    Deterministically sample a weight off the zero set of det D_delta^X.

    Args:
        n: Rank
        system: Positive system
        seed: Seed; attempt t uses sub-seed (seed, t)
        max_attempts: Safety bound on resampling

    Returns:
        Weight with det D_delta^X(weight) != 0 and lambda(D) = 0
    """
    if n != system.n:
        raise RootError(f"Rank {n} does not match system rank {system.n}")
    det = det_D_delta(system)
    for attempt in range(max_attempts):
        rng = random.Random(seed * 100003 + attempt)
        values = tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 3)) for _ in range(n))
        weight = Weight(values)
        if det.evaluate(weight):
            return weight
        logger.debug(f"Weight {weight} lies on det zero set, resampling")
    raise RootError(f"No generic weight found after {max_attempts} attempts")
