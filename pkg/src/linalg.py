"""Exact sparse linear algebra over the rationals."""

import logging
from fractions import Fraction
from typing import Dict, Hashable, List, Mapping, Optional, Sequence

import sympy

logger = logging.getLogger(__name__)

Vector = Dict[Hashable, Fraction]


def clean(vector: Mapping[Hashable, Fraction]) -> Vector:
    return {k: Fraction(v) for k, v in vector.items() if v}


def add_into(target: Vector, vector: Mapping[Hashable, Fraction], scale: Fraction = Fraction(1)) -> None:
    for key, value in vector.items():
        total = target.get(key, Fraction(0)) + scale * value
        if total:
            target[key] = total
        else:
            target.pop(key, None)


class SparseEchelon:
    """Incremental reduced row echelon form of sparse rational vectors.

    Coordinates must be mutually comparable; the pivot of a row is its
    smallest coordinate.
    """

    def __init__(self) -> None:
        self._rows: Dict[Hashable, Vector] = {}

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def rank(self) -> int:
        return len(self._rows)

    def reduce(self, vector: Mapping[Hashable, Fraction]) -> Vector:
        """Residual of ``vector`` modulo the current span."""
        residual = clean(vector)
        # rows are fully reduced, so one pass clears every pivot
        for pivot in [k for k in residual if k in self._rows]:
            coef = residual.get(pivot)
            if coef:
                add_into(residual, self._rows[pivot], -coef)
        return residual

    def contains(self, vector: Mapping[Hashable, Fraction]) -> bool:
        return not self.reduce(vector)

    def add(self, vector: Mapping[Hashable, Fraction]) -> bool:
        """Add a vector to the span. Returns False if it was already inside."""
        residual = self.reduce(vector)
        if not residual:
            return False
        pivot = min(residual)
        scale = 1 / residual[pivot]
        row = {k: v * scale for k, v in residual.items()}
        for other in self._rows.values():
            if pivot in other:
                add_into(other, row, -other[pivot])
        self._rows[pivot] = row
        return True

    def basis(self) -> List[Vector]:
        return [dict(self._rows[p]) for p in sorted(self._rows)]


def nullspace(columns: Sequence[Mapping[Hashable, Fraction]]) -> List[List[Fraction]]:
    """
    Kernel of the linear map sending the i-th basis vector to ``columns[i]``.

    Args:
        columns: Images of the source basis vectors as sparse vectors

    Returns:
        Basis of the kernel as coefficient lists over the source basis
    """
    if not columns:
        return []
    rows = sorted({k for col in columns for k in col})
    if not rows:
        return [[Fraction(int(i == j)) for j in range(len(columns))] for i in range(len(columns))]
    index = {k: r for r, k in enumerate(rows)}
    matrix = sympy.zeros(len(rows), len(columns))
    for c, col in enumerate(columns):
        for key, value in col.items():
            matrix[index[key], c] = sympy.Rational(value.numerator, value.denominator)
    kernel = matrix.nullspace()
    logger.debug(f"Nullspace of {len(rows)}x{len(columns)} matrix has dimension {len(kernel)}")
    return [[_to_fraction(v) for v in vec] for vec in kernel]


def rank(vectors: Sequence[Mapping[Hashable, Fraction]]) -> int:
    echelon = SparseEchelon()
    for vector in vectors:
        echelon.add(vector)
    return echelon.rank


def combine(coefficients: Sequence[Fraction], vectors: Sequence[Mapping[Hashable, Fraction]]) -> Vector:
    total: Vector = {}
    for coef, vector in zip(coefficients, vectors):
        if coef:
            add_into(total, vector, coef)
    return total


def _to_fraction(value: sympy.Expr) -> Fraction:
    rational = sympy.Rational(value)
    return Fraction(int(rational.p), int(rational.q))


def solve_in_span(
    target: Mapping[Hashable, Fraction], vectors: Sequence[Mapping[Hashable, Fraction]]
) -> Optional[List[Fraction]]:
    """Coefficients c with sum c_i vectors_i == target, or None."""
    columns = list(vectors) + [clean({k: -v for k, v in target.items()})]
    for kernel_vector in nullspace(columns):
        last = kernel_vector[-1]
        if last:
            return [c / last for c in kernel_vector[:-1]]
    return None
