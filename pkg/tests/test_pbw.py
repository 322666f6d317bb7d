"""Tests for PBW monomials and normal ordering."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.pbw import (
    PBWError,
    PBWMonomial,
    Straightener,
    UEElement,
    compare_monomials,
    monomial_weight,
    normal_order,
)
from src.roots import Gen, PositiveSystem, SubalgebraSpec

F = Fraction
SYSTEM = PositiveSystem(3)
G_HAT = SubalgebraSpec("g_hat", SYSTEM)


def E(i, j, k=0):
    return Gen("E", i, j, k)


def hU(b, k=0):
    return Gen("hU", b, 0, k)


@pytest.fixture
def straightener():
    """Straightener for n = 3, X empty, single block."""
    return Straightener(SYSTEM)


class TestNormalOrder:
    """Test rewriting words into ordered form."""

    def test_ordered_word_unchanged(self, straightener):
        """Test that an ordered word is its own normal form."""
        word = (E(2, 1), E(1, 2))

        assert straightener.is_ordered(word)
        assert normal_order(word, G_HAT) == UEElement({word: 1})

    def test_even_swap(self):
        """Test E12 E21 = E21 E12 + h1."""
        result = normal_order((E(1, 2), E(2, 1)), G_HAT)

        assert result == UEElement({(E(2, 1), E(1, 2)): 1, (hU(1),): 1})

    def test_odd_swap_sign(self):
        """Test E12(1) E21(1) = -E21(1) E12(1) + iota(E11 + E22)(2)."""
        result = normal_order((E(1, 2, 1), E(2, 1, 1)), G_HAT)

        assert result == UEElement(
            {
                (E(2, 1, 1), E(1, 2, 1)): -1,
                (hU(1, 2),): F(1, 3),
                (hU(2, 2),): F(2, 3),
            }
        )

    def test_odd_square(self):
        """Test that an odd square reduces to half its bracket."""
        result = normal_order((hU(1, 1), hU(1, 1)), G_HAT)

        assert result == UEElement({(hU(1, 2),): F(1, 3), (hU(2, 2),): F(2, 3)})

    def test_nilpotent_odd_square(self):
        """Test E12(1)^2 = 0."""
        assert not normal_order((E(1, 2, 1), E(1, 2, 1)), G_HAT)

    def test_derivation(self, straightener):
        """Test E12(2) D = D E12(2) - 2 E12(2)."""
        d = Gen("D")
        result = straightener.multiply(UEElement({(E(1, 2, 2),): 1}), UEElement({(d,): 1}))

        assert result == UEElement({(d, E(1, 2, 2)): 1, (E(1, 2, 2),): -2})

    def test_sector_check(self):
        """Test that generators outside the sector are rejected."""
        with pytest.raises(PBWError, match="outside sector"):
            normal_order((E(1, 2),), SubalgebraSpec("u_minus", SYSTEM))

    def test_memo_is_filled(self, straightener):
        """Test that normal forms are cached."""
        straightener.normal_order((E(1, 3, 1), E(3, 1, -1)))

        assert straightener.cache_size() > 0

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.sampled_from([E(1, 2, 1), E(2, 1, -1), E(2, 3, 0), hU(1, -1), hU(2, 2)]),
            min_size=1,
            max_size=3,
        )
    )
    def test_output_is_ordered(self, word):
        """Test that every word of a normal form is ordered."""
        straightener = Straightener(SYSTEM)

        for ordered in straightener.normal_order(word).terms:
            assert straightener.is_ordered(ordered)


class TestMonomials:
    """Test PBW monomials and their order."""

    def test_blocks_and_str(self):
        """Test the even and odd blocks."""
        monomial = PBWMonomial((E(2, 1), E(2, 1), E(1, 2, 1)))

        assert monomial.even_block == [(E(2, 1), 2)]
        assert monomial.odd_block == [E(1, 2, 1)]
        assert monomial.degree == 3
        assert str(monomial) == "E21(0)^2*E12(1)"
        assert str(PBWMonomial()) == "1"

    def test_lower_degree_first(self):
        """Test that fewer factors sort first."""
        short = PBWMonomial((E(2, 1),))
        long = PBWMonomial((E(2, 1), E(3, 1)))

        assert compare_monomials(short, long) == -1
        assert compare_monomials(long, short) == 1
        assert compare_monomials(long, long) == 0

    def test_odd_only_before_even_only(self):
        """Test the tie break between purely odd and purely even monomials."""
        odd = PBWMonomial((E(1, 2, 1),))
        even = PBWMonomial((E(1, 2, 0),))

        assert compare_monomials(odd, even) == -1

    def test_sector_mismatch(self):
        """Test that monomials of different sectors are incomparable."""
        with pytest.raises(PBWError, match="sectors"):
            compare_monomials(PBWMonomial((), "u_minus"), PBWMonomial((), "H_cal"))

    def test_monomial_weight(self):
        """Test the weight of a monomial as (finite part, delta)."""
        monomial = PBWMonomial((E(2, 1, -1), hU(1, -2), Gen("K")))

        assert monomial_weight(monomial, 3) == ((-1, 1, 0), -3)


class TestUEElement:
    """Test linear combinations of words."""

    def test_arithmetic(self):
        """Test addition, scaling and cancellation."""
        a = UEElement({(E(2, 1),): 2})
        b = UEElement({(E(2, 1),): -2, (hU(1),): 1})

        total = a + b
        assert total == UEElement({(hU(1),): 1})
        assert total.coefficient([hU(1)]) == 1
        assert not (a - a)
        assert (a * F(1, 2)).coefficient((E(2, 1),)) == 1

    def test_max_degree(self):
        """Test the longest word length."""
        element = UEElement({(): 1, (E(2, 1), E(3, 1)): 3})

        assert element.max_degree() == 2
        assert UEElement().max_degree() == 0
        assert repr(UEElement()) == "0"
