"""Tests for root data, subalgebras and the Cartan pairing determinant."""

from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from src.roots import (
    CartanSplit,
    Gen,
    PositiveSystem,
    Root,
    RootError,
    SubalgebraSpec,
    Weight,
    bar_root,
    contains,
    det_D_delta,
    parse_subset,
    reference_det,
    sample_generic_weight,
    subalgebra_atoms,
)
from src.superalgebra import Atom, Element

F = Fraction


class TestRoots:
    """Test roots and their bars."""

    def test_real_root(self):
        """Test construction, parity and negation."""
        root = Root.real(3, 1, 2, 1)

        assert root.indices == (1, 2)
        assert root.parity == 1
        assert (-root).indices == (2, 1)
        assert (-root).delta == -1
        assert str(root) == "e1-e2+1d"

    def test_invalid_roots(self):
        """Test that non-roots are rejected."""
        with pytest.raises(RootError):
            Root.imaginary(3, 0)
        with pytest.raises(RootError):
            Root.real(3, 2, 2)
        with pytest.raises(RootError):
            Root((1, 1, 0), 0)

    def test_bar_root(self):
        """Test that bar(e_i - e_j) = e_i + e_j."""
        assert bar_root(Root.real(3, 3, 1)) == (1, 0, 1)
        with pytest.raises(RootError, match="no bar"):
            bar_root(Root.imaginary(3, 2))

    def test_parse_subset(self):
        """Test subset parsing."""
        assert parse_subset("", 4) == frozenset()
        assert parse_subset("1,3", 4) == frozenset({1, 3})
        with pytest.raises(RootError):
            parse_subset("4", 4)


class TestPositiveSystem:
    """Test the positive systems Delta(X)+."""

    def test_blocks(self):
        """Test X-blocks of {1..n}."""
        assert PositiveSystem(3).blocks() == [(1,), (2,), (3,)]
        assert PositiveSystem(3, frozenset({1})).blocks() == [(1, 2), (3,)]
        assert PositiveSystem(4, frozenset({1, 2})).blocks() == [(1, 2, 3), (4,)]

    def test_positivity_outside_levi(self):
        """Test that roots outside the Levi are positive iff i < j, for any delta."""
        system = PositiveSystem(3)

        assert system.is_positive(Root.real(3, 1, 2, -5))
        assert not system.is_positive(Root.real(3, 2, 1, 5))
        assert system.is_positive(Root.imaginary(3, 1))
        assert not system.is_positive(Root.imaginary(3, -2))

    def test_positivity_inside_levi(self):
        """Test that Levi roots are positive by delta, then by i < j."""
        system = PositiveSystem(3, frozenset({1}))

        assert system.is_positive(Root.real(3, 2, 1, 1))
        assert not system.is_positive(Root.real(3, 1, 2, -1))
        assert system.is_positive(Root.real(3, 1, 2, 0))
        assert system.is_positive(Root.real(3, 2, 3, -1))

    def test_invalid_subset(self):
        """Test that X must lie in 1..n-1."""
        with pytest.raises(RootError, match="outside"):
            PositiveSystem(3, frozenset({3}))

    @given(
        st.integers(1, 4),
        st.integers(1, 4),
        st.integers(-6, 6),
        st.sets(st.integers(1, 3)),
    )
    def test_exactly_one_of_root_and_negative(self, i, j, k, subset):
        """Test that every real root or its negative is positive, never both."""
        assume(i != j)
        system = PositiveSystem(4, frozenset(subset))
        root = Root.real(4, i, j, k)

        assert system.is_positive(root) != system.is_positive(-root)


class TestCartanSplit:
    """Test the adapted Cartan basis."""

    def test_center_vectors(self):
        """Test the block basis of h^X."""
        assert CartanSplit(PositiveSystem(3)).center_vectors == [
            (F(1), F(-1), F(0)),
            (F(0), F(1), F(-1)),
        ]
        split = CartanSplit(PositiveSystem(3, frozenset({1})))
        assert split.center_vectors == [(F(1), F(1), F(-2))]
        assert split.center_dim == 1

    def test_express_inverts_to_element(self):
        """Test coordinates of Cartan generators in the adapted basis."""
        split = CartanSplit(PositiveSystem(4, frozenset({2})))
        for gen in split.cartan_gens(3):
            assert split.express(split.to_element(gen)) == {gen: F(1)}

    def test_express_mixed_element(self):
        """Test expressing a sum of root vector, Cartan and K atoms."""
        split = CartanSplit(PositiveSystem(3, frozenset({1})))
        element = Element(3, {Atom.root_vector(1, 3, 2): 5, Atom.cartan(1, 1): 1, Atom.central(): 2})

        coords = split.express(element)

        assert coords[Gen("E", 1, 3, 2)] == 5
        assert coords[Gen("hX", 1, 0, 1)] == 1
        assert coords[Gen("K")] == 2

    def test_not_cartan(self):
        """Test that root vectors have no diagonal."""
        with pytest.raises(RootError):
            CartanSplit(PositiveSystem(3)).diagonal(Gen("E", 1, 2))


class TestSubalgebras:
    """Test subalgebra membership."""

    def test_unknown_id(self):
        """Test that unknown ids are rejected."""
        with pytest.raises(RootError, match="Unknown subalgebra"):
            SubalgebraSpec("bogus", PositiveSystem(3))

    def test_s_generators(self):
        """Test that S is spanned by h^X at negative even degrees."""
        gens = subalgebra_atoms(SubalgebraSpec("S_alg", PositiveSystem(3)), (-4, 4))

        assert len(gens) == 4
        assert {g.degree for g in gens} == {-2, -4}
        assert all(g.kind == "hU" for g in gens)

    def test_h_minus(self):
        """Test H^- for X = {1}: one center direction at each negative degree."""
        system = PositiveSystem(3, frozenset({1}))
        gens = subalgebra_atoms(SubalgebraSpec("H_minus", system), (-3, 3))

        assert [g.degree for g in gens] == [-3, -2, -1]
        assert CartanSplit(system).diagonal(gens[0]) == (F(1), F(1), F(-2))

    def test_levi_membership(self):
        """Test membership of root vectors in m_hat, u^- and k^+."""
        system = PositiveSystem(3, frozenset({1}))
        e21 = Gen("E", 2, 1, 1)
        e31 = Gen("E", 3, 1, 0)

        assert contains(SubalgebraSpec("m_hat", system), e21)
        assert contains(SubalgebraSpec("k_plus", system), e21)
        assert not contains(SubalgebraSpec("m_hat", system), e31)
        assert contains(SubalgebraSpec("u_minus", system), e31)

    def test_h_cal_holds_k_not_d(self):
        """Test that H_cal contains K but not D."""
        spec = SubalgebraSpec("H_cal", PositiveSystem(3))

        assert contains(spec, Gen("K"))
        assert not contains(spec, Gen("D"))

    def test_empty_window(self):
        """Test that inverted windows are rejected."""
        with pytest.raises(RootError):
            subalgebra_atoms(SubalgebraSpec("g_hat", PositiveSystem(3)), (2, 1))


class TestWeight:
    """Test weights."""

    def test_level_and_pairing(self):
        """Test lambda(K) and pairing with elements."""
        lam = Weight((F(1), F(2), F(3)), F(5))

        assert lam.level == 2
        assert lam.on_element(Element.of(3, Atom.central())) == 2
        assert lam.on_element(Element.of(3, Atom.derivation())) == 5
        assert lam.on_element(Element.of(3, Atom.cartan(2))) == -1
        assert lam.to_dict() == {"h": ["1", "2", "3"], "d": "5"}


class TestDeterminant:
    """Test det D_delta^X."""

    def test_x_empty_n3(self):
        """Test det = 4(H1H2 + H1H3 + H2H3)."""
        det = det_D_delta(PositiveSystem(3))

        assert det.terms() == {(1, 1, 0): 4, (1, 0, 1): 4, (0, 1, 1): 4}
        assert det.evaluate(Weight((1, 1, 1))) == 12
        assert det == reference_det(PositiveSystem(3))

    def test_x_empty_n4(self):
        """Test agreement with the closed product form for n = 4."""
        system = PositiveSystem(4)

        assert det_D_delta(system) == reference_det(system)

    def test_levi_direct_value(self):
        """Test X = {1}, n = 3: direct pairing and the quoted closed form differ."""
        system = PositiveSystem(3, frozenset({1}))
        det = det_D_delta(system)

        assert det.terms() == {(1, 0, 0): 2, (0, 1, 0): 2, (0, 0, 1): 8}
        assert reference_det(system) is not None
        assert det != reference_det(system)

    def test_no_reference(self):
        """Test that no closed form is claimed for other Levi types."""
        assert reference_det(PositiveSystem(4, frozenset({1}))) is None

    def test_full_levi(self):
        """Test that X = all simple roots gives the constant 1."""
        det = det_D_delta(PositiveSystem(3, frozenset({1, 2})))

        assert det.evaluate(Weight((0, 0, 0))) == 1

    def test_sample_generic_weight(self):
        """Test that sampling is seeded and avoids the zero set."""
        system = PositiveSystem(3)
        first = sample_generic_weight(3, system, seed=7)
        second = sample_generic_weight(3, system, seed=7)

        assert first == second
        assert det_D_delta(system).evaluate(first) != 0
        assert first.d_value == 0

    def test_sample_rank_mismatch(self):
        """Test that the rank must match the system."""
        with pytest.raises(RootError):
            sample_generic_weight(4, PositiveSystem(3), seed=0)
