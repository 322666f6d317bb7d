"""Tests for the Heisenberg quotient and phi-Verma modules."""

from fractions import Fraction

import pytest

from src.heisenberg import (
    DiagonalData,
    HeisenbergError,
    PhiSignature,
    PhiVermaModule,
    check_quotient_brackets,
    classify_diagonal,
    d_eigen,
    finite_components,
    good_basis,
    irreducible_iff_level,
    iso_equivalent,
    iso_witness,
    lemma_checks,
    phi_character,
    phi_verma,
    read_diagonal_data,
    zero_sum_count,
)

Q3 = good_basis(3)
PLUS = PhiSignature.constant(2, "+")
MINUS = PhiSignature.constant(2, "-")


@pytest.fixture
def plus_module():
    """All-plus phi-Verma module at level 1, depth 4."""
    return phi_verma(Q3, PLUS, Fraction(1), 4)


class TestQuotient:
    """Test the good basis and the quotient brackets."""

    def test_gram_constants(self):
        """Test c_i = i^2 + i."""
        assert Q3.gram == (2, 6)
        assert good_basis(4).gram == (2, 6, 12)
        assert Q3.t == 2

    def test_pairing(self):
        """Test [x^j_k, x^j_-k] = 2 c_j K and zero otherwise."""
        assert Q3.pairing((2, 3), (2, -3)) == 12
        assert Q3.pairing((1, 1), (2, -1)) == 0
        assert Q3.pairing((1, 1), (1, 1)) == 0

    @pytest.mark.parametrize("n", [3, 4])
    def test_quotient_brackets(self, n):
        """Test the pairing against the full bracket."""
        assert check_quotient_brackets(good_basis(n), 3) == []


class TestPhiSignature:
    """Test parsing and editing of phi."""

    def test_parse(self):
        """Test prefix and periodic tail."""
        phi = PhiSignature.parse("++,+-|--", 2)

        assert phi.prefix == (("+", "+"), ("+", "-"))
        assert phi.at(1) == ("+", "-")
        assert phi.at(7) == ("-", "-")
        assert phi.to_text() == "++,+-|--"

    @pytest.mark.parametrize("text", ["++", "+|++", "++|", "+x|++"])
    def test_parse_errors(self, text):
        """Test malformed signatures."""
        with pytest.raises(HeisenbergError):
            PhiSignature.parse(text, 2)

    def test_flip(self):
        """Test flipping one sign."""
        flipped = PLUS.flip(0, 1)

        assert str(flipped) == "-+|++"
        assert flipped.at(0) == ("-", "+")
        assert flipped.at(3) == ("+", "+")


class TestPhiVerma:
    """Test the Grassmann realisation of M_phi."""

    def test_dims_all_plus(self, plus_module):
        """Test graded dimensions below the top."""
        assert plus_module.dims() == {0: 1, -1: 2, -2: 1, -3: 2, -4: 4}
        assert len(plus_module.basis()) == 10

    def test_dims_all_minus(self):
        """Test that flipping every sign mirrors the degrees."""
        module = PhiVermaModule(Q3, MINUS, Fraction(1), 4)

        assert module.dims() == {4: 4, 3: 2, 2: 1, 1: 2, 0: 1}

    def test_phi_character(self):
        """Test the Grassmann generating function."""
        assert phi_character(PLUS, 4) == {0: 1, -1: 2, -2: 1, -3: 2, -4: 4}
        assert phi_character(MINUS, 1) == {1: 2, 0: 1}

    def test_mixed_signs_share_window(self):
        """Test that the basis cut on total |degree| matches the character."""
        mixed = PhiSignature.parse("-+|++", 2)
        module = PhiVermaModule(Q3, mixed, Fraction(1), 5)

        assert module.dims() == {1: 1, 0: 2, -1: 1, -2: 2, -3: 4, -4: 2, -5: 2}
        assert module.dims() == phi_character(mixed, 5)

    def test_family_mismatch(self):
        """Test that phi must have t families."""
        with pytest.raises(HeisenbergError, match="families"):
            PhiVermaModule(Q3, PhiSignature.constant(3, "+"), Fraction(1), 2)

    def test_act_rejects_even(self, plus_module):
        """Test that only odd generators act."""
        with pytest.raises(HeisenbergError, match="not an odd generator"):
            plus_module.act((1, 2), plus_module.top_vector())

    def test_contraction(self, plus_module):
        """Test x^1_1 x^1_-1 v = 2 c_1 a v."""
        w = plus_module.act((1, -1), plus_module.top_vector())

        assert w == {((1, -1),): 1}
        assert plus_module.act((1, 1), w) == {(): 4}
        assert plus_module.act((1, -1), w) == {}


class TestDOperators:
    """Test the rescaled d operators."""

    def test_eigenvalues(self):
        """Test eigenvalue 0 on the top and a on x^1_-1 v."""
        module = PhiVermaModule(Q3, PLUS, Fraction(3), 3)
        w = module.act((1, -1), module.top_vector())

        assert d_eigen(module, module.top_vector(), 0, 1) == 0
        assert d_eigen(module, w, 0, 1) == 3
        assert d_eigen(module, w, 0, 2) == 0

    def test_minus_family(self):
        """Test that for a '-' family the top has eigenvalue a."""
        module = PhiVermaModule(Q3, MINUS, Fraction(2), 1)

        assert d_eigen(module, module.top_vector(), 0, 2) == 2

    def test_not_eigenvector(self, plus_module):
        """Test that mixed vectors are rejected."""
        vector = {(): Fraction(1), ((1, -1),): Fraction(1)}

        with pytest.raises(HeisenbergError, match="not an eigenvector"):
            d_eigen(plus_module, vector, 0, 1)

    @pytest.mark.parametrize("phi", [PLUS, MINUS, PLUS.flip(0, 1)])
    def test_lemma_checks(self, phi):
        """Test d^2 = a d and the eigenvalue implications."""
        report = lemma_checks(PhiVermaModule(Q3, phi, Fraction(1), 3))

        assert report.passed
        assert report.checked == 6 * 4


class TestClassification:
    """Test diagonal data and isomorphism classes."""

    def test_classify(self):
        """Test that eigenvalue 0 reads '+' and a reads '-'."""
        data = DiagonalData([(Fraction(0), Fraction(1))], [(Fraction(1), Fraction(1))], Fraction(1))

        assert classify_diagonal(data) == PhiSignature.parse("+-|--", 2)

    def test_classify_errors(self):
        """Test level zero and stray eigenvalues."""
        with pytest.raises(HeisenbergError, match="nonzero level"):
            classify_diagonal(DiagonalData([], [(Fraction(0), Fraction(0))], Fraction(0)))
        with pytest.raises(HeisenbergError, match="neither"):
            classify_diagonal(DiagonalData([], [(Fraction(2), Fraction(0))], Fraction(1)))

    def test_read_back_phi(self):
        """Test that the top vector's eigenvalues recover phi."""
        phi = PhiSignature.parse("+-|-+", 2)
        module = PhiVermaModule(Q3, phi, Fraction(5), 3)

        assert classify_diagonal(read_diagonal_data(module)) == phi

    def test_iso_equivalent(self):
        """Test equal levels and finitely many differences."""
        assert iso_equivalent(PLUS, 1, PLUS.flip(0, 1), 1)
        assert not iso_equivalent(PLUS, 1, MINUS, 1)
        assert not iso_equivalent(PLUS, 1, PLUS, 2)

    def test_iso_witness(self):
        """Test that x v is a highest vector for the flipped phi."""
        witness = iso_witness(Q3, PLUS, 0, 1, Fraction(1), 3)

        assert witness.passed
        assert witness.vector == {((1, -1),): 1}
        assert str(witness.flipped) == "-+|++"


class TestComponents:
    """Test finiteness of the degree-zero component."""

    def test_zero_sum_count(self):
        """Test subset counting."""
        assert zero_sum_count([1, -1, 2, -2]) == 3
        assert zero_sum_count([-1, -3]) == 0

    def test_constant_phi(self):
        """Test that a constant phi has finite components."""
        report = finite_components(PLUS, windows=(5,))

        assert report.finite
        assert report.cycle_counts == {5: 0}

    def test_alternating_phi(self):
        """Test that an alternating phi accumulates degree-zero cycles."""
        report = finite_components(PhiSignature.parse("|++,--", 2), windows=(5, 9))

        assert not report.finite
        assert report.cycle_counts[5] == 4
        assert report.cycle_counts[9] > report.cycle_counts[5]


class TestIrreducibility:
    """Test irreducibility against the level."""

    def test_nonzero_level(self):
        """Test that every basis vector contracts back to the top."""
        report = irreducible_iff_level(Q3, PLUS, Fraction(1), 4)

        assert report.irreducible
        assert len(report.certificates) == 10
        assert report.unreachable == []

    def test_zero_level(self):
        """Test that level zero leaves a proper submodule."""
        report = irreducible_iff_level(Q3, MINUS, Fraction(0), 4)

        assert not report.irreducible
        assert len(report.proper_submodule) == 9
