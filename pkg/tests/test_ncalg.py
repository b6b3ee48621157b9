"""Tests for exact scalars, word reduction and noncommutative polynomials."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qjacobi.ncalg import (
    Alphabet,
    NCPoly,
    Scalar,
    ScalarError,
    WordError,
    commutator,
    parse_poly,
    parse_scalar,
    scalar_arith,
    substitute,
    word_reduce,
)

AB = Alphabet(("A", "B"))
CDZ = Alphabet(("C", "D", "Z", "Zinv"), (("Z", "Zinv"),))


def poly(text, alphabet=AB, constants=("ipi",)):
    return parse_poly(text, alphabet, constants)


# -- scalars ----------------------------------------------------------------

def test_rational_addition():
    assert scalar_arith(Scalar.rational(1, 2), Scalar.rational(1, 3), "add") == Scalar.rational(5, 6)


def test_monomial_product():
    a = Scalar.constant("ipi", coeff=2)
    b = Scalar.constant("ipi", coeff=3)
    assert a * b == Scalar.constant("ipi", exponent=2, coeff=6)


def test_division_by_zero_fails():
    with pytest.raises(ScalarError):
        scalar_arith(Scalar.one(), Scalar.zero(), "div")


def test_division_by_formal_constant_fails():
    with pytest.raises(ScalarError):
        Scalar.one() / Scalar.constant("ipi")


def test_scalar_division_exact():
    assert Scalar.rational(5, 6) / Scalar.rational(5, 3) == Scalar.rational(1, 2)
    assert Scalar.constant("ipi", coeff=4) / 2 == Scalar.constant("ipi", coeff=2)


def test_scalar_text_round_trip():
    s = Scalar.rational(1, 2) + Scalar.constant("ipi", 2, Fraction(-3, 4))
    assert s.to_text() == "1/2 - 3/4*ipi^2"
    assert parse_scalar(s.to_text()) == s
    assert parse_scalar("0") == Scalar.zero()


def test_scalar_no_zero_terms_stored():
    s = Scalar.constant("ipi") - Scalar.constant("ipi")
    assert s.is_zero and s == Scalar.zero()


def test_floats_are_rejected_at_the_boundary():
    with pytest.raises(ScalarError):
        Scalar({(): 0.5})
    with pytest.raises(ScalarError):
        Scalar.coerce(0.5)


# -- words ------------------------------------------------------------------

def test_word_reduce_single_cancellation():
    assert word_reduce(("C", "Z", "Zinv"), CDZ) == ("C",)


def test_word_reduce_nested_cancellation():
    assert word_reduce(("Z", "Zinv", "Zinv", "Z"), CDZ) == ()


def test_word_reduce_already_reduced():
    assert word_reduce(("C", "D"), CDZ) == ("C", "D")


def test_word_reduce_unknown_letter():
    with pytest.raises(WordError):
        word_reduce(("C", "Q"), CDZ)


def _rescan_reduce(seq, alphabet):
    # Alternative strategy: repeatedly delete the first adjacent inverse pair.
    word = list(seq)
    changed = True
    while changed:
        changed = False
        for i in range(len(word) - 1):
            if alphabet.inverse_of(word[i]) == word[i + 1]:
                del word[i : i + 2]
                changed = True
                break
    return tuple(word)


@given(st.lists(st.sampled_from(CDZ.letters), max_size=12))
def test_word_reduce_order_independent(seq):
    assert word_reduce(seq, CDZ) == _rescan_reduce(seq, CDZ)


# -- polynomials ------------------------------------------------------------

def test_nc_mul_concatenates():
    assert NCPoly.letter(AB, "A") * NCPoly.letter(AB, "B") == poly("A.B")


def test_nc_mul_unit_law():
    p = poly("A.B - B.A")
    assert p * NCPoly.one(AB) == p
    assert NCPoly.one(AB) * p == p


def test_nc_mul_cancels_across_product():
    left = NCPoly.word(CDZ, ("C", "Zinv"))
    right = NCPoly.word(CDZ, ("Z", "D"))
    assert left * right == NCPoly.word(CDZ, ("C", "D"))


def test_nc_mul_alphabet_mismatch():
    with pytest.raises(WordError):
        NCPoly.letter(AB, "A") * NCPoly.letter(CDZ, "C")


def test_commutator_definition():
    a, b = NCPoly.letter(AB, "A"), NCPoly.letter(AB, "B")
    assert commutator(a, b) == poly("A.B - B.A")
    assert commutator(a, a).is_zero
    # [AB, A] = ABA - AAB, expanded by hand.
    assert commutator(poly("A.B"), a) == poly("A.B.A - A.A.B")


def test_canonical_text_matches_interchange_example():
    p = poly("1/24*A.B") - poly("1/24*B.A")
    assert p.to_text() == "1/24*A.B - 1/24*B.A"


def test_leading_negative_term_rendering():
    p = -poly("1/24*A.B") + poly("1/24*B.A")
    assert p.to_text() == "- 1/24*A.B + 1/24*B.A"
    assert parse_poly(p.to_text(), AB) == p


def test_word_order_length_lexicographic():
    p = poly("B + A.A + A")
    assert p.to_text() == "A + B + A.A"


# -- substitution -----------------------------------------------------------

def test_substitute_word_image():
    p = poly("A.B")
    image = substitute(p, {"A": NCPoly.letter(CDZ, "C"), "B": NCPoly.word(CDZ, ("Zinv", "D", "Z"))})
    assert image == NCPoly.word(CDZ, ("C", "Zinv", "D", "Z"))


def test_substitute_kills_commutator():
    p = commutator(NCPoly.letter(AB, "A"), NCPoly.letter(AB, "B"))
    x = NCPoly.word(CDZ, ("C", "D"))
    assert substitute(p, {"A": x, "B": x}).is_zero


def test_substitute_missing_image():
    with pytest.raises(WordError):
        substitute(poly("A.B"), {"A": NCPoly.letter(CDZ, "C")})


def test_substitute_identity_on_series():
    from qjacobi.hseries import HSeries

    series = HSeries((NCPoly.one(AB), NCPoly.letter(AB, "A")))
    out = substitute(NCPoly.letter(CDZ, "Z"), {"Z": series})
    assert out == series


# -- property tests ----------------------------------------------------------

_scalars = st.builds(
    lambda p, q, c: Scalar.rational(p, q) + Scalar.constant("ipi", coeff=c),
    st.integers(-4, 4),
    st.integers(1, 5),
    st.integers(-2, 2),
)
_words = st.lists(st.sampled_from(AB.letters), max_size=4).map(tuple)
_polys = st.lists(st.tuples(_words, _scalars), max_size=5).map(lambda ts: NCPoly(AB, ts))


@given(_polys)
def test_poly_text_round_trip(p):
    assert parse_poly(p.to_text(), AB) == p


@settings(max_examples=60)
@given(_polys, _polys, _polys)
def test_mul_associative_and_distributive(p, q, r):
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r


@settings(max_examples=40)
@given(_polys, _polys)
def test_substitute_is_multiplicative(p, q):
    images = {
        "A": NCPoly.word(CDZ, ("C", "Zinv")),
        "B": NCPoly.word(CDZ, ("Z", "D")) + NCPoly.one(CDZ),
    }
    assert substitute(p * q, images) == substitute(p, images) * substitute(q, images)
