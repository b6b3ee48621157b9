"""Tests for the typed conjugation rewriter."""

import random

import pytest

from qjacobi.deformation import builtin_table
from qjacobi.liealg import build_algebra, build_tensor_ops, eval_series
from qjacobi.ncalg import Scalar
from qjacobi.psiengine import compute_psi
from qjacobi.transport import (
    ClassicalPoly,
    TransportElement,
    TransportError,
    TransportModel,
    classical_normalize,
    compose,
    gen,
    identity_on,
    lift,
    morph_sum,
    normalize,
    normalize_traced,
    q_obj,
    replay_trace,
    scale,
    verify_identity,
    xblock,
)


def element_to_expr(element: TransportElement):
    """Rebuild an expression from a normal form, for idempotence checks."""
    summands = []
    for coeff, factors in element.terms:
        parts = []
        for factor in factors:
            if factor[0] == "c":
                name = factor[1] if factor[2] > 0 else f"{factor[1]}_inv"
                parts.append(gen(name))
            else:
                parts.append(xblock(factor[1]))
        if parts:
            summands.append((coeff, compose(*parts)))
        else:
            k = element.dom[1] if element.dom != "u" else 0
            summands.append((coeff, identity_on(k)))
    return morph_sum(*summands)


# -- normalization examples ----------------------------------------------------

def test_psi_times_inverse_is_identity():
    nf = normalize(compose(gen("psi"), gen("psi_inv")))
    assert nf.is_identity()
    assert nf.to_text() == "1"


def test_bracket_after_flip_normal_form():
    nf = normalize(compose(gen("T_h"), gen("sigma_h")))
    assert nf.to_text() == "X(T.sig).Mvv"


def test_braid_lhs_telescopes():
    s12 = lift("sigma_h", "left")
    s23 = lift("sigma_h", "right")
    lhs = compose(gen("psi"), s12, gen("psi_inv"), s23, gen("psi"), s12)
    assert normalize(lhs).to_text() == "M^-1.X(sig12.sig23.sig12).N"


def test_t_h_normalizes_through_the_unit():
    nf = normalize(gen("t_h"))
    assert nf.to_text() == "Mvv^-1.X(tcas)"


def test_normalize_is_idempotent():
    exprs = [
        compose(gen("T_h"), gen("sigma_h")),
        compose(gen("psi"), lift("Omega_h", "left"), gen("psi_inv")),
        morph_sum((1, gen("psi")), (Scalar.rational(-1, 2), gen("psi_inv"))),
    ]
    for expr in exprs:
        once = normalize(expr)
        again = normalize(element_to_expr(once))
        assert once == again


def test_unknown_generator_rejected():
    with pytest.raises(TransportError):
        gen("R_h_totally_unknown")


def test_bare_bracket_lift_rejected():
    with pytest.raises(TransportError):
        normalize(lift("T_h", "left"))


def test_budget_exhaustion_is_an_error():
    expr = compose(*[gen("psi") for _ in range(8)])
    with pytest.raises(TransportError, match="budget"):
        normalize(expr, budget=3)


def test_traces_replay_to_the_same_normal_form():
    s12 = lift("sigma_h", "left")
    exprs = [
        compose(gen("psi"), gen("psi_inv")),
        compose(gen("T_h"), lift("T_h", "left")),
        compose(gen("psi"), s12, gen("psi_inv")),
    ]
    for expr in exprs:
        element, trace = normalize_traced(expr)
        assert replay_trace(expr, trace) == element


def test_termination_on_random_well_typed_terms():
    rng = random.Random(20240813)
    pool = ["psi", "psi_inv", "sigma_h_12", "sigma_h_23", "Omega_h_12", "Omega_h_23"]
    for _ in range(100):
        depth = rng.randint(1, 6)
        parts = [gen(rng.choice(pool)) for _ in range(depth)]
        if rng.random() < 0.3:
            # End in a bracket composite so the fused rules fire too.
            expr = compose(gen("T_h"), lift("T_h", rng.choice(("left", "right"))), compose(*parts))
        else:
            expr = compose(*parts)
            if rng.random() < 0.4:
                expr = morph_sum((rng.randint(-3, 3), expr), (1, gen(rng.choice(pool))))
        nf = normalize(expr)
        for _, factors in nf.terms:
            assert all(f[0] in ("c", "X") for f in factors)


def test_conjugator_scaffold_identities():
    # The image of the classical associator factors as M.N^-1, equal to
    # (M - N).N^-1 + 1 after cancellation, and the associator satisfies
    # psi - 1 = M^-1.(N - M) and psi_inv - 1 = N^-1.(M - N).
    m, n, n_inv, m_inv = gen("M"), gen("N"), gen("N_inv"), gen("M_inv")
    lhs = normalize(compose(m, n_inv))
    rhs = normalize(
        morph_sum(
            (1, compose(morph_sum((1, m), (-1, n)), n_inv)),
            (1, compose(n, n_inv)),
        )
    )
    assert lhs == rhs
    assert normalize(morph_sum((1, gen("psi")), (-1, identity_on(3)))) == normalize(
        compose(m_inv, morph_sum((1, n), (-1, m)))
    )
    assert normalize(morph_sum((1, gen("psi_inv")), (-1, identity_on(3)))) == normalize(
        compose(n_inv, morph_sum((1, m), (-1, n)))
    )


def test_discharge_alternates_classical_and_structural_passes():
    from qjacobi.transport import reduce_modulo_classical

    # Three flips compose to one flip; the leftmost-first scan peels the
    # bracket with antisymmetry at every step.
    lhs = normalize(compose(gen("T_h"), gen("sigma_h"), gen("sigma_h"), gen("sigma_h")))
    rhs = normalize(scale(-1, gen("T_h")))
    reduced, steps, used = reduce_modulo_classical(lhs - rhs)
    assert reduced.is_zero
    assert used == {"3.1"} and len(steps) == 3
    # Pure flip powers do need involutivity plus the structural passes:
    # the image collapses to a scalar block, then the conjugators cancel.
    four = normalize(compose(*[gen("sigma_h")] * 4))
    reduced, _, used = reduce_modulo_classical(four - normalize(identity_on(2)))
    assert reduced.is_zero
    assert used == {"sigma_sq"}


# -- classical discharge ---------------------------------------------------------

def test_classical_antisymmetry_rule():
    poly = ClassicalPoly.word(("T", "sig"))
    reduced, steps, used = classical_normalize(poly)
    assert reduced == ClassicalPoly.word(("T",), Scalar.rational(-1))
    assert used == {"3.1"}
    assert steps[0][0] == "3.1"


def test_classical_braid_rule_oriented():
    lhs = ClassicalPoly.word(("sig12", "sig23", "sig12"))
    reduced, _, used = classical_normalize(lhs)
    assert reduced == ClassicalPoly.word(("sig23", "sig12", "sig23"))
    assert used == {"3.3"}
    # The right-hand side is already normal.
    rhs, steps, _ = classical_normalize(ClassicalPoly.word(("sig23", "sig12", "sig23")))
    assert rhs == ClassicalPoly.word(("sig23", "sig12", "sig23")) and not steps


def test_classical_jacobi_expansion():
    poly = ClassicalPoly.word(("T", "T1"))
    reduced, _, used = classical_normalize(poly)
    expected = ClassicalPoly.word(("T", "T2")) + ClassicalPoly.word(("T", "T2", "sig12"), Scalar.rational(-1))
    assert reduced == expected
    assert used == {"3.2"}


# -- the shipped identities -------------------------------------------------------

def test_identity_4_3a():
    report = verify_identity("4.3a")
    assert report.passed
    assert report.classical_rules_used == ("3.1",)
    assert report.lhs_text == "X(T.sig).Mvv"
    assert report.rhs_text == "- X(T).Mvv"


def test_identity_4_3b():
    report = verify_identity("4.3b")
    assert report.passed
    assert report.classical_rules_used == ("sigma_sq",)


def test_identity_4_4():
    report = verify_identity("4.4")
    assert report.passed
    assert report.classical_rules_used == ("3.2",)
    assert report.lhs_text == "X(T.T1).N"


def test_identity_4_5():
    report = verify_identity("4.5")
    assert report.passed
    assert report.classical_rules_used == ("3.3",)
    assert report.lhs_text == "M^-1.X(sig12.sig23.sig12).N"
    assert report.rhs_text == "M^-1.X(sig23.sig12.sig23).N"
    assert any("bracketing" in note for note in report.notes)


def test_no_identity_consumes_foreign_axioms():
    for name in ("4.3a", "4.3b", "4.4", "4.5"):
        report = verify_identity(name)
        assert set(report.classical_rules_used) <= {"3.1", "3.2", "3.3", "sigma_sq"}


def test_identity_5_1b_degree2():
    report = verify_identity("5.1b", table=builtin_table(), degrees=[2])
    assert report.passed
    assert all(item["passed"] for item in report.details)
    monomials = {item["monomial"] for item in report.details}
    assert monomials == {"A.B", "B.A", "<assembled>"}
    # Both sides of each check collapse to image blocks with no leftover
    # conjugators.
    for item in report.details:
        assert item["lhs"] == item["rhs"]
        assert "X(" in item["lhs"]
        assert "M" not in item["lhs"] and "N" not in item["lhs"]


def test_identity_5_1a_degree2():
    report = verify_identity("5.1a", table=builtin_table(), degrees=[2])
    assert report.passed
    assert report.lhs_text == report.rhs_text


def test_identity_reports_serialize():
    import json

    for name in ("4.3a", "4.4", "4.5", "5.1b"):
        doc = verify_identity(name).to_json()
        text = json.dumps(doc, sort_keys=True)
        assert json.loads(text)["identity"] == name


def test_braiding_relation_series():
    report = verify_identity("sigma_h_def", order=4)
    assert report.passed


def test_unknown_identity():
    with pytest.raises(TransportError):
        verify_identity("9.9")


# -- soundness under evaluation ------------------------------------------------------

@pytest.fixture(scope="module")
def sl2_ops():
    return build_tensor_ops(build_algebra("sl2"))


@pytest.fixture(scope="module")
def models(sl2_ops):
    order = 4
    pair = compute_psi(builtin_table(), order)
    psi_matrix = eval_series(pair.psi, sl2_ops)
    return (
        TransportModel.trivial(sl2_ops, order),
        TransportModel.conjugated(sl2_ops, order, psi_matrix),
    )


def test_normalization_preserves_evaluation(sl2_ops, models):
    rng = random.Random(99)
    pool = ["psi", "psi_inv", "Omega_h_12", "Omega_h_23"]
    for model in models:
        for _ in range(12):
            depth = rng.randint(1, 5)
            expr = compose(*[gen(rng.choice(pool)) for _ in range(depth)])
            direct = model.evaluate_expr(expr)
            via_nf = model.evaluate_element(normalize(expr))
            assert direct == via_nf


def test_evaluation_of_braid_identity_sides(models):
    s12 = lift("sigma_h", "left")
    s23 = lift("sigma_h", "right")
    lhs = compose(gen("psi"), s12, gen("psi_inv"), s23, gen("psi"), s12)
    rhs = compose(s23, gen("psi"), s12, gen("psi_inv"), s23, gen("psi"))
    for model in models:
        assert model.evaluate_expr(lhs) == model.evaluate_expr(rhs)


def test_scaled_sums_evaluate_linearly(models):
    expr = morph_sum((2, gen("psi")), (Scalar.rational(-1, 3), gen("psi_inv")))
    for model in models:
        direct = model.evaluate_expr(expr)
        combo = model.evaluate_expr(gen("psi")).scale(2) + model.evaluate_expr(
            gen("psi_inv")
        ).scale(Scalar.rational(-1, 3))
        assert direct == combo
        assert model.evaluate_element(normalize(expr)) == direct
