import numpy as np
import pytest

from dgdiss.dgcore import DgSpace
from dgdiss.dissipation import jump_form_value, lift_jumps
from dgdiss.mesh import build_mesh
from dgdiss.trace_constants import (
    build_A_matrix,
    empirical_min_penalty,
    min_penalty,
    penalty_witness,
    rayleigh_sharpness_probe,
    sharp_trace_constant,
    verify_normal_gradient_trace,
)


def test_A_matrix_small_orders():
    np.testing.assert_allclose(build_A_matrix(0), [[2.0]])
    np.testing.assert_allclose(build_A_matrix(1), [[2.0, 0.0], [0.0, 6.0]])
    assert build_A_matrix(2)[0, 2] == pytest.approx(2 * np.sqrt(5.0), rel=1e-15)


@pytest.mark.parametrize("k", range(9))
def test_largest_eigenvalue_formula(k):
    tc = sharp_trace_constant(k)
    formula = (k + 1) * (k + 2)
    assert abs(tc.value - formula) / formula <= 1e-9


def test_probe_constant_polynomial():
    # q == 1: endpoints give 2, integral 1
    assert rayleigh_sharpness_probe(0, 1) == pytest.approx(2.0, rel=1e-14)


def test_probe_linear_polynomial_hand_value():
    # q = 2x-1: q(0)^2+q(1)^2 = 2, int q^2 = 1/3 -> ratio 6 from the eigenvector
    probe = rayleigh_sharpness_probe(1, 1, include_eigenvector=True)
    assert probe == pytest.approx(6.0, rel=1e-12)


@pytest.mark.parametrize("k", [0, 1, 2, 4, 6])
def test_probe_sharp_and_bounded(k):
    formula = (k + 1) * (k + 2)
    probe = rayleigh_sharpness_probe(k, 300, seed=k)
    assert probe <= formula * (1 + 1e-9)
    assert probe >= formula * (1 - 1e-6)


def test_probe_without_eigenvector_stays_below():
    probe = rayleigh_sharpness_probe(2, 500, seed=9, include_eigenvector=False)
    assert probe <= 12.0 * (1 + 1e-9)


def test_normal_gradient_trace_1d_linear():
    # v = x in Q_1 on [0,1]: boundary derivative energy 2, volume energy 1
    assert verify_normal_gradient_trace(1, 1, 1, seed=0) <= 2.0 + 1e-12
    worst = verify_normal_gradient_trace(1, 1, 200, seed=1)
    assert worst == pytest.approx(2.0, rel=1e-6)  # eigen-direction is hit by sampling


@pytest.mark.parametrize("dim,q,bound", [(1, 2, 6.0), (2, 2, 6.0), (2, 3, 12.0)])
def test_normal_gradient_trace_bound(dim, q, bound):
    worst = verify_normal_gradient_trace(dim, q, 300, seed=2)
    assert 0.0 < worst <= bound * (1 + 1e-12)


def test_normal_gradient_trace_scales_with_h():
    w1 = verify_normal_gradient_trace(1, 2, 50, h=1.0, seed=3)
    w2 = verify_normal_gradient_trace(1, 2, 50, h=0.25, seed=3)
    assert w1 == pytest.approx(w2, rel=1e-12)  # ratio is scale-invariant


def test_min_penalty_formulas():
    assert min_penalty("q-dg", 1).lambda_star == pytest.approx(1.0)
    assert min_penalty("rt-hdg", 4).lambda_star == pytest.approx(30.0)
    assert min_penalty("q-dg", 4).lambda_star == pytest.approx(10.0)
    for k in range(1, 9):
        assert min_penalty("q-dg", k).lambda_star == k * (k + 1) / 2
        assert min_penalty("rt-hdg", k).lambda_star == (k + 1) * (k + 2)


def test_min_penalty_rejects():
    with pytest.raises(ValueError):
        min_penalty("ldg", 2)
    with pytest.raises(ValueError):
        min_penalty("q-dg", 0)
    with pytest.raises(ValueError):
        min_penalty("rt-hdg", -1)


def test_empirical_min_penalty_single_cell():
    mesh = build_mesh(1, [1], [1.0])
    space = DgSpace(mesh, 1)
    assert empirical_min_penalty(space) == pytest.approx(1.0, rel=1e-12)


def test_empirical_min_penalty_brute_force_cross_check():
    mesh = build_mesh(1, [2], [1.0])
    space = DgSpace(mesh, 2)
    lam_min, witness = penalty_witness(space)
    rng = np.random.default_rng(11)
    sampled = 0.0
    for _ in range(400):
        from dgdiss.dgcore import DgField

        u = DgField(space, rng.standard_normal((2, 1, 3)))
        j = jump_form_value(u)
        if j < 1e-12:
            continue
        sampled = max(sampled, lift_jumps(u).lifting.norm_sq() / j)
    assert sampled <= lam_min * (1 + 1e-9)
    # the witness attains the maximum
    j = jump_form_value(witness)
    assert lift_jumps(witness).lifting.norm_sq() / j == pytest.approx(lam_min, rel=1e-11)


@pytest.mark.parametrize("dim,k,cells", [(1, 1, 8), (1, 2, 4), (1, 3, 2), (2, 1, 2), (2, 2, 2)])
def test_empirical_below_formula(dim, k, cells):
    mesh = build_mesh(dim, [cells] * dim, [1.0] * dim)
    space = DgSpace(mesh, k)
    emp = empirical_min_penalty(space)
    assert emp <= min_penalty("q-dg", k).lambda_star * (1 + 1e-9)


def test_witness_turns_negative_below_threshold():
    mesh = build_mesh(1, [8], [1.0])
    space = DgSpace(mesh, 1)
    lam_min, witness = penalty_witness(space)
    lam = 0.9 * lam_min
    a_num = lam * jump_form_value(witness) - lift_jumps(witness).lifting.norm_sq()
    assert a_num < 0.0
