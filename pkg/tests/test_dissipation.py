import numpy as np
import pytest

from dgdiss.dgcore import DgField, DgSpace, broken_gradient, project_initial
from dgdiss.dissipation import (
    bassi_rebay_value,
    decompose,
    eps_total,
    jump_form_value,
    lift_jumps,
)
from dgdiss.mesh import build_mesh
from dgdiss.polybasis import eval_legendre
from dgdiss.sip import SipParams, assemble_sip, form_terms_quadrature
from dgdiss.trace_constants import min_penalty, penalty_witness

CONFIGS = [(1, 1, 1), (1, 2, 4), (1, 4, 2), (2, 1, 2), (2, 3, 2), (2, 2, 4)]


def make_space(dim, k, n, ncomp=1):
    return DgSpace(build_mesh(dim, [n] * dim, [1.0] * dim), k, num_components=ncomp)


def random_field(space, seed):
    rng = np.random.default_rng(seed)
    shape = (space.mesh.n_cells, space.num_components, space.n_modes)
    return DgField(space, rng.standard_normal(shape))


def example3():
    space = make_space(1, 1, 1)
    u = project_initial(space, lambda x: x[:, 0])
    op = assemble_sip(space, SipParams(nu=1.0, lam=1.5))
    return space, u, op


# -- lifting ----------------------------------------------------------------

def test_example3_lifting_by_hand():
    _, u, _ = example3()
    flux = lift_jumps(u)
    np.testing.assert_allclose(flux.lifting.comps[0], [[[1.0]]], atol=1e-14)
    assert flux.lifting.norm_sq() == pytest.approx(1.0, abs=1e-13)
    np.testing.assert_allclose(flux.sigma.comps[0], [[[0.0]]], atol=1e-13)


def test_jump_free_field_has_zero_lifting():
    space = make_space(1, 2, 4)
    u = project_initial(space, lambda x: np.full(x.shape[0], 1.5))
    flux = lift_jumps(u)
    assert flux.lifting.norm_sq() == pytest.approx(0.0, abs=1e-26)
    g = broken_gradient(u)
    assert flux.sigma.norm_sq() == pytest.approx(g.norm_sq(), abs=1e-26)


@pytest.mark.parametrize("dim,k,n", [(1, 2, 2), (2, 2, 2), (2, 3, 1)])
def test_lifting_moment_condition(dim, k, n):
    """int_K R : tau = (1/2) sum_F oint [u] (tau n_F) for every basis tau."""
    from dgdiss.dgcore import eval_tangential, facet_rule_points, trace_tensor

    space = make_space(dim, k, n)
    mesh = space.mesh
    u = random_field(space, 5)
    flux = lift_jumps(u)
    rule = facet_rule_points(k, 2)
    minus_tables = {a: mesh.neighbor_cells(a) for a in range(dim)}
    prev_tables = {a: mesh.previous_cells(a) for a in range(dim)}

    from dgdiss.dgcore import facet_quadrature

    for axis in range(dim):
        _, wts = facet_quadrature(space, axis, 2)
        area = mesh.facet_area(axis)
        # jump values at quadrature points for the facet above each cell
        top = eval_tangential(space, trace_tensor(u, axis, 1), axis, rule.nodes)
        bot = eval_tangential(space, trace_tensor(u, axis, 0), axis, rule.nodes)
        jump_above = top - bot[minus_tables[axis]]
        shape = space.grad_shape(axis)
        n_grad = int(np.prod(shape))
        r_flat = flux.lifting.component_flat(axis)
        for cell in range(mesh.n_cells):
            for mode_flat in range(n_grad):
                mode = np.unravel_index(mode_flat, shape)
                # tau = single tensor Legendre mode in component `axis`
                lhs = (
                    r_flat[cell, 0, mode_flat]
                    * space.grad_mass[axis][mode_flat]
                )
                tang_modes = [m for i, m in enumerate(mode) if i != axis]
                tvals = np.ones(wts.shape)
                if tang_modes:
                    grids = np.meshgrid(*([rule.nodes] * (dim - 1)), indexing="ij")
                    for g, m in zip(grids, tang_modes):
                        tvals = tvals * eval_legendre(k, g.ravel())[m]
                e_top = 1.0
                e_bot = (-1.0) ** mode[axis]
                j_top = jump_above[cell, 0]
                j_bot = jump_above[prev_tables[axis]][cell, 0]
                rhs = 0.5 * area * (
                    e_top * float(np.sum(j_top * tvals * wts))
                    + e_bot * float(np.sum(j_bot * tvals * wts))
                )
                assert lhs == pytest.approx(rhs, abs=1e-12 * max(1.0, abs(lhs)))


@pytest.mark.parametrize("dim,k,n", CONFIGS)
def test_gradient_lifting_inner_product_identity(dim, k, n):
    space = make_space(dim, k, n)
    for seed in range(3):
        u = random_field(space, seed + 40)
        lhs = broken_gradient(u).inner(lift_jumps(u).lifting)
        rhs = form_terms_quadrature(space, u)["consistency"]
        assert abs(lhs - rhs) <= 1e-11 * max(abs(lhs), abs(rhs), 1e-30)


# -- decomposition ----------------------------------------------------------

def test_example3_decomposition_numbers():
    _, u, op = example3()
    b = decompose(u, op)
    assert b.a_total == pytest.approx(0.5, abs=1e-13)
    assert b.a_phy_broken == pytest.approx(1.0, abs=1e-13)
    assert b.a_num_broken == pytest.approx(-0.5, abs=1e-13)
    assert b.a_phy_sigma == pytest.approx(0.0, abs=1e-13)
    assert b.a_num_sigma == pytest.approx(0.5, abs=1e-13)
    assert b.penalty_part == pytest.approx(1.5, abs=1e-13)
    assert b.lifting_norm_sq == pytest.approx(1.0, abs=1e-13)
    # the broken split dips negative while the sigma split stays non-negative
    assert b.a_num_broken < 0 <= b.a_num_sigma


def test_example3_bassi_rebay_zero():
    _, u, _ = example3()
    assert bassi_rebay_value(u) == pytest.approx(0.0, abs=1e-12)


def test_piecewise_constant_dissipates_through_sigma():
    space = make_space(1, 2, 4)
    coeffs = np.zeros((4, 1, 3))
    coeffs[:, 0, 0] = [1.0, -1.0, 2.0, 0.5]
    u = DgField(space, coeffs)
    op = assemble_sip(space, SipParams(nu=1.0, lam=3.0))
    b = decompose(u, op)
    assert b.a_phy_broken == pytest.approx(0.0, abs=1e-26)
    assert b.a_phy_sigma > 0.1


@pytest.mark.parametrize("dim,k,n", CONFIGS)
def test_decomposition_identities_random(dim, k, n):
    space = make_space(dim, k, n)
    lam = min_penalty("q-dg", k).lambda_star
    op = assemble_sip(space, SipParams(nu=1.0, lam=lam))
    for seed in range(8):
        u = random_field(space, seed)
        b = decompose(u, op)
        scale = max(abs(b.a_total), b.scale)
        assert abs(b.a_phy_sigma + b.a_num_sigma - b.a_total) <= 1e-10 * scale
        assert abs(b.a_phy_broken + b.a_num_broken - b.a_total) <= 1e-10 * scale
        assert b.a_phy_sigma >= 0.0
        assert b.a_num_sigma >= -1e-12 * scale  # lam = lambda*
        br = bassi_rebay_value(u)
        assert abs(br - b.a_phy_sigma) <= 1e-10 * max(abs(b.a_phy_sigma), scale)


def test_vector_field_decomposition():
    space = make_space(2, 2, 2, ncomp=2)
    op = assemble_sip(space, SipParams(nu=1.0, lam=3.0))
    u = random_field(space, 77)
    b = decompose(u, op)
    scale = max(abs(b.a_total), b.scale)
    assert abs(b.a_phy_sigma + b.a_num_sigma - b.a_total) <= 1e-10 * scale
    assert abs(bassi_rebay_value(u) - b.a_phy_sigma) <= 1e-10 * scale


def test_decompose_rejects_nip():
    space = make_space(1, 1, 2)
    from dgdiss.sip import assemble_nip

    op = assemble_nip(space, SipParams(nu=1.0, lam=1.5))
    with pytest.raises(ValueError, match="symmetric"):
        decompose(random_field(space, 1), op)


# -- non-negativity threshold -------------------------------------------------

@pytest.mark.parametrize("dim,k,n", [(1, 1, 8), (1, 3, 4), (2, 2, 2)])
def test_nonnegative_at_threshold(dim, k, n):
    space = make_space(dim, k, n)
    lam = min_penalty("q-dg", k).lambda_star
    for seed in range(50):
        u = random_field(space, seed)
        j = jump_form_value(u)
        lift_sq = lift_jumps(u).lifting.norm_sq()
        assert lam * j - lift_sq >= -1e-12 * (lam * j + lift_sq)


def test_negative_witness_below_empirical_minimum():
    space = make_space(1, 2, 4)
    lam_min, witness = penalty_witness(space)
    lam = lam_min - 0.05
    a_num = lam * jump_form_value(witness) - lift_jumps(witness).lifting.norm_sq()
    assert a_num < 0.0


@pytest.mark.parametrize("dim,k,n", CONFIGS)
def test_lifting_boundedness(dim, k, n):
    """||R||^2 <= C^2/(4 h) * sum_K oint_dK |[v]|^2 with the gradient-space constant."""
    space = make_space(dim, k, n)
    lambda_star = min_penalty("q-dg", k).lambda_star  # = C^2/2 with C^2 = k(k+1)
    for seed in range(10):
        u = random_field(space, seed + 60)
        bound = lambda_star * jump_form_value(u)
        assert lift_jumps(u).lifting.norm_sq() <= bound * (1 + 1e-12)


def test_a_num_sigma_vanishes_under_refinement():
    values = []
    for n in (4, 8, 16):
        space = make_space(1, 2, n)
        u = project_initial(space, lambda x: np.sin(2 * np.pi * x[:, 0]))
        op = assemble_sip(space, SipParams(nu=1.0, lam=3.0))
        values.append(decompose(u, op).a_num_sigma)
    assert values[0] > values[1] > values[2] > 0


def test_eps_total_definition():
    assert eps_total(0.0, 0.0, 1.0) == 0.0
    assert eps_total(-1.0, 2.0, 0.5) == pytest.approx(0.0)
    assert eps_total(-2.0, 1.0, 1.0) == pytest.approx(1.0)
