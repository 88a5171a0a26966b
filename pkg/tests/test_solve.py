import pytest
import sympy as sp

from stosym.kernel import normalize
from stosym.model import VectorField, WSymmetry
from stosym.detgen import detsys_projectable, detsys_w
from stosym.verify import check
from stosym.solve import (Ansatz, NonClosedBasisError, SymmetryBasis,
                          commutator, commutator_closure, default_time_basis,
                          membership_coordinates, solve_ansatz,
                          xi_second_derivative_constraint)


def _poly_ansatz(ito, degree, rates=(), include_B=False):
    t = ito.context.t
    return Ansatz(degree=degree, time_basis=default_time_basis(t, rates),
                  t=t, include_B=include_B)


class TestAnsatz:
    def test_closure_validated(self, systems):
        t = systems["heat.sde"].context.t
        with pytest.raises(NonClosedBasisError):
            Ansatz(degree=1, time_basis=(t,), t=t)

    def test_exponential_basis_closed(self, systems):
        t = systems["heat.sde"].context.t
        Ansatz(degree=1, time_basis=default_time_basis(t, (2,)), t=t)


class TestHeat:
    def test_dimension_three(self, systems):
        heat = systems["heat.sde"]
        basis = solve_ansatz(heat, _poly_ansatz(heat, 1))
        assert basis.dimension == 3

    def test_expected_span(self, systems):
        heat = systems["heat.sde"]
        ctx = heat.context
        x, t = ctx.spatial[0], ctx.t
        basis = solve_ansatz(heat, _poly_ansatz(heat, 1))
        targets = [
            VectorField(context=ctx, tau=1),
            VectorField(context=ctx, tau=0, xi=(sp.Integer(1),)),
            VectorField(context=ctx, tau=2 * t, xi=(x,)),
        ]
        for vf in targets:
            assert membership_coordinates(basis, vf) is not None

    def test_nonmember_excluded(self, systems):
        heat = systems["heat.sde"]
        ctx = heat.context
        basis = solve_ansatz(heat, _poly_ansatz(heat, 1))
        bad = VectorField(context=ctx, tau=0, xi=(ctx.spatial[0],))
        assert membership_coordinates(basis, bad) is None

    def test_closure(self, systems):
        heat = systems["heat.sde"]
        report = commutator_closure(solve_ansatz(heat, _poly_ansatz(heat, 1)))
        assert report.closed

    def test_soundness(self, systems):
        heat = systems["heat.sde"]
        for g in solve_ansatz(heat, _poly_ansatz(heat, 1)).generators:
            assert check(detsys_projectable(heat, g)).is_symmetry


class TestNonlinear:
    def test_only_time_translation(self, systems):
        nl = systems["norm_coupled2.sde"]
        basis = solve_ansatz(nl, _poly_ansatz(nl, 2, rates=(2,)))
        assert basis.dimension == 1
        g = basis.generators[0]
        assert normalize(g.tau - 1) == 0
        assert all(e == 0 for e in g.xi)

    def test_w_search_recovers_rotation(self, systems):
        nl = systems["norm_coupled2.sde"]
        ctx = nl.context
        x1, x2 = ctx.spatial
        basis = solve_ansatz(nl, _poly_ansatz(nl, 2, rates=(2,), include_B=True),
                             which="w")
        assert basis.dimension == 2
        rotation = WSymmetry(context=ctx, tau=0, xi=(x2, -x1),
                             Bmat=((0, 1), (-1, 0)))
        assert check(detsys_w(nl, rotation)).is_symmetry


class TestLangevin:
    def test_w_dimension(self, systems):
        lan = systems["langevin2.sde"]
        basis = solve_ansatz(lan, _poly_ansatz(lan, 1, rates=(1, 2),
                                               include_B=True), which="w")
        assert basis.dimension == 5

    def test_projectable_subset_of_w(self, systems):
        lan = systems["langevin2.sde"]
        proj = solve_ansatz(lan, _poly_ansatz(lan, 1, rates=(1, 2)))
        w = solve_ansatz(lan, _poly_ansatz(lan, 1, rates=(1, 2),
                                           include_B=True), which="w")
        assert proj.dimension == 4
        assert w.dimension == proj.dimension + 1


class TestStructure:
    def test_degree_monotonicity(self, systems):
        heat = systems["heat.sde"]
        d0 = solve_ansatz(heat, _poly_ansatz(heat, 0)).dimension
        d1 = solve_ansatz(heat, _poly_ansatz(heat, 1)).dimension
        assert d0 <= d1

    def test_hessian_constraint_caps_degree(self, systems):
        fact = xi_second_derivative_constraint(systems["heat.sde"])
        assert fact.applies
        assert fact.degree_cap == 1

    def test_hessian_constraint_skips_x_dependent_sigma(self):
        from stosym.kernel import Context
        from stosym.model import ItoSystem
        ctx = Context(spatial=("x",), noises=("w",))
        x = ctx.spatial[0]
        ito = ItoSystem(context=ctx, f=(sp.Integer(0),), sigma=((x,),))
        assert not xi_second_derivative_constraint(ito).applies


class TestCommutator:
    def test_known_bracket(self, systems):
        ctx = systems["heat.sde"].context
        x, t = ctx.spatial[0], ctx.t
        dt = VectorField(context=ctx, tau=1)
        scale = VectorField(context=ctx, tau=2 * t, xi=(x,))
        br = commutator(dt, scale)
        assert normalize(br.tau - 2) == 0
        assert all(e == 0 for e in br.xi)

    def test_antisymmetry(self, systems):
        ctx = systems["heat.sde"].context
        x, t = ctx.spatial[0], ctx.t
        a = VectorField(context=ctx, tau=t**2, xi=(x * t,))
        b = VectorField(context=ctx, tau=2 * t, xi=(x,))
        fwd = commutator(a, b)
        bwd = commutator(b, a)
        assert normalize(fwd.tau + bwd.tau) == 0
        assert all(normalize(u + v) == 0 for u, v in zip(fwd.xi, bwd.xi))
