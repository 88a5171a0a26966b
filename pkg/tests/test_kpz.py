import pytest
import sympy as sp

from stosym.kernel import normalize
from stosym.model import DiscreteMap, VectorField
from stosym.detgen import detsys_discrete, detsys_projectable
from stosym.verify import check
from stosym.kpz import (KpzChain, inversion_matrix, kpz_check_discrete,
                        kpz_detsys_continuous, kpz_ito, kpz_tensors,
                        site_shift_matrix)


@pytest.fixture(scope="module")
def chain5():
    return KpzChain(5)


class TestConstruction:
    def test_minimum_size(self):
        with pytest.raises(ValueError):
            KpzChain(2)

    def test_tensors_rebuild_drift(self, chain5):
        n = chain5.n_sites
        ito = kpz_ito(chain5)
        ten = kpz_tensors(chain5)
        x = sp.Matrix(chain5.context.spatial)
        for i in range(n):
            rebuilt = ((ten.M * x)[i]
                       + sum(ten.G[i][j][k] * x[j] * x[k]
                             for j in range(n) for k in range(n)))
            assert normalize(rebuilt - ito.f[i]) == 0

    def test_quadratic_rows_sum_to_zero(self):
        # each stencil difference has zero row sum, for every chain size
        for n in range(3, 13):
            ten = kpz_tensors(KpzChain(n))
            for i in range(n):
                for k in range(n):
                    assert sp.expand(sum(ten.G[i][j][k]
                                         for j in range(n))) == 0


class TestContinuous:
    def test_time_shift(self, chain5):
        n = chain5.n_sites
        ds = kpz_detsys_continuous(chain5, 1, sp.zeros(n, n), [0] * n)
        assert check(ds).is_symmetry

    def test_uniform_height_shift(self, chain5):
        n = chain5.n_sites
        ds = kpz_detsys_continuous(chain5, 0, sp.zeros(n, n), [1] * n)
        assert check(ds).is_symmetry

    def test_nonuniform_shift_fails(self, chain5):
        n = chain5.n_sites
        ds = kpz_detsys_continuous(chain5, 0, sp.zeros(n, n),
                                   [1] + [0] * (n - 1))
        assert not check(ds).is_symmetry

    def test_mixer_must_be_antisymmetric(self, chain5):
        n = chain5.n_sites
        with pytest.raises(ValueError):
            kpz_detsys_continuous(chain5, 0, sp.zeros(n, n), [0] * n,
                                  Bmat=sp.eye(n))


class TestDiscrete:
    def test_site_shift(self, chain5):
        assert kpz_check_discrete(chain5, site_shift_matrix(5)).is_symmetry

    def test_inversion(self, chain5):
        for m in (1, 2, 3):
            assert kpz_check_discrete(chain5, inversion_matrix(5, m)).is_symmetry

    def test_height_inversion_requires_linearity(self, chain5):
        assert not kpz_check_discrete(chain5, -sp.eye(5)).is_symmetry
        linear = KpzChain(5, beta=0)
        assert kpz_check_discrete(linear, -sp.eye(5)).is_symmetry

    def test_non_orthogonal_rejected(self, chain5):
        rep = kpz_check_discrete(chain5, 2 * sp.eye(5))
        assert not rep.orthogonal
        assert not rep.is_symmetry


class TestCrossCheck:
    """The chain-specific conditions agree with the general determining
    equations applied to the assembled Ito system."""

    def test_discrete_agrees(self, chain5):
        ito = kpz_ito(chain5)
        ctx = ito.context
        x = sp.Matrix(ctx.spatial)
        for F, expected in [(site_shift_matrix(5), True),
                            (inversion_matrix(5, 2), True),
                            (-sp.eye(5), False)]:
            phi = tuple((F * x)[i] for i in range(5))
            dmap = DiscreteMap(context=ctx, phi=phi,
                               R=tuple(tuple(F[i, j] for j in range(5))
                                       for i in range(5)))
            general = check(detsys_discrete(ito, dmap)).is_symmetry
            special = kpz_check_discrete(chain5, F).is_symmetry
            assert general == special == expected

    def test_continuous_agrees(self, chain5):
        ito = kpz_ito(chain5)
        ctx = ito.context
        for tau, alpha, expected in [(1, [0] * 5, True),
                                     (0, [1] * 5, True),
                                     (0, [1, 0, 0, 0, 0], False)]:
            vf = VectorField(context=ctx, tau=sp.Integer(tau),
                             xi=tuple(sp.Integer(a) for a in alpha))
            general = check(detsys_projectable(ito, vf)).is_symmetry
            ds = kpz_detsys_continuous(chain5, tau, sp.zeros(5, 5), alpha)
            assert general == check(ds).is_symmetry == expected
