"""Data model for Ito systems, Fokker-Planck equations and symmetry
candidates, plus the structural maps between them.

Sign convention: one internal quantity S := (1/2) sigma sigma^T is used
everywhere. The Fokker-Planck coefficient matrix is A = -S; first-order
transformation laws and determining systems carry +S on second-derivative
terms, which makes the tau = 0 and B = 0 reductions exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from .kernel import Context, Verdict, normalize, zero_verdict

__all__ = [
    "DegeneracyError", "InverseNotSuppliedError",
    "ItoSystem", "FokkerPlanck", "VectorField", "WSymmetry", "DiscreteMap",
    "diffusion_matrix", "fokker_planck_of", "same_fp", "ito_to_stratonovich",
    "lie_bracket", "transform_ito_first_order", "apply_discrete",
]


class DegeneracyError(ValueError):
    """sigma sigma^T vanishes identically."""


class InverseNotSuppliedError(ValueError):
    """x-elimination requested for a discrete map without an inverse."""


def _exprs(seq):
    return tuple(normalize(e) for e in seq)


def _matrix(rows):
    return tuple(tuple(normalize(e) for e in row) for row in rows)


def _allowed_symbols(ctx: Context):
    return set(ctx.spatial) | {ctx.t} | set(ctx.params.values())


@dataclass(frozen=True)
class ItoSystem:
    """dx^i = f^i(x,t) dt + sigma^i_k(x,t) dw^k on R^n with m noise channels."""
    context: Context
    f: tuple
    sigma: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "f", _exprs(self.f))
        object.__setattr__(self, "sigma", _matrix(self.sigma))
        n, m = self.context.n, self.context.m
        if len(self.f) != n:
            raise ValueError(f"expected {n} drift components, got {len(self.f)}")
        if len(self.sigma) != n or any(len(row) != m for row in self.sigma):
            raise ValueError(f"sigma must be {n}x{m}")
        allowed = _allowed_symbols(self.context)
        for e in (*self.f, *(x for row in self.sigma for x in row)):
            extra = sp.sympify(e).free_symbols - allowed
            if extra:
                names = ", ".join(sorted(s.name for s in extra))
                raise ValueError(f"coefficient depends on non-(x,t) symbols: {names}")

    @property
    def n(self):
        return self.context.n

    @property
    def m(self):
        return self.context.m

    def sigma_matrix(self):
        return sp.Matrix(self.n, self.m, lambda i, k: self.sigma[i][k])

    def half_diffusion(self):
        """S = (1/2) sigma sigma^T (no degeneracy check)."""
        s = self.sigma_matrix()
        return (s * s.T).applyfunc(normalize) / 2


@dataclass(frozen=True)
class FokkerPlanck:
    """Coefficients of u_t + A^{ij} d2_{ij} u + B^i d_i u + C u = 0."""
    context: Context
    A: tuple
    B: tuple
    C: object

    def __post_init__(self):
        object.__setattr__(self, "A", _matrix(self.A))
        object.__setattr__(self, "B", _exprs(self.B))
        object.__setattr__(self, "C", normalize(self.C))
        n = self.context.n
        if len(self.A) != n or any(len(row) != n for row in self.A):
            raise ValueError(f"A must be {n}x{n}")
        if len(self.B) != n:
            raise ValueError(f"expected {n} first-order coefficients")
        for i in range(n):
            for j in range(i + 1, n):
                if normalize(self.A[i][j] - self.A[j][i]) != 0:
                    raise ValueError("A must be symmetric")

    def a_matrix(self):
        n = self.context.n
        return sp.Matrix(n, n, lambda i, j: self.A[i][j])


@dataclass(frozen=True)
class VectorField:
    """Projectable generator tau(t) d_t + xi^i(x,t) d_i, optionally extended
    by beta(x,t) u d_u."""
    context: Context
    tau: object = 0
    xi: tuple = ()
    beta: object = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tau", normalize(self.tau))
        xi = self.xi if self.xi else (sp.Integer(0),) * self.context.n
        object.__setattr__(self, "xi", _exprs(xi))
        if self.beta is not None:
            object.__setattr__(self, "beta", normalize(self.beta))
        if len(self.xi) != self.context.n:
            raise ValueError(f"expected {self.context.n} xi components")
        bad = sp.sympify(self.tau).free_symbols & set(self.context.spatial)
        if bad:
            raise ValueError("tau must not depend on the spatial variables")
        if self.beta is not None:
            dep = sp.sympify(self.beta).free_symbols & set(self.context.dependent)
            if dep:
                raise ValueError("beta must not depend on the dependent variable")


def _check_constant_matrix(ctx, mat, what):
    nonconst = {ctx.t, *ctx.spatial}
    for row in mat:
        for e in row:
            if sp.sympify(e).free_symbols & nonconst:
                raise ValueError(f"{what} must be constant in x and t")


@dataclass(frozen=True)
class WSymmetry:
    """Generator acting also on the Wiener process: w -> w + eps B w with
    B constant antisymmetric."""
    context: Context
    tau: object = 0
    xi: tuple = ()
    Bmat: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tau", normalize(self.tau))
        xi = self.xi if self.xi else (sp.Integer(0),) * self.context.n
        object.__setattr__(self, "xi", _exprs(xi))
        m = self.context.m
        B = self.Bmat if self.Bmat else tuple((sp.Integer(0),) * m for _ in range(m))
        object.__setattr__(self, "Bmat", _matrix(B))
        if len(self.xi) != self.context.n:
            raise ValueError(f"expected {self.context.n} xi components")
        if len(self.Bmat) != m or any(len(row) != m for row in self.Bmat):
            raise ValueError(f"B must be {m}x{m}")
        _check_constant_matrix(self.context, self.Bmat, "B")
        for p in range(m):
            for q in range(m):
                if normalize(self.Bmat[p][q] + self.Bmat[q][p]) != 0:
                    raise ValueError("B must be antisymmetric")
        bad = sp.sympify(self.tau).free_symbols & set(self.context.spatial)
        if bad:
            raise ValueError("tau must not depend on the spatial variables")

    def b_matrix(self):
        m = self.context.m
        return sp.Matrix(m, m, lambda p, q: self.Bmat[p][q])


@dataclass(frozen=True)
class DiscreteMap:
    """Finite change of coordinates y^i = phi^i(x,t) with new noise
    z = R w, R constant orthogonal."""
    context: Context
    phi: tuple
    R: tuple

    def __post_init__(self):
        object.__setattr__(self, "phi", _exprs(self.phi))
        object.__setattr__(self, "R", _matrix(self.R))
        n, m = self.context.n, self.context.m
        if len(self.phi) != n:
            raise ValueError(f"expected {n} map components")
        if len(self.R) != m or any(len(row) != m for row in self.R):
            raise ValueError(f"R must be {m}x{m}")
        _check_constant_matrix(self.context, self.R, "R")
        r = self.r_matrix()
        delta = (r * r.T - sp.eye(m)).applyfunc(normalize)
        if any(zero_verdict(e) is not Verdict.ZERO for e in delta):
            raise ValueError("R must be orthogonal")

    def r_matrix(self):
        m = self.context.m
        return sp.Matrix(m, m, lambda p, q: self.R[p][q])


# ---------------------------------------------------------------------------
# structural maps

def diffusion_matrix(ito: ItoSystem):
    """A = (1/2) sigma sigma^T as an n x n tuple matrix; raises
    DegeneracyError when it vanishes identically."""
    S = ito.half_diffusion().applyfunc(normalize)
    if all(zero_verdict(e) is Verdict.ZERO for e in S):
        raise DegeneracyError("sigma sigma^T vanishes identically")
    n = ito.n
    return tuple(tuple(S[i, j] for j in range(n)) for i in range(n))


def fokker_planck_of(ito: ItoSystem) -> FokkerPlanck:
    """Coefficients of the associated Fokker-Planck equation:
    A = -(1/2) sigma sigma^T, B^i = f^i + 2 d_j A^{ij},
    C = d_i f^i + d2_{ij} A^{ij}."""
    diffusion_matrix(ito)  # degeneracy gate
    ctx = ito.context
    n, x = ito.n, ctx.spatial
    A = -ito.half_diffusion()
    B = [normalize(ito.f[i] + 2 * sum(sp.diff(A[i, j], x[j]) for j in range(n)))
         for i in range(n)]
    C = normalize(sum(sp.diff(ito.f[i], x[i]) for i in range(n))
                  + sum(sp.diff(A[i, j], x[i], x[j]) for i in range(n) for j in range(n)))
    Arows = tuple(tuple(normalize(A[i, j]) for j in range(n)) for i in range(n))
    return FokkerPlanck(context=ctx, A=Arows, B=tuple(B), C=C)


def same_fp(sigma1, sigma2) -> bool:
    """True iff the two diffusion matrices generate the same Fokker-Planck
    equation, i.e. (1/2) s1 s1^T == (1/2) s2 s2^T entry-wise."""
    s1, s2 = sp.Matrix(sigma1), sp.Matrix(sigma2)
    if s1.rows != s2.rows or s1.cols != s2.cols:
        raise ValueError("diffusion matrices must have equal shapes")
    delta = s1 * s1.T - s2 * s2.T
    return all(zero_verdict(e) is Verdict.ZERO for e in delta)


def ito_to_stratonovich(ito: ItoSystem):
    """Drift of the equivalent Stratonovich equation:
    b^i = f^i - (1/2) sigma^j_k d_j sigma^i_k (summed over j, k)."""
    x = ito.context.spatial
    n, m = ito.n, ito.m
    b = []
    for i in range(n):
        corr = sum(ito.sigma[j][k] * sp.diff(ito.sigma[i][k], x[j])
                   for j in range(n) for k in range(m))
        b.append(normalize(ito.f[i] - sp.Rational(1, 2) * corr))
    return tuple(b)


def lie_bracket(f, xi, x):
    """{f, xi}^i = f^j d_j xi^i - xi^j d_j f^i."""
    if len(f) != len(xi):
        raise ValueError("component sequences must have equal length")
    out = []
    for i in range(len(f)):
        out.append(normalize(
            sum(f[j] * sp.diff(xi[i], x[j]) for j in range(len(f)))
            - sum(xi[j] * sp.diff(f[i], x[j]) for j in range(len(f)))))
    return tuple(out)


def transform_ito_first_order(ito: ItoSystem, xi):
    """O(eps) coefficients of the near-identity map y = x + eps xi(x,t):
    delta_f^i = d_t xi^i + {f, xi}^i + S^{jk} d2_{jk} xi^i and
    delta_sigma^i_k = sigma^j_k d_j xi^i - xi^j d_j sigma^i_k."""
    ctx = ito.context
    x, t = ctx.spatial, ctx.t
    n, m = ito.n, ito.m
    S = ito.half_diffusion()
    bracket = lie_bracket(ito.f, xi, x)
    delta_f = []
    for i in range(n):
        second = sum(2 * S[j, k] * sp.diff(xi[i], x[j], x[k])
                     for j in range(n) for k in range(n)) / 2
        delta_f.append(normalize(sp.diff(xi[i], t) + bracket[i] + second))
    delta_sigma = []
    for i in range(n):
        row = []
        for k in range(m):
            row.append(normalize(
                sum(ito.sigma[j][k] * sp.diff(xi[i], x[j]) for j in range(n))
                - sum(xi[j] * sp.diff(ito.sigma[i][k], x[j]) for j in range(n))))
        delta_sigma.append(tuple(row))
    return tuple(delta_f), tuple(delta_sigma)


def apply_discrete(ito: ItoSystem, dmap: DiscreteMap, inverse=None,
                   eliminate: bool = False) -> ItoSystem:
    """Ito system obeyed by y = phi(x, t) with new noise z = R w.

    Coefficients come out written in the original x unless `inverse`
    (expressions for x in terms of the new coordinates, reusing the same
    symbols) is supplied; `eliminate=True` without an inverse raises.
    """
    if eliminate and inverse is None:
        raise InverseNotSuppliedError("x-elimination requires the inverse map")
    ctx = ito.context
    x, t = ctx.spatial, ctx.t
    n, m = ito.n, ito.m
    S = ito.half_diffusion()
    drift = []
    for i in range(n):
        e = (sum(sp.diff(dmap.phi[i], x[j]) * ito.f[j] for j in range(n))
             + sum(S[j, k] * sp.diff(dmap.phi[i], x[j], x[k])
                   for j in range(n) for k in range(n))
             + sp.diff(dmap.phi[i], t))
        drift.append(e)
    sig = ito.sigma_matrix() * dmap.r_matrix().T
    jac = sp.Matrix(n, n, lambda i, j: sp.diff(dmap.phi[i], x[j]))
    new_sigma = jac * sig
    if inverse is not None:
        sub = {x[j]: inverse[j] for j in range(n)}
        drift = [e.subs(sub, simultaneous=True) for e in drift]
        new_sigma = new_sigma.subs(sub, simultaneous=True)
    rows = tuple(tuple(normalize(new_sigma[i, k]) for k in range(m)) for i in range(n))
    return ItoSystem(context=ctx, f=tuple(normalize(e) for e in drift),
                     sigma=rows, name=ito.name and f"{ito.name}*")
