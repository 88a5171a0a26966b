"""Symmetry search by bounded ansatz: xi polynomial in x with coefficients
over a finite time-function basis closed under d/dt, tau over the same
basis. Coefficient matching turns the determining systems into an exact
homogeneous linear problem solved by nullspace computation over the
rationals (parameters kept symbolic where linear)."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import sympy as sp

from .kernel import Context, normalize
from .model import ItoSystem, VectorField, WSymmetry
from .detgen import detsys_projectable, detsys_w
from .verify import check

__all__ = [
    "Ansatz", "SymmetryBasis", "StructuralFact", "NonClosedBasisError",
    "NonlinearEntanglementError", "default_time_basis", "solve_ansatz",
    "xi_second_derivative_constraint", "commutator_closure",
]


class NonClosedBasisError(ValueError):
    """The time basis is not closed under d/dt."""


class NonlinearEntanglementError(ValueError):
    """Coefficient matching produced equations nonlinear in the unknowns."""


def default_time_basis(t, rates=()):
    """{1, t, t^2} plus e^{ct}, e^{-ct}, t e^{ct} for each declared rate c."""
    basis = [sp.Integer(1), t, t**2]
    for c in rates:
        basis += [sp.exp(c * t), sp.exp(-c * t), t * sp.exp(c * t)]
    return tuple(basis)


# --- linear decomposition of t-functions over {t^a * exp(...)} monomials ---

def _replace_exps(e, reps):
    """Structurally replace every exp node by a fresh generator keyed by its
    (expanded) argument; distinct arguments are linearly independent."""
    def repl(arg):
        key = sp.expand(arg)
        if key not in reps:
            reps[key] = sp.Dummy("E")
        return reps[key]
    return e.replace(sp.exp, repl)


def _t_coords(exprs, t):
    """Coordinate vectors of expressions over the monomials t^a * E^b, where
    each distinct exponential atom gets a fresh generator. Raises
    NonClosedBasisError for anything outside that span."""
    exprs = [sp.expand(sp.sympify(e)) for e in exprs]
    reps = {}
    terms = []
    keys = set()
    prepared = [_replace_exps(e, reps) for e in exprs]
    gens = [t] + list(reps.values())
    for e, pe in zip(exprs, prepared):
        pe = sp.expand(pe)
        if pe.atoms(sp.Function):
            raise NonClosedBasisError(f"unsupported time dependence: {e}")
        try:
            poly = sp.Poly(pe, *gens)
        except sp.PolynomialError as exc:
            raise NonClosedBasisError(f"unsupported time dependence: {e}") from exc
        d = dict(poly.terms())
        terms.append(d)
        keys |= set(d)
    keys = sorted(keys)
    return [[d.get(k, sp.Integer(0)) for k in keys] for d in terms]


def _span_solve(target, basis, t):
    """Coefficients expressing `target` in the span of `basis`, or None."""
    vecs = _t_coords(list(basis) + [target], t)
    A = sp.Matrix(vecs[:-1]).T
    b = sp.Matrix(vecs[-1])
    cs = sp.symbols(f"c0:{len(basis)}")
    sol = sp.linsolve((A, b), *cs)
    if not sol:
        return None
    vec = next(iter(sol))
    # free parameters in underdetermined solutions are pinned to zero
    vec = [v.subs({c: 0 for c in cs}) for v in vec]
    return tuple(sp.nsimplify(v) for v in vec)


@dataclass(frozen=True)
class Ansatz:
    """Search space: xi of max total degree `degree` in x, with tau and all
    polynomial coefficients drawn from `time_basis` (validated to be closed
    under d/dt at construction)."""
    degree: int
    time_basis: tuple
    t: sp.Symbol
    include_B: bool = False

    def __post_init__(self):
        object.__setattr__(self, "time_basis",
                           tuple(sp.sympify(b) for b in self.time_basis))
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        for b in self.time_basis:
            if _span_solve(sp.diff(b, self.t), self.time_basis, self.t) is None:
                raise NonClosedBasisError(
                    f"d/dt of basis element {b} is outside the basis span")


@dataclass(frozen=True)
class SymmetryBasis:
    generators: tuple

    @property
    def dimension(self):
        return len(self.generators)


@dataclass(frozen=True)
class StructuralFact:
    """Consequence of sigma^j_k d2_{jm} xi^i = 0 for x-independent sigma."""
    applies: bool
    degree_cap: int | None = None
    free_directions: tuple = ()


def xi_second_derivative_constraint(ito: ItoSystem) -> StructuralFact:
    """For x-independent sigma, the Hessian columns of every xi^i must lie
    in null(sigma^T); an invertible sigma therefore caps the ansatz degree
    at 1."""
    x = set(ito.context.spatial)
    if any(sp.sympify(e).free_symbols & x for row in ito.sigma for e in row):
        return StructuralFact(applies=False)
    null = ito.sigma_matrix().T.nullspace()
    if not null:
        return StructuralFact(applies=True, degree_cap=1)
    free = tuple(tuple(normalize(v) for v in vec) for vec in null)
    return StructuralFact(applies=True, degree_cap=None, free_directions=free)


def _monomials(x, degree):
    out = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(len(x)), total):
            m = sp.Integer(1)
            for j in combo:
                m *= x[j]
            out.append(m)
    return out


def _coefficient_equations(residuals, unknowns, x, t):
    """Expand each residual over the monomials in (x, t, exponential atoms);
    every monomial coefficient must vanish, giving linear equations in the
    unknowns."""
    eqs = []
    for e in residuals:
        e = sp.expand(sp.sympify(e))
        reps = {}
        pe = sp.expand(_replace_exps(e, reps))
        gens = list(x) + [t] + list(reps.values())
        try:
            poly = sp.Poly(pe, *gens)
        except sp.PolynomialError as exc:
            raise NonlinearEntanglementError(
                f"residual is not polynomial over the ansatz monomials: {e}") from exc
        eqs.extend(poly.coeffs())
    try:
        A, rhs = sp.linear_eq_to_matrix(eqs, list(unknowns))
    except sp.polys.polyerrors.PolynomialError as exc:
        raise NonlinearEntanglementError(str(exc)) from exc
    except sp.solvers.solveset.NonlinearError as exc:
        raise NonlinearEntanglementError(str(exc)) from exc
    if any(v != 0 for v in rhs):
        raise NonlinearEntanglementError("coefficient system is not homogeneous")
    return A


def solve_ansatz(ito: ItoSystem, ansatz: Ansatz, which: str = "projectable") -> SymmetryBasis:
    """Basis of the symmetry generators inside the ansatz, deterministic
    (reduced row-echelon normalization with a fixed monomial ordering).
    Every returned generator is re-verified through verify.check."""
    if which not in ("projectable", "w"):
        raise ValueError("which must be 'projectable' or 'w'")
    ctx = ito.context
    x, t = ctx.spatial, ctx.t
    n, m = ito.n, ito.m
    degree = ansatz.degree
    cap = xi_second_derivative_constraint(ito)
    if cap.degree_cap is not None:
        degree = min(degree, cap.degree_cap)
    monoms = _monomials(x, degree)
    basis_t = ansatz.time_basis

    unknowns = []
    xi = []
    for i in range(n):
        comp = sp.Integer(0)
        for jm, mu in enumerate(monoms):
            for jb, bt in enumerate(basis_t):
                c = sp.Symbol(f"_c{i}_{jm}_{jb}")
                unknowns.append(c)
                comp += c * bt * mu
        xi.append(comp)
    tau = sp.Integer(0)
    tau_syms = []
    for jb, bt in enumerate(basis_t):
        d = sp.Symbol(f"_d{jb}")
        tau_syms.append(d)
        unknowns.append(d)
        tau += d * bt

    use_b = which == "w" and ansatz.include_B and m > 1
    b_syms = {}
    if use_b:
        for p in range(m):
            for q in range(p + 1, m):
                b_syms[(p, q)] = sp.Symbol(f"_b{p}_{q}")
                unknowns.append(b_syms[(p, q)])

    if which == "w":
        B = [[sp.Integer(0)] * m for _ in range(m)]
        for (p, q), s in b_syms.items():
            B[p][q] = s
            B[q][p] = -s
        cand = WSymmetry(ctx, tau=tau, xi=tuple(xi), Bmat=tuple(map(tuple, B)))
        ds = detsys_w(ito, cand)
    else:
        cand = VectorField(ctx, tau=tau, xi=tuple(xi))
        ds = detsys_projectable(ito, cand)

    A = _coefficient_equations(ds.residuals(), unknowns, x, t)
    null = A.nullspace()
    if not null:
        return SymmetryBasis(generators=())
    stacked = sp.Matrix([list(v.T) for v in null])
    reduced, _ = stacked.rref()
    generators = []
    for r in range(reduced.rows):
        row = reduced.row(r)
        if all(v == 0 for v in row):
            continue
        sub = dict(zip(unknowns, row))
        g_xi = tuple(normalize(e.subs(sub)) for e in xi)
        g_tau = normalize(tau.subs(sub))
        if use_b and any(sub[s] != 0 for s in b_syms.values()):
            g_B = tuple(tuple(normalize(sp.sympify(B[p][q]).subs(sub))
                              for q in range(m)) for p in range(m))
            gen = WSymmetry(ctx, tau=g_tau, xi=g_xi, Bmat=g_B)
            report = check(detsys_w(ito, gen))
        elif which == "w":
            gen = WSymmetry(ctx, tau=g_tau, xi=g_xi)
            report = check(detsys_w(ito, gen))
        else:
            gen = VectorField(ctx, tau=g_tau, xi=g_xi)
            report = check(detsys_projectable(ito, gen))
        if not report.is_symmetry:
            raise NonlinearEntanglementError(
                "solver produced a candidate that fails re-verification; "
                "parameters are likely entangled nonlinearly")
        generators.append(gen)
    return SymmetryBasis(generators=tuple(generators))


def membership_coordinates(basis: SymmetryBasis, vf: VectorField):
    """Coordinates of vf in the span of the basis generators, or None.
    Used to test completeness within an ansatz."""
    if not basis.generators:
        return None
    ctx = vf.context
    x, t = ctx.spatial, ctx.t
    cs = sp.symbols(f"_m0:{basis.dimension}")
    residuals = [vf.tau - sum(c * g.tau for c, g in zip(cs, basis.generators))]
    for i in range(len(vf.xi)):
        residuals.append(vf.xi[i] - sum(c * g.xi[i] for c, g in zip(cs, basis.generators)))
    eqs = []
    for e in residuals:
        e = sp.expand(sp.sympify(e))
        reps = {}
        pe = sp.expand(_replace_exps(e, reps))
        poly = sp.Poly(pe, *(list(x) + [t] + list(reps.values())))
        eqs.extend(poly.coeffs())
    A, rhs = sp.linear_eq_to_matrix(eqs, list(cs))
    sol = sp.linsolve((A, rhs), *cs)
    if not sol:
        return None
    vec = next(iter(sol))
    if any(v.free_symbols & set(cs) for v in vec):
        vec = [v.subs({c: 0 for c in cs}) for v in vec]
    return tuple(vec)


@dataclass(frozen=True)
class ClosureReport:
    closed: bool
    table: dict = field(default_factory=dict)  # (i, j) -> coords or None


def commutator(v1: VectorField, v2: VectorField) -> VectorField:
    """[v1, v2] for projectable fields: tau = tau1 tau2' - tau2 tau1',
    xi^i = v1(xi2^i) - v2(xi1^i)."""
    ctx = v1.context
    x, t = ctx.spatial, ctx.t
    tau = v1.tau * sp.diff(v2.tau, t) - v2.tau * sp.diff(v1.tau, t)
    xi = []
    for i in range(len(v1.xi)):
        e = (v1.tau * sp.diff(v2.xi[i], t)
             + sum(v1.xi[j] * sp.diff(v2.xi[i], x[j]) for j in range(len(x)))
             - v2.tau * sp.diff(v1.xi[i], t)
             - sum(v2.xi[j] * sp.diff(v1.xi[i], x[j]) for j in range(len(x))))
        xi.append(normalize(e))
    return VectorField(ctx, tau=normalize(tau), xi=tuple(xi))


def commutator_closure(basis: SymmetryBasis) -> ClosureReport:
    """Pairwise commutators expressed in the basis; reports structure
    constants or flags the algebra as not closed within the ansatz."""
    gens = basis.generators
    if any(not isinstance(g, VectorField) for g in gens):
        raise ValueError("commutator closure is defined for VectorField bases")
    table = {}
    closed = True
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            coords = membership_coordinates(basis, commutator(gens[i], gens[j]))
            table[(i, j)] = coords
            if coords is None:
                closed = False
    return ClosureReport(closed=closed, table=table)
