"""Verdicts on symmetry candidates, the Ito <-> Fokker-Planck
correspondence, and the normalization-preservation test."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import sympy as sp

from .kernel import Verdict, normalize, substitute, zero_verdict
from .model import ItoSystem, VectorField, fokker_planck_of
from .detgen import DeterminingSystem, detsys_fp, gamma

__all__ = [
    "OverallVerdict", "FpClassification", "VerificationReport",
    "PreconditionError", "check", "extend_to_fp",
    "check_normalization_preserving", "project_fp_symmetry",
    "check_superposition",
]


class OverallVerdict(enum.Enum):
    SYMMETRY = "symmetry"
    NOT_SYMMETRY = "not_symmetry"
    INCONCLUSIVE = "inconclusive"


class FpClassification(enum.Enum):
    ITO_SYMMETRY = "ito_symmetry"
    STATISTICAL_EQUIVALENCE = "statistical_equivalence"
    NEITHER = "neither"


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class VerificationReport:
    system_name: str
    per_equation: tuple  # of (label, Verdict, residual)
    overall: OverallVerdict
    classification: FpClassification | None = None

    @property
    def is_symmetry(self):
        return self.overall is OverallVerdict.SYMMETRY

    def to_dict(self):
        from .kernel import to_dsl
        d = {
            "schema": 1,
            "system": self.system_name,
            "equations": [
                {"label": label, "verdict": v.value, "residual": to_dsl(r)}
                for label, v, r in self.per_equation
            ],
            "overall": self.overall.value,
        }
        if self.classification is not None:
            d["classification"] = self.classification.value
        return d


def check(ds: DeterminingSystem, bindings=None) -> VerificationReport:
    """Substitute candidate bindings for the free unknowns of the system and
    classify every residual. Overall verdict is SYMMETRY iff every residual
    is provably zero; any INCONCLUSIVE residual makes the overall verdict
    INCONCLUSIVE, never a silent pass."""
    bindings = dict(bindings or {})
    if ds.free_unknowns:
        missing = [f.__name__ for f in ds.free_unknowns
                   if f not in bindings and f.__name__ not in
                   {getattr(k, "__name__", k) for k in bindings}]
        if missing:
            raise ValueError(f"unbound unknowns: {', '.join(missing)}")
    per_equation = []
    verdicts = set()
    for label, e in ds.equations:
        if bindings:
            e = substitute(e, _resolve_bindings(e, bindings))
        v = zero_verdict(e)
        verdicts.add(v)
        per_equation.append((label, v, normalize(e)))
    if verdicts <= {Verdict.ZERO}:
        overall = OverallVerdict.SYMMETRY
    elif Verdict.NONZERO in verdicts:
        overall = OverallVerdict.NOT_SYMMETRY
    else:
        overall = OverallVerdict.INCONCLUSIVE
    return VerificationReport(system_name=ds.name,
                              per_equation=tuple(per_equation), overall=overall)


def _resolve_bindings(e, bindings):
    """Map name- or function-keyed bindings onto the opaque functions
    actually present in the expression."""
    by_name = {}
    for k, v in bindings.items():
        by_name[getattr(k, "__name__", k)] = v
    out = {}
    for f in sp.sympify(e).atoms(sp.core.function.AppliedUndef):
        name = f.func.__name__
        if name in by_name:
            val = by_name[name]
            if not isinstance(val, sp.Lambda):
                val = sp.Lambda(tuple(f.args), sp.sympify(val))
            out[f.func] = val
    return out


def extend_to_fp(vf: VectorField) -> VectorField:
    """Unique normalization-preserving extension beta = -div(xi)."""
    if vf.beta is not None:
        raise ValueError("candidate already carries a beta component")
    x = vf.context.spatial
    beta = normalize(-sum(sp.diff(vf.xi[i], x[i]) for i in range(len(x))))
    return VectorField(context=vf.context, tau=vf.tau, xi=vf.xi, beta=beta,
                       name=vf.name)


def check_normalization_preserving(vf: VectorField) -> bool:
    """True iff beta = -div(xi)."""
    if vf.beta is None:
        raise ValueError("candidate has no beta component")
    x = vf.context.spatial
    div = sum(sp.diff(vf.xi[i], x[i]) for i in range(len(x)))
    return zero_verdict(vf.beta + div) is Verdict.ZERO


def project_fp_symmetry(ito: ItoSystem, vf: VectorField) -> FpClassification:
    """Classify a normalization-preserving Fokker-Planck symmetry:
    ITO_SYMMETRY when Gamma == 0, STATISTICAL_EQUIVALENCE when Gamma != 0
    but sigma Gamma^T + Gamma sigma^T == 0, NEITHER otherwise."""
    if vf.beta is None or not check_normalization_preserving(vf):
        raise PreconditionError("candidate must carry beta = -div(xi)")
    fp_report = check(detsys_fp(fokker_planck_of(ito), vf))
    if not fp_report.is_symmetry:
        raise PreconditionError("candidate is not a Fokker-Planck symmetry")
    gam = sp.Matrix(gamma(ito, vf))
    if all(zero_verdict(e) is Verdict.ZERO for e in gam):
        return FpClassification.ITO_SYMMETRY
    sig = ito.sigma_matrix()
    mixed = sig * gam.T + gam * sig.T
    if all(zero_verdict(e) is Verdict.ZERO for e in mixed):
        return FpClassification.STATISTICAL_EQUIVALENCE
    return FpClassification.NEITHER


def check_superposition(fp, alpha) -> bool:
    """True iff alpha(x,t) solves the Fokker-Planck equation, i.e. generates
    a trivial superposition symmetry alpha(x,t) d_u (excluded from
    classification)."""
    if isinstance(fp, ItoSystem):
        fp = fokker_planck_of(fp)
    ctx = fp.context
    x, t = ctx.spatial, ctx.t
    n = ctx.n
    A = fp.a_matrix()
    residual = (sp.diff(alpha, t)
                + sum(A[i, k] * sp.diff(alpha, x[i], x[k])
                      for i in range(n) for k in range(n))
                + sum(fp.B[i] * sp.diff(alpha, x[i]) for i in range(n))
                + fp.C * alpha)
    return zero_verdict(residual) is Verdict.ZERO
