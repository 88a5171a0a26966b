"""Command-line front end.

Exit codes: 0 the candidate is a symmetry (or the command succeeded),
1 it is not, 2 a file failed to parse, 3 the verdict is inconclusive.
"""
from __future__ import annotations

import json
import sys

import click
import sympy as sp

from .kernel import Context, ParseError, parse_expr, to_dsl
from .model import DiscreteMap, ItoSystem, VectorField, WSymmetry, \
    fokker_planck_of
from .detgen import detsys_discrete, detsys_fp, detsys_projectable, detsys_w
from .verify import OverallVerdict, check, check_normalization_preserving, \
    extend_to_fp, project_fp_symmetry
from .solve import Ansatz, default_time_basis, solve_ansatz
from .dsl import candidate_to_dict, load_candidate, load_system
from . import kpz as kpzmod
from .mcsim import euler_maruyama, export_binary, validate_symmetry_mc

EXIT_SYMMETRY = 0
EXIT_NOT_SYMMETRY = 1
EXIT_PARSE_ERROR = 2
EXIT_INCONCLUSIVE = 3


def _emit(data, as_json):
    if as_json:
        click.echo(json.dumps(data, indent=2, sort_keys=True))
    return data


def _load(path, loader, *args):
    try:
        return loader(path, *args)
    except ParseError as e:
        click.echo(f"{path}: {e}", err=True)
        sys.exit(EXIT_PARSE_ERROR)
    except (OSError, ValueError) as e:
        click.echo(f"{path}: {e}", err=True)
        sys.exit(EXIT_PARSE_ERROR)


def _detsys_for(ito, candidate):
    if isinstance(candidate, DiscreteMap):
        return detsys_discrete(ito, candidate)
    if isinstance(candidate, WSymmetry):
        return detsys_w(ito, candidate)
    if candidate.beta is not None:
        return detsys_fp(ito, candidate)
    return detsys_projectable(ito, candidate)


def _generic_candidate(ito):
    """Candidate with opaque unknowns tau(t) and xi_<v>(x, t)."""
    ctx = ito.context
    names = ["tau"] + [f"xi_{v}" for v in ctx.spatial_names]
    octx = Context(spatial=ctx.spatial_names, params=ctx.param_assumptions,
                   noises=ctx.noise_names, dependent=ctx.dependent_names,
                   opaque=names, time=ctx.time_name)
    tau = octx.opaque["tau"](octx.t)
    xi = tuple(octx.opaque[f"xi_{v}"](*octx.spatial, octx.t)
               for v in ctx.spatial_names)
    return VectorField(context=octx, tau=tau, xi=xi)


@click.group()
def main():
    """Symmetry analysis of Ito stochastic differential equations."""


@main.command("derive-fp")
@click.argument("system_file", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def derive_fp(system_file, as_json):
    """Print the Fokker-Planck coefficients of a system."""
    ito = _load(system_file, load_system)
    fp = fokker_planck_of(ito)
    data = {
        "schema": 1,
        "system": ito.name,
        "A": [[to_dsl(e) for e in row] for row in fp.A],
        "B": [to_dsl(e) for e in fp.B],
        "C": to_dsl(fp.C),
    }
    if as_json:
        _emit(data, True)
    else:
        click.echo(f"A = {data['A']}")
        click.echo(f"B = {data['B']}")
        click.echo(f"C = {data['C']}")


@main.command("detsys")
@click.argument("system_file", type=click.Path(exists=True))
@click.argument("candidate_file", type=click.Path(exists=True), required=False)
@click.option("--json", "as_json", is_flag=True)
def detsys(system_file, candidate_file, as_json):
    """Print determining equations; with no candidate the unknowns stay
    symbolic."""
    ito = _load(system_file, load_system)
    if candidate_file:
        candidate = _load(candidate_file, load_candidate, ito)
    else:
        candidate = _generic_candidate(ito)
    ds = _detsys_for(ito, candidate)
    data = {"schema": 1, "system": ds.name,
            "equations": [{"label": label, "residual": to_dsl(e)}
                          for label, e in ds.equations]}
    if as_json:
        _emit(data, True)
    else:
        for entry in data["equations"]:
            click.echo(f"{entry['label']}: {entry['residual']} = 0")


@main.command("check")
@click.argument("system_file", type=click.Path(exists=True))
@click.argument("candidate_file", type=click.Path(exists=True))
@click.option("--fp", "classify_fp", is_flag=True,
              help="Extend with beta = -div(xi) and classify the "
                   "Fokker-Planck projection.")
@click.option("--json", "as_json", is_flag=True)
def check_cmd(system_file, candidate_file, classify_fp, as_json):
    """Verify a candidate against its determining equations."""
    ito = _load(system_file, load_system)
    candidate = _load(candidate_file, load_candidate, ito)
    data = {"schema": 1}
    if classify_fp:
        if not isinstance(candidate, VectorField):
            click.echo("--fp applies to vector-field candidates only", err=True)
            sys.exit(EXIT_PARSE_ERROR)
        vf = candidate if candidate.beta is not None else extend_to_fp(candidate)
        report = check(detsys_fp(ito, vf))
        data.update(report.to_dict())
        preserving = check_normalization_preserving(vf)
        data["normalization_preserving"] = preserving
        if report.is_symmetry and preserving:
            data["classification"] = project_fp_symmetry(ito, vf).value
    else:
        report = check(_detsys_for(ito, candidate))
        data.update(report.to_dict())
    if as_json:
        _emit(data, True)
    else:
        click.echo(f"{data['overall']}"
                   + (f" ({data['classification']})" if "classification" in data else ""))
    if report.overall is OverallVerdict.SYMMETRY:
        sys.exit(EXIT_SYMMETRY)
    if report.overall is OverallVerdict.NOT_SYMMETRY:
        sys.exit(EXIT_NOT_SYMMETRY)
    sys.exit(EXIT_INCONCLUSIVE)


@main.command("solve")
@click.argument("system_file", type=click.Path(exists=True))
@click.option("--degree", default=1, show_default=True)
@click.option("--time-basis", "basis_tokens", multiple=True,
              help="'poly2' or 'exp:<rate>' (repeatable); default poly2.")
@click.option("--with-b", "with_b", is_flag=True,
              help="Also search constant antisymmetric noise mixers.")
@click.option("--json", "as_json", is_flag=True)
def solve_cmd(system_file, degree, basis_tokens, with_b, as_json):
    """Solve the determining equations inside a finite ansatz."""
    ito = _load(system_file, load_system)
    t = ito.context.t
    rates = []
    for token in basis_tokens:
        if token == "poly2":
            continue
        if token.startswith("exp:"):
            try:
                rates.append(parse_expr(token[4:], ito.context))
            except ParseError as e:
                click.echo(f"--time-basis {token}: {e}", err=True)
                sys.exit(EXIT_PARSE_ERROR)
        else:
            click.echo(f"unknown time basis token '{token}'", err=True)
            sys.exit(EXIT_PARSE_ERROR)
    ansatz = Ansatz(degree=degree, time_basis=default_time_basis(t, rates),
                    t=t, include_B=with_b)
    basis = solve_ansatz(ito, ansatz, which="w" if with_b else "projectable")
    data = {
        "schema": 1,
        "system": ito.name,
        "dimension": basis.dimension,
        "generators": [candidate_to_dict(g, base_context=ito.context)
                       for g in basis.generators],
    }
    if as_json:
        _emit(data, True)
    else:
        click.echo(f"dimension {basis.dimension}")
        for i, g in enumerate(basis.generators, start=1):
            parts = [f"tau = {to_dsl(g.tau)}"]
            parts += [f"xi {v} = {to_dsl(g.xi[j])}"
                      for j, v in enumerate(ito.context.spatial_names)]
            if isinstance(g, WSymmetry):
                parts.append(f"B = {[[to_dsl(e) for e in row] for row in g.Bmat]}")
            click.echo(f"generator {i}: " + ", ".join(parts))


def _parse_params(pairs, ctx):
    out = {}
    for pair in pairs:
        name, _, value = pair.partition("=")
        if not value:
            raise click.BadParameter(f"expected name=value, got '{pair}'")
        out[name.strip()] = float(value)
    return out


def _parse_x0(text, n):
    vals = [float(v) for v in text.split(",")]
    if len(vals) != n:
        raise click.BadParameter(f"x0 needs {n} components")
    return vals


@main.command("simulate")
@click.argument("system_file", type=click.Path(exists=True))
@click.option("--x0", required=True, help="Comma-separated initial point.")
@click.option("--t0", default=0.0, show_default=True)
@click.option("--t1", default=1.0, show_default=True)
@click.option("--dt", default=1e-3, show_default=True)
@click.option("--n-paths", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--param", "param_pairs", multiple=True,
              help="Numeric value for a declared parameter, name=value.")
@click.option("--out", "out_file", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True)
def simulate(system_file, x0, t0, t1, dt, n_paths, seed, param_pairs,
             out_file, as_json):
    """Simulate an ensemble and write it to a binary file."""
    ito = _load(system_file, load_system)
    params = _parse_params(param_pairs, ito.context)
    ens = euler_maruyama(ito, _parse_x0(x0, ito.n), t0, t1, dt, n_paths,
                         seed, params=params)
    export_binary(ens, out_file)
    data = {"schema": 1, "system": ito.name, "out": out_file,
            "n_paths": ens.n_paths, "n_stored": len(ens.times),
            "seed": seed, "dt": dt}
    if as_json:
        _emit(data, True)
    else:
        click.echo(f"wrote {out_file} ({ens.n_paths} paths, "
                   f"{len(ens.times)} stored times)")


@main.command("mc-check")
@click.argument("system_file", type=click.Path(exists=True))
@click.argument("candidate_file", type=click.Path(exists=True))
@click.option("--x0", required=True, help="Comma-separated initial point.")
@click.option("--t1", default=1.0, show_default=True)
@click.option("--dt", default=1e-3, show_default=True)
@click.option("--n-paths", default=10000, show_default=True)
@click.option("--seed", default=12345, show_default=True)
@click.option("--epsilon", default=1e-2, show_default=True)
@click.option("--significance", default=0.01, show_default=True)
@click.option("--param", "param_pairs", multiple=True)
@click.option("--json", "as_json", is_flag=True)
def mc_check(system_file, candidate_file, x0, t1, dt, n_paths, seed,
             epsilon, significance, param_pairs, as_json):
    """Cross-validate a candidate numerically by ensemble comparison."""
    ito = _load(system_file, load_system)
    candidate = _load(candidate_file, load_candidate, ito)
    params = _parse_params(param_pairs, ito.context)
    report = validate_symmetry_mc(ito, candidate, x0=_parse_x0(x0, ito.n),
                                  t1=t1, dt=dt, n_paths=n_paths, seed=seed,
                                  epsilon=epsilon, significance=significance,
                                  params=params)
    if as_json:
        _emit(report.to_dict(), True)
    else:
        click.echo("pass" if report.verdict else "fail")
    sys.exit(EXIT_SYMMETRY if report.verdict else EXIT_NOT_SYMMETRY)


@main.command("kpz")
@click.option("--sites", required=True, type=int)
@click.option("--alpha", default=None, help="Numeric coupling; symbolic if omitted.")
@click.option("--beta", default=None, help="Numeric nonlinearity; symbolic if omitted.")
@click.option("--check", "which", required=True,
              type=str, help="time-shift | h-shift | site-shift | "
                             "inversion:<m> | h-inversion")
@click.option("--json", "as_json", is_flag=True)
def kpz_cmd(sites, alpha, beta, which, as_json):
    """Check a named symmetry of the periodic growth chain."""
    chain = kpzmod.KpzChain(sites, alpha=alpha, beta=beta)
    n = sites
    if which == "time-shift":
        report = check(kpzmod.kpz_detsys_continuous(
            chain, 1, sp.zeros(n, n), [0] * n))
        ok = report.overall is OverallVerdict.SYMMETRY
        data = report.to_dict()
    elif which == "h-shift":
        report = check(kpzmod.kpz_detsys_continuous(
            chain, 0, sp.zeros(n, n), [1] * n))
        ok = report.overall is OverallVerdict.SYMMETRY
        data = report.to_dict()
    elif which == "site-shift":
        rep = kpzmod.kpz_check_discrete(chain, kpzmod.site_shift_matrix(n))
        ok, data = rep.is_symmetry, rep.to_dict()
    elif which.startswith("inversion:"):
        m = int(which.split(":", 1)[1])
        rep = kpzmod.kpz_check_discrete(chain, kpzmod.inversion_matrix(n, m))
        ok, data = rep.is_symmetry, rep.to_dict()
    elif which == "h-inversion":
        rep = kpzmod.kpz_check_discrete(chain, -sp.eye(n))
        ok, data = rep.is_symmetry, rep.to_dict()
    else:
        click.echo(f"unknown check '{which}'", err=True)
        sys.exit(EXIT_PARSE_ERROR)
    data["check"] = which
    if as_json:
        _emit(data, True)
    else:
        click.echo("symmetry" if ok else "not_symmetry")
    sys.exit(EXIT_SYMMETRY if ok else EXIT_NOT_SYMMETRY)


if __name__ == "__main__":
    main()
