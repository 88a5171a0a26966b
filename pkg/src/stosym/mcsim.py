"""Numerical cross-validation: Euler-Maruyama simulation and two-sample
comparison of ensembles (Kolmogorov-Smirnov plus first two moments).

Noise comes from numpy's Philox counter-based generator keyed by the seed;
the increment stream has a fixed (step, path, channel) layout, so results
are reproducible regardless of how the path loop might later be scheduled.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import sympy as sp
from scipy import stats

from .model import DiscreteMap, ItoSystem, VectorField, apply_discrete, \
    transform_ito_first_order

__all__ = [
    "BlowupError", "Ensemble", "ComparisonReport",
    "euler_maruyama", "compare_ensembles", "validate_symmetry_mc",
    "export_binary", "load_binary",
]

_MAGIC_FIELDS = "<qqqdq"  # n, n_paths, n_stored_steps, dt, seed


class BlowupError(RuntimeError):
    def __init__(self, path, step, t):
        super().__init__(f"non-finite value in path {path} at step {step} (t={t:.6g})")
        self.path = path
        self.step = step


@dataclass(frozen=True)
class Ensemble:
    times: np.ndarray   # (n_stored,)
    paths: np.ndarray   # (n_paths, n_stored, n)
    seed: int
    dt: float
    n_paths: int

    def __post_init__(self):
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("sample times must be strictly increasing")
        if not np.all(np.isfinite(self.paths)):
            raise ValueError("ensemble contains non-finite values")

    @property
    def n(self):
        return self.paths.shape[2]


def _lambdify_field(exprs, ctx, params):
    """Vectorized evaluators (X[n_paths, n], t) -> array for a list of
    coefficient expressions."""
    x, t = ctx.spatial, ctx.t
    subs = {}
    for name, val in dict(params or {}).items():
        subs[ctx.symbol(name) if isinstance(name, str) else name] = sp.sympify(val)
    funcs = []
    for e in exprs:
        e = sp.sympify(e).subs(subs)
        free = e.free_symbols - set(x) - {t}
        if free:
            names = ", ".join(sorted(s.name for s in free))
            raise ValueError(f"coefficient not numeric-evaluable, unbound: {names}")
        fn = sp.lambdify((*x, t), e, modules="numpy")
        funcs.append(fn)

    def evaluate(X, tval):
        cols = [np.broadcast_to(np.asarray(fn(*(X[:, j] for j in range(len(x))), tval),
                                           dtype=float), (X.shape[0],))
                for fn in funcs]
        return np.stack(cols, axis=1)
    return evaluate


def euler_maruyama(ito: ItoSystem, x0, t0, t1, dt, n_paths, seed,
                   params=None, store_every=None) -> Ensemble:
    """Euler-Maruyama with independent Gaussian increments of variance dt
    per noise channel; deterministic given the seed."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    n, m = ito.n, ito.m
    n_steps = int(round((t1 - t0) / dt))
    if n_steps < 1:
        raise ValueError("time horizon shorter than one step")
    if store_every is None:
        store_every = max(1, n_steps // 10)
    drift = _lambdify_field(ito.f, ito.context, params)
    sigma = _lambdify_field([e for row in ito.sigma for e in row], ito.context, params)

    rng = np.random.Generator(np.random.Philox(key=seed))
    X = np.tile(np.asarray(x0, dtype=float).reshape(1, n), (n_paths, 1))
    times = [t0]
    stored = [X.copy()]
    sqrt_dt = np.sqrt(dt)
    t = t0
    for step in range(1, n_steps + 1):
        dW = rng.standard_normal((n_paths, m)) * sqrt_dt
        sig = sigma(X, t).reshape(n_paths, n, m)
        X = X + drift(X, t) * dt + np.einsum("pik,pk->pi", sig, dW)
        t = t0 + step * dt
        bad = ~np.isfinite(X)
        if bad.any():
            p, _ = np.argwhere(bad)[0]
            raise BlowupError(int(p), step, t)
        if step % store_every == 0 or step == n_steps:
            times.append(t)
            stored.append(X.copy())
    return Ensemble(times=np.asarray(times),
                    paths=np.stack(stored, axis=1),
                    seed=seed, dt=dt, n_paths=n_paths)


@dataclass(frozen=True)
class ComparisonReport:
    entries: tuple      # per (time, coordinate) dicts
    significance: float
    n_tests: int
    ks_pass: bool
    moment_pass: bool
    verdict: bool

    def to_dict(self):
        return {
            "schema": 1,
            "significance": self.significance,
            "n_tests": self.n_tests,
            "ks_pass": self.ks_pass,
            "moment_pass": self.moment_pass,
            "verdict": "pass" if self.verdict else "fail",
            "entries": list(self.entries),
        }


def _slice_stats(a, b, se_factor, extra_tol):
    na, nb = len(a), len(b)
    mean_a, mean_b = a.mean(), b.mean()
    var_a = a.var(ddof=1)
    var_b = b.var(ddof=1)
    se_mean = np.sqrt(var_a / na + var_b / nb)
    se_var = np.sqrt(2 * var_a**2 / max(na - 1, 1) + 2 * var_b**2 / max(nb - 1, 1))
    dmean = abs(mean_a - mean_b)
    dvar = abs(var_a - var_b)
    tol_mean = max(se_factor * se_mean, extra_tol * max(1.0, abs(mean_a)))
    tol_var = max(se_factor * se_var, extra_tol * max(1.0, abs(var_a)))
    ok = dmean <= tol_mean and dvar <= tol_var
    return ok, {"mean_diff": float(dmean), "var_diff": float(dvar),
                "mean_tol": float(tol_mean), "var_tol": float(tol_var)}


def compare_ensembles(a: Ensemble, b: Ensemble, significance=0.01,
                      use_ks=True, se_factor=None, extra_moment_tol=0.0) -> ComparisonReport:
    """Per-time, per-coordinate two-sample KS tests (Bonferroni-corrected)
    plus first-two-moment comparisons between two independently generated
    ensembles.

    When se_factor is None the moment tolerance is the two-sided normal
    quantile at the Bonferroni-corrected significance, so its family-wise
    false-alarm rate matches the KS test's."""
    if a.paths.shape[2] != b.paths.shape[2] or len(a.times) != len(b.times):
        raise ValueError("ensembles have mismatched shapes")
    if not np.allclose(a.times - a.times[0], b.times - b.times[0]):
        raise ValueError("ensembles have mismatched sample times")
    n = a.n
    # slice 0 is the deterministic initial condition
    time_idx = range(1, len(a.times))
    n_tests = max(1, len(list(time_idx)) * n)
    threshold = significance / n_tests
    if se_factor is None:
        se_factor = float(stats.norm.isf(threshold / 2))
    entries = []
    ks_pass = True
    moment_pass = True
    for ti in range(1, len(a.times)):
        for ci in range(n):
            xa = a.paths[:, ti, ci]
            xb = b.paths[:, ti, ci]
            entry = {"time": float(a.times[ti]), "coordinate": ci}
            if use_ks:
                if np.ptp(xa) == 0 and np.ptp(xb) == 0:
                    p = 1.0 if xa[0] == xb[0] else 0.0
                else:
                    p = float(stats.ks_2samp(xa, xb).pvalue)
                entry["ks_pvalue"] = p
                if p < threshold:
                    ks_pass = False
            ok, moments = _slice_stats(xa, xb, se_factor, extra_moment_tol)
            entry.update(moments)
            if not ok:
                moment_pass = False
            entries.append(entry)
    verdict = moment_pass and (ks_pass or not use_ks)
    return ComparisonReport(entries=tuple(entries), significance=significance,
                            n_tests=n_tests, ks_pass=ks_pass,
                            moment_pass=moment_pass, verdict=verdict)


def _push_paths(ens: Ensemble, exprs, ctx, params, epsilon=None):
    fn = _lambdify_field(exprs, ctx, params)
    out = np.empty_like(ens.paths)
    for ti, t in enumerate(ens.times):
        X = ens.paths[:, ti, :]
        val = fn(X, float(t))
        out[:, ti, :] = X + epsilon * val if epsilon is not None else val
    return Ensemble(times=ens.times, paths=out, seed=ens.seed,
                    dt=ens.dt, n_paths=ens.n_paths)


def _invert_map(dmap: DiscreteMap):
    ctx = dmap.context
    x = ctx.spatial
    ys = sp.symbols(f"_y0:{len(x)}")
    sols = sp.solve([sp.Eq(ys[i], dmap.phi[i]) for i in range(len(x))],
                    list(x), dict=True)
    if len(sols) != 1:
        return None
    sol = sols[0]
    return tuple(sol[x[i]].subs(dict(zip(ys, x)), simultaneous=True)
                 for i in range(len(x)))


def validate_symmetry_mc(ito: ItoSystem, candidate, x0, t0=0.0, t1=1.0,
                         dt=1e-3, n_paths=10_000, seed=12345, epsilon=1e-2,
                         significance=0.01, params=None, inverse=None) -> ComparisonReport:
    """Push an ensemble of the original system through the candidate map and
    compare with an independent simulation of the transformed equation.

    VectorField candidates (tau = 0) are applied as the finite map
    y = x + eps xi(x, t); the transformed equation uses the first-order
    coefficients, so KS is skipped and moment tolerances widen by
    O(eps^2). DiscreteMap candidates are exact and use KS.
    """
    ctx = ito.context
    if isinstance(candidate, VectorField):
        if candidate.tau != 0:
            raise ValueError("pathwise validation supports spatial maps only (tau = 0)")
        base = euler_maruyama(ito, x0, t0, t1, dt, n_paths, seed, params=params)
        pushed = _push_paths(base, candidate.xi, ctx, params, epsilon=epsilon)
        eps = sp.Rational(str(epsilon))
        delta_f, delta_sigma = transform_ito_first_order(ito, candidate.xi)
        transformed = ItoSystem(
            context=ctx,
            f=tuple(ito.f[i] + eps * delta_f[i] for i in range(ito.n)),
            sigma=tuple(tuple(ito.sigma[i][k] + eps * delta_sigma[i][k]
                              for k in range(ito.m)) for i in range(ito.n)))
        x0p = pushed.paths[0, 0, :]
        other = euler_maruyama(transformed, x0p, t0, t1, dt, n_paths,
                               seed + 1, params=params)
        return compare_ensembles(pushed, other, significance=significance,
                                 use_ks=False,
                                 extra_moment_tol=5 * float(epsilon) ** 2)
    if isinstance(candidate, DiscreteMap):
        base = euler_maruyama(ito, x0, t0, t1, dt, n_paths, seed, params=params)
        pushed = _push_paths(base, candidate.phi, ctx, params)
        inv = inverse if inverse is not None else _invert_map(candidate)
        if inv is None:
            raise ValueError("map could not be inverted automatically, "
                             "pass inverse= explicitly")
        transformed = apply_discrete(ito, candidate, inverse=inv, eliminate=True)
        x0p = pushed.paths[0, 0, :]
        other = euler_maruyama(transformed, x0p, t0, t1, dt, n_paths,
                               seed + 1, params=params)
        return compare_ensembles(pushed, other, significance=significance, use_ks=True)
    raise TypeError("candidate must be a VectorField or a DiscreteMap")


def export_binary(ens: Ensemble, path):
    """Flat layout: little-endian header (n, n_paths, n_stored_steps as
    int64, dt as float64, seed as int64) followed by the row-major double
    payload of the path array."""
    header = struct.pack(_MAGIC_FIELDS, ens.n, ens.n_paths, len(ens.times),
                         float(ens.dt), int(ens.seed))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(ens.paths, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(ens.times, dtype="<f8").tobytes())


def load_binary(path) -> Ensemble:
    with open(path, "rb") as fh:
        raw = fh.read(struct.calcsize(_MAGIC_FIELDS))
        n, n_paths, n_stored, dt, seed = struct.unpack(_MAGIC_FIELDS, raw)
        payload = np.frombuffer(fh.read(8 * n_paths * n_stored * n), dtype="<f8")
        times = np.frombuffer(fh.read(8 * n_stored), dtype="<f8")
    paths = payload.reshape(n_paths, n_stored, n).copy()
    return Ensemble(times=times.copy(), paths=paths, seed=seed, dt=dt, n_paths=n_paths)
