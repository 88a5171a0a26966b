import json
import random
from pathlib import Path

import pytest
import sympy as sp

from stosym.dsl import load_candidate, load_system

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "stosym" / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def manifest():
    return json.loads((FIXTURES / "manifest.json").read_text())


@pytest.fixture(scope="session")
def systems(manifest):
    return {name: load_system(FIXTURES / name) for name in manifest["systems"]}


def candidate_for(entry, systems):
    return load_candidate(FIXTURES / entry["candidate"], systems[entry["system"]])


def random_expression(rng, ctx, depth=3):
    """Random expression over the declared symbols, for property tests."""
    atoms = list(ctx.spatial) + [ctx.t] + list(ctx.params.values())
    if depth == 0 or rng.random() < 0.3:
        choice = rng.random()
        if choice < 0.5:
            return rng.choice(atoms)
        return sp.Rational(rng.randint(-5, 5), rng.randint(1, 4))
    op = rng.choice(["add", "mul", "pow", "fn"])
    if op == "add":
        return (random_expression(rng, ctx, depth - 1)
                + random_expression(rng, ctx, depth - 1))
    if op == "mul":
        return (random_expression(rng, ctx, depth - 1)
                * random_expression(rng, ctx, depth - 1))
    if op == "pow":
        return random_expression(rng, ctx, depth - 1) ** rng.randint(2, 3)
    fn = rng.choice([sp.sin, sp.cos, sp.exp])
    return fn(rng.choice(atoms) * sp.Rational(rng.randint(1, 3), rng.randint(1, 2)))


def seeded_rng(seed):
    return random.Random(seed)
