"""Shared fixtures: hand-solved reference markets and the randomized corpus.

The corpus construction guarantees absence of arbitrage by drawing a strictly
positive unit-mean density first and forcing every generator to price to
zero under it; that keeps both kernel solvers feasible and (exactly, not just
generically) keeps the constant payoff out of the generator span.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from mmv_lab import JumpDiffusionParams, MarketModel, Payoff, ScenarioSpace
from mmv_lab.jumps import jump_threshold

CORPUS_SEED = 20260822

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def record_acceptance():
    return ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_market(rng: np.random.Generator) -> MarketModel:
    n_atoms = int(rng.integers(3, 11))
    n_gens = int(rng.integers(1, 4))
    p = rng.dirichlet(np.full(n_atoms, 4.0))
    p = np.clip(p, 0.03, None)
    p = p / p.sum()
    space = ScenarioSpace(p)
    alpha = float(rng.choice([0.25, 0.4, 1.0]))
    q = rng.dirichlet(np.full(n_atoms, alpha)) + 0.01
    q = q / (p @ q)
    gens = []
    for _ in range(n_gens):
        v = rng.normal(size=n_atoms)
        if rng.random() < 0.8:
            k = int(rng.integers(0, n_atoms))
            v[k] += rng.exponential(6.0) * float(rng.choice([1.0, -1.0]))
        v = v - float(p @ (q * v))  # priced to zero by a positive density
        gens.append(Payoff(space, v))
    x0 = float(rng.normal())
    return MarketModel(space, tuple(gens), x0)


@pytest.fixture(scope="session")
def corpus() -> list[MarketModel]:
    rng = np.random.default_rng(CORPUS_SEED)
    return [random_market(rng) for _ in range(50)]


@pytest.fixture()
def signed_market() -> MarketModel:
    """Three atoms, one generator, signed variance-optimal density.

    Hand-solved: density (64, 24, -6)/39 with second moment 18/13; the
    non-negative variant is (5/3, 5/9, 0) with second moment 25/18.
    """
    space = ScenarioSpace(np.array([0.45, 0.45, 0.1]))
    gen = Payoff(space, np.array([-1.0, 3.0, 6.0]))
    return MarketModel(space, (gen,), 0.0)


@pytest.fixture()
def wide_spread_market() -> MarketModel:
    """Three atoms with one large outcome; the signed density stays positive.

    Hand-solved: density (19/14, 47/42, 1/21), second moment 26/21. The
    large atom inflates the generator's variance quadratically, so a single
    symmetric-bottom generator can never push the density negative here.
    """
    space = ScenarioSpace(np.array([0.4, 0.4, 0.2]))
    gen = Payoff(space, np.array([-1.0, 1.0, 10.0]))
    return MarketModel(space, (gen,), 0.0)


@pytest.fixture()
def two_atom_space() -> ScenarioSpace:
    return ScenarioSpace(np.array([0.5, 0.5]))


JUMP_BASE = dict(r=0.0, mu=0.08, sigma=0.2, intensity=1.0, horizon=1.0)


def _upper_atom_99() -> float:
    # equal-weight law {-0.1, u}: u sits at 0.99 of the threshold of the
    # market it itself creates iff 0.005 u^2 + 0.03 u - 0.04455 = 0
    return (-0.03 + math.sqrt(0.001791)) / 0.01


@pytest.fixture(scope="session")
def jump_part1() -> JumpDiffusionParams:
    """Both atoms below the sign threshold: kernel never goes negative."""
    return JumpDiffusionParams(
        jump_sizes=np.array([-0.1, _upper_atom_99()]),
        jump_weights=np.array([0.5, 0.5]),
        **JUMP_BASE,
    )


@pytest.fixture(scope="session")
def jump_part2(jump_part1) -> JumpDiffusionParams:
    """Upper atom pushed to 1.5x the part-1 threshold: sign flips appear."""
    upper = 1.5 * jump_threshold(jump_part1)
    return JumpDiffusionParams(
        jump_sizes=np.array([-0.1, upper]),
        jump_weights=np.array([0.5, 0.5]),
        **JUMP_BASE,
    )


@pytest.fixture(scope="session")
def jump_literal(jump_part1) -> JumpDiffusionParams:
    """Same oversized atom at weight 0.1: it stays below its own threshold.

    An atom at weight w contributes w u^2 to the threshold's numerator and
    w u to its denominator, and those terms cancel from the comparison
    u > threshold; what is left has sign mu - r + lam w1 q1 = -0.01 < 0 at
    these weights, so no positive atom can cross and negatives never occur.
    """
    upper = 1.5 * jump_threshold(jump_part1)
    return JumpDiffusionParams(
        jump_sizes=np.array([-0.1, upper]),
        jump_weights=np.array([0.9, 0.1]),
        **JUMP_BASE,
    )
