"""Finite-scenario market primitives.

Everything downstream lives on a finite probability space with strictly
positive atom weights. Payoffs are vectors indexed by atom, and all geometry
is weighted-L2: <X, Y> = sum_i p_i X_i Y_i, so orthogonality statements read
as plain expectations. The attainable set of a market is the affine space
x0 + span(generators); spans are handled through an orthonormal basis
extracted by a rank-revealing SVD in the weighted coordinates, which makes
every span-level quantity invariant to how the generators are listed or
recombined.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, InputError

# relative singular-value cutoff for basis extraction
RANK_TOL = 1e-10
# constructor demands near-exact mass; file ingestion is looser, see load_market
PROB_SUM_TOL = 1e-12
INGEST_PROB_SUM_TOL = 1e-9
ATTAINABLE_TOL = 1e-8


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InputError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must contain only finite values")
    return arr


@dataclass(frozen=True, eq=False)
class ScenarioSpace:
    """Finite probability space: strictly positive atom weights with unit mass."""

    probabilities: np.ndarray

    def __post_init__(self):
        probs = _as_vector(self.probabilities, "probabilities")
        if probs.size < 2:
            raise InputError("a scenario space needs at least two atoms")
        if np.any(probs <= 0.0):
            raise InputError("atom probabilities must be strictly positive")
        if abs(probs.sum() - 1.0) > PROB_SUM_TOL:
            raise InputError(
                f"atom probabilities must sum to 1 within {PROB_SUM_TOL:g}, "
                f"got {float(probs.sum())!r}"
            )
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probabilities", probs)

    @property
    def n_atoms(self) -> int:
        return int(self.probabilities.size)

    def matches(self, other: "ScenarioSpace") -> bool:
        return self is other or np.array_equal(self.probabilities, other.probabilities)


@dataclass(frozen=True, eq=False)
class Payoff:
    """Random variable on a scenario space, one value per atom."""

    space: ScenarioSpace
    values: np.ndarray

    def __post_init__(self):
        vals = _as_vector(self.values, "payoff values")
        if vals.size != self.space.n_atoms:
            raise DimensionMismatch(
                f"payoff has {vals.size} values but the space has "
                f"{self.space.n_atoms} atoms"
            )
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, space: ScenarioSpace, value: float) -> "Payoff":
        return cls(space, np.full(space.n_atoms, float(value)))


@dataclass(frozen=True, eq=False)
class MarketModel:
    """Initial wealth plus the payoffs reachable by trading the generators.

    The attainable set is { x0 + sum_j theta_j * g_j }. Generators may be
    linearly dependent; span-level operations work off an orthonormal basis.
    """

    space: ScenarioSpace
    generators: tuple[Payoff, ...]
    x0: float

    def __post_init__(self):
        gens = tuple(self.generators)
        for g in gens:
            if not isinstance(g, Payoff):
                raise InputError("generators must be Payoff instances")
            if not g.space.matches(self.space):
                raise DimensionMismatch("generator lives on a different scenario space")
        if not np.isfinite(self.x0):
            raise InputError("x0 must be finite")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "x0", float(self.x0))

    @property
    def generator_matrix(self) -> np.ndarray:
        """Generators as columns, shape (n_atoms, n_generators)."""
        if not self.generators:
            return np.zeros((self.space.n_atoms, 0))
        return np.column_stack([g.values for g in self.generators])


@dataclass(frozen=True, eq=False)
class AttainabilityResult:
    attainable: bool
    coefficients: np.ndarray
    residual: float


def expectation(x: Payoff) -> float:
    """E[X] under the atom probabilities."""
    return float(np.dot(x.space.probabilities, x.values))


def variance(x: Payoff) -> float:
    """Var[X]; clipped at zero against roundoff."""
    p = x.space.probabilities
    mean = float(np.dot(p, x.values))
    second = float(np.dot(p, x.values * x.values))
    return max(second - mean * mean, 0.0)


def attainable_basis(market: MarketModel, rank_tol: float = RANK_TOL) -> list[Payoff]:
    """Orthonormal basis of span(generators) in weighted L2.

    Returned payoffs satisfy E[b_i b_j] = delta_ij. The span (and hence
    everything computed from it) does not depend on generator order or on
    replacing the generators by any other spanning family.
    """
    if not market.generators:
        return []
    sqrt_p = np.sqrt(market.space.probabilities)
    weighted = market.generator_matrix * sqrt_p[:, None]
    u, s, _ = np.linalg.svd(weighted, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return []
    rank = int(np.count_nonzero(s > rank_tol * s[0]))
    return [Payoff(market.space, u[:, k] / sqrt_p) for k in range(rank)]


def is_attainable(
    market: MarketModel, x: Payoff, tol: float = ATTAINABLE_TOL
) -> AttainabilityResult:
    """Project X - x0 onto span(generators) and test the residual.

    Coefficients are reported per original generator (minimum-norm when the
    generators are dependent). The residual is the weighted-L2 norm of the
    unexplained part.
    """
    if not x.space.matches(market.space):
        raise DimensionMismatch("payoff lives on a different scenario space")
    sqrt_p = np.sqrt(market.space.probabilities)
    target = (x.values - market.x0) * sqrt_p
    if not market.generators:
        residual = float(np.linalg.norm(target))
        return AttainabilityResult(residual <= tol, np.zeros(0), residual)
    weighted = market.generator_matrix * sqrt_p[:, None]
    coeffs, _, _, _ = np.linalg.lstsq(weighted, target, rcond=None)
    residual = float(np.linalg.norm(weighted @ coeffs - target))
    return AttainabilityResult(residual <= tol, coeffs, residual)


def span_payoff(market: MarketModel, coefficients: np.ndarray) -> Payoff:
    """x0 + sum_j theta_j g_j as a Payoff."""
    coeffs = np.asarray(coefficients, dtype=float)
    if coeffs.shape != (len(market.generators),):
        raise DimensionMismatch(
            f"expected {len(market.generators)} coefficients, got shape {coeffs.shape}"
        )
    values = np.full(market.space.n_atoms, market.x0)
    if market.generators:
        values = values + market.generator_matrix @ coeffs
    return Payoff(market.space, values)


# ---------------------------------------------------------------------------
# JSON ingestion. Market files carry {"probabilities", "generators", "x0"},
# payoff files carry {"probabilities", "payoff"}; both accept an optional
# "schema": 1 marker.


def _load_json(source) -> dict:
    if isinstance(source, dict):
        return source
    path = Path(source)
    if not path.exists():
        raise InputError(f"input file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError(f"top-level JSON value in {path} must be an object")
    return data


def _check_schema(data: dict) -> None:
    version = data.get("schema", 1)
    if version != 1:
        raise InputError(f"unsupported schema version {version!r}, expected 1")


def _ingest_probabilities(data: dict) -> ScenarioSpace:
    if "probabilities" not in data:
        raise InputError('missing required key "probabilities"')
    probs = _as_vector(data["probabilities"], "probabilities")
    if np.any(probs <= 0.0):
        raise InputError("atom probabilities must be strictly positive")
    total = float(probs.sum())
    if abs(total - 1.0) > INGEST_PROB_SUM_TOL:
        raise InputError(
            f"probabilities must sum to 1 within {INGEST_PROB_SUM_TOL:g}, got {total!r}"
        )
    return ScenarioSpace(probs / total)


def load_market(source) -> MarketModel:
    """Build a MarketModel from a JSON file path or an already-parsed dict."""
    data = _load_json(source)
    _check_schema(data)
    space = _ingest_probabilities(data)
    if "generators" not in data:
        raise InputError('missing required key "generators"')
    raw_gens = data["generators"]
    if not isinstance(raw_gens, list):
        raise InputError('"generators" must be a list of payoff vectors')
    generators = tuple(
        Payoff(space, _as_vector(g, f"generators[{i}]")) for i, g in enumerate(raw_gens)
    )
    if "x0" not in data:
        raise InputError('missing required key "x0"')
    try:
        x0 = float(data["x0"])
    except (TypeError, ValueError) as exc:
        raise InputError('"x0" must be a number') from exc
    return MarketModel(space, generators, x0)


def load_payoff(source) -> Payoff:
    """Build a Payoff from a JSON file path or an already-parsed dict."""
    data = _load_json(source)
    _check_schema(data)
    space = _ingest_probabilities(data)
    if "payoff" not in data:
        raise InputError('missing required key "payoff"')
    return Payoff(space, _as_vector(data["payoff"], "payoff"))
