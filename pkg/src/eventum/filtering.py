"""Sequential measurement on the system space: filtering and posterior recursions.

The unnormalized filtered vector obeys ``psi(t) = V(y_t) psi(t-1)`` and its
squared norm times ``prod mu_y`` is the prior probability of the record.
Normalizing at every step gives the posterior recursion, whose per-step
normalizations are the conditional probabilities used for sampling.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import Distribution
from .linalg import as_operator, as_state
from .reduction import ZERO_PROBABILITY, ReductionFamily, ZeroProbabilityError, operation_map

SEQUENCE_CAP = 4096
GENERATOR = "numpy.random.PCG64"


class EnumerationCapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Trajectory:
    outcomes: tuple[int, ...]
    filtered: np.ndarray
    weight: float
    posterior: np.ndarray | None  # None on a zero-probability record


def filter_step(fam: ReductionFamily, psi_prev, y: int) -> np.ndarray:
    return fam.operator(y) @ as_state(psi_prev, fam.system_dim)


def posterior_step(fam: ReductionFamily, post_prev, y: int) -> tuple[np.ndarray, float]:
    """One step of the normalized recursion: returns ``(posterior, conditional probability)``."""
    post_prev = as_state(post_prev, fam.system_dim, normalized=True)
    phi = fam.operator(y) @ post_prev
    cond = fam.weight(y) * float(np.vdot(phi, phi).real)
    if cond <= ZERO_PROBABILITY:
        raise ZeroProbabilityError(f"outcome {y} has conditional probability {cond:.3e}")
    return phi / np.linalg.norm(phi), cond


def trajectory(fam: ReductionFamily, psi, outcomes: Sequence[int]) -> Trajectory:
    """Filter ``psi`` along a fixed record."""
    vec = as_state(psi, fam.system_dim, normalized=True)
    mu = 1.0
    for y in outcomes:
        vec = filter_step(fam, vec, y)
        mu *= fam.weight(y)
    weight = mu * float(np.vdot(vec, vec).real)
    post = vec / np.sqrt(weight / mu) if weight > ZERO_PROBABILITY else None
    return Trajectory(tuple(outcomes), vec, weight, post)


def prior_distribution(
    fam: ReductionFamily, psi, t: int, cap: int = SEQUENCE_CAP, with_trajectories: bool = False
):
    """Enumerate all records of length ``t`` with their prior probabilities.

    Prefixes of probability at most 1e-14 are pruned and their mass is
    reported as ``pruned_mass``.  With ``with_trajectories=True`` also returns
    the surviving trajectories sorted by record.
    """
    psi = as_state(psi, fam.system_dim, normalized=True)
    m = fam.num_outcomes
    if m**t > cap:
        raise EnumerationCapError(f"{m}^{t} = {m**t} sequences exceed cap {cap}")
    frontier = [((), psi, 1.0)]
    pruned = 0.0
    for _ in range(t):
        nxt = []
        for seq, vec, mu in frontier:
            for y in fam.labels:
                v = filter_step(fam, vec, y)
                w = mu * fam.weight(y)
                mass = w * float(np.vdot(v, v).real)
                if mass <= ZERO_PROBABILITY:
                    pruned += mass
                else:
                    nxt.append((seq + (y,), v, w))
        frontier = nxt
    trajs = []
    for seq, vec, mu in frontier:
        weight = mu * float(np.vdot(vec, vec).real)
        trajs.append(Trajectory(seq, vec, weight, vec / np.sqrt(weight / mu)))
    trajs.sort(key=lambda tr: tr.outcomes)
    dist = Distribution({tr.outcomes: tr.weight for tr in trajs}, pruned)
    return (dist, trajs) if with_trajectories else dist


@dataclass(frozen=True, eq=False)
class SampleResult:
    trajectories: list[Trajectory]
    counts: dict[tuple[int, ...], int]
    seed: int
    generator: str = GENERATOR

    @property
    def frequencies(self) -> dict[tuple[int, ...], float]:
        n = len(self.trajectories)
        return {k: c / n for k, c in sorted(self.counts.items())}


def sample_trajectories(fam: ReductionFamily, psi, t: int, n: int, seed: int) -> SampleResult:
    """Draw ``n`` records by chain-rule sampling of the conditional probabilities.

    All trajectories advance together; each step draws one uniform per
    trajectory from a PCG64 stream seeded with ``seed``.
    """
    psi = as_state(psi, fam.system_dim, normalized=True)
    if n == 0:
        return SampleResult([], {}, seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    ops = np.stack([fam.operator(y) for y in fam.labels])
    weights = np.asarray(fam.weights)
    posts = np.tile(psi, (n, 1))
    filtered = posts.copy()
    weight = np.ones(n)
    outcomes = np.zeros((n, t), dtype=int)
    for step in range(t):
        cand = np.einsum("yij,nj->yni", ops, posts)
        cond = weights[:, None] * np.sum(np.abs(cand) ** 2, axis=2)  # (m, n)
        cond /= cond.sum(axis=0, keepdims=True)  # rounding only; the sum is 1
        cdf = np.cumsum(cond, axis=0)
        u = rng.random(n)
        pick = np.minimum((u[None, :] >= cdf).sum(axis=0), fam.num_outcomes - 1)
        rows = np.arange(n)
        chosen = cand[pick, rows]
        weight *= cond[pick, rows]
        posts = chosen / np.linalg.norm(chosen, axis=1, keepdims=True)
        filtered = np.einsum("nij,nj->ni", ops[pick], filtered)
        outcomes[:, step] = pick + 1
    trajs, counts = [], {}
    for k in range(n):
        seq = tuple(int(y) for y in outcomes[k])
        trajs.append(Trajectory(seq, filtered[k], float(weight[k]), posts[k]))
        counts[seq] = counts.get(seq, 0) + 1
    return SampleResult(trajs, counts, seed)


def conditional_expectation(fam: ReductionFamily, psi, B, t: int, observed: Sequence[int] = ()) -> complex:
    """Bayes quotient ``psi^dagger pi(t, y, B) psi / psi^dagger pi(t, y, I) psi``.

    ``observed`` is the record ``(y^1, ..., y^r)`` with ``r <= t``; the later
    outcomes are summed over with their weights.  Hidden-index families are
    handled through :func:`operation_map`.
    """
    psi = as_state(psi, fam.system_dim, normalized=True)
    B = as_operator(B, fam.system_dim, fam.system_dim)
    observed = tuple(observed)
    if len(observed) > t:
        raise ValueError(f"{len(observed)} observed outcomes exceed t = {t}")

    def pulled_back(op):
        # compose operations from the last step backwards
        for _ in range(t - len(observed)):
            op = sum(w * operation_map(fam, y, op) for y, w in zip(fam.labels, fam.weights))
        for y in reversed(observed):
            op = fam.weight(y) * operation_map(fam, y, op)
        return op

    norm = np.vdot(psi, pulled_back(np.eye(fam.system_dim, dtype=complex)) @ psi).real
    if norm <= ZERO_PROBABILITY:
        raise ZeroProbabilityError(f"observed record {observed} has probability {norm:.3e}")
    return complex(np.vdot(psi, pulled_back(B) @ psi) / norm)


def brute_force_filtered(fam: ReductionFamily, psi, outcomes: Sequence[int]) -> np.ndarray:
    """``V(y^t) ... V(y^1) psi`` as one operator product, for cross-checking the recursion."""
    prod = np.eye(fam.system_dim, dtype=complex)
    for y in outcomes:
        prod = fam.operator(y) @ prod
    return prod @ as_state(psi, fam.system_dim)


def exact_outcome_table(fam: ReductionFamily, psi, t: int) -> dict[tuple[int, ...], float]:
    """All ``m^t`` records with exact prior probability, zeros included."""
    dist = prior_distribution(fam, psi, t)
    return {seq: dist[seq] for seq in itertools.product(fam.labels, repeat=t)}

