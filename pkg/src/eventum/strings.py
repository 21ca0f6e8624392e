"""Truncated past/future string model of sequential measurement.

The extended space is ``system (x) g_-0 (x) g_+0 (x) g_-1 (x) g_+1 ...`` with
``horizon`` past and ``horizon`` future pointer sites.  One step scatters the
system against the incoming future site ``+0`` with the dilation ``W``,
writes the result to the newest past site ``-0``, shifts the past one site
to the left and the future one site to the right.  The oldest past site is
recycled into the last future slot, which is exact for up to ``horizon``
steps from the all-vacuum configuration because recycled sites are still
vacuum.

Heisenberg conjugations ``U^{-t} A U^t`` exploit the factor structure of ``U``
(a permutation times a local ``W``); the dense ``step_unitary`` is
materialized as well and tests cross-check both.
"""

from __future__ import annotations

import functools
import itertools
import os
from dataclasses import dataclass, field
from math import prod
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .dilation import Dilation
from .distributions import Distribution
from .linalg import (
    adjoint,
    apply_on_factors,
    as_operator,
    as_state,
    basis_vector,
    check_unitary,
    commutator_norm,
    conjugate_by_permutation,
    diagonal_commutator_norm,
    embed_on_factors,
    inverse_permutation,
    permutation_operator,
    permute_factors,
    sandwich_on_factors,
    spectral_norm,
    tensor_product,
)

DEFAULT_DIM_CAP = 8192


class HorizonError(ValueError):
    """A step count exceeds what the truncated string represents faithfully."""


class DimensionCapError(ValueError):
    pass


class Site(NamedTuple):
    """Pointer site ``-k`` (past) or ``+k`` (future)."""

    past: bool
    k: int

    def __str__(self):
        return f"{'-' if self.past else '+'}{self.k}"


def past(k: int) -> Site:
    return Site(True, k)


def future(k: int) -> Site:
    return Site(False, k)


def dim_cap() -> int:
    return int(os.environ.get("EVENTUM_DIM_CAP", DEFAULT_DIM_CAP))


def _shift_source(T: int) -> list[int]:
    """Output factor -> input factor of the string shift (system fixed)."""
    src = [0] * (1 + 2 * T)
    src[1] = 2  # -0 <- +0
    for k in range(T - 1):
        src[1 + 2 * (k + 1)] = 1 + 2 * k  # -(k+1) <- -k
        src[2 + 2 * k] = 2 + 2 * (k + 1)  # +k <- +(k+1)
    src[2 + 2 * (T - 1)] = 1 + 2 * (T - 1)  # +(T-1) <- -(T-1), cyclic closure
    return src


@dataclass(frozen=True, eq=False)
class StringModel:
    dil: Dilation
    horizon: int
    step_unitary: np.ndarray = field(repr=False)

    @property
    def system_dim(self) -> int:
        return self.dil.system_dim

    @property
    def pointer_dim(self) -> int:
        return self.dil.pointer_dim

    @property
    def num_outcomes(self) -> int:
        return self.dil.pointer_dim - 1

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.system_dim,) + (self.pointer_dim,) * (2 * self.horizon)

    @property
    def dim(self) -> int:
        return prod(self.dims)

    def factor(self, site: Site) -> int:
        if not 0 <= site.k < self.horizon:
            raise HorizonError(f"site {site} outside the simulated string (horizon {self.horizon})")
        return 1 + 2 * site.k + (0 if site.past else 1)

    @functools.cached_property
    def shift_source(self) -> list[int]:
        return _shift_source(self.horizon)

    @functools.cached_property
    def vacuum(self) -> np.ndarray:
        """Pointer part of the all-vacuum configuration."""
        return basis_vector(self.pointer_dim ** (2 * self.horizon), 0)

    def initial_state(self, psi) -> np.ndarray:
        psi = as_state(psi, self.system_dim)
        return np.kron(psi, self.vacuum)

    def embed(self, a, sites: Iterable[Site] = (), system: bool = False) -> np.ndarray:
        """Embed a local operator on ``[system] + sites`` (in that order)."""
        targets = ([0] if system else []) + [self.factor(s) for s in sites]
        return embed_on_factors(a, self.dims, targets)

    def system_operator(self, B) -> np.ndarray:
        return embed_on_factors(as_operator(B, self.system_dim, self.system_dim), self.dims, [0])

    # structured actions of U

    def step(self, state: np.ndarray) -> np.ndarray:
        out = apply_on_factors(self.dil.W, state, self.dims, [0, 2])
        return permute_factors(out, self.dims, self.shift_source)

    def forward(self, a: np.ndarray) -> np.ndarray:
        """``U a U^dagger``."""
        both = sandwich_on_factors(a, self.dil.W, self.dims, [0, 2])
        return conjugate_by_permutation(both, self.dims, self.shift_source)

    def backward(self, a: np.ndarray) -> np.ndarray:
        """``U^dagger a U``."""
        a = conjugate_by_permutation(a, self.dims, inverse_permutation(self.shift_source))
        return sandwich_on_factors(a, adjoint(self.dil.W), self.dims, [0, 2])

    def free_forward(self, a: np.ndarray) -> np.ndarray:
        """``T a T^dagger`` for the free shift ``T``."""
        return conjugate_by_permutation(a, self.dims, self.shift_source)

    def conjugate(self, a: np.ndarray, t: int) -> np.ndarray:
        """``U^{-t} a U^t`` for any integer ``t`` (negative ``t`` runs the dynamics backwards)."""
        if abs(t) > self.horizon:
            raise HorizonError(f"|t| = {abs(t)} exceeds horizon {self.horizon}")
        for _ in range(abs(t)):
            a = self.backward(a) if t > 0 else self.forward(a)
        return a


def build_step_unitary(dil: Dilation, T: int, cap: int | None = None) -> StringModel:
    """String model with the dense step unitary ``U = P (W on system, +0)``."""
    if T < 1:
        raise ValueError("horizon must be at least 1")
    cap = dim_cap() if cap is None else cap
    dims = (dil.system_dim,) + (dil.pointer_dim,) * (2 * T)
    n = prod(dims)
    if n > cap:
        raise DimensionCapError(f"string dimension {n} exceeds cap {cap} (set EVENTUM_DIM_CAP)")
    P = permutation_operator(dims, _shift_source(T))
    U = P @ embed_on_factors(dil.W, dims, [0, 2])
    U.setflags(write=False)
    return StringModel(dil, T, U)


def build_free_shift(model: StringModel) -> np.ndarray:
    """The free dynamics ``T``: the string shift with no scattering, identity on the system."""
    return permutation_operator(model.dims, model.shift_source)


def pointer_observable(model: StringModel, site: Site) -> np.ndarray:
    """Multiplication by the pointer reading (0 at vacuum, y at outcome y) at one site."""
    y = np.diag(np.arange(model.pointer_dim, dtype=complex))
    return model.embed(y, [site])


def site_projector(model: StringModel, site: Site, level: int) -> np.ndarray:
    p = np.zeros((model.pointer_dim,) * 2, dtype=complex)
    p[level, level] = 1.0
    return model.embed(p, [site])


def matrix_units(d: int) -> list[np.ndarray]:
    units = []
    for i, j in itertools.product(range(d), repeat=2):
        e = np.zeros((d, d), dtype=complex)
        e[i, j] = 1.0
        units.append(e)
    return units


def heisenberg_transform(model: StringModel, A, t: int) -> np.ndarray:
    """``U^{-t} A U^t`` for ``0 <= t <= horizon``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t > model.horizon:
        raise HorizonError(f"t = {t} exceeds horizon {model.horizon}: truncated string no longer faithful")
    return model.conjugate(as_operator(A, model.dim, model.dim), t)


def check_shift_reversal(model: StringModel, t: int, s: Site) -> float:
    """``||T^t Y_s T^{-t} - U^t Y_s U^{-t}||`` for a past site ``s``.

    Both sides should equal the pointer observable at ``s - t``.
    """
    if not s.past:
        raise ValueError("shift reversal is stated for past sites only")
    if t < 0 or s.k + t >= model.horizon:
        raise HorizonError(f"site {s} shifted by {t} leaves the simulated past (horizon {model.horizon})")
    y = pointer_observable(model, s)
    free, full = y, y
    for _ in range(t):
        free = model.free_forward(free)
        full = model.forward(full)
    return spectral_norm(free - full)


def check_nondemolition(model: StringModel, B, t: int, r: int) -> tuple[float, float]:
    """``(||[B(t), Y_-(r)]||, ||[Y_-(t), Y_-(r)]||)`` for ``0 <= r <= t <= horizon``."""
    if not 0 <= r <= t:
        raise ValueError(f"nondemolition is stated for t >= r >= 0, got t={t}, r={r}")
    y0 = pointer_observable(model, past(0))
    b_t = heisenberg_transform(model, model.system_operator(B), t)
    y_r = heisenberg_transform(model, y0, r)
    y_t = heisenberg_transform(model, y0, t)
    return commutator_norm(b_t, y_r), commutator_norm(y_t, y_r)


@dataclass(frozen=True)
class NondemolitionGrid:
    rows: tuple  # (unit index (i, j), t, r, res_BY, res_YY)

    @property
    def max_residual(self) -> float:
        return max((max(r[3], r[4]) for r in self.rows), default=0.0)


def nondemolition_grid(model: StringModel, steps: int | None = None, ops: Mapping | None = None) -> NondemolitionGrid:
    """Residuals of the causality condition for all ``0 <= r <= t <= steps``.

    ``ops`` maps a name to a system operator; it defaults to all matrix units
    ``E_ij`` named ``(i, j)``.
    """
    steps = model.horizon if steps is None else steps
    if steps > model.horizon:
        raise HorizonError(f"steps {steps} exceed horizon {model.horizon}")
    d = model.system_dim
    if ops is None:
        ops = {(i, j): e for (i, j), e in zip(itertools.product(range(d), repeat=2), matrix_units(d))}
    y0 = pointer_observable(model, past(0))
    ys = [y0]
    for _ in range(steps):
        ys.append(model.backward(ys[-1]))
    rows = []
    for name, B in ops.items():
        b = model.system_operator(B)
        for t in range(steps + 1):
            for r in range(t + 1):
                rows.append((name, t, r, commutator_norm(b, ys[r]), commutator_norm(ys[t], ys[r])))
            b = model.backward(b)
    return NondemolitionGrid(tuple(rows))


def decomposable_operator(
    model: StringModel,
    system=None,
    past_ops: Mapping[int, np.ndarray] | None = None,
    future_ops: Mapping[int, np.ndarray] | None = None,
) -> np.ndarray:
    """``B (x) (diagonal past operators) (x) (arbitrary future operators)``; identity where unspecified.

    Past operators must be diagonal.  A non-diagonal operator on the last
    future site ``+(horizon-1)`` is allowed, but the truncated dynamics
    recycles that site into the past, so forward invariance then fails by
    construction.
    """
    p = model.pointer_dim
    factors = [np.eye(model.system_dim, dtype=complex) if system is None else as_operator(system)]
    past_ops = dict(past_ops or {})
    future_ops = dict(future_ops or {})
    for k in range(model.horizon):
        g = as_operator(past_ops.pop(k, np.eye(p)), p, p)
        if np.max(np.abs(g - np.diag(np.diagonal(g)))) > 0:
            raise ValueError(f"past operator at -{k} must be diagonal")
        x = as_operator(future_ops.pop(k, np.eye(p)), p, p)
        factors += [g, x]
    if past_ops or future_ops:
        raise HorizonError("operator placed on a site outside the horizon")
    return tensor_product(*factors)


def default_generators(model: StringModel, seed: int = 0) -> list[np.ndarray]:
    """A small random set of decomposable operators that respect the truncation.

    The last future site carries a diagonal operator, as explained in
    :func:`decomposable_operator`.
    """
    rng = np.random.default_rng(seed)
    d, p, T = model.system_dim, model.pointer_dim, model.horizon

    def full(n):
        return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))

    def diag(n):
        return np.diag(rng.standard_normal(n) + 1j * rng.standard_normal(n))

    gens = []
    for _ in range(3):
        fut = {k: full(p) for k in range(T - 1)}
        fut[T - 1] = diag(p)
        gens.append(decomposable_operator(model, full(d), {k: diag(p) for k in range(T)}, fut))
    return gens


class InvarianceReport(NamedTuple):
    forward_residual: float
    inverse_violation: float


def check_algebra_invariance(model: StringModel, generators: Iterable[np.ndarray]) -> InvarianceReport:
    """Test ``U^dagger A U`` and ``U A U^dagger`` for membership in the decomposable algebra.

    Membership is commutation with every diagonal projector on every past site.
    """
    # diagonals of the past-site projectors, read off the factor index grid
    grid = np.indices(model.dims).reshape(len(model.dims), -1)
    projectors = [
        (grid[model.factor(past(k))] == level).astype(float)
        for k in range(model.horizon)
        for level in range(model.pointer_dim)
    ]
    fwd, inv = 0.0, 0.0
    for a in generators:
        a = as_operator(a, model.dim, model.dim)
        heis = model.backward(a)
        anti = model.forward(a)
        for p in projectors:
            fwd = max(fwd, diagonal_commutator_norm(p, heis))
            inv = max(inv, diagonal_commutator_norm(p, anti))
    return InvarianceReport(fwd, inv)


def evolve(model: StringModel, psi, t: int) -> np.ndarray:
    """``Psi(t) = U^t (psi (x) vacuum)``."""
    if not 0 <= t <= model.horizon:
        raise HorizonError(f"t = {t} outside [0, {model.horizon}]")
    state = model.initial_state(as_state(psi, model.system_dim, normalized=True))
    for _ in range(t):
        state = model.step(state)
    return state


def _record_axes(model: StringModel, t: int) -> list[int]:
    # outcome y^1 sits at site -(t-1), y^t at -0
    return [model.factor(past(t - 1 - j)) for j in range(t)]


def joint_outcome_distribution(model: StringModel, psi, t: int) -> Distribution:
    """Joint distribution of the pointer records ``(y^1, ..., y^t)`` after ``t`` steps.

    Sequences containing the vacuum reading 0 are included with their
    (numerically zero) mass.
    """
    if t > model.horizon:
        raise HorizonError(f"t = {t} exceeds horizon {model.horizon}")
    state = evolve(model, psi, t)
    probs = (np.abs(state) ** 2).reshape(model.dims)
    axes = _record_axes(model, t)
    other = tuple(k for k in range(len(model.dims)) if k not in axes)
    marginal = probs.sum(axis=other) if other else probs
    # summed result keeps the record axes in increasing factor order, i.e. -0 first
    order = np.argsort(np.argsort(axes))
    marginal = np.transpose(marginal, order)
    masses = {seq: float(marginal[seq]) for seq in itertools.product(range(model.pointer_dim), repeat=t)}
    return Distribution(masses)


def conditioned_states(model: StringModel, psi, t: int, min_prob: float = 1e-10) -> dict[tuple, tuple[np.ndarray, float]]:
    """System states conditioned on each record sequence, read off ``Psi(t)``.

    For each sequence of non-vacuum readings with probability above
    ``min_prob`` the amplitude is projected on that record at the past sites
    and vacuum everywhere else; returns ``{sequence: (normalized state, prob)}``.
    """
    state = evolve(model, psi, t).reshape(model.dims)
    axes = _record_axes(model, t)
    out = {}
    for seq in itertools.product(range(1, model.pointer_dim), repeat=t):
        index = [0] * len(model.dims)
        index[0] = slice(None)
        for ax, y in zip(axes, seq):
            index[ax] = y
        vec = state[tuple(index)]
        prob = float(np.vdot(vec, vec).real)
        if prob > min_prob:
            out[seq] = (vec / np.sqrt(prob), prob)
    return out


def vacuum_persistence(model: StringModel, psi, t: int) -> dict[str, float]:
    """Probability that the untouched sites are vacuum after ``t`` steps.

    ``future``: all future sites vacuum; ``old_past``: past sites beyond
    ``-(t-1)`` vacuum.  Both should be 1.
    """
    probs = (np.abs(evolve(model, psi, t)) ** 2).reshape(model.dims)
    fut = [model.factor(future(k)) for k in range(model.horizon)]
    old = [model.factor(past(k)) for k in range(t, model.horizon)]

    def vacuum_mass(axes):
        index = [slice(None)] * len(model.dims)
        for ax in axes:
            index[ax] = 0
        return float(probs[tuple(index)].sum())

    return {"future": vacuum_mass(fut), "old_past": vacuum_mass(old)}


def reflection_source(model: StringModel) -> list[int]:
    src = [0]
    for k in range(model.horizon):
        src += [model.factor(future(k)), model.factor(past(k))]
    return src


def build_reflection(model: StringModel) -> np.ndarray:
    """The flip ``R`` exchanging sites ``-k`` and ``+k``."""
    return permutation_operator(model.dims, reflection_source(model))


@dataclass(frozen=True)
class ReflectionReport:
    involution: float  # ||R^2 - I||
    vacuum: float  # ||R Phi - Phi||
    mirror: float  # max_k ||R Y_-k R - Y_+k||
    reversed_causality: float  # max ||[B(t), Y_+(r)]||, t <= r <= 0
    reversed_commutation: float  # max ||[Y_+(t), Y_+(r)]||, t <= r <= 0

    def passed(self, tol: float = 1e-9) -> bool:
        return max(self.involution, self.vacuum, self.mirror, self.reversed_causality, self.reversed_commutation) <= tol


def reflect_and_reverse(model: StringModel, steps: int | None = None, ops: Iterable | None = None) -> ReflectionReport:
    """Check the reflected description: ``R`` is an involution fixing the vacuum,
    mirrors past onto future pointers, and the backward dynamics satisfies the
    reversed causality condition with ``Y_+(r) = U^{-r} Y_+0 U^r`` for ``r <= 0``.
    """
    steps = model.horizon if steps is None else steps
    if steps > model.horizon:
        raise HorizonError(f"steps {steps} exceed horizon {model.horizon}")
    R = build_reflection(model)
    src = reflection_source(model)
    # R is a permutation matrix: products with it are index shuffles
    involution = spectral_norm(permute_factors(R, model.dims, src) - np.eye(model.dim))
    phi = basis_vector(model.dim, 0)
    vacuum = float(np.linalg.norm(R @ phi - phi))
    mirror = 0.0
    for k in range(model.horizon):
        lhs = conjugate_by_permutation(pointer_observable(model, past(k)), model.dims, src)
        mirror = max(mirror, spectral_norm(lhs - pointer_observable(model, future(k))))

    ops = matrix_units(model.system_dim) if ops is None else list(ops)
    # index n holds the Heisenberg operator at time -n
    yp = [pointer_observable(model, future(0))]
    for _ in range(steps):
        yp.append(model.forward(yp[-1]))
    causality, commutation = 0.0, 0.0
    for n in range(steps + 1):
        for q in range(n + 1):  # t = -n <= r = -q <= 0
            commutation = max(commutation, commutator_norm(yp[n], yp[q]))
    for B in ops:
        b = model.system_operator(B)
        for n in range(steps + 1):
            for q in range(n + 1):
                causality = max(causality, commutator_norm(b, yp[q]))
            b = model.forward(b)
    return ReflectionReport(involution, vacuum, mirror, causality, commutation)


def check_step_structure(model: StringModel, psi) -> float:
    """Largest amplitude of ``U (psi (x) vacuum)`` with site -0 vacuum and some future site excited."""
    out = model.step(model.initial_state(psi)).reshape(model.dims)
    index = [slice(None)] * len(model.dims)
    index[model.factor(past(0))] = 0
    sub = out[tuple(index)]
    # zero the all-future-vacuum entries; what remains must vanish
    fut_axes = [model.factor(future(k)) - (1 if model.factor(future(k)) > model.factor(past(0)) else 0)
                for k in range(model.horizon)]
    mask = np.ones(sub.shape, dtype=bool)
    vac_index = [slice(None)] * sub.ndim
    for ax in fut_axes:
        vac_index[ax] = 0
    mask[tuple(vac_index)] = False
    return float(np.max(np.abs(sub[mask]), initial=0.0))


def unitarity(model: StringModel) -> tuple[float, float]:
    return check_unitary(model.step_unitary)
