"""Reduction families: generalized (Kraus-type) measurement operators.

A family holds, for each outcome label ``y = 1..m``, a list of operators
``V(z, y)`` indexed by an unobserved index ``z`` (a single operator when the
observation is complete) together with a positive base-measure weight
``mu_y``.  Label ``0`` is never an outcome: it is reserved for the pointer
vacuum of a dilation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import adjoint, as_operator, as_state, expm_hermitian, haar_unitary, is_hermitian, spectral_norm

COMPLETENESS_TOL = 1e-9
ZERO_PROBABILITY = 1e-14


class ZeroProbabilityError(ValueError):
    """Conditioning on an outcome (or outcome sequence) of vanishing probability."""


@dataclass(frozen=True, eq=False)
class ReductionFamily:
    """Outcome-labelled operators ``V(z, y)`` on a ``system_dim``-dimensional space.

    ``kraus[y - 1]`` is the tuple of operators for label ``y``; ``weights`` are
    the base-measure atoms ``mu_y``; ``values`` are the physical outcome values
    (eigenvalues, pointer readings) shown in reports, defaulting to the labels.
    Completeness is *not* enforced here; see :func:`validate_completeness`.
    """

    kraus: tuple[tuple[np.ndarray, ...], ...]
    weights: tuple[float, ...] = ()
    values: tuple = ()
    system_dim: int = field(init=False)

    def __post_init__(self):
        if not self.kraus:
            raise ValueError("a reduction family needs at least one outcome")
        groups = []
        for ops in self.kraus:
            ops = tuple(as_operator(op) for op in ops)
            if not ops:
                raise ValueError("every outcome needs at least one operator")
            groups.append(ops)
        d = groups[0][0].shape[1]
        for ops in groups:
            for op in ops:
                if op.shape != (d, d):
                    raise ValueError(f"all operators must be {d}x{d}, got {op.shape}")
                op.setflags(write=False)
        m = len(groups)
        weights = tuple(float(w) for w in self.weights) or (1.0,) * m
        if len(weights) != m:
            raise ValueError(f"{len(weights)} weights for {m} outcomes")
        if any(not w > 0 for w in weights):
            raise ValueError("outcome weights must be strictly positive")
        values = tuple(self.values) or tuple(range(1, m + 1))
        if len(values) != m:
            raise ValueError(f"{len(values)} outcome values for {m} outcomes")
        object.__setattr__(self, "kraus", tuple(groups))
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "system_dim", d)

    @classmethod
    def from_operators(cls, ops: Sequence, weights: Sequence[float] = (), values: Sequence = ()):
        """Complete-observation family with one operator per label ``1..len(ops)``."""
        return cls(tuple((as_operator(op),) for op in ops), tuple(weights), tuple(values))

    @property
    def num_outcomes(self) -> int:
        return len(self.kraus)

    @property
    def labels(self) -> range:
        return range(1, len(self.kraus) + 1)

    @property
    def complete(self) -> bool:
        """True when every label carries a single operator (no hidden index)."""
        return all(len(ops) == 1 for ops in self.kraus)

    def _check_label(self, y: int) -> int:
        if not (isinstance(y, (int, np.integer)) and 1 <= y <= len(self.kraus)):
            raise KeyError(f"unknown outcome label {y!r}; labels are 1..{len(self.kraus)}")
        return int(y) - 1

    def kraus_for(self, y: int) -> tuple[np.ndarray, ...]:
        return self.kraus[self._check_label(y)]

    def operator(self, y: int) -> np.ndarray:
        """The single operator ``V(y)`` of a complete-observation family."""
        ops = self.kraus_for(y)
        if len(ops) != 1:
            raise ValueError(f"outcome {y} has a hidden index ({len(ops)} operators)")
        return ops[0]

    def weight(self, y: int) -> float:
        return self.weights[self._check_label(y)]

    def label_of(self, value) -> int:
        """Label of the outcome whose physical value is ``value``."""
        for label, v in zip(self.labels, self.values):
            if v == value or (np.isscalar(v) and np.isscalar(value) and abs(v - value) < 1e-12):
                return label
        raise KeyError(f"no outcome with value {value!r}")

    def absorbed_operators(self) -> list[np.ndarray]:
        """``sqrt(mu_y) V(y)`` for each label: the family under counting measure."""
        return [np.sqrt(w) * self.operator(y) for y, w in zip(self.labels, self.weights)]


def validate_completeness(fam: ReductionFamily) -> float:
    """``||sum_{y,z} mu_y V(z,y)^dagger V(z,y) - I||``; the family is valid iff this is <= 1e-9."""
    d = fam.system_dim
    acc = np.zeros((d, d), dtype=complex)
    for ops, w in zip(fam.kraus, fam.weights):
        for v in ops:
            acc += w * (adjoint(v) @ v)
    return spectral_norm(acc - np.eye(d))


def random_family(d: int, m: int, rng: np.random.Generator) -> ReductionFamily:
    """Complete family cut from a Haar-random isometry ``C^d -> C^d (x) C^m``."""
    F = haar_unitary(d * m, rng)[:, :d]
    return ReductionFamily.from_operators([F[y * d : (y + 1) * d] for y in range(m)])


def projection_family(Y, cluster_tol: float = 1e-8) -> ReductionFamily:
    """Spectral projectors of a Hermitian observable, in increasing eigenvalue order.

    Eigenvalues closer than ``cluster_tol`` times the spectral diameter are
    treated as one eigenvalue.  ``values`` holds the cluster means.
    """
    Y = as_operator(Y)
    if not is_hermitian(Y, 1e-10):
        raise ValueError("observable must be Hermitian")
    w, v = np.linalg.eigh((Y + adjoint(Y)) / 2)
    diameter = w[-1] - w[0]
    gap = cluster_tol * diameter
    clusters = [[0]]
    for k in range(1, len(w)):
        if w[k] - w[k - 1] > gap:
            clusters.append([k])
        else:
            clusters[-1].append(k)
    projectors, values = [], []
    for idx in clusters:
        cols = v[:, idx]
        projectors.append(cols @ adjoint(cols))
        values.append(float(np.mean(w[idx])))
    return ReductionFamily.from_operators(projectors, values=values)


def integer_spectrum(X, n: int) -> dict[int, np.ndarray]:
    """Spectral projectors of ``X`` keyed by eigenvalue reduced mod ``n``.

    Raises if ``X`` is not Hermitian or has a non-integer eigenvalue.
    """
    X = as_operator(X)
    if not is_hermitian(X, 1e-10):
        raise ValueError("X must be Hermitian")
    w, v = np.linalg.eigh((X + adjoint(X)) / 2)
    rounded = np.rint(w)
    if np.max(np.abs(w - rounded), initial=0.0) > 1e-9:
        raise ValueError(f"X must have integer eigenvalues, got {w}")
    out: dict[int, np.ndarray] = {}
    for k, x in enumerate(rounded.astype(int)):
        col = v[:, [k]]
        key = int(x) % n
        out[key] = out.get(key, 0) + col @ adjoint(col)
    return out


def pointer_family(X, phi, E=None) -> ReductionFamily:
    """Family ``V(y) = exp(-iE) phi((y - X) mod n)`` of a pointer on the cyclic group Z_n.

    Pointer readings ``y = 0..n-1`` are stored as ``values``; their labels
    are ``y + 1`` since label 0 belongs to the vacuum.
    """
    phi = as_state(phi, normalized=True)
    n = phi.shape[0]
    X = as_operator(X)
    d = X.shape[0]
    spectrum = integer_spectrum(X, n)
    prefactor = np.eye(d, dtype=complex) if E is None else expm_hermitian(as_operator(E, d, d))
    ops = []
    for y in range(n):
        f = sum(phi[(y - x) % n] * p for x, p in spectrum.items())
        ops.append(prefactor @ f)
    return ReductionFamily.from_operators(ops, values=list(range(n)))


def apply_reduction(fam: ReductionFamily, psi, y: int) -> tuple[np.ndarray, float]:
    """Posterior state and probability of outcome ``y`` for a pure prior ``psi``."""
    psi = as_state(psi, fam.system_dim, normalized=True)
    phi = fam.operator(y) @ psi
    prob = fam.weight(y) * float(np.vdot(phi, phi).real)
    if prob <= ZERO_PROBABILITY:
        raise ZeroProbabilityError(f"outcome {y} has probability {prob:.3e}")
    return phi / np.linalg.norm(phi), prob


def is_density_operator(rho, tol: float = 1e-12) -> bool:
    rho = as_operator(rho)
    if rho.shape[0] != rho.shape[1] or not is_hermitian(rho, tol):
        return False
    if abs(np.trace(rho) - 1) > tol:
        return False
    return bool(np.linalg.eigvalsh((rho + adjoint(rho)) / 2)[0] >= -1e-10)


def _check_square(a, d: int, what: str) -> np.ndarray:
    a = as_operator(a)
    if a.shape != (d, d):
        raise ValueError(f"{what} must be {d}x{d}, got {a.shape}")
    return a


def decohere(rho, fam: ReductionFamily) -> np.ndarray:
    """Non-selective measurement: ``sum_{y,z} mu_y V rho V^dagger``."""
    rho = _check_square(rho, fam.system_dim, "density operator")
    out = np.zeros_like(rho)
    for ops, w in zip(fam.kraus, fam.weights):
        for v in ops:
            out += w * (v @ rho @ adjoint(v))
    return out


def operation_map(fam: ReductionFamily, y: int, B) -> np.ndarray:
    """Heisenberg-picture operation ``pi(y, B) = sum_z V(z,y)^dagger B V(z,y)``."""
    B = _check_square(B, fam.system_dim, "B")
    return sum(adjoint(v) @ B @ v for v in fam.kraus_for(y))


def instrument_map(fam: ReductionFamily, y: int, sigma) -> np.ndarray:
    """Unnormalized post-measurement state ``pi*(y, sigma) = sum_z V sigma V^dagger``.

    Its trace times ``mu_y`` is the probability of ``y``.
    """
    sigma = _check_square(sigma, fam.system_dim, "sigma")
    return sum(v @ sigma @ adjoint(v) for v in fam.kraus_for(y))
