"""Unitary dilations of reduction families on system (x) pointer.

The pointer space has dimension ``m + 1``: index 0 is the vacuum (no result
registered) and index ``y`` is outcome ``y``.  The pointer is the second,
least significant tensor factor, so the block ``(I (x) <y|) W (I (x) |y'>)``
is ``W4[:, y, :, y']`` of the ``(d, m+1, d, m+1)`` reshaped matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linalg import adjoint, as_operator, as_state, check_unitary, expm_hermitian, spectral_norm
from .reduction import COMPLETENESS_TOL, ReductionFamily, integer_spectrum, validate_completeness


class DilationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dilation:
    """Unitary ``W`` on system (x) pointer with vacuum index 0, plus the system action ``E``."""

    system_dim: int
    pointer_dim: int
    W: np.ndarray
    E: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.system_dim * self.pointer_dim
        W = as_operator(self.W, n, n)
        E = np.zeros((self.system_dim,) * 2, dtype=complex) if self.E is None else as_operator(self.E)
        W.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "E", E)

    @property
    def dim(self) -> int:
        return self.system_dim * self.pointer_dim

    def block(self, y: int, y_in: int, matrix: np.ndarray | None = None) -> np.ndarray:
        """``(I (x) <y|) M (I (x) |y_in>)`` with ``M = W`` by default."""
        d, p = self.system_dim, self.pointer_dim
        m = self.W if matrix is None else matrix
        return m.reshape(d, p, d, p)[:, y, :, y_in]


def canonical_dilation(fam: ReductionFamily, E=None) -> Dilation:
    """Block dilation ``W = exp(-iE) [[0, F^dagger], [F, I - F F^dagger]]`` of a family.

    ``F`` is the column of ``exp(iE) sqrt(mu_y) V(y)``; the vacuum row and
    column come first in the block layout.
    """
    if not fam.complete:
        raise DilationError("canonical dilation needs complete observation (no hidden index)")
    residual = validate_completeness(fam)
    if residual > COMPLETENESS_TOL:
        raise DilationError(f"family is not complete: residual {residual:.3e}")
    d, m = fam.system_dim, fam.num_outcomes
    p = m + 1
    E = np.zeros((d, d), dtype=complex) if E is None else as_operator(E, d, d)
    undo = expm_hermitian(E, +1.0)
    F = [undo @ v for v in fam.absorbed_operators()]

    blocks = np.zeros((d, p, d, p), dtype=complex)
    for y in range(1, p):
        blocks[:, y, :, 0] = F[y - 1]
        blocks[:, 0, :, y] = adjoint(F[y - 1])
        for y2 in range(1, p):
            blocks[:, y, :, y2] = (np.eye(d) if y == y2 else 0) - F[y - 1] @ adjoint(F[y2 - 1])
    M = blocks.reshape(d * p, d * p)
    W = np.kron(expm_hermitian(E), np.eye(p)) @ M
    return Dilation(d, p, W, E)


@dataclass(frozen=True)
class DilationReport:
    unitarity: float  # ||W^dagger W - I||
    co_unitarity: float  # ||W W^dagger - I||
    vacuum_block: float  # ||(I (x) <0|) W (I (x) |0>)||
    extraction: float  # max_y ||(I (x) <y|) W (I (x) |0>) / sqrt(mu_y) - V(y)||

    def passed(self, unitary_tol: float = 1e-9, block_tol: float = 1e-12) -> bool:
        return (
            self.unitarity <= unitary_tol
            and self.co_unitarity <= unitary_tol
            and self.vacuum_block <= block_tol
            and self.extraction <= block_tol
        )


def verify_dilation(dil: Dilation, fam: ReductionFamily) -> DilationReport:
    """Residuals of the dilation invariants against ``fam``; never raises on bad input."""
    u1, u2 = check_unitary(dil.W)
    vac = spectral_norm(dil.block(0, 0))
    extraction = 0.0
    for y in fam.labels:
        if y >= dil.pointer_dim or fam.system_dim != dil.system_dim:
            extraction = float("inf")
            break
        target = fam.operator(y)
        got = dil.block(y, 0) / np.sqrt(fam.weight(y))
        extraction = max(extraction, spectral_norm(got - target))
    return DilationReport(u1, u2, vac, extraction)


def reversed_family(dil: Dilation, weights=(), values=()) -> ReductionFamily:
    """Family ``V*(y) = (I (x) <y|) W^dagger (I (x) |0>)`` read from the inverse dilation.

    For the canonical dilation this equals ``F(y) exp(iE)``.  Optional
    ``weights`` are un-absorbed from the blocks exactly as in extraction.
    """
    Wd = adjoint(dil.W)
    leak = spectral_norm(dil.block(0, 0, Wd))
    if leak > COMPLETENESS_TOL:
        raise DilationError(f"reversal leaks into vacuum: ||W^dagger_00|| = {leak:.3e}")
    m = dil.pointer_dim - 1
    weights = tuple(weights) or (1.0,) * m
    ops = [dil.block(y, 0, Wd) / np.sqrt(weights[y - 1]) for y in range(1, m + 1)]
    return ReductionFamily.from_operators(ops, weights, values)


class PointerDilation(NamedTuple):
    W: np.ndarray
    phi: np.ndarray


def pointer_shift_dilation(X, phi, E=None) -> PointerDilation:
    """``W = (exp(-iE) (x) I) S`` with the controlled cyclic shift ``S|x>|y> = |x>|y + x mod n>``.

    ``W (psi (x) phi)`` is the stacked column of ``exp(-iE) phi(y - X) psi``.
    """
    phi = as_state(phi, normalized=True)
    n = phi.shape[0]
    X = as_operator(X)
    d = X.shape[0]
    shift = np.roll(np.eye(n, dtype=complex), 1, axis=0)  # |y> -> |y+1 mod n>
    S = np.zeros((d * n, d * n), dtype=complex)
    for x, proj in integer_spectrum(X, n).items():
        S += np.kron(proj, np.linalg.matrix_power(shift, x))
    prefactor = np.eye(d, dtype=complex) if E is None else expm_hermitian(as_operator(E, d, d))
    return PointerDilation(np.kron(prefactor, np.eye(n)) @ S, phi)
