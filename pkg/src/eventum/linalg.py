"""Dense complex linear algebra and tensor-factor bookkeeping.

Operators are plain 2-D ``complex128`` numpy arrays and states are 1-D arrays.
Composite spaces are described by a tuple of factor dimensions; composite
indices are factor-0-major (factor 0 is the most significant digit), which is
the ``np.kron`` convention.
"""

from __future__ import annotations

from math import prod
from typing import Callable, Sequence

import numpy as np

SPECTRAL_TOL = 1e-12
SPECTRAL_MAXITER = 10_000

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_operator(a, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Return ``a`` as a 2-D complex array, checking the shape if given."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"operator must be 2-D, got shape {a.shape}")
    if rows is not None and a.shape[0] != rows:
        raise ValueError(f"expected {rows} rows, got {a.shape[0]}")
    if cols is not None and a.shape[1] != cols:
        raise ValueError(f"expected {cols} columns, got {a.shape[1]}")
    return a


def as_state(v, dim: int | None = None, normalized: bool = False) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"expected state of dim {dim}, got {v.shape[0]}")
    if normalized and abs(np.vdot(v, v).real - 1.0) > 1e-12:
        raise ValueError(f"state is not normalized (norm^2 = {np.vdot(v, v).real!r})")
    return v


def basis_vector(dim: int, index: int) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[index] = 1.0
    return e


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def tensor_product(*ops) -> np.ndarray:
    """Kronecker product of operators (or vectors), left factor most significant."""
    out = np.ones((1, 1), dtype=complex) if np.ndim(ops[0]) == 2 else np.ones(1, dtype=complex)
    for op in ops:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def _check_targets(dims: Sequence[int], targets: Sequence[int]) -> None:
    if len(set(targets)) != len(targets):
        raise ValueError(f"target factors must be distinct: {list(targets)}")
    for t in targets:
        if not 0 <= t < len(dims):
            raise IndexError(f"factor index {t} out of range for {len(dims)} factors")


def embed_on_factors(a, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Operator acting as ``a`` on ``targets`` (in that order) and as identity elsewhere.

    >>> embed_on_factors(PAULI_Z, [2, 2], [1]).diagonal().real
    array([ 1., -1.,  1., -1.])
    """
    dims = tuple(int(d) for d in dims)
    targets = list(targets)
    _check_targets(dims, targets)
    tdim = prod(dims[t] for t in targets)
    a = as_operator(a, tdim, tdim)
    rest = [k for k in range(len(dims)) if k not in targets]
    rest_dim = prod(dims[k] for k in rest)
    full = np.kron(a, np.eye(rest_dim, dtype=complex))
    order = targets + rest
    n = len(dims)
    t = full.reshape([dims[k] for k in order] * 2)
    inv = list(np.argsort(order))
    t = t.transpose(inv + [n + i for i in inv])
    total = prod(dims)
    return t.reshape(total, total)


def apply_on_factors(a, state: np.ndarray, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Apply a local operator to the leading index of ``state``.

    ``state`` has shape ``(N,)`` or ``(N, k)`` with ``N = prod(dims)``; the
    result is ``embed_on_factors(a, dims, targets) @ state`` without forming
    the embedded matrix.
    """
    dims = tuple(int(d) for d in dims)
    targets = list(targets)
    _check_targets(dims, targets)
    n = len(dims)
    tdim = prod(dims[t] for t in targets)
    a = as_operator(a, tdim, tdim)
    tail = state.shape[1:]
    t = state.reshape(dims + tail)
    rest = [k for k in range(n) if k not in targets]
    t = np.moveaxis(t, targets + rest, list(range(n)))
    moved_shape = t.shape
    t = (a @ t.reshape(tdim, -1)).reshape(moved_shape)
    t = np.moveaxis(t, list(range(n)), targets + rest)
    return t.reshape(state.shape)


def sandwich_on_factors(a: np.ndarray, m, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """``M_e a M_e^dagger`` where ``M_e`` is ``m`` embedded on ``targets``."""
    left = apply_on_factors(m, a, dims, targets)
    # left @ M_e^dagger = (conj(M_e) @ left^T)^T
    return apply_on_factors(np.conj(m), left.T, dims, targets).T


def permutation_operator(dims: Sequence[int], source: Sequence[int]) -> np.ndarray:
    """Matrix of the factor permutation whose output factor ``j`` holds input factor ``source[j]``.

    All factors exchanged with each other must have equal dimension.
    """
    dims = tuple(int(d) for d in dims)
    total = prod(dims)
    # column (input index) for each row (output index)
    cols = permute_factors(np.arange(total), dims, source)
    p = np.zeros((total, total), dtype=complex)
    p[np.arange(total), cols] = 1.0
    return p


def permute_factors(state: np.ndarray, dims: Sequence[int], source: Sequence[int]) -> np.ndarray:
    """Apply a factor permutation to the leading index of ``state`` (vector or matrix)."""
    dims = tuple(int(d) for d in dims)
    source = list(source)
    if sorted(source) != list(range(len(dims))):
        raise ValueError(f"not a permutation of {len(dims)} factors: {source}")
    if any(dims[j] != dims[s] for j, s in enumerate(source)):
        raise ValueError("permutation mixes factors of different dimension")
    t = state.reshape(dims + state.shape[1:])
    extra = list(range(len(dims), t.ndim))
    t = t.transpose(source + extra)
    return np.ascontiguousarray(t).reshape(state.shape)


def conjugate_by_permutation(a: np.ndarray, dims: Sequence[int], source: Sequence[int]) -> np.ndarray:
    """``P a P^dagger`` for the factor permutation ``P`` described by ``source``."""
    rows = permute_factors(a, dims, source)
    return np.ascontiguousarray(permute_factors(rows.T, dims, source).T)


def inverse_permutation(source: Sequence[int]) -> list[int]:
    return [int(i) for i in np.argsort(source)]


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a), "fro"))


def _power_norm(matvec: Callable, rmatvec: Callable, n: int, tol: float, maxiter: int) -> float:
    """Largest singular value from power iteration on ``A^dagger A``.

    Stops when the estimate changes by at most ``tol * max(1, estimate)``;
    small norms are therefore resolved to absolute accuracy ``tol``.
    """
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(maxiter):
        w = rmatvec(matvec(v))
        lam = np.linalg.norm(w)
        if lam == 0.0:
            return 0.0
        new_sigma = float(np.sqrt(max(np.vdot(v, w).real, 0.0)))
        v = w / lam
        if abs(new_sigma - sigma) <= tol * max(1.0, new_sigma):
            return new_sigma
        sigma = new_sigma
    return sigma


def spectral_norm(a, tol: float = SPECTRAL_TOL, maxiter: int = SPECTRAL_MAXITER) -> float:
    """Operator (largest singular value) norm of a dense matrix."""
    a = as_operator(a)
    return _power_norm(lambda v: a @ v, lambda v: np.conj(np.conj(v) @ a), a.shape[1], tol, maxiter)


def commutator(a, b) -> np.ndarray:
    a = as_operator(a)
    b = as_operator(b)
    return a @ b - b @ a


def _is_diagonal(a: np.ndarray) -> bool:
    # cheap exact rejection for dense operators before the full scan
    if a.shape[0] > 1 and (a[0, 1:].any() or a[1:, 0].any()):
        return False
    return np.count_nonzero(a) == np.count_nonzero(np.diagonal(a))


def diagonal_commutator_norm(dg, m, tol: float = SPECTRAL_TOL, maxiter: int = SPECTRAL_MAXITER) -> float:
    """``||[D, M]||`` for ``D = diag(dg)``: the commutator has entries ``(d_i - d_j) M_ij``."""
    dg = np.asarray(dg).reshape(-1)
    m = as_operator(m, len(dg), len(dg))
    levels = np.unique(dg)
    if len(levels) == 2:
        # a scaled projector: the commutator is block off-diagonal
        inside = dg == levels[1]
        upper = m[np.ix_(inside, ~inside)]
        lower = m[np.ix_(~inside, inside)]
        block = max(spectral_norm(upper, tol, maxiter), spectral_norm(lower, tol, maxiter))
        return float(abs(levels[1] - levels[0]) * block)
    dgc = np.conj(dg)
    return _power_norm(
        lambda v: dg * (m @ v) - m @ (dg * v),
        lambda v: np.conj(np.conj(dgc * v) @ m) - dgc * np.conj(np.conj(v) @ m),
        len(dg),
        tol,
        maxiter,
    )


def commutator_norm(a, b, tol: float = SPECTRAL_TOL, maxiter: int = SPECTRAL_MAXITER) -> float:
    """Spectral norm of ``ab - ba`` without forming the matrix products."""
    a = as_operator(a)
    b = as_operator(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"commutator needs square operators of equal size, got {a.shape} and {b.shape}")
    diag_a, diag_b = _is_diagonal(a), _is_diagonal(b)
    if diag_a and diag_b:
        return 0.0
    for x, y, is_diag in ((a, b, diag_a), (b, a, diag_b)):
        if is_diag:
            return diagonal_commutator_norm(np.diagonal(x), y, tol, maxiter)

    def mv(v):
        return a @ (b @ v) - b @ (a @ v)

    def rmv(v):
        # (ab - ba)^dagger v, without materializing adjoints
        w = np.conj(v)
        return np.conj((w @ a) @ b - (w @ b) @ a)

    return _power_norm(mv, rmv, a.shape[0], tol, maxiter)


def check_isometry(a, tol: float = SPECTRAL_TOL) -> float:
    """Residual ``||A^dagger A - I||`` (spectral norm); the caller compares it to a threshold."""
    a = as_operator(a)
    ah = adjoint(a)
    return _power_norm(
        lambda v: ah @ (a @ v) - v, lambda v: ah @ (a @ v) - v, a.shape[1], tol, SPECTRAL_MAXITER
    )


def check_unitary(a) -> tuple[float, float]:
    """Return ``(||A^dagger A - I||, ||A A^dagger - I||)``."""
    a = as_operator(a)
    return check_isometry(a), check_isometry(adjoint(a))


def is_hermitian(a, tol: float = 1e-10) -> bool:
    a = as_operator(a)
    return a.shape[0] == a.shape[1] and np.max(np.abs(a - adjoint(a)), initial=0.0) <= tol


def expm_hermitian(h, sign: float = -1.0) -> np.ndarray:
    """``exp(sign * i * H)`` for Hermitian ``H`` via its eigendecomposition."""
    h = as_operator(h)
    if not is_hermitian(h):
        raise ValueError("exponent must be Hermitian")
    w, v = np.linalg.eigh((h + adjoint(h)) / 2)
    return (v * np.exp(sign * 1j * w)) @ adjoint(v)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def global_phase_distance(a, b) -> float:
    """``1 - |<a|b>|`` for normalized vectors; zero iff equal up to a phase."""
    return float(1.0 - abs(np.vdot(a, b)))
