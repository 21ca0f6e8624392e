import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventum.dilation import (
    Dilation,
    DilationError,
    canonical_dilation,
    pointer_shift_dilation,
    reversed_family,
    verify_dilation,
)
from eventum.linalg import PAULI_X, PAULI_Z, adjoint, check_unitary, expm_hermitian
from eventum.reduction import ReductionFamily, pointer_family, random_family, validate_completeness

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def random_hermitian(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def blocks_by_hand(W, d, p):
    """Pointer-major block view of ``W``: ``out[y][y_in]`` is a ``d x d`` matrix."""
    return [[np.array([[W[s * p + y, s2 * p + y_in] for s2 in range(d)] for s in range(d)]) for y_in in range(p)]
            for y in range(p)]


def test_cat_dilation_brute_force(cat):
    dil = canonical_dilation(cat)
    assert dil.W.shape == (6, 6)
    W = dil.W
    assert np.linalg.norm(W.conj().T @ W - np.eye(6), 2) <= 1e-12
    blocks = blocks_by_hand(W, 2, 3)
    np.testing.assert_allclose(blocks[1][0], np.diag([1, 0]), atol=1e-15)
    np.testing.assert_allclose(blocks[2][0], np.diag([0, 1]), atol=1e-15)
    np.testing.assert_allclose(blocks[0][0], 0, atol=1e-15)


def test_single_outcome_dilation_is_pointer_flip():
    fam = ReductionFamily.from_operators([np.eye(2)])
    dil = canonical_dilation(fam)
    # system (x) pointer ordering: the flip acts on the least significant factor
    np.testing.assert_allclose(dil.W, np.kron(np.eye(2), PAULI_X), atol=1e-15)


def test_weak_qubit_dilation_unitary(weak):
    dil = canonical_dilation(weak)
    assert dil.W.shape == (6, 6)
    assert np.linalg.norm(dil.W.conj().T @ dil.W - np.eye(6), 2) <= 1e-12


def test_canonical_dilation_rejects_bad_families(cat):
    with pytest.raises(DilationError):
        canonical_dilation(ReductionFamily.from_operators([np.eye(2) / 2, np.eye(2) / 2]))
    hidden = ReductionFamily(tuple((f / np.sqrt(2), f / np.sqrt(2)) for f in (np.diag([1, 0]), np.diag([0, 1]))))
    with pytest.raises(DilationError):
        canonical_dilation(hidden)


def test_verify_dilation_on_cat(cat):
    rep = verify_dilation(canonical_dilation(cat), cat)
    assert max(rep.unitarity, rep.co_unitarity, rep.vacuum_block, rep.extraction) <= 1e-12
    assert rep.passed()


def test_verify_dilation_wrong_dilation(cat):
    rep = verify_dilation(Dilation(2, 3, np.eye(6)), cat)
    assert rep.extraction >= 1.0
    assert not rep.passed()


def test_verify_dilation_twisted_extraction(cat):
    twist = expm_hermitian(PAULI_Z)
    fam = ReductionFamily.from_operators([twist @ cat.operator(y) for y in cat.labels])
    rep = verify_dilation(canonical_dilation(fam, PAULI_Z), fam)
    assert max(rep.unitarity, rep.co_unitarity, rep.vacuum_block, rep.extraction) <= 1e-12


def test_weighted_family_unabsorbed_on_extraction():
    fam = ReductionFamily.from_operators([np.diag([1, 0]), np.diag([0, 1]), np.eye(2)], weights=[0.5, 0.5, 0.5])
    assert validate_completeness(fam) <= 1e-12
    dil = canonical_dilation(fam)
    np.testing.assert_allclose(dil.block(3, 0), np.sqrt(0.5) * np.eye(2), atol=1e-15)
    assert verify_dilation(dil, fam).passed()


def test_reversed_family_examples(cat, weak):
    for fam in (cat, weak):
        rev = reversed_family(canonical_dilation(fam))
        for y in fam.labels:
            np.testing.assert_allclose(rev.operator(y), adjoint(fam.operator(y)), atol=1e-12)
        assert validate_completeness(rev) <= 1e-12
    twist = expm_hermitian(PAULI_Z)
    fam = ReductionFamily.from_operators([twist @ cat.operator(y) for y in cat.labels])
    rev = reversed_family(canonical_dilation(fam, PAULI_Z))
    undo = expm_hermitian(PAULI_Z, +1.0)
    for y in cat.labels:
        np.testing.assert_allclose(rev.operator(y), cat.operator(y) @ undo, atol=1e-12)


def test_reversed_family_detects_leak():
    # a unitary whose inverse maps vacuum to vacuum
    with pytest.raises(DilationError, match="leaks into vacuum"):
        reversed_family(Dilation(2, 2, np.eye(4)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 4), st.booleans())
def test_random_canonical_dilations(seed, d, m, twisted):
    rng = np.random.default_rng(seed)
    fam = random_family(d, m, rng)
    E = random_hermitian(rng, d) if twisted else None
    dil = canonical_dilation(fam, E)
    rep = verify_dilation(dil, fam)
    assert max(rep.unitarity, rep.co_unitarity) <= 1e-9
    assert max(rep.vacuum_block, rep.extraction) <= 1e-12
    # reversed family reads F(y) exp(iE), where F(y) = exp(iE) V(y) is the dilation column
    undo = expm_hermitian(dil.E, +1.0)
    rev = reversed_family(dil)
    for y in fam.labels:
        F = undo @ fam.operator(y)
        np.testing.assert_allclose(rev.operator(y), F @ undo, atol=1e-12)
    assert validate_completeness(rev) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 4))
def test_double_reversal_recovers_family(seed, d, m):
    rng = np.random.default_rng(seed)
    fam = random_family(d, m, rng)
    E = random_hermitian(rng, d)
    rev = reversed_family(canonical_dilation(fam, E))
    back = reversed_family(canonical_dilation(rev, -E))
    for y in fam.labels:
        np.testing.assert_allclose(back.operator(y), fam.operator(y), atol=1e-10)


def test_adjoint_of_canonical_form(rng):
    # the bracketed block matrix is Hermitian, so W^dagger = exp(iE) W exp(iE)
    fam = random_family(3, 2, rng)
    E = random_hermitian(rng, 3)
    dil = canonical_dilation(fam, E)
    p = dil.pointer_dim
    undo, redo = np.kron(expm_hermitian(E, +1.0), np.eye(p)), np.kron(expm_hermitian(E), np.eye(p))
    assert np.linalg.norm(adjoint(dil.W) - undo @ dil.W @ undo, 2) <= 1e-12
    # conjugation by exp(iE) alone gives the adjoint only when E is trivial
    assert np.linalg.norm(adjoint(dil.W) - undo @ dil.W @ redo, 2) > 1e-3
    plain = canonical_dilation(fam)
    assert np.linalg.norm(adjoint(plain.W) - plain.W, 2) <= 1e-12


def test_pointer_shift_is_cnot():
    W, phi = pointer_shift_dilation(np.diag([0, 1]), [1, 0])
    np.testing.assert_allclose(W, CNOT, atol=1e-15)
    np.testing.assert_allclose(phi, [1, 0])


def test_pointer_shift_without_coupling(rng):
    W, _ = pointer_shift_dilation(np.zeros((2, 2)), [0.6, 0.8])
    np.testing.assert_allclose(W, np.eye(4), atol=1e-15)


def test_pointer_shift_n3():
    W, _ = pointer_shift_dilation(np.diag([0, 1, 2]), [1, 0, 0])
    for x in range(3):
        inp = np.kron(np.eye(3)[x], np.eye(3)[0])
        np.testing.assert_allclose(W @ inp, np.kron(np.eye(3)[x], np.eye(3)[x]), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_pointer_shift_reproduces_family(seed, n):
    rng = np.random.default_rng(seed)
    d = 3
    u = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))[0]
    X = u @ np.diag(rng.integers(0, n, d).astype(float)) @ u.conj().T
    phi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    phi /= np.linalg.norm(phi)
    E = random_hermitian(rng, d)
    W, _ = pointer_shift_dilation(X, phi, E)
    assert max(check_unitary(W)) <= 1e-12
    fam = pointer_family(X, phi, E)
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    out = (W @ np.kron(psi, phi)).reshape(d, n)
    for y in range(n):
        np.testing.assert_allclose(out[:, y], fam.operator(y + 1) @ psi, atol=1e-12)


def test_pointer_shift_agrees_with_canonical_on_delta_pointer(rng):
    X = np.diag([0.0, 2.0, 1.0])
    W, phi = pointer_shift_dilation(X, [1, 0, 0])
    fam = pointer_family(X, [1, 0, 0])
    dil = canonical_dilation(fam)
    for x in range(3):
        psi = np.eye(3)[x]
        from_shift = (W @ np.kron(psi, phi)).reshape(3, 3)
        for y in fam.labels:
            np.testing.assert_allclose(dil.block(y, 0) @ psi, from_shift[:, y - 1], atol=1e-12)
