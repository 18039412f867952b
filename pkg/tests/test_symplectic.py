import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import haar_unitary, random_frame, random_hermitian_symplectic
from prufer_spectra.errors import ContractViolation
from prufer_spectra.symplectic import (
    J,
    J_hat,
    cayley,
    cayley_conjugate,
    check_hermitian_symplectic,
    check_lagrangian,
    checkerboard_sum_frame,
    checkerboard_sum_matrix,
    dirichlet_frame,
    embed_unitary,
    graph_frame,
    intersection_dimension,
    is_hermitian_symplectic,
    is_lagrangian,
    is_lorentz,
    lorentz_from_embedding,
    moebius,
    psi_k,
    psi_k_unitary,
    right_dirichlet_frame,
    stereographic,
    stereographic_inverse,
    u_hat_k,
)

seeds = st.integers(0, 2**32 - 1)
sizes = st.integers(1, 3)


def test_structure_matrices():
    assert np.array_equal(J(1), np.array([[0, -1], [1, 0]]))
    C = cayley(2)
    assert np.allclose(C @ C.conj().T, np.eye(4))
    # Cayley conjugation turns J into -i * diag(1, -1)
    assert np.allclose(C @ J(2) @ C.conj().T, -1j * np.diag([1, 1, -1, -1]))
    assert np.allclose(J_hat(2), J(4))


def test_dirichlet_frames_map_to_plus_minus_one():
    assert np.allclose(stereographic(dirichlet_frame(2)), np.eye(2))
    assert np.allclose(stereographic(right_dirichlet_frame(2)), -np.eye(2))


@given(seeds, sizes)
def test_stereographic_is_a_bijection(seed, L):
    rng = np.random.default_rng(seed)
    U = haar_unitary(rng, L)
    Phi = stereographic_inverse(U)
    assert is_lagrangian(Phi)
    assert np.allclose(stereographic(Phi), U, atol=1e-10)
    # representative independence
    c = np.eye(L) + 0.4 * rng.standard_normal((L, L))
    assert np.allclose(stereographic(Phi @ c), U, atol=1e-9)


def test_non_lagrangian_rejected():
    with pytest.raises(ContractViolation):
        check_lagrangian(np.array([[1.0], [1j]]))
    with pytest.raises(ContractViolation):
        check_lagrangian(np.zeros((2, 1)))
    assert not is_lagrangian(np.ones((3, 1)))


@given(seeds, sizes)
def test_hermitian_symplectic_group(seed, L):
    rng = np.random.default_rng(seed)
    T = random_hermitian_symplectic(rng, L)
    S = random_hermitian_symplectic(rng, L)
    assert is_hermitian_symplectic(T @ S)
    assert is_hermitian_symplectic(np.linalg.inv(T))
    assert is_hermitian_symplectic(T.conj().T)
    G = cayley_conjugate(T)
    C = cayley(L)
    assert np.allclose(G, C @ T @ C.conj().T, atol=1e-10)
    assert is_lorentz(G)


def test_non_symplectic_rejected():
    with pytest.raises(ContractViolation):
        check_hermitian_symplectic(2 * np.eye(2))


@given(seeds, sizes)
def test_moebius_action_is_the_induced_map_on_planes(seed, L):
    rng = np.random.default_rng(seed)
    T = random_hermitian_symplectic(rng, L)
    Phi = random_frame(rng, L)
    assert np.allclose(moebius(cayley_conjugate(T), stereographic(Phi)), stereographic(T @ Phi), atol=1e-8)


@given(seeds, sizes)
def test_embedding_of_hermitian_symplectic(seed, L):
    rng = np.random.default_rng(seed)
    T = random_hermitian_symplectic(rng, L)
    Uh = embed_unitary(T)
    assert np.allclose(Uh @ Uh.conj().T, np.eye(2 * L), atol=1e-10)
    # the embedding is the graph plane up to a fixed unitary factor
    swap = np.block([[np.zeros((L, L)), 1j * np.eye(L)], [1j * np.eye(L), np.zeros((L, L))]])
    assert np.allclose(Uh, swap @ stereographic(graph_frame(T)), atol=1e-9)
    A, B, C, D = lorentz_from_embedding(Uh)
    assert np.allclose(np.block([[A, B], [C, D]]), cayley_conjugate(T), atol=1e-9)


@given(seeds, sizes, st.floats(0, 2 * np.pi))
def test_bloch_embedding_detects_eigenvalue(seed, L, k):
    rng = np.random.default_rng(seed)
    T = random_hermitian_symplectic(rng, L)
    # multiplicity of e^{ik} in T equals that of 1 in u_hat_k
    lam = np.linalg.eigvals(T)
    k = float(np.angle(lam[np.argmin(np.abs(np.abs(lam) - 1))])) if np.any(np.abs(np.abs(lam) - 1) < 1e-9) else k
    d_T = np.sum(np.abs(lam - np.exp(1j * k)) < 1e-7)
    d_U = np.sum(np.abs(np.linalg.eigvals(u_hat_k(embed_unitary(T), k)) - 1) < 1e-7)
    assert d_T == d_U
    assert intersection_dimension(graph_frame(T), psi_k(k, L)) == d_T


def test_bloch_embedding_on_rotation():
    t = 0.8
    T = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    for k, mult in [(t, 1), (-t, 1), (0.1, 0)]:
        U = u_hat_k(embed_unitary(T), k)
        assert np.sum(np.abs(np.linalg.eigvals(U) - 1) < 1e-8) == mult


def test_psi_k_closed_form():
    for k in [0.0, 0.7, np.pi]:
        assert np.allclose(stereographic(psi_k(k, 2)), psi_k_unitary(k, 2))
        assert is_lagrangian(psi_k(k, 2))


@given(seeds, sizes)
def test_checkerboard_sums(seed, L):
    rng = np.random.default_rng(seed)
    T, S = random_hermitian_symplectic(rng, L), random_hermitian_symplectic(rng, L)
    M = checkerboard_sum_matrix(T, S)
    assert is_hermitian_symplectic(M)
    Phi, Psi = random_frame(rng, L), random_frame(rng, L)
    F = checkerboard_sum_frame(Phi, Psi)
    assert is_lagrangian(F)
    assert np.allclose(M @ F, checkerboard_sum_frame(T @ Phi, S @ Psi))


@given(seeds, sizes, st.data())
def test_intersection_dimension_constructed(seed, L, data):
    rng = np.random.default_rng(seed)
    d = data.draw(st.integers(0, L))
    # share d eigenvectors with eigenvalue 1 of V^* U
    V = haar_unitary(rng, L)
    W = haar_unitary(rng, L)
    phases = np.concatenate([np.zeros(d), rng.uniform(0.3, 2 * np.pi - 0.3, L - d)])
    U = V @ W @ np.diag(np.exp(1j * phases)) @ W.conj().T
    assert intersection_dimension(stereographic_inverse(U), stereographic_inverse(V)) == d


def test_intersection_dimension_examples():
    assert intersection_dimension(dirichlet_frame(1), dirichlet_frame(1)) == 1
    assert intersection_dimension(dirichlet_frame(1), right_dirichlet_frame(1)) == 0
    assert intersection_dimension(psi_k(0.0, 2), psi_k(0.0, 2)) == 4
    with pytest.raises(ContractViolation):
        intersection_dimension(dirichlet_frame(1), dirichlet_frame(2))
