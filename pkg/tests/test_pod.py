import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from romlab import (Discretization, FieldEnsemble, compute_pod, dot, load_basis, project,
                    reconstruct, save_basis)
from romlab.errors import DimensionError, RankError
from romlab.pod import build_gramian, numerical_rank


def _ensemble(U, disc=None, phi0=None):
    disc = disc or Discretization.periodic(U.shape[0])
    phi0 = np.zeros(U.shape[0]) if phi0 is None else phi0
    return FieldEnsemble(disc, U, phi0, np.arange(U.shape[1], dtype=float))


def _low_rank(seed, n=48, K=12, rank=5):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, rank)) @ rng.standard_normal((rank, K))


def test_gramian_of_zero_snapshots():
    assert not np.any(build_gramian(_ensemble(np.zeros((8, 3)))))


def test_gramian_of_orthonormal_pair():
    disc = Discretization(1, np.ones(4))
    U = np.array([[1.0, 0], [0, 1], [0, 0], [0, 0]])
    assert np.array_equal(build_gramian(_ensemble(U, disc)), np.eye(2))


def test_gramian_double_loop_oracle():
    rng = np.random.default_rng(1)
    ens = _ensemble(rng.standard_normal((16, 3)))
    disc = ens.discretization
    G = build_gramian(ens)
    oracle = np.array([[sum(disc.weights[i] * ens.snapshots[i, k] * ens.snapshots[i, l]
                            for i in range(16)) for l in range(3)] for k in range(3)])
    assert np.allclose(G, oracle, rtol=1e-13, atol=1e-14)
    assert np.max(np.abs(G - G.T)) <= 1e-14


def test_single_repeated_snapshot():
    disc = Discretization.periodic(32)
    u = np.cos(disc.nodes) + 0.2
    basis = compute_pod(_ensemble(np.column_stack([u, u, u]), disc), 1)
    assert np.allclose(basis.modes[:, 0], u / np.sqrt(dot(u, u, disc)), atol=1e-12)


def test_two_orthogonal_snapshots():
    disc = Discretization(1, np.ones(4))
    U = np.array([[2.0, 0], [0, 1], [0, 0], [0, 0]])
    basis = compute_pod(_ensemble(U, disc), 2)
    # Gramian diag(4, 1), K = 2
    assert np.allclose(basis.eigenvalues, [2.0, 0.5], rtol=1e-14)
    assert np.allclose(basis.modes, [[1, 0], [0, 1], [0, 0], [0, 0]], atol=1e-14)


def test_rank_error_reports_cutoff():
    with pytest.raises(RankError, match="numerical rank 5"):
        compute_pod(_ensemble(_low_rank(0)), 6)


def test_sign_convention():
    basis = compute_pod(_ensemble(_low_rank(3)))
    idx = np.argmax(np.abs(basis.modes), axis=0)
    assert np.all(basis.modes[idx, np.arange(basis.rank)] > 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 8))
def test_pod_invariants(seed, rank):
    ens = _ensemble(_low_rank(seed, rank=rank), phi0=np.linspace(0, 1, 48))
    basis = compute_pod(ens)
    assert basis.rank == rank
    M = dot(basis.modes, basis.modes, ens.discretization)
    assert np.max(np.abs(M - np.eye(rank))) <= 1e-10
    assert np.all(np.diff(basis.eigenvalues) <= 0)
    assert basis.eigenvalues[-1] >= -1e-12
    fractions = [basis.energy_fraction(r) for r in range(1, rank + 1)]
    assert np.all(np.diff(fractions) >= 0)
    # a field in the span is reproduced
    u = ens.zeroth_mode + basis.modes @ np.random.default_rng(seed).standard_normal(rank)
    back = reconstruct(project(u, basis, centered=False), basis)
    assert np.linalg.norm(back - u) <= 1e-9 * np.linalg.norm(u)


def test_eigenvalues_match_weighted_svd_oracle():
    rng = np.random.default_rng(5)
    disc = Discretization.dirichlet(40, 2.0)
    U = rng.standard_normal((40, 30))
    basis = compute_pod(_ensemble(U, disc))
    s = np.linalg.svd(np.sqrt(disc.weights)[:, None] * U, compute_uv=False)
    assert np.allclose(basis.eigenvalues, s ** 2 / 30, rtol=1e-10, atol=0)


def test_full_rank_reconstruction(rich_burgers):
    basis = compute_pod(rich_burgers)
    assert basis.rank == rich_burgers.n_snapshots - 1  # first centered snapshot is zero
    back = reconstruct(project(rich_burgers.snapshots, basis), basis)
    F = rich_burgers.full_fields()
    err = np.linalg.norm(back - F, axis=0) / np.linalg.norm(F, axis=0)
    assert err.max() <= 1e-9


def test_project_mode_and_zero(random_ensemble):
    basis = compute_pod(random_ensemble, 4)
    assert np.allclose(project(basis.modes[:, 1], basis, 3), [0, 1, 0], atol=1e-12)
    assert not np.any(project(np.zeros(64), basis))
    assert np.allclose(project(random_ensemble.zeroth_mode, basis, centered=False), 0)


def test_reconstruct_examples(random_ensemble):
    basis = compute_pod(random_ensemble, 3)
    assert np.array_equal(reconstruct(np.zeros(3), basis), basis.zeroth_mode)
    assert np.allclose(reconstruct([1.0, 0.0], basis), basis.zeroth_mode + basis.modes[:, 0])


def test_dimension_checks(random_ensemble):
    basis = compute_pod(random_ensemble, 3)
    with pytest.raises(DimensionError):
        project(np.zeros(64), basis, 4)
    with pytest.raises(DimensionError):
        reconstruct(np.zeros(4), basis)


def test_numerical_rank_cutoff():
    assert numerical_rank(np.array([1.0, 1e-12, 1e-14])) == 2
    assert numerical_rank(np.zeros(3)) == 0


def test_basis_round_trip(tmp_path, random_ensemble):
    basis = compute_pod(random_ensemble, 4)
    save_basis(basis, tmp_path / "b.bin")
    back = load_basis(tmp_path / "b.bin")
    for name in ("modes", "eigenvalues", "zeroth_mode"):
        assert getattr(back, name).tobytes() == getattr(basis, name).tobytes()


def test_truncation_error_tracks_dropped_energy(small_burgers):
    # with a decaying spectrum the error is set by the discarded eigenvalues
    basis = compute_pod(small_burgers)
    full = compute_pod(small_burgers, 3)
    U = small_burgers.snapshots
    disc = small_burgers.discretization
    res = U - full.modes @ project(U, full).T
    dropped = np.sum(basis.eigenvalues[3:]) * small_burgers.n_snapshots
    assert np.isclose(np.trace(dot(res, res, disc)), dropped, rtol=1e-6)
