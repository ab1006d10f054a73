import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opasqueeze.blochmessiah import (
    SqueezerDecomposition,
    decompose,
    parity_defects,
    squeezing_lengths,
    takagi_biphoton,
    takagi_block,
    time_reversal_check,
    verify_constraints,
)
from opasqueeze.errors import ConstraintViolation, GridMismatchError, PairingError
from opasqueeze.gaussian import GaussianModelParams, gaussian_decomposition, gaussian_kernels, gaussian_mode, gaussian_zeta
from opasqueeze.propagation import GreenPair
from opasqueeze.spectral import KernelMatrix, SpectralAmplitude, identity_kernel, inner_product, make_grid

OMEGA_P = 4.709128918272133


def random_unitary(n, rng):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def synthetic_pair(zetas, seed=0, n=32):
    """Exact Bogoliubov pair U_C = X cosh Y^T, U_S = X sinh Y^dag with random mode bases."""
    rng = np.random.default_rng(seed)
    grid = make_grid(2.0, 1.0, n)
    x, y = random_unitary(n, rng), random_unitary(n, rng)
    z = np.zeros(n)
    z[: len(zetas)] = zetas
    uc = (x * np.cosh(z)) @ y.T
    us = (x * np.sinh(z)) @ y.conj().T
    return GreenPair(KernelMatrix.from_operator(grid, uc), KernelMatrix.from_operator(grid, us), picture="midpoint-compensated")


def gram(modes, step):
    m = np.stack([f.values for f in modes], axis=1)
    return m.conj().T @ m * step


# constraints


def test_vacuum_channel_constraints():
    grid = make_grid(2.0, 1.0, 32)
    g = GreenPair(identity_kernel(grid), KernelMatrix(grid, grid, np.zeros((32, 32))))
    rep = verify_constraints(g)
    assert rep.symmetry == 0 and rep.unitarity == 0


def test_gaussian_constraints_order_n(gauss_r1):
    p, grid, g = gauss_r1
    rep = verify_constraints(g)
    us = g.S.operator()
    assert rep.symmetry == 0
    assert rep.unitarity == pytest.approx(np.max(np.abs(us @ us.conj().T)), rel=1e-12)
    quarter = GaussianModelParams(p.omega_p, p.delta, p.Delta, p.N / 4)
    assert verify_constraints(gaussian_kernels(quarter, grid)).unitarity == pytest.approx(rep.unitarity / 4)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.0, 2.0), min_size=1, max_size=8), st.integers(0, 10_000))
def test_exact_pairs_satisfy_constraints(zetas, seed):
    rep = verify_constraints(synthetic_pair(zetas, seed))
    assert rep.worst < 1e-10


# decomposition


def test_gaussian_oracle(gauss_r1):
    p, grid, g = gauss_r1
    with pytest.warns(UserWarning, match="constraints"):
        d = decompose(g, 8)
    assert np.max(np.abs(d.zetas - gaussian_zeta(p, np.arange(8)))) < 1e-4
    for n in range(6):
        assert abs(inner_product(gaussian_mode(p, n, grid), d.output_modes[n])) > 0.999
        assert abs(inner_product(gaussian_mode(p, n, grid), d.input_modes[n])) > 0.999


def test_zero_squeezing():
    grid = make_grid(2.0, 1.0, 32)
    g = GreenPair(identity_kernel(grid), KernelMatrix(grid, grid, np.zeros((32, 32))))
    d = decompose(g, 32)
    assert np.all(d.zetas == 0)
    assert d.residuals["C"] < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(0.01, 2.0), min_size=1, max_size=10), st.integers(0, 10_000))
def test_synthetic_roundtrip(zetas, seed):
    g = synthetic_pair(zetas, seed)
    d = decompose(g, 32)
    assert np.all(np.diff(d.zetas) <= 0)
    assert np.allclose(d.zetas[: len(zetas)], sorted(zetas, reverse=True), atol=1e-10)
    assert max(d.residuals.values()) < 1e-10
    step = g.grid.step
    assert np.max(np.abs(gram(d.output_modes, step) - np.eye(32))) < 1e-8
    assert np.max(np.abs(gram(d.input_modes, step) - np.eye(32))) < 1e-8


def test_degenerate_cluster_is_paired_jointly():
    # naive SVD pairing fails for equal squeezing parameters
    g = synthetic_pair([0.7, 0.7, 0.7, 0.4, 0.4, 0.1], seed=3)
    d = decompose(g, 6)
    assert max(d.residuals.values()) < 1e-10
    x = np.stack([m.values for m in d.output_modes], axis=1).conj() * math.sqrt(g.grid.step)
    y = np.stack([m.values for m in d.input_modes], axis=1) * math.sqrt(g.grid.step)
    block = x.conj().T @ g.C.operator() @ y.conj()
    assert np.max(np.abs(block - np.diag(np.cosh(d.zetas)))) < 1e-10


def test_unresolved_cluster_raises():
    gap = 1e-13
    g = synthetic_pair([0.7, 0.7 * (1 - gap), 0.2], seed=5)
    with pytest.raises(PairingError):
        decompose(g, 3, tol=1e-16)


def test_constraint_gate():
    grid = make_grid(2.0, 1.0, 32)
    rng = np.random.default_rng(1)
    bad = KernelMatrix.from_operator(grid, 0.1 * rng.normal(size=(32, 32)))
    with pytest.raises(ConstraintViolation):
        decompose(GreenPair(identity_kernel(grid), bad), 4)
    mild = KernelMatrix.from_operator(grid, 5e-3 * np.eye(32))
    with pytest.warns(UserWarning):
        decompose(GreenPair(identity_kernel(grid), mild), 4)


def test_n_modes_validation():
    g = synthetic_pair([0.5])
    for bad in (0, 33):
        with pytest.raises(ValueError):
            decompose(g, bad)


def test_idempotence_synthetic():
    g = synthetic_pair(list(np.linspace(1.0, 0.05, 12)), seed=9)
    d1 = decompose(g, 32)
    d2 = decompose(d1.as_green_pair(), 32)
    assert np.max(np.abs(d1.zetas - d2.zetas)) < 1e-8
    for a, b in zip(d1.output_modes[:12], d2.output_modes[:12]):
        assert abs(inner_product(a, b)) == pytest.approx(1.0, abs=1e-8)


def test_phase_convention_only_moves_signs():
    g = synthetic_pair([0.9, 0.5, 0.2], seed=11)
    d = decompose(g, 32)
    # flip every pair: the kernels are unchanged, so is the decomposition
    flipped = SqueezerDecomposition(
        d.zetas,
        [SpectralAmplitude(m.grid, -m.values) for m in d.output_modes],
        [SpectralAmplitude(m.grid, -m.values) for m in d.input_modes],
    )
    d2 = decompose(flipped.as_green_pair(), 32)
    assert np.max(np.abs(d.zetas - d2.zetas)) < 1e-12
    for a, b in zip(d.output_modes[:3], d2.output_modes[:3]):
        assert np.allclose(a.values, b.values, atol=1e-9)


def test_modes_defined_up_to_global_sign_only():
    d = decompose(synthetic_pair([0.9, 0.5, 0.2], seed=12), 1)
    psi, phi = d.output_modes[0], d.input_modes[0]
    orig = SqueezerDecomposition(d.zetas, [psi], [phi])
    # a common phase other than +-1 leaves C alone but changes S
    rot = SqueezerDecomposition(
        d.zetas, [SpectralAmplitude(psi.grid, 1j * psi.values)], [SpectralAmplitude(phi.grid, 1j * phi.values)]
    )
    assert np.allclose(rot.reconstruct()[0], orig.reconstruct()[0])
    assert not np.allclose(rot.reconstruct()[1], orig.reconstruct()[1])


def test_truncation_and_reconstruction_shapes():
    d = decompose(synthetic_pair([0.5, 0.2]), 32)
    t = d.truncated(2)
    assert len(t) == 2
    c, s = t.reconstruct()
    assert c.shape == s.shape == (32, 32)
    with pytest.raises(ValueError):
        SqueezerDecomposition([0.1], [], [])


# Takagi / Schmidt


def test_takagi_block_factorizes():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    m = a + a.T
    d, r = takagi_block(m)
    assert np.allclose(r @ np.diag(d) @ r.T, m, atol=1e-12)
    assert np.allclose(r.conj().T @ r, np.eye(5), atol=1e-12)


def test_takagi_rank_one():
    grid = make_grid(2.0, 1.0, 64)
    f = SpectralAmplitude(grid, np.exp(-((grid.offsets * 8) ** 2)) * np.exp(0.4j * grid.offsets)).normalized()
    psi = KernelMatrix(grid, grid, 0.3 * np.outer(f.values.conj(), f.values.conj()))
    sd = takagi_biphoton(psi)
    assert sd.coefficients[0] == pytest.approx(0.3, abs=1e-12)
    assert np.all(sd.coefficients[1:] == 0)
    assert abs(inner_product(sd.modes[0], f)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_takagi_random_symmetric(seed):
    rng = np.random.default_rng(seed)
    grid = make_grid(2.0, 1.0, 32)
    a = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    psi = KernelMatrix(grid, grid, a + a.T)
    sd = takagi_biphoton(psi)
    op = psi.operator()
    eig = np.sort(np.linalg.eigvalsh(op @ op.conj().T))[::-1]
    assert np.allclose(sd.coefficients**2, eig, atol=1e-10 * eig[0])
    assert np.max(np.abs(sd.reconstruct() - psi.entries)) < 1e-8 * np.max(np.abs(psi.entries))


def test_takagi_rejects_asymmetric():
    grid = make_grid(2.0, 1.0, 16)
    m = np.zeros((16, 16))
    m[0, 1] = 1.0
    with pytest.raises(ValueError):
        takagi_biphoton(KernelMatrix(grid, grid, m))


def test_takagi_gaussian_kernel(gauss_r1):
    p, grid, g = gauss_r1
    sd = takagi_biphoton(g.S)
    expected = np.sinh(gaussian_zeta(p, np.arange(8)))
    assert np.allclose(sd.coefficients[:8], expected, rtol=1e-6)
    for n in range(6):
        assert abs(inner_product(sd.modes[n], gaussian_mode(p, n, grid))) > 0.999
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = decompose(g, 8)
    assert np.allclose(np.arcsinh(sd.coefficients[:8]), d.zetas, atol=p.N)


# diagnostics


def test_time_reversal_gaussian(gauss_r1):
    p, grid, _ = gauss_r1
    d = gaussian_decomposition(p, grid, 8)
    assert np.max(time_reversal_check(d)) < 1e-8
    assert np.max(parity_defects(d)) < 1e-12


def test_time_reversal_detects_mismatch():
    grid = make_grid(2.0, 1.0, 64)
    f = SpectralAmplitude(grid, np.exp(-((grid.offsets * 8) ** 2))).normalized()
    h = SpectralAmplitude(grid, f.values * np.exp(3j * grid.offsets**2 * 20)).normalized()
    d = SqueezerDecomposition([0.1], [f], [h])
    assert time_reversal_check(d)[0] > 0.1


def test_parity_defect_of_shifted_mode():
    grid = make_grid(2.0, 1.0, 64)
    f = SpectralAmplitude(grid, np.exp(-(((grid.offsets - 0.05) * 8) ** 2))).normalized()
    d = SqueezerDecomposition([0.1], [f], [f])
    assert parity_defects(d)[0] > 0.05


@pytest.mark.parametrize("r", [0.5, 1.0, 1.5, 2.0])
def test_mode_count_grows_with_r(r):
    def count(rr):
        p = GaussianModelParams.from_r(rr, 20.0, 0.01, OMEGA_P)
        z = gaussian_zeta(p, np.arange(500))
        return int(np.sum(z > 1e-3 * z[0]))

    assert count(r + 0.5) > count(r)


def test_mode_count_grows_numerically():
    counts = []
    for r in (0.5, 1.0):
        p = GaussianModelParams.from_r(r, 20.0, 1e-4, OMEGA_P)
        grid = p.default_grid(256)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            d = decompose(gaussian_kernels(p, grid), 60)
        counts.append(int(np.sum(d.zetas > 1e-3 * d.zetas[0])))
    assert counts[1] > counts[0]


# scaling


def gaussian_runs(strengths, n_modes=6):
    runs = []
    for s in strengths:
        p = GaussianModelParams.from_r(1.0, 20.0, 1e-12 * s**2, OMEGA_P)
        runs.append((s, gaussian_decomposition(p, p.default_grid(128), n_modes)))
    return runs


def test_scaling_exact_for_gaussian_model():
    rep = squeezing_lengths(gaussian_runs([1.0, 2.0, 3.0]))
    assert np.max(rep.spread) < 1e-10
    assert rep.decreasing and rep.valid


def test_scaling_needs_three_runs():
    with pytest.raises(ValueError):
        squeezing_lengths(gaussian_runs([1.0, 2.0]))
    with pytest.raises(ValueError):
        squeezing_lengths(gaussian_runs([1.0, 1.0, 2.0]))


def test_scaling_rejects_mixed_setups():
    runs = gaussian_runs([1.0, 2.0, 3.0])
    s, d = runs[2]
    other = SqueezerDecomposition(d.zetas, d.output_modes, d.input_modes, metadata={"setup": {"a": 2}})
    first = SqueezerDecomposition(runs[0][1].zetas, runs[0][1].output_modes, runs[0][1].input_modes,
                                  metadata={"setup": {"a": 1}})
    with pytest.raises(ValueError):
        squeezing_lengths([(runs[0][0], first), runs[1], (s, other)])
    p = GaussianModelParams.from_r(1.0, 20.0, 1e-12, OMEGA_P)
    odd_grid = gaussian_decomposition(p, p.default_grid(130), 6)
    with pytest.raises(GridMismatchError):
        squeezing_lengths([runs[0], runs[1], (4.0, odd_grid)])


def test_scaling_flags_out_of_range():
    rep = squeezing_lengths(gaussian_runs([1.0, 2.0, 30.0]))
    assert not rep.valid
