import numpy as np
import pytest

from ofdmdet.linear import (
    DetectionError,
    exact_map,
    mf,
    mmse,
    mmse_filter_output,
    mmse_sinr,
    quantize,
    vblast_mmse_sd,
    zf,
)
from ofdmdet.numerics import band
from ofdmdet.ofdm import Constellation

BPSK = Constellation.bpsk()


def _random_banded(rng, n, q):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return band(g / np.sqrt(n), q).toarray()


class TestQuantize:
    def test_positive_real(self):
        assert quantize(0.3, BPSK)[0] == 1.0

    def test_real_part_sign(self):
        assert quantize(-2 + 5j, BPSK)[0] == -1.0

    def test_tie_breaks_to_lowest_index(self):
        assert quantize(0.0, BPSK)[0] == 1.0


class TestLinearDetectors:
    def test_identity_channel_mmse_equals_mf(self):
        rng = np.random.default_rng(0)
        Y = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        g = np.eye(16)
        for nv in (0.1, 1.0, 10.0):
            assert np.array_equal(mmse(Y, g, nv).symbols, mf(Y, g, nv).symbols)

    def test_diagonal_positive_noiseless_all_recover(self):
        rng = np.random.default_rng(1)
        s = rng.choice([1.0, -1.0], 12)
        g = np.diag(rng.uniform(0.5, 2.0, 12)).astype(complex)
        Y = g @ s
        for det in (mf, zf, mmse):
            assert np.array_equal(det(Y, g, 1e-3).symbols, s)

    def test_zf_noiseless_exact(self):
        rng = np.random.default_rng(2)
        g = _random_banded(rng, 8, 2)
        s = rng.choice([1.0, -1.0], 8)
        z = np.linalg.solve(g.conj().T @ g, g.conj().T @ (g @ s))
        assert np.max(np.abs(z - s)) < 1e-8
        assert np.array_equal(zf(g @ s, g, 0.0).symbols, s)

    def test_zf_singular_raises(self):
        g = np.zeros((4, 4), dtype=complex)
        g[0, 0] = 1.0
        with pytest.raises(DetectionError):
            zf(np.ones(4), g, 0.1)

    def test_mmse_approaches_zf_at_low_noise(self):
        rng = np.random.default_rng(3)
        g = _random_banded(rng, 10, 3) + np.eye(10)
        Y = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        z_zf = np.linalg.solve(g.conj().T @ g, g.conj().T @ Y)
        z_mmse = mmse_filter_output(Y, g, 1e-12)
        assert np.linalg.norm(z_mmse - z_zf) / np.linalg.norm(z_zf) < 1e-6

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(4)
        n = 10
        g = _random_banded(rng, n, n // 2 - 1) + np.eye(n)
        s = rng.choice([1.0, -1.0], n)
        Y = g @ s + 0.1 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        perm = rng.permutation(n)
        gp = g[np.ix_(perm, perm)]
        Yp = Y[perm]
        for det in (mf, zf, mmse, vblast_mmse_sd):
            base = det(Y, g, 0.2).symbols
            permuted = det(Yp, gp, 0.2).symbols
            assert np.array_equal(permuted, base[perm]), det.__name__


class TestVblast:
    def test_diagonal_matches_mmse(self):
        rng = np.random.default_rng(5)
        g = np.diag(rng.uniform(0.3, 2.0, 8)).astype(complex)
        s = rng.choice([1.0, -1.0], 8)
        Y = g @ s + 0.3 * (rng.standard_normal(8) + 1j * rng.standard_normal(8))
        assert np.array_equal(
            vblast_mmse_sd(Y, g, 0.2).symbols, mmse(Y, g, 0.2).symbols
        )

    def test_noiseless_banded_exact_recovery(self):
        rng = np.random.default_rng(6)
        for t in range(10):
            g = _random_banded(rng, 12, 3) + np.eye(12)
            s = rng.choice([1.0, -1.0], 12)
            assert np.array_equal(vblast_mmse_sd(g @ s, g, 0.0).symbols, s)

    def test_first_detection_is_max_sinr(self):
        rng = np.random.default_rng(7)
        g = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        nv = 0.5
        # independent direct SINR: filter row w_k of the MMSE matrix
        w = np.linalg.inv(g.conj().T @ g + nv * np.eye(8)) @ g.conj().T
        direct = np.zeros(8)
        for k in range(8):
            sig = np.abs(w[k] @ g[:, k]) ** 2
            interf = sum(np.abs(w[k] @ g[:, i]) ** 2 for i in range(8) if i != k)
            direct[k] = sig / (interf + nv * np.linalg.norm(w[k]) ** 2)
        assert np.argmax(mmse_sinr(g, nv)) == np.argmax(direct)
        assert np.allclose(mmse_sinr(g, nv), direct, rtol=1e-8)


class TestExactMap:
    def test_single_symbol_closed_form(self):
        rng = np.random.default_rng(8)
        g = np.array([[0.8 - 0.3j]])
        nv = 0.4
        for t in range(5):
            Y = np.array([rng.standard_normal() + 1j * rng.standard_normal()])
            out = exact_map(Y, g, nv)
            expected = 1.0 / (1.0 + np.exp(-(4.0 / nv) * np.real(np.conj(g[0, 0]) * Y[0])))
            assert out.posteriors[0, 0] == pytest.approx(expected, abs=1e-12)

    def test_high_noise_flattens_posteriors(self):
        rng = np.random.default_rng(9)
        g = _random_banded(rng, 4, 1)
        Y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        out = exact_map(Y, g, 1e6)
        assert np.allclose(out.posteriors, 0.5, atol=1e-3)

    def test_marginals_match_independent_enumeration(self):
        rng = np.random.default_rng(10)
        n = 4
        g = _random_banded(rng, n, 1) + np.eye(n)
        s = rng.choice([1.0, -1.0], n)
        nv = 0.5
        Y = g @ s + np.sqrt(nv / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        out = exact_map(Y, g, nv)
        # brute force in the opposite enumeration order, plain probabilities
        num = np.zeros(n)
        den = np.zeros(n)
        for code in range(2**n):
            v = np.array([1.0 if (code >> (n - 1 - k)) & 1 == 0 else -1.0
                          for k in range(n)])[::-1]
            wgt = np.exp(-np.sum(np.abs(Y - g @ v) ** 2) / nv)
            for k in range(n):
                den[k] += wgt
                if v[k] == 1.0:
                    num[k] += wgt
        assert np.allclose(out.posteriors[:, 0], num / den, atol=1e-10)

    def test_posterior_normalization(self):
        rng = np.random.default_rng(11)
        g = _random_banded(rng, 6, 2)
        Y = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        out = exact_map(Y, g, 0.7)
        assert np.allclose(out.posteriors.sum(axis=1), 1.0, atol=1e-12)

    def test_enumeration_cap(self):
        g = np.eye(30, dtype=complex)
        with pytest.raises(DetectionError):
            exact_map(np.ones(30), g, 1.0)
