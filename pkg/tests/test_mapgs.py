import numpy as np
import pytest


from ofdmdet import ofdm
from ofdmdet.linear import exact_map, mf
from ofdmdet.mapgs import (
    GibbsConfig,
    SubProblem,
    build_subproblem,
    cancel_detected,
    complexity_bound,
    detect,
    gibbs_posterior,
    llr,
    subproblem_windows,
)
from ofdmdet.numerics import OpCounters, RngStream, band

BPSK = ofdm.Constellation.bpsk()


def _random_banded(seed, n, q, scale=None):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return band(g / (scale or np.sqrt(2 * q + 1)), q)


def _observed(seed, gb, noise_var):
    rng = np.random.default_rng(seed + 1000)
    n = gb.n
    s = rng.choice([1.0, -1.0], n)
    w = np.sqrt(noise_var / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return s, gb.toarray() @ s + w


def _free_subproblem(seed, d, noise_var, rows=None):
    """A standalone active block with no detected predecessors."""
    rng = np.random.default_rng(seed)
    rows = rows or d
    g = (rng.standard_normal((rows, d)) + 1j * rng.standard_normal((rows, d)))
    g /= np.sqrt(rows)
    s = rng.choice([1.0, -1.0], d)
    w = np.sqrt(noise_var / 2) * (rng.standard_normal(rows) + 1j * rng.standard_normal(rows))
    sub = SubProblem(k=0, q=(d - 1) // 2, row_lo=0, row_hi=rows - 1,
                     col_lo=0, col_hi=d - 1, y=g @ s + w, mat=g)
    return cancel_detected(sub, []), s


def _channel_banded(seed, n, q, fd_symbol=0.3):
    """An exactly banded coupling matrix drawn from the fading model."""
    cp = 2 * n
    pdp = chan.PowerDelayProfile("t2", (0, 1), (0.7, 0.3))
    ts = 0.2e-6
    dop = chan.DopplerSpec(fd_symbol / ((n + cp) * ts), ts)
    real = chan.generate_realization(pdp, dop, n + cp, RngStream(seed, (77,)))
    return band(chan.freq_channel_matrix(real, n), q)


def _channel_subproblem(seed, k, q, noise_var):
    """A mid-block sub-problem from an end-to-end simulated frame."""
    n = 16
    gb = _channel_banded(seed, n, q)
    rng = np.random.default_rng(seed)
    s = rng.choice([1.0, -1.0], n)
    w = np.sqrt(noise_var / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    Y = gb.toarray() @ s + w
    sub = build_subproblem(k, q, Y, gb)
    cancel_detected(sub, list(s[:k]) + [None] * (n - k))
    return sub, s


class TestWindows:
    @pytest.mark.parametrize("k,rows,cols", [
        (0, (0, 3), (0, 6)),
        (256, (253, 259), (250, 262)),
        (511, (508, 511), (505, 511)),
    ])
    def test_paper_scale_boundaries(self, k, rows, cols):
        assert subproblem_windows(k, 3, 512) == rows + cols

    def test_window_laws_randomized(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(4, 600))
            q = int(rng.integers(0, max(n // 2 - 1, 1)))
            k = int(rng.integers(0, n))
            rl, rh, cl, ch = subproblem_windows(k, q, n)
            assert rl == max(0, k - q) and rh == min(n - 1, k + q)
            assert cl == max(0, k - 2 * q) and ch == min(n - 1, k + 2 * q)
            assert (rh - rl + 1) <= 2 * q + 1
            assert (ch - cl + 1) <= 4 * q + 1

    def test_max_dimension_attained_mid_block(self):
        n, q = 64, 2
        sub = build_subproblem(n // 2, q, np.zeros(n), _random_banded(1, n, q))
        assert sub.mat.shape == (2 * q + 1, 2 * (2 * q + 1) - 1)

    def test_out_of_range_index(self):
        gb = _random_banded(2, 16, 2)
        with pytest.raises(IndexError):
            build_subproblem(16, 2, np.zeros(16), gb)

    def test_window_entries_match_band(self):
        gb = _random_banded(3, 32, 3)
        dense = gb.toarray()
        sub = build_subproblem(10, 3, np.zeros(32), gb)
        assert np.array_equal(sub.mat, dense[7:14, 4:17])


class TestCancellation:
    def test_k0_no_cancellation(self):
        gb = _random_banded(4, 16, 2)
        s, Y = _observed(4, gb, 0.1)
        sub = cancel_detected(build_subproblem(0, 2, Y, gb), [])
        assert np.array_equal(sub.y_cancelled, sub.y)
        assert np.array_equal(sub.mat_active, sub.mat)

    def test_correct_decisions_noiseless_identity(self):
        gb = _random_banded(5, 24, 2)
        s, Y = _observed(5, gb, 0.0)
        for k in (3, 11, 23):
            sub = build_subproblem(k, 2, Y, gb)
            cancel_detected(sub, list(s))
            resid = sub.y_cancelled - sub.mat_active @ s[k : sub.col_hi + 1]
            assert np.max(np.abs(resid)) < 1e-12

    def test_matches_full_model_restriction(self):
        gb = _random_banded(6, 20, 2)
        dense = gb.toarray()
        s, Y = _observed(6, gb, 0.3)
        decisions = list(np.random.default_rng(6).choice([1.0, -1.0], 20))
        k = 9
        sub = cancel_detected(build_subproblem(k, 2, Y, gb), decisions)
        expect = Y[sub.row_lo : sub.row_hi + 1].copy()
        for j in range(sub.col_lo, k):
            expect -= dense[sub.row_lo : sub.row_hi + 1, j] * decisions[j]
        assert np.allclose(sub.y_cancelled, expect, atol=1e-12)

    def test_missing_decision_raises(self):
        gb = _random_banded(7, 16, 2)
        s, Y = _observed(7, gb, 0.1)
        with pytest.raises(ValueError):
            cancel_detected(build_subproblem(5, 2, Y, gb), [1.0, None, 1.0, 1.0, None])

    def test_column_count_drops_by_detected(self):
        gb = _random_banded(8, 64, 3)
        s, Y = _observed(8, gb, 0.1)
        for k in (0, 2, 17, 63):
            sub = cancel_detected(build_subproblem(k, 3, Y, gb), list(s))
            assert sub.mat.shape[1] - sub.mat_active.shape[1] == k - sub.col_lo


class TestLlr:
    def test_unit_vector_closed_form(self):
        nv = 0.8
        g = np.zeros((3, 2), dtype=complex)
        g[0, 0] = 1.0
        g[1, 1] = 1.0  # orthogonal companion column
        y = np.array([nv / 4.0, 5.0, -2.0], dtype=complex)
        sub = SubProblem(k=0, q=1, row_lo=0, row_hi=2, col_lo=0, col_hi=1,
                         y=y, mat=g)
        cancel_detected(sub, [])
        # residual first entry is nv/4 regardless of the companion symbol
        for companion in (1.0, -1.0):
            lam = llr(0, [1.0, companion], sub, nv)
            assert lam == pytest.approx(1.0)
            assert 1.0 / (1.0 + np.exp(-lam)) == pytest.approx(0.7311, abs=1e-4)

    def test_orthogonal_residual_gives_half(self):
        nv = 0.5
        g = np.array([[1.0], [0.0]], dtype=complex)
        sub = SubProblem(k=0, q=0, row_lo=0, row_hi=1, col_lo=0, col_hi=0,
                         y=np.array([0.0, 3.0], dtype=complex), mat=g)
        cancel_detected(sub, [])
        assert llr(0, [1.0], sub, nv) == pytest.approx(0.0)

    def test_matches_direct_two_likelihood_evaluation(self):
        nv = 0.6
        sub, s = _free_subproblem(12, 2, nv)
        state = np.array([1.0, -1.0])
        for k_local in (0, 1):
            def loglik(v):
                st = state.copy()
                st[k_local] = v
                return -np.sum(np.abs(sub.y_cancelled - sub.mat_active @ st) ** 2) / nv
            assert llr(k_local, state, sub, nv) == pytest.approx(
                loglik(1.0) - loglik(-1.0), abs=1e-10)

    def test_printed_constant_is_quarter_scale(self):
        nv = 0.6
        sub, s = _free_subproblem(13, 3, nv)
        state = np.array([1.0, -1.0, 1.0])
        exact = llr(0, state, sub, nv)
        printed = llr(0, state, sub, nv, printed_constant=True)
        assert printed == pytest.approx(exact / 4.0)

    def test_nonpositive_noise_rejected(self):
        sub, s = _free_subproblem(14, 2, 0.5)
        with pytest.raises(ValueError):
            llr(0, [1.0, 1.0], sub, 0.0)


class TestGibbsPosterior:
    def test_scalar_subproblem_exact_sigmoid(self):
        nv = 0.7
        sub, s = _free_subproblem(15, 1, nv)
        for iters in (2, 50):
            cfg = GibbsConfig(n_iters=iters, burn_in=1)
            p = gibbs_posterior(sub, nv, cfg, RngStream(0))
            lam = llr(0, [1.0], sub, nv)
            assert p == pytest.approx(1.0 / (1.0 + np.exp(-lam)), abs=1e-12)

    def test_flat_likelihood_gives_half(self):
        nv = 1e6
        sub, s = _free_subproblem(16, 4, 1.0)
        cfg = GibbsConfig(n_iters=110, burn_in=10)
        p = gibbs_posterior(sub, nv, cfg, RngStream(1))
        assert abs(p - 0.5) < 0.02

    def test_matches_enumeration_five_symbols(self):
        nv = ofdm.ebn0_to_noise_var(8.0, BPSK)
        hits = 0
        for t in range(10):
            sub, s = _channel_subproblem(100 + t, k=7, q=2, noise_var=nv)
            assert sub.active_dim == 5
            cfg = GibbsConfig(n_iters=2100, burn_in=100)
            p = gibbs_posterior(sub, nv, cfg, RngStream(t))
            exact = exact_map(sub.y_cancelled, sub.mat_active, nv).posteriors[0, 0]
            if abs(p - exact) <= 0.05:
                hits += 1
        assert hits >= 9

    def test_estimates_in_unit_interval_and_reproducible(self):
        nv = 0.4
        sub, s = _free_subproblem(17, 5, nv)
        cfg = GibbsConfig(n_iters=30, burn_in=10)
        a = gibbs_posterior(sub, nv, cfg, RngStream(5))
        b = gibbs_posterior(sub, nv, cfg, RngStream(5))
        assert a == b
        assert 0.0 <= a <= 1.0

    def test_tv_distance_shrinks_with_samples(self):
        nv = ofdm.ebn0_to_noise_var(6.0, BPSK)
        sub, s = _free_subproblem(18, 5, nv)
        exact = exact_map(sub.y_cancelled, sub.mat_active, nv).posteriors[0, 0]
        med = []
        for n_s in (100, 10000):
            errs = []
            for seed in range(15):
                cfg = GibbsConfig(n_iters=n_s + 10, burn_in=10)
                errs.append(abs(gibbs_posterior(sub, nv, cfg, RngStream(seed)) - exact))
            med.append(np.median(errs))
        assert med[1] <= med[0] + 1e-3


class TestDetect:
    def test_diagonal_band_matches_matched_filter(self):
        rng = np.random.default_rng(20)
        n = 32
        g = np.diag(rng.uniform(0.4, 1.5, n)).astype(complex)
        gb = band(g, 0)
        s = rng.choice([1.0, -1.0], n)
        Y = g @ s + 0.4 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        out = detect(Y, gb, 0.32, GibbsConfig(), RngStream(2))
        assert np.array_equal(out.symbols, mf(Y, g, 0.32).symbols)

    def test_noiseless_banded_recovery(self):
        ok = 0
        trials = 30
        for t in range(trials):
            gb = _channel_banded(300 + t, 16, 2)
            rng = np.random.default_rng(300 + t)
            s = rng.choice([1.0, -1.0], 16)
            Y = gb.toarray() @ s
            cfg = GibbsConfig(n_iters=210, burn_in=10)
            out = detect(Y, gb, 1e-4, cfg, RngStream(t))
            if np.array_equal(np.real(out.symbols), s):
                ok += 1
        assert ok >= trials - 1

    def test_bit_reproducible(self):
        gb = _random_banded(21, 64, 3)
        s, Y = _observed(21, gb, 0.05)
        a = detect(Y, gb, 0.05, GibbsConfig(), RngStream(9))
        b = detect(Y, gb, 0.05, GibbsConfig(), RngStream(9))
        assert np.array_equal(a.symbols, b.symbols)
        assert np.array_equal(a.posteriors, b.posteriors)
        assert (a.ops.cmul, a.ops.cadd) == (b.ops.cmul, b.ops.cadd)

    def test_posteriors_in_unit_interval(self):
        gb = _random_banded(22, 48, 2)
        s, Y = _observed(22, gb, 0.2)
        out = detect(Y, gb, 0.2, GibbsConfig(), RngStream(3))
        assert np.all(out.posteriors >= 0.0) and np.all(out.posteriors <= 1.0)

    @pytest.mark.parametrize("n,q,iters,burn", [
        (64, 2, 30, 10),
        (64, 3, 20, 0),
        (128, 1, 25, 5),
        (32, 4, 50, 10),
    ])
    def test_counter_bound(self, n, q, iters, burn):
        gb = _random_banded(n + q, n, q)
        s, Y = _observed(n + q, gb, 0.1)
        cfg = GibbsConfig(n_iters=iters, burn_in=burn)
        out = detect(Y, gb, 0.1, cfg, RngStream(0))
        assert out.ops.total <= complexity_bound(n, q, cfg.n_samples)

    def test_bound_value_paper_scale(self):
        assert complexity_bound(512, 3, 20) == 903_168
