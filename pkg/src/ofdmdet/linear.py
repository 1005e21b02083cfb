"""Baseline detectors: matched filter, zero forcing, MMSE, SINR-ordered
successive MMSE (VBLAST style), and exhaustive exact-MAP for small blocks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from .numerics import OpCounters
from .ofdm import Constellation

_COND_LIMIT = 1e12
_ENUM_CAP = 2**24


class DetectionError(RuntimeError):
    """Raised when a detector cannot produce decisions (e.g. singular G'G)."""


@dataclass
class DetectorOutput:
    symbols: np.ndarray
    posteriors: np.ndarray | None = None
    ops: OpCounters = field(default_factory=OpCounters)

    @property
    def n(self):
        return self.symbols.size


def quantize(x, c: Constellation):
    """Nearest constellation point; ties resolve to the lowest point index."""
    idx = c.nearest_index(x)
    return c.points[idx]


def _linear_solve_ops(n, counters):
    # Hermitian solve via Cholesky: ~n^3/3 multiplies plus two triangular
    # sweeps; the constant is what matters for the complexity report.
    counters.add(cmul=n**3 // 3 + n**2, cadd=n**3 // 3 + n**2)


def mf(Y, g, noise_var, c: Constellation | None = None) -> DetectorOutput:
    """Matched filter: quantize(G' Y)."""
    c = c or Constellation.bpsk()
    ops = OpCounters()
    n = g.shape[0]
    z = g.conj().T @ Y
    ops.add_matvec(n, n)
    return DetectorOutput(symbols=quantize(z, c), ops=ops)


def _gram(g, ops):
    n = g.shape[0]
    ops.add(cmul=n * n * (n + 1) // 2, cadd=n * (n - 1) * (n + 1) // 2)
    return g.conj().T @ g


def zf(Y, g, noise_var, c: Constellation | None = None) -> DetectorOutput:
    """Zero forcing: quantize((G'G)^-1 G' Y) via a stable factorization."""
    c = c or Constellation.bpsk()
    ops = OpCounters()
    n = g.shape[0]
    gram = _gram(g, ops)
    if np.linalg.cond(gram) > _COND_LIMIT:
        raise DetectionError("zero forcing: G'G is numerically singular")
    rhs = g.conj().T @ Y
    ops.add_matvec(n, n)
    try:
        z = scipy.linalg.solve(gram, rhs, assume_a="pos")
    except np.linalg.LinAlgError as e:  # pragma: no cover - cond check first
        raise DetectionError(f"zero forcing solve failed: {e}") from e
    _linear_solve_ops(n, ops)
    return DetectorOutput(symbols=quantize(z, c), ops=ops)


def mmse(Y, g, noise_var, c: Constellation | None = None) -> DetectorOutput:
    """MMSE: quantize((G'G + sigma^2 I)^-1 G' Y)."""
    c = c or Constellation.bpsk()
    ops = OpCounters()
    n = g.shape[0]
    gram = _gram(g, ops) + noise_var * np.eye(n)
    rhs = g.conj().T @ Y
    ops.add_matvec(n, n)
    z = scipy.linalg.solve(gram, rhs, assume_a="pos")
    _linear_solve_ops(n, ops)
    return DetectorOutput(symbols=quantize(z, c), ops=ops)


def mmse_filter_output(Y, g, noise_var):
    """Pre-quantization MMSE estimate, exposed for convergence tests."""
    n = g.shape[0]
    gram = g.conj().T @ g + noise_var * np.eye(n)
    return scipy.linalg.solve(gram, g.conj().T @ Y, assume_a="pos")


def mmse_sinr(g, noise_var):
    """Post-detection SINR of per-symbol MMSE, one value per column.

    SINR_k = 1 / (sigma^2 [(G'G + sigma^2 I)^-1]_kk) - 1 for sigma^2 > 0;
    for the noiseless limit the pseudo-inverse diagonal is used as the
    (inverse) reliability measure.
    """
    m = g.shape[1]
    gram = g.conj().T @ g + noise_var * np.eye(m)
    inv = np.linalg.inv(gram) if noise_var > 0 else np.linalg.pinv(gram)
    d = np.real(np.diagonal(inv))
    if noise_var > 0:
        return 1.0 / (noise_var * d) - 1.0
    return 1.0 / d


def vblast_mmse_sd(Y, g, noise_var, c: Constellation | None = None) -> DetectorOutput:
    """Successive MMSE detection with per-stage SINR ordering.

    Each stage detects the most reliable remaining symbol, subtracts its
    contribution and deflates the system by that column.
    """
    c = c or Constellation.bpsk()
    ops = OpCounters()
    n = g.shape[0]
    remaining = list(range(n))
    resid = np.array(Y, dtype=np.complex128)
    work = np.array(g, dtype=np.complex128)
    decisions = np.zeros(n, dtype=np.complex128)
    for _ in range(n):
        sub = work[:, remaining]
        m = len(remaining)
        sinr = mmse_sinr(sub, noise_var)
        ops.add(cmul=m**3 + m * m, cadd=m**3 + m * m)
        best = int(np.argmax(sinr))
        gram = sub.conj().T @ sub + noise_var * np.eye(m)
        z = scipy.linalg.solve(gram, sub.conj().T @ resid, assume_a="pos")
        ops.add_matvec(m, n)
        _linear_solve_ops(m, ops)
        k = remaining[best]
        decisions[k] = quantize(z[best], c)[0]
        resid = resid - work[:, k] * decisions[k]
        ops.add_axpy(n)
        remaining.pop(best)
    return DetectorOutput(symbols=decisions, ops=ops)


def exact_map(Y, g, noise_var, c: Constellation | None = None) -> DetectorOutput:
    """Exhaustive per-symbol MAP with calibrated posteriors.

    Enumerates every symbol vector, scores exp(-||Y - G s||^2 / sigma^2)
    and marginalizes.  Decisions are per-symbol posterior argmax, BPSK ties
    resolving to +1.
    """
    c = c or Constellation.bpsk()
    Y = np.asarray(Y, dtype=np.complex128)
    g = np.asarray(g, dtype=np.complex128)
    n = g.shape[1]
    card = c.points.size
    if card**n > _ENUM_CAP:
        raise DetectionError(f"enumeration of {card}**{n} states exceeds the cap")
    idx = np.indices((card,) * n).reshape(n, -1).T  # (card^n, n)
    states = c.points[idx]
    resid = Y[None, :] - states @ g.T
    if noise_var <= 0:
        raise ValueError("exact MAP requires positive noise variance")
    loglik = -np.sum(np.abs(resid) ** 2, axis=1) / noise_var
    # per-symbol, per-point marginals in the log domain
    post = np.zeros((n, card))
    for k in range(n):
        for a in range(card):
            post[k, a] = logsumexp(loglik[idx[:, k] == a])
    post -= logsumexp(loglik)
    post = np.exp(post)
    best = np.argmax(post, axis=1)  # argmax breaks ties toward low index
    out = DetectorOutput(symbols=c.points[best], posteriors=post)
    return out
