"""OFDM transmit/receive chain and the vector observation model.

Bits are mapped to unit-energy symbols, carried through an inverse unitary
DFT with a cyclic prefix, convolved with a time-varying channel, and
transformed back.  For a noiseless block the end-to-end chain equals the
matrix model Y = G s, which the tests use as a cross-path oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .numerics import DimensionError, RngStream, complex_gaussian, dft


class Constellation:
    """Ordered constellation with a bijective bit mapping, E{|s|^2} = 1."""

    def __init__(self, name, points, bits_per_symbol):
        self.name = name
        self.points = np.asarray(points, dtype=np.complex128)
        self.bits_per_symbol = int(bits_per_symbol)
        if self.points.size != 2**self.bits_per_symbol:
            raise ValueError("constellation size must be 2**bits_per_symbol")
        avg = np.mean(np.abs(self.points) ** 2)
        if abs(avg - 1.0) > 1e-9:
            raise ValueError("constellation must have unit average energy")

    @classmethod
    def bpsk(cls):
        # bit 0 -> +1, bit 1 -> -1
        return cls("bpsk", [1.0, -1.0], 1)

    def map_bits(self, bits):
        bits = np.asarray(bits, dtype=np.int64)
        if bits.size % self.bits_per_symbol:
            raise DimensionError("bit count not a multiple of bits per symbol")
        groups = bits.reshape(-1, self.bits_per_symbol)
        idx = groups @ (1 << np.arange(self.bits_per_symbol - 1, -1, -1))
        return self.points[idx]

    def demap(self, symbols):
        idx = self.nearest_index(symbols)
        width = self.bits_per_symbol
        out = ((idx[:, None] >> np.arange(width - 1, -1, -1)) & 1).ravel()
        return out.astype(np.int64)

    def nearest_index(self, symbols):
        """Index of the nearest point; ties break toward the lowest index."""
        symbols = np.atleast_1d(np.asarray(symbols, dtype=np.complex128))
        d = np.abs(symbols[:, None] - self.points[None, :])
        return np.argmin(d, axis=1)


@dataclass(frozen=True)
class OfdmConfig:
    """Block geometry: N subcarriers, cyclic prefix, sample rate."""

    n: int
    cp: int
    bandwidth_hz: float = 5e6

    def __post_init__(self):
        if self.n < 1 or (self.n & (self.n - 1)):
            raise ValueError("subcarrier count must be a power of two")
        if self.cp < 0:
            raise ValueError("cyclic prefix length must be non-negative")

    @property
    def block_len(self):
        return self.n + self.cp

    @property
    def sample_period(self):
        return 1.0 / self.bandwidth_hz

    @property
    def subcarrier_spacing(self):
        return self.bandwidth_hz / self.n


def transmit(s, cfg: OfdmConfig):
    """Inverse unitary DFT plus cyclic prefix: length N in, length P out."""
    s = np.asarray(s, dtype=np.complex128)
    if s.size != cfg.n:
        raise DimensionError(f"expected {cfg.n} symbols, got {s.size}")
    x = dft(s, "inverse")
    if cfg.cp == 0:
        return x
    return np.concatenate([x[-cfg.cp :], x])


def apply_channel(d, ch: ChannelRealization, noise_var, rng):
    """Time-varying tapped-delay-line convolution plus AWGN.

    y(m) = sum_l h(m, l) d(m - d_l) + w(m) over the full P-sample block;
    samples before the block start read as zero (the prefix absorbs them
    before the FFT window).
    """
    d = np.asarray(d, dtype=np.complex128)
    p = d.size
    if ch.num_samples < p:
        raise DimensionError("channel realization shorter than the block")
    if ch.pdp.max_delay >= max(p, 1):
        raise ValueError("tap delay exceeds the block length")
    y = np.zeros(p, dtype=np.complex128)
    for l, delay in enumerate(ch.delays):
        y[delay:] += ch.coeffs[delay:p, l] * d[: p - delay]
    if noise_var > 0:
        y = y + complex_gaussian(rng, p, noise_var)
    return y


def receive(y, cfg: OfdmConfig):
    """Strip the prefix and apply the unitary forward DFT."""
    y = np.asarray(y, dtype=np.complex128)
    if y.size != cfg.block_len:
        raise DimensionError(f"expected block of {cfg.block_len} samples")
    return dft(y[cfg.cp :], "forward")


def ici_term(Y, s, g, W=None):
    """Residual interference I(k) = Y(k) - s(k) G(k,k) - W(k)."""
    Y = np.asarray(Y)
    s = np.asarray(s)
    out = Y - s * np.diagonal(g)
    if W is not None:
        out = out - np.asarray(W)
    return out


def ebn0_to_noise_var(ebn0_db, constellation: Constellation):
    """Noise variance for a unit-energy constellation over a unit-power channel.

    Eb/N0 = 1 / (sigma_w^2 * bits_per_symbol); the cyclic prefix overhead is
    not charged against Eb.
    """
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    return 1.0 / (ebn0 * constellation.bits_per_symbol)
