"""Doubly-selective Rayleigh channel generation.

WSSUS tapped-delay-line fading with a Jakes Doppler spectrum over COST-207
style power-delay profiles, plus construction of the frequency-domain
channel matrix that couples subcarriers through intercarrier interference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import RngStream

SPEED_OF_LIGHT = 2.998e8

# COST-207 reduced 6-tap profiles: (delay in microseconds, mean power in dB).
_COST207_TABLES = {
    "TU6": [
        (0.0, -3.0),
        (0.2, 0.0),
        (0.5, -2.0),
        (1.6, -6.0),
        (2.3, -8.0),
        (5.0, -10.0),
    ],
    "BU6": [
        (0.0, -2.5),
        (0.3, 0.0),
        (1.0, -3.0),
        (1.6, -5.0),
        (5.0, -2.0),
        (6.6, -4.0),
    ],
}


@dataclass(frozen=True)
class PowerDelayProfile:
    """Tapped-delay-line profile: integer sample delays and linear powers.

    Powers are normalized to sum to one so the total channel power is unity.
    """

    name: str
    delays: tuple  # integer sample delays, distinct, non-negative
    powers: tuple  # linear powers, sum to 1

    def __post_init__(self):
        if len(self.delays) != len(self.powers) or not self.delays:
            raise ValueError("delays and powers must be non-empty and matched")
        if any(d < 0 or d != int(d) for d in self.delays):
            raise ValueError("delays must be non-negative integers")
        if len(set(self.delays)) != len(self.delays):
            raise ValueError("delays must be distinct")
        if any(p <= 0 for p in self.powers):
            raise ValueError("tap powers must be positive")
        if abs(sum(self.powers) - 1.0) > 1e-9:
            raise ValueError("tap powers must sum to 1")

    @property
    def num_taps(self):
        return len(self.delays)

    @property
    def max_delay(self):
        return max(self.delays)

    @classmethod
    def from_taps(cls, name, delays_ns, powers_linear, sample_rate_hz):
        """Round physical delays to samples and renormalize powers.

        Taps that round to the same sample delay are merged (powers added).
        """
        samples = {}
        for d_ns, p in zip(delays_ns, powers_linear):
            m = int(round(d_ns * 1e-9 * sample_rate_hz))
            samples[m] = samples.get(m, 0.0) + float(p)
        total = sum(samples.values())
        delays = tuple(sorted(samples))
        powers = tuple(samples[d] / total for d in delays)
        return cls(name=name, delays=delays, powers=powers)

    @classmethod
    def builtin(cls, name, sample_rate_hz):
        """One of the named COST-207 reduced profiles ('TU6' or 'BU6')."""
        key = name.upper()
        if key not in _COST207_TABLES:
            raise KeyError(f"unknown profile {name!r}; have {sorted(_COST207_TABLES)}")
        taps = _COST207_TABLES[key]
        delays_ns = [1e3 * d_us for d_us, _ in taps]
        powers = [10.0 ** (p_db / 10.0) for _, p_db in taps]
        return cls.from_taps(key, delays_ns, powers, sample_rate_hz)

    @classmethod
    def from_file(cls, path, sample_rate_hz, name=None):
        """Load `delay_ns power_linear` pairs, one per line ('#' comments)."""
        delays_ns, powers = [], []
        with open(path) as f:
            for line in f:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                d, p = line.split()
                delays_ns.append(float(d))
                powers.append(float(p))
        return cls.from_taps(name or str(path), delays_ns, powers, sample_rate_hz)


@dataclass(frozen=True)
class DopplerSpec:
    """Maximum Doppler frequency and the sampling period it applies to."""

    fd_hz: float
    sample_period_s: float

    def __post_init__(self):
        if self.fd_hz < 0:
            raise ValueError("Doppler frequency must be non-negative")
        if self.sample_period_s <= 0:
            raise ValueError("sample period must be positive")
        if self.fd_norm >= 0.5:
            raise ValueError("normalized Doppler must be below 0.5")

    @property
    def fd_norm(self):
        """Doppler per sample, f_d * T_s."""
        return self.fd_hz * self.sample_period_s

    @classmethod
    def from_speed(cls, speed_kmh, carrier_hz, sample_period_s):
        fd = (speed_kmh / 3.6) * carrier_hz / SPEED_OF_LIGHT
        return cls(fd_hz=fd, sample_period_s=sample_period_s)


@dataclass
class ChannelRealization:
    """Per-sample, per-tap fading coefficients h(m, l) for one block."""

    coeffs: np.ndarray  # shape (num_samples, num_taps)
    pdp: PowerDelayProfile
    doppler: DopplerSpec

    @property
    def num_samples(self):
        return self.coeffs.shape[0]

    @property
    def delays(self):
        return self.pdp.delays


def generate_realization(
    pdp: PowerDelayProfile,
    dop: DopplerSpec,
    num_samples: int,
    rng,
    num_sinusoids: int = 48,
) -> ChannelRealization:
    """Draw one WSSUS fading realization with Jakes tap statistics.

    Each tap is a sum of ``num_sinusoids`` random-phase sinusoids with
    Doppler shifts fd*cos(alpha), alpha uniform; over the ensemble this
    gives the exact autocorrelation sigma^2 * J0(2 pi fd Ts dm) per tap and
    independent taps.  With fd = 0 every tap is constant over the block.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be positive")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    L = pdp.num_taps
    m = np.arange(num_samples)
    alpha = gen.uniform(0.0, 2 * np.pi, size=(L, num_sinusoids))
    phi = gen.uniform(0.0, 2 * np.pi, size=(L, num_sinusoids))
    omega = 2 * np.pi * dop.fd_norm * np.cos(alpha)  # rad per sample
    # coeffs[m, l] = sqrt(p_l / S) * sum_p exp(j (omega_lp * m + phi_lp))
    phase = omega[:, :, None] * m[None, None, :] + phi[:, :, None]
    h = np.exp(1j * phase).sum(axis=1) / np.sqrt(num_sinusoids)
    h *= np.sqrt(np.asarray(pdp.powers))[:, None]
    return ChannelRealization(coeffs=h.T.copy(), pdp=pdp, doppler=dop)


def transfer_function(ch: ChannelRealization, n_fft: int, offset=None):
    """Time-varying transfer function H(k, m) over the data-bearing samples.

    H(k, m) = sum_l h(offset + m, l) exp(-j 2 pi d_l k / N) with the
    un-normalized DFT kernel over the tap delays.  ``offset`` defaults to
    the last n_fft samples of the realization (i.e. after the prefix).
    """
    if ch.num_samples < n_fft:
        raise ValueError("realization shorter than the FFT window")
    if offset is None:
        offset = ch.num_samples - n_fft
    h = ch.coeffs[offset : offset + n_fft]  # (n_fft, L)
    delays = np.asarray(ch.delays)
    kern = np.exp(-2j * np.pi * np.outer(np.arange(n_fft), delays) / n_fft)  # (N, L)
    return kern @ h.T  # H[k, m]


def freq_channel_matrix(ch: ChannelRealization, n_fft: int, offset=None):
    """Subcarrier-coupling matrix G with G(k, i) = (1/N) sum_m H(i, m) e^{j2pi m(i-k)/N}.

    Computed via one FFT across time per column; agrees with the direct
    double sum to machine precision.
    """
    H = transfer_function(ch, n_fft, offset=offset)  # H[i, m]
    n = n_fft
    m = np.arange(n)
    # a_i(m) = H(i, m) e^{j 2 pi m i / N};  G(k, i) = (1/N) DFT_m{a_i}(k)
    a = H * np.exp(2j * np.pi * np.outer(np.arange(n), m) / n)
    return np.fft.fft(a, axis=1).T / n


def freq_channel_matrix_direct(ch: ChannelRealization, n_fft: int, offset=None):
    """Direct double-sum evaluation of the coupling matrix (slow oracle)."""
    H = transfer_function(ch, n_fft, offset=offset)
    n = n_fft
    g = np.zeros((n, n), dtype=np.complex128)
    m = np.arange(n)
    for k in range(n):
        for i in range(n):
            g[k, i] = np.sum(H[i, :] * np.exp(2j * np.pi * m * (i - k) / n)) / n
    return g
