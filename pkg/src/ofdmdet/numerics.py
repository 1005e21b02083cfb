"""Shared numerical primitives: unitary DFT, banded matrices, seeded RNG
streams and complex-operation counting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Raised when operand dimensions do not conform."""


def dft(x, direction="forward"):
    """Unitary DFT of a 1-D complex vector.

    Both directions carry the 1/sqrt(N) factor, so the transform preserves
    the l2 norm and ``dft(dft(x), 'inverse') == x``.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1 or x.size == 0:
        raise DimensionError("dft expects a non-empty 1-D vector")
    n = x.size
    if direction == "forward":
        return np.fft.fft(x) / np.sqrt(n)
    if direction == "inverse":
        return np.fft.ifft(x) * np.sqrt(n)
    raise ValueError(f"unknown direction {direction!r}")


@dataclass
class RngStream:
    """Reproducible random stream addressed by (seed, path).

    The same (seed, path) always yields the same sample sequence; distinct
    paths give streams that are independent for simulation purposes.  Use
    :meth:`substream` to derive child streams for parallel work.
    """

    seed: int
    path: tuple = ()

    def substream(self, *ids) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.default_rng(ss)


def complex_gaussian(rng, n, variance):
    """n i.i.d. circularly-symmetric complex Gaussian samples.

    Each of the real and imaginary parts has variance ``variance / 2`` so
    that E{|w|^2} = variance.  ``rng`` is an RngStream or numpy Generator.
    """
    if variance < 0:
        raise ValueError("variance must be non-negative")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    w = gen.standard_normal(n) + 1j * gen.standard_normal(n)
    return w * np.sqrt(variance / 2.0)


@dataclass
class OpCounters:
    """Complex-multiply / complex-add counters for one counting scope.

    Real-valued additions are folded in at half weight (one complex add is
    two real adds); scalar exponential evaluations count as one complex
    multiply equivalent.
    """

    cmul: int = 0
    cadd: int = 0
    _real_adds: int = field(default=0, repr=False)

    def reset(self):
        self.cmul = 0
        self.cadd = 0
        self._real_adds = 0

    def add(self, cmul=0, cadd=0):
        if cmul < 0 or cadd < 0:
            raise ValueError("counters are monotone within a scope")
        self.cmul += int(cmul)
        self.cadd += int(cadd)

    def add_matvec(self, n, m):
        """Dense n-by-m matrix times length-m vector."""
        self.add(cmul=n * m, cadd=n * (m - 1))

    def add_dot(self, n):
        """Inner product of two length-n complex vectors."""
        if n > 0:
            self.add(cmul=n, cadd=n - 1)

    def add_axpy(self, n):
        """y += a * x over length-n complex vectors."""
        self.add(cmul=n, cadd=n)

    def add_exp(self, count=1):
        self.add(cmul=count)

    def add_real_adds(self, n):
        self._real_adds += int(n)
        self.cadd += self._real_adds // 2
        self._real_adds %= 2

    def merge(self, other: "OpCounters"):
        self.add(cmul=other.cmul, cadd=other.cadd)

    @property
    def total(self):
        return self.cmul + self.cadd


class BandedMat:
    """Square complex matrix with support on the 2Q+1 central diagonals.

    Only the in-band diagonals are stored.  Entry (k, i) with |k - i| > Q
    reads as exactly zero; there is no cyclic wrap-around, so the corner
    regions are always zero.
    """

    def __init__(self, n, q, diagonals=None):
        if not (0 <= q <= max(n // 2 - 1, 0)):
            raise ValueError(f"half-bandwidth {q} out of range for n={n}")
        self.n = int(n)
        self.q = int(q)
        if diagonals is None:
            diagonals = {
                off: np.zeros(n - abs(off), dtype=np.complex128)
                for off in range(-q, q + 1)
            }
        self._diags = diagonals

    def diagonal(self, offset=0):
        """The stored diagonal at the given offset (positive = above main)."""
        return self._diags[offset]

    def __getitem__(self, idx):
        k, i = idx
        off = i - k
        if abs(off) > self.q:
            return 0j
        return self._diags[off][min(k, i)]

    def toarray(self):
        out = np.zeros((self.n, self.n), dtype=np.complex128)
        for off, d in self._diags.items():
            idx = np.arange(d.size)
            if off >= 0:
                out[idx, idx + off] = d
            else:
                out[idx - off, idx] = d
        return out

    def window(self, rows, cols):
        """Dense copy of the sub-block rows x cols (half-open ranges)."""
        r0, r1 = rows
        c0, c1 = cols
        out = np.zeros((r1 - r0, c1 - c0), dtype=np.complex128)
        for off, d in self._diags.items():
            for k in range(r0, r1):
                i = k + off
                if c0 <= i < c1:
                    out[k - r0, i - c0] = d[min(k, i)]
        return out

    def matvec(self, x, counters: OpCounters | None = None):
        x = np.asarray(x, dtype=np.complex128)
        if x.size != self.n:
            raise DimensionError("banded matvec size mismatch")
        y = np.zeros(self.n, dtype=np.complex128)
        for off, d in self._diags.items():
            m = d.size
            if off >= 0:
                y[:m] += d * x[off : off + m]
            else:
                y[-off : -off + m] += d * x[:m]
            if counters is not None:
                counters.add(cmul=m, cadd=m)
        return y

    def col_support(self, i):
        """Row index range [lo, hi) of the in-band entries of column i."""
        return max(0, i - self.q), min(self.n, i + self.q + 1)


def band(g, q) -> BandedMat:
    """Keep the 2Q+1 central diagonals of a square matrix, drop the rest."""
    g = np.asarray(g, dtype=np.complex128)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionError("band expects a square matrix")
    n = g.shape[0]
    if not (0 <= q <= max(n // 2 - 1, 0)):
        raise ValueError(f"Q={q} outside the range 0..{max(n // 2 - 1, 0)}")
    diags = {off: np.diagonal(g, off).copy() for off in range(-q, q + 1)}
    return BandedMat(n, q, diags)


def counted_matvec(a, x, counters: OpCounters):
    """Dense matrix-vector product with exact operation accounting."""
    a = np.asarray(a, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    if a.ndim != 2 or a.shape[1] != x.size:
        raise DimensionError("matvec size mismatch")
    counters.add_matvec(a.shape[0], a.shape[1])
    return a @ x
