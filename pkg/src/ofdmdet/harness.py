"""Monte Carlo BER experiment driver and the complexity report.

A sweep is a grid of (detector, Eb/N0) cells over one channel scenario.
Every cell simulates independent OFDM frames -- fresh channel, bits and
noise per frame from derived RNG streams -- until a stopping rule is met,
and the whole sweep is a pure function of its configuration including the
master seed.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import channel as chan
from . import linear, mapgs, ofdm
from .numerics import OpCounters, RngStream, band

DETECTORS = ("mf", "zf", "mmse", "vblast", "map-gs", "exact-map")

CSV_HEADER = [
    "detector", "ebn0_db", "speed_kmh", "profile", "Q", "Ns",
    "bits", "errors", "ber", "cmul", "cadd", "seconds",
]


@dataclass(frozen=True)
class SimConfig:
    """Everything one sweep depends on."""

    n: int = 512
    cp: int = 64
    bandwidth_hz: float = 5e6
    carrier_hz: float = 2.4e9
    profile: str = "TU6"
    speed_kmh: float | None = 420.0
    fd_norm: float | None = None  # per-symbol normalized Doppler, overrides speed
    detectors: tuple = ("zf", "mmse", "map-gs")
    q: int | None = None  # None -> rule-of-thumb default
    gibbs_iters: int = 30
    burn_in: int = 10
    ebn0_db: tuple = (15.0, 20.0, 25.0)
    min_errors: int = 200
    max_frames: int = 2000
    seed: int = 1

    @property
    def ofdm_config(self):
        return ofdm.OfdmConfig(n=self.n, cp=self.cp, bandwidth_hz=self.bandwidth_hz)

    @property
    def block_len(self):
        return self.n + self.cp

    def doppler(self) -> chan.DopplerSpec:
        ts = 1.0 / self.bandwidth_hz
        if self.fd_norm is not None:
            # per-symbol normalized value; internal math runs per sample
            fd = self.fd_norm / (self.block_len * ts)
            return chan.DopplerSpec(fd_hz=fd, sample_period_s=ts)
        if self.speed_kmh is None:
            raise ValueError("need either speed_kmh or fd_norm")
        return chan.DopplerSpec.from_speed(self.speed_kmh, self.carrier_hz, ts)

    def pdp(self) -> chan.PowerDelayProfile:
        if self.profile.lower().startswith("file:"):
            return chan.PowerDelayProfile.from_file(
                self.profile[5:], self.bandwidth_hz
            )
        return chan.PowerDelayProfile.builtin(self.profile, self.bandwidth_hz)

    def resolved_q(self):
        if self.q is not None:
            return self.q
        dop = self.doppler()
        return default_q(dop.fd_hz, self.bandwidth_hz / self.n)

    def gibbs_config(self):
        return mapgs.GibbsConfig(n_iters=self.gibbs_iters, burn_in=self.burn_in)


@dataclass
class BerRecord:
    """Accumulated results for one (detector, Eb/N0) simulation cell."""

    detector: str
    ebn0_db: float
    speed_kmh: float
    profile: str
    q: int
    n_samples: int
    bits: int = 0
    errors: int = 0
    frames: int = 0
    failed_frames: int = 0
    cmul: int = 0
    cadd: int = 0
    seconds: float = 0.0

    @property
    def ber(self):
        return self.errors / self.bits if self.bits else math.nan

    def confidence_interval(self, z=1.96):
        """Normal-approximation 95% interval on the BER."""
        if not self.bits:
            return (math.nan, math.nan)
        p = self.ber
        half = z * math.sqrt(max(p * (1 - p), 0.0) / self.bits)
        return (max(p - half, 0.0), min(p + half, 1.0))

    def to_row(self):
        return [
            self.detector, f"{self.ebn0_db:g}", f"{self.speed_kmh:g}",
            self.profile, str(self.q), str(self.n_samples),
            str(self.bits), str(self.errors), f"{self.ber:.6e}",
            str(self.cmul), str(self.cadd), f"{self.seconds:.3f}",
        ]


def default_q(fd_max_hz, subcarrier_spacing_hz):
    """Rule-of-thumb half-bandwidth: floor(fd_max / delta_f) + 1."""
    if subcarrier_spacing_hz <= 0:
        raise ValueError("subcarrier spacing must be positive")
    return int(fd_max_hz / subcarrier_spacing_hz) + 1


def _detect_frame(detector, Y, gb, noise_var, gcfg, rng):
    if detector == "map-gs":
        return mapgs.detect(Y, gb, noise_var, gcfg, rng)
    dense = gb.toarray()
    if detector == "mf":
        return linear.mf(Y, dense, noise_var)
    if detector == "zf":
        return linear.zf(Y, dense, noise_var)
    if detector == "mmse":
        return linear.mmse(Y, dense, noise_var)
    if detector == "vblast":
        return linear.vblast_mmse_sd(Y, dense, noise_var)
    if detector == "exact-map":
        return linear.exact_map(Y, dense, noise_var)
    raise ValueError(f"unknown detector {detector!r}")


def run_cell(cfg: SimConfig, detector, ebn0_db, cell_stream: RngStream) -> BerRecord:
    """Simulate one cell until min_errors bit errors or max_frames frames."""
    const = ofdm.Constellation.bpsk()
    ocfg = cfg.ofdm_config
    pdp = cfg.pdp()
    dop = cfg.doppler()
    if pdp.max_delay >= cfg.cp:
        raise ValueError("cyclic prefix does not cover the maximum tap delay")
    q = cfg.resolved_q()
    gcfg = cfg.gibbs_config()
    noise_var = ofdm.ebn0_to_noise_var(ebn0_db, const)
    rec = BerRecord(
        detector=detector, ebn0_db=ebn0_db,
        speed_kmh=cfg.speed_kmh if cfg.speed_kmh is not None else math.nan,
        profile=pdp.name, q=q, n_samples=gcfg.n_samples,
    )
    ops = OpCounters()
    t0 = time.perf_counter()
    frame = 0
    while rec.errors < cfg.min_errors and frame < cfg.max_frames:
        fs = cell_stream.substream(frame)
        bits = fs.substream(0).generator().integers(0, 2, cfg.n)
        s = const.map_bits(bits)
        realization = chan.generate_realization(pdp, dop, cfg.block_len, fs.substream(1))
        d = ofdm.transmit(s, ocfg)
        y = ofdm.apply_channel(d, realization, noise_var, fs.substream(2))
        Y = ofdm.receive(y, ocfg)
        g = chan.freq_channel_matrix(realization, cfg.n)
        gb = band(g, q)
        try:
            out = _detect_frame(detector, Y, gb, noise_var, gcfg, fs.substream(3))
        except linear.DetectionError:
            rec.failed_frames += 1
            frame += 1
            continue
        rec.errors += int(np.sum(const.demap(out.symbols) != bits))
        rec.bits += cfg.n
        rec.frames += 1
        ops.merge(out.ops)
        frame += 1
    rec.seconds = time.perf_counter() - t0
    if rec.frames:
        rec.cmul = ops.cmul // rec.frames
        rec.cadd = ops.cadd // rec.frames
    return rec


def _run_cell_star(args):
    cfg, detector, ebn0, stream = args
    return run_cell(cfg, detector, ebn0, stream)


def run_sweep(cfg: SimConfig, workers: int = 1) -> list[BerRecord]:
    """Run the full (detector x Eb/N0) grid; cells execute independently."""
    master = RngStream(cfg.seed)
    jobs = []
    for di, det in enumerate(cfg.detectors):
        for ei, ebn0 in enumerate(cfg.ebn0_db):
            jobs.append((cfg, det, float(ebn0), master.substream(di, ei)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell_star, jobs))
    else:
        records = [_run_cell_star(j) for j in jobs]
    records.sort(key=lambda r: (r.detector, r.ebn0_db))
    return records


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.to_row())
    return buf.getvalue()


def records_to_json(records, cfg: SimConfig | None = None) -> str:
    payload = {"records": [asdict(r) | {"ber": r.ber} for r in records]}
    if cfg is not None:
        payload["config"] = asdict(cfg)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# complexity report

def mapgs_op_bound(n, q, n_samples):
    return mapgs.complexity_bound(n, q, n_samples)


def block_mmse_ops(n, q):
    """Banded block-MMSE equalizer closed form."""
    return (8 * q * q + 22 * q + 4) * n


def serial_mmse_ops(n, q):
    """Banded serial linear MMSE equalizer closed form."""
    return int((8.0 / 3.0 * q**3 + 2 * q * q + 5.0 / 3.0 * q + 4) * n)


def complexity_report(n, q, n_samples, measured: OpCounters) -> dict:
    """One report row: measured detector ops against the closed-form columns."""
    bound = mapgs_op_bound(n, q, n_samples)
    measured_total = measured.total
    return {
        "n": n,
        "q": q,
        "n_samples": n_samples,
        "measured_cmul": measured.cmul,
        "measured_cadd": measured.cadd,
        "measured_total": measured_total,
        "mapgs_bound": bound,
        "within_bound": measured_total <= bound,
        "block_mmse": block_mmse_ops(n, q),
        "serial_mmse": serial_mmse_ops(n, q),
    }


def measured_complexity(n=512, q=3, n_samples=20, ebn0_db=20.0, seed=1,
                        cfg: SimConfig | None = None) -> dict:
    """Run one real detection and tabulate its counters against the bounds."""
    cfg = cfg or SimConfig(
        n=n, cp=64, detectors=("map-gs",), q=q,
        gibbs_iters=n_samples, burn_in=0, ebn0_db=(ebn0_db,),
        min_errors=1, max_frames=1, seed=seed,
    )
    rec = run_cell(cfg, "map-gs", ebn0_db, RngStream(cfg.seed).substream(0, 0))
    ops = OpCounters(cmul=rec.cmul, cadd=rec.cadd)
    return complexity_report(cfg.n, cfg.resolved_q(), cfg.gibbs_config().n_samples, ops)
