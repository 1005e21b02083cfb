"""Command-line interface: BER sweeps, complexity reports and a self-test."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from . import channel as chan
from . import harness, mapgs, ofdm, plotting
from .numerics import RngStream, band, dft


def _add_sim_args(p):
    p.add_argument("--n", type=int, default=512, help="subcarrier count")
    p.add_argument("--cp", type=int, default=64, help="cyclic prefix samples")
    p.add_argument("--bandwidth-hz", type=float, default=5e6)
    p.add_argument("--carrier-hz", type=float, default=2.4e9)
    p.add_argument("--profile", default="tu6",
                   help="tu6 | bu6 | file:<path> with 'delay_ns power_linear' lines")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--speed-kmh", type=float, default=None)
    g.add_argument("--fd-norm", type=float, default=None,
                   help="per-symbol normalized Doppler (overrides --speed-kmh)")
    qg = p.add_mutually_exclusive_group()
    qg.add_argument("--q", type=int, default=None, help="band half-width")
    qg.add_argument("--q-auto", action="store_true",
                    help="use floor(fd_max/delta_f)+1")
    p.add_argument("--gibbs-iters", type=int, default=30)
    p.add_argument("--burn-in", type=int, default=10)
    p.add_argument("--seed", type=int, default=1)


def _sim_config(args, detectors=None, ebn0=None):
    speed = args.speed_kmh
    if speed is None and args.fd_norm is None:
        speed = 420.0
    q = args.q
    if q is None and not args.q_auto:
        q = 3  # sufficient for SNRs up to 20 dB at the supported speeds
    return harness.SimConfig(
        n=args.n, cp=args.cp, bandwidth_hz=args.bandwidth_hz,
        carrier_hz=args.carrier_hz, profile=args.profile.upper()
        if not args.profile.lower().startswith("file:") else args.profile,
        speed_kmh=speed, fd_norm=args.fd_norm,
        detectors=tuple(detectors or ()), q=q,
        gibbs_iters=args.gibbs_iters, burn_in=args.burn_in,
        ebn0_db=tuple(ebn0 or ()),
        min_errors=getattr(args, "min_errors", 200),
        max_frames=getattr(args, "max_frames", 2000),
        seed=args.seed,
    )


def _write_output(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
        return None
    with open(out, "w") as f:
        f.write(text)
    return out


def cmd_ber(args):
    detectors = args.detector or ["zf", "mmse", "map-gs"]
    ebn0 = [float(x) for x in args.ebn0_list.split(",") if x.strip()]
    cfg = _sim_config(args, detectors=detectors, ebn0=ebn0)
    records = harness.run_sweep(cfg, workers=args.workers)
    if args.format == "json":
        text = harness.records_to_json(records, cfg)
    else:
        text = harness.records_to_csv(records)
    written = _write_output(text, args.out)
    if args.plot and written:
        png = os.path.splitext(written)[0] + ".png"
        rows = list(csv.DictReader(io.StringIO(harness.records_to_csv(records))))
        plotting.plot_ber_rows(
            rows, png,
            title=f"{cfg.profile}, N={cfg.n}, Q={cfg.resolved_q()}",
        )
        print(f"figure written to {png}", file=sys.stderr)
    return 0


def cmd_complexity(args):
    rows = []
    for q in args.q_list:
        rows.append(harness.measured_complexity(
            n=args.n, q=q, n_samples=args.gibbs_iters - args.burn_in,
            seed=args.seed,
        ))
    header = list(rows[0].keys())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([r[k] for k in header])
    written = _write_output(buf.getvalue(), args.out)
    if args.plot and written:
        png = os.path.splitext(written)[0] + ".png"
        plotting.plot_complexity(rows, png, title=f"N={args.n}")
        print(f"figure written to {png}", file=sys.stderr)
    return 0 if all(r["within_bound"] for r in rows) else 1


def cmd_plot(args):
    plotting.plot_ber_csv(args.csv, args.out, title=args.title)
    print(f"figure written to {args.out}", file=sys.stderr)
    return 0


def cmd_selftest(args):
    """Fast internal consistency checks; exits non-zero on failure."""
    failures = []

    def check(name, ok):
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
        if not ok:
            failures.append(name)

    rng = RngStream(7)
    x = rng.substream(0).generator().standard_normal(64) * (1 + 1j)
    check("dft round trip",
          np.allclose(dft(dft(x), "inverse"), x, rtol=1e-12, atol=1e-12))

    const = ofdm.Constellation.bpsk()
    ocfg = ofdm.OfdmConfig(n=64, cp=32)  # TU6 spans 25 samples at 5 MHz
    pdp = chan.PowerDelayProfile.builtin("TU6", ocfg.bandwidth_hz)
    dop = chan.DopplerSpec(fd_hz=900.0, sample_period_s=ocfg.sample_period)
    real = chan.generate_realization(pdp, dop, ocfg.block_len, rng.substream(1))
    bits = rng.substream(2).generator().integers(0, 2, 64)
    s = const.map_bits(bits)
    Y = ofdm.receive(ofdm.apply_channel(ofdm.transmit(s, ocfg), real, 0.0, rng), ocfg)
    g = chan.freq_channel_matrix(real, 64)
    check("model equivalence Y = G s",
          np.linalg.norm(Y - g @ s) / np.linalg.norm(Y) < 1e-10)

    static = chan.generate_realization(
        pdp, chan.DopplerSpec(0.0, ocfg.sample_period), ocfg.block_len,
        rng.substream(3))
    gs = chan.freq_channel_matrix(static, 64)
    check("static channel gives diagonal G",
          np.max(np.abs(gs - np.diag(np.diagonal(gs)))) < 1e-12)

    gb = band(g, 3)
    out = mapgs.detect(Y, gb, ofdm.ebn0_to_noise_var(25.0, const),
                       mapgs.GibbsConfig(), rng.substream(4))
    out2 = mapgs.detect(Y, gb, ofdm.ebn0_to_noise_var(25.0, const),
                        mapgs.GibbsConfig(), rng.substream(4))
    check("detector reproducibility", np.array_equal(out.symbols, out2.symbols))
    check("complexity within bound",
          out.ops.total <= mapgs.complexity_bound(64, 3, mapgs.GibbsConfig().n_samples))

    print(f"{'OK' if not failures else 'FAILED'}: "
          f"{5 - len(failures)}/5 checks passed")
    return 1 if failures else 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="ofdmdet",
        description="OFDM detection over rapidly time-varying channels",
    )
    sub = p.add_subparsers(dest="command", required=True)

    ber = sub.add_parser("ber", help="run a BER sweep")
    _add_sim_args(ber)
    ber.add_argument("--detector", action="append", choices=harness.DETECTORS,
                     help="repeatable; default zf,mmse,map-gs")
    ber.add_argument("--ebn0-list", default="15,20,25",
                     help="comma-separated Eb/N0 values in dB")
    ber.add_argument("--min-errors", type=int, default=200)
    ber.add_argument("--max-frames", type=int, default=2000)
    ber.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ber.add_argument("--out", default="-", help="output path, '-' for stdout")
    ber.add_argument("--format", choices=("csv", "json"), default="csv")
    ber.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True,
                     help="render a PNG next to the output file")
    ber.set_defaults(func=cmd_ber)

    comp = sub.add_parser("complexity", help="measured ops vs closed forms")
    comp.add_argument("--n", type=int, default=512)
    comp.add_argument("--q-list", type=lambda s: [int(x) for x in s.split(",")],
                      default=[1, 2, 3, 4, 6])
    comp.add_argument("--gibbs-iters", type=int, default=20)
    comp.add_argument("--burn-in", type=int, default=0)
    comp.add_argument("--seed", type=int, default=1)
    comp.add_argument("--out", default="-")
    comp.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    comp.set_defaults(func=cmd_complexity)

    plot = sub.add_parser("plot", help="render BER curves from a sweep CSV")
    plot.add_argument("csv")
    plot.add_argument("--out", default="ber.png")
    plot.add_argument("--title", default=None)
    plot.set_defaults(func=cmd_plot)

    st = sub.add_parser("selftest", help="quick internal consistency checks")
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
