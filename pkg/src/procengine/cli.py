"""Command-line entry point.

Exit codes: 0 success, 2 usage, 3 input error, 4 format error, 5 parameter
error, 6 I/O error, 7 validation outside tolerance, 1 anything else. Errors
are reported on stderr as one JSON object per line.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import analyze_recording
from .codec import demux, mux
from .core import AudioBuffer, FrameSpec
from .dataset import generate, load_plan
from .distribution import compare_to_table, order_distribution_map
from .errors import EngineError, InputError
from .orders import WINDOWS, AnalysisConfig, load_results, save_results
from .synth import SynthesisParams, load_params, save_params, synthesize
from .table import build_table, load_table, save_table
from .traces import load_trace, write_trace_csv
from .wavio import read_wav, write_wav

log = logging.getLogger("procengine")

EXIT_VALIDATION = 7


def _axis(lo, hi, step):
    if step <= 0 or hi < lo:
        raise InputError(f"bad grid {lo}:{hi}:{step}")
    return np.arange(lo, hi + step / 2, step)


def _add_grid(p):
    g = p.add_argument_group("grid")
    g.add_argument("--rpm-min", type=float, default=0.0, help="first RPM bin centre")
    g.add_argument("--rpm-max", type=float, default=8000.0, help="last RPM bin centre")
    g.add_argument("--rpm-step", type=float, default=250.0, help="RPM bin spacing")
    g.add_argument("--torque-min", type=float, default=-200.0,
                   help="first torque bin centre in Nm")
    g.add_argument("--torque-max", type=float, default=800.0,
                   help="last torque bin centre in Nm")
    g.add_argument("--torque-step", type=float, default=50.0, help="torque bin spacing")


def _grid(args):
    return (_axis(args.rpm_min, args.rpm_max, args.rpm_step),
            _axis(args.torque_min, args.torque_max, args.torque_step))


def _add_analysis(p):
    g = p.add_argument_group("analysis")
    g.add_argument("--periods", type=int, default=20,
                   help="fundamental periods per analysis window")
    g.add_argument("--pad", type=int, default=4, help="zero-padding factor")
    g.add_argument("--frame", type=int, default=65536,
                   help="frame length in samples at the analysis rate")
    g.add_argument("--rate", type=int, default=16000, help="analysis sample rate")
    g.add_argument("--window", choices=WINDOWS, default="blackmanharris",
                   help="window before the FFT")


def _analysis(args):
    cfg = AnalysisConfig(periods=args.periods, pad=args.pad, fs=args.rate, window=args.window)
    return FrameSpec(args.frame, args.rate), cfg


def _read_annotated_or_pair(path, trace_path):
    audio = read_wav(path)
    if trace_path is None:
        return demux(audio)
    if audio.channels > 2:
        audio = AudioBuffer(audio.data[:2], audio.sample_rate)
    trace = load_trace(trace_path)
    if trace.sample_rate != audio.sample_rate:
        trace = trace.resampled(audio.sample_rate)
    if len(trace) != audio.samples_per_channel:
        raise InputError(f"trace has {len(trace)} samples, audio {audio.samples_per_channel}")
    return audio, trace


def cmd_analyze(args):
    spec, cfg = _analysis(args)
    audio, trace = _read_annotated_or_pair(args.input, args.trace)
    results = analyze_recording(audio, trace, spec, cfg, warp=args.warp)
    save_results(results, args.output)
    log.info("%d frames analyzed -> %s", len(results), args.output)
    print(f"frames\t{len(results)}")


def cmd_build_table(args):
    results = []
    for path in args.results:
        results.extend(load_results(path))
    rpm_axis, torque_axis = _grid(args)
    table = build_table(results, rpm_axis, torque_axis, engine_id=args.engine_id)
    save_table(table, args.output)
    print(f"observations\t{len(results)}\noccupied_cells\t{int(table.observed.sum())}")


def cmd_synth(args):
    table = load_table(args.table)
    params = load_params(args.params) if args.params else SynthesisParams()
    if args.seed is not None:
        params.seed = args.seed
    trace = load_trace(args.trace).resampled(params.sample_rate)
    rendering = synthesize(trace, table, params)
    write_wav(args.output, mux(rendering.audio, trace))
    print(f"samples\t{len(trace)}\ngain\t{rendering.gain:.9g}")


def cmd_encode(args):
    audio = read_wav(args.audio)
    if audio.channels == 1:
        audio = AudioBuffer(np.vstack([audio.data, audio.data]), audio.sample_rate)
    elif audio.channels != 2:
        raise InputError(f"encode expects mono or stereo audio, got {audio.channels} channels")
    trace = load_trace(args.trace).resampled(audio.sample_rate)
    if len(trace) != audio.samples_per_channel:
        raise InputError(f"trace has {len(trace)} samples, audio {audio.samples_per_channel}")
    write_wav(args.output, mux(audio, trace))


def cmd_decode(args):
    _, trace = demux(read_wav(args.input))
    write_trace_csv(args.output or sys.stdout, trace)


def cmd_generate(args):
    plan = load_plan(args.plan)
    if args.output_dir:
        plan.output_dir = Path(args.output_dir)
    rows = generate(plan, jobs=args.jobs)
    failed = sum(r["status"] != "ok" for r in rows)
    print(f"items\t{len(rows)}\nfailed\t{failed}\nmanifest\t{plan.output_dir / 'manifest.tsv'}")


def cmd_validate(args):
    spec, cfg = _analysis(args)
    rpm_axis, torque_axis = _grid(args)
    dist = order_distribution_map(args.inputs, rpm_axis, torque_axis, spec, cfg)
    dist.write_tsv(args.output)
    table = load_table(args.table) if args.table else None
    if args.plot:
        from .plotting import plot_order_map
        plot_order_map(dist, args.plot, table, max_order=args.plot_max_order)
    print(f"frames\t{int(dist.count.sum())}\noccupied_cells\t{int(dist.occupied.sum())}")
    if table is None:
        return 0
    rows = compare_to_table(dist, table, max_order=args.max_order)
    worst = max((r.relative_error for r in rows), default=0.0)
    passed = bool(rows) and worst <= args.tolerance
    if args.report:
        with open(args.report, "w") as fh:
            fh.write("order\trpm\ttorque\tmeasured\treference\trelative_error\n")
            for r in rows:
                fh.write(f"{r.order:g}\t{r.rpm:g}\t{r.torque:g}\t{r.measured:.9g}\t"
                         f"{r.reference:.9g}\t{r.relative_error:.6g}\n")
    print(f"compared\t{len(rows)}\nmax_relative_error\t{worst:.6g}\n"
          f"tolerance\t{args.tolerance:g}\nresult\t{'PASS' if passed else 'FAIL'}")
    return 0 if passed else EXIT_VALIDATION


def cmd_params(args):
    save_params(SynthesisParams(), args.output)


def cmd_demo_plan(args):
    from .demo import write_demo_plan
    path = write_demo_plan(Path(args.directory), duration=args.duration)
    print(f"plan\t{path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="procengine",
        description="Engine-order analysis and annotated engine sound synthesis.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("analyze", help="per-frame order analysis of a recording", formatter_class=fmt)
    p.add_argument("input", help="4-channel annotated WAV, or audio WAV with --trace")
    p.add_argument("--trace", help="control trace (CSV or annotated WAV) for plain audio")
    p.add_argument("-o", "--output", required=True, help="frame results (JSON lines)")
    p.add_argument("--warp", choices=("source", "printed"), default="source",
                   help="warped-index variant used for repitching")
    _add_analysis(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("build-table", help="aggregate frame results into a timbre table", formatter_class=fmt)
    p.add_argument("results", nargs="+", help="frame result files from 'analyze'")
    p.add_argument("-o", "--output", required=True, help="table file (JSON)")
    p.add_argument("--engine-id", default="engine", help="label stored in the table")
    _add_grid(p)
    p.set_defaults(func=cmd_build_table)

    p = sub.add_parser("synth", help="render a 4-channel annotated WAV", formatter_class=fmt)
    p.add_argument("--table", required=True, help="timbre table file")
    p.add_argument("--trace", required=True, help="control trace (CSV or annotated WAV)")
    p.add_argument("--params", help="synthesis parameter file (JSON); defaults if omitted")
    p.add_argument("--seed", type=int, help="override the parameter file's seed")
    p.add_argument("-o", "--output", required=True, help="output WAV")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("encode", help="mux stereo audio and a control trace into 4 channels", formatter_class=fmt)
    p.add_argument("audio", help="mono or stereo WAV")
    p.add_argument("--trace", required=True, help="control trace CSV")
    p.add_argument("-o", "--output", required=True, help="output WAV")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="extract the control trace of an annotated WAV as CSV", formatter_class=fmt)
    p.add_argument("input", help="4-channel annotated WAV")
    p.add_argument("-o", "--output", help="CSV path")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("generate", help="render every item of a generation plan", formatter_class=fmt)
    p.add_argument("plan", help="plan file (JSON)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--output-dir", help="override the plan's output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="order-magnitude map and optional table comparison", formatter_class=fmt)
    p.add_argument("inputs", nargs="+", help="4-channel annotated WAVs")
    p.add_argument("-o", "--output", required=True, help="distribution map (TSV)")
    p.add_argument("--table", help="reference table to compare against")
    p.add_argument("--report", help="per-cell comparison (TSV)")
    p.add_argument("--max-order", type=float, default=8.0, help="highest order compared")
    p.add_argument("--tolerance", type=float, default=0.10, help="allowed relative error")
    p.add_argument("--plot", help="also render the order map to this image file")
    p.add_argument("--plot-max-order", type=float, default=16.0, help="highest order plotted")
    _add_analysis(p)
    _add_grid(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("params", help="write the default synthesis parameter file", formatter_class=fmt)
    p.add_argument("-o", "--output", required=True, help="parameter file (JSON)")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("demo-plan", help="write synthetic tables, traces and a 12-item plan", formatter_class=fmt)
    p.add_argument("directory", help="directory to populate")
    p.add_argument("--duration", type=float, default=6.0, help="seconds per demo trace")
    p.set_defaults(func=cmd_demo_plan)
    return parser


def _report(exc: BaseException, kind: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "exit_code": code, "message": str(exc)}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args) or 0
    except EngineError as exc:
        return _report(exc, exc.kind, exc.exit_code)
    except OSError as exc:
        return _report(exc, "io", 6)


if __name__ == "__main__":
    sys.exit(main())
