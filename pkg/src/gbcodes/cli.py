"""Command-line entry point: ``gbcodes <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import analysis, codes, schedule
from .codes import GroupSpec
from .decoder import LLR_MODES, TIE_BREAKS, DecoderConfig
from .pheno import build_spacetime
from .sim import PROTOCOLS, SimParams, read_records, records_to_csv, report, run_simulation


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _code(args) -> codes.CssCode:
    base = codes.code_from_spec(args.spec)
    return codes.drop_redundant_rows(base, args.rows_removed)


def _parse_group(text: str) -> GroupSpec:
    parts = text.lower().replace("x", " ").split()
    if not 1 <= len(parts) <= 2:
        raise ValueError(f"bad group {text!r}; use e.g. 15 or 6x6")
    return GroupSpec(*map(int, parts))


def cmd_build(args) -> None:
    code = _code(args)
    if args.out:
        np.savez_compressed(
            args.out, hx=code.hx.dense(), hz=code.hz.dense(), lx=code.lx.dense(), lz=code.lz.dense()
        )
    print(
        f"{code.name or 'custom'}: n={code.n} k={code.k} kappa={code.kappa} "
        f"rows_removed={code.rows_removed} H_X {code.hx.rows}x{code.hx.cols} H_Z {code.hz.rows}x{code.hz.cols}"
    )


def cmd_analyze(args) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["code", "n", "k", "d", "d_method", "d_S", "profile"])
    for spec in args.spec:
        base = codes.code_from_spec(spec)
        code = codes.drop_redundant_rows(base, args.rows_removed)
        d = analysis.code_distance(base, w_max=args.max_weight)
        method = "exhaustive"
        if d is None:
            rng = np.random.default_rng(args.seed)
            d = analysis.min_weight_ris(base.full_hx(), base.hz, args.ris_iters, rng)
            method = "ris-bound"
        prof = analysis.confinement_profile(code, args.t_max)
        w.writerow([code.name or spec, code.n, code.k, d, method,
                    analysis.syndrome_distance(code), ",".join(map(str, prof.weights()))])
    _emit(buf.getvalue(), args.out)


def cmd_schedule(args) -> None:
    if args.spec:
        code = codes.code_from_spec(args.spec)
        s = schedule.schedule_for(code)
        res = schedule.validate_schedule(code, s)
        text = s.addr_rows() + "\n" + " ".join(f"{k}={v}" for k, v in res.items()) + "\n"
    else:
        s = schedule.make_schedule(args.wa, args.wb, preset=args.preset)
        text = s.addr_rows() + "\n"
    _emit(text, args.out)


def cmd_enumerate(args) -> None:
    if args.spec:
        code = _code(args)
        h, g = code.hx, code.hz
        if args.rounds:
            st = build_spacetime(code, args.rounds)
            h, g = st.H, st.G
        spec = analysis.count_irreducible_codewords(h, g, args.max_weight)
        text = "w,A_w\n" + "".join(f"{w},{a}\n" for w, a in sorted(spec.counts.items()))
    else:
        groups = [_parse_group(t) for t in args.groups.split(",")]
        rows = analysis.search_codes(groups, args.wa, args.wb, d_min=args.d_min, ds_required=args.ds)
        text = "n,k,d,d_S,spec\n" + "".join(
            f"{n},{k},{d},{ds},{spec.strip().replace(chr(10), '; ')}\n" for spec, n, k, d, ds in rows
        )
    _emit(text, args.out)


def _config(args) -> DecoderConfig:
    return DecoderConfig(
        bp_max_iters=args.bp_iters,
        llr_mode=args.llr_mode,
        avg_window=args.avg_window,
        osd_level=args.osd_level,
        predecoder_weight=args.pre_weight,
        ris_iters=args.ris_iters,
        seed=args.seed,
        tie_break=args.tie_break,
    )


def cmd_simulate(args) -> None:
    cfg = _config(args)
    base = codes.code_from_spec(args.spec)
    records = []
    for p in args.p:
        params = SimParams(
            p=p, q=args.q, N=args.rounds, T=args.window, protocol=args.protocol,
            shots=args.shots, seed=args.seed, rows_removed=args.rows_removed,
        )
        records.append(run_simulation(base, params, cfg))
    _emit(records_to_csv(records), args.out)


def cmd_report(args) -> None:
    records = []
    for path in args.files:
        records += read_records(path)
    _emit(report(records, args.mode), args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gbcodes", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, spec_required=True):
        p.add_argument("--spec", required=spec_required, help="code-spec file or preset name (GB15, GB31, GB63)")
        p.add_argument("--rows-removed", type=int, default=0, metavar="m")
        p.add_argument("--out", metavar="FILE")

    p = sub.add_parser("build", help="construct a code and optionally save its matrices (.npz)")
    common(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("analyze", help="distance, syndrome distance and confinement profile")
    p.add_argument("--spec", nargs="+", required=True)
    p.add_argument("--rows-removed", type=int, default=0, metavar="m")
    p.add_argument("--max-weight", type=int, default=None, help="exhaustive search limit")
    p.add_argument("--ris-iters", type=int, default=100000, help="RIS budget when the search limit is hit")
    p.add_argument("--t-max", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("schedule", help="print addressing schedules")
    p.add_argument("--spec")
    p.add_argument("--preset", choices=sorted(schedule.PRESETS))
    p.add_argument("--wa", type=int, default=3)
    p.add_argument("--wb", type=int, default=3)
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("enumerate", help="code search, or irreducible codeword counts with --spec")
    common(p, spec_required=False)
    p.add_argument("--groups", default="15", help="comma-separated groups, e.g. 15,31,6x6")
    p.add_argument("--wa", type=int, default=3)
    p.add_argument("--wb", type=int, default=3)
    p.add_argument("--d-min", type=int, default=3)
    p.add_argument("--ds", type=int, default=3, help="required syndrome distance")
    p.add_argument("--max-weight", type=int, default=8)
    p.add_argument("--rounds", type=int, default=0, metavar="N", help="count on the N-round spacetime code")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("simulate", help="Monte Carlo logical error rate")
    common(p)
    p.add_argument("--p", type=float, nargs="+", required=True)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--rounds", type=int, default=None, metavar="N", help="default: code distance")
    p.add_argument("--window", type=int, default=None, metavar="T", help="default: N")
    p.add_argument("--protocol", choices=PROTOCOLS, default="sw")
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bp-iters", type=int, default=50)
    p.add_argument("--osd-level", type=int, choices=(0, 1), default=1)
    p.add_argument("--llr-mode", choices=LLR_MODES, default="both")
    p.add_argument("--avg-window", type=int, default=5)
    p.add_argument("--pre-weight", type=int, choices=(0, 1, 2), default=1)
    p.add_argument("--ris-iters", type=int, default=0)
    p.add_argument("--tie-break", choices=TIE_BREAKS, default="index")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="summarise simulation CSV files")
    p.add_argument("files", nargs="+")
    p.add_argument("--mode", choices=("csv", "slope", "crossing"), default="csv")
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
