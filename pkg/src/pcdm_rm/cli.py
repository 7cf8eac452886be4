"""Command-line interface: ``pcdm-rm <command> ...``.

Exit status: 0 on success, 2 for usage or validation errors, 3 for runtime
failures.  Every command accepts ``--config FILE``, a flat ``key = value`` file
whose keys are long option names; options given on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import PcdmError

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _range(text: str) -> list[float]:
    """``lo:step:hi`` inclusive, or a comma list."""
    if ":" not in text:
        return _float_list(text)
    try:
        lo, step, hi = (Fraction(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:step:hi, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    n = int((hi - lo) / step)
    return [float(lo + i * step) for i in range(n + 1)]


def _open_out(path):
    if path in (None, "-"):
        return _NoClose(sys.stdout)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8")


class _NoClose:
    def __init__(self, fh):
        self.fh = fh

    def __enter__(self):
        return self.fh

    def __exit__(self, *exc):
        self.fh.flush()
        return False


def _read_config(path: str) -> list[str]:
    argv = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "yes", "on"):
            argv.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            argv.extend([flag, value])
    return argv


def _banner(seed: int) -> None:
    print(f"# seed = {seed}", file=sys.stderr)


# ---------------------------------------------------------------- commands


def cmd_analyze(args) -> int:
    from .shaping import asymptotic_metrics, energy_gap, load_pfc, stationary_distribution

    code = load_pfc(args.code)
    rate, energy = asymptotic_metrics(code)
    metrics = energy_gap(code)
    dist = stationary_distribution(code)
    out = sys.stdout
    print(f"file          {args.code}", file=out)
    print(f"alphabet      {','.join(map(str, code.alphabet.amplitudes))}", file=out)
    print(f"cardinality   {code.cardinality}", file=out)
    print(f"l_max         {code.l_max}", file=out)
    print(f"R_D           {float(rate):.5f}  ({rate})", file=out)
    print(f"E             {float(energy):.5f}  ({energy})", file=out)
    print(f"E*            {metrics.mb_energy:.5f}", file=out)
    print(f"gap_dB        {metrics.gap_db:.4f}", file=out)
    print("distribution  " + "  ".join(f"P({a})={p:.5f}" for a, p in zip(code.alphabet.amplitudes, dist)), file=out)
    return EXIT_OK


def cmd_search(args) -> int:
    from .search import SearchSpec, build_catalog, search
    from .shaping import AmplitudeAlphabet, save_pfc

    alphabet = AmplitudeAlphabet(args.alphabet)
    if args.grid is not None:
        if args.out is None:
            raise UsageError("--grid needs --out DIR for the catalog")
        entries = build_catalog(alphabet, args.grid, args.cardinality, out_dir=args.out, budget=args.budget)
        for e in entries:
            print(f"{e.target_rate:.3f}  R_D={float(e.metrics.rate):.5f}  E={float(e.metrics.energy):.5f}  "
                  f"gap={e.metrics.gap_db:.4f} dB  {e.file}")
        return EXIT_OK
    if args.rate is None:
        raise UsageError("one of --rate or --grid is required")
    spec = SearchSpec(alphabet, args.rate, args.cardinality, budget=args.budget,
                      max_word_len=args.max_word_len, mode=args.mode)
    res = search(spec)
    m = res.metrics
    comments = [f"target_rate {args.rate}", f"rate {float(m.rate):.6f}", f"energy {float(m.energy):.6f}",
                f"gap_db {m.gap_db:.4f}"]
    if args.out:
        save_pfc(res.code, args.out, comments)
    else:
        from .shaping import format_pfc
        sys.stdout.write(format_pfc(res.code, comments))
    print(f"R_D={float(m.rate):.5f} E={float(m.energy):.5f} E*={m.mb_energy:.5f} gap={m.gap_db:.4f} dB "
          f"|C|={res.code.cardinality} l_max={res.code.l_max} optimal={res.proven_optimal}", file=sys.stderr)
    return EXIT_OK


def _framed_config(args):
    from .codec import FramedCodeConfig
    from .shaping import load_pfc

    return FramedCodeConfig(load_pfc(args.code), args.kd, args.nd)


def cmd_encode(args) -> int:
    from .codec import encode_framed

    cfg = _framed_config(args)
    data = Path(args.input).read_bytes() if args.input != "-" else sys.stdin.buffer.read()
    if args.bits:
        text = "".join(data.decode("ascii", errors="replace").split())
        if set(text) - {"0", "1"}:
            raise UsageError("--bits input may hold only '0', '1' and whitespace")
        bits = np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")
    else:
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    if len(bits) == 0 or len(bits) % cfg.k_d:
        raise UsageError(f"input holds {len(bits)} bits, not a positive multiple of K_D = {cfg.k_d}")
    with _open_out(args.output) as fh:
        for blk in bits.reshape(-1, cfg.k_d):
            fh.write(",".join(map(str, encode_framed(cfg, blk).tolist())) + "\n")
    return EXIT_OK


def cmd_decode(args) -> int:
    from .codec import decode_framed

    cfg = _framed_config(args)
    text = Path(args.input).read_text(encoding="utf-8") if args.input != "-" else sys.stdin.read()
    parts = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            amps = [int(x) for x in line.split(",")]
        except ValueError:
            raise UsageError(f"line {n}: amplitudes must be comma-separated integers") from None
        if len(amps) != cfg.n_d:
            raise UsageError(f"line {n}: {len(amps)} amplitudes, expected N_D = {cfg.n_d}")
        parts.append(decode_framed(cfg, amps))
    if args.bits:
        payload = "".join("".join(map(str, p.tolist())) + "\n" for p in parts).encode()
    else:
        bits = np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)
        payload = np.packbits(bits).tobytes()
    if args.output in (None, "-"):
        sys.stdout.buffer.write(payload)
    else:
        Path(args.output).write_bytes(payload)
    return EXIT_OK


def cmd_plan(args) -> int:
    from .pas import (PLAN_CSV_HEADER, ldpc_rm_plans, pcdm_rm_plans, plan_ldpc_rm, plan_pcdm_rm,
                      plan_summary)

    n_cs = args.nc or [600]
    with _open_out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        if args.summary:
            for row in plan_summary(n_cs).rows():
                w.writerow(row)
            return EXIT_OK
        if args.scheme is None:
            raise UsageError("--scheme is required unless --summary is given")
        rows = []
        for n_c in n_cs:
            if args.ir is None:
                plans = ldpc_rm_plans(n_c) if args.scheme == "ldpc" else pcdm_rm_plans(n_c)
                if args.qam is not None:
                    plans = [p for p in plans if p.qam_order == args.qam]
            else:
                if args.qam is None:
                    raise UsageError("--ir needs --qam")
                fn = plan_ldpc_rm if args.scheme == "ldpc" else plan_pcdm_rm
                plans = [fn(n_c, ir, args.qam) for ir in args.ir]
            rows.extend(p.csv_row() for p in plans)
        w.writerow(PLAN_CSV_HEADER)
        w.writerows(rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .channel import SimConfig, run_bler, write_results_csv, write_summary_csv
    from .pas import plan_ldpc_rm, plan_pcdm_rm

    _banner(args.seed)
    if args.scheme == "pcdm":
        plan = plan_pcdm_rm(args.nc, args.ir, args.qam)
        if args.code:
            from .shaping import load_pfc
            code = load_pfc(args.code)
        else:
            from .codeset import code_for
            code = code_for(args.qam, args.ir)
    else:
        plan = plan_ldpc_rm(args.nc, args.ir, args.qam)
        code = None
    cfg = SimConfig(plan, tuple(args.snr), blocks=args.blocks, seed=args.seed, target_bler=args.target_bler,
                    iterations=args.iterations, min_sum=args.min_sum, noiseless=args.noiseless, pcdm_code=code)

    def progress(done, total):
        if args.verbose:
            print(f"  {done}/{total} blocks", file=sys.stderr)

    result = run_bler(cfg, progress)
    if args.out:
        base = Path(args.out)
        base.parent.mkdir(parents=True, exist_ok=True)
        with open(f"{base}.csv", "w", newline="", encoding="utf-8") as fh:
            write_results_csv([result], fh)
        with open(f"{base}_summary.csv", "w", newline="", encoding="utf-8") as fh:
            write_summary_csv([result], fh)
    buf = io.StringIO()
    write_results_csv([result], buf)
    buf.write("\n")
    write_summary_csv([result], buf)
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_codeset(args) -> int:
    from .codeset import design_code_set

    _banner(args.seed)
    design_code_set(args.out, budget=args.budget, blocks=args.blocks, seed=args.seed,
                    progress=lambda msg: print(msg, file=sys.stderr))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pcdm-rm", description="PCDM shaping and PAS rate-matching toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--config", help="key = value file mirroring long options")
        sp.set_defaults(func=func)
        return sp

    a = add("analyze", cmd_analyze, "Report rate, energy and energy gap of a .pfc code.")
    a.add_argument("code", help=".pfc code file")

    s = add("search", cmd_search, "Search a minimum-energy code (or a catalog over a rate grid).")
    s.add_argument("--alphabet", type=_int_list, default=[1, 3], help="amplitudes, e.g. 1,3,5,7")
    s.add_argument("--rate", type=float, help="target DM rate R_D*")
    s.add_argument("--grid", type=_range, help="catalog rate grid lo:step:hi (writes .pfc files to --out)")
    s.add_argument("--cardinality", type=int, default=24)
    s.add_argument("--budget", type=int, default=4000, help="branch-and-bound nodes per step (heuristic)")
    s.add_argument("--max-word-len", type=int, default=12)
    s.add_argument("--mode", choices=["auto", "exhaustive", "heuristic"], default="auto")
    s.add_argument("--out", help="output .pfc file (or catalog directory with --grid)")

    for name, func, help_ in (("encode", cmd_encode, "Framed PCDM encoding of a binary file."),
                              ("decode", cmd_decode, "Framed PCDM decoding back to a binary file.")):
        c = add(name, func, help_)
        c.add_argument("--code", required=True, help=".pfc code file")
        c.add_argument("--kd", type=int, required=True, help="input block length K_D in bits")
        c.add_argument("--nd", type=int, required=True, help="output block length N_D in amplitudes")
        c.add_argument("--in", dest="input", required=True, help="input file ('-' for stdin)")
        c.add_argument("--out", dest="output", help="output file (default stdout)")
        c.add_argument("--bits", action="store_true", help="bits as '0'/'1' text instead of raw bytes")

    pl = add("plan", cmd_plan, "Rate-matching plans as CSV, or implementation counts.")
    pl.add_argument("--scheme", choices=["ldpc", "pcdm"])
    pl.add_argument("--nc", type=_int_list, help="code length(s), e.g. 600,1200,4800")
    pl.add_argument("--ir", type=_range, help="IR value(s); omit for the full grid")
    pl.add_argument("--qam", type=int, choices=[16, 64, 256])
    pl.add_argument("--summary", action="store_true")
    pl.add_argument("--out", dest="output", help="CSV file (default stdout)")

    sm = add("simulate", cmd_simulate, "Monte-Carlo BLER over an SNR grid.")
    sm.add_argument("--scheme", choices=["ldpc", "pcdm"], required=True)
    sm.add_argument("--nc", type=int, default=600)
    sm.add_argument("--ir", type=float, required=True)
    sm.add_argument("--qam", type=int, choices=[16, 64, 256], required=True)
    sm.add_argument("--snr", type=_range, required=True, help="Es/N0 grid in dB, lo:step:hi")
    sm.add_argument("--blocks", type=int, default=10_000)
    sm.add_argument("--seed", type=int, default=1)
    sm.add_argument("--target-bler", type=float, default=1e-2)
    sm.add_argument("--iterations", type=int, default=12)
    sm.add_argument("--min-sum", action="store_true")
    sm.add_argument("--noiseless", action="store_true")
    sm.add_argument("--code", help=".pfc code (default: shipped code for this QAM/IR)")
    sm.add_argument("--out", help="output prefix: writes PREFIX.csv and PREFIX_summary.csv")
    sm.add_argument("--verbose", action="store_true")

    cs = add("codeset", cmd_codeset, "Rebuild the per-IR PCDM code set.")
    cs.add_argument("--out", required=True)
    cs.add_argument("--budget", type=int, default=300)
    cs.add_argument("--blocks", type=int, default=200)
    cs.add_argument("--seed", type=int, default=0)
    return p


def _expand_config(argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config needs a file")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    # config values go right after the command name so explicit flags override them
    cmd_at = next((k for k, tok in enumerate(rest) if not tok.startswith("-")), None)
    if cmd_at is None:
        raise UsageError("--config given without a command")
    return rest[:cmd_at + 1] + _read_config(path) + rest[cmd_at + 1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _expand_config(argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"pcdm-rm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pcdm-rm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PcdmError as exc:
        print(f"pcdm-rm: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"pcdm-rm: error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"pcdm-rm: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"pcdm-rm: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
