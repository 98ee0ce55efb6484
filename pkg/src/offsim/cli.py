"""Command-line front end for the offload simulator.

Subcommands:
  run       simulate one offload and emit its report record
  sweep     run a (kernel, size, clusters, mode) grid; metrics per row
  model     evaluate the analytic runtime model for one point
  validate  compare simulator vs. analytic model over the standard grids
  decode    print the crossbar ports matched by an addr/mask store

Reports are line-delimited JSON records (one object per line); ``sweep``
can additionally project the same fields to CSV. Exit codes: 0 success,
1 simulation/runtime error (bad partition, decode miss, validation above
threshold), 2 configuration or usage error.

Examples:
  offsim run --kernel axpy --size 1024 --n-clusters 8 --mode extended
  offsim sweep --kernels axpy --sizes 256,1024,4096 --clusters 1,2,4,8,16,32
  offsim model --kernel atax --size 64x64 --n-clusters 4
  offsim validate
  offsim decode --addr 0x10240000 --mask 0x280000
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import analytic
from .config import make_platform
from .engine import LivelockError
from .kernels import PartitionError, builtin_kernels
from .mcast import ConfigError, DecodeError, MulticastAddress, route
from .offload import MODES, JobDescriptor, ProtocolError, run_offload
from .topology import address_map

VALIDATE_THRESHOLD = 0.15
VALIDATE_CLUSTERS = (1, 2, 4, 8, 16, 32)
VALIDATE_GRIDS = {
    "axpy": [{"N": s} for s in (256, 1024, 4096)],
    "atax": [{"N": s, "M": s} for s in (64, 128, 256)],
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="offsim",
        description="transaction-level simulator of host-to-manycore job offloading")
    p.add_argument("--config", metavar="PATH",
                   help="platform description file (topology, calibration, kernels)")
    p.add_argument("--calibration", metavar="PATH",
                   help="calibration overlay file (flat calibration keys)")
    p.add_argument("--out", metavar="PATH",
                   help="write report records here instead of stdout")
    p.add_argument("--trace", action="store_true",
                   help="emit an event trace (to <out>.trace, or stderr)")
    sub = p.add_subparsers(dest="cmd", required=True)

    runp = sub.add_parser("run", help="simulate one offload")
    runp.add_argument("--kernel", required=True)
    runp.add_argument("--size", required=True,
                      help="problem size, e.g. 1024 or 64x64 or 16x16x16")
    runp.add_argument("--n-clusters", type=int, required=True)
    runp.add_argument("--mode", choices=MODES, default="baseline")

    swp = sub.add_parser("sweep", help="run a full grid")
    swp.add_argument("--kernels", default="axpy",
                     help="comma-separated kernel names")
    swp.add_argument("--sizes", default="",
                     help="comma-separated size specs (strong scaling)")
    swp.add_argument("--clusters", default="1,2,4,8,16,32",
                     help="comma-separated cluster counts")
    swp.add_argument("--modes", default=",".join(MODES))
    swp.add_argument("--weak-base", default="",
                     help="comma-separated per-cluster sizes; each n runs "
                          "sizes base*n (overrides --sizes)")
    swp.add_argument("--csv", metavar="PATH",
                     help="additionally write the rows as CSV")

    mp = sub.add_parser("model", help="evaluate the analytic model")
    mp.add_argument("--kernel", required=True)
    mp.add_argument("--size", required=True)
    mp.add_argument("--n-clusters", type=int, required=True)

    vp = sub.add_parser("validate", help="simulator vs. model over the grids")
    vp.add_argument("--kernel", choices=sorted(VALIDATE_GRIDS),
                    help="restrict to one modeled kernel")

    dp = sub.add_parser("decode", help="route an addr/mask store")
    dp.add_argument("--addr", required=True)
    dp.add_argument("--mask", default="0")
    return p


def _parse_size(kernel_spec, text: str) -> dict:
    parts = text.lower().split("x")
    names = kernel_spec.size_names
    if len(parts) != len(names):
        raise ConfigError(
            f"kernel {kernel_spec.name!r} takes sizes {'x'.join(names)}, "
            f"got {text!r}")
    try:
        values = [int(v, 0) for v in parts]
    except ValueError:
        raise ConfigError(f"bad size spec {text!r}") from None
    return dict(zip(names, values))


def _parse_list(text: str, what: str, conv=str) -> list:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigError(f"empty {what} list")
    try:
        return [conv(t) for t in items]
    except ValueError:
        raise ConfigError(f"bad {what} list: {text!r}") from None


class _Output:
    def __init__(self, path=None):
        self.path = path
        self._fh = open(path, "w") if path else sys.stdout

    def record(self, rec: dict) -> None:
        self._fh.write(json.dumps(rec) + "\n")

    def close(self) -> None:
        if self.path:
            self._fh.close()


def _trace_sink(args):
    """Returns (callable-or-None, flush)."""
    if not args.trace:
        return None, lambda: None
    lines = []

    def cb(cycle, actor, label):
        lines.append(f"{cycle} {actor} {label}")

    def flush():
        text = "\n".join(lines) + ("\n" if lines else "")
        if args.out:
            with open(args.out + ".trace", "w") as f:
                f.write(text)
        else:
            sys.stderr.write(text)

    return cb, flush


def _registry(custom) -> dict:
    reg = builtin_kernels()
    reg.update(custom)
    return reg


def _lookup_kernel(registry, name):
    if name not in registry:
        raise ConfigError(
            f"unknown kernel {name!r} (available: {sorted(registry)})")
    return registry[name]


def cmd_run(args) -> int:
    topo, calib, custom = make_platform(args.config, args.calibration)
    kernel = _lookup_kernel(_registry(custom), args.kernel)
    params = _parse_size(kernel, args.size)
    trace, flush = _trace_sink(args)
    job = JobDescriptor(kernel=kernel, params=params,
                        n_clusters=args.n_clusters, mode=args.mode)
    report = run_offload(topo, calib, job, trace=trace)
    out = _Output(args.out)
    out.record(report.to_record())
    out.close()
    flush()
    return 0


def _sweep_metrics(totals: dict) -> dict:
    """Derived columns for one (kernel, size, n) grid point."""
    extra = {}
    ideal = totals.get("ideal")
    base = totals.get("baseline")
    ext = totals.get("extended")
    if ideal is not None:
        if base is not None:
            extra["overhead_vs_ideal_baseline"] = base - ideal
        if ext is not None:
            extra["overhead_vs_ideal_extended"] = ext - ideal
            extra["restored_fraction"] = round(ideal / ext, 6)
        if base is not None and ext is not None:
            m = analytic.speedup_metrics(base, ideal, ext)
            extra["ideal_speedup"] = round(m.ideal_speedup, 6)
            extra["ext_speedup"] = round(m.ext_speedup, 6)
    return extra


def cmd_sweep(args) -> int:
    topo, calib, custom = make_platform(args.config, args.calibration)
    registry = _registry(custom)
    kernels = [_lookup_kernel(registry, k)
               for k in _parse_list(args.kernels, "kernel")]
    clusters = _parse_list(args.clusters, "cluster", int)
    modes = _parse_list(args.modes, "mode")
    for m in modes:
        if m not in MODES:
            raise ConfigError(f"unknown mode {m!r}")
    if not args.sizes and not args.weak_base:
        raise ConfigError("sweep needs --sizes or --weak-base")

    rows = []
    for kernel in kernels:
        for n in clusters:
            if args.weak_base:
                bases = _parse_list(args.weak_base, "weak-base", int)
                sizes = [dict.fromkeys(kernel.size_names, b * n) for b in bases]
            else:
                sizes = [_parse_size(kernel, s)
                         for s in _parse_list(args.sizes, "size")]
            for params in sizes:
                rows.append((kernel, params, n))
    # deterministic grid order: kernel, then size, then n
    rows.sort(key=lambda r: (r[0].name, sorted(r[1].items()), r[2]))

    out = _Output(args.out)
    emitted = []
    for kernel, params, n in rows:
        try:
            kernel.check_partition(n, params)
        except PartitionError as e:
            rec = {"warning": "skipped", "kernel": kernel.name}
            rec.update(params)
            rec["n_clusters"] = n
            rec["reason"] = str(e)
            out.record(rec)
            emitted.append(rec)
            continue
        reports = {}
        for mode in modes:
            job = JobDescriptor(kernel=kernel, params=params,
                                n_clusters=n, mode=mode)
            reports[mode] = run_offload(topo, calib, job)
        totals = {m: r.total for m, r in reports.items()}
        extra = _sweep_metrics(totals)
        for mode in modes:
            rec = reports[mode].to_record()
            rec.update(extra)
            out.record(rec)
            emitted.append(rec)
    out.close()
    if args.csv:
        _write_csv(args.csv, emitted)
    return 0


def _write_csv(path: str, records: list) -> None:
    """CSV projection carrying the same fields (phase stats flattened)."""
    flat = []
    for rec in records:
        row = {}
        for key, value in rec.items():
            if key == "phases":
                for ph in value:
                    for stat in ("min", "max", "mean"):
                        row[f"phase_{ph['name']}_{stat}"] = ph[stat]
            else:
                row[key] = value
        flat.append(row)
    columns = []
    for row in flat:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=columns)
        w.writeheader()
        w.writerows(flat)


def cmd_model(args) -> int:
    _topo, _calib, custom = make_platform(args.config, args.calibration)
    kernel = _lookup_kernel(_registry(custom), args.kernel)
    params = _parse_size(kernel, args.size)
    try:
        est = analytic.estimate(kernel.name, args.n_clusters, params)
    except KeyError as e:
        raise ConfigError(e.args[0]) from None
    out = _Output(args.out)
    out.record(est.to_record())
    out.close()
    return 0


def cmd_validate(args) -> int:
    topo, calib, _custom = make_platform(args.config, args.calibration)
    registry = builtin_kernels()
    names = [args.kernel] if args.kernel else sorted(VALIDATE_GRIDS)
    out = _Output(args.out)
    worst = 0.0
    for name in names:
        kernel = registry[name]
        for params in VALIDATE_GRIDS[name]:
            for n in VALIDATE_CLUSTERS:
                job = JobDescriptor(kernel=kernel, params=params,
                                    n_clusters=n, mode="extended")
                sim_total = run_offload(topo, calib, job).total
                model_total = analytic.estimate(name, n, params).total
                err = analytic.relative_error(sim_total, model_total)
                worst = max(worst, err)
                rec = {"kernel": name}
                rec.update(params)
                rec.update({
                    "n_clusters": n,
                    "simulated": sim_total,
                    "predicted": round(model_total, 6),
                    "relative_error": round(err, 6),
                })
                out.record(rec)
    ok = worst <= VALIDATE_THRESHOLD
    out.record({"max_relative_error": round(worst, 6),
                "threshold": VALIDATE_THRESHOLD,
                "pass": ok})
    out.close()
    return 0 if ok else 1


def cmd_decode(args) -> int:
    topo, _calib, _custom = make_platform(args.config, args.calibration)
    try:
        addr = int(args.addr, 0)
        mask = int(args.mask, 0)
    except ValueError:
        raise ConfigError(
            f"addr/mask must be integers, got {args.addr!r}/{args.mask!r}") from None
    ports = route(MulticastAddress(addr, mask), address_map(topo))
    line = " ".join(f"{p:#x}" for p in sorted(ports))
    if args.out:
        with open(args.out, "w") as f:
            f.write(line + "\n")
    else:
        print(line)
    return 0


_COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "model": cmd_model,
    "validate": cmd_validate,
    "decode": cmd_decode,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.cmd](args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (PartitionError, DecodeError, ProtocolError, LivelockError,
            ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
