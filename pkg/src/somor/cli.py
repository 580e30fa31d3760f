"""Command-line surface: generate, reduce, freqresp, verify, compare.

Every run writes a run_manifest.json (command, config snapshot, seed, paths,
per-phase wall-clock timings) so it can be reproduced exactly. Exit codes:
0 success, 2 argument error, 3 numerical failure, 4 non-convergence with
partial output.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, dense_bt, freq_response, projection_oracle, verify
from .benchmarks import generate as generate_benchmark
from .errors import NumericalError, UsageError
from .irka_reducer import IrkaOptions, irka_reduce
from .mmio import (
    load_reduced_model,
    load_system,
    manifest_sha256,
    save_first_order_model,
    save_reduced_model,
    save_system,
)
from .model_core import ReducedSecondOrderModel, require_valid
from .svgplot import write_line_plot

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_NO_CONVERGENCE = 4

DEFAULT_BANDS = {"dsms": (1e-2, 1.0), "tcom": (1e-3, 1.0)}


def _parse_band(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(p) for p in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"band must be LO:HI, got {text!r}") from exc
    return lo, hi


def load_config(path) -> dict[str, str]:
    """key=value lines; blank lines and # comments ignored."""
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"bad config line {raw!r} (expected key=value)")
        key, val = line.split("=", 1)
        values[key.strip()] = val.strip()
    return values


_CONFIG_TYPES = {
    "r": int, "max_iter": int, "seed": int, "grid": int, "workers": int,
    "tol": float, "band": _parse_band, "method": str, "model": str,
    "n1": int, "n2": int, "g": int, "out": str, "model_dir": str,
}


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill argument holes from --config; explicit flags always win."""
    if not getattr(args, "config", None):
        return args
    for key, raw in load_config(args.config).items():
        if key not in _CONFIG_TYPES:
            raise UsageError(f"unknown config key {key!r}")
        attr = key
        if hasattr(args, attr) and getattr(args, attr) is None:
            try:
                setattr(args, attr, _CONFIG_TYPES[key](raw))
            except ValueError as exc:
                raise UsageError(f"bad config value for {key}: {raw!r}") from exc
    return args


def _default(value, fallback):
    return fallback if value is None else value


class _Timings:
    def __init__(self):
        self.phases = {}

    def measure(self, name):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.phases[name] = timer.phases.get(name, 0.0) + time.perf_counter() - self.t0
                return False

        return _Ctx()


def write_run_manifest(out_dir, command: str, config: dict, timings: _Timings,
                       inputs: dict | None = None, outputs: dict | None = None) -> Path:
    doc = {
        "schema": "somor-run-v1",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "inputs": inputs or {},
        "outputs": outputs or {},
        "timings_s": {k: round(v, 6) for k, v in timings.phases.items()},
    }
    path = Path(out_dir) / "run_manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _band_for(args, model_dir=None) -> tuple[float, float]:
    if getattr(args, "band", None) is not None:
        return args.band
    if model_dir is not None:
        manifest = Path(model_dir) / "manifest.json"
        if manifest.is_file():
            model = json.loads(manifest.read_text()).get("model")
            if model in DEFAULT_BANDS:
                return DEFAULT_BANDS[model]
    return DEFAULT_BANDS["dsms"]


def cmd_generate(args) -> int:
    out = Path(args.out)
    timings = _Timings()
    kwargs = {"seed": _default(args.seed, 0)}
    model = (args.model or "").lower()
    if model == "dsms":
        if args.n1 is None or args.n2 is None:
            raise UsageError("dsms needs --n1 and --n2")
        kwargs.update(n1=args.n1, n2=args.n2)
    elif model == "tcom":
        if args.g is not None:
            kwargs["g"] = args.g
        elif args.n1 is not None:
            if (args.n1 - 1) % 3:
                raise UsageError(f"tcom needs n1 = 3g+1, got n1={args.n1}")
            kwargs["g"] = (args.n1 - 1) // 3
        else:
            raise UsageError("tcom needs --g or --n1")
        if args.n2 is not None:
            kwargs["n2"] = args.n2
    else:
        raise UsageError(f"unknown model {args.model!r} (expected dsms or tcom)")
    with timings.measure("generate"):
        sys_obj, record = generate_benchmark(model, **kwargs)
    with timings.measure("validate"):
        require_valid(sys_obj)
    with timings.measure("write"):
        manifest = save_system(sys_obj, out, extra={"generator": record, "model": model})
    config = {"model": model, **kwargs}
    write_run_manifest(out, "generate", config, timings,
                       outputs={"manifest": str(manifest)})
    print(f"wrote {model} system (n1={sys_obj.n1}, n2={sys_obj.n2}) to {out}")
    return EXIT_OK


def _reduce_bt(sys_obj, r: int, out: Path, timings: _Timings, source_hash: str):
    with timings.measure("project"):
        split = projection_oracle.split_projector(projection_oracle.build_projector(sys_obj))
        psys = projection_oracle.project_system(sys_obj, split)
    n = psys.M.shape[0]
    with timings.measure("bt"):
        E = np.block([[np.eye(n), np.zeros((n, n))], [np.zeros((n, n)), psys.M]])
        A = np.block([[np.zeros((n, n)), np.eye(n)], [-psys.K, -psys.D]])
        B = np.vstack([np.zeros((n, psys.F.shape[1])), psys.F])
        C = np.hstack([psys.L, np.zeros((psys.L.shape[0], n))])
        red = dense_bt.balanced_truncate(E, A, B, C, r)
    with timings.measure("write"):
        save_first_order_model(red.E, red.A, red.B, red.C, out / "rom.json",
                               hankel=red.hankel, source_hash=source_hash)
        with open(out / "hankel.csv", "w") as fh:
            fh.write("index,hankel\n")
            for i, s in enumerate(red.hankel):
                fh.write(f"{i + 1},{s:.17g}\n")
    return red


def cmd_reduce(args) -> int:
    if args.r is None or args.r < 1:
        raise UsageError("--r must be a positive integer")
    method = (args.method or "irka").lower()
    if method not in ("irka", "bt"):
        raise UsageError(f"unknown method {args.method!r} (expected irka or bt)")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    timings = _Timings()
    with timings.measure("load"):
        sys_obj = load_system(args.model_dir)
        source_hash = manifest_sha256(args.model_dir)
    band = _band_for(args, args.model_dir)
    seed = _default(args.seed, 0)
    config = {"method": method, "r": args.r, "tol": _default(args.tol, 1e-4),
              "max_iter": _default(args.max_iter, 50), "band": list(band), "seed": seed}
    status = "done"
    if method == "bt":
        _reduce_bt(sys_obj, args.r, out, timings, source_hash)
    else:
        opts = IrkaOptions(max_iter=config["max_iter"], tol=config["tol"],
                           band=band, seed=seed)
        with timings.measure("reduce"):
            rom, trace = irka_reduce(sys_obj, args.r, opts)
        with timings.measure("write"):
            save_reduced_model(rom, out / "rom.json", source_hash=source_hash)
            trace.to_csv(out / "trace.csv")
        status = trace.status
    write_run_manifest(out, "reduce", config, timings,
                       inputs={"model_dir": str(args.model_dir)},
                       outputs={"rom": str(out / "rom.json"), "status": status})
    print(f"reduce [{method}] r={args.r}: {status} "
          f"({timings.phases.get('reduce', timings.phases.get('bt', 0.0)):.2f}s)")
    if method == "irka" and status != "converged":
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _emit_plots(out: Path, grid, full_t, red_t, errors) -> list[str]:
    written = []
    curves = {}
    if full_t is not None:
        curves["full"] = full_t.sigma_max
    if red_t is not None:
        curves["reduced"] = red_t.sigma_max
    if curves:
        write_line_plot(out / "response.svg", grid.omegas, curves,
                        title="Frequency response", xlabel="omega (rad/s)",
                        ylabel="sigma_max")
        written.append("response.svg")
    if errors is not None:
        write_line_plot(out / "abs_err.svg", grid.omegas, {"absolute error": errors.absolute},
                        title="Absolute error", xlabel="omega (rad/s)", ylabel="sigma_max")
        write_line_plot(out / "rel_err.svg", grid.omegas, {"relative error": errors.relative},
                        title="Relative error", xlabel="omega (rad/s)", ylabel="ratio")
        written += ["abs_err.svg", "rel_err.svg"]
    return written


def cmd_freqresp(args) -> int:
    if args.model_dir is None and args.reduced is None:
        raise UsageError("need --model-dir and/or --reduced")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    timings = _Timings()
    band = _band_for(args, args.model_dir)
    count = _default(args.grid, freq_response.DEFAULT_GRID_COUNT)
    grid = freq_response.make_grid(band[0], band[1], count)
    full_t = red_t = errors = None
    if args.model_dir is not None:
        with timings.measure("full_sweep"):
            sys_obj = load_system(args.model_dir)
            full_t = freq_response.full_response(sys_obj, grid, workers=args.workers)
    if args.reduced is not None:
        with timings.measure("reduced_sweep"):
            model = load_reduced_model(args.reduced)
            red_t = freq_response.reduced_response(model, grid, workers=args.workers)
    if full_t is not None and red_t is not None:
        errors = freq_response.error_curves(full_t, red_t)
    with timings.measure("write"):
        freq_response.write_response_csv(out / "response.csv", grid, full_t, red_t, errors)
        freq_response.write_channel_csv(out / "response_channels.csv", grid, full_t, red_t)
        plots = _emit_plots(out, grid, full_t, red_t, errors) if args.plot == "svg" else []
    config = {"band": list(band), "grid": count, "seed": _default(args.seed, 0)}
    write_run_manifest(out, "freqresp", config, timings,
                       inputs={"model_dir": str(args.model_dir or ""),
                               "reduced": str(args.reduced or "")},
                       outputs={"response": str(out / "response.csv"), "plots": plots})
    print(f"freqresp: {len(grid)} points -> {out / 'response.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    tier = args.tier or "small"
    timings = _Timings()
    with timings.measure("checks"):
        results = verify.run_checks(tier)
    doc = {
        "tier": tier,
        "all_passed": all(c.passed for c in results),
        "checks": [c.as_dict() for c in results],
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    failed = [c for c in results if not c.passed]
    print(f"verify[{tier}]: {len(results) - len(failed)}/{len(results)} checks passed",
          file=sys.stderr)
    return EXIT_OK if not failed else EXIT_NUMERICAL


def cmd_compare(args) -> int:
    if args.r is None or args.r < 1:
        raise UsageError("--r must be a positive integer")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    timings = _Timings()
    with timings.measure("load"):
        sys_obj = load_system(args.model_dir)
        source_hash = manifest_sha256(args.model_dir)
    band = _band_for(args, args.model_dir)
    count = _default(args.grid, freq_response.DEFAULT_GRID_COUNT)
    grid = freq_response.make_grid(band[0], band[1], count)
    seed = _default(args.seed, 0)

    with timings.measure("full_sweep"):
        full_t = freq_response.full_response(sys_obj, grid, workers=args.workers)

    arms: dict[str, dict] = {}
    opts = IrkaOptions(max_iter=_default(args.max_iter, 50), tol=_default(args.tol, 1e-4),
                       band=band, seed=seed)
    try:
        with timings.measure("irka"):
            rom, trace = irka_reduce(sys_obj, args.r, opts)
            save_reduced_model(rom, out / "irka_rom.json", source_hash=source_hash)
            trace.to_csv(out / "irka_trace.csv")
        with timings.measure("irka_sweep"):
            irka_t = freq_response.reduced_response(rom, grid, workers=args.workers)
        arms["irka"] = {"table": irka_t, "errors": freq_response.error_curves(full_t, irka_t),
                        "status": trace.status}
    except NumericalError as exc:
        arms["irka"] = {"failed": str(exc)}
        print(f"irka arm failed: {exc}", file=sys.stderr)
    try:
        red = _reduce_bt(sys_obj, args.r, out, timings, source_hash)
        (out / "rom.json").rename(out / "bt_rom.json")
        with timings.measure("bt_sweep"):
            bt_t = freq_response.reduced_response(
                {"E": red.E, "A": red.A, "B": red.B, "C": red.C}, grid, workers=args.workers)
        arms["bt"] = {"table": bt_t, "errors": freq_response.error_curves(full_t, bt_t)}
    except NumericalError as exc:
        arms["bt"] = {"failed": str(exc)}
        print(f"bt arm failed: {exc}", file=sys.stderr)

    def col(arm, kind, i):
        info = arms.get(arm)
        if not info or "table" not in info:
            return ""
        if kind == "sigma":
            return f"{info['table'].sigma_max[i]:.17g}"
        return f"{getattr(info['errors'], kind)[i]:.17g}"

    with timings.measure("write"):
        lines = ["omega,sigma_full,sigma_irka,sigma_bt,abs_err_irka,rel_err_irka,"
                 "abs_err_bt,rel_err_bt\n"]
        for i, w in enumerate(grid.omegas):
            lines.append(",".join([
                f"{w:.17g}", f"{full_t.sigma_max[i]:.17g}",
                col("irka", "sigma", i), col("bt", "sigma", i),
                col("irka", "absolute", i), col("irka", "relative", i),
                col("bt", "absolute", i), col("bt", "relative", i),
            ]) + "\n")
        (out / "compare.csv").write_text("".join(lines))
        with open(out / "timings.csv", "w") as fh:
            fh.write("phase,seconds\n")
            for phase, secs in timings.phases.items():
                fh.write(f"{phase},{secs:.6f}\n")

    summary = {}
    for arm, info in arms.items():
        if "errors" in info:
            summary[arm] = {"max_rel_err": info["errors"].max_relative()}
        else:
            summary[arm] = {"failed": info["failed"]}
    config = {"r": args.r, "band": list(band), "grid": count, "seed": seed,
              "tol": opts.tol, "max_iter": opts.max_iter}
    write_run_manifest(out, "compare", config, timings,
                       inputs={"model_dir": str(args.model_dir)},
                       outputs={"compare": str(out / "compare.csv"), "summary": summary})
    for arm in ("irka", "bt"):
        info = summary.get(arm, {})
        if "max_rel_err" in info:
            print(f"{arm}: max relative error {info['max_rel_err']:.3e}")
    if any("failed" in info for info in arms.values()):
        return EXIT_NUMERICAL
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, *names):
    if "model_dir" in names:
        p.add_argument("--model-dir", dest="model_dir", help="system directory with manifest.json")
    if "r" in names:
        p.add_argument("--r", type=int, help="reduced order")
    if "tol" in names:
        p.add_argument("--tol", type=float, help="convergence tolerance (default 1e-4)")
    if "max_iter" in names:
        p.add_argument("--max-iter", dest="max_iter", type=int, help="iteration cap (default 50)")
    if "band" in names:
        p.add_argument("--band", type=_parse_band, metavar="LO:HI",
                       help="frequency band, e.g. 1e-2:1")
    if "grid" in names:
        p.add_argument("--grid", type=int, help="number of grid points (default 200)")
    if "seed" in names:
        p.add_argument("--seed", type=int, help="random seed (default 0)")
    if "workers" in names:
        p.add_argument("--workers", type=int, help="parallel workers (capped by SOMOR_WORKERS)")
    p.add_argument("--config", help="key=value config file; flags override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="somor",
        description="Reduction of sparse constrained second-order models "
                    "via projector-free tangential interpolation.",
    )
    parser.add_argument("--version", action="version", version=f"somor {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a benchmark system to a model directory")
    p.add_argument("--model", required=True, help="dsms or tcom")
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--g", type=int, help="tcom chain length (n1 = 3g+1)")
    p.add_argument("--out", required=True)
    _add_common(p, "seed")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("reduce", help="compute a reduced model (irka or bt)")
    p.add_argument("--method", help="irka (default) or bt")
    p.add_argument("--out", required=True)
    _add_common(p, "model_dir", "r", "tol", "max_iter", "band", "seed", "workers")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("freqresp", help="sweep transfer functions and error curves")
    p.add_argument("--reduced", help="reduced-model JSON file")
    p.add_argument("--plot", choices=["svg"], help="emit SVG plots")
    p.add_argument("--out", required=True)
    _add_common(p, "model_dir", "band", "grid", "seed", "workers")
    p.set_defaults(func=cmd_freqresp)

    p = sub.add_parser("verify", help="run the cross-check invariant suite")
    p.add_argument("--tier", choices=["tiny", "small"], help="default small")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--config", help="key=value config file; flags override")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="run irka and bt on one model, joint curves + timings")
    p.add_argument("--out", required=True)
    _add_common(p, "model_dir", "r", "tol", "max_iter", "band", "grid", "seed", "workers")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _merge_config(args)
        if getattr(args, "model_dir", None) is None and args.command in ("reduce", "compare"):
            raise UsageError(f"{args.command} needs --model-dir")
        return args.func(args)
    except SystemExit as exc:  # argparse error or --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
