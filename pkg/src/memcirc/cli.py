"""Command-line front end: run a JSON-configured experiment or a bundled recipe.

Exit codes: 0 success, 1 invalid configuration, 2 simulation or solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import experiments
from .errors import InvalidArgument, MemcircError
from .signals import atomic_open, write_columns

EXIT_OK, EXIT_CONFIG, EXIT_FAILURE = 0, 1, 2


def recipe_names() -> list:
    root = resources.files("memcirc") / "recipes"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_recipe(name: str) -> dict:
    path = resources.files("memcirc") / "recipes" / f"{name}.json"
    if not path.is_file():
        raise experiments.ConfigError(f"unknown recipe {name!r}; available: {', '.join(recipe_names())}")
    return json.loads(path.read_text())


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise experiments.ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise experiments.ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def _parse_set(items) -> list:
    out = []
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise experiments.ConfigError(f"--set expects key=value, got {item!r}")
        out.append((key, experiments.parse_value(val)))
    return out


def _parse_sweep(text):
    key, sep, vals = text.partition("=")
    if not sep or not key or not vals:
        raise experiments.ConfigError(f"--sweep expects key=v1,v2,..., got {text!r}")
    return key, [experiments.parse_value(v) for v in vals.split(",")]


def _write_json(path, doc):
    with atomic_open(path) as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def write_result(out: Path, cfg: dict, result, plot: bool) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    for name, (header, cols) in result.tables.items():
        write_columns(out / name, header, cols)
    for name, doc in result.documents.items():
        _write_json(out / name, experiments._clean(doc))
    if plot:
        for fig in result.figures:
            fig(out)
    summary = experiments.summary_document(cfg, result)
    _write_json(out / "summary.json", summary)
    return summary


def _scalar_items(headline: dict):
    for k, v in headline.items():
        if isinstance(v, (bool, np.bool_)):
            yield k, float(v)
        elif isinstance(v, (int, float, np.integer, np.floating)):
            yield k, float(v)


def run_sweep(cfg, key, values, out: Path, plot: bool, echo) -> int:
    out.mkdir(parents=True, exist_ok=True)
    rows, names, ok = [], [], 0
    for val in values:
        point = experiments.apply_override(cfg, key, val)
        try:
            res = experiments.run_config(point)
        except MemcircError as exc:
            rows.append({"value": val, "error": str(exc)})
            echo(f"{key}={val}: failed: {exc}")
            continue
        ok += 1
        head = dict(_scalar_items(res.headline))
        for k in head:
            if k not in names:
                names.append(k)
        rows.append({"value": val, "headline": experiments._clean(res.headline)})
        rows[-1]["_scalars"] = head
        echo(f"{key}={val}: " + ", ".join(f"{k}={v:.6g}" for k, v in head.items()))
    header = [key.split(".")[-1]] + names
    cols = [[float(r["value"]) if isinstance(r["value"], (int, float)) else np.nan for r in rows]]
    for n in names:
        cols.append([r.get("_scalars", {}).get(n, np.nan) for r in rows])
    write_columns(out / "sweep.csv", header, cols)
    if plot and ok and names:
        from . import plotting

        picked = names[:4]
        plotting.plot_sweep(out / "sweep.png", cols[0], {n: cols[1 + names.index(n)] for n in picked},
                            key)
    for r in rows:
        r.pop("_scalars", None)
    _write_json(out / "summary.json", {"kind": "sweep", "input_hash": experiments.config_hash(cfg),
                                       "sweep_key": key, "succeeded": ok, "rows": rows})
    return EXIT_OK if ok else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", default=[],
                        help="override a config field, dotted keys allowed (repeatable)")
    common.add_argument("--sweep", metavar="KEY=V1,V2,...", help="run once per value of KEY")
    common.add_argument("--quiet", action="store_true", help="suppress console output")
    common.add_argument("--no-plot", action="store_true", help="skip PNG figures")

    p = argparse.ArgumentParser(prog="memcirc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run a JSON config")
    r.add_argument("config_path", nargs="?", help="JSON config file")
    r.add_argument("--config", dest="config_opt", help="JSON config file")
    rc = sub.add_parser("recipe", parents=[common], help="run a bundled recipe")
    rc.add_argument("name", nargs="?")
    rc.add_argument("--list", action="store_true", help="list bundled recipes")
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] not in ("run", "recipe", "-h", "--help"):
        argv.insert(0, "run")
    args = build_parser().parse_args(argv)
    echo = (lambda *a: None) if args.quiet else print
    t0 = time.perf_counter()
    try:
        if args.command == "recipe":
            if args.list or not args.name:
                for n in recipe_names():
                    print(n)
                return EXIT_OK
            cfg = load_recipe(args.name)
        else:
            path = args.config_opt or args.config_path
            if not path:
                raise experiments.ConfigError("no config given (positional path or --config)")
            cfg = load_config(path)
        if not isinstance(cfg, dict):
            raise experiments.ConfigError("config must be a JSON object")
        for key, val in _parse_set(args.set):
            cfg = experiments.apply_override(cfg, key, val)
        sweep = cfg.pop("sweep", None)
        if args.sweep:
            sweep = dict(zip(("key", "values"), _parse_sweep(args.sweep)))
        out = Path(args.out)
        if sweep:
            code = run_sweep(cfg, sweep["key"], sweep["values"], out, not args.no_plot, echo)
        else:
            result = experiments.run_config(cfg)
            summary = write_result(out, cfg, result, not args.no_plot)
            for k, v in summary["headline"].items():
                echo(f"{k}: {v}")
            code = EXIT_OK
    except InvalidArgument as exc:
        print(f"memcirc: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MemcircError as exc:
        print(f"memcirc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    echo(f"wall time: {time.perf_counter() - t0:.2f} s")
    return code


if __name__ == "__main__":
    sys.exit(main())
