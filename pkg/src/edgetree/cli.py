"""Command-line entry point."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .allocator import AllocationError, Infeasible, load_csv_instance, load_instance, solve_exact, solve_oracle
from .dsl import ast, check_source

EXIT_OK, EXIT_RUNTIME, EXIT_PARSE, EXIT_INFEASIBLE = 0, 1, 2, 3
SEED_ENV = "EDGETREE_SEED"


def _err(msg: str):
    print(msg, file=sys.stderr)


def default_seed(fallback: int = 0) -> int:
    raw = os.environ.get(SEED_ENV)
    try:
        return int(raw) if raw not in (None, "") else fallback
    except ValueError:
        _err(f"warning: ignoring non-integer {SEED_ENV}={raw!r}")
        return fallback


def cmd_parse(args) -> int:
    try:
        text = Path(args.file).read_text()
    except OSError as e:
        _err(f"{args.file}: {e.strerror}")
        return EXIT_RUNTIME
    prog, diags = check_source(text, args.app or Path(args.file).stem)
    for d in diags:
        _err(d.format(args.file))
    if diags:
        return EXIT_PARSE
    print(json.dumps(ast.to_json(prog), indent=2))
    return EXIT_OK


def cmd_allocate(args) -> int:
    try:
        if args.csv:
            if not args.fogfog:
                _err("--csv needs two tables: <device-fog.csv> <fog-fog.csv>")
                return EXIT_RUNTIME
            inst = load_csv_instance(Path(args.instance).read_text(), Path(args.fogfog).read_text(),
                                     fixed_cost=args.fixed_cost, capacity=args.capacity)
        else:
            inst = load_instance(Path(args.instance))
    except OSError as e:
        _err(f"{e.filename}: {e.strerror}")
        return EXIT_RUNTIME
    except Infeasible as e:
        _err(f"{args.instance}: Infeasible: {e}")
        return EXIT_INFEASIBLE
    except (AllocationError, ValueError, KeyError) as e:
        _err(f"{args.instance}: InvalidInstance: {e}")
        return EXIT_PARSE
    try:
        alloc = (solve_oracle if args.oracle else solve_exact)(inst)
    except Infeasible as e:
        _err(f"{args.instance}: Infeasible: {e}")
        return EXIT_INFEASIBLE
    except AllocationError as e:
        _err(f"{args.instance}: {type(e).__name__}: {e}")
        return EXIT_RUNTIME
    text = json.dumps(alloc.to_dict(inst), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    from .experiments import ScenarioError, emit_results, run_experiment

    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except OSError as e:
            _err(f"{args.config}: {e.strerror}")
            return EXIT_RUNTIME
        except json.JSONDecodeError as e:
            _err(f"{args.config}:{e.lineno}:{e.colno}: SyntaxError: {e.msg}")
            return EXIT_PARSE
    if args.seed is not None:
        cfg["seed"] = args.seed
    else:
        cfg.setdefault("seed", default_seed())
    try:
        results = run_experiment(args.name, cfg)
        for res in results:
            emit_results(res, args.out)
            s = res.summary
            mean = "-" if s["mean"] is None else f"{s['mean']:.3f}"
            print(f"{res.name}: n={s['count']} mean={mean} trace={res.trace_hash[:12]}")
    except ScenarioError as e:
        _err(f"error: {e}")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_dshell(args) -> int:
    from .dshell import DShell, ShellRepl, run_script
    from .topology import TopologyError, load_topology

    try:
        topo = load_topology(args.topology)
    except OSError as e:
        _err(f"{args.topology}: {e.strerror}")
        return EXIT_RUNTIME
    except (TopologyError, ValueError, KeyError) as e:
        _err(f"{args.topology}: {type(e).__name__}: {e}")
        return EXIT_PARSE
    seed = args.seed if args.seed is not None else default_seed(topo.seed)
    shell = DShell(topo, seed, reuse_ms=args.reuse_ms)
    if args.script:
        path = Path(args.script)
        try:
            lines = path.read_text().splitlines()
        except OSError as e:
            _err(f"{args.script}: {e.strerror}")
            return EXIT_RUNTIME
        run_script(shell, lines, sys.stdout, path.parent)
    else:
        ShellRepl(shell).cmdloop(intro="DShell on " + args.topology + "\n" + "type 'quit' to leave")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edgetree", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", help="parse and validate a declaration file, print its AST as JSON")
    sp.add_argument("file")
    sp.add_argument("--app", help="application name (default: file stem)")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("allocate", help="solve a fog allocation instance")
    sp.add_argument("instance", help="instance JSON, or the device-fog table with --csv")
    sp.add_argument("fogfog", nargs="?", help="fog-fog table (with --csv)")
    sp.add_argument("--oracle", action="store_true", help="use the enumeration oracle")
    sp.add_argument("--csv", action="store_true", help="read the two cost tables as CSV")
    sp.add_argument("--fixed-cost", type=float, default=400.0)
    sp.add_argument("--capacity", type=int, default=3)
    sp.add_argument("--out", help="write the solution here instead of stdout")
    sp.set_defaults(func=cmd_allocate)

    sp = sub.add_parser("experiment", help="run a scenario and write result files")
    sp.add_argument("name", choices=["turnaround", "push", "selective", "failover", "parking"])
    sp.add_argument("--config")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("dshell", help="interactive distributed shell")
    sp.add_argument("--topology", required=True)
    sp.add_argument("--script")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--reuse-ms", type=float, default=20.0)
    sp.set_defaults(func=cmd_dshell)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
