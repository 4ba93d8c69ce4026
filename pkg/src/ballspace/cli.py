"""Command-line experiment runner.

Subcommands: run, list-spaces, list-checks, norm-eval, dump-effective-config.
Exit codes for ``run``: 0 all asserted checks pass, 1 a check failed,
2 config parse error, 3 config validation error.
"""

from __future__ import annotations

import argparse
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import config as cfgmod
from .config import CheckConfig, ConfigParseError, ConfigValidationError, ExperimentConfig
from .grid import sample
from .harness import (
    CHECKS,
    Battery,
    PairFamily,
    convergence_check,
    extrapolation_check,
    make_probe,
    proof_chain_suite,
    riesz_boundedness_check,
    rng_for,
    translated_indicators,
    vector_valued_check,
    wavelet_equivalence_check,
)
from .report import VerificationReport, plot_csv, text_table
from .spaces import SPACE_SCHEMAS, SPACE_TAGS, SpaceError, axioms_check, parse_space, standard_balls, standard_battery
from .wavelets import build_system

OUTPUT_ENV = "BALLSPACE_OUTPUT_DIR"

CHECK_LIST = dict(CHECKS, axioms="space; empirical lattice-norm axioms on the standard battery")


def _num(v):
    return math.inf if isinstance(v, str) and v.lower() in ("inf", "oo") else v


def run_check(cfg: ExperimentConfig, c: CheckConfig) -> VerificationReport:
    """Execute one configured check; pure given (cfg, c)."""
    grid = (c.grid or cfg.grid).build()
    X = cfg.space(c.space)
    P = c.params
    h = cfg.harness
    seed = c.seed(cfg.seed)
    battery = Battery(P.get("kind", h.battery_kind), P.get("count", h.battery_count), seed)
    system = build_system(P.get("wavelet", cfg.wavelet.family), grid.n, cfg.wavelet.J, cfg.wavelet.cascade_level)
    if c.check == "axioms":
        rep = axioms_check(X, standard_battery(grid, seed), standard_balls(grid), P.get("tol", 1e-6))
    elif c.check == "extrapolation":
        fam = PairFamily(P.get("family", "maximal"), P.get("p", 2.0), s=P.get("s", 0.0), system=system,
                         normalization=h.normalization)
        rep = extrapolation_check(fam, X, grid, battery, P.get("growth", h.growth))
    elif c.check == "proof_chain":
        ps = P.get("p", [1.5, 2.0, 3.0])
        ps = ps if isinstance(ps, list) else [ps]
        rep = VerificationReport("proof_chain")
        for p in ps:
            sub = proof_chain_suite(p, X, grid, P.get("triples", 10), seed, P.get("tol", h.tol), P.get("eps", 0.25),
                                    P.get("alpha", h.alpha), P.get("beta", h.beta), h.normalization)
            for r in sub.records:
                rep.add(p=p, **r)
            rep.aggregates[f"min_slack_p{p:g}"] = sub.aggregates["min_slack"]
            rep.config[f"p{p:g}"] = sub.config
            for note in sub.notes:
                rep.require(False, f"p={p:g}: {note}")
    elif c.check == "wavelet_equivalence":
        count = P.get("count", 2 * h.battery_count)
        rep = wavelet_equivalence_check(X, P.get("s", 0.0), system, grid, Battery(battery.kind, count, seed),
                                        P.get("budget", h.budget), P.get("drift", h.growth), seed,
                                        P.get("split", True), cfg.wavelet.j_max)
    elif c.check == "convergence":
        f = make_probe(grid, P.get("kind", "random"), rng_for(seed, 0))
        rep = convergence_check(X, system, f, tol=P.get("tol", 1e-8), j_max=cfg.wavelet.j_max)
    elif c.check == "vector_valued":
        sizes = P.get("sizes", [4, 8, 16])
        rep = vector_valued_check(X, [translated_indicators(grid, k) for k in sizes], _num(P.get("r", 2.0)),
                                  P.get("growth", h.growth), h.normalization)
    elif c.check == "riesz_boundedness":
        rep = riesz_boundedness_check(X, grid, battery, P.get("agree", 2.0))
    else:
        raise ConfigValidationError(f"unknown check {c.check!r}")
    rep.config.update(name=c.name, seed=seed, base_seed=cfg.seed, space_name=c.space,
                      normalization=h.normalization)
    return rep


def run_config(cfg: ExperimentConfig, out_dir: Path | None = None) -> tuple[int, list[VerificationReport]]:
    workers = cfg.harness.workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(lambda c: run_check(cfg, c), cfg.checks))
    else:
        reports = [run_check(cfg, c) for c in cfg.checks]
    if out_dir is not None:
        write_reports(cfg, reports, out_dir)
    status = 0 if all(r.ok for r in reports) else 1
    return status, reports


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def write_reports(cfg: ExperimentConfig, reports, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    fmts = cfg.output.formats
    if "json" in fmts:
        for c, r in zip(cfg.checks, reports):
            (out_dir / f"{_safe(c.name)}.json").write_text(r.to_json() + "\n")
    if "table" in fmts:
        (out_dir / "summary.txt").write_text(text_table(reports))
    if "csv" in fmts:
        (out_dir / "plot.csv").write_text(plot_csv(reports))
    (out_dir / "effective_config.toml").write_text(cfg.dumps())


def output_dir(cfg: ExperimentConfig, override: str | None) -> Path:
    return Path(override or cfg.output.dir or os.environ.get(OUTPUT_ENV) or "reports")


def _load(path: str | None) -> ExperimentConfig:
    return cfgmod.load(path or cfgmod.default_suite_path())


def cmd_run(args) -> int:
    try:
        cfg = _load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.workers is not None:
            cfg.harness.workers = args.workers
        cfgmod.validate(cfg)
    except (ConfigParseError, ConfigValidationError) as exc:
        print(exc, file=sys.stderr)
        return exc.exit_code
    out = output_dir(cfg, args.out)
    status, reports = run_config(cfg, out)
    if args.dump_effective_config:
        sys.stdout.write(cfg.dumps())
    else:
        sys.stdout.write(text_table(reports))
        print(f"reports written to {out}")
    return status


def cmd_dump(args) -> int:
    try:
        cfg = _load(args.config)
    except (ConfigParseError, ConfigValidationError) as exc:
        print(exc, file=sys.stderr)
        return exc.exit_code
    sys.stdout.write(cfg.dumps())
    return 0


def cmd_list_spaces(args) -> int:
    for tag in sorted(SPACE_TAGS):
        print(f"{tag}: {SPACE_SCHEMAS[tag]}")
    return 0


def cmd_list_checks(args) -> int:
    for name in sorted(CHECK_LIST):
        print(f"{name}: {CHECK_LIST[name]}")
    return 0


def cmd_norm_eval(args) -> int:
    try:
        cfg = _load(args.config)
    except (ConfigParseError, ConfigValidationError) as exc:
        print(exc, file=sys.stderr)
        return exc.exit_code
    grid = cfg.grid
    if args.L is not None or args.box is not None:
        grid = cfgmod.GridConfig(grid.n, _box(args.box) if args.box else grid.box, args.L if args.L is not None else grid.L)
    try:
        g = grid.build()
        X = cfg.space(args.space) if args.space in cfg.spaces else parse_space(args.space, cfg.weight_specs())
        value = X.norm(sample(args.function, g))
    except (SpaceError, ValueError) as exc:
        print(exc, file=sys.stderr)
        return 3
    print(f"space = {X.to_dict()}")
    print(f"function = {args.function}")
    print(f"grid = {g.to_dict()}")
    print(f"norm = {float(value)!r}")
    return 0


def _box(text: str) -> list:
    vals = [float(v) for v in text.split(",")]
    if len(vals) % 2:
        raise SystemExit("--box needs pairs a,b[,a,b]")
    return [vals[i : i + 2] for i in range(0, len(vals), 2)]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ballspace", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the checks of a config (default: the bundled suite)")
    r.add_argument("config", nargs="?")
    r.add_argument("--out", help=f"output directory (default: config, then ${OUTPUT_ENV}, then ./reports)")
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--dump-effective-config", action="store_true", help="print the effective config after running")
    r.set_defaults(func=cmd_run)
    d = sub.add_parser("dump-effective-config", help="print the config with all defaults filled in")
    d.add_argument("config", nargs="?")
    d.set_defaults(func=cmd_dump)
    sub.add_parser("list-spaces").set_defaults(func=cmd_list_spaces)
    sub.add_parser("list-checks").set_defaults(func=cmd_list_checks)
    n = sub.add_parser("norm-eval", help="evaluate a norm of an expression, e.g. 'Morrey(4,2)' 'chi(0,1,x)'")
    n.add_argument("space", help="space name from the config or a space expression")
    n.add_argument("function")
    n.add_argument("--config")
    n.add_argument("--L", type=int)
    n.add_argument("--box", help="a,b[,c,d]")
    n.set_defaults(func=cmd_norm_eval)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
