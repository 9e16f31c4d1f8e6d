"""Command-line interface: ``saomquad {simulate,estimate,analyze-selection,gof,report}``.

Exit codes: 0 success, 2 ingestion error, 3 estimation did not converge,
4 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import (
    CovariateSpec,
    ModelConfig,
    load_config,
    ingest,
    parse_bool,
    parse_floats,
    read_actor_labels,
    read_adjacency,
    read_covariate,
    write_panel,
)
from .effects import ParameterVector
from .estimation import MoMResult, estimate, t_test, wald_test
from .exceptions import ConfigurationError, IngestionError, SaomError
from .gof import FAMILIES, gof_all
from .network import CovariateRange, DirectedNetwork, NetworkPanel
from .report import analyze_selection, selection_from_result, write_selection_bundle
from .selection import QuadraticSelection
from .simulation import RateParameters, SimOptions, simulate_panel

EXIT_OK, EXIT_INGESTION, EXIT_NONCONVERGED, EXIT_CONFIG = 0, 2, 3, 4

logger = logging.getLogger("saomquad")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="model configuration file")
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    common.add_argument("--grid-resolution", type=int, default=101,
                        help="alter grid points for selection tables")
    common.add_argument("-v", "--verbose", action="store_true")
    p = _Parser(prog="saomquad", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (
        ("simulate", "simulate a network panel"),
        ("estimate", "method-of-moments estimation"),
        ("analyze-selection", "interpret a quadratic selection function"),
        ("gof", "goodness of fit of a fitted model"),
        ("report", "estimate, test, check fit and interpret in one bundle"),
    ):
        sub.add_parser(name, parents=[common], help=help_)
    return p


# --------------------------------------------------------------------------
# helpers


def _seed(args, cfg_section: dict):
    if args.seed is not None:
        return args.seed
    if "seed" in cfg_section:
        return int(cfg_section["seed"])
    return int(np.random.SeedSequence().entropy % (2**63))


def _resolve(cfg: ModelConfig, raw: str) -> Path:
    p = Path(raw)
    return p if p.is_absolute() else cfg.base_dir / p


def _labels_for(cfg: ModelConfig, n=None):
    if cfg.actors is not None:
        return read_actor_labels(cfg.actors)
    if n is None and cfg.waves:
        n = read_adjacency(cfg.waves[0]).n
    if n is None:
        raise ConfigurationError("actor count unknown: give [data] waves or actors")
    return [str(k + 1) for k in range(n)]


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, default=_json_default))


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def estimate_table(result: MoMResult) -> str:
    lines = [f"{'parameter':28s} {'estimate':>10s} {'s.e.':>9s} {'t':>7s} {'p':>8s} "
             f"{'conv t':>7s}"]
    for k, name in enumerate(result.names):
        se = result.std_errors[k]
        try:
            t = t_test(result, k)
            tz, p = f"{t.statistic:7.2f}", f"{t.p_value:8.4f}"
        except SaomError:
            tz, p = f"{'NA':>7s}", f"{'NA':>8s}"
        lines.append(f"{name:28s} {result.theta[k]:10.4f} {se:9.4f} {tz} {p} "
                     f"{result.conv_t_ratios[k]:7.3f}")
    lines.append("")
    lines.append(f"max |conv t| = {np.abs(result.conv_t_ratios).max():.3f}, "
                 f"max conv ratio = {result.max_conv_ratio:.3f}, phase-3 runs = {result.n_phase3}, "
                 f"converged = {result.converged}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: ModelConfig, args) -> int:
    sim = cfg.simulate
    if not cfg.effects or not cfg.has_coefficients():
        raise ConfigurationError("simulate needs [effects] with a coefficient for every effect")
    if "rates" not in sim:
        raise ConfigurationError("[simulate] rates is required")
    rates = parse_floats(sim["rates"], "[simulate] rates")
    periods = int(sim.get("periods", len(rates)))
    if len(rates) == 1 and periods > 1:
        rates = rates * periods
    seed = _seed(args, sim)
    rng = np.random.default_rng(seed)
    if "start" in sim:
        start = read_adjacency(_resolve(cfg, sim["start"]))
    elif cfg.waves:
        start = read_adjacency(cfg.waves[0])
    elif "n" in sim:
        start = DirectedNetwork.random(int(sim["n"]), float(sim.get("density", 0.0)), rng)
    else:
        raise ConfigurationError("[simulate] needs start, n, or [data] waves")
    labels = _labels_for(cfg, start.n)
    if len(labels) != start.n:
        raise IngestionError(f"{len(labels)} actor ids for {start.n} actors", cfg.actors)
    covs = {c.name: read_covariate(c, labels) for c in cfg.covariates}
    params = ParameterVector(cfg.effects, cfg.coefficients)
    opts = SimOptions(seed=seed, period_length=float(sim.get("period_length", 1.0)),
                      max_events=int(sim.get("max_events", 1_000_000)))
    panel = simulate_panel(start, params, RateParameters(rates), covs, periods, opts,
                           tuple(labels), rng=rng)
    path = write_panel(panel, args.out, cfg.covariates)
    _write_json(args.out / "simulation.json", {
        "seed": seed, "rates": rates, "effects": [e.name for e in cfg.effects],
        "coefficients": list(cfg.coefficients), "n": panel.n,
        "ties": [w.n_ties for w in panel.waves], "config": path.name,
    })
    print(f"wrote {panel.n_waves} waves to {args.out}")
    return EXIT_OK


def _run_estimate(cfg, args, panel):
    if not cfg.effects:
        raise ConfigurationError("[effects] is empty")
    seed = _seed(args, cfg.estimation)
    opts = cfg.estimation_options(seed=seed, n_workers=args.threads)
    start = None
    if parse_bool(cfg.estimation.get("use_start", "false"), "[estimation] use_start"):
        if not cfg.has_coefficients():
            raise ConfigurationError("use_start needs a coefficient for every effect")
        rates = parse_floats(cfg.estimation.get("start_rates", ""), "[estimation] start_rates")
        if len(rates) != panel.n_periods:
            raise ConfigurationError(f"[estimation] start_rates needs {panel.n_periods} values")
        start = list(cfg.coefficients) + rates
    return estimate(panel, cfg.effects, opts, start=start)


def cmd_estimate(cfg: ModelConfig, args) -> int:
    panel = ingest(cfg)
    result = _run_estimate(cfg, args, panel)
    args.out.mkdir(parents=True, exist_ok=True)
    d = result.to_dict()
    d["targets"] = result.targets
    _write_json(args.out / "estimate.json", d)
    (args.out / "estimate_summary.txt").write_text(estimate_table(result))
    print(estimate_table(result), end="")
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def _selection_inputs(cfg: ModelConfig, args, result=None):
    sec = cfg.selection
    name = sec.get("covariate")
    if not name:
        raise ConfigurationError("[selection] covariate is required")
    support = None
    declared = {c.name: c for c in cfg.covariates}
    if "range" in sec:
        lo_hi = parse_floats(sec["range"], "[selection] range")
        if len(lo_hi) != 2:
            raise ConfigurationError("[selection] range must be 'lo hi'")
        support = CovariateRange(lo_hi[0], lo_hi[1], float(sec.get("mean", 0.0)))
    elif name in declared:
        support = read_covariate(declared[name], _labels_for(cfg)).support
    else:
        raise ConfigurationError(f"no range for {name!r}: give [selection] range or "
                                 f"a [covariate:{name}] section")
    if result is None and "estimate" in sec:
        result = MoMResult.from_dict(json.loads(_resolve(cfg, sec["estimate"]).read_text()))
    if result is not None:
        sel, cov = selection_from_result(result, name, support)
    elif "theta" in sec:
        theta = parse_floats(sec["theta"], "[selection] theta")
        if len(theta) not in (4, 5):
            raise ConfigurationError("[selection] theta needs 4 or 5 values")
        sel = QuadraticSelection(tuple(theta), support)
        cov = None
        if "std_errors" in sec:
            se = parse_floats(sec["std_errors"], "[selection] std_errors")
            if len(se) != len(theta):
                raise ConfigurationError("[selection] std_errors must match theta")
            cov = np.diag(np.square(se + [0.0] * (5 - len(se))))
    else:
        raise ConfigurationError("[selection] needs either estimate or theta")
    egos = None
    if "ego_values" in sec:
        egos = parse_floats(sec["ego_values"], "[selection] ego_values")
    alpha = float(sec.get("alpha", 0.05))
    return name, sel, cov, egos, alpha


def cmd_analyze_selection(cfg: ModelConfig, args) -> int:
    name, sel, cov, egos, alpha = _selection_inputs(cfg, args)
    report, table = analyze_selection(sel, cov, name, egos, args.grid_resolution, alpha)
    paths = write_selection_bundle(report, table, args.out)
    print(paths["summary"].read_text(), end="")
    return EXIT_OK


def _gof_families(cfg):
    raw = cfg.gof.get("families", "all").strip()
    return FAMILIES if raw == "all" else tuple(raw.replace(",", " ").split())


def _run_gof(cfg, args, panel, result):
    seed = _seed(args, cfg.gof)
    n_sim = int(cfg.gof.get("n_sim", 500))
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RuntimeWarning)
            reports = gof_all(panel, result, _gof_families(cfg), n_sim, seed)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    for w in caught:
        logger.warning("%s", w.message)
    args.out.mkdir(parents=True, exist_ok=True)
    for fam, rep in reports.items():
        rep.write_table(args.out / f"gof_{fam}.csv")
    return seed, reports


def _gof_text(reports) -> str:
    lines = [f"{'family':24s} {'distance':>9s} {'p':>7s}"]
    for fam, r in reports.items():
        lines.append(f"{fam:24s} {r.mahalanobis_observed:9.3f} {r.p_value:7.3f}")
    return "\n".join(lines) + "\n"


def cmd_gof(cfg: ModelConfig, args) -> int:
    panel = ingest(cfg)
    path = _resolve(cfg, cfg.gof["estimate"]) if "estimate" in cfg.gof \
        else args.out / "estimate.json"
    if not path.is_file():
        raise ConfigurationError(f"fitted estimate {path} not found; run estimate first")
    result = MoMResult.from_dict(json.loads(path.read_text()))
    seed, reports = _run_gof(cfg, args, panel, result)
    _write_json(args.out / "gof_report.json",
                {"seed": seed, "families": {f: r.to_dict() for f, r in reports.items()}})
    (args.out / "gof_summary.txt").write_text(_gof_text(reports))
    print(_gof_text(reports), end="")
    return EXIT_OK


def cmd_report(cfg: ModelConfig, args) -> int:
    panel = ingest(cfg)
    result = _run_estimate(cfg, args, panel)
    args.out.mkdir(parents=True, exist_ok=True)
    tests = {"t": {}, "wald": {}}
    for k, name in enumerate(result.names):
        try:
            t = t_test(result, k)
            tests["t"][name] = {"z": t.statistic, "p_value": t.p_value}
        except SaomError:
            tests["t"][name] = None
    selection = {}
    for cov_name in cfg.quadratic_covariates():
        idx = [result.names.index(e.name) for e in cfg.effects if e.covariate == cov_name]
        try:
            w = wald_test(result, idx)
            tests["wald"][cov_name] = {"statistic": w.statistic, "df": w.df,
                                       "p_value": w.p_value}
        except SaomError as exc:
            tests["wald"][cov_name] = {"error": str(exc)}
        spec = next(c for c in cfg.covariates if c.name == cov_name)
        support = panel.covariates[spec.name].support
        sel, cov = selection_from_result(result, cov_name, support)
        rep, table = analyze_selection(sel, cov, cov_name, None, args.grid_resolution)
        write_selection_bundle(rep, table, args.out, prefix=f"{cov_name}_")
        selection[cov_name] = rep
    gof_seed, gofs = _run_gof(cfg, args, panel, result)
    est = result.to_dict()
    est["targets"] = result.targets
    bundle = {
        "estimate": est,
        "tests": tests,
        "gof": {"seed": gof_seed, "families": {f: r.to_dict() for f, r in gofs.items()}},
        "selection": selection,
    }
    _write_json(args.out / "report.json", bundle)
    text = estimate_table(result) + "\n" + _gof_text(gofs)
    for cov_name, w in tests["wald"].items():
        if "statistic" in w:
            text += f"\nWald test, all {cov_name} effects: chi2({w['df']}) = " \
                    f"{w['statistic']:.2f}, p = {w['p_value']:.4g}"
    (args.out / "report.txt").write_text(text + "\n")
    print(text)
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "analyze-selection": cmd_analyze_selection,
    "gof": cmd_gof,
    "report": cmd_report,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.threads < 1:
            raise ConfigurationError("--threads must be at least 1")
        if args.grid_resolution < 2:
            raise ConfigurationError("--grid-resolution must be at least 2")
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except IngestionError as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGESTION
    except (ConfigurationError, SaomError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
