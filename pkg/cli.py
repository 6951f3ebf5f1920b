"""Command-line front end: rate curves, Monte Carlo runs, privacy audits, parameter search, demos.

Usage:
  python cli.py rates --m 10 --p-grid 0:1:0.01 --params "10;2,5;2,2,3;2,2,2,2" --output rates.csv
  python cli.py simulate --protocol swot --p 0.5 --m 2 --n 1000 --k 400 --trials 10000
  python cli.py audit --protocol swot --n 4 --k 1 --m 2
  python cli.py optimize --m 10 --p-grid 0:1:0.05 --max-u 4
  python cli.py demo --protocol boot --m 6 --params 2,3 --k 2 --seed 7
"""
import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import pandas as pd

import logger as app_logger
from bits import FunctionSpec
from config import DEFAULT_SEED, DEFAULT_SLACK, MI_TOLERANCE, WORKERS
from errors import SfcError, UsageError
from services.boot_service import BootParams
from services.demo_service import demo_trace
from services.privacy_audit_service import (AuditReport, audit_disjoint_gf2, audit_scenario, boot_scenario,
                                            gsfc_scenario, leaky_swot_scenario, sweep_disjoint_gf2, swot_scenario)
from services.rate_service import optimize_boot_params, rate_gsfc, rate_gsfc_accounted, rate_table
from services.simulation_service import SimulationRequest, run_simulation
from utils import format_params, parse_grid, parse_param_sets

app_logger  # ensure logging is configured

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_GATE = 3

AUDIT_TARGETS = ("swot", "boot", "gsfc", "canary", "sweep")


@dataclass
class ExperimentConfig:
    subcommand: str
    p: Optional[float] = None
    p_grid: list = field(default_factory=list)
    m: int = 2
    n: int = 1000
    k: int = 400
    trials: int = 1000
    seed: int = DEFAULT_SEED
    params: list = field(default_factory=list)
    model: str = "source"
    table: Optional[str] = None
    output: Optional[str] = None
    slack: float = DEFAULT_SLACK
    single_ot: bool = False
    protocol: str = "swot"
    b: Optional[int] = None
    max_u: int = 4
    workers: int = WORKERS
    pooled: bool = False
    correlated: bool = False
    exact: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "ExperimentConfig":
        grid = parse_grid(args.p_grid) if getattr(args, "p_grid", None) else []
        if getattr(args, "p", None) is not None:
            if not 0 <= args.p <= 1:
                raise UsageError(f"--p must lie in [0, 1], got {args.p}")
            grid = grid or [args.p]
        params = parse_param_sets(args.params) if getattr(args, "params", None) else []
        values = {name: getattr(args, name) for name in cls.__dataclass_fields__ if hasattr(args, name)}
        values.update(subcommand=args.command, p_grid=grid, params=params)
        return cls(**values)

    def spec(self) -> Optional[FunctionSpec]:
        return FunctionSpec.from_table_file(self.table) if self.table else None

    def branching(self) -> tuple:
        if len(self.params) > 1:
            raise UsageError("this command takes a single branching sequence")
        return self.params[0] if self.params else ()

    def simulation_request(self, trials: Optional[int] = None) -> SimulationRequest:
        return SimulationRequest(
            protocol=self.protocol, p=self.p if self.p is not None else 0.5, m=self.m, n=self.n, k=self.k,
            trials=trials or self.trials, seed=self.seed, model=self.model, branching=self.branching(),
            slack=self.slack, pooled=self.pooled, spec=self.spec(), single_ot=self.single_ot,
            correlated=self.correlated,
        )


def _emit(frame: pd.DataFrame, output: Optional[str]):
    if output:
        frame.to_csv(output, index=False)
        logger.info("Wrote %d rows to %s", len(frame), output)
    else:
        sys.stdout.write(frame.to_csv(index=False))


def cmd_rates(cfg: ExperimentConfig) -> int:
    grid = cfg.p_grid or parse_grid("0:1:0.01")
    frame = rate_table(grid, cfg.m, cfg.params or None, cfg.max_u)
    spec = cfg.spec()
    if spec is not None:
        rows = [{"p": p, "params": f"gsfc-{spec.name}", "rate": rate_gsfc(p, spec, cfg.single_ot)} for p in grid]
        rows += [{"p": p, "params": f"gsfc-{spec.name}-accounted",
                  "rate": rate_gsfc_accounted(p, spec, cfg.single_ot)} for p in grid]
        rows = [row for row in rows if row["rate"] is not None]
        if len(rows) < 2 * len(grid):
            logger.warning("GSFC rate undefined for %s at some grid points; rows omitted", spec.name)
        if rows:
            frame = pd.concat([frame, pd.DataFrame(rows)], ignore_index=True)
    _emit(frame, cfg.output)
    return EXIT_OK


def cmd_optimize(cfg: ExperimentConfig) -> int:
    grid = cfg.p_grid or parse_grid("0:1:0.05")
    rows = []
    for p in grid:
        best = optimize_boot_params(p, cfg.m, cfg.max_u)
        rows.append({"p": p, "params": format_params(best.branching), "rate": best.rate})
    _emit(pd.DataFrame(rows, columns=["p", "params", "rate"]), cfg.output)
    return EXIT_OK


def cmd_simulate(cfg: ExperimentConfig) -> int:
    summary = run_simulation(cfg.simulation_request(), workers=cfg.workers)
    data = summary.to_dict()
    if cfg.output:
        Path(cfg.output).write_text(json.dumps(data, indent=2), encoding="utf-8")
    for key, value in data.items():
        print(f"{key}: {value}")
    return EXIT_OK if summary.gate_passed else EXIT_GATE


def _audit_results(cfg: ExperimentConfig) -> list:
    if cfg.protocol == "swot":
        return audit_scenario(swot_scenario(cfg.n, cfg.k, cfg.m, cfg.p if cfg.p is not None else 0.5))
    if cfg.protocol == "canary":
        return audit_scenario(leaky_swot_scenario(cfg.n, cfg.k, cfg.m))
    if cfg.protocol == "gsfc":
        spec = cfg.spec() or FunctionSpec.logical_and()
        return audit_scenario(gsfc_scenario(spec, cfg.k, cfg.n, single_ot=cfg.single_ot))
    if cfg.protocol == "sweep":
        return sweep_disjoint_gf2(cfg.m, cfg.max_u)
    branching = cfg.branching() or (cfg.m,)
    params = BootParams(branching, cfg.m, cfg.k)
    selections = [cfg.b] if cfg.b else range(1, cfg.m + 1)
    results = [audit_disjoint_gf2(params, b) for b in selections]
    if cfg.exact:
        results.extend(audit_scenario(boot_scenario(branching, cfg.m, cfg.k)))
    return results


def cmd_audit(cfg: ExperimentConfig) -> int:
    if cfg.protocol not in AUDIT_TARGETS:
        raise UsageError(f"audit --protocol must be one of {AUDIT_TARGETS}")
    report = AuditReport(_audit_results(cfg))
    for r in report.results:
        if r.mi_bits is not None:
            print(f"{r.name} [{r.form}] I={r.mi_bits:.3e} bits (divergence {r.mi_bits_kl:.3e}) "
                  f"leaves={r.leaves} {'ok' if r.passed else 'LEAK'}")
        elif cfg.protocol != "sweep" or not r.passed:
            witnesses = " ".join("{" + ",".join(str(i) for i in w) + "}" for w in r.leak_witnesses) or "none"
            print(f"{r.name} [gf2] recoverable={list(r.recoverable_units)} joint-witnesses={witnesses} "
                  f"{'ok' if r.passed else 'LEAK'}")
    if cfg.protocol == "sweep":
        print(f"sweep: {len(report.results)} cases, {sum(not r.passed for r in report.results)} failures")
    if cfg.output:
        report.to_frame().to_csv(cfg.output, index=False)
    failed = [r for r in report.results if not r.passed]
    if failed:
        logger.warning("%d audit checks exceed %.0e bits or recover an unselected string", len(failed), MI_TOLERANCE)
    return EXIT_GATE if failed else EXIT_OK


def cmd_demo(cfg: ExperimentConfig) -> int:
    for line in demo_trace(cfg.simulation_request(trials=1)):
        print(line)
    return EXIT_OK


COMMANDS = {
    "rates": cmd_rates,
    "simulate": cmd_simulate,
    "audit": cmd_audit,
    "optimize": cmd_optimize,
    "demo": cmd_demo,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Secure computation over binary erasure resources")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, m=2, n=1000, k=400, protocol="swot", protocols=("swot", "boot", "gsfc")):
        p.add_argument("--p", type=float, default=None, help="erasure probability")
        p.add_argument("--m", type=int, default=m, help="choices per sample / number of strings")
        p.add_argument("--n", type=int, default=n, help="erasure samples (SWOT)")
        p.add_argument("--k", type=int, default=k, help="samples or string length")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (decimal 64-bit)")
        p.add_argument("--params", default=None, help='branching sequence, e.g. "2,3"')
        p.add_argument("--model", choices=("source", "channel"), default="source")
        p.add_argument("--table", default=None, help="function table file for GSFC")
        p.add_argument("--slack", type=float, default=DEFAULT_SLACK, help="resource slack for BOOT/GSFC sizing")
        p.add_argument("--single-ot", action="store_true", help="GSFC with one OT when f = g")
        p.add_argument("--pooled", action="store_true", help="BOOT draws all samples up front")
        p.add_argument("--correlated", action="store_true", help="correlated A, B sources")
        p.add_argument("--protocol", choices=protocols, default=protocol)
        p.add_argument("--output", default=None, help="output file")

    rates = sub.add_parser("rates", help="rate curves as CSV")
    rates.add_argument("--m", type=int, default=10)
    rates.add_argument("--p", type=float, default=None)
    rates.add_argument("--p-grid", default=None, help="start:stop:step")
    rates.add_argument("--params", default=None, help='parameter sets, e.g. "10;2,5;2,2,3"')
    rates.add_argument("--max-u", type=int, default=4)
    rates.add_argument("--table", default=None)
    rates.add_argument("--single-ot", action="store_true")
    rates.add_argument("--output", default=None)

    optimize = sub.add_parser("optimize", help="best BOOT branching per p")
    optimize.add_argument("--m", type=int, default=10)
    optimize.add_argument("--p", type=float, default=None)
    optimize.add_argument("--p-grid", default=None)
    optimize.add_argument("--max-u", type=int, default=4)
    optimize.add_argument("--output", default=None)

    simulate = sub.add_parser("simulate", help="Monte Carlo sessions with a regression gate")
    common(simulate)
    simulate.add_argument("--trials", type=int, default=1000)
    simulate.add_argument("--workers", type=int, default=WORKERS)

    audit = sub.add_parser("audit", help="exact privacy audits")
    common(audit, n=4, k=1, protocols=AUDIT_TARGETS)
    audit.add_argument("--b", type=int, default=None, help="Bob's selection for the GF(2) audit")
    audit.add_argument("--max-u", type=int, default=3)
    audit.add_argument("--exact", action="store_true", help="also enumerate BOOT exactly")

    demo = sub.add_parser("demo", help="annotated single-session trace")
    common(demo, n=8, k=2)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig.from_args(args)
        return COMMANDS[cfg.subcommand](cfg)
    except SfcError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        logger.exception("%s failed", args.command)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
