"""Command-line driver.

    siepicard {check,solve,gbm,fredholm,isometry} --config PATH [--seed N] [--out DIR] [--threads N]

Exit codes: 0 ok, 2 config error, 3 a check failed, 4 a check was
unavailable, 5 a solve did not converge, 6 numeric failure.
"""

import argparse
import csv
import datetime
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path

from . import __version__
from .calculus import l2_norm_at
from .conditions import (
    FAIL,
    UNAVAILABLE,
    check_banach,
    check_fredholm_banach,
    check_fredholm_schauder,
    check_schauder,
)
from .config import FREDHOLM_CHECKS, SIE_CHECKS, load_config
from .errors import ConfigError, NumericFailure
from .experiments import moment_table, run_isometry, strong_error_study
from .fredholm import solve_fredholm
from .paths import make_grid, sample_brownian
from .picard import solve_picard

log = logging.getLogger("siepicard")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK_FAIL = 3
EXIT_CHECK_UNAVAILABLE = 4
EXIT_NOT_CONVERGED = 5
EXIT_NUMERIC = 6


def fmt(value):
    """CSV cell: floats with 17 significant digits, everything else as text."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


def write_csv(path, header, rows, quote_all=False):
    quoting = csv.QUOTE_ALL if quote_all else csv.QUOTE_MINIMAL
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, quoting=quoting, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def check_exit_code(reports):
    """Total mapping from condition verdicts to an exit code; failure outranks unavailability."""
    verdicts = {r.verdict for r in reports}
    if FAIL in verdicts:
        return EXIT_CHECK_FAIL
    if UNAVAILABLE in verdicts:
        return EXIT_CHECK_UNAVAILABLE
    return EXIT_OK


class Run:
    """Output directory bookkeeping and the manifest written at the end."""

    def __init__(self, command, config, out):
        self.command = command
        self.config = config
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.started = datetime.datetime.now(datetime.timezone.utc)

    def path(self, name):
        self.files.append(name)
        return self.out / name

    def write_text(self, name, text):
        self.path(name).write_text(text, encoding="utf-8")

    def finish(self, exit_code):
        entries = []
        for name in self.files:
            digest = hashlib.sha256((self.out / name).read_bytes()).hexdigest()
            entries.append({"name": name, "sha256": digest})
        manifest = {
            "tool": "siepicard",
            "version": __version__,
            "command": self.command,
            "config_sha256": self.config.digest(),
            "seed": self.config.grid.seed,
            "threads": self.config.output.threads,
            "started": self.started.isoformat(),
            "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "exit_code": exit_code,
            "files": entries,
        }
        (self.out / "config.ini").write_text(self.config.to_text(), encoding="utf-8")
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        return exit_code


def _sie_reports(config, names):
    problem = config.sie_problem()
    heuristic = config.checks.allow_heuristic
    reports = []
    for name in names:
        if name == "schauder":
            if config.problem.radius is None:
                raise ConfigError("problem.radius is required for the schauder check")
            reports.append(check_schauder(problem, config.problem.radius, allow_heuristic=heuristic))
        elif name == "banach":
            reports.append(check_banach(problem, allow_heuristic=heuristic))
    return reports


def _fredholm_reports(config, names):
    problem = config.fredholm_problem()
    reports = []
    for name in names:
        if name == "schauder_fredholm":
            if config.problem.radius is None:
                raise ConfigError("problem.radius is required for the schauder_fredholm check")
            reports.append(check_fredholm_schauder(problem, config.problem.radius))
        elif name == "banach_fredholm":
            reports.append(check_fredholm_banach(problem))
    return reports


def _write_reports(run, reports, stem="conditions"):
    write_csv(
        run.path(f"{stem}.csv"),
        ["theorem", "verdict", "intermediates"],
        [r.to_csv_row() for r in reports],
        quote_all=True,
    )
    run.write_text(f"{stem}.txt", "\n".join(r.to_text() for r in reports))
    for r in reports:
        log.info("%s: %s %s", r.theorem, r.verdict, r.intermediates_text())


def _default_checks(config, solving):
    if config.checks.run:
        return config.checks.run
    if config.problem.type == "fredholm":
        return FREDHOLM_CHECKS if config.problem.radius is not None else ("banach_fredholm",)
    if solving and config.problem.radius is None:
        return ("banach",)
    return SIE_CHECKS


def cmd_check(config, run):
    names = _default_checks(config, solving=False)
    if config.problem.type == "sie":
        reports = _sie_reports(config, names)
    else:
        reports = _fredholm_reports(config, names)
    _write_reports(run, reports)
    return check_exit_code(reports)


def _ensemble(config, m=None):
    grid = make_grid(config.problem.a, config.problem.b, m or config.grid.m)
    return sample_brownian(grid, config.grid.n_paths, config.grid.seed, workers=config.output.threads)


def _require(config, kind):
    if config.problem.type != kind:
        raise ConfigError(f"this command needs problem.type = {kind}, got {config.problem.type}")


def cmd_solve(config, run):
    _require(config, "sie")
    reports = _sie_reports(config, _default_checks(config, solving=True))
    _write_reports(run, reports)
    for r in reports:
        if not r.passed:
            log.warning("%s verdict %s; solving anyway", r.theorem, r.verdict)
    problem = config.sie_problem()
    ensemble = _ensemble(config)
    s = config.solver
    start = time.perf_counter()
    result = solve_picard(
        problem, ensemble, s.tol, s.max_iter, s.initial, s.seed_h, damping=s.damping
    )
    total_ms = (time.perf_counter() - start) * 1e3
    rows = list(result.history_rows())
    last = result.history[-1] if result.history else math.nan
    rows.append(("summary", last, result.final_residual.value, total_ms))
    write_csv(run.path("history.csv"), ["iter", "update_norm", "residual", "elapsed_ms"], rows)

    sol = result.solution
    moments = []
    for j, t in enumerate(sol.grid.nodes):
        col = sol.values[:, j]
        se = float(col.std(ddof=1) / math.sqrt(len(col))) if len(col) > 1 else 0.0
        moments.append((float(t), float(col.mean()), l2_norm_at(sol, j).value, se))
    write_csv(run.path("moments.csv"), ["t", "mean", "l2_norm", "std_error"], moments)
    log.info(
        "converged=%s iterations=%d residual=%.3e k=%s",
        result.converged, result.iterations, result.final_residual.value, result.theoretical_k,
    )
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_gbm(config, run):
    _require(config, "sie")
    problem = config.sie_problem()
    try:
        rows, slope = strong_error_study(
            problem,
            n_paths=config.grid.n_paths,
            seed=config.grid.seed,
            levels=config.gbm.levels,
            tol=config.gbm.tol,
            max_iter=config.solver.max_iter,
            workers=config.output.threads,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_csv(
        run.path("strong_error.csv"),
        ["dt", "rms_error", "n_paths"],
        [(r.dt, r.rms_error, r.n_paths) for r in rows],
    )
    result = solve_picard(problem, _ensemble(config), config.gbm.tol, config.solver.max_iter)
    write_csv(
        run.path("gbm_moments.csv"),
        ["t", "mean", "mean_exact", "mean_std_error", "second_moment", "second_exact", "second_std_error"],
        moment_table(problem, result.solution),
    )
    run.write_text("gbm_summary.txt", f"strong_order_slope={slope!r}\n")
    log.info("strong-error slope %.4f", slope)
    converged = result.converged and all(r.converged for r in rows)
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


def cmd_fredholm(config, run):
    _require(config, "fredholm")
    reports = _fredholm_reports(config, _default_checks(config, solving=True))
    _write_reports(run, reports)
    for r in reports:
        if not r.passed:
            log.warning("%s verdict %s; solving anyway", r.theorem, r.verdict)
    f = config.fredholm
    result = solve_fredholm(config.fredholm_problem(), f.n_quad, f.tol, f.max_iter, r=config.problem.radius)
    sol = result.solution
    write_csv(run.path("solution.csv"), ["x", "u"], zip(sol.nodes.tolist(), sol.values.tolist()))
    write_csv(
        run.path("fredholm_history.csv"),
        ["iter", "update_norm"],
        [(n + 1, h) for n, h in enumerate(result.history)],
    )
    run.write_text(
        "fredholm_summary.txt",
        f"converged={result.converged}\niterations={result.iterations}\n"
        f"residual={result.residual!r}\nrate={result.empirical_rate!r}\n"
        f"in_ball={result.in_ball}\ndiverged={result.diverged}\n",
    )
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_isometry(config, run):
    ensemble = _ensemble(config)
    results = run_isometry(ensemble, config.isometry.integrands, config.isometry.tolerance)
    write_csv(
        run.path("isometry.csv"),
        ["integrand", "lhs", "rhs", "rel_error", "std_error", "z_score", "tolerance", "pass"],
        [
            (name, r.lhs, r.rhs, r.rel_error, r.std_error, float(r.z_score), r.tolerance, r.passed)
            for name, r in results
        ],
    )
    return EXIT_OK if all(r.passed for _, r in results) else EXIT_CHECK_FAIL


COMMANDS = {
    "check": cmd_check,
    "solve": cmd_solve,
    "gbm": cmd_gbm,
    "fredholm": cmd_fredholm,
    "isometry": cmd_isometry,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="siepicard", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment configuration file")
        p.add_argument("--seed", type=int, help="override grid.seed")
        p.add_argument("--out", help="override output.dir")
        p.add_argument("--threads", type=int, help="override output.threads")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config.grid.seed = args.seed
        if args.out is not None:
            config.output.dir = args.out
        if args.threads is not None:
            config.output.threads = args.threads
        config.validate()
        run = Run(args.command, config, config.output.dir)
        code = COMMANDS[args.command](config, run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        print(f"numeric failure at path {exc.path}, grid index {exc.index}: {exc}", file=sys.stderr)
        if "run" in locals():
            return run.finish(EXIT_NUMERIC)
        return EXIT_NUMERIC
    return run.finish(code)


if __name__ == "__main__":
    sys.exit(main())
