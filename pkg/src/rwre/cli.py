"""Command line front end: ``rwre <command> --config run.cfg``.

Every command writes its artifacts under ``output.dir`` with fixed names.
Each CSV starts with a ``#`` provenance line and each JSON record carries
``version`` and ``config_sha256`` fields. Exit status: 0 success, 1 a
statistical check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .branching import (escape_probability_path, estimate_offspring_matrix, perron_root)
from .environment import Environment, derive_seed
from .errors import ConfigError, InsufficientBlocksError, RwreError
from .experiments import clt_check, first_regeneration_levels, run_ensemble
from .oracle import exact_escape_probability, exact_expected_hitting_time, exact_hitting_probability, path_chain
from .config import RunConfig, load_config
from .stats import l1_tail_fit, survival_function
from .group_tree import Vertex
from .walk import PathEnvironment, path_environment
from . import _kernels as K

__all__ = ["main", "run_command", "COMMANDS"]

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2
ORACLE_TOL = 1e-10


def _num(x):
    """JSON-safe float: NaN and inf become null."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


class Output:
    """Single writer for one run's artifacts."""

    def __init__(self, cfg: RunConfig, command: str):
        self.dir = Path(cfg.output_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self.command = command
        self.header = f"# rwre {__version__} command={command} config_sha256={cfg.sha256}\n"

    def csv(self, name: str, columns: list[str], rows) -> Path:
        path = self.dir / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.header)
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_cell(v) for v in row) + "\n")
        return path

    def summary(self, **fields) -> dict:
        cfg = self.cfg
        record = {
            "version": __version__, "config_sha256": cfg.sha256, "command": self.command,
            "d": cfg.d, "k": cfg.k, "r": cfg.r, "epsilon": cfg.law.epsilon, "law": cfg.law.describe(),
            "seed": cfg.master_seed, "n_steps": cfg.n_steps, "n_traj": cfg.n_traj,
            "mode": cfg.mode, "delta": cfg.delta,
            "v_hat": None, "v_ci": None, "sigma2_hat": None, "Etau_hat": None,
            "ks_distance": None, "ks_pass": None, "gamma_hat": None,
        }
        record.update(fields)
        with open(self.dir / "summary.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(record, sort_keys=True, default=_plain) + "\n")
        return record


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _ensemble(cfg: RunConfig, keep: bool = False):
    return run_ensemble(cfg.law, cfg.group, cfg.master_seed, cfg.n_traj, cfg.n_steps, cfg.mode, cfg.delta,
                        cfg.include_first_block, cfg.sampler, cfg.workers, keep_trajectories=keep)


def _blocks_csv(out: Output, blocks) -> None:
    # only confirmed regenerations ever form blocks
    rows = zip(blocks.traj_id, blocks.index, blocks.tau, blocks.level, blocks.type, blocks.Y, blocks.Z,
               blocks.L, blocks.D, ["true"] * len(blocks))
    out.csv("blocks.csv", ["traj_id", "i", "tau", "level", "type", "Y", "Z", "L_block", "D_block", "confirmed"],
            rows)


def cmd_simulate(cfg: RunConfig, out: Output, args) -> int:
    ens = _ensemble(cfg, keep=cfg.dump_trajectory)
    blocks = ens.blocks
    _blocks_csv(out, blocks)
    if cfg.dump_trajectory:
        for res in ens.results:
            traj = res.trajectory
            cols = ["step", "level", "letter"] + (["vertex"] if args.vertices else [])
            letters = [None] + [int(s) for s in traj.steps]
            if args.vertices:
                rows = ((n, int(lv), s, x.text) for n, (lv, s, x) in
                        enumerate(zip(traj.levels, letters, traj.vertices())))
            else:
                rows = ((n, int(lv), s) for n, (lv, s) in enumerate(zip(traj.levels, letters)))
            out.csv(f"trajectory_{res.traj_id}.csv", cols, rows)
    fields = {"n_blocks": len(blocks), "mean_final_level": _num(ens.final_levels.mean())}
    try:
        sp = ens.speed()
        fields.update(v_hat=sp.v_hat, v_ci=sp.ci95)
    except InsufficientBlocksError:
        pass
    out.summary(**fields)
    return EXIT_OK


def cmd_speed(cfg: RunConfig, out: Output, args) -> int:
    ens = _ensemble(cfg)
    sp, ep = ens.speed(), ens.speed_endpoint()
    _blocks_csv(out, ens.blocks)
    out.summary(v_hat=sp.v_hat, v_ci=sp.ci95, n_blocks=sp.n_blocks, v_endpoint=ep.v_hat, v_endpoint_ci=ep.ci95,
                v_excludes_zero=sp.excludes_zero)
    return EXIT_OK if sp.excludes_zero else EXIT_CHECK_FAILED


def cmd_clt(cfg: RunConfig, out: Output, args) -> int:
    ens = _ensemble(cfg)
    sp = ens.speed()
    clt = ens.sigma2(sp.v_hat)
    ks, samples, _, _ = clt_check(ens, sp.v_hat, clt.sigma2_hat, estimated=True)
    z = samples / math.sqrt(clt.sigma2_hat)
    out.csv("clt_samples.csv", ["traj_id", "final_level", "standardized"],
            ((r.traj_id, r.final_level, float(zi)) for r, zi in zip(ens.results, z)))
    sigma2_positive = clt.sigma2_hat - 3 * clt.sigma2_se > 0
    out.summary(v_hat=sp.v_hat, v_ci=sp.ci95, sigma2_hat=clt.sigma2_hat, sigma2_se=clt.sigma2_se,
                Etau_hat=clt.Etau_hat, Sigma_hat=[[_num(x) for x in row] for row in clt.Sigma_hat],
                n_blocks=clt.n_blocks, ks_distance=ks.distance, ks_threshold=ks.threshold, ks_pass=ks.passed)
    return EXIT_OK if ks.passed and sp.excludes_zero and sigma2_positive else EXIT_CHECK_FAILED


def cmd_branching(cfg: RunConfig, out: Output, args) -> int:
    M = estimate_offspring_matrix(cfg.law, cfg.group, cfg.psi, cfg.mc_samples, cfg.master_seed, cfg.convention)
    rep = perron_root(M.m)
    labels = cfg.group.labels
    out.csv("matrix.csv", ["type"] + labels, ([lab] + [float(x) for x in row] for lab, row in zip(labels, M.m)))
    supercritical = M.min_row_sum_exceeds(1.0, 3.0) and rep.rho > 1
    out.summary(psi=cfg.psi, mc_samples=cfg.mc_samples, convention=cfg.convention, rho=rep.rho,
                min_row_sum=rep.min_row_sum, stderr_max=float(M.stderr.max()),
                stderr=[[float(x) for x in row] for row in M.stderr],
                perron_converged=rep.converged, perron_shifted=rep.shifted, irreducible=rep.irreducible,
                row_sums=[float(x) for x in M.row_sums], row_sum_stderr=[float(x) for x in M.row_sum_stderr],
                supercritical=supercritical)
    return EXIT_OK if supercritical and rep.converged else EXIT_CHECK_FAILED


def cmd_l1_tail(cfg: RunConfig, out: Output, args) -> int:
    levels = first_regeneration_levels(cfg.law, cfg.group, cfg.master_seed, cfg.n_traj, max(cfg.n_steps, 1),
                                       cfg.delta, cfg.mode, cfg.workers)
    fit = l1_tail_fit(levels, min_samples=min(1000, cfg.n_traj))
    grid, surv = survival_function(levels)
    out.csv("survival.csv", ["level", "survival"], zip(grid.tolist(), surv.tolist()))
    out.summary(gamma_hat=_num(fit.gamma_hat), slope=_num(fit.slope), slope_se=_num(fit.slope_se),
                n_points=fit.n_points, mean_l1=float(levels.mean()), tail_negative=fit.negative_at(3.0))
    return EXIT_OK if fit.negative_at(3.0) else EXIT_CHECK_FAILED


def _oracle_rows(cfg: RunConfig) -> list[tuple[str, int, float]]:
    gs, law = cfg.group, cfg.law
    rng = np.random.default_rng(derive_seed(cfg.master_seed, 7))
    rows = []

    # closed form escape probability vs linear solve on random geodesics
    diff = 0.0
    n_paths = 1000
    for i in range(n_paths):
        env = Environment(law, derive_seed(cfg.master_seed, 8, i))
        n = int(rng.integers(1, 9))
        y = gs.random_vertex(n, rng)
        path = path_environment(env, gs, [Vertex(y.word[j:]) for j in range(n, -1, -1)])
        diff = max(diff, abs(escape_probability_path(path) - exact_hitting_probability(path_chain(path), 1)))
    rows.append(("escape_formula_vs_solver", n_paths, diff))

    # escape from x_0 itself (forced first step) matches the same formula
    diff = 0.0
    for n in range(1, 9):
        q = rng.uniform(0.05, 0.95, n - 1)
        path = PathEnvironment(1 - q, q)
        diff = max(diff, abs(escape_probability_path(path) - exact_escape_probability(path_chain(path), 0)))
    rows.append(("escape_from_start_vs_solver", 8, diff))

    # symmetric path: expected absorption time from x_1 is n - 1
    diff = 0.0
    for n in range(1, 9):
        path = PathEnvironment(np.full(n - 1, 0.5), np.full(n - 1, 0.5))
        diff = max(diff, abs(exact_expected_hitting_time(path_chain(path), 1) - (n - 1)))
    rows.append(("symmetric_duration_vs_solver", 8, diff))

    # compiled offspring enumeration vs path-by-path formula
    psi = min(cfg.psi, 4)
    seeds = np.array([derive_seed(cfg.master_seed, 9, i) for i in range(5)], dtype=np.uint64)
    fast = K.offspring_samples(seeds, psi, gs.inverse_table, False, *law.kernel_args)
    diff = 0.0
    for i, seed in enumerate(seeds):
        env = Environment(law, int(seed))
        slow = np.zeros((gs.d, gs.d))
        for s in range(gs.d):
            x = gs.vertex((s,))
            frontier = [[x]]
            for _ in range(psi):
                frontier = [p + [c] for p in frontier for c in gs.children(p[-1])]
            for p in frontier:
                slow[s, p[-1].type] += escape_probability_path(path_environment(env, gs, p))
        diff = max(diff, float(np.abs(slow - fast[i]).max()))
    rows.append(("offspring_kernel_vs_paths", len(seeds), diff))
    return rows


def cmd_oracle_check(cfg: RunConfig, out: Output, args) -> int:
    rows = _oracle_rows(cfg)
    table = [(name, n, diff, diff <= ORACLE_TOL) for name, n, diff in rows]
    out.csv("oracle_check.csv", ["check", "cases", "max_abs_diff", "pass"],
            ((name, n, diff, str(ok).lower()) for name, n, diff, ok in table))
    for name, n, diff, ok in table:
        print(f"{'PASS' if ok else 'FAIL'}  {name:32s} cases={n:<5d} max|diff|={diff:.3e}")
    ok = all(t[3] for t in table)
    out.summary(oracle_max_abs_diff=max(t[2] for t in table), oracle_pass=ok)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


COMMANDS = {
    "simulate": cmd_simulate,
    "speed": cmd_speed,
    "clt": cmd_clt,
    "branching": cmd_branching,
    "l1-tail": cmd_l1_tail,
    "oracle-check": cmd_oracle_check,
}


def run_command(command: str, cfg: RunConfig, args: argparse.Namespace | None = None) -> int:
    if args is None:
        args = argparse.Namespace(vertices=False)
    out = Output(cfg, command)
    return COMMANDS[command](cfg, out, args)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rwre", description="Random walks in random environment on free-product trees.")
    p.add_argument("--version", action="version", version=f"rwre {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="flat key=value configuration file")
    p.add_argument("--workers", type=int, help="override parallel.workers")
    p.add_argument("--output-dir", help="override output.dir")
    p.add_argument("--dump-trajectory", action="store_true", help="simulate: write trajectory_<id>.csv files")
    p.add_argument("--vertices", action="store_true", help="add the vertex word column to trajectory files")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"rwre: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"rwre: invalid config {args.config}:", file=sys.stderr)
        for line in exc.errors:
            print(f"  {line}", file=sys.stderr)
        return EXIT_USAGE
    changes = {}
    if args.workers is not None:
        if args.workers < 1:
            print("rwre: --workers must be >= 1", file=sys.stderr)
            return EXIT_USAGE
        changes["workers"] = args.workers
    if args.output_dir:
        changes["output_dir"] = args.output_dir
    if args.dump_trajectory:
        changes["dump_trajectory"] = True
    cfg = cfg.replace(**changes)
    try:
        return run_command(args.command, cfg, args)
    except InsufficientBlocksError as exc:
        print(f"rwre {args.command}: {exc}; increase walk.n_steps or walk.n_traj", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except RwreError as exc:
        print(f"rwre {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
