"""Experiment configuration and command-line orchestration.

Configuration is a flat set of key=value pairs with precedence
flag > environment (LRPOSTCOV_*) > config file > default.  Every command
writes a manifest echoing the fully resolved configuration into the output
directory; re-running with --config pointing at that manifest reproduces
the CSV/PGM outputs bitwise.  Wall-clock timings only ever go to
diagnostics.log.

Subcommands: eigs, variance, oracle, sweep, analytic.
Exit codes: 0 success/PASS, 2 configuration error, 3 numerical failure,
4 oracle FAIL.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import discretize, hessian, oracle, posterior
from .arnoldi import ArnoldiResult, StopRule, lr_arnoldi
from .errors import InvalidConfigError, NumericalError
from .forward import SpaceTimeOperator
from .lowrank import (
    LowRankMat,
    TruncationPolicy,
    lr_from_dense,
    lr_singular_values,
    lr_to_dense,
)

ENV_PREFIX = "LRPOSTCOV_"

PROBLEMS = ("heat", "convdiff", "steady-poisson")
MODES = (hessian.MODE_IC, hessian.MODE_SOURCE, hessian.MODE_STEADY)


@dataclass(frozen=True)
class RunConfig:
    problem: str = "heat"
    n_side: int = 31
    nt: int = 30
    final_time: float = 1.0
    nu: float = 1e-2
    wind: tuple[float, float] = (0.0, 1.0)
    beta_ratio: float = 1e4
    gamma_mode: str = "scalar"      # scalar: gamma_prior given; beta: beta_prior given
    gamma_prior: float = 10.0
    beta_prior: float = 1.0
    sensors: str = "grid3x3"        # none (= full observation) | grid3x3 | custom:...
    eps0: float = 1e-8
    r_max: int | None = None
    eps_eig: float = 1e-1
    m_a: int = 100
    check_every: int = 10
    mode: str = "ic"
    start: str = "ones"             # ones | random
    on_breakdown: str = "stop"      # stop | restart (oracle runs force restart)
    seed: int = 0
    compress_every: int = 4
    k: int = 50                     # how many Ritz values to report
    out: str = "out"


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise InvalidConfigError(f"unknown configuration key {key!r}")
    raw = raw.strip()
    if key == "wind":
        parts = raw.split(",")
        if len(parts) != 2:
            raise InvalidConfigError(f"wind needs two components, got {raw!r}")
        return (float(parts[0]), float(parts[1]))
    if key == "r_max":
        return None if raw.lower() in ("none", "") else int(raw)
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError as exc:
        raise InvalidConfigError(f"bad value for {key}: {raw!r}") from exc
    return raw


def _format_value(key: str, value) -> str:
    if key == "wind":
        return f"{value[0]:.17g},{value[1]:.17g}"
    if value is None:
        return "none"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def load_config_file(path) -> dict:
    updates = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, raw = line.split("=", 1)
        updates[key.strip()] = _parse_value(key.strip(), raw)
    return updates


def env_overrides(environ=None) -> dict:
    environ = environ if environ is not None else os.environ
    updates = {}
    for key in _FIELD_TYPES:
        raw = environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            updates[key] = _parse_value(key, raw)
    return updates


def resolve_config(file_path=None, env=None, flag_updates=None) -> RunConfig:
    """Apply precedence flag > env > file > default and validate."""
    cfg = RunConfig()
    if file_path is not None:
        cfg = replace(cfg, **load_config_file(file_path))
    cfg = replace(cfg, **env_overrides(env))
    if flag_updates:
        parsed = {k: _parse_value(k, v) if isinstance(v, str) else v
                  for k, v in flag_updates.items()}
        cfg = replace(cfg, **parsed)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if cfg.problem not in PROBLEMS:
        raise InvalidConfigError(f"problem must be one of {PROBLEMS}, got {cfg.problem!r}")
    if cfg.mode not in MODES:
        raise InvalidConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if cfg.problem == "steady-poisson" and cfg.mode != hessian.MODE_STEADY:
        raise InvalidConfigError("problem steady-poisson requires mode=steady")
    if cfg.problem != "steady-poisson" and cfg.mode == hessian.MODE_STEADY:
        raise InvalidConfigError("mode=steady requires problem=steady-poisson")
    if cfg.n_side < 2:
        raise InvalidConfigError(f"n_side must be >= 2, got {cfg.n_side}")
    if cfg.nt < 1:
        raise InvalidConfigError(f"nt must be >= 1, got {cfg.nt}")
    if not (0 < cfg.eps0 < 1):
        raise InvalidConfigError(f"eps0 must lie in (0, 1), got {cfg.eps0}")
    if cfg.eps_eig <= 0 or cfg.beta_ratio <= 0 or cfg.m_a < 1 or cfg.check_every < 1:
        raise InvalidConfigError("eps_eig, beta_ratio, m_a, check_every must be positive")
    if cfg.gamma_mode not in ("scalar", "beta"):
        raise InvalidConfigError(f"gamma_mode must be scalar or beta, got {cfg.gamma_mode!r}")
    if cfg.start not in ("ones", "random"):
        raise InvalidConfigError(f"start must be ones or random, got {cfg.start!r}")
    if cfg.on_breakdown not in ("stop", "restart"):
        raise InvalidConfigError(
            f"on_breakdown must be stop or restart, got {cfg.on_breakdown!r}")
    if not (cfg.sensors in ("none", "grid3x3") or cfg.sensors.startswith("custom:")):
        raise InvalidConfigError(f"unknown sensors setting {cfg.sensors!r}")


def write_manifest(cfg: RunConfig, outdir: Path, notes: dict | None = None) -> None:
    lines = [f"{f.name}={_format_value(f.name, getattr(cfg, f.name))}" for f in fields(cfg)]
    if notes:
        lines += [f"# {k}: {v}" for k, v in notes.items()]
    (outdir / "manifest.cfg").write_text("\n".join(lines) + "\n")


@dataclass
class Problem:
    """Resolved, assembled instance of a RunConfig."""

    config: RunConfig
    grid: discretize.Grid
    spatial: discretize.SpatialOperator
    time: discretize.TimeGrid | None
    K: SpaceTimeOperator | None
    layout: hessian.SensorLayout | None
    cov: hessian.CovarianceSpec
    pol: TruncationPolicy
    ctx: hessian.HessianContext
    notes: dict


def _build_layout(cfg: RunConfig, grid: discretize.Grid, notes: dict):
    if cfg.sensors == "none":
        return hessian.full_observation(grid)
    if cfg.sensors == "grid3x3":
        try:
            return hessian.make_sensor_layout_3x3(grid)
        except InvalidConfigError:
            # too coarse to resolve the patches; fall back to full observation
            notes["sensors_resolved"] = "full (grid3x3 under-resolved)"
            return hessian.full_observation(grid)
    triples = []
    for chunk in cfg.sensors[len("custom:"):].split(";"):
        parts = chunk.split(",")
        if len(parts) != 3:
            raise InvalidConfigError(f"custom sensor patch needs cx,cy,side, got {chunk!r}")
        triples.append(tuple(float(p) for p in parts))
    return hessian.make_sensor_layout(triples, grid)


def build_problem(cfg: RunConfig) -> Problem:
    notes: dict = {}
    grid = discretize.build_grid(cfg.n_side)
    if cfg.gamma_mode == "scalar":
        cov = hessian.CovarianceSpec.from_gamma(cfg.gamma_prior, cfg.beta_ratio, grid)
    else:
        cov = hessian.CovarianceSpec.from_beta(cfg.beta_prior, cfg.beta_ratio, grid)
    pol = TruncationPolicy(eps0=cfg.eps0, r_max=cfg.r_max)

    if cfg.problem == "steady-poisson":
        spatial = discretize.assemble_heat(grid)
        ctx = hessian.HessianContext(
            mode=hessian.MODE_STEADY, operator=None, layout=None,
            cov=cov, pol=pol, spatial=spatial,
        )
        return Problem(cfg, grid, spatial, None, None, None, cov, pol, ctx, notes)

    if cfg.problem == "heat":
        spatial = discretize.assemble_heat(grid)
    else:
        spatial = discretize.assemble_convdiff(grid, cfg.nu, cfg.wind)
    time = discretize.build_time_grid(cfg.nt, cfg.final_time)
    K = SpaceTimeOperator(spatial, time)
    layout = _build_layout(cfg, grid, notes)
    ctx = hessian.HessianContext(
        mode=cfg.mode, operator=K, layout=layout, cov=cov, pol=pol,
        compress_every=cfg.compress_every,
    )
    return Problem(cfg, grid, spatial, time, K, layout, cov, pol, ctx, notes)


def start_vector(cfg: RunConfig, problem: Problem):
    """Deterministic all-ones start by default; seeded Gaussian otherwise."""
    n_x = problem.grid.n_x
    if cfg.mode == hessian.MODE_SOURCE:
        n_t = problem.time.n_t
        if cfg.start == "ones":
            w1 = np.ones((n_x, 1)) / np.sqrt(n_x)
            w2 = np.ones((n_t, 1)) / np.sqrt(n_t)
        else:
            rng = np.random.default_rng(cfg.seed)
            w1 = rng.standard_normal((n_x, 1))
            w2 = rng.standard_normal((n_t, 1))
            w1 /= np.linalg.norm(w1)
            w2 /= np.linalg.norm(w2)
        return LowRankMat(w1, w2)
    if cfg.start == "ones":
        v = np.ones(n_x)
    else:
        v = np.random.default_rng(cfg.seed).standard_normal(n_x)
    return v / np.linalg.norm(v)


@dataclass
class EigsRun:
    config: RunConfig
    problem: Problem
    result: ArnoldiResult


def run_eigs(cfg: RunConfig) -> EigsRun:
    problem = build_problem(cfg)
    if cfg.mode == hessian.MODE_SOURCE:
        m_a = cfg.m_a
    else:
        # dense Krylov cannot exceed n_x; breakdown restarts consume
        # iteration slots without adding spectral columns, hence the slack
        slack = 8 if cfg.on_breakdown == "restart" else 0
        m_a = min(cfg.m_a, problem.ctx.n_param + slack)
    stop = StopRule(m_a=m_a, eps_eig=cfg.eps_eig, check_every=cfg.check_every,
                    on_breakdown=cfg.on_breakdown, restart_seed=cfg.seed)
    v1 = start_vector(cfg, problem)
    result = lr_arnoldi(problem.ctx.apply, v1, problem.pol, stop,
                        rank_source=problem.ctx.rank_trace)
    return EigsRun(config=cfg, problem=problem, result=result)


def run_variance(cfg: RunConfig, retain: float | None = None):
    if cfg.mode == hessian.MODE_SOURCE:
        raise InvalidConfigError(
            "the variance field is defined for spatial parameter modes (ic, steady)")
    run = run_eigs(cfg)
    retain = cfg.eps_eig if retain is None else retain
    summary = posterior.build_summary(
        run.result.ritz_values,
        [np.asarray(v) for v in run.result.ritz_vectors],
        gamma_prior=run.problem.cov.gamma_prior,
        eps_eig=retain,
        n_x=run.problem.grid.n_x,
    )
    return run, summary


# ---------------------------------------------------------------------------
# output writers


def _write_rows(path: Path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def write_eigs_outputs(run: EigsRun, outdir: Path) -> None:
    res = run.result
    k = min(run.config.k, len(res.ritz_values))
    _write_rows(
        outdir / "eigenvalues.csv", "index,ritz_value,imag_part",
        (f"{i},{res.ritz_values[i].real:.17g},{res.ritz_values[i].imag:.17g}"
         for i in range(k)),
    )
    _write_rows(
        outdir / "ranks.csv", "iteration,max_intermediate_rank",
        (f"{j + 1},{r}" for j, r in enumerate(res.rank_trace)),
    )
    m = res.H.shape[1]
    _write_rows(
        outdir / "hessenberg.csv", "i,j,value",
        (f"{i},{j},{res.H[i, j]:.17g}" for j in range(m) for i in range(min(j + 2, m + 1))),
    )
    if run.config.mode == hessian.MODE_SOURCE:
        # spectra of the low-rank Ritz vectors (space-time separation decay)
        rows = []
        for idx in range(k):
            for s_idx, s in enumerate(lr_singular_values(res.ritz_vectors[idx])):
                rows.append(f"{idx},{s_idx},{s:.17g}")
        _write_rows(outdir / "singular_values.csv", "vector,index,sigma", rows)
    with open(outdir / "diagnostics.log", "w") as fh:
        fh.write(f"iterations={res.iterations} breakdown={res.breakdown} "
                 f"converged_count={res.converged_count}\n")
        for j, h_sub, rank, secs in res.diagnostics:
            fh.write(f"iter={j} h_subdiag={h_sub:.6e} max_rank={rank} seconds={secs:.4f}\n")


def cmd_eigs(cfg: RunConfig) -> int:
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    run = run_eigs(cfg)
    write_eigs_outputs(run, outdir)
    write_manifest(cfg, outdir, run.problem.notes)
    return 0


def cmd_variance(cfg: RunConfig) -> int:
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    run, summary = run_variance(cfg)
    write_eigs_outputs(run, outdir)
    posterior.write_variance_csv(summary.variance_field, cfg.n_side, outdir / "variance.csv")
    posterior.write_variance_pgm(summary.variance_field, cfg.n_side,
                                 summary.gamma_prior, outdir / "variance.pgm")
    _write_rows(
        outdir / "retained.csv", "lambda,lambda_tilde",
        (f"{lam:.17g},{f:.17g}" for lam, f in zip(summary.eigenvalues, summary.filters)),
    )
    write_manifest(cfg, outdir, run.problem.notes)
    return 0


def _oracle_dense_side(problem: Problem):
    """Dense misfit Hessian for the configured instance (oracle path)."""
    cfg = problem.config
    L_dense = problem.spatial.L.toarray()
    if cfg.mode == hessian.MODE_STEADY:
        return oracle.dense_misfit_steady(L_dense, problem.cov.beta_noise,
                                          problem.cov.beta_prior)
    mask = problem.layout.mask
    if cfg.mode == hessian.MODE_IC:
        return oracle.dense_misfit_ic(
            L_dense, problem.grid.m_scale, problem.time.tau, problem.time.n_t,
            mask, problem.cov.beta_noise, problem.cov.gamma_prior,
        )
    return oracle.dense_misfit_source(
        L_dense, problem.grid.m_scale, problem.time.tau, problem.time.n_t,
        mask, problem.cov.beta_noise, problem.cov.gamma_prior,
    )


def _dense_apply_wrapper(problem: Problem):
    """Matrix-free apply acting on stacked dense vectors (for the hv gate)."""
    cfg = problem.config
    if cfg.mode != hessian.MODE_SOURCE:
        return problem.ctx.apply
    n_x, n_t = problem.grid.n_x, problem.time.n_t

    def apply_stacked(v):
        X = np.asarray(v, dtype=float).reshape((n_x, n_t), order="F")
        Y = problem.ctx.apply(lr_from_dense(X, problem.pol))
        return lr_to_dense(Y).reshape(-1, order="F")

    return apply_stacked


def run_oracle(cfg: RunConfig, retain: float = 1e-8, top_k: int = 10):
    problem = build_problem(cfg)
    dim = problem.ctx.n_param if cfg.mode != hessian.MODE_SOURCE \
        else problem.grid.n_x * problem.time.n_t
    Hd, asymmetry = _oracle_dense_side(problem)

    hv_err = oracle.hv_agreement(_dense_apply_wrapper(problem), Hd,
                                 n_probe=20, seed=cfg.seed)

    # the dense side has the complete spectrum, so the low-rank side must be
    # able to reseed through eigenvalue multiplicities; restarts consume
    # iteration slots, hence the slack beyond the dimension
    m_a = min(cfg.m_a, dim + 8)
    stop = StopRule(m_a=m_a, eps_eig=cfg.eps_eig, check_every=cfg.check_every,
                    on_breakdown="restart", restart_seed=cfg.seed)
    v1 = start_vector(cfg, problem)
    result = lr_arnoldi(problem.ctx.apply, v1, problem.pol, stop,
                        rank_source=problem.ctx.rank_trace)

    k = min(top_k, dim, len(result.ritz_values))
    dn_vals, dn_vecs = oracle.dense_eig_top(Hd, k)
    if cfg.mode == hessian.MODE_SOURCE:
        lr_vecs = np.column_stack([
            lr_to_dense(v).reshape(-1, order="F") for v in result.ritz_vectors[:k]
        ])
    else:
        lr_vecs = np.column_stack(result.ritz_vectors[:k])

    lr_var = dn_var = None
    if cfg.mode != hessian.MODE_SOURCE:
        summary = posterior.build_summary(
            result.ritz_values,
            [np.asarray(v) for v in result.ritz_vectors],
            gamma_prior=problem.cov.gamma_prior,
            eps_eig=retain,
            n_x=dim,
        )
        lr_var = summary.variance_field
        dn_var = oracle.dense_posterior_diag(Hd, problem.cov.gamma_prior)

    report = oracle.compare(
        result.ritz_values.real, lr_vecs, dn_vals, dn_vecs, Hd=Hd,
        lr_variance=lr_var, dense_variance=dn_var, hv_rel_error=hv_err,
    )
    report.tolerances["asymmetry"] = asymmetry
    return problem, result, report


def cmd_oracle(cfg: RunConfig) -> int:
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    problem, result, report = run_oracle(cfg)
    (outdir / "oracle_report.txt").write_text(report.as_text())
    write_manifest(cfg, outdir, problem.notes)
    return 0 if report.passed else 4


SWEEP_AXES = {
    "nt": "nt", "n-side": "n_side", "nu": "nu", "beta-ratio": "beta_ratio",
    "eps0": "eps0", "eps-eig": "eps_eig",
}


def cmd_sweep(cfg: RunConfig, axis: str, values: list[str]) -> int:
    if axis not in SWEEP_AXES:
        raise InvalidConfigError(f"sweep axis must be one of {sorted(SWEEP_AXES)}, got {axis!r}")
    if not values:
        raise InvalidConfigError("sweep needs a nonempty list of axis values")
    key = SWEEP_AXES[axis]
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows, failed = [], False
    for raw in values:
        # each point runs with fully independent state
        try:
            value = _parse_value(key, raw)
            point_cfg = replace(cfg, **{key: value, "out": str(outdir / f"{axis}_{raw}")})
            validate_config(point_cfg)
            point_dir = Path(point_cfg.out)
            point_dir.mkdir(parents=True, exist_ok=True)
            run = run_eigs(point_cfg)
            write_eigs_outputs(run, point_dir)
            write_manifest(point_cfg, point_dir, run.problem.notes)
            max_rank = max(run.result.rank_trace) if run.result.rank_trace else 0
            largest = run.result.ritz_values[0].real if len(run.result.ritz_values) else 0.0
            rows.append(f"{raw},{run.result.iterations},{max_rank},{largest:.17g}")
        except (InvalidConfigError, NumericalError) as exc:
            failed = True
            rows.append(f"{raw},ERROR,ERROR,ERROR")
            print(f"sweep point {axis}={raw} failed: {exc}", file=sys.stderr)
    _write_rows(outdir / "summary.csv",
                "point,iterations_to_threshold,max_rank,largest_eig", rows)
    write_manifest(cfg, outdir, {"sweep_axis": axis, "sweep_values": ",".join(values)})
    return 3 if failed else 0


def cmd_analytic(cfg: RunConfig) -> int:
    grid = discretize.build_grid(cfg.n_side)
    modes = [(m, n) for m in range(1, grid.n_side + 1) for n in range(1, grid.n_side + 1)]
    modes.sort(key=lambda mn: discretize.discrete_fd_eig(mn[0], mn[1], grid))
    k = min(cfg.k, len(modes))
    print("m,n,lambda_analytic,lambda_discrete,mu_steady")
    for m, n in modes[:k]:
        lam_a = discretize.analytic_poisson_eig(m, n)
        lam_d = discretize.discrete_fd_eig(m, n, grid)
        mu = (1.0 / cfg.beta_ratio) / lam_d**2
        print(f"{m},{n},{lam_a:.17g},{lam_d:.17g},{mu:.17g}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file (e.g. a manifest)")
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--n-side", dest="n_side", type=int)
    p.add_argument("--nt", type=int)
    p.add_argument("--final-time", dest="final_time", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--wind", help="two comma-separated components, e.g. 0,1")
    p.add_argument("--beta-ratio", dest="beta_ratio", type=float)
    p.add_argument("--gamma-mode", dest="gamma_mode", choices=("scalar", "beta"))
    p.add_argument("--gamma-prior", dest="gamma_prior", type=float)
    p.add_argument("--beta-prior", dest="beta_prior", type=float)
    p.add_argument("--sensors")
    p.add_argument("--eps0", type=float)
    p.add_argument("--r-max", dest="r_max")
    p.add_argument("--eps-eig", dest="eps_eig", type=float)
    p.add_argument("--m-a", dest="m_a", type=int)
    p.add_argument("--check-every", dest="check_every", type=int)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--start", choices=("ones", "random"))
    p.add_argument("--on-breakdown", dest="on_breakdown", choices=("stop", "restart"))
    p.add_argument("--seed", type=int)
    p.add_argument("--compress-every", dest="compress_every", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--out")


def _flag_updates(args: argparse.Namespace) -> dict:
    # raw strings (wind, r_max) are normalized inside resolve_config
    return {key: getattr(args, key) for key in _FIELD_TYPES
            if getattr(args, key, None) is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrpostcov",
        description="Low-rank posterior covariance approximation for "
                    "space-time Bayesian inverse problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("eigs", "compute the dominant misfit-Hessian eigenvalues"),
        ("variance", "compute the pointwise posterior variance field"),
        ("oracle", "compare the low-rank path against a dense reference"),
        ("sweep", "run a parameter sweep"),
        ("analytic", "print analytic/discrete Laplacian eigenvalue tables"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_config_flags(p)
        if name == "sweep":
            p.add_argument("--axis", required=True, help=f"one of {sorted(SWEEP_AXES)}")
            p.add_argument("--values", required=True,
                           help="comma-separated axis values")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(file_path=args.config, flag_updates=_flag_updates(args))
        if args.command == "eigs":
            return cmd_eigs(cfg)
        if args.command == "variance":
            return cmd_variance(cfg)
        if args.command == "oracle":
            return cmd_oracle(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.axis, [v for v in args.values.split(",") if v])
        if args.command == "analytic":
            return cmd_analytic(cfg)
        raise InvalidConfigError(f"unknown command {args.command!r}")
    except InvalidConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
