"""Batch experiment runner.

Usage: toruswalk <command> --config <path> [--seed N] [--workers N] [--out DIR]

Every command reads one JSON config, computes a table, and writes
<out>/<basename>.csv plus <out>/<basename>.meta.json.  CSV bodies are
a pure function of (config, seed, workers-independent streams): floats
are printed with 17 significant digits and no timestamps, so re-runs
are byte-identical; timing and provenance live in the metadata file.

Commands and their CSV columns:
  laplace     L, M, lam, sup_gap, target
  uniformity  L, M, t, gap
  beta0       c, level, estimate        (one row per refinement level)
  simulate    L, lam, mc_estimate, se, exact, z_score
  coalesce    L, s, k, p_hat, target, se
  conditions  M, sigma2, p1_max_dev, p2_min, p3_max_abs
  audit       kind, K, J, theta1, theta2, value, reference

Exit codes: 0 success, 2 config error, 3 numeric non-convergence,
4 step-cap abort.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    KernelPlan,
    check_keys,
    get_block,
    get_int,
    get_number,
    get_number_list,
    load_config,
    mc_block,
    parse_kernel_block,
    require_even,
    torus_sides,
)
from .kernels import JumpKernel, QuadratureError
from .limits import (
    QuadratureSpec,
    RegimeParams,
    RING_LOG2_LIMIT,
    TWO_PI,
    beta0,
    lemma21_audit,
    t_scale,
    target_laplace,
)
from .mc import SeedSpec, StepCapExceeded, estimate_laplace, lineage_count_law, simulate_hits
from .spectral import build_grid, condition_report, laplace_hit, uniformity_gap
from .torus import Annulus, TorusSpec, enumerate_region, index_of


@dataclass
class RunReport:
    command: str
    columns: tuple[str, ...]
    rows: list[tuple]
    resolved: dict
    basename: str


def _kernel_sigma2(kernel: JumpKernel, plan: KernelPlan) -> float:
    """Normalized variance for scaling targets.

    A range derived from L (M_exponent) is a genuine growing-range
    ladder, so the family's limiting variance applies; a fixed M means
    the same kernel at every L, whose actual normalized variance is
    sigma2_M / M^2 (the fixed-kernel reading of the scaling clock).
    """
    if plan.M_exponent is not None and kernel.sigma2_limit is not None:
        return kernel.sigma2_limit
    return kernel.sigma2_M / kernel.M**2


def _output_basename(cfg: dict, command: str) -> str:
    if "output" not in cfg:
        return command
    block = get_block(cfg, "output", command)
    check_keys(block, {"basename"}, f"{command}.output")
    name = block.get("basename", command)
    if not isinstance(name, str) or not name or os.sep in name:
        raise ConfigError(f"'basename' in {command}.output must be a plain file name")
    return name


def _resolve_seed(flag_seed: int | None, cfg_seed: int | None) -> int:
    if flag_seed is not None:
        return flag_seed
    if cfg_seed is not None:
        return cfg_seed
    return 0


# ---------------------------------------------------------------------------
# laplace


def cmd_laplace(cfg: dict, seed: int | None, workers: int) -> RunReport:
    check_keys(cfg, {"command", "torus", "kernel", "scale", "output"}, "laplace")
    sides = torus_sides(cfg, "laplace")
    plan = parse_kernel_block(get_block(cfg, "kernel", "laplace"), "laplace.kernel")
    scale = get_block(cfg, "scale", "laplace")
    check_keys(scale, {"lams", "mode", "rho", "alpha", "v_exponent"}, "laplace.scale")
    lams = get_number_list(scale, "lams", "laplace.scale")
    if any(lam <= 0 for lam in lams):
        raise ConfigError("laplace.scale lams must be positive")
    mode = scale.get("mode")
    if mode not in ("meanfield", "finite"):
        raise ConfigError(
            f"laplace.scale 'mode' must be 'meanfield' or 'finite', got {mode!r}"
        )
    if mode == "meanfield":
        extra = {"rho", "alpha", "v_exponent"} & set(scale)
        if extra:
            raise ConfigError(
                f"laplace.scale key(s) {sorted(extra)} are inconsistent with "
                "meanfield mode (the homogeneous limit has no start-scale or rho)"
            )
        rho = math.inf
        alpha = 1.0
        v_exp = None
    else:
        rho = get_number(scale, "rho", "laplace.scale")
        if not 0.0 <= rho < math.inf:
            raise ConfigError(
                f"laplace.scale 'rho' must be a finite nonnegative number, got {rho}"
            )
        alpha = get_number(scale, "alpha", "laplace.scale", default=1.0)
        if not 0.0 <= alpha <= 1.0:
            raise ConfigError(f"laplace.scale 'alpha' must lie in [0, 1], got {alpha}")
        v_exp = get_number(scale, "v_exponent", "laplace.scale", default=1.0)
        if v_exp <= 0:
            raise ConfigError("laplace.scale 'v_exponent' must be positive")
    for L in sides:
        plan.validate_for(L)

    rows: list[tuple] = []
    resolved: dict = {"mode": mode, "kernel": plan.label(), "regions": {}}
    for L in sides:
        spec = TorusSpec(L)
        kernel = plan.build(L)
        grid = build_grid(kernel, spec)
        sigma2 = _kernel_sigma2(kernel, plan)
        if mode == "meanfield":
            idx = np.arange(spec.n_points)
            idx = idx[idx != int(index_of(np.zeros(2, dtype=np.int64), spec))]
            region_size = int(idx.size)
        else:
            v = math.log(L) ** v_exp
            pts = enumerate_region(Annulus(alpha=alpha, v=v, L=L))
            if pts.shape[0] == 0:
                raise ConfigError(
                    f"annulus(alpha={alpha}, v=(log {L})**{v_exp}) contains no "
                    f"lattice points at L={L}; pick a larger L or smaller alpha"
                )
            idx = index_of(pts, spec)
            region_size = int(pts.shape[0])
        resolved["regions"][str(L)] = region_size
        params = RegimeParams(rho=rho, sigma2=sigma2, alpha=alpha)
        for lam in lams:
            b = lam / L**2 if mode == "meanfield" else lam / (L**2 * t_scale(L, kernel.M))
            F = laplace_hit(grid, b)
            target = target_laplace(params, lam)
            gap = float(np.max(np.abs(F.values[idx] - target)))
            rows.append((L, kernel.M, lam, gap, target))
    return RunReport(
        command="laplace",
        columns=("L", "M", "lam", "sup_gap", "target"),
        rows=rows,
        resolved=resolved,
        basename=_output_basename(cfg, "laplace"),
    )


# ---------------------------------------------------------------------------
# uniformity


def cmd_uniformity(cfg: dict, seed: int | None, workers: int) -> RunReport:
    check_keys(cfg, {"command", "torus", "kernel", "scale", "output"}, "uniformity")
    sides = torus_sides(cfg, "uniformity")
    plan = parse_kernel_block(get_block(cfg, "kernel", "uniformity"), "uniformity.kernel")
    scale = get_block(cfg, "scale", "uniformity")
    check_keys(scale, {"k_values"}, "uniformity.scale")
    k_values = get_number_list(scale, "k_values", "uniformity.scale")
    if any(k < 0 for k in k_values):
        raise ConfigError("uniformity.scale k_values must be nonnegative")
    for L in sides:
        plan.validate_for(L)

    rows: list[tuple] = []
    for L in sides:
        spec = TorusSpec(L)
        kernel = plan.build(L)
        grid = build_grid(kernel, spec)
        base_t = max(L**2 / kernel.M**2, math.log(L))
        for k in k_values:
            t = k * base_t
            gap, _bound = uniformity_gap(grid, t)
            rows.append((L, kernel.M, t, gap))
    return RunReport(
        command="uniformity",
        columns=("L", "M", "t", "gap"),
        rows=rows,
        resolved={"kernel": plan.label(), "base_time": "max(L^2/M^2, log L)"},
        basename=_output_basename(cfg, "uniformity"),
    )


# ---------------------------------------------------------------------------
# beta0


def cmd_beta0(cfg: dict, seed: int | None, workers: int) -> RunReport:
    check_keys(cfg, {"command", "q0", "c_values", "quad", "output"}, "beta0")
    plan = parse_kernel_block(
        get_block(cfg, "q0", "beta0"), "beta0.q0", allow_meanfield=False
    )
    if plan.M is None:
        raise ConfigError("beta0.q0 requires a fixed 'M' (no torus side to derive from)")
    if "c_values" not in cfg:
        raise ConfigError("beta0 requires 'c_values'")
    c_values = get_number_list(cfg, "c_values", "beta0")
    if any(not 0.0 < c <= 1.0 for c in c_values):
        raise ConfigError("beta0 c_values must lie in (0, 1]")
    quad = QuadratureSpec()
    if "quad" in cfg:
        qb = get_block(cfg, "quad", "beta0")
        check_keys(qb, {"base", "max_axis", "tol"}, "beta0.quad")
        try:
            quad = QuadratureSpec(
                base=get_int(qb, "base", "beta0.quad") if "base" in qb else 64,
                max_axis=get_int(qb, "max_axis", "beta0.quad") if "max_axis" in qb else 4096,
                tol=get_number(qb, "tol", "beta0.quad", default=1e-6),
            )
        except ValueError as exc:
            raise ConfigError(f"beta0.quad: {exc}") from exc

    q0 = plan.build_with_M(plan.M)
    rows: list[tuple] = []
    for c in c_values:
        result = beta0(c, q0, quad)
        for level_n, estimate in result.levels:
            rows.append((c, level_n, estimate))
    return RunReport(
        command="beta0",
        columns=("c", "level", "estimate"),
        rows=rows,
        resolved={"q0": plan.label(), "quad": {"base": quad.base, "max_axis": quad.max_axis, "tol": quad.tol}},
        basename=_output_basename(cfg, "beta0"),
    )


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(cfg: dict, seed: int | None, workers: int) -> RunReport:
    check_keys(cfg, {"command", "torus", "kernel", "scale", "mc", "output"}, "simulate")
    sides = torus_sides(cfg, "simulate")
    plan = parse_kernel_block(get_block(cfg, "kernel", "simulate"), "simulate.kernel")
    scale = get_block(cfg, "scale", "simulate")
    check_keys(scale, {"lams"}, "simulate.scale")
    lams = get_number_list(scale, "lams", "simulate.scale")
    if any(lam < 0 for lam in lams):
        raise ConfigError("simulate.scale lams must be nonnegative")
    replicates, cfg_seed, chunk, step_cap = mc_block(cfg, "simulate")
    master = _resolve_seed(seed, cfg_seed)
    for L in sides:
        plan.validate_for(L)

    rows: list[tuple] = []
    for li, L in enumerate(sides):
        spec = TorusSpec(L)
        kernel = plan.build(L)
        grid = build_grid(kernel, spec)
        batch = simulate_hits(
            kernel,
            spec,
            replicates,
            SeedSpec(master).subspace(li),
            chunk_size=chunk,
            workers=workers,
            step_cap=step_cap,
        )
        est, se = estimate_laplace(batch.hit_times, np.array(lams))
        for j, lam in enumerate(lams):
            if lam == 0.0:
                exact = 1.0
            else:
                F = laplace_hit(grid, lam)
                exact = float((F.values.sum() - 1.0) / (spec.n_points - 1))
            if se[j] > 0:
                z = (float(est[j]) - exact) / float(se[j])
            else:
                z = 0.0 if float(est[j]) == exact else math.inf
            rows.append((L, lam, float(est[j]), float(se[j]), exact, z))
    return RunReport(
        command="simulate",
        columns=("L", "lam", "mc_estimate", "se", "exact", "z_score"),
        rows=rows,
        resolved={
            "kernel": plan.label(),
            "replicates": replicates,
            "seed": master,
            "starts": "uniform over the punctured torus",
        },
        basename=_output_basename(cfg, "simulate"),
    )


# ---------------------------------------------------------------------------
# coalesce


def _diagonal_starts(n: int, L: int) -> np.ndarray:
    pts = np.array([[(i * L) // n, (i * L) // n] for i in range(n)], dtype=np.int64)
    return pts


def cmd_coalesce(cfg: dict, seed: int | None, workers: int) -> RunReport:
    check_keys(cfg, {"command", "torus", "kernel", "scale", "mc", "output"}, "coalesce")
    sides = torus_sides(cfg, "coalesce")
    plan = parse_kernel_block(get_block(cfg, "kernel", "coalesce"), "coalesce.kernel")
    scale = get_block(cfg, "scale", "coalesce")
    check_keys(scale, {"s_values", "n", "starts", "sigma2"}, "coalesce.scale")
    s_values = get_number_list(scale, "s_values", "coalesce.scale")
    if any(s < 0 for s in s_values):
        raise ConfigError("coalesce.scale s_values must be nonnegative")
    if ("n" in scale) == ("starts" in scale):
        raise ConfigError("coalesce.scale requires exactly one of 'n' or 'starts'")
    explicit = None
    if "starts" in scale:
        raw = scale["starts"]
        if (
            not isinstance(raw, list)
            or len(raw) < 1
            or not all(
                isinstance(p, list)
                and len(p) == 2
                and all(isinstance(v, int) and not isinstance(v, bool) for v in p)
                for p in raw
            )
        ):
            raise ConfigError("coalesce.scale 'starts' must be a list of [x, y] integer pairs")
        explicit = np.array(raw, dtype=np.int64)
        n = explicit.shape[0]
    else:
        n = get_int(scale, "n", "coalesce.scale", minimum=1)
    sigma2_override = None
    if "sigma2" in scale:
        sigma2_override = get_number(scale, "sigma2", "coalesce.scale")
        if sigma2_override <= 0:
            raise ConfigError("coalesce.scale 'sigma2' must be positive")
    replicates, cfg_seed, chunk, step_cap = mc_block(cfg, "coalesce")
    master = _resolve_seed(seed, cfg_seed)
    for L in sides:
        plan.validate_for(L)
        if explicit is None and n > L:
            raise ConfigError(f"cannot place {n} distinct diagonal starts on L={L}")

    rows: list[tuple] = []
    separation: dict[str, bool] = {}
    for li, L in enumerate(sides):
        spec = TorusSpec(L)
        kernel = plan.build(L)
        starts = explicit if explicit is not None else _diagonal_starts(n, L)
        sigma2 = sigma2_override if sigma2_override is not None else _kernel_sigma2(kernel, plan)
        for si, s in enumerate(s_values):
            law = lineage_count_law(
                kernel,
                spec,
                starts,
                s,
                replicates,
                SeedSpec(master).subspace(li, si),
                sigma2=sigma2,
                chunk_size=chunk,
                workers=workers,
                step_cap=step_cap,
            )
            separation[f"L={L},s={s:g}"] = law.separation_ok
            for k in range(1, n + 1):
                rows.append(
                    (L, s, k, float(law.p_hat[k - 1]), float(law.target[k - 1]), float(law.se[k - 1]))
                )
    return RunReport(
        command="coalesce",
        columns=("L", "s", "k", "p_hat", "target", "se"),
        rows=rows,
        resolved={
            "kernel": plan.label(),
            "replicates": replicates,
            "seed": master,
            "n": n,
            "separation_ok": separation,
        },
        basename=_output_basename(cfg, "coalesce"),
    )


# ---------------------------------------------------------------------------
# conditions


def cmd_conditions(cfg: dict, seed: int | None, workers: int) -> RunReport:
    check_keys(cfg, {"command", "kernel", "M_values", "params", "output"}, "conditions")
    plan = parse_kernel_block(
        get_block(cfg, "kernel", "conditions"),
        "conditions.kernel",
        ranged=False,
        allow_meanfield=False,
    )
    if "M_values" not in cfg or not isinstance(cfg["M_values"], list) or not cfg["M_values"]:
        raise ConfigError("conditions requires a nonempty 'M_values' list")
    Ms = []
    for v in cfg["M_values"]:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"conditions M_values entries must be integers, got {v!r}")
        Ms.append(require_even(v, "conditions M_values entry"))
    delta, delta_prime, a, eps = 0.5, 1.0, 1.0, 0.05
    n_angles = n_radii = 64
    if "params" in cfg:
        pb = get_block(cfg, "params", "conditions")
        check_keys(
            pb, {"delta", "delta_prime", "a", "eps", "n_angles", "n_radii"}, "conditions.params"
        )
        delta = get_number(pb, "delta", "conditions.params", default=delta)
        delta_prime = get_number(pb, "delta_prime", "conditions.params", default=delta_prime)
        a = get_number(pb, "a", "conditions.params", default=a)
        eps = get_number(pb, "eps", "conditions.params", default=eps)
        n_angles = get_int(pb, "n_angles", "conditions.params") if "n_angles" in pb else n_angles
        n_radii = get_int(pb, "n_radii", "conditions.params") if "n_radii" in pb else n_radii

    kernels = [plan.build_with_M(M) for M in Ms]
    try:
        report = condition_report(
            kernels,
            delta=delta,
            delta_prime=delta_prime,
            a=a,
            eps=eps,
            n_angles=n_angles,
            n_radii=n_radii,
        )
    except ValueError as exc:
        raise ConfigError(f"conditions parameters are inconsistent: {exc}") from exc
    rows = [
        (row.M, row.sigma2, row.p1_max_dev, row.p2_min, row.p3_max_abs)
        for row in report.rows
    ]
    return RunReport(
        command="conditions",
        columns=("M", "sigma2", "p1_max_dev", "p2_min", "p3_max_abs"),
        rows=rows,
        resolved={
            "kernel": plan.label(),
            "delta": delta,
            "delta_prime": delta_prime,
            "a": a,
            "eps": eps,
        },
        basename=_output_basename(cfg, "conditions"),
    )


# ---------------------------------------------------------------------------
# audit


def cmd_audit(cfg: dict, seed: int | None, workers: int) -> RunReport:
    check_keys(cfg, {"command", "audit", "output"}, "audit")
    block = get_block(cfg, "audit", "audit")
    check_keys(block, {"K", "J", "thetas"}, "audit.audit")
    K = get_int(block, "K", "audit.audit", minimum=2)
    J = get_int(block, "J", "audit.audit", minimum=1)
    if J >= K:
        raise ConfigError(f"audit requires J < K, got J={J}, K={K}")
    raw = block.get("thetas")
    if not isinstance(raw, list) or not raw or not all(
        isinstance(p, list) and len(p) == 2 for p in raw
    ):
        raise ConfigError("audit.audit 'thetas' must be a nonempty list of [t1, t2] pairs")
    thetas = np.array(raw, dtype=np.float64)
    sup = np.max(np.abs(thetas), axis=1)
    if np.any(sup == 0) or np.any(sup > math.pi + 1e-12):
        raise ConfigError("audit thetas must be nonzero points of the closed pi-ball")

    report = lemma21_audit(K, J, thetas)
    rows: list[tuple] = []
    for exp_row in report.exp_rows:
        t1, t2 = exp_row.theta
        rows.append(("square_sum", K, J, t1, t2, exp_row.box_abs, exp_row.box_bound))
        rows.append(("disc_sum", K, J, t1, t2, exp_row.disc_abs, exp_row.disc_bound))
    for ring_row in report.ring_rows:
        t1, t2 = ring_row.theta
        rows.append(("ring_sum", K, J, t1, t2, ring_row.ring_abs, ring_row.implied_constant))
    rows.append(("torus_log_ratio", K, J, "", "", report.torus_log_ratio, TWO_PI))
    rows.append(("disc_log_ratio", K, J, "", "", report.disc_log_ratio, TWO_PI))
    rows.append(("ring_dyadic_sum", K, J, "", "", report.ring_dyadic_sum, RING_LOG2_LIMIT))
    return RunReport(
        command="audit",
        columns=("kind", "K", "J", "theta1", "theta2", "value", "reference"),
        rows=rows,
        resolved={"K": K, "J": J, "n_thetas": int(thetas.shape[0])},
        basename=_output_basename(cfg, "audit"),
    )


# ---------------------------------------------------------------------------
# plumbing

COMMANDS = {
    "laplace": cmd_laplace,
    "uniformity": cmd_uniformity,
    "beta0": cmd_beta0,
    "simulate": cmd_simulate,
    "coalesce": cmd_coalesce,
    "conditions": cmd_conditions,
    "audit": cmd_audit,
}


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("boolean cells are not part of any table schema")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def write_outputs(
    report: RunReport,
    out_dir: str,
    raw_cfg: dict,
    seed: int | None,
    workers: int,
    wall_seconds: float,
) -> tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, report.basename + ".csv")
    meta_path = os.path.join(out_dir, report.basename + ".meta.json")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow([_fmt(v) for v in row])
    meta = {
        "command": report.command,
        "version": __version__,
        "seed": seed,
        "workers": workers,
        "wall_seconds": wall_seconds,
        "rows": len(report.rows),
        "config": raw_cfg,
        "resolved": report.resolved,
    }
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, meta_path


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="toruswalk",
        description="Exact and Monte Carlo studies of torus random-walk "
        "hitting times and coalescing walkers.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "laplace": "exact hitting transforms vs their scaling targets",
        "uniformity": "worst-case deviation of the walk's law from uniform",
        "beta0": "limiting mean constant of the mixture family by quadrature",
        "simulate": "Monte Carlo hitting transforms vs exact values",
        "coalesce": "lineage-count law of coalescing walkers vs the death process",
        "conditions": "kernel regularity diagnostics over a range ladder",
        "audit": "exponential-sum bounds and logarithmic lattice-sum ratios",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument("--workers", type=int, default=1, help="worker threads (default 1)")
        p.add_argument("--out", default=".", help="output directory (default .)")
    args = parser.parse_args(argv)
    if args.workers < 1:
        print("config error: --workers must be at least 1", file=sys.stderr)
        return 2

    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
        if "command" in cfg and cfg["command"] != args.command:
            raise ConfigError(
                f"config is for command {cfg['command']!r}, not {args.command!r}"
            )
        report = COMMANDS[args.command](cfg, seed=args.seed, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: invalid value: {exc}", file=sys.stderr)
        return 2
    except QuadratureError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 3
    except StepCapExceeded as exc:
        print(f"step-cap abort: {exc}", file=sys.stderr)
        return 4
    wall = time.perf_counter() - t0
    csv_path, meta_path = write_outputs(
        report, args.out, cfg, args.seed, args.workers, wall
    )
    print(f"wrote {csv_path} and {meta_path} ({len(report.rows)} rows, {wall:.2f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
