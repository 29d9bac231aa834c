"""Command-line entry point: one subcommand per study."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config
from .dispersion import DispersionParams, ResonantRegimeError, check_sum_lemma
from .evolve import (BlowUpError, EvolutionConfig, evolve, kdv_limit_study, temporal_order)
from .io import atomic_write, write_csv, write_json
from .normal_form import (b_bound_scan, default_nf_datum, nf_identity_residual, sharpness_family,
                          sharpness_grid)
from .picard import QuadratureError, growth_scan
from .regularity import RandomDataSpec, UnderResolvedError, random_hs_data, smoothing_gain
from .spectral import FrequencyGrid, SpectralField, sobolev_norm

log = logging.getLogger("ostrovsky")

COMMANDS = ("evolve", "smoothing", "picard", "nf-check", "bscan", "kdv-limit", "lemma-check")
SELF_CONVERGENCE_TOL = 1e-8


def _params(cfg: ExperimentConfig) -> DispersionParams:
    d = cfg.dispersion
    return DispersionParams(d.beta, d.gamma, d.cutoff_Xi0, d.lowhigh_ratio)


def _grid(cfg: ExperimentConfig) -> FrequencyGrid:
    return FrequencyGrid(cfg.grid.period_L, cfg.grid.modes_N)


def smooth_datum(grid: FrequencyGrid, amplitude: float = 1.0) -> SpectralField:
    """``x exp(-x^2)`` normalized to unit L2 norm, mean mode removed."""
    f = SpectralField.from_function(grid, lambda x: x * np.exp(-x * x)).without_mean()
    return f * (amplitude / sobolev_norm(f, 0.0))


def initial_datum(cfg: ExperimentConfig, grid: FrequencyGrid) -> SpectralField:
    k = cfg.initial.kind
    if k == "zero":
        return grid.zeros()
    if k == "smooth":
        return smooth_datum(grid, cfg.initial.amplitude)
    if k == "nf_default":
        return default_nf_datum(grid, cfg.initial.amplitude)
    return random_hs_data(RandomDataSpec(cfg.smoothing.s, cfg.smoothing.delta,
                                         cfg.initial.amplitude, cfg.seed), grid)


# each study writes its files and returns (files, checks)

def cmd_evolve(cfg: ExperimentConfig, out: Path, h: str):
    grid, p = _grid(cfg), _params(cfg)
    ev = cfg.evolution
    f = initial_datum(cfg, grid)
    ecfg = EvolutionConfig(params=p, dt=ev.dt, horizon_T=ev.horizon_T, record_every=ev.record_every)
    traj = evolve(f, ecfg)
    files = [write_csv(out / "trajectory.csv", ["t", "l2", "hs"],
                       zip(traj.times, traj.l2, traj.hs), h)]
    files.append(atomic_write(out / "final_state.json", traj.final.to_json()))
    drift = traj.l2_drift()
    half = evolve(f, EvolutionConfig(params=p, dt=ev.dt / 2, horizon_T=ev.horizon_T,
                                     record_every=10**9), check_resolution=False).final
    scale = max(traj.l2[-1], 1e-300)
    selfconv = sobolev_norm(traj.final - half, 0.0) / scale if traj.l2[-1] > 0 else 0.0
    errs, orders = temporal_order(f, p, ev.horizon_T, ev.dt_check)
    measurable = all(e > 1e-12 for e in errs)
    files.append(write_csv(out / "temporal_order.csv", ["dt", "error", "order_to_next"],
                           [(d, e, o) for d, e, o in zip(sorted(ev.dt_check, reverse=True), errs,
                                                        orders + [float("nan")])], h))
    checks = {
        "l2_drift": {"value": drift, "limit": cfg.thresholds.l2_drift,
                     "pass": drift <= cfg.thresholds.l2_drift},
        "self_convergence": {"value": selfconv, "limit": SELF_CONVERGENCE_TOL,
                             "pass": selfconv <= SELF_CONVERGENCE_TOL},
        "temporal_order": {"value": min(orders) if measurable else None,
                           "limit": cfg.thresholds.temporal_order_min,
                           "pass": (min(orders) >= cfg.thresholds.temporal_order_min) if measurable else True},
        "under_resolved": {"value": traj.under_resolved, "pass": not traj.under_resolved},
    }
    return files, checks


def cmd_smoothing(cfg: ExperimentConfig, out: Path, h: str):
    sm = cfg.smoothing
    grid = FrequencyGrid(sm.period_L, sm.modes_N)
    ecfg = EvolutionConfig(params=_params(cfg), dt=sm.dt, horizon_T=sm.horizon_T,
                           record_every=sm.record_every)
    seeds = [cfg.seed + i for i in range(sm.n_seeds)]
    rep = smoothing_gain(RandomDataSpec(sm.s, sm.delta, 1.0, cfg.seed), ecfg, grid, seeds=seeds,
                         xi_floor=sm.xi_floor, gate=sm.gate, a_grid=sm.a_grid, workers=cfg.threads)
    d = rep.to_dict()
    for sd in d["seeds"]:
        for k in ("bands_f", "bands_v", "v_norms", "a_norms", "times"):
            sd.pop(k)
    files = [write_json(out / "smoothing_report.json", d, h)]
    rows = []
    for r in rep.seeds:
        rows += [(r.seed, "f", j, e) for j, e in r.bands_f]
        rows += [(r.seed, "v", j, e) for j, e in r.bands_v]
    files.append(write_csv(out / "band_energies.csv", ["seed", "field", "band_j", "energy"], rows, h))
    rows = []
    for r in rep.seeds:
        for a, series in r.a_norms.items():
            rows += [(r.seed, float(a), t, v) for t, v in zip(r.times, series)]
        rows += [(r.seed, "gain-0.05", t, v) for t, v in zip(r.times, r.v_norms)]
    files.append(write_csv(out / "duhamel_norms.csv", ["seed", "a", "t", "norm"], rows, h))
    th = cfg.thresholds
    checks = {}
    if rep.degenerate:
        checks["degenerate"] = {"value": True, "pass": True}
    else:
        checks["bounded_in_time"] = {"value": all(r.bounded for r in rep.seeds),
                                     "pass": all(r.bounded for r in rep.seeds)}
        if sm.s == 0 and rep.diagnostic is None:
            lo, hi = th.gain_s0
            checks["gain_bracket"] = {"value": rep.gain_hat, "limit": [lo, hi],
                                      "pass": lo <= rep.gain_hat <= hi}
            mn = rep.ensemble_stats["min"]
            checks["gain_per_seed"] = {"value": mn, "limit": th.gain_s0_per_seed_min,
                                       "pass": mn > th.gain_s0_per_seed_min}
    if rep.diagnostic:
        checks["diagnostic"] = {"value": rep.diagnostic, "pass": True}
    return files, checks


def cmd_picard(cfg: ExperimentConfig, out: Path, h: str):
    pc = cfg.picard
    rows, slopes, meta = [], [], {}
    for case in pc.cases:
        g = growth_scan(pc.s, pc.a, pc.N_list, pc.t, case, workers=cfg.threads, c=pc.c)
        for n, v, e, fn in zip(g.N, g.values, g.rel_errors, g.family_norms):
            rows.append((case, pc.s, pc.a, n, v, e, fn))
        slopes.append((case, g.slope, g.max_rel_error))
        meta[case] = g.metadata
    files = [write_csv(out / "picard_growth.csv",
                       ["case", "s", "a", "N", "value", "rel_error", "family_norm"], rows, h),
             write_csv(out / "picard_slopes.csv", ["case", "slope", "max_rel_error"], slopes, h),
             write_json(out / "picard_metadata.json", {"families": meta}, h)]
    th = cfg.thresholds
    checks = {}
    for case, sl, err in slopes:
        if case == "gammaPos1-control":
            checks[f"slope_{case}"] = {"value": sl, "limit": th.picard_control_slope_max,
                                       "pass": sl <= th.picard_control_slope_max}
        else:
            checks[f"slope_{case}"] = {"value": sl, "limit": th.picard_growth_slope_min,
                                       "pass": sl >= th.picard_growth_slope_min}
        checks[f"quadrature_{case}"] = {"value": err, "limit": 1e-8, "pass": err <= 1e-8}
    return files, checks


def nf_study(cfg: ExperimentConfig):
    """Residual table over snapshot spacings; returns rows and observed orders."""
    grid, p = _grid(cfg), _params(cfg)
    f = initial_datum(cfg, grid) if cfg.initial.kind == "nf_default" else default_nf_datum(grid)
    nf = cfg.nf
    rows = []
    for hh in sorted(nf.spacings, reverse=True):
        every = round(hh / nf.dt)
        if every < 1 or abs(every * nf.dt - hh) > 1e-9 * hh:
            raise ValueError(f"snapshot spacing {hh} is not a multiple of nf.dt={nf.dt}")
        ecfg = EvolutionConfig(params=p, dt=nf.dt, horizon_T=(nf.n_snapshots - 1) * hh, record_every=every)
        traj = evolve(f, ecfg, check_resolution=False)
        r = nf_identity_residual(traj, p, nf.s)
        rows.append((hh, float(r.residual.max()), float(r.reference.max()), r.max_relative))
    orders = [math.log(r1[1] / r2[1]) / math.log(r1[0] / r2[0]) for r1, r2 in zip(rows, rows[1:])]
    return rows, orders


def cmd_nf_check(cfg: ExperimentConfig, out: Path, h: str):
    rows, orders = nf_study(cfg)
    files = [write_csv(out / "nf_residual.csv", ["spacing", "max_residual", "max_reference", "max_relative"],
                       rows, h),
             write_csv(out / "nf_orders.csv", ["spacing_from", "spacing_to", "order"],
                       [(a[0], b[0], o) for a, b, o in zip(rows, rows[1:], orders)], h)]
    lo, hi = cfg.thresholds.nf_order
    checks = {"order": {"value": orders, "limit": [lo, hi], "pass": all(lo <= o <= hi for o in orders)}}
    at = [r for r in rows if abs(r[0] - 1e-3) < 1e-12]
    if at:
        checks["relative_at_1e-3"] = {"value": at[0][3], "limit": cfg.thresholds.nf_relative,
                                      "pass": at[0][3] <= cfg.thresholds.nf_relative}
    return files, checks


def _slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def bscan_study(cfg: ExperimentConfig):
    b = cfg.bscan
    d = cfg.dispersion
    rand_rows, sharp_rows = [], []
    for xi0 in b.xi0_list:
        p = DispersionParams(d.beta, d.gamma, xi0, d.lowhigh_ratio)
        for n in b.N_list:
            grid = FrequencyGrid(b.period_L, n)
            ens = [random_hs_data(RandomDataSpec(b.s, seed=cfg.seed + i), grid) for i in range(b.ensemble_size)]
            for a in b.a_list:
                for _, member, ratio in b_bound_scan(b.s, a, ens, p).rows:
                    rand_rows.append(("random", xi0, n, member, b.s, a, ratio))
        for nn in b.sharp_N_list:
            grid = sharpness_grid(nn, b.sharp_refine)
            f = sharpness_family(nn, grid)
            for a in b.a_list:
                ratio = b_bound_scan(b.s, a, [f], p).rows[0][2]
                sharp_rows.append(("sharp", xi0, nn, 0, b.s, a, ratio))
    return rand_rows, sharp_rows


def cmd_bscan(cfg: ExperimentConfig, out: Path, h: str):
    rand_rows, sharp_rows = bscan_study(cfg)
    hdr = ["family", "Xi0", "N", "member", "s", "a", "ratio"]
    files = [write_csv(out / "bscan_random.csv", hdr, rand_rows, h),
             write_csv(out / "bscan_sharp.csv", hdr, sharp_rows, h)]
    checks = {}
    th = cfg.thresholds
    summary = []
    for xi0 in cfg.bscan.xi0_list:
        for a in cfg.bscan.a_list:
            per_n = {}
            for _, x, n, _, _, aa, r in rand_rows:
                if x == xi0 and aa == a:
                    per_n[n] = max(per_n.get(n, 0.0), r)
            sharp = [(n, r) for _, x, n, _, _, aa, r in sharp_rows if x == xi0 and aa == a]
            vr = max(per_n.values()) / min(per_n.values()) if per_n and min(per_n.values()) > 0 else math.inf
            vs = max(r for _, r in sharp) / min(r for _, r in sharp) if sharp else math.inf
            sl = _slope([n for n, _ in sharp], [r for _, r in sharp]) if len(sharp) > 1 else float("nan")
            summary.append((xi0, a, vr, vs, sl))
            if xi0 == cfg.dispersion.cutoff_Xi0 and a == 0.5:
                checks["random_flat_a0.5"] = {"value": vr, "limit": th.bscan_flat_factor,
                                              "pass": vr < th.bscan_flat_factor}
                checks["sharp_flat_a0.5"] = {"value": vs, "limit": th.bscan_flat_factor,
                                             "pass": vs < th.bscan_flat_factor}
            if xi0 == cfg.dispersion.cutoff_Xi0 and a == 0.75:
                checks["sharp_slope_a0.75"] = {"value": sl, "limit": th.sharp_slope_min,
                                               "pass": sl >= th.sharp_slope_min}
    files.append(write_csv(out / "bscan_summary.csv",
                           ["Xi0", "a", "random_variation", "sharp_variation", "sharp_slope"], summary, h))
    return files, checks


def cmd_kdv_limit(cfg: ExperimentConfig, out: Path, h: str):
    grid, p = _grid(cfg), _params(cfg)
    f = initial_datum(cfg, grid)
    ev = cfg.evolution
    ecfg = EvolutionConfig(params=p, dt=ev.dt, horizon_T=cfg.kdv.horizon_T, record_every=10**9)
    tab = kdv_limit_study(f, cfg.kdv.gammas, ecfg)
    files = [write_csv(out / "kdv_limit.csv", ["gamma", "l2_error"], tab.rows(), h)]
    positive = [(g, e) for g, e in tab.rows() if g > 0]
    sub = type(tab)([g for g, _ in positive], [e for _, e in positive])
    checks = {"strictly_decreasing": {"value": [e for _, e in positive], "pass": sub.strictly_decreasing}}
    return files, checks


def cmd_lemma_check(cfg: ExperimentConfig, out: Path, h: str):
    rows, checks = [], {}
    for be, ga in cfg.lemma.exponents:
        ratios = [check_sum_lemma(be, ga, sep, 0.0) for sep in cfg.lemma.separations]
        rows += [(be, ga, sep, r) for sep, r in zip(cfg.lemma.separations, ratios)]
        spread = max(ratios) / min(ratios)
        checks[f"spread_{be:g}_{ga:g}"] = {"value": spread, "limit": cfg.thresholds.lemma_ratio_max,
                                           "pass": spread <= cfg.thresholds.lemma_ratio_max}
    files = [write_csv(out / "lemma_ratios.csv", ["beta", "gamma", "separation", "ratio"], rows, h)]
    return files, checks


STUDIES = {
    "evolve": cmd_evolve,
    "smoothing": cmd_smoothing,
    "picard": cmd_picard,
    "nf-check": cmd_nf_check,
    "bscan": cmd_bscan,
    "kdv-limit": cmd_kdv_limit,
    "lemma-check": cmd_lemma_check,
}


def run_command(command: str, cfg: ExperimentConfig, out_root: Path) -> tuple[int, Path]:
    """Run one study, write its manifest, return ``(exit_code, manifest_path)``."""
    h = cfg.hash()
    out = Path(out_root) / command
    out.mkdir(parents=True, exist_ok=True)
    atomic_write(out / "config.json", cfg.canonical_json() + "\n")
    t0 = time.perf_counter()
    error = None
    files, checks = [], {}
    try:
        files, checks = STUDIES[command](cfg, out, h)
    except (BlowUpError, UnderResolvedError, QuadratureError, ResonantRegimeError) as exc:
        error = f"{type(exc).__name__}: {exc}"
    ok = error is None and all(c.get("pass", True) for c in checks.values())
    manifest = {
        "command": command,
        "config_hash": h,
        "config": cfg.model_dump(mode="json"),
        "artifact_version": __version__,
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "files": sorted(str(Path(f).relative_to(out)) for f in files) + ["config.json"],
        "checks": checks,
        "error": error,
        "passed": ok,
    }
    mpath = write_json(out / "manifest.json", manifest, h)
    return (0 if ok else 1), mpath


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ostrovsky", description="Ostrovsky smoothing experiments")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--out", type=Path, help="output root (default $OSTROVSKY_OUT or ./ostrovsky_out)")
    common.add_argument("--threads", type=int, help="worker bound")
    common.add_argument("--seed", type=int, help="base random seed")
    common.add_argument("--dry-run", action="store_true", help="validate the config and exit")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("overrides", nargs="*", metavar="key=value", help="dotted config overrides")
    sub = ap.add_subparsers(dest="command", required=True)
    for c in COMMANDS:
        sub.add_parser(c, parents=[common])
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    over = list(args.overrides)
    if args.threads is not None:
        over.append(f"threads={args.threads}")
    if args.seed is not None:
        over.append(f"seed={args.seed}")
    try:
        cfg = load_config(args.config, over)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_root = args.out or (Path(cfg.out_dir) if cfg.out_dir else None) \
        or Path(os.environ.get("OSTROVSKY_OUT", "ostrovsky_out"))
    if args.dry_run:
        print(cfg.canonical_json())
        return 0
    try:
        code, mpath = run_command(args.command, cfg, out_root)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    m = json.loads(mpath.read_text())
    for name, c in m["checks"].items():
        print(f"{'PASS' if c.get('pass', True) else 'FAIL'} {name}: {c.get('value')}")
    if m["error"]:
        print(f"ERROR {m['error']}", file=sys.stderr)
    print(f"manifest: {mpath}")
    return code


if __name__ == "__main__":
    sys.exit(main())
