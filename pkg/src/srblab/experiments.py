"""Experiment drivers: entropy reports, tail profiles, parameter sweeps.

These functions sit between the config layer and the numerics:  they
build the map and (for one-dimensional families) its first-return tower,
run the requested computation and emit CSV/SVG artifacts into the
config's output directory.  Sweep rows are pure functions of
``(config, row index)``, so they can run in a process pool and still
produce byte-identical artifacts for any worker count; the
successive-row diagnostics are computed afterwards in row order.
"""

from __future__ import annotations

import math
import os
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig, parse, serialize
from .entropy import EntropyReport, entropy_report
from .errors import ConfigError, SrbLabError
from .maps import Interval, MapSystem, make_map
from .measures import one_step_ulam, spread_measure, stationary_density, ulam_matrix
from .orbits import TailParams, TailProfile, fit_tail_decay, tail_profile
from .reporting import (emit_svg, read_csv, write_density_csv, write_entropy_csv,
                        write_sweep_csv, write_tail_csv, write_tower_csv)
from .rng import stream
from .towers import InducedMarkovMap, first_return_map, verify_axioms


def default_induction(m: MapSystem) -> Interval | None:
    """Family default for the induction interval (None for cylinder maps).

    Circle and tent families return to the left half of their domain; the
    quadratic family uses ``[0, sqrt(2))``, whose first-return branches
    keep their derivatives away from zero.
    """
    if m.dimension != 1:
        return None
    if m.family == "quadratic":
        return Interval(0.0, math.sqrt(2.0))
    return Interval(0.0, 0.5)


def build_system(config: ExperimentConfig) -> MapSystem:
    """Instantiate the configured map family."""
    return make_map(config.family, **config.map_params)


def build_tower(m: MapSystem, config: ExperimentConfig) -> InducedMarkovMap | None:
    """First-return tower per the config (None for cylinder maps)."""
    if m.dimension != 1:
        return None
    if config.induce_lo is not None:
        delta = Interval(config.induce_lo, config.induce_hi)
    else:
        delta = default_induction(m)
    return first_return_map(m, delta, config.tau_max, config.induce_tol)


def _row_seed(seed: int, index: int) -> int:
    """Stable per-row seed, independent of worker scheduling."""
    return int(np.random.SeedSequence(entropy=int(seed),
                                      spawn_key=(19, int(index))).generate_state(1)[0])


def run_entropy(config: ExperimentConfig) -> EntropyReport:
    """Build the system and tower, run all entropy routes, emit entropy.csv."""
    config.validate()
    m = build_system(config)
    F = build_tower(m, config)
    rep = entropy_report(
        m, F, bins=config.bins, n_orbits=config.sample_size,
        n_iters=config.n_iters, smb_depth=config.smb_depth, seed=config.seed,
        retry_budget=config.retry_budget, ulam_mode=config.ulam_mode,
        ulam_tol=config.ulam_tol, ulam_max_iters=config.ulam_max_iters)
    os.makedirs(config.out_dir, exist_ok=True)
    write_entropy_csv(os.path.join(config.out_dir, "entropy.csv"), rep)
    return rep


def run_induce(config: ExperimentConfig):
    """Build and verify the tower, emit tower.csv; returns (tower, report)."""
    config.validate()
    m = build_system(config)
    F = build_tower(m, config)
    if F is None:
        raise ConfigError(f"family {config.family} has no interval tower")
    report = verify_axioms(F)
    os.makedirs(config.out_dir, exist_ok=True)
    write_tower_csv(os.path.join(config.out_dir, "tower.csv"), F)
    return F, report


def run_density(config: ExperimentConfig, target: str = "map"):
    """Compute a stationary (or spread) density and emit density.csv.

    ``target`` selects the operator: ``map`` (one-step Ulam), ``tower``
    (induced-map Ulam) or ``spread`` (tower density transported over the
    ambient space, unnormalised).
    """
    config.validate()
    if target not in ("map", "tower", "spread"):
        raise ConfigError(f"unknown density target {target!r}")
    m = build_system(config)
    if target == "map":
        op = one_step_ulam(m, config.bins)
        density = stationary_density(op, mode=config.ulam_mode, tol=config.ulam_tol,
                                     max_iters=config.ulam_max_iters)
    else:
        F = build_tower(m, config)
        if F is None:
            raise ConfigError(f"family {config.family} has no interval tower")
        mu_F = stationary_density(ulam_matrix(F, config.bins), mode=config.ulam_mode,
                                  tol=config.ulam_tol, max_iters=config.ulam_max_iters)
        density = mu_F if target == "tower" else spread_measure(m, F, mu_F, config.bins)
    os.makedirs(config.out_dir, exist_ok=True)
    write_density_csv(os.path.join(config.out_dir, "density.csv"), density)
    return density


# ---------------------------------------------------------------------------
# tails


@dataclass
class TailRun:
    """Outcome of a tail experiment: the profile, both decay fits and the
    model preferred by residual."""

    profile: TailProfile
    fits: dict
    preferred: str | None
    csv_path: str
    svg_path: str


def load_tail_csv(path: str) -> TailProfile:
    """Reconstruct a tail profile from an emitted tail.csv."""
    comments, header, rows = read_csv(path)
    meta = {}
    for c in comments:
        if "=" in c and not c.startswith("fit."):
            k, v = (s.strip() for s in c.split("=", 1))
            meta[k] = v
    params = TailParams(
        lam=float(meta["lam"]), eps=float(meta["eps"]), delta=float(meta["delta"]),
        n_max=int(meta["n_max"]), sample_size=int(meta["sample_size"]))
    cols = {name: i for i, name in enumerate(header)}
    data = np.array([[float(r[cols[c]]) for c in
                      ("n", "frac_expansion", "frac_recurrence", "frac_union",
                       "censored_count")] for r in rows])
    return TailProfile(
        n=data[:, 0].astype(int), frac_expansion=data[:, 1],
        frac_recurrence=data[:, 2], frac_union=data[:, 3],
        sample_size=params.sample_size,
        censored_count=int(data[0, 4]) if len(rows) else 0,
        params=params, seed=int(meta.get("seed", 0)))


def run_tail(config: ExperimentConfig) -> TailRun:
    """Profile the slow-orbit fractions and fit both decay models.

    With ``tail.inject`` set, the profile is loaded from an existing CSV
    instead of being sampled — handy for fitting planted decays.
    """
    config.validate()
    if config.tail_inject:
        profile = load_tail_csv(config.tail_inject)
    else:
        if config.tail_lam is None:
            raise ConfigError("tail.lam is required (no injected profile)")
        eps = config.tail_eps if config.tail_eps is not None else 0.25 * config.tail_lam
        params = TailParams(lam=config.tail_lam, eps=eps, delta=config.tail_delta,
                            n_max=config.tail_n_max, sample_size=config.tail_sample_size)
        m = build_system(config)
        profile = tail_profile(m, params, seed=config.seed)
    fits = {}
    for model in ("polynomial", "stretched_exp"):
        try:
            fits[model] = fit_tail_decay(profile, model=model)
        except SrbLabError as exc:
            fits[model] = str(exc)
    real = {k: v for k, v in fits.items() if not isinstance(v, str)}
    preferred = min(real, key=lambda k: real[k].residual) if real else None
    os.makedirs(config.out_dir, exist_ok=True)
    csv_path = os.path.join(config.out_dir, "tail.csv")
    svg_path = os.path.join(config.out_dir, "tail.svg")
    write_tail_csv(csv_path, profile, fits)
    emit_svg(svg_path, profile.n,
             {"union": profile.frac_union, "expansion": profile.frac_expansion,
              "recurrence": profile.frac_recurrence},
             xlabel="n", ylabel="slow-orbit fraction", title="tail profile")
    return TailRun(profile, fits, preferred, csv_path, svg_path)


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepTable:
    """One row per swept parameter value, plus emission paths."""

    family: str
    parameter: str
    seed: int
    values: list
    rows: list
    csv_path: str = ""
    svg_path: str = ""


_ROW_FIELDS = ("h_lyapunov", "lyapunov_se", "h_pesin", "h_induced", "h_abramov",
               "kac_mass", "kappa", "distortion")


def _sweep_row(payload: tuple[str, int, float]) -> dict:
    """Compute one sweep row (pure function of config text, index, value)."""
    text, index, value = payload
    cfg = parse(text)
    row = {"index": index, "parameter": value, "error": None}
    try:
        params = dict(cfg.map_params)
        params[cfg.sweep_parameter] = value
        m = make_map(cfg.family, **params)
        F = build_tower(m, cfg)
        if F is not None:
            ver = verify_axioms(F)
            row["kappa"] = ver.kappa
            row["distortion"] = ver.distortion
            row["cells"] = [(c.lo, c.hi, c.tau) for c in F.cells]
            row["delta"] = (F.delta.lo, F.delta.hi)
            row["tau_cap"] = F.tau_max
        rep = entropy_report(
            m, F, bins=cfg.bins, n_orbits=cfg.sample_size, n_iters=cfg.n_iters,
            smb_depth=cfg.smb_depth, seed=_row_seed(cfg.seed, index),
            retry_budget=cfg.retry_budget, ulam_mode=cfg.ulam_mode,
            ulam_tol=cfg.ulam_tol, ulam_max_iters=cfg.ulam_max_iters)
        row["h_lyapunov"] = rep.h_lyapunov
        row["lyapunov_se"] = rep.lyapunov_se
        row["h_pesin"] = rep.h_pesin
        row["h_induced"] = rep.h_induced
        row["h_abramov"] = rep.h_abramov
        row["kac_mass"] = rep.kac
        if m.dimension == 1:
            op = one_step_ulam(m, cfg.bins)
            mu = stationary_density(op, mode=cfg.ulam_mode, tol=cfg.ulam_tol,
                                    max_iters=cfg.ulam_max_iters)
            row["density"] = mu.values.tolist()
            row["grid"] = (m.domain.lo, m.domain.hi)
    except SrbLabError as exc:
        row = {"index": index, "parameter": value, "error": str(exc)}
    return row


def _tau_l1(cells_a, cells_b, delta, censor) -> float:
    """L1 distance of two censored return-time step functions."""
    points = {delta[0], delta[1]}
    for cells in (cells_a, cells_b):
        for lo, hi, _ in cells:
            points.add(lo)
            points.add(hi)
    pts = sorted(points)
    los_a = [c[0] for c in cells_a]
    los_b = [c[0] for c in cells_b]

    def tau_at(cells, los, x):
        i = bisect_right(los, x) - 1
        if 0 <= i < len(cells) and cells[i][0] <= x < cells[i][1]:
            return cells[i][2]
        return censor

    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        mid = 0.5 * (a + b)
        total += abs(tau_at(cells_a, los_a, mid) - tau_at(cells_b, los_b, mid)) * (b - a)
    return total


def run_sweep(config: ExperimentConfig, workers: int = 1) -> SweepTable:
    """Sweep a map parameter and report every entropy route per value.

    Rows run in a process pool when ``workers > 1``; results are
    assembled by row index and the successive-row L1 diagnostics
    (stationary density and return-time distances) are added afterwards,
    so the emitted ``sweep.csv`` is byte-identical for any worker count.
    Row-level failures become an ``error`` tag in that row; the sweep
    continues.
    """
    config.validate()
    if config.sweep_parameter is None:
        raise ConfigError("sweep.parameter is required for sweeps")
    if workers < 1:
        raise ConfigError("workers must be at least 1")
    values = np.linspace(config.sweep_from, config.sweep_to, config.sweep_steps)
    text = serialize(config)
    payloads = [(text, i, float(v)) for i, v in enumerate(values)]
    if workers == 1:
        results = [_sweep_row(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_row, payloads))
    results.sort(key=lambda r: r["index"])

    prev = None
    for row in results:
        row["density_l1_prev"] = None
        row["tau_l1_prev"] = None
        if row["error"] is None:
            if prev is None:
                row["density_l1_prev"] = 0.0
                row["tau_l1_prev"] = 0.0
            else:
                if "density" in row and "density" in prev and row.get("grid") == prev.get("grid"):
                    a = np.asarray(row["density"])
                    b = np.asarray(prev["density"])
                    if a.size == b.size:
                        width = (row["grid"][1] - row["grid"][0]) / a.size
                        row["density_l1_prev"] = float(np.abs(a - b).sum() * width)
                if "cells" in row and "cells" in prev and row.get("delta") == prev.get("delta"):
                    censor = max(row["tau_cap"], prev["tau_cap"]) + 1
                    row["tau_l1_prev"] = _tau_l1(prev["cells"], row["cells"],
                                                 row["delta"], censor)
            prev = row

    table = SweepTable(config.family, config.sweep_parameter, config.seed,
                       [float(v) for v in values], results)
    os.makedirs(config.out_dir, exist_ok=True)
    table.csv_path = os.path.join(config.out_dir, "sweep.csv")
    table.svg_path = os.path.join(config.out_dir, "sweep.svg")
    write_sweep_csv(table.csv_path, table)
    series = {}
    for key in ("h_pesin", "h_abramov", "h_lyapunov"):
        ys = [r.get(key) if r.get(key) is not None else math.nan for r in results]
        arr = np.array(ys, dtype=float)
        if np.isfinite(arr).any():
            series[key] = arr
    if series:
        emit_svg(table.svg_path, values, series, xlabel=config.sweep_parameter,
                 ylabel="entropy estimate",
                 title=f"{config.family}: entropy vs {config.sweep_parameter}")
    return table
