"""Entropy estimators and consistency checks.

Four independent routes to the metric entropy of an expanding map:

* ``entropy_lyapunov`` — sum of positive Lyapunov exponents averaged over
  random orbits (with Monte Carlo standard error);
* ``entropy_pesin`` — quadrature of ``log |det Df|`` against a stationary
  density of the map itself;
* ``entropy_induced`` / ``entropy_abramov`` — quadrature of ``log |DF|``
  against a tower-stationary density, rescaled by the mean return time;
* ``entropy_smb`` — cylinder-counting along a single tower orbit.

``entropy_report`` runs all of them on one system and records their
pairwise discrepancies; the three ``*_check`` functions probe the
identities that make the routes agree (orbit-exponent quotient, Jacobian
transfer under spreading, and the linear-in-return-time Jacobian bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ArgumentError, CensoredOrbitError, ConstructionError,
                     NearCriticalError, SrbLabError, UnverifiedTowerError)
from .maps import NEAR_CRITICAL_FLOOR, MapSystem
from .measures import (Grid1D, Grid2D, GridDensity, interval_measure,
                       one_step_ulam, spread_measure, stationary_density,
                       ulam_matrix)
from .rng import dither, stream
from .towers import InducedMarkovMap, kac_mass, verify_axioms

_STRATA = 16
_STRATA_OFFSETS = (np.arange(_STRATA) + 0.5) / _STRATA


def _require_verified(F: InducedMarkovMap) -> None:
    if F.verification is None:
        raise UnverifiedTowerError(
            "tower has not been verified; run verify_axioms first")
    if not F.verification.all_ok:
        raise UnverifiedTowerError(
            "tower failed axiom verification; refusing to integrate against it")


def _require_unit_mass(mu: GridDensity, what: str) -> None:
    if abs(mu.mass - 1.0) > 1e-8:
        raise ArgumentError(f"{what} must have unit mass, got {mu.mass!r}")


# ---------------------------------------------------------------------------
# tower-side estimators


def entropy_induced(F: InducedMarkovMap, mu_F: GridDensity) -> float:
    """Integral of ``log |DF|`` against a stationary tower density.

    Affine branches contribute ``mu_F(cell) * log |slope|`` exactly; other
    branches are integrated with 16 stratified quadrature points per
    cell/bin sliver.  Deficit mass is excluded (use
    :func:`entropy_truncation_bound` for the matching error bound).

    Raises
    ------
    UnverifiedTowerError
        If the tower was never verified or failed verification.
    """
    _require_verified(F)
    _require_unit_mass(mu_F, "tower density")
    grid = mu_F.grid
    if not isinstance(grid, Grid1D) or abs(grid.lo - F.delta.lo) > 1e-9 \
            or abs(grid.hi - F.delta.hi) > 1e-9:
        raise ArgumentError("tower density grid does not match the base interval")
    total = 0.0
    edges = grid.edges
    for cell in F.cells:
        if cell.slope is not None:
            total += interval_measure(mu_F, cell.lo, cell.hi) * math.log(abs(cell.slope))
            continue
        i0 = max(int(np.searchsorted(edges, cell.lo, side="right")) - 1, 0)
        i1 = min(int(np.searchsorted(edges, cell.hi, side="left")), grid.n)
        for i in range(i0, i1):
            a, b = max(cell.lo, edges[i]), min(cell.hi, edges[i + 1])
            if b - a <= 1e-15:
                continue
            pts = a + (b - a) * _STRATA_OFFSETS
            logj = F.branch_log_jacobian_batch(cell, pts)
            total += mu_F.values[i] * (b - a) * float(logj.mean())
    return total


def entropy_truncation_bound(F: InducedMarkovMap, mu_F: GridDensity,
                             C: float | None = None) -> float:
    """Scale of the entropy mass hidden in the tower deficit.

    Uses the linear majorant ``log |DF| <= C tau`` with the censoring time
    ``tau_max + 1`` standing in for the unknown return times, i.e.
    ``mu_F(deficit) * (tau_max + 1) * C``.
    """
    if C is None:
        C = majorant_check(F).C
    covered = sum(interval_measure(mu_F, c.lo, c.hi) for c in F.cells)
    return max(1.0 - covered, 0.0) * (F.tau_max + 1) * abs(C)


def entropy_abramov(F: InducedMarkovMap, mu_F: GridDensity, mass: float) -> float:
    """Tower entropy rescaled by the mean return time.

    ``mass`` is the normalisation of the spread of ``mu_F`` over the
    ambient space — either ``spread.mass`` or :func:`~srblab.towers.kac_mass`,
    which agree.

    Raises
    ------
    ArgumentError
        If ``mass`` is not positive.
    """
    if not mass > 0:
        raise ArgumentError("spread mass must be positive")
    return entropy_induced(F, mu_F) / mass


def entropy_smb(F: InducedMarkovMap, x: float, n: int) -> float:
    """Cylinder estimator ``-(1/n) log m(P_n(x))`` along a tower orbit.

    ``P_n(x)`` is the set of points sharing the first ``n`` cell labels
    with ``x``; ``m`` is Lebesgue measure normalised to a probability on
    the base interval, and the cylinder mass is computed by pulling the
    base interval back through the visited branches.  Affine towers stay
    in log space
    throughout, so depth is limited only by orbit length; non-affine
    branches switch from interval endpoints to a derivative update once
    the cylinder is narrower than 1e-6 times the base interval.  The
    switch must happen well above the 1e-14 inversion tolerance: one more
    pullback can shrink the interval by the full branch slope, and
    colliding endpoints would zero out the tracked width.

    The orbit is iterated with a low-order bit refresh keyed on the bit
    pattern of ``x`` (see :func:`srblab.rng.dither`), so the itinerary is
    that of a generic real refinement of ``x`` rather than of the dyadic
    rational the float happens to be.  The result is still a pure
    function of ``(F, x, n)``.

    Raises
    ------
    CensoredOrbitError
        If the orbit falls into the tower deficit before step ``n``
        (carries the step index).
    """
    if n < 1:
        raise ArgumentError("cylinder depth n must be at least 1")
    drng = stream(int(np.float64(x).view(np.uint64)), 29)
    itinerary = []
    y = x
    for k in range(n):
        i = F.cell_index(y)
        if i is None:
            raise CensoredOrbitError(k)
        itinerary.append(F.cells[i])
        y, _ = F.apply(y)
        y = dither(y, drng, F.delta.lo, F.delta.hi)
    if all(c.slope is not None for c in itinerary):
        log_mass = -sum(math.log(abs(c.slope)) for c in itinerary)
        return -log_mass / n
    lo, hi = F.delta.lo, F.delta.hi
    width = hi - lo
    switch = 1e-6 * width
    log_extra = 0.0  # log of the width shrinkage past the switch point
    anchored = False
    anchor = 0.5 * (lo + hi)
    for c in reversed(itinerary):
        if not anchored:
            lo2 = F.branch_invert(c, lo if c.orientation > 0 else hi)
            hi2 = F.branch_invert(c, hi if c.orientation > 0 else lo)
            lo, hi = min(lo2, hi2), max(lo2, hi2)
            width = hi - lo
            if width < switch:
                anchored = True
                anchor = 0.5 * (lo + hi)
        else:
            anchor = F.branch_invert(c, anchor)
            log_extra -= float(F.branch_log_jacobian_batch(c, np.array([anchor]))[0])
    if not width > 0.0:
        raise ConstructionError("tracked cylinder collapsed below float resolution")
    log_mass = math.log(width) + log_extra - math.log(F.delta.width)
    return -log_mass / n


# ---------------------------------------------------------------------------
# ambient-side estimators


def _log_det_batch(m: MapSystem, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Clipped ``log |det Df|`` at many points; returns (values, clipped mask)."""
    if m.dimension == 1:
        det = np.abs(m.df_batch(pts))
    else:
        det = np.abs(m.det_batch(pts))
    clipped = det < NEAR_CRITICAL_FLOOR
    return np.log(np.maximum(det, NEAR_CRITICAL_FLOOR)), clipped


def entropy_pesin(m: MapSystem, mu_f: GridDensity,
                  return_clip: bool = False) -> float | tuple[float, float]:
    """Quadrature of ``log |det Df|`` against a unit-mass ambient density.

    Each bin contributes through 16 stratified points (a 4 x 4 grid on
    cylinder bins).  Near the critical set the integrand is clipped at
    the floor ``log(1e-15)``; pass ``return_clip=True`` to also get the
    total density mass whose integrand was clipped.
    """
    _require_unit_mass(mu_f, "ambient density")
    grid = mu_f.grid
    if isinstance(grid, Grid1D):
        pts = (grid.edges[:-1, None] + grid.widths[:, None] * _STRATA_OFFSETS[None, :]).ravel()
        logs, clipped = _log_det_batch(m, pts)
        logs = logs.reshape(grid.n, _STRATA).mean(axis=1)
        clip_frac = clipped.reshape(grid.n, _STRATA).mean(axis=1)
    else:
        side = 4
        off = (np.arange(side) + 0.5) / side
        te, xe = grid.theta_edges, grid.x_edges
        tw = te[1] - te[0]
        xw = xe[1] - xe[0]
        ot, ox = np.meshgrid(off, off, indexing="ij")
        ot, ox = ot.ravel(), ox.ravel()
        logs = np.empty(grid.n)
        clip_frac = np.empty(grid.n)
        flat = 0
        for it in range(grid.n_theta):
            pts = np.empty((grid.n_x * ot.size, 2))
            for ix in range(grid.n_x):
                s = ix * ot.size
                pts[s:s + ot.size, 0] = te[it] + ot * tw
                pts[s:s + ot.size, 1] = xe[ix] + ox * xw
            lg, cl = _log_det_batch(m, pts)
            logs[flat:flat + grid.n_x] = lg.reshape(grid.n_x, -1).mean(axis=1)
            clip_frac[flat:flat + grid.n_x] = cl.reshape(grid.n_x, -1).mean(axis=1)
            flat += grid.n_x
    weights = mu_f.bin_measures
    value = float((weights * logs).sum())
    clip_mass = float((weights * clip_frac).sum())
    return (value, clip_mass) if return_clip else value


def entropy_lyapunov(m: MapSystem, sample_size: int, n: int, seed: int = 0,
                     retry_budget: int = 8) -> tuple[float, float]:
    """Sum of positive Lyapunov exponents averaged over random orbits.

    Orbits start at Lebesgue-random points drawn from per-slot RNG
    streams (slot ``i`` uses ``stream(seed, 11, i)``), so the result does
    not depend on how slots are scheduled.  Orbits that come within the
    near-critical floor of the critical set are restarted from a fresh
    draw of their own stream, up to ``retry_budget`` times.

    Returns
    -------
    (mean, standard_error)

    Raises
    ------
    NearCriticalError
        If some slot exhausts its retry budget.
    """
    if sample_size < 1 or n < 1:
        raise ArgumentError("sample_size and n must be at least 1")
    values = np.empty(sample_size)
    for i in range(sample_size):
        rng = stream(seed, 11, i)
        for attempt in range(retry_budget + 1):
            x = m.sample_uniform(rng, 1)[0]
            try:
                values[i] = _orbit_positive_exponents(m, x, n)
                break
            except NearCriticalError:
                if attempt == retry_budget:
                    raise
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(sample_size)) if sample_size > 1 else 0.0
    return mean, se


def _orbit_positive_exponents(m: MapSystem, x, n: int) -> float:
    """Sum of positive finite-time exponents along one orbit (scalar start)."""
    if m.dimension == 1:
        total = 0.0
        y = float(x)
        for _ in range(n):
            d = abs(m.df_scalar(y))
            if d < NEAR_CRITICAL_FLOOR:
                raise NearCriticalError(d)
            total += math.log(d)
            y = m.f_scalar(y)
        lam = total / n
        return lam if lam > 0 else 0.0
    # skew product: the fibre line is invariant under the triangular
    # cocycle, so the exponents are the averaged logs of the diagonal
    theta, xi = float(x[0]), float(x[1])
    total_fibre = 0.0
    for _ in range(n):
        d = abs(2.0 * xi)
        if d < NEAR_CRITICAL_FLOOR:
            raise NearCriticalError(d)
        total_fibre += math.log(d)
        theta, xi = m.f_scalar((theta, xi))
    lam_fibre = total_fibre / n
    lam_base = math.log(m.d)
    return max(lam_base, 0.0) + max(lam_fibre, 0.0)


def _orbit_positive_exponents_batch(m: MapSystem, xs: np.ndarray, n: int,
                                    rngs, retry_budget: int) -> np.ndarray:
    """Vectorised orbit driver with per-slot restarts on near-critical hits.

    Restarted slots lag behind the rest, so finished slots stop
    accumulating while the stragglers catch up.
    """
    sums = np.zeros(xs.shape[0])
    steps = np.zeros(xs.shape[0], dtype=int)
    retries = np.zeros(xs.shape[0], dtype=int)
    pts = xs.copy()
    while True:
        active = steps < n
        if not active.any():
            break
        if m.dimension == 1:
            d = np.abs(m.df_batch(pts))
        else:
            d = np.abs(2.0 * pts[:, 1])
        bad = (d < NEAR_CRITICAL_FLOOR) & active
        if bad.any():
            for i in np.flatnonzero(bad):
                retries[i] += 1
                if retries[i] > retry_budget:
                    raise NearCriticalError(float(d[i]))
                pts[i] = m.sample_uniform(rngs[i], 1)[0]
                sums[i] = 0.0
                steps[i] = 0
            continue
        sums[active] += np.log(d[active])
        steps[active] += 1
        pts = m.f_batch(pts)
    lam = sums / n
    if m.dimension == 1:
        return np.maximum(lam, 0.0)
    return np.maximum(lam, 0.0) + max(math.log(m.d), 0.0)


def entropy_lyapunov_fast(m: MapSystem, sample_size: int, n: int, seed: int = 0,
                          retry_budget: int = 8) -> tuple[float, float]:
    """Vectorised variant of :func:`entropy_lyapunov` (same streams, same
    result, orbits advanced in lockstep)."""
    if sample_size < 1 or n < 1:
        raise ArgumentError("sample_size and n must be at least 1")
    rngs = [stream(seed, 11, i) for i in range(sample_size)]
    if m.dimension == 1:
        xs = np.array([m.sample_uniform(r, 1)[0] for r in rngs])
    else:
        xs = np.vstack([m.sample_uniform(r, 1) for r in rngs])
    values = _orbit_positive_exponents_batch(m, xs, n, rngs, retry_budget)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(sample_size)) if sample_size > 1 else 0.0
    return mean, se


# ---------------------------------------------------------------------------
# identity checks


@dataclass(frozen=True)
class QuotientCheck:
    """Orbit-exponent quotient: under the tower, the log-derivative grows
    ``mean-return-time`` times faster than under the base map."""

    lambda_F: float
    mean_return: float
    quotient: float
    lambda_f: float

    @property
    def gap(self) -> float:
        return abs(self.quotient - self.lambda_f)


def lyapunov_quotient_check(m: MapSystem, F: InducedMarkovMap, mu_F: GridDensity,
                            sample: int = 32, n: int = 20_000,
                            seed: int = 0) -> QuotientCheck:
    """Compare the tower exponent over the mean return time with the base
    exponent.

    ``lambda_F`` is the Birkhoff average of ``log |DF|`` over ``sample``
    tower orbits of ``n`` steps (slot ``i`` draws from
    ``stream(seed, 13, i)``; deficit landings are replaced by a fresh
    uniform draw from the same stream).  The mean return time comes from
    the censored Kac integral of ``mu_F``, and ``lambda_f`` is measured
    independently along base-map orbits of matching length.

    Raises
    ------
    UnverifiedTowerError
        If the tower was never verified or failed verification.
    """
    _require_verified(F)
    if sample < 1 or n < 1:
        raise ArgumentError("sample and n must be at least 1")
    rngs = [stream(seed, 13, i) for i in range(sample)]
    drng = stream(seed, 13, sample)
    lo, hi = F.delta.lo, F.delta.hi
    pts = np.array([r.uniform(lo, hi) for r in rngs])
    total_logj = 0.0
    base_steps = 0
    for _ in range(n):
        logj, valid = F.log_jacobian_batch(pts)
        while not valid.all():
            for i in np.flatnonzero(~valid):
                pts[i] = rngs[i].uniform(lo, hi)
            logj, valid = F.log_jacobian_batch(pts)
        total_logj += float(logj.sum())
        ys, taus, _ = F.apply_batch(pts)
        base_steps += int(taus.sum())
        pts = dither(ys, drng, lo, hi)
    lambda_F = total_logj / (sample * n)
    mean_return = kac_mass(F, mu_F)
    quotient = lambda_F / mean_return
    # independent base-map measurement of matching orbit length
    n_base = max(base_steps // sample, 1)
    base_pts = np.array([r.uniform(m.domain.lo, m.domain.hi) for r in rngs])
    base_sum = 0.0
    for _ in range(n_base):
        d = np.abs(m.df_batch(base_pts))
        base_sum += float(np.log(np.maximum(d, NEAR_CRITICAL_FLOOR)).sum())
        base_pts = dither(m.f_batch(base_pts), drng, m.domain.lo, m.domain.hi)
    lambda_f = base_sum / (sample * n_base)
    return QuotientCheck(lambda_F, mean_return, quotient, lambda_f)


@dataclass(frozen=True)
class TransferCheck:
    """Jacobian transfer between the tower and its spread over ambient space."""

    lhs: float
    rhs: float
    gap: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.gap <= self.bound


def jacobian_transfer_check(m: MapSystem, F: InducedMarkovMap, mu_F: GridDensity,
                            spread: GridDensity) -> TransferCheck:
    """Check that integrating ``log |DF|`` on the tower equals integrating
    ``log |det Df|`` against the (unnormalised) spread of the same density.

    The combined bound covers the censored deficit transport
    (``truncation_bound * (cap + 1) * sup |log det Df|``) plus an
    empirical quadrature slack: twice the change when the stratification
    is halved, with a 1e-9 floor.

    Raises
    ------
    ArgumentError
        If the spread was built with a cap below the tower's.
    """
    if spread.cap is None or spread.cap < F.tau_max:
        raise ArgumentError("spread cap does not match the tower cap")
    lhs = entropy_induced(F, mu_F)
    rhs16, sup_log = _integrate_log_det(m, spread, _STRATA)
    rhs8, _ = _integrate_log_det(m, spread, _STRATA // 2)
    deficit_term = spread.truncation_bound * (spread.cap + 1) * sup_log
    bound = deficit_term + 2.0 * abs(rhs16 - rhs8) + 1e-9
    gap = abs(lhs - rhs16)
    return TransferCheck(lhs, rhs16, gap, bound)


def _integrate_log_det(m: MapSystem, density: GridDensity, strata: int) -> tuple[float, float]:
    """Quadrature of clipped ``log |det Df|`` against a 1D density; also
    returns the largest sampled ``|log det|``."""
    grid = density.grid
    if not isinstance(grid, Grid1D):
        raise ArgumentError("transfer quadrature expects a 1D density")
    offs = (np.arange(strata) + 0.5) / strata
    pts = (grid.edges[:-1, None] + grid.widths[:, None] * offs[None, :]).ravel()
    logs, _ = _log_det_batch(m, pts)
    per_bin = logs.reshape(grid.n, strata).mean(axis=1)
    value = float((density.bin_measures * per_bin).sum())
    return value, float(np.abs(logs).max())


@dataclass(frozen=True)
class MajorantCheck:
    """Linear-in-return-time bound on branch Jacobians."""

    C: float
    worst_ratio: float
    worst_cell: int

    @property
    def passed(self) -> bool:
        return self.worst_ratio <= 1.0 + 1e-9


def majorant_check(F: InducedMarkovMap, samples_per_cell: int = 64,
                   grid_samples: int = 4096) -> MajorantCheck:
    """Check ``log |DF| <= C tau`` on cell samples, with
    ``C = log(sup |det Df|)`` over a domain grid and the cells' own chain
    factors.

    The supremum includes every derivative factor encountered along the
    sampled branch chains, so a genuine tower can only fail through a
    Jacobian inconsistency (the mutation this check is designed to catch).
    """
    m = F.base
    dense = np.linspace(m.domain.lo, m.domain.hi, grid_samples)
    sup_det = float(np.abs(m.df_batch(dense)).max())
    cell_samples = []
    for cell in F.cells:
        xs = np.linspace(cell.lo, cell.hi, samples_per_cell)
        ys = xs.copy()
        for _ in range(cell.tau):
            sup_det = max(sup_det, float(np.abs(m.df_batch(ys)).max()))
            ys = m.f_batch(ys)
        cell_samples.append(xs)
    C = math.log(sup_det)
    if C <= 0:
        raise ArgumentError("sampled derivative supremum is not expanding")
    worst, worst_cell = -math.inf, 0
    for ci, (cell, xs) in enumerate(zip(F.cells, cell_samples)):
        logj = F.branch_log_jacobian_batch(cell, xs)
        r = float((logj / (C * cell.tau)).max())
        if r > worst:
            worst, worst_cell = r, ci
    return MajorantCheck(C, worst, worst_cell)


# ---------------------------------------------------------------------------
# the full report


@dataclass
class EntropyReport:
    """All entropy routes for one system, with cross-route discrepancies.

    Estimator fields are NaN when a route is unavailable (no tower for
    cylinder maps, for instance); the reason is kept in ``errors``.
    """

    family: str
    params: dict
    h_lyapunov: float = math.nan
    lyapunov_se: float = math.nan
    h_pesin: float = math.nan
    pesin_clip_mass: float = math.nan
    h_induced: float = math.nan
    h_abramov: float = math.nan
    h_smb: float = math.nan
    kac: float = math.nan
    spread_mass: float = math.nan
    deficit: float = math.nan
    truncation_bound: float = math.nan
    bins: int = 0
    n_orbits: int = 0
    n_iters: int = 0
    tau_cap: int = 0
    discrepancies: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def recompute_discrepancies(self) -> dict:
        pairs = {
            "abramov_vs_pesin": (self.h_abramov, self.h_pesin),
            "abramov_vs_lyapunov": (self.h_abramov, self.h_lyapunov),
            "pesin_vs_lyapunov": (self.h_pesin, self.h_lyapunov),
            "smb_vs_induced": (self.h_smb, self.h_induced),
        }
        return {k: abs(a - b) for k, (a, b) in pairs.items()
                if not (math.isnan(a) or math.isnan(b))}


def entropy_report(m: MapSystem, F: InducedMarkovMap | None = None, *,
                   bins: int = 4096, n_orbits: int = 64, n_iters: int = 100_000,
                   smb_depth: int = 64, seed: int = 0, j_cap: int | None = None,
                   retry_budget: int = 8, ulam_mode: str = "power",
                   ulam_tol: float = 1e-10, ulam_max_iters: int = 100_000) -> EntropyReport:
    """Run every applicable entropy route and collect the results.

    Tower-based routes need a verified induced map ``F`` (towers that
    were not yet verified are verified here); ambient routes run for any
    map.  Per-route failures are recorded in ``report.errors`` instead of
    aborting the whole report.
    """
    rep = EntropyReport(m.family, dict(m.params), bins=bins, n_orbits=n_orbits,
                        n_iters=n_iters, tau_cap=F.tau_max if F is not None else 0)
    try:
        rep.h_lyapunov, rep.lyapunov_se = entropy_lyapunov_fast(
            m, n_orbits, n_iters, seed=seed, retry_budget=retry_budget)
    except SrbLabError as exc:
        rep.errors["h_lyapunov"] = str(exc)
    try:
        op = one_step_ulam(m, bins)
        mu_f = stationary_density(op, mode=ulam_mode, tol=ulam_tol,
                                  max_iters=ulam_max_iters)
        rep.h_pesin, rep.pesin_clip_mass = entropy_pesin(m, mu_f, return_clip=True)
    except SrbLabError as exc:
        rep.errors["h_pesin"] = str(exc)

    if F is not None:
        try:
            if F.verification is None:
                verify_axioms(F)
            mu_F = stationary_density(ulam_matrix(F, bins), mode=ulam_mode,
                                      tol=ulam_tol, max_iters=ulam_max_iters)
            rep.deficit = F.deficit
            rep.h_induced = entropy_induced(F, mu_F)
            rep.kac = kac_mass(F, mu_F)
            spread = spread_measure(m, F, mu_F, bins, j_cap)
            rep.spread_mass = spread.mass
            rep.h_abramov = entropy_abramov(F, mu_F, rep.kac)
            rep.truncation_bound = entropy_truncation_bound(F, mu_F)
        except SrbLabError as exc:
            rep.errors["h_induced"] = str(exc)
        smb_rng = stream(seed, 17)
        for _ in range(8):
            x0 = smb_rng.uniform(F.delta.lo, F.delta.hi)
            try:
                rep.h_smb = entropy_smb(F, x0, smb_depth)
                rep.errors.pop("h_smb", None)
                break
            except CensoredOrbitError as exc:
                rep.errors["h_smb"] = str(exc)  # fell into the deficit; redraw
            except SrbLabError as exc:
                rep.errors["h_smb"] = str(exc)
                break
    rep.discrepancies = rep.recompute_discrepancies()
    return rep
