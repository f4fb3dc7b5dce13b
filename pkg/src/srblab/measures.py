"""Grid densities, transfer-operator discretisation and measure transport.

Densities are piecewise constant on regular grids (1D intervals or the
2D cylinder) and always carry their reference-Lebesgue normalisation:
``mass = sum(value * cell_width)``.  The Ulam discretisation of a map or
induced map is a sparse row-stochastic matrix whose ``(i, j)`` entry is
the Lebesgue fraction of bin ``i`` sent into bin ``j``; rows under an
induced map sum to one minus the local mass deficit.  Stationary
densities are found by power or Cesaro iteration started from Lebesgue —
never by dense factorisation, so towers with thousands of bins stay
cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .errors import ArgumentError, ConvergenceError
from .maps import MapSystem

_STRATA = 16
_STRATA_OFFSETS = (np.arange(_STRATA) + 0.5) / _STRATA


@dataclass(frozen=True)
class Grid1D:
    """Regular grid of ``n`` bins over ``[lo, hi]``."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 1 or not self.hi > self.lo:
            raise ArgumentError("grid needs n >= 1 and hi > lo")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n + 1)

    @property
    def widths(self) -> np.ndarray:
        return np.full(self.n, (self.hi - self.lo) / self.n)

    @property
    def mids(self) -> np.ndarray:
        w = (self.hi - self.lo) / self.n
        return self.lo + w * (np.arange(self.n) + 0.5)

    @property
    def shape(self):
        return (self.n,)

    def locate(self, x: np.ndarray) -> np.ndarray:
        """Bin indices of points (clipped into range)."""
        w = (self.hi - self.lo) / self.n
        idx = np.floor((np.asarray(x) - self.lo) / w).astype(int)
        return np.clip(idx, 0, self.n - 1)


@dataclass(frozen=True)
class Grid2D:
    """Product grid on the cylinder: ``n_theta`` circle bins x ``n_x`` fibre bins."""

    x_lo: float
    x_hi: float
    n_theta: int
    n_x: int

    def __post_init__(self):
        if self.n_theta < 1 or self.n_x < 1 or not self.x_hi > self.x_lo:
            raise ArgumentError("cylinder grid needs positive bin counts and x_hi > x_lo")

    @property
    def shape(self):
        return (self.n_theta, self.n_x)

    @property
    def n(self) -> int:
        return self.n_theta * self.n_x

    @property
    def theta_edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_theta + 1)

    @property
    def x_edges(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.n_x + 1)

    @property
    def cell_area(self) -> float:
        return (1.0 / self.n_theta) * ((self.x_hi - self.x_lo) / self.n_x)

    def locate(self, pts: np.ndarray) -> np.ndarray:
        """Flat bin indices of cylinder points, shape (n,)."""
        pts = np.asarray(pts)
        it = np.clip((pts[:, 0] * self.n_theta).astype(int), 0, self.n_theta - 1)
        wx = (self.x_hi - self.x_lo) / self.n_x
        ix = np.clip(((pts[:, 1] - self.x_lo) / wx).astype(int), 0, self.n_x - 1)
        return it * self.n_x + ix


@dataclass(frozen=True)
class GridDensity:
    """Piecewise-constant density with respect to Lebesgue measure.

    Attributes
    ----------
    grid : Grid1D or Grid2D
    values : numpy.ndarray
        Nonnegative density values, one per bin (flat for 2D grids).
    provenance : str
        One of ``stationary``, ``spread``, ``normalized``, ``external``.
    truncation_bound : float
        Mass per omitted step for truncated transport sums (0 otherwise).
    renorm_total : float
        Cumulative renormalisation applied during a stationary solve.
    excluded : numpy.ndarray or None
        Boolean mask of bins excluded from a stationary solve.
    cap : int or None
        Return-time cap a spread density was built with.
    """

    grid: Grid1D | Grid2D
    values: np.ndarray
    provenance: str = "external"
    truncation_bound: float = 0.0
    renorm_total: float = 0.0
    excluded: np.ndarray | None = None
    cap: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", v)
        if v.size != int(np.prod(self.grid.shape)):
            raise ArgumentError("density values do not match the grid")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ArgumentError("density values must be finite and nonnegative")
        if self.provenance not in ("stationary", "spread", "normalized", "external"):
            raise ArgumentError(f"unknown provenance {self.provenance!r}")

    @property
    def bin_measures(self) -> np.ndarray:
        if isinstance(self.grid, Grid1D):
            return self.values * self.grid.widths
        return self.values * self.grid.cell_area

    @property
    def mass(self) -> float:
        return float(self.bin_measures.sum())


def lebesgue_density(grid: Grid1D | Grid2D) -> GridDensity:
    """Normalised Lebesgue measure on the grid (unit mass)."""
    n = int(np.prod(grid.shape))
    if isinstance(grid, Grid1D):
        v = np.full(n, 1.0 / (grid.hi - grid.lo))
    else:
        v = np.full(n, 1.0 / ((grid.x_hi - grid.x_lo) * 1.0))
    return GridDensity(grid, v, "external")


def normalize(density: GridDensity) -> tuple[GridDensity, float]:
    """Scale a density to unit mass; returns ``(unit_density, original_mass)``."""
    mass = density.mass
    if mass <= 0:
        raise ArgumentError("cannot normalise a density with nonpositive mass")
    unit = replace(density, values=density.values / mass, provenance="normalized")
    return unit, mass


def l1_distance(d1: GridDensity, d2: GridDensity) -> float:
    """L1 distance between two densities on the same grid."""
    if type(d1.grid) is not type(d2.grid) or d1.grid.shape != d2.grid.shape:
        raise ArgumentError("densities live on different grids")
    g1, g2 = d1.grid, d2.grid
    if isinstance(g1, Grid1D):
        if abs(g1.lo - g2.lo) > 1e-12 or abs(g1.hi - g2.hi) > 1e-12:
            raise ArgumentError("densities live on different grids")
        return float(np.abs(d1.values - d2.values).sum() * g1.widths[0])
    if abs(g1.x_lo - g2.x_lo) > 1e-12 or abs(g1.x_hi - g2.x_hi) > 1e-12:
        raise ArgumentError("densities live on different grids")
    return float(np.abs(d1.values - d2.values).sum() * g1.cell_area)


@dataclass(frozen=True)
class BoundsCheck:
    """Two-sided density bound check on the non-excluded bins."""

    minimum: float
    min_index: int
    maximum: float
    max_index: int
    ratio_cap: float
    passed: bool


def density_bounds_check(density: GridDensity, ratio_cap: float = 100.0) -> BoundsCheck:
    """Check that a stationary density is pinched between two positive bounds.

    Passes when the minimum over non-excluded bins is positive and the
    max/min ratio stays below ``ratio_cap`` (unbounded densities show up
    as a diverging ratio under bin refinement).
    """
    if density.provenance not in ("stationary", "normalized"):
        raise ArgumentError("bounds check expects a stationary (or normalised) density")
    mask = np.ones(density.values.size, dtype=bool)
    if density.excluded is not None:
        mask &= ~density.excluded
    vals = density.values
    if not mask.any():
        raise ArgumentError("no bins left after exclusions")
    sub = np.where(mask, vals, np.inf)
    imin = int(np.argmin(sub))
    sub = np.where(mask, vals, -np.inf)
    imax = int(np.argmax(sub))
    vmin, vmax = float(vals[imin]), float(vals[imax])
    ok = vmin > 0 and vmax / max(vmin, 1e-300) <= ratio_cap
    return BoundsCheck(vmin, imin, vmax, imax, ratio_cap, bool(ok))


def interval_measure(density: GridDensity, lo: float, hi: float) -> float:
    """Mass the density assigns to ``[lo, hi]`` (1D grids)."""
    grid = density.grid
    if not isinstance(grid, Grid1D):
        raise ArgumentError("interval_measure needs a 1D density")
    edges = grid.edges
    cum = np.concatenate([[0.0], np.cumsum(density.bin_measures)])

    def cdf(x):
        x = min(max(x, grid.lo), grid.hi)
        i = min(int(np.searchsorted(edges, x, side="right")) - 1, grid.n - 1)
        i = max(i, 0)
        return cum[i] + density.values[i] * (x - edges[i])

    return max(cdf(hi) - cdf(lo), 0.0)


# ---------------------------------------------------------------------------
# Ulam discretisation


@dataclass(frozen=True)
class UlamOperator:
    """Sparse row-(sub)stochastic transfer matrix on a grid.

    ``row_deficit[i]`` is the Lebesgue fraction of bin ``i`` not covered
    by any branch (induced maps only); ``flagged`` marks bins that lie
    entirely inside the deficit region and are excluded from stationary
    solves.
    """

    grid: Grid1D | Grid2D
    matrix: sp.csr_matrix
    row_deficit: np.ndarray
    flagged: np.ndarray
    description: str = ""


def _atoms_for_piece(edges: np.ndarray, xlo: float, xhi: float,
                     invert_edges, value_fn) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a monotone piece ``[xlo, xhi]`` into slivers that map into a
    single target bin and lie in a single source bin.

    ``invert_edges(targets)`` must return the piece preimages of target
    bin edges; ``value_fn(points)`` evaluates the piece map.  Returns
    (starts, ends, image midpoint values).
    """
    ia, ib = float(value_fn(np.array([xlo]))[0]), float(value_fn(np.array([xhi]))[0])
    ylo, yhi = (ia, ib) if ia <= ib else (ib, ia)
    inner_targets = edges[(edges > ylo + 1e-15) & (edges < yhi - 1e-15)]
    if inner_targets.size:
        pre = invert_edges(inner_targets)
    else:
        pre = np.empty(0)
    cutpoints = np.concatenate([[xlo, xhi], pre, edges[(edges > xlo + 1e-15) & (edges < xhi - 1e-15)]])
    cutpoints = np.unique(np.clip(cutpoints, xlo, xhi))
    starts, ends = cutpoints[:-1], cutpoints[1:]
    keep = ends - starts > 1e-15
    starts, ends = starts[keep], ends[keep]
    mids = 0.5 * (starts + ends)
    return starts, ends, value_fn(mids)


def _assemble_rows(grid: Grid1D, pieces, description: str) -> UlamOperator:
    """Build the transfer matrix from monotone pieces.

    ``pieces`` yields ``(xlo, xhi, value_fn, invert_edges)`` with
    ``value_fn`` vectorised and ``invert_edges`` mapping sorted target bin
    edges to their preimages inside the piece.
    """
    edges = grid.edges
    widths = grid.widths
    rows, cols, lens = [], [], []
    covered = np.zeros(grid.n)
    for xlo, xhi, value_fn, invert_edges in pieces:
        starts, ends, img_mids = _atoms_for_piece(edges, xlo, xhi, invert_edges, value_fn)
        if starts.size == 0:
            continue
        src = grid.locate(0.5 * (starts + ends))
        dst = grid.locate(img_mids)
        ln = ends - starts
        rows.append(src)
        cols.append(dst)
        lens.append(ln)
        np.add.at(covered, src, ln)
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        lens = np.concatenate(lens)
        mat = sp.coo_matrix((lens / widths[rows], (rows, cols)), shape=(grid.n, grid.n)).tocsr()
    else:
        mat = sp.csr_matrix((grid.n, grid.n))
    frac = covered / widths
    row_deficit = np.clip(1.0 - frac, 0.0, 1.0)
    flagged = frac < 1e-9
    return UlamOperator(grid, mat, row_deficit, flagged, description)


def _bisect_monotone(value_fn, lo: float, hi: float, targets: np.ndarray,
                     increasing: bool, xtol: float = 1e-14) -> np.ndarray:
    los = np.full(targets.shape, lo)
    his = np.full(targets.shape, hi)
    for _ in range(120):
        mid = 0.5 * (los + his)
        v = value_fn(mid)
        right = (v < targets) if increasing else (v > targets)
        los = np.where(right, mid, los)
        his = np.where(right, his, mid)
        if float((his - los).max()) < xtol:
            break
    return 0.5 * (los + his)


def ulam_matrix(F, bins: int) -> UlamOperator:
    """Ulam matrix of an induced map on a grid over its base interval.

    Entries come from exact branch inverses (closed form for affine
    branches, monotone bisection otherwise), so each row sums to one
    minus the local deficit fraction without sampling noise.
    """
    if bins < 1:
        raise ArgumentError("ulam_matrix needs at least one bin")
    grid = Grid1D(F.delta.lo, F.delta.hi, bins)

    def pieces():
        for cell in F.cells:
            def value_fn(xs, cell=cell):
                return F.branch_value_batch(cell, xs)

            def invert_edges(ts, cell=cell):
                return F.branch_invert_batch(cell, ts)

            yield cell.lo, cell.hi, value_fn, invert_edges

    return _assemble_rows(grid, pieces(), f"tower[{F.base.family}] {bins} bins")


def one_step_ulam(m: MapSystem, bins: int, samples_per_bin: int = 256) -> UlamOperator:
    """Ulam matrix of the raw map on its ambient domain.

    One-dimensional maps use exact branch inverses; the cylinder skew
    product falls back to stratified sampling (``samples_per_bin`` points
    per bin) since its bins are not intervals.
    """
    if bins < 1:
        raise ArgumentError("one_step_ulam needs at least one bin")
    if m.dimension == 1:
        grid = Grid1D(m.domain.lo, m.domain.hi, bins)

        def pieces():
            for i in range(m.n_branches):
                blo, bhi = m.branch_bounds(i)

                def value_fn(xs, i=i):
                    return np.asarray(m.branch_lift(i, xs), dtype=float)

                increasing = float(m.branch_lift(i, np.array([bhi]))[0]) >= float(
                    m.branch_lift(i, np.array([blo]))[0]
                )

                def invert_edges(ts, i=i, blo=blo, bhi=bhi, inc=increasing):
                    return _bisect_monotone(
                        lambda xs: np.asarray(m.branch_lift(i, xs), dtype=float),
                        blo, bhi, ts, inc,
                    )

                yield blo, bhi, value_fn, invert_edges

        return _assemble_rows(grid, pieces(), f"{m.family} one-step {bins} bins")

    # 2D: stratified per-bin sampling
    side = int(round(samples_per_bin ** 0.5))
    n_theta = int(round(bins ** 0.5))
    n_theta = max(n_theta, 1)
    n_x = max(bins // n_theta, 1)
    grid = Grid2D(m.domain.lo, m.domain.hi, n_theta, n_x)
    off = (np.arange(side) + 0.5) / side
    ot, ox = np.meshgrid(off, off, indexing="ij")
    ot, ox = ot.ravel(), ox.ravel()
    nper = ot.size
    rows, cols = [], []
    t_edges, x_edges = grid.theta_edges, grid.x_edges
    for it in range(grid.n_theta):
        for ix in range(grid.n_x):
            pts = np.empty((nper, 2))
            pts[:, 0] = t_edges[it] + ot * (t_edges[it + 1] - t_edges[it])
            pts[:, 1] = x_edges[ix] + ox * (x_edges[ix + 1] - x_edges[ix])
            img = m.f_batch(pts)
            dst = grid.locate(img)
            rows.append(np.full(nper, it * grid.n_x + ix))
            cols.append(dst)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.full(rows.size, 1.0 / nper)
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(grid.n, grid.n)).tocsr()
    return UlamOperator(grid, mat, np.zeros(grid.n), np.zeros(grid.n, dtype=bool),
                        f"{m.family} one-step {grid.n_theta}x{grid.n_x} bins")


def stationary_density(op: UlamOperator, mode: str = "power", tol: float = 1e-10,
                       max_iters: int = 100000) -> GridDensity:
    """Stationary density of an Ulam operator by (renormalised) iteration.

    Starts from Lebesgue and pushes forward; mass lost to the deficit is
    renormalised away each step and the cumulative renormalisation is
    reported on the result.  ``mode="cesaro"`` averages the iterates,
    which also handles operators with rotating parts.

    Raises
    ------
    ConvergenceError
        If the L1 difference between successive (averaged) densities does
        not reach ``tol`` within ``max_iters`` steps.
    """
    if mode not in ("power", "cesaro"):
        raise ArgumentError(f"unknown stationarity mode {mode!r}")
    grid = op.grid
    n = int(np.prod(grid.shape))
    if isinstance(grid, Grid1D):
        widths = grid.widths
    else:
        widths = np.full(n, grid.cell_area)
    p = widths / widths.sum()
    p[op.flagged] = 0.0
    s = p.sum()
    if s <= 0:
        raise ArgumentError("every bin is flagged as deficit; nothing to solve")
    p /= s
    pt = op.matrix.T.tocsr()
    renorm = 0.0
    avg = p.copy()
    diff = np.inf
    for it in range(1, max_iters + 1):
        q = pt @ p
        q[op.flagged] = 0.0
        s = q.sum()
        if s <= 0:
            raise ConvergenceError(1.0, "all mass fell into the deficit region")
        renorm += abs(1.0 - s)
        q /= s
        if mode == "power":
            diff = float(np.abs(q - p).sum())
            p = q
            if diff <= tol:
                break
        else:
            new_avg = (avg * it + q) / (it + 1)
            diff = float(np.abs(new_avg - avg).sum())
            p, avg = q, new_avg
            if diff <= tol:
                p = avg
                break
    else:
        raise ConvergenceError(diff)
    if mode == "cesaro":
        p = avg / avg.sum()
    return GridDensity(grid, p / widths, "stationary", renorm_total=renorm,
                       excluded=op.flagged.copy())


# ---------------------------------------------------------------------------
# spreading a tower measure over the ambient space


def spread_measure(m: MapSystem, F, mu_F: GridDensity, bins: int, j_cap: int | None = None) -> GridDensity:
    """Transport a tower-stationary measure over the ambient interval.

    Pushes ``mu_F`` restricted to ``{tau > j}`` forward by the base map
    ``j`` times and accumulates the results for ``j = 0 .. cap``, on a
    fresh grid of ``bins`` bins over the ambient domain.  Mass in the
    tower deficit region carries the censoring time ``tau_max + 1``.  The
    total mass equals the (censored) mean return time; the per-step mass
    still unaccounted for beyond the cap is attached as
    ``truncation_bound``.

    Each sliver of each bin is transported through 16 stratified sample
    points, deterministically, so results are reproducible bit for bit.
    """
    if j_cap is None:
        j_cap = F.tau_max
    if j_cap < F.tau_max:
        raise ArgumentError(f"spread cap {j_cap} below the tower cap {F.tau_max}")
    if abs(mu_F.mass - 1.0) > 1e-8:
        raise ArgumentError("spread_measure expects a unit-mass tower density")
    mgrid = mu_F.grid
    if not isinstance(mgrid, Grid1D) or abs(mgrid.lo - F.delta.lo) > 1e-9 \
            or abs(mgrid.hi - F.delta.hi) > 1e-9:
        raise ArgumentError("tower density grid does not match the induction interval")

    grid = Grid1D(m.domain.lo, m.domain.hi, bins)
    edges = mgrid.edges

    starts, lens, weights, taus = [], [], [], []

    def emit(lo, hi, tau):
        if hi - lo <= 1e-15:
            return
        i0 = int(np.searchsorted(edges, lo, side="right")) - 1
        i1 = int(np.searchsorted(edges, hi, side="left"))
        i0, i1 = max(i0, 0), min(i1, mgrid.n)
        for i in range(i0, i1):
            a = max(lo, edges[i])
            b = min(hi, edges[i + 1])
            if b - a <= 1e-15:
                continue
            starts.append(a)
            lens.append(b - a)
            weights.append(mu_F.values[i] * (b - a))
            taus.append(tau)

    censor = F.tau_max + 1
    cursor = F.delta.lo
    for cell in F.cells:
        if cell.lo - cursor > 1e-15:
            emit(cursor, cell.lo, censor)  # deficit gap
        emit(cell.lo, cell.hi, cell.tau)
        cursor = max(cursor, cell.hi)
    if F.delta.hi - cursor > 1e-15:
        emit(cursor, F.delta.hi, censor)

    starts = np.asarray(starts)
    lens = np.asarray(lens)
    weights = np.asarray(weights)
    taus = np.asarray(taus, dtype=int)

    pts = (starts[:, None] + lens[:, None] * _STRATA_OFFSETS[None, :]).ravel()
    w = np.repeat(weights / _STRATA, _STRATA)
    t = np.repeat(taus, _STRATA)

    acc = np.zeros(grid.n)
    censored_mass = float(weights[taus == censor].sum())
    max_steps = min(int(t.max()) if t.size else 0, j_cap + 1)
    for j in range(max_steps):
        active = t > j
        if not active.any():
            break
        pts, w, t = pts[active], w[active], t[active]
        np.add.at(acc, grid.locate(pts), w)
        pts = m.f_batch(pts)
    return GridDensity(grid, acc / grid.widths, "spread",
                       truncation_bound=censored_mass, cap=int(j_cap))
