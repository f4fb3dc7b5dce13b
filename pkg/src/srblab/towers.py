"""Induced Markov maps: first-return towers over an interval.

An induced map collects the monotone branches of first returns to a base
interval ``delta``: each cell ``[lo, hi)`` returns after ``tau`` steps and
is mapped by ``f^tau`` onto ``delta``.  Cells carry their accumulated
affine data when the base map is piecewise affine, so branch values,
derivatives and inverses are then exact; otherwise they fall back to
iterating the base map and monotone bisection.

The three axioms checked by :func:`verify_axioms` are: every branch is a
bijection onto the base interval (full Markov returns), the inverse
branch derivatives are uniformly contracting, and the log-Jacobian of
each branch is Lipschitz in the image distance (bounded distortion).
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from math import exp, log

import numpy as np

from .errors import (ArgumentError, ConstructionError, VerificationError)
from .maps import Interval, MapSystem
from .measures import GridDensity, Grid1D, interval_measure

_MAX_SEGMENTS = 200_000


@dataclass(frozen=True)
class Cell:
    """One monotone first-return branch.

    ``slope``/``intercept`` hold the exact affine data ``F(x) = slope*x +
    intercept`` when available (``slope`` is signed); both are ``None``
    for branches of non-affine base maps.
    """

    lo: float
    hi: float
    tau: int
    orientation: int
    slope: float | None = None
    intercept: float | None = None

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of the three induced-map axiom checks."""

    markov_defect: float
    defect_cell: int
    kappa: float
    kappa_cell: int
    distortion: float
    distortion_cell: int
    expansion_factor: float
    distortion_multiplier: float
    comparison_constant: float
    diameter: float
    samples_per_cell: int
    markov_ok: bool
    expansion_ok: bool
    distortion_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.markov_ok and self.expansion_ok and self.distortion_ok


class InducedMarkovMap:
    """First-return map of a base system to an interval.

    Attributes
    ----------
    base : MapSystem
        The underlying one-dimensional map.
    delta : Interval
        Base interval of the induction.
    cells : list of Cell
        Monotone return branches, sorted and pairwise disjoint.
    tau_max : int
        Cap on tracked return times; longer returns live in the deficit.
    deficit : float
        Lebesgue mass of ``delta`` not covered by any cell.
    partial_mass : float
        Portion of the deficit caused by orbits re-entering ``delta``
        without covering it (non-Markov partial returns).
    provenance : str
        ``"exact"``, ``"numeric"`` or ``"trivial"``.
    """

    def __init__(self, base: MapSystem, delta: Interval, cells: list[Cell],
                 tau_max: int, provenance: str, partial_mass: float = 0.0):
        if base.dimension != 1:
            raise ConstructionError("towers are built over one-dimensional maps")
        cells = sorted(cells, key=lambda c: c.lo)
        for a, b in zip(cells, cells[1:]):
            if b.lo < a.hi - 1e-12:
                raise ConstructionError(
                    f"overlapping cells [{a.lo}, {a.hi}) and [{b.lo}, {b.hi})")
        self.base = base
        self.delta = delta
        self.cells = cells
        self.tau_max = int(tau_max)
        self.provenance = provenance
        self.partial_mass = float(partial_mass)
        covered = sum(c.width for c in cells)
        self.deficit = max(delta.width - covered, 0.0)
        self._los = [c.lo for c in cells]
        self._los_arr = np.array(self._los)
        self._his_arr = np.array([c.hi for c in cells])
        self._tau_arr = np.array([c.tau for c in cells], dtype=int)
        if cells and all(c.slope is not None for c in cells):
            self._slope_arr = np.array([c.slope for c in cells])
            self._icpt_arr = np.array([c.intercept for c in cells])
        else:
            self._slope_arr = None
            self._icpt_arr = None
        self.verification: VerificationReport | None = None

    # -- lookup ------------------------------------------------------------

    def cell_index(self, x: float) -> int | None:
        """Index of the cell containing ``x``, or ``None`` (deficit)."""
        i = bisect_right(self._los, x) - 1
        if i < 0:
            return None
        c = self.cells[i]
        return i if c.lo <= x < c.hi else None

    def return_time(self, x: float) -> int:
        """Return time at ``x``; censored to ``tau_max + 1`` in the deficit."""
        i = self.cell_index(x)
        return self.cells[i].tau if i is not None else self.tau_max + 1

    def tau_values(self) -> np.ndarray:
        return np.array([c.tau for c in self.cells], dtype=int)

    def cell_widths(self) -> np.ndarray:
        return np.array([c.width for c in self.cells])

    # -- branch evaluation ---------------------------------------------------

    def branch_value_batch(self, cell: Cell, xs: np.ndarray) -> np.ndarray:
        """Images ``F(x)`` under the branch through ``cell``."""
        xs = np.asarray(xs, dtype=float)
        if cell.slope is not None:
            return cell.slope * xs + cell.intercept
        ys = xs.copy()
        for _ in range(cell.tau):
            ys = self.base.f_batch(ys)
        return ys

    def branch_value(self, cell: Cell, x: float) -> float:
        return float(self.branch_value_batch(cell, np.array([x]))[0])

    def branch_log_jacobian_batch(self, cell: Cell, xs: np.ndarray) -> np.ndarray:
        """``log |DF|`` along the branch (sum of per-step log derivatives)."""
        xs = np.asarray(xs, dtype=float)
        if cell.slope is not None:
            return np.full(xs.shape, log(abs(cell.slope)))
        out = np.zeros(xs.shape)
        ys = xs.copy()
        for _ in range(cell.tau):
            d = np.abs(self.base.df_batch(ys))
            out += np.log(np.maximum(d, 1e-300))
            ys = self.base.f_batch(ys)
        return out

    def branch_derivative_batch(self, cell: Cell, xs: np.ndarray) -> np.ndarray:
        """Signed derivative ``DF`` along the branch."""
        xs = np.asarray(xs, dtype=float)
        if cell.slope is not None:
            return np.full(xs.shape, cell.slope)
        out = np.ones(xs.shape)
        ys = xs.copy()
        for _ in range(cell.tau):
            out *= self.base.df_batch(ys)
            ys = self.base.f_batch(ys)
        return out

    def branch_invert_batch(self, cell: Cell, ys: np.ndarray) -> np.ndarray:
        """Preimages in ``cell`` of points of the base interval."""
        ys = np.asarray(ys, dtype=float)
        if cell.slope is not None:
            return (ys - cell.intercept) / cell.slope
        increasing = cell.orientation > 0
        los = np.full(ys.shape, cell.lo)
        his = np.full(ys.shape, cell.hi)
        for _ in range(120):
            mid = 0.5 * (los + his)
            v = self.branch_value_batch(cell, mid)
            right = (v < ys) if increasing else (v > ys)
            los = np.where(right, mid, los)
            his = np.where(right, his, mid)
            if float((his - los).max()) < 1e-14:
                break
        return 0.5 * (los + his)

    def branch_invert(self, cell: Cell, y: float) -> float:
        return float(self.branch_invert_batch(cell, np.array([y]))[0])

    def apply(self, x: float) -> tuple[float, int]:
        """One tower step: ``(F(x), tau(x))``.

        Raises
        ------
        ArgumentError
            If ``x`` falls into the deficit region.
        """
        i = self.cell_index(x)
        if i is None:
            raise ArgumentError(f"point {x} lies in the tower deficit region")
        c = self.cells[i]
        y = self.branch_value(c, x)
        lo, hi = self.delta.lo, self.delta.hi
        return min(max(y, lo), np.nextafter(hi, lo)), c.tau

    def cell_index_batch(self, xs: np.ndarray) -> np.ndarray:
        """Cell indices of many points; deficit points get -1."""
        xs = np.asarray(xs, dtype=float)
        if not self.cells:
            return np.full(xs.shape, -1, dtype=int)
        idx = np.searchsorted(self._los_arr, xs, side="right") - 1
        clipped = np.clip(idx, 0, len(self.cells) - 1)
        ok = (idx >= 0) & (xs >= self._los_arr[clipped]) & (xs < self._his_arr[clipped])
        return np.where(ok, clipped, -1)

    def apply_batch(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """One tower step for many points.

        Returns ``(images, taus, valid)``; entries with ``valid`` False fell
        into the deficit and carry unchanged coordinates with tau 0.
        """
        xs = np.asarray(xs, dtype=float)
        idx = self.cell_index_batch(xs)
        valid = idx >= 0
        ys = xs.copy()
        taus = np.zeros(xs.shape, dtype=int)
        if self._slope_arr is not None:
            iv = idx[valid]
            ys[valid] = self._slope_arr[iv] * xs[valid] + self._icpt_arr[iv]
            taus[valid] = self._tau_arr[iv]
        else:
            for ci in np.unique(idx[valid]):
                sel = idx == ci
                ys[sel] = self.branch_value_batch(self.cells[ci], xs[sel])
                taus[sel] = self.cells[ci].tau
        hi_in = np.nextafter(self.delta.hi, self.delta.lo)
        ys[valid] = np.clip(ys[valid], self.delta.lo, hi_in)
        return ys, taus, valid

    def log_jacobian_batch(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``log |DF|`` for many points; returns ``(values, valid)``."""
        xs = np.asarray(xs, dtype=float)
        idx = self.cell_index_batch(xs)
        valid = idx >= 0
        out = np.zeros(xs.shape)
        if self._slope_arr is not None:
            out[valid] = np.log(np.abs(self._slope_arr[idx[valid]]))
        else:
            for ci in np.unique(idx[valid]):
                sel = idx == ci
                out[sel] = self.branch_log_jacobian_batch(self.cells[ci], xs[sel])
        return out, valid

    def __repr__(self):
        return (f"InducedMarkovMap({self.base.family}, delta=[{self.delta.lo:g}, "
                f"{self.delta.hi:g}), {len(self.cells)} cells, tau_max={self.tau_max}, "
                f"deficit={self.deficit:.3g}, {self.provenance})")


# ---------------------------------------------------------------------------
# constructions


def doubling_first_return_exact(k_max: int) -> InducedMarkovMap:
    """Closed-form first-return tower of the doubling map to ``[0, 1/2)``.

    The return-time-``k`` cell is ``[1/2 - 2^{1-k}/2, 1/2 - 2^{-k}/2)`` =
    ``[1/2 - 2^{-k}, 1/2 - 2^{-k-1})`` with Lebesgue mass ``2^{-k-1}`` and
    branch ``x -> 2^k x - (2^{k-1} - 1)``, all exactly representable in
    binary floating point.
    """
    if k_max < 1:
        raise ArgumentError("k_max must be at least 1")
    cells = []
    for k in range(1, k_max + 1):
        lo = 0.5 - 2.0 ** (-k)
        hi = 0.5 - 2.0 ** (-k - 1)
        slope = 2.0 ** k
        intercept = 1.0 - 2.0 ** (k - 1) if k > 1 else 0.0
        cells.append(Cell(lo, hi, k, 1, slope, intercept))
    from .maps import DoublingMap

    return InducedMarkovMap(DoublingMap(), Interval(0.0, 0.5), cells, k_max, "exact")


def trivial_tower(m: MapSystem) -> InducedMarkovMap:
    """Tower with constant return time one: the branches of the map itself.

    Only meaningful when every branch is onto the full domain (checked up
    to ``1e-9``); use it to feed raw maps through tower-based routines.
    """
    if m.dimension != 1:
        raise ConstructionError("trivial towers need a one-dimensional map")
    lo, hi = m.domain.lo, m.domain.hi
    cells = []
    for i in range(m.n_branches):
        blo, bhi = m.branch_bounds(i)
        ia = float(m.branch_lift(i, np.array([blo]))[0])
        ib = float(m.branch_lift(i, np.array([bhi]))[0])
        ylo, yhi = (ia, ib) if ia <= ib else (ib, ia)
        if abs(ylo - lo) > 1e-9 or abs(yhi - hi) > 1e-9:
            raise ConstructionError(
                f"branch {i} maps onto [{ylo:g}, {yhi:g}], not the full domain")
        orientation = 1 if ib >= ia else -1
        if m.piecewise_affine:
            slope = (ib - ia) / (bhi - blo)
            cells.append(Cell(blo, bhi, 1, orientation, slope, ia - slope * blo))
        else:
            cells.append(Cell(blo, bhi, 1, orientation))
    return InducedMarkovMap(m, Interval(lo, hi), cells, 1, "trivial")


def _iterate(m: MapSystem, x: float, k: int) -> float:
    for _ in range(k):
        x = m.f_scalar(x)
    return x


def _pull_back(m: MapSystem, seg, k: int, target: float, xtol: float) -> float:
    """Preimage of ``target`` under ``f^k`` restricted to a monotone segment."""
    xl, xh, yl, yh, orient, slope = seg
    if slope is not None:
        # f^k on the segment is x -> slope*x + c with either endpoint pinning c
        c = (yl - slope * xl) if slope > 0 else (yh - slope * xl)
        return (target - c) / slope
    if target <= yl:
        return xl if orient > 0 else xh
    if target >= yh:
        return xh if orient > 0 else xl
    lo, hi = xl, xh
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        v = _iterate(m, mid, k)
        if (v < target) == (orient > 0):
            lo = mid
        else:
            hi = mid
        if hi - lo < xtol:
            break
    return 0.5 * (lo + hi)


def first_return_map(m: MapSystem, delta: Interval, tau_max: int,
                     tol: float = 1e-12) -> InducedMarkovMap:
    """Track monotone pieces of ``f^k`` to build the first-return map to ``delta``.

    Pieces of the base interval are iterated forward; a piece whose image
    covers ``delta`` yields a return cell, a piece whose image only
    partially overlaps ``delta`` contributes the overlapping part to the
    (partial-return) deficit, and the rest keeps iterating until
    ``tau_max``.  Cell endpoints are resolved to ``tol`` by monotone
    bisection (exactly, for piecewise-affine maps).

    Raises
    ------
    ConstructionError
        If the piece count explodes (wild combinatorics) or the base map
        is not one-dimensional.
    """
    if m.dimension != 1:
        raise ConstructionError("first_return_map needs a one-dimensional map")
    if tau_max < 1:
        raise ArgumentError("tau_max must be at least 1")
    dlo, dhi = delta.lo, delta.hi
    if not (m.domain.contains(dlo) and m.domain.contains(dhi)) or not dhi > dlo:
        raise ArgumentError("induction interval must sit inside the map domain")
    cuts = np.asarray(m.interior_cuts(), dtype=float)
    affine = m.piecewise_affine
    xtol = min(tol, 1e-12) * 1e-2

    cells: list[Cell] = []
    partial_mass = 0.0
    # segment = (xl, xh, yl, yh, orient, slope); f^k maps [xl,xh] onto [yl,yh]
    segments = [(dlo, dhi, dlo, dhi, 1, 1.0 if affine else None)]
    for k in range(1, tau_max + 1):
        new_segments = []
        for seg in segments:
            xl, xh, yl, yh, orient, slope = seg
            inner = cuts[(cuts > yl + xtol) & (cuts < yh - xtol)]
            bounds = np.concatenate([[yl], inner, [yh]])
            for a, b in zip(bounds[:-1], bounds[1:]):
                if b - a <= 1e-15:
                    continue
                xa = _pull_back(m, seg, k - 1, a, xtol)
                xb = _pull_back(m, seg, k - 1, b, xtol)
                pxl, pxh = (xa, xb) if xa <= xb else (xb, xa)
                if pxh - pxl <= 1e-15:
                    continue
                bi = m.branch_containing(0.5 * (a + b))
                ga = float(m.branch_lift(bi, np.array([a]))[0])
                gb = float(m.branch_lift(bi, np.array([b]))[0])
                sgn = 1 if gb >= ga else -1
                iyl, iyh = (ga, gb) if ga <= gb else (gb, ga)
                new_orient = orient * sgn
                if affine:
                    new_slope = slope * (gb - ga) / (b - a)
                else:
                    new_slope = None
                piece = (pxl, pxh, iyl, iyh, new_orient, new_slope)
                overlap_lo, overlap_hi = max(iyl, dlo), min(iyh, dhi)
                if overlap_hi - overlap_lo <= xtol:
                    new_segments.append(piece)
                    continue
                covers = iyl <= dlo + xtol and iyh >= dhi - xtol
                if covers:
                    cl = _pull_back(m, piece, k, dlo, xtol)
                    ch = _pull_back(m, piece, k, dhi, xtol)
                    clo, chi = (cl, ch) if cl <= ch else (ch, cl)
                    if chi - clo > 1e-15:
                        if new_slope is not None:
                            target = dlo if new_slope > 0 else dhi
                            cells.append(Cell(clo, chi, k, new_orient, new_slope,
                                              target - new_slope * clo))
                        else:
                            cells.append(Cell(clo, chi, k, new_orient))
                    # pieces outside delta continue; exact sub-segments
                    if dlo - iyl > xtol:
                        ol = _pull_back(m, piece, k, iyl, xtol)
                        oh = _pull_back(m, piece, k, dlo, xtol)
                        slo, shi = (ol, oh) if ol <= oh else (oh, ol)
                        if shi - slo > 1e-15:
                            new_segments.append((slo, shi, iyl, dlo, new_orient, new_slope))
                    if iyh - dhi > xtol:
                        ol = _pull_back(m, piece, k, dhi, xtol)
                        oh = _pull_back(m, piece, k, iyh, xtol)
                        slo, shi = (ol, oh) if ol <= oh else (oh, ol)
                        if shi - slo > 1e-15:
                            new_segments.append((slo, shi, dhi, iyh, new_orient, new_slope))
                else:
                    # partial return: the overlapping portion is lost to the
                    # deficit; only the parts clear of delta keep going
                    pl = _pull_back(m, piece, k, overlap_lo, xtol)
                    ph = _pull_back(m, piece, k, overlap_hi, xtol)
                    partial_mass += abs(ph - pl)
                    for wlo, whi in ((iyl, overlap_lo), (overlap_hi, iyh)):
                        if whi - wlo > xtol:
                            ol = _pull_back(m, piece, k, wlo, xtol)
                            oh = _pull_back(m, piece, k, whi, xtol)
                            slo, shi = (ol, oh) if ol <= oh else (oh, ol)
                            if shi - slo > 1e-15:
                                new_segments.append((slo, shi, wlo, whi, new_orient, new_slope))
        if len(new_segments) > _MAX_SEGMENTS:
            raise ConstructionError(
                f"piece count exceeded {_MAX_SEGMENTS} at time {k}; "
                "the first-return combinatorics of this map are too wild")
        segments = new_segments
        if not segments:
            break
    return InducedMarkovMap(m, delta, cells, tau_max, "numeric", partial_mass)


# ---------------------------------------------------------------------------
# axiom verification


def verify_axioms(F: InducedMarkovMap, samples_per_cell: int = 64,
                  onto_tol: float | None = None,
                  kappa_cap: float = 1.0 - 1e-9,
                  distortion_cap: float = 1e6) -> VerificationReport:
    """Check the Markov, uniform-expansion and bounded-distortion axioms.

    Each cell is sampled at ``max(samples_per_cell, width/1e-4)``
    endpoint-inclusive points.  The report records the worst Markov
    image defect, the contraction factor ``kappa = sup 1/|DF|``, the
    distortion constant (Lipschitz ratio of ``log |DF|`` against image
    separation) and the derived distortion multiplier
    ``exp(K * diam * kappa / (1 - kappa))`` together with its square, the
    cell-measure comparison constant.  The report is also stored on the
    tower, which downstream entropy routines require.

    Raises
    ------
    VerificationError
        If the tower has no cells or fewer than two usable sample points.
    """
    if samples_per_cell < 2:
        raise VerificationError("need at least two sample points per cell")
    if not F.cells:
        raise VerificationError("tower has no cells to verify")
    if onto_tol is None:
        onto_tol = 1e-6 * F.delta.width
    diameter = F.base.domain.width

    defect, defect_cell = 0.0, 0
    kappa, kappa_cell = 0.0, 0
    distortion, distortion_cell = 0.0, 0
    for ci, cell in enumerate(F.cells):
        n = max(samples_per_cell, int(np.ceil(cell.width / 1e-4)))
        xs = np.linspace(cell.lo, cell.hi, n)
        ia = F.branch_value(cell, cell.lo)
        ib = F.branch_value(cell, cell.hi)
        ylo, yhi = (ia, ib) if ia <= ib else (ib, ia)
        d = max(abs(ylo - F.delta.lo), abs(yhi - F.delta.hi))
        if d > defect:
            defect, defect_cell = d, ci
        logj = F.branch_log_jacobian_batch(cell, xs)
        kap = float(np.exp(-logj.min()))
        if kap > kappa:
            kappa, kappa_cell = kap, ci
        if cell.slope is None:
            imgs = F.branch_value_batch(cell, xs)
            sep = np.abs(np.diff(imgs))
            usable = sep > 1e-9
            if usable.any():
                ratios = np.abs(np.diff(logj))[usable] / sep[usable]
                r = float(ratios.max())
                if r > distortion:
                    distortion, distortion_cell = r, ci
    if kappa >= 1.0:
        multiplier = float("inf")
        comparison = float("inf")
    else:
        multiplier = exp(distortion * diameter * kappa / (1.0 - kappa))
        comparison = multiplier ** 2
    report = VerificationReport(
        markov_defect=defect, defect_cell=defect_cell,
        kappa=kappa, kappa_cell=kappa_cell,
        distortion=distortion, distortion_cell=distortion_cell,
        expansion_factor=kappa,
        distortion_multiplier=multiplier,
        comparison_constant=comparison,
        diameter=diameter,
        samples_per_cell=samples_per_cell,
        markov_ok=defect <= onto_tol,
        expansion_ok=kappa < kappa_cap,
        distortion_ok=distortion <= distortion_cap,
    )
    F.verification = report
    return report


# ---------------------------------------------------------------------------
# comparing and weighing towers


def return_time_l1_distance(F1: InducedMarkovMap, F2: InducedMarkovMap) -> float:
    """Lebesgue L1 distance between two towers' return-time functions.

    Both return times are censored at the shared value
    ``max(tau_max_1, tau_max_2) + 1`` on their deficit regions, so towers
    of the same map built with different caps differ only through mass
    beyond the smaller cap.

    Raises
    ------
    ArgumentError
        If the towers live over different base intervals.
    """
    if abs(F1.delta.lo - F2.delta.lo) > 1e-12 or abs(F1.delta.hi - F2.delta.hi) > 1e-12:
        raise ArgumentError("towers live over different base intervals")
    censor = max(F1.tau_max, F2.tau_max) + 1
    points = {F1.delta.lo, F1.delta.hi}
    for F in (F1, F2):
        for c in F.cells:
            points.add(c.lo)
            points.add(c.hi)
    pts = sorted(points)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b - a <= 0:
            continue
        mid = 0.5 * (a + b)
        i1 = F1.cell_index(mid)
        i2 = F2.cell_index(mid)
        t1 = F1.cells[i1].tau if i1 is not None else censor
        t2 = F2.cells[i2].tau if i2 is not None else censor
        total += abs(t1 - t2) * (b - a)
    return total


def kac_breakdown(F: InducedMarkovMap, mu: GridDensity) -> tuple[float, float]:
    """Mean return time split into (cell part, censored deficit part).

    ``mu`` must be a unit-mass density on the base interval.  The deficit
    region is weighed with the censoring time ``tau_max + 1``.
    """
    grid = mu.grid
    if not isinstance(grid, Grid1D) or abs(grid.lo - F.delta.lo) > 1e-9 \
            or abs(grid.hi - F.delta.hi) > 1e-9:
        raise ArgumentError("density grid does not match the tower base interval")
    if abs(mu.mass - 1.0) > 1e-8:
        raise ArgumentError("kac mass expects a unit-mass density")
    covered = 0.0
    covered_measure = 0.0
    for c in F.cells:
        w = interval_measure(mu, c.lo, c.hi)
        covered += c.tau * w
        covered_measure += w
    censored = (F.tau_max + 1) * max(1.0 - covered_measure, 0.0)
    return covered, censored


def kac_mass(F: InducedMarkovMap, mu: GridDensity) -> float:
    """Censored mean return time ``integral tau d mu`` over the tower.

    Equals the total mass of the spread of ``mu`` over the ambient space;
    deficit mass carries the censoring time ``tau_max + 1``.
    """
    covered, censored = kac_breakdown(F, mu)
    return covered + censored
