"""Orbit statistics: Birkhoff averages, Lyapunov exponents, hyperbolicity
and recurrence times, tail profiles and tail-decay fits.

The expansion time of a point is the first index from which the running
average of ``log |Df^-1|`` along the orbit stays below ``-lambda/2`` up to
the horizon; the recurrence time is the analogous index for the running
average of ``-log dist_delta(., C)`` against the budget ``2 epsilon``,
where ``dist_delta`` is the distance to the critical set truncated to 1
outside a ``delta``-neighbourhood.  Points that fail at the horizon are
censored and reported as ``n_max + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, InsufficientDataError, NearCriticalError
from .maps import NEAR_CRITICAL_FLOOR, MapSystem, VianaMap, _op_norms_2x2_lower
from .rng import stream

_LOG_CLAMP = 1e-300


def birkhoff_average(m: MapSystem, x, observable, n: int) -> float:
    """Average of ``observable`` along the first ``n`` orbit points.

    Parameters
    ----------
    m : MapSystem
    x : float or pair
        Starting point, inside the domain of ``m``.
    observable : callable
        Real function of a point.
    n : int
        Number of orbit points (>= 1).

    Raises
    ------
    NearCriticalError
        Propagated from the observable, annotated with the iterate index.
    ArgumentError
        If a summand is non-finite.
    """
    if n < 1:
        raise ArgumentError("birkhoff_average needs n >= 1")
    m.check_point(x)
    total = 0.0
    for j in range(n):
        try:
            v = observable(x)
        except NearCriticalError as err:
            raise NearCriticalError(err.distance, f"observable blew up at iterate {j}") from err
        if not math.isfinite(v):
            raise ArgumentError(f"non-finite summand {v!r} at iterate {j}")
        total += v
        x = m.f_scalar(x)
    return total / n


def lyapunov_exponents(m: MapSystem, x, n: int) -> list[float]:
    """Finite-time Lyapunov exponents along one orbit, ascending.

    One dimension: the Birkhoff average of ``log |f'|``.  Two dimensions:
    QR-reorthogonalised products of the exact derivative matrices.  The
    cylinder skew product is fed to QR with the fibre coordinate first,
    which makes the cocycle upper triangular and the base exponent
    ``log d`` exact up to rounding.

    Raises
    ------
    NearCriticalError
        If the orbit hits the critical set to within the floor.
    """
    if n < 1:
        raise ArgumentError("lyapunov_exponents needs n >= 1")
    m.check_point(x)
    if m.dimension == 1:
        total = 0.0
        for j in range(n):
            d = m.crit_dist_scalar(x)
            if d < NEAR_CRITICAL_FLOOR:
                raise NearCriticalError(d, f"orbit hit the critical set at iterate {j}")
            total += math.log(abs(m.df_scalar(x)))
            x = m.f_scalar(x)
        return [total / n]

    # 2D: accumulate log |diag R| of the reorthogonalised products
    assert isinstance(m, VianaMap)
    q00, q01, q10, q11 = 1.0, 0.0, 0.0, 1.0
    s1 = s2 = 0.0
    theta, xi = float(x[0]), float(x[1])
    for j in range(n):
        if abs(xi) < NEAR_CRITICAL_FLOOR:
            raise NearCriticalError(abs(xi), f"orbit hit the critical set at iterate {j}")
        # derivative with the fibre coordinate first: [[-2x, c], [0, d]]
        e = -2.0 * xi
        c = m.alpha * 2.0 * math.pi * math.cos(2.0 * math.pi * theta)
        a = float(m.d)
        # A = J @ Q
        a00 = e * q00 + c * q10
        a01 = e * q01 + c * q11
        a10 = a * q10
        a11 = a * q11
        r11 = math.hypot(a00, a10)
        q00n, q10n = a00 / r11, a10 / r11
        r12 = q00n * a01 + q10n * a11
        u0, u1 = a01 - r12 * q00n, a11 - r12 * q10n
        r22 = math.hypot(u0, u1)
        q01n, q11n = u0 / r22, u1 / r22
        q00, q01, q10, q11 = q00n, q01n, q10n, q11n
        s1 += math.log(r11)
        s2 += math.log(r22)
        theta, xi = m.f_scalar((theta, xi))
    return sorted([s1 / n, s2 / n])


@dataclass(frozen=True)
class TailParams:
    """Thresholds and horizon for hyperbolicity/recurrence tail profiles."""

    lam: float
    eps: float
    delta: float
    n_max: int
    sample_size: int

    def __post_init__(self):
        if self.lam <= 0 or self.eps <= 0 or self.delta <= 0:
            raise ArgumentError("tail thresholds lambda, epsilon, delta must be positive")
        if self.n_max < 1 or self.sample_size < 1:
            raise ArgumentError("tail horizon and sample size must be >= 1")


@dataclass(frozen=True)
class TailProfile:
    """Fractions of a sample whose times exceed each n = 1..n_max."""

    n: np.ndarray
    frac_expansion: np.ndarray
    frac_recurrence: np.ndarray
    frac_union: np.ndarray
    sample_size: int
    censored_count: int
    params: TailParams
    seed: int


def _inverse_norm_logs(m: MapSystem, pts: np.ndarray, n_max: int) -> np.ndarray:
    """Matrix of ``log |Df^-1|`` summands along orbits; shape (npts, n_max)."""
    out = np.empty((pts.shape[0], n_max))
    cur = pts.copy()
    for j in range(n_max):
        if m.dimension == 1:
            d = np.abs(m.df_batch(cur))
        else:
            a, c, e = m.jac_entries_batch(cur)
            _, d = _op_norms_2x2_lower(a, c, e)
        out[:, j] = -np.log(np.maximum(d, _LOG_CLAMP))
        cur = m.f_batch(cur)
    return out


def _truncated_dist_logs(m: MapSystem, pts: np.ndarray, delta: float, n_max: int) -> np.ndarray:
    """Matrix of ``-log dist_delta(., C)`` summands; zeros without critical set."""
    npts = pts.shape[0]
    if not m.has_critical_set:
        return np.zeros((npts, n_max))
    out = np.empty((npts, n_max))
    cur = pts.copy()
    for j in range(n_max):
        dist = m.crit_dist_batch(cur)
        trunc = np.where(dist < delta, np.maximum(dist, _LOG_CLAMP), 1.0)
        out[:, j] = -np.log(trunc)
        cur = m.f_batch(cur)
    return out


def _settle_times(summands: np.ndarray, budget_per_step: float) -> np.ndarray:
    """First index N with running mean <= budget for all n in [N, n_max].

    ``summands`` has shape (npts, n_max); returns integer times with
    ``n_max + 1`` marking censored points.
    """
    npts, n_max = summands.shape
    sums = np.cumsum(summands, axis=1)
    steps = np.arange(1, n_max + 1)
    ok = sums <= budget_per_step * steps
    fail = ~ok
    any_fail = fail.any(axis=1)
    # index (1-based) of the last failing n; 0 when none fail
    last_fail = np.where(any_fail, n_max - np.argmax(fail[:, ::-1], axis=1), 0)
    times = last_fail + 1
    censored = fail[:, -1]
    times[censored] = n_max + 1
    return times


def expansion_time(m: MapSystem, x, lam: float, n_max: int) -> int:
    """Hyperbolicity settling time of one point (``n_max + 1`` = censored).

    Smallest ``N`` such that the running average of ``log |Df^-1|`` along
    the orbit is at most ``-lam/2`` for every ``n`` in ``[N, n_max]``.
    """
    if lam <= 0:
        raise ArgumentError("expansion threshold lambda must be positive")
    if n_max < 1:
        raise ArgumentError("expansion horizon must be >= 1")
    m.check_point(x)
    pts = np.asarray([x], dtype=float)
    logs = _inverse_norm_logs(m, pts, n_max)
    return int(_settle_times(logs, -0.5 * lam)[0])


def recurrence_time(m: MapSystem, x, delta: float, eps: float, n_max: int) -> int:
    """Slow-recurrence settling time of one point (``n_max + 1`` = censored).

    Smallest ``N`` such that the running average of
    ``-log dist_delta(., C)`` along the orbit is at most ``2 eps`` for
    every ``n`` in ``[N, n_max]``.  Maps with empty critical set return 1.
    """
    if delta <= 0 or eps <= 0:
        raise ArgumentError("recurrence parameters delta, eps must be positive")
    if n_max < 1:
        raise ArgumentError("recurrence horizon must be >= 1")
    m.check_point(x)
    pts = np.asarray([x], dtype=float)
    logs = _truncated_dist_logs(m, pts, delta, n_max)
    return int(_settle_times(logs, 2.0 * eps)[0])


def tail_profile(m: MapSystem, params: TailParams, seed: int = 0) -> TailProfile:
    """Monte Carlo tail profile of the settling times over a uniform sample.

    Each sample point is drawn from its own random stream keyed by
    ``(seed, index)``, so the profile is independent of evaluation order
    and worker count.  For each ``n`` the profile records the fraction of
    points whose expansion time exceeds ``n``, likewise for the recurrence
    time, and for the union of the two events.
    """
    npts = params.sample_size
    if m.dimension == 1:
        pts = np.empty(npts)
    else:
        pts = np.empty((npts, 2))
    for i in range(npts):
        pts[i] = m.sample_uniform(stream(seed, i), 1)[0]

    exp_logs = _inverse_norm_logs(m, pts, params.n_max)
    texp = _settle_times(exp_logs, -0.5 * params.lam)
    rec_logs = _truncated_dist_logs(m, pts, params.delta, params.n_max)
    trec = _settle_times(rec_logs, 2.0 * params.eps)

    ns = np.arange(1, params.n_max + 1)
    over_e = texp[:, None] > ns[None, :]
    over_r = trec[:, None] > ns[None, :]
    frac_e = over_e.mean(axis=0)
    frac_r = over_r.mean(axis=0)
    frac_u = (over_e | over_r).mean(axis=0)
    censored = int(np.sum((texp > params.n_max) | (trec > params.n_max)))
    return TailProfile(ns, frac_e, frac_r, frac_u, npts, censored, params, seed)


@dataclass(frozen=True)
class TailFit:
    """Least-squares fit of a tail profile in log scale."""

    model: str
    C: float
    gamma: float
    residual: float
    n_points: int


def fit_tail_decay(profile: TailProfile, model: str = "polynomial") -> TailFit:
    """Fit ``C n^-gamma`` or ``C exp(-gamma sqrt(n))`` to the union fractions.

    Only strictly positive fractions enter the fit (log scale); fewer than
    5 of them raise :class:`InsufficientDataError`.  The residual is the
    root-mean-square misfit of ``log frac``.

    Parameters
    ----------
    profile : TailProfile
    model : str
        ``"polynomial"`` or ``"stretched_exp"``.
    """
    if model not in ("polynomial", "stretched_exp"):
        raise ArgumentError(f"unknown tail model {model!r}")
    mask = profile.frac_union > 0
    n = profile.n[mask].astype(float)
    y = np.log(profile.frac_union[mask])
    if n.size < 5:
        raise InsufficientDataError(
            f"only {n.size} positive tail fractions; need at least 5"
        )
    regressor = -np.log(n) if model == "polynomial" else -np.sqrt(n)
    A = np.column_stack([np.ones_like(n), regressor])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return TailFit(model, float(np.exp(coef[0])), float(coef[1]), rms, int(n.size))
