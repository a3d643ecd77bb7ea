"""The Random Energy Model: 2^N spin configurations with independent
centered Gaussian energies of variance N/2.

The quenched pressure P_N(beta) = (1/N) E log Z_N(beta) interpolates between
log 2 at beta = 0 and the linear ground-state regime; in the infinite-size
limit it develops a kink at beta_c = 2 sqrt(log 2).  For each finite N the
pressure is sandwiched between a lower curve Q_lower (quadratic, then linear
with a Sudakov slope) and a family of upper curves Q_upper(.; beta0)
(quadratic up to beta0, then linear with slope sqrt(E KL / N) evaluated at
the target beta).  Both are estimated here with the common-random-number
machinery from `quench`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gibbs
from .ensemble import IndexedEnsemble, build_iid
from .quench import (QuenchedEstimate, ThresholdResult, _from_values,
                     beta_star, mc_estimate, per_sample_values)

MAX_SPINS = 16   # 2^16 states is the desk-scale ceiling
TOL = 1e-12


@dataclass(frozen=True)
class RemModel:
    """N spins, 2^N configurations labeled by their bit strings."""
    n_spins: int
    size: int
    variance: float
    beta_c: float
    ensemble: IndexedEnsemble


def rem_model(n_spins: int) -> RemModel:
    """REM with n_spins spins; energies are i.i.d. N(0, n_spins / 2)."""
    if not isinstance(n_spins, (int, np.integer)) or not (1 <= n_spins <= MAX_SPINS):
        raise ValueError(
            f"scale: n_spins must be an integer in [1, {MAX_SPINS}], "
            f"got {n_spins}")
    n_spins = int(n_spins)
    size = 2 ** n_spins
    labels = [format(i, f"0{n_spins}b") for i in range(size)]
    ens = build_iid(size, n_spins / 2.0, labels=labels)
    return RemModel(n_spins=n_spins, size=size, variance=n_spins / 2.0,
                    beta_c=2.0 * math.sqrt(math.log(2.0)), ensemble=ens)


def pressure_estimate(model: RemModel, beta, n: int, seed: int) -> QuenchedEstimate:
    """Monte Carlo estimate of P_N(beta); exactly log 2 with zero error at beta = 0."""
    return mc_estimate(model.ensemble, gibbs.REM_PRESSURE, beta, n, seed)


def limit_pressure(beta) -> float:
    """Infinite-size pressure: log 2 + beta^2/4 below beta_c, beta sqrt(log 2) above."""
    beta = float(beta)
    if not (np.isfinite(beta) and beta >= 0):
        raise ValueError(
            f"invalid-parameter: beta must be nonnegative and finite, got {beta}")
    beta_c = 2.0 * math.sqrt(math.log(2.0))
    if beta < beta_c:
        return math.log(2.0) + beta * beta / 4.0
    return beta * math.sqrt(math.log(2.0))


# KL estimates keyed by (ensemble, beta, n, seed); the upper-curve grid
# minimization re-reads the same divergence many times.
_divergence_memo: dict[tuple, float] = {}


def _divergence(ens: IndexedEnsemble, beta: float, n: int, seed: int) -> float:
    key = (ens.cache_key, float(beta), int(n), int(seed))
    hit = _divergence_memo.get(key)
    if hit is None:
        hit = mc_estimate(ens, gibbs.KL_TO_UNIFORM, beta, n, seed).mean
        if len(_divergence_memo) > 256:
            _divergence_memo.clear()
        _divergence_memo[key] = hit
    return hit


def q_lower(model: RemModel, beta, threshold: ThresholdResult, c: float,
            n: int, seed: int) -> float:
    """Lower pressure curve: quadratic up to the threshold, then linear.

        log 2 + c^2 beta^2 / 8                                for beta <= beta_star
        log 2 + c^2 beta_star^2 / 8
              + c (beta - beta_star) sqrt(E KL(beta_star) / (2N))  above

    The divergence in the slope is estimated at beta_star, once.
    """
    beta = _check_beta(beta)
    if not (0.0 < c < 1.0):
        raise ValueError(f"invalid-parameter: c must lie in (0, 1), got {c}")
    if not isinstance(threshold, ThresholdResult) or \
            threshold.ensemble_key != model.ensemble.cache_key:
        raise ValueError(
            "invalid-input: threshold was not computed on this model's ensemble")
    bs = threshold.beta_star
    if beta <= bs:
        return math.log(2.0) + c * c * beta * beta / 8.0
    div = _divergence(model.ensemble, bs, n, seed)
    slope = c * math.sqrt(max(div, 0.0) / (2.0 * model.n_spins))
    return (math.log(2.0) + c * c * bs * bs / 8.0 + (beta - bs) * slope)


def q_upper(model: RemModel, beta, beta0, n: int, seed: int) -> float:
    """Upper pressure curve for one knee beta0.

        log 2 + beta^2 / 4                                    for beta <= beta0
        log 2 + beta0^2 / 4 + (beta - beta0) sqrt(E KL(beta) / N)   above

    Note the divergence is evaluated at beta itself, not at the knee.
    """
    beta = _check_beta(beta)
    beta0 = float(beta0)
    if not (np.isfinite(beta0) and beta0 >= 0):
        raise ValueError(
            f"invalid-parameter: beta0 must be nonnegative and finite, got {beta0}")
    if beta <= beta0:
        return math.log(2.0) + beta * beta / 4.0
    div = _divergence(model.ensemble, beta, n, seed)
    slope = math.sqrt(max(div, 0.0) / model.n_spins)
    return math.log(2.0) + beta0 * beta0 / 4.0 + (beta - beta0) * slope


def q_upper_min(model: RemModel, beta, beta0_grid, n: int, seed: int) -> float:
    """Minimum of q_upper over a knee grid; beta_c always joins the grid."""
    grid = [float(b) for b in np.atleast_1d(np.asarray(beta0_grid, dtype=float))]
    if len(grid) == 0:
        raise ValueError("invalid-parameter: beta0 grid must be nonempty")
    grid.append(model.beta_c)
    return min(q_upper(model, beta, b0, n, seed) for b0 in grid)


def q_upper_cap(model: RemModel, beta) -> float:
    """Upper curve with knee beta_c under the divergence cap E KL <= N log 2.

    Equals log 2 + beta^2 / 4 below beta_c and exactly beta sqrt(log 2) above
    (the knee value log 2 + beta_c^2 / 4 telescopes), so it upper-bounds the
    pressure for every N.
    """
    beta = _check_beta(beta)
    if beta <= model.beta_c:
        return math.log(2.0) + beta * beta / 4.0
    return beta * math.sqrt(math.log(2.0))


def _check_beta(beta):
    beta = float(beta)
    if not (np.isfinite(beta) and beta >= 0):
        raise ValueError(
            f"invalid-parameter: beta must be nonnegative and finite, got {beta}")
    return beta


@dataclass(frozen=True)
class PressureRow:
    beta: float
    p_hat: QuenchedEstimate
    q_lower: float
    q_upper_min: float
    q_upper_cap: float
    limit: float
    sandwich_verdict: str         # holds | violated
    integral_residual: float      # pressure difference minus integrated mean
    integral_tolerance: float
    integral_ok: bool


@dataclass(frozen=True)
class PressureCurve:
    """Pressure sweep rows plus the threshold they were sandwiched with."""
    n_spins: int
    c: float
    threshold: ThresholdResult
    rows: tuple[PressureRow, ...]


def pressure_sweep(model: RemModel, beta_grid, n: int, seed: int,
                   c: float = 1.0 / 17.0) -> PressureCurve:
    """One sandwich row per grid beta, under common random numbers.

    Each row compares the pressure estimate against the lower curve (at the
    ensemble's own participation threshold) and the grid-minimized upper
    curve, at a 3-standard-error margin.  The sweep also integrates the
    estimated tilted mean with the trapezoid rule and checks it against the
    pressure differences sample-by-sample: the fundamental-theorem identity
    P_N(beta) - P_N(beta_0) = (1/N) integral of g_N, up to curvature error.
    """
    grid = [float(b) for b in np.atleast_1d(np.asarray(beta_grid, dtype=float))]
    if len(grid) == 0:
        raise ValueError("invalid-parameter: beta grid must be nonempty")
    if any(b2 <= b1 for b1, b2 in zip(grid, grid[1:])):
        raise ValueError("invalid-parameter: beta grid must be strictly increasing")
    for b in grid:
        _check_beta(b)

    ens = model.ensemble
    threshold = beta_star(ens, c, n, seed)
    beta0_grid = grid

    p_sample = np.stack([per_sample_values(ens, gibbs.REM_PRESSURE, b, n, seed)
                         for b in grid])
    g_sample = np.stack([per_sample_values(ens, gibbs.GIBBS_AVERAGE, b, n, seed)
                         for b in grid])
    g_mean = g_sample.mean(axis=1)

    # Trapezoid curvature allowance per step, from second differences of the
    # estimated integrand: per-step error of the trapezoid rule is about
    # h^3 g'' / 12 and g'' is close to (second difference) / h^2.
    k_pts = len(grid)
    step_err = np.zeros(max(k_pts - 1, 0))
    if k_pts >= 3:
        second = np.abs(np.diff(g_mean, 2))
        for j in range(k_pts - 1):
            near = second[max(min(j - 1, k_pts - 3), 0): min(j + 1, k_pts - 2)]
            step_err[j] = (grid[j + 1] - grid[j]) * float(near.max()) / 12.0

    rows = []
    cum_trap = np.zeros(p_sample.shape[1])
    cum_err = 0.0
    for k, beta in enumerate(grid):
        if k > 0:
            h = grid[k] - grid[k - 1]
            cum_trap = cum_trap + 0.5 * h * (g_sample[k - 1] + g_sample[k])
            cum_err += step_err[k - 1]
        resid = p_sample[k] - p_sample[0] - cum_trap / model.n_spins
        resid_mean = float(np.mean(resid))
        resid_se = float(np.std(resid, ddof=1) / math.sqrt(resid.shape[0]))
        tol = cum_err / model.n_spins + 3.0 * resid_se + TOL

        p_hat = _from_values(p_sample[k], gibbs.REM_PRESSURE, beta, n, seed)
        low = q_lower(model, beta, threshold, c, n, seed)
        up = q_upper_min(model, beta, beta0_grid, n, seed)
        margin = 3.0 * p_hat.std_error
        verdict = ("holds"
                   if low <= p_hat.mean + margin and p_hat.mean <= up + margin
                   else "violated")
        rows.append(PressureRow(
            beta=beta, p_hat=p_hat, q_lower=low, q_upper_min=up,
            q_upper_cap=q_upper_cap(model, beta), limit=limit_pressure(beta),
            sandwich_verdict=verdict, integral_residual=resid_mean,
            integral_tolerance=tol, integral_ok=abs(resid_mean) <= tol))
    return PressureCurve(n_spins=model.n_spins, c=float(c),
                         threshold=threshold, rows=tuple(rows))
