"""Two-stage maximum-likelihood grid search for (CFO, SFO, timing, channel).

Stage 1 sweeps the (epsilon, eta) grid against the timing-embedded model,
refitting the channel at every grid point; stage 2 sweeps the timing grid
at the stage-1 minimizer.  The per-grid-point channel estimate is either
subspace pursuit (reduced-sample capable) or plain least squares (the
baseline, which needs at least as many retained samples as unknowns).
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .model import _cfo_phase_vec, _pilot_tap_columns, _timing_ramp_vec, sfo_idft_matrix
from .recovery import least_squares, subspace_pursuit

__all__ = ["GridSpec", "EstimationResult", "residual_cost",
           "joint_estimate_sp", "joint_estimate_ls"]


def _axis_values(lo, hi, step, integer=False):
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    vals = lo + step * np.arange(count)
    if integer:
        vals = np.rint(vals).astype(int)
    return vals


@dataclass(frozen=True)
class GridSpec:
    """Search grids for the three impairment axes."""

    eps_min: float
    eps_max: float
    eps_step: float
    eta_min: float
    eta_max: float
    eta_step: float
    theta_min: int
    theta_max: int
    theta_step: int = 1

    def __post_init__(self):
        for axis in ("eps", "eta", "theta"):
            lo = getattr(self, f"{axis}_min")
            hi = getattr(self, f"{axis}_max")
            step = getattr(self, f"{axis}_step")
            if hi < lo:
                raise ValueError(f"{axis} grid has max < min")
            if step <= 0:
                raise ValueError(f"{axis} grid step must be positive")

    def eps_values(self):
        return _axis_values(self.eps_min, self.eps_max, self.eps_step)

    def eta_values(self):
        return _axis_values(self.eta_min, self.eta_max, self.eta_step)

    def theta_values(self):
        return _axis_values(self.theta_min, self.theta_max, self.theta_step, integer=True)


@dataclass
class EstimationResult:
    """Output of one grid-search run: estimates, costs and diagnostics."""

    epsilon_hat: float
    eta_hat: float
    theta_hat: int
    h_hat: np.ndarray
    min_cost_offset: float        # stage-1 minimum over the (eps, eta) grid
    min_cost_timing: float        # stage-2 minimum over the timing grid
    offset_costs: np.ndarray = field(repr=False)    # eps x eta cost table
    timing_costs: np.ndarray = field(repr=False)    # cost per timing grid point
    n_offset_evals: int = 0
    n_timing_evals: int = 0
    wall_time: float = 0.0


def residual_cost(a, h, r):
    """Squared Euclidean misfit (r - a h)^H (r - a h)."""
    a = np.asarray(a)
    h = np.asarray(h)
    r = np.asarray(r)
    if a.shape[1] != h.shape[0] or a.shape[0] != r.shape[0]:
        raise ValueError("shape mismatch in residual cost")
    d = r - a @ h
    return float(np.vdot(d, d).real)


def _antenna_rows(sel, cfg):
    """Per-antenna local row indices of the selection."""
    n, m = cfg.n_subcarriers, sel.m_per_antenna
    return [sel.indices[a * m : (a + 1) * m] - a * n for a in range(cfg.n_rx)]


def _place_blocks(block_rows, n_rx, m, width):
    """Block-diagonal subsampled model matrix from per-antenna blocks."""
    out = np.zeros((m * n_rx, width * n_rx), dtype=complex)
    for a, blk in enumerate(block_rows):
        out[a * m : (a + 1) * m, a * width : (a + 1) * width] = blk
    return out


def _grid_search(r_u, sel, grids, cfg, pilots, fit_embedded, fit_timed):
    t_start = time.perf_counter()
    n = cfg.n_subcarriers
    m = sel.m_per_antenna
    if r_u.shape[0] != sel.size:
        raise ValueError("observation length must match the selection size")
    rows = _antenna_rows(sel, cfg)

    eps_vals = grids.eps_values()
    eta_vals = grids.eta_values()
    theta_vals = grids.theta_values()
    if theta_vals.min() < 0 or theta_vals.max() > cfg.theta_max:
        raise ValueError("timing grid must lie within [0, theta_max]")

    # Stage 1: sweep (eps, eta) against the timing-embedded model.
    w_embed = _pilot_tap_columns(pilots, cfg.embedded_width)
    width_e = cfg.embedded_width * cfg.n_tx
    base_by_eta = {}
    offset_costs = np.full((eps_vals.size, eta_vals.size), np.inf)
    best = (np.inf, 0, 0)
    for i, eps in enumerate(eps_vals):
        for j, eta in enumerate(eta_vals):
            base = base_by_eta.get(j)
            if base is None:
                base = sfo_idft_matrix(eta, n) @ w_embed
                base_by_eta[j] = base
            d = _cfo_phase_vec(eps, eta, n)
            a2u = _place_blocks(
                [d[rw, None] * base[rw] for rw in rows], cfg.n_rx, m, width_e
            )
            try:
                h_emb = fit_embedded(a2u, r_u)
                cost = residual_cost(a2u, h_emb, r_u)
            except np.linalg.LinAlgError:
                cost = np.inf
            offset_costs[i, j] = cost
            if cost < best[0]:
                best = (cost, i, j)
    if not np.isfinite(best[0]):
        raise RuntimeError("every (eps, eta) grid point failed to fit")
    eps_hat = float(eps_vals[best[1]])
    eta_hat = float(eta_vals[best[2]])

    # Stage 2: sweep the timing grid at the stage-1 minimizer.
    w_tap = _pilot_tap_columns(pilots, cfg.max_taps)
    width_t = cfg.max_taps * cfg.n_tx
    d_hat = _cfo_phase_vec(eps_hat, eta_hat, n)
    f1_hat = sfo_idft_matrix(eta_hat, n)
    timing_costs = np.full(theta_vals.size, np.inf)
    h_by_theta = [None] * theta_vals.size
    for i, theta in enumerate(theta_vals):
        base = f1_hat @ (_timing_ramp_vec(theta, n)[:, None] * w_tap)
        a1u = _place_blocks(
            [d_hat[rw, None] * base[rw] for rw in rows], cfg.n_rx, m, width_t
        )
        try:
            h_i = fit_timed(a1u, r_u)
            cost = residual_cost(a1u, h_i, r_u)
        except np.linalg.LinAlgError:
            continue
        timing_costs[i] = cost
        h_by_theta[i] = h_i
    if not np.isfinite(timing_costs).any():
        raise RuntimeError("every timing grid point failed to fit")
    i_best = int(np.argmin(timing_costs))

    return EstimationResult(
        epsilon_hat=eps_hat,
        eta_hat=eta_hat,
        theta_hat=int(theta_vals[i_best]),
        h_hat=h_by_theta[i_best],
        min_cost_offset=float(best[0]),
        min_cost_timing=float(timing_costs[i_best]),
        offset_costs=offset_costs,
        timing_costs=timing_costs,
        n_offset_evals=offset_costs.size,
        n_timing_evals=timing_costs.size,
        wall_time=time.perf_counter() - t_start,
    )


def joint_estimate_sp(r_u, sel, grids, cfg, pilots, max_iter=None, backend=None):
    """Joint grid-search estimate with subspace pursuit channel refits."""
    k_total = cfg.total_sparsity

    def fit(a, r):
        return subspace_pursuit(a, r, k_total, max_iter=max_iter, backend=backend).h_hat

    return _grid_search(r_u, sel, grids, cfg, pilots, fit, fit)


def joint_estimate_ls(r_u, sel, grids, cfg, pilots):
    """Joint grid-search estimate with least-squares channel refits.

    Uses the minimum-norm solution when the retained samples are fewer
    than the channel unknowns, in which case channel recovery fails and
    the residual cost carries no information.
    """

    def fit(a, r):
        return least_squares(a, r)[0]

    return _grid_search(r_u, sel, grids, cfg, pilots, fit, fit)
