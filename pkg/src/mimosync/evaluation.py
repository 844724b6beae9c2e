"""Monte Carlo evaluation: MSE/timing-failure sweeps, numerical CRLB and
channel-estimator runtime trends."""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import model
from .estimator import joint_estimate_ls, joint_estimate_sp
from .recovery import least_squares, subspace_pursuit

__all__ = [
    "TrialRecord",
    "SweepSummary",
    "mse",
    "timing_failure_prob",
    "numerical_crlb",
    "monte_carlo_sweep",
    "complexity_trend",
]

ESTIMATOR_NAMES = ("sp", "ls")

# Seed-stream tags so fixed pilot/selection draws are isolated from the
# per-trial streams.
_PILOT_STREAM = 0x9101
_SELECTION_STREAM = 0x9102


def mse(estimates, truth):
    """Mean squared error over trials; vector estimates sum over components."""
    if len(estimates) == 0:
        raise ValueError("need at least one estimate")
    est = np.asarray(estimates)
    err = est - np.asarray(truth)
    if err.ndim == 1:
        return float(np.mean(np.abs(err) ** 2))
    return float(np.mean(np.sum(np.abs(err) ** 2, axis=tuple(range(1, err.ndim)))))


def timing_failure_prob(theta_hats, theta_true, p):
    """Fraction of trials whose timing estimate is off by at least p samples."""
    hats = np.asarray(theta_hats)
    if hats.size == 0:
        raise ValueError("need at least one estimate")
    return float(np.mean(np.abs(hats - theta_true) >= p))


def numerical_crlb(cfg, pilots, params, channel, sigma_sq,
                   fd_step_eps=1e-6, fd_step_eta=1e-8):
    """Cramer-Rao bounds from a numerically assembled Fisher information.

    The observation is complex Gaussian with mean mu = A(eps, eta, theta) h
    and white noise of variance sigma_sq.  The real parameter vector is
    (eps, eta, Re h_S, Im h_S) with S the channel support: the offsets are
    differentiated by central finite differences, the channel block is exact
    since mu is linear in h.  The integer timing offset carries no
    derivative and is excluded.

    Returns (crlb_eps, crlb_eta, trace_crlb_channel).
    """
    if sigma_sq <= 0:
        raise ValueError("sigma_sq must be positive")

    def mu(eps, eta):
        p = model.ImpairmentParams(epsilon=eps, eta=eta, theta=params.theta)
        return model.model_matrix(cfg, pilots, p) @ channel.taps

    d_eps = (mu(params.epsilon + fd_step_eps, params.eta)
             - mu(params.epsilon - fd_step_eps, params.eta)) / (2 * fd_step_eps)
    d_eta = (mu(params.epsilon, params.eta + fd_step_eta)
             - mu(params.epsilon, params.eta - fd_step_eta)) / (2 * fd_step_eta)

    support = np.flatnonzero(channel.taps)
    a = model.model_matrix(cfg, pilots, params)[:, support]
    jac = np.column_stack([d_eps, d_eta, a, 1j * a])
    fim = (2.0 / sigma_sq) * (jac.conj().T @ jac).real

    eigvals, eigvecs = np.linalg.eigh(fim)
    if eigvals[0] <= eigvals[-1] * 1e-12:
        null = eigvecs[:, 0]
        labels = (["eps", "eta"]
                  + [f"Re h[{i}]" for i in support]
                  + [f"Im h[{i}]" for i in support])
        worst = labels[int(np.argmax(np.abs(null)))]
        raise ValueError(f"Fisher information is singular; null direction along {worst}")
    inv = np.linalg.inv(fim)
    return float(inv[0, 0]), float(inv[1, 1]), float(np.trace(inv[2:, 2:]))


@dataclass
class TrialRecord:
    """Everything produced by one Monte Carlo trial."""

    snr_db: float
    trial: int
    truth: model.ImpairmentParams
    channel: model.SparseChannel = field(repr=False)
    sigma_sq: float = 0.0
    results: dict = field(default_factory=dict)     # estimator name -> EstimationResult
    wall_times: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)    # estimator name -> message
    crlb: tuple = None


@dataclass
class SweepSummary:
    """Per-SNR aggregated metrics of one Monte Carlo sweep."""

    estimators: tuple
    p_fail: int
    rows: list = field(default_factory=list)
    n_failures: int = 0


def _truth_for_trial(truth_mode, grids, fixed_truth, rng):
    if truth_mode == "fixed":
        return fixed_truth
    eps_vals, eta_vals, th_vals = (grids.eps_values(), grids.eta_values(),
                                   grids.theta_values())
    if truth_mode == "on-grid":
        return model.ImpairmentParams(
            epsilon=float(rng.choice(eps_vals)),
            eta=float(rng.choice(eta_vals)),
            theta=int(rng.choice(th_vals)),
        )
    if truth_mode == "random":
        return model.ImpairmentParams(
            epsilon=float(rng.uniform(grids.eps_min, grids.eps_max)),
            eta=float(rng.uniform(grids.eta_min, grids.eta_max)),
            theta=int(rng.integers(th_vals.min(), th_vals.max() + 1)),
        )
    raise ValueError(f"unknown truth_mode {truth_mode!r}")


def _run_trial(task):
    (cfg, grids, snr_db, snr_idx, trial, m, estimators, master_seed, truth_mode,
     fixed_truth, pilot_mode, selection_mode, p_fail, compute_crlb, sp_max_iter,
     noiseless) = task

    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(snr_idx, trial))
    seed_truth, seed_chan, seed_pilot, seed_noise, seed_sel = ss.spawn(5)
    if pilot_mode == "fixed":
        seed_pilot = np.random.SeedSequence(entropy=master_seed, spawn_key=(_PILOT_STREAM,))
    if selection_mode == "fixed":
        seed_sel = np.random.SeedSequence(entropy=master_seed, spawn_key=(_SELECTION_STREAM,))

    truth = _truth_for_trial(truth_mode, grids, fixed_truth,
                             np.random.default_rng(seed_truth))
    channel = model.generate_channel(cfg, seed_chan)
    pilots = model.generate_pilots(cfg, seed_pilot)
    if noiseless:
        noise = model.NoiseSpec(sigma_sq=0.0, snr_db=float("inf"))
    else:
        noise = model.NoiseSpec.from_snr(snr_db, cfg, pilots, truth)
    sel = model.select_samples(cfg, m, seed_sel)

    a1 = model.model_matrix(cfg, pilots, truth)
    r = model.received_signal(a1, channel, noise, seed_noise)
    r_u = model.row_subsample(r, sel)

    rec = TrialRecord(snr_db=snr_db, trial=trial, truth=truth, channel=channel,
                      sigma_sq=noise.sigma_sq)
    for name in estimators:
        t0 = time.perf_counter()
        try:
            if name == "sp":
                res = joint_estimate_sp(r_u, sel, grids, cfg, pilots,
                                        max_iter=sp_max_iter)
            elif name == "ls":
                res = joint_estimate_ls(r_u, sel, grids, cfg, pilots)
            else:
                raise ValueError(f"unknown estimator {name!r}")
        except (np.linalg.LinAlgError, RuntimeError) as exc:
            rec.failures[name] = str(exc)
            continue
        rec.results[name] = res
        rec.wall_times[name] = time.perf_counter() - t0

    if compute_crlb and noise.sigma_sq > 0:
        rec.crlb = numerical_crlb(cfg, pilots, truth, channel, noise.sigma_sq)
    return rec


def monte_carlo_sweep(cfg, grids, snr_list, trials, m, estimators, master_seed,
                      truth_mode="on-grid", fixed_truth=None, pilot_mode="fixed",
                      selection_mode="per-trial", p_fail=2, compute_crlb=True,
                      workers=1, sp_max_iter=None, noiseless=False,
                      return_records=False):
    """Run the Monte Carlo sweep and aggregate per-SNR metrics.

    Deterministic given master_seed, independent of worker count: per-trial
    seeds are derived from (master_seed, snr index, trial index) and the
    reduction runs in fixed trial order.
    """
    if trials < 1:
        raise ValueError("need trials >= 1")
    estimators = tuple(estimators)
    for name in estimators:
        if name not in ESTIMATOR_NAMES:
            raise ValueError(f"unknown estimator {name!r}")
    if truth_mode == "fixed" and fixed_truth is None:
        raise ValueError("fixed truth_mode needs fixed_truth")

    tasks = [
        (cfg, grids, float(snr_db), snr_idx, trial, m, estimators, master_seed,
         truth_mode, fixed_truth, pilot_mode, selection_mode, p_fail,
         compute_crlb, sp_max_iter, noiseless)
        for snr_idx, snr_db in enumerate(snr_list)
        for trial in range(trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_trial, tasks, chunksize=1))
    else:
        records = [_run_trial(t) for t in tasks]

    summary = SweepSummary(estimators=estimators, p_fail=p_fail)
    for snr_idx, snr_db in enumerate(snr_list):
        batch = records[snr_idx * trials : (snr_idx + 1) * trials]
        row = {"snr_db": float(snr_db), "n_trials": trials}
        for name in estimators:
            ok = [rec for rec in batch if name in rec.results]
            n_fail = trials - len(ok)
            summary.n_failures += n_fail
            row[f"n_ok_{name}"] = len(ok)
            if not ok:
                continue
            res = [rec.results[name] for rec in ok]
            row[f"mse_eps_{name}"] = mse([x.epsilon_hat for x in res],
                                         [rec.truth.epsilon for rec in ok])
            row[f"mse_eta_{name}"] = mse([x.eta_hat for x in res],
                                         [rec.truth.eta for rec in ok])
            row[f"mse_theta_{name}"] = mse([float(x.theta_hat) for x in res],
                                           [float(rec.truth.theta) for rec in ok])
            row[f"mse_h_{name}"] = mse([x.h_hat for x in res],
                                       np.array([rec.channel.taps for rec in ok]))
            # Truth may differ per trial; compare per-trial deviations to zero.
            row[f"ptf_{name}"] = timing_failure_prob(
                [x.theta_hat - rec.truth.theta for x, rec in zip(res, ok)], 0, p_fail
            )
            row[f"time_{name}"] = float(np.mean([rec.wall_times[name] for rec in ok]))
        bounds = [rec.crlb for rec in batch if rec.crlb is not None]
        if bounds:
            arr = np.asarray(bounds)
            row["crlb_eps"] = float(arr[:, 0].mean())
            row["crlb_eta"] = float(arr[:, 1].mean())
            row["crlb_h_trace"] = float(arr[:, 2].mean())
        summary.rows.append(row)
    if return_records:
        return summary, records
    return summary


def complexity_trend(cfg_list, reps=3, seed=0, m_sp=45, backend=None):
    """Mean channel-estimation solve time per method across problem sizes.

    The least-squares baseline is timed on its natural square operating
    point (retained samples equal to channel unknowns); subspace pursuit is
    timed on a fixed reduced-sample budget of m_sp samples per antenna.
    """
    rows = []
    for idx, cfg in enumerate(cfg_list):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(idx,))
        s_chan, s_pilot, s_sel_ls, s_sel_sp, s_noise = ss.spawn(5)
        pilots = model.generate_pilots(cfg, s_pilot)
        channel = model.generate_channel(cfg, s_chan)
        params = model.ImpairmentParams(epsilon=0.0, eta=0.0, theta=0)
        a = model.model_matrix(cfg, pilots, params)
        r = model.received_signal(a, channel, model.NoiseSpec(1e-4, 40.0), s_noise)

        m_ls = -(-cfg.n_taps_total // cfg.n_rx)        # square system for LS
        sel_ls = model.select_samples(cfg, m_ls, s_sel_ls)
        a_ls, r_ls = a[sel_ls.indices], r[sel_ls.indices]
        sel_sp = model.select_samples(cfg, min(m_sp, cfg.n_subcarriers), s_sel_sp)
        a_sp, r_sp = a[sel_sp.indices], r[sel_sp.indices]
        k_total = cfg.total_sparsity

        least_squares(a_ls, r_ls)               # warm-up
        t0 = time.perf_counter()
        for _ in range(reps):
            least_squares(a_ls, r_ls)
        t_ls = (time.perf_counter() - t0) / reps

        subspace_pursuit(a_sp, r_sp, k_total, backend=backend)
        t0 = time.perf_counter()
        for _ in range(reps):
            subspace_pursuit(a_sp, r_sp, k_total, backend=backend)
        t_sp = (time.perf_counter() - t0) / reps

        rows.append({"n_unknowns": cfg.n_taps_total, "sp_time": t_sp, "ls_time": t_ls})
    return rows
