"""Experiment configuration: a flat ``key = value`` text format.

Lines are ``key = value`` with ``#`` comments; list values are
comma-separated.  Signed timing-grid ranges are shifted to the nonnegative
window required by the embedded model; the applied shift is recorded and
echoed into the run metadata.
"""

from dataclasses import dataclass

from .estimator import GridSpec
from .model import ImpairmentParams, SystemConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config",
           "write_config", "DEFAULTS"]


class ConfigError(ValueError):
    pass


# Documented defaults: the 2x2, N=128 link with the reduced-sample budget.
DEFAULTS = {
    "n_subcarriers": "128",
    "tx_antennas": "2",
    "rx_antennas": "2",
    "max_taps": "26",
    "sparsity": "5",
    "theta_max": "5",
    "cp_len": "32",
    "eps_grid": "-0.4, 0.4, 0.01",
    "eta_grid": "-5e-3, 5e-3, 1e-4",
    "theta_grid": "0, 5, 1",
    "snr_db": "0, 10, 20, 30",
    "trials": "100",
    "samples_per_antenna": "45",
    "estimators": "sp, ls",
    "truth_mode": "fixed",
    "truth_epsilon": "0.102",
    "truth_eta": "1.01e-4",
    "truth_theta": "2",
    "pilot_mode": "fixed",
    "selection_mode": "per-trial",
    "p_fail": "2",
    "master_seed": "12345",
    "workers": "1",
    "output_dir": "results",
}

_CHOICES = {
    "truth_mode": {"fixed", "on-grid", "random"},
    "pilot_mode": {"fixed", "per-trial"},
    "selection_mode": {"fixed", "per-trial"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig
    grids: GridSpec
    snr_list: tuple
    trials: int
    samples_per_antenna: int
    estimators: tuple
    truth_mode: str
    truth: ImpairmentParams
    pilot_mode: str
    selection_mode: str
    p_fail: int
    master_seed: int
    workers: int
    output_dir: str
    theta_shift: int = 0


def _parse_lines(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        values[key] = value
    return values


def _floats(value):
    return tuple(float(v) for v in value.split(","))


def _ints(value):
    return tuple(int(v) for v in value.split(","))


def parse_config(text):
    """Build a validated ExperimentConfig from config text."""
    values = dict(DEFAULTS)
    values.update(_parse_lines(text))

    try:
        system = SystemConfig(
            n_subcarriers=int(values["n_subcarriers"]),
            n_tx=int(values["tx_antennas"]),
            n_rx=int(values["rx_antennas"]),
            max_taps=int(values["max_taps"]),
            sparsity=int(values["sparsity"]),
            theta_max=int(values["theta_max"]),
            cp_len=int(values["cp_len"]),
        )
    except ValueError as exc:
        raise ConfigError(f"system config: {exc}") from exc

    eps = _floats(values["eps_grid"])
    eta = _floats(values["eta_grid"])
    theta = _ints(values["theta_grid"])
    if len(eps) != 3 or len(eta) != 3 or len(theta) != 3:
        raise ConfigError("grid values must be 'min, max, step' triples")

    # Signed timing windows are shifted onto [0, ...] for the embedded model.
    theta_shift = -theta[0] if theta[0] < 0 else 0
    theta = (theta[0] + theta_shift, theta[1] + theta_shift, theta[2])
    if theta[1] > system.theta_max:
        raise ConfigError(
            "invariant violated: shifted timing grid exceeds theta_max "
            f"({theta[1]} > {system.theta_max})"
        )
    try:
        grids = GridSpec(eps_min=eps[0], eps_max=eps[1], eps_step=eps[2],
                         eta_min=eta[0], eta_max=eta[1], eta_step=eta[2],
                         theta_min=theta[0], theta_max=theta[1], theta_step=theta[2])
    except ValueError as exc:
        raise ConfigError(f"grid config: {exc}") from exc

    for key, allowed in _CHOICES.items():
        if values[key] not in allowed:
            raise ConfigError(f"{key} must be one of {sorted(allowed)}")

    estimators = tuple(e.strip() for e in values["estimators"].split(","))
    for e in estimators:
        if e not in ("sp", "ls"):
            raise ConfigError(f"unknown estimator {e!r} (choose from sp, ls)")

    m = int(values["samples_per_antenna"])
    if not 1 <= m <= system.n_subcarriers:
        raise ConfigError("invariant violated: 1 <= samples_per_antenna <= n_subcarriers")

    truth = ImpairmentParams(
        epsilon=float(values["truth_epsilon"]),
        eta=float(values["truth_eta"]),
        theta=int(values["truth_theta"]) + theta_shift,
    )
    if values["truth_mode"] == "fixed":
        if not 0 <= truth.theta <= system.theta_max:
            raise ConfigError("invariant violated: shifted truth_theta outside [0, theta_max]")

    trials = int(values["trials"])
    if trials < 1:
        raise ConfigError("trials must be >= 1")

    return ExperimentConfig(
        system=system,
        grids=grids,
        snr_list=_floats(values["snr_db"]),
        trials=trials,
        samples_per_antenna=m,
        estimators=estimators,
        truth_mode=values["truth_mode"],
        truth=truth,
        pilot_mode=values["pilot_mode"],
        selection_mode=values["selection_mode"],
        p_fail=int(values["p_fail"]),
        master_seed=int(values["master_seed"]),
        workers=int(values["workers"]),
        output_dir=values["output_dir"],
        theta_shift=theta_shift,
    )


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def write_config(cfg):
    """Render a config back to its text form; load_config round-trips it."""
    s, g = cfg.system, cfg.grids
    fmt = lambda v: format(v, ".17g")
    lines = [
        f"n_subcarriers = {s.n_subcarriers}",
        f"tx_antennas = {s.n_tx}",
        f"rx_antennas = {s.n_rx}",
        f"max_taps = {s.max_taps}",
        f"sparsity = {s.sparsity}",
        f"theta_max = {s.theta_max}",
        f"cp_len = {s.cp_len}",
        f"eps_grid = {fmt(g.eps_min)}, {fmt(g.eps_max)}, {fmt(g.eps_step)}",
        f"eta_grid = {fmt(g.eta_min)}, {fmt(g.eta_max)}, {fmt(g.eta_step)}",
        f"theta_grid = {g.theta_min - cfg.theta_shift}, {g.theta_max - cfg.theta_shift}, {g.theta_step}",
        f"snr_db = {', '.join(fmt(v) for v in cfg.snr_list)}",
        f"trials = {cfg.trials}",
        f"samples_per_antenna = {cfg.samples_per_antenna}",
        f"estimators = {', '.join(cfg.estimators)}",
        f"truth_mode = {cfg.truth_mode}",
        f"truth_epsilon = {fmt(cfg.truth.epsilon)}",
        f"truth_eta = {fmt(cfg.truth.eta)}",
        f"truth_theta = {cfg.truth.theta - cfg.theta_shift}",
        f"pilot_mode = {cfg.pilot_mode}",
        f"selection_mode = {cfg.selection_mode}",
        f"p_fail = {cfg.p_fail}",
        f"master_seed = {cfg.master_seed}",
        f"workers = {cfg.workers}",
        f"output_dir = {cfg.output_dir}",
    ]
    return "\n".join(lines) + "\n"
