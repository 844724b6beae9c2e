"""Frequency-domain system model of an impaired MIMO-OFDM link.

Builds the matrices that map a stacked sparse channel vector to the
received pilot block under carrier frequency offset (CFO), sampling
frequency offset (SFO) and integer symbol timing error, generates sparse
channels and QPSK pilot blocks, and handles the random receive-sample
selection used by the reduced-sample estimators.

Stacking order of the channel vector is receive-antenna major, then
transmit antenna, then tap.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemConfig",
    "ImpairmentParams",
    "PilotBlock",
    "SparseChannel",
    "EmbeddedChannel",
    "MeasurementSelection",
    "NoiseSpec",
    "cfo_phase_matrix",
    "timing_ramp_matrix",
    "sfo_idft_matrix",
    "dft_tap_matrix",
    "pilot_matrix",
    "model_matrix",
    "embedded_model_matrix",
    "embed_timing",
    "generate_channel",
    "generate_pilots",
    "received_signal",
    "select_samples",
    "row_subsample",
    "expected_signal_energy",
]


@dataclass(frozen=True)
class SystemConfig:
    """Static dimensions and normalization of the MIMO-OFDM link."""

    n_subcarriers: int
    n_tx: int
    n_rx: int
    max_taps: int       # longest channel impulse response, in taps
    sparsity: int       # nonzero taps per (tx, rx) pair
    theta_max: int      # largest timing error, in samples
    cp_len: int         # cyclic prefix length, in samples

    def __post_init__(self):
        for name in ("n_subcarriers", "n_tx", "n_rx", "max_taps", "sparsity", "cp_len"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.theta_max < 0:
            raise ValueError("theta_max must be nonnegative")
        if self.sparsity > self.max_taps:
            raise ValueError("invariant violated: sparsity <= max_taps")
        if self.max_taps + self.theta_max >= self.cp_len:
            raise ValueError("invariant violated: max_taps + theta_max < cp_len")
        if self.max_taps + self.theta_max > self.n_subcarriers:
            raise ValueError("invariant violated: max_taps + theta_max <= n_subcarriers")

    @property
    def n_pairs(self):
        return self.n_tx * self.n_rx

    @property
    def n_taps_total(self):
        return self.max_taps * self.n_pairs

    @property
    def embedded_width(self):
        return self.max_taps + self.theta_max

    @property
    def n_embedded_total(self):
        return self.embedded_width * self.n_pairs

    @property
    def n_rx_samples(self):
        return self.n_subcarriers * self.n_rx

    @property
    def total_sparsity(self):
        """Total nonzero-tap budget of the stacked channel vector."""
        return self.sparsity * self.n_pairs


@dataclass(frozen=True)
class ImpairmentParams:
    """The unknown triple the joint estimator searches for."""

    epsilon: float      # normalized CFO
    eta: float          # normalized SFO
    theta: int          # timing error in samples


@dataclass(frozen=True)
class PilotBlock:
    """One frequency-domain pilot vector per transmit antenna (N x n_tx)."""

    symbols: np.ndarray

    def __post_init__(self):
        sym = np.asarray(self.symbols, dtype=complex)
        if sym.ndim != 2:
            raise ValueError("pilot symbols must be a 2-D array of shape (N, n_tx)")
        if not np.allclose(np.abs(sym), 1.0, atol=1e-9):
            raise ValueError("pilot symbols must have unit magnitude")
        object.__setattr__(self, "symbols", sym)

    @property
    def n_subcarriers(self):
        return self.symbols.shape[0]

    @property
    def n_tx(self):
        return self.symbols.shape[1]


@dataclass(frozen=True)
class SparseChannel:
    """Stacked channel vector with per-(tx, rx) sparse supports."""

    taps: np.ndarray
    supports: tuple     # one sorted index array per (tx, rx) pair

    @property
    def n_pairs(self):
        return len(self.supports)


@dataclass(frozen=True)
class EmbeddedChannel:
    """Channel vector with the timing error folded into zero-padded segments."""

    taps: np.ndarray


@dataclass(frozen=True)
class MeasurementSelection:
    """Sorted index set of retained received samples, M per receive antenna."""

    indices: np.ndarray
    m_per_antenna: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp)
        if np.any(np.diff(idx) <= 0):
            raise ValueError("selection indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)

    @property
    def size(self):
        return self.indices.size


@dataclass(frozen=True)
class NoiseSpec:
    """Per-sample complex noise variance and the SNR it corresponds to."""

    sigma_sq: float
    snr_db: float

    def __post_init__(self):
        if self.sigma_sq < 0:
            raise ValueError("sigma_sq must be nonnegative")

    @classmethod
    def from_snr(cls, snr_db, cfg, pilots, params):
        """Noise variance realizing `snr_db` for the configured link.

        SNR is defined as average received sample energy over noise
        variance, with the expectation taken over the random channel:
        E||A h||^2 / (N * n_rx * sigma^2).
        """
        energy = expected_signal_energy(cfg, pilots, params)
        sigma_sq = energy / cfg.n_rx_samples / 10.0 ** (snr_db / 10.0)
        return cls(sigma_sq=sigma_sq, snr_db=float(snr_db))


def cfo_phase_matrix(epsilon, eta, n):
    """Diagonal phase-rotation matrix applied by the carrier offset."""
    return np.diag(_cfo_phase_vec(epsilon, eta, n))


def _cfo_phase_vec(epsilon, eta, n):
    idx = np.arange(n)
    return np.exp(2j * np.pi * epsilon * (1.0 + eta) * idx / n)


def timing_ramp_matrix(theta, n):
    """Diagonal linear-phase ramp applied by an integer timing offset."""
    return np.diag(_timing_ramp_vec(theta, n))


def _timing_ramp_vec(theta, n):
    k = np.arange(n)
    return np.exp(-2j * np.pi * k * theta / n)


def sfo_idft_matrix(eta, n):
    """IDFT-like matrix evaluated on the stretched receive sampling grid.

    Entry (i, k) = exp(j 2 pi k i (1 + eta) / n) / n.  At eta = 0 this is
    the exact inverse of `dft_tap_matrix(n, n)`.
    """
    idx = np.arange(n)
    return np.exp(2j * np.pi * np.outer(idx * (1.0 + eta), idx) / n) / n


def dft_tap_matrix(n, n_taps):
    """First `n_taps` columns of the N-point DFT matrix (tap-to-subcarrier map)."""
    if not 1 <= n_taps <= n:
        raise ValueError("need 1 <= n_taps <= n")
    k = np.arange(n)
    taps = np.arange(n_taps)
    return np.exp(-2j * np.pi * np.outer(k, taps) / n)


def pilot_matrix(pilots):
    """Horizontal concatenation [diag(x_1) | ... | diag(x_nt)], shape N x N*n_tx."""
    n = pilots.n_subcarriers
    blocks = [np.diag(pilots.symbols[:, t]) for t in range(pilots.n_tx)]
    return np.hstack(blocks)


def _pilot_tap_columns(pilots, n_taps):
    """N x (n_taps * n_tx) matrix with column (t, l) = x_t * f_l elementwise.

    Equals pilot_matrix(pilots) @ (I_ntx kron dft_tap_matrix), computed
    without forming the sparse intermediate.
    """
    f = dft_tap_matrix(pilots.n_subcarriers, n_taps)
    return np.hstack([pilots.symbols[:, [t]] * f for t in range(pilots.n_tx)])


def _per_antenna_block(cfg, pilots, epsilon, eta, theta=None, embedded=False):
    """One receive antenna's block of the model matrix."""
    n = cfg.n_subcarriers
    width = cfg.embedded_width if embedded else cfg.max_taps
    cols = _pilot_tap_columns(pilots, width)
    if theta is not None:
        cols = _timing_ramp_vec(theta, n)[:, None] * cols
    block = sfo_idft_matrix(eta, n) @ cols
    return _cfo_phase_vec(epsilon, eta, n)[:, None] * block


def _check_pilots(cfg, pilots):
    if pilots.n_subcarriers != cfg.n_subcarriers or pilots.n_tx != cfg.n_tx:
        raise ValueError("pilot block shape does not match the system config")


def model_matrix(cfg, pilots, params):
    """Full model matrix mapping the stacked channel to the received block.

    Block diagonal with n_rx identical N x (max_taps * n_tx) blocks;
    shape (N * n_rx) x (max_taps * n_tx * n_rx).
    """
    _check_pilots(cfg, pilots)
    block = _per_antenna_block(cfg, pilots, params.epsilon, params.eta, theta=params.theta)
    return np.kron(np.eye(cfg.n_rx), block)


def embedded_model_matrix(cfg, pilots, epsilon, eta):
    """Timing-free model matrix over the widened (timing-embedded) channel.

    Shape (N * n_rx) x ((max_taps + theta_max) * n_tx * n_rx).
    """
    _check_pilots(cfg, pilots)
    block = _per_antenna_block(cfg, pilots, epsilon, eta, embedded=True)
    return np.kron(np.eye(cfg.n_rx), block)


def embed_timing(channel, theta, cfg):
    """Fold an integer timing offset into the widened channel vector.

    Each per-(tx, rx) segment of max_taps taps is placed at offset theta
    inside a zero segment of max_taps + theta_max entries, so that
    model_matrix(theta) @ h == embedded_model_matrix() @ embedded.taps.
    """
    if not 0 <= theta <= cfg.theta_max:
        raise ValueError("theta must lie in [0, theta_max] for the embedded model")
    lm, width = cfg.max_taps, cfg.embedded_width
    out = np.zeros(cfg.n_embedded_total, dtype=complex)
    for p in range(cfg.n_pairs):
        out[p * width + theta : p * width + theta + lm] = channel.taps[p * lm : (p + 1) * lm]
    return EmbeddedChannel(taps=out)


def extract_timing(embedded, theta, cfg):
    """Inverse of embed_timing: recover the max_taps segments at offset theta."""
    lm, width = cfg.max_taps, cfg.embedded_width
    out = np.empty(cfg.n_taps_total, dtype=complex)
    for p in range(cfg.n_pairs):
        out[p * lm : (p + 1) * lm] = embedded.taps[p * width + theta : p * width + theta + lm]
    return out


def generate_channel(cfg, seed):
    """Draw a sparse channel: per pair, `sparsity` uniform tap positions with
    unit-variance circular complex Gaussian coefficients."""
    rng = np.random.default_rng(seed)
    lm, k = cfg.max_taps, cfg.sparsity
    taps = np.zeros(cfg.n_taps_total, dtype=complex)
    supports = []
    for p in range(cfg.n_pairs):
        sup = np.sort(rng.choice(lm, size=k, replace=False))
        gains = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2.0)
        taps[p * lm + sup] = gains
        supports.append(sup)
    return SparseChannel(taps=taps, supports=tuple(supports))


def generate_pilots(cfg, seed):
    """Uniform random unit-magnitude QPSK pilot block, one column per tx antenna."""
    rng = np.random.default_rng(seed)
    re = rng.choice([-1.0, 1.0], size=(cfg.n_subcarriers, cfg.n_tx))
    im = rng.choice([-1.0, 1.0], size=(cfg.n_subcarriers, cfg.n_tx))
    return PilotBlock(symbols=(re + 1j * im) / np.sqrt(2.0))


def received_signal(a, channel_taps, noise, seed):
    """r = A h + w with circular complex Gaussian noise of variance sigma_sq."""
    taps = channel_taps.taps if hasattr(channel_taps, "taps") else np.asarray(channel_taps)
    a = np.asarray(a)
    if a.shape[1] != taps.shape[0]:
        raise ValueError("matrix/channel shape mismatch")
    r = a @ taps
    if noise.sigma_sq > 0:
        rng = np.random.default_rng(seed)
        scale = np.sqrt(noise.sigma_sq / 2.0)
        r = r + scale * (rng.standard_normal(r.shape) + 1j * rng.standard_normal(r.shape))
    return r


def select_samples(cfg, m, seed):
    """Keep m uniformly chosen samples (without replacement) per receive antenna."""
    if not 1 <= m <= cfg.n_subcarriers:
        raise ValueError("need 1 <= m <= n_subcarriers")
    rng = np.random.default_rng(seed)
    n = cfg.n_subcarriers
    per_antenna = [
        a * n + np.sort(rng.choice(n, size=m, replace=False)) for a in range(cfg.n_rx)
    ]
    return MeasurementSelection(indices=np.concatenate(per_antenna), m_per_antenna=m)


def row_subsample(a_or_r, sel):
    """Keep exactly the rows listed in the selection, in order."""
    arr = np.asarray(a_or_r)
    if sel.indices.size and sel.indices[-1] >= arr.shape[0]:
        raise IndexError("selection index out of bounds for input rows")
    return arr[sel.indices]


def expected_signal_energy(cfg, pilots, params):
    """E||A h||^2 over the random sparse channel with unit-variance taps.

    Each tap index is in the support with probability sparsity/max_taps,
    so the expectation is that fraction of the squared Frobenius norm.
    """
    a = model_matrix(cfg, pilots, params)
    return cfg.sparsity / cfg.max_taps * float(np.linalg.norm(a) ** 2)
