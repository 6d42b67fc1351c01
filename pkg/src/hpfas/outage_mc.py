"""Monte Carlo outage estimation (the statistical ground truth).

Trials are fully vectorized in batches, but every trial owns a fixed window
of the Philox word stream (see :mod:`hpfas.channel`), so the outage *count*
for a given (seed, stream_id, trials) is bitwise identical for any batch
size or thread count.  Accumulation is integer, hence order-independent.

Modes
-----
``hpfas``   movable radiator + N-port fluid antenna (port selection),
``pa_only`` movable radiator + conventional single antenna (reuses the
            first port's fading draw, so paired comparisons are pathwise
            valid),
``fa_only`` radiator fixed at the region centre + N-port fluid antenna.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .channel import (
    MultiuserLayout,
    RngStream,
    channel_set_words,
    nlos_from_uniforms,
    padded_words,
)
from .model import ScenarioSingleUser, ScenarioTwoUser

__all__ = [
    "McConfig",
    "McResult",
    "PairedCompare",
    "mc_outage_single",
    "mc_outage_multiuser",
    "mc_paired_compare",
]

_MODES = ("hpfas", "pa_only", "fa_only")


@dataclass(frozen=True)
class McConfig:
    trials: int = 1_000_000
    seed: int = 0
    batch_size: int = 65_536
    confidence_level: float = 0.95

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.confidence_level < 1.0:
            raise ValueError("confidence_level must lie in (0, 1)")


@dataclass(frozen=True)
class McResult:
    outage: float
    standard_error: float
    ci_low: float
    ci_high: float
    trials: int


@dataclass(frozen=True)
class PairedCompare:
    """Common-random-numbers difference of two outage indicators (A - B)."""

    mean_diff: float
    standard_error: float
    ci_low: float
    ci_high: float
    trials: int


def _interval(count, trials, confidence):
    """Wald interval, switching to Wilson when either tail count is below 10."""
    p = count / trials
    se = float(np.sqrt(p * (1.0 - p) / trials))
    z = float(stats.norm.ppf(0.5 + confidence / 2.0))
    if min(count, trials - count) < 10:
        denom = 1.0 + z * z / trials
        centre = (p + z * z / (2.0 * trials)) / denom
        half = z * np.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
        lo, hi = centre - half, centre + half
    else:
        lo, hi = p - z * se, p + z * se
    return p, se, max(lo, 0.0), min(hi, 1.0)


def _check_mode(mode):
    if mode not in _MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {_MODES}")


def _batches(trials, batch_size):
    start = 0
    while start < trials:
        yield start, min(start + batch_size, trials)
        start += batch_size


# ---------------------------------------------------------------------------
# single-user engine
# ---------------------------------------------------------------------------


def _su_stride(blocks):
    return padded_words(2) + padded_words(channel_set_words(blocks))


def _su_indicators(scenario: ScenarioSingleUser, mode, rng, t0, t1):
    """Outage indicators (bool per trial) for trials [t0, t1)."""
    p = scenario.params
    blocks = scenario.blocks
    stride = _su_stride(blocks)
    set_words = channel_set_words(blocks)
    nt = t1 - t0
    u = rng.uniforms(t0 * stride, nt * stride).reshape(nt, stride)

    phi_x = u[:, 0] * p.region_x
    phi_y = (u[:, 1] - 0.5) * p.region_y
    off = padded_words(2)
    nlos = nlos_from_uniforms(u[:, off : off + set_words], blocks, p.correlation)
    if mode == "pa_only":
        nlos = nlos[:, :1]

    if mode == "fa_only" or (mode == "hpfas" and not scenario.pa_alignment):
        d_sq = (phi_x - p.region_x / 2.0) ** 2 + phi_y**2 + p.waveguide_height**2
    else:
        d_sq = phi_y**2 + p.waveguide_height**2
    d = np.sqrt(d_sq)

    kap = p.rician_factor
    phase = (
        2.0 * np.pi * d / p.wavelength
        + 2.0 * np.pi * scenario.feed_distance / p.guided_wavelength
    )
    mix = np.sqrt(kap / (kap + 1.0)) * np.exp(-1j * phase)[:, None] + np.sqrt(
        1.0 / (2.0 * (kap + 1.0))
    ) * nlos
    beta = p.eta0 * d**-p.pathloss_exponent
    snr = (p.tx_power / p.noise_power) * beta[:, None] * np.abs(mix) ** 2
    return snr.max(axis=1) < p.snr_threshold


def mc_outage_single(scenario: ScenarioSingleUser, mode, cfg: McConfig, stream_id=0):
    """Monte Carlo outage probability of the single-user link."""
    _check_mode(mode)
    rng = RngStream(cfg.seed, stream_id)
    count = 0
    for t0, t1 in _batches(cfg.trials, cfg.batch_size):
        count += int(np.count_nonzero(_su_indicators(scenario, mode, rng, t0, t1)))
    p, se, lo, hi = _interval(count, cfg.trials, cfg.confidence_level)
    return McResult(outage=p, standard_error=se, ci_low=lo, ci_high=hi, trials=cfg.trials)


# ---------------------------------------------------------------------------
# multi-user engine
# ---------------------------------------------------------------------------


def _mu_stride(blocks, k_users, m_pas):
    return padded_words(2 * k_users) + k_users * k_users * m_pas * padded_words(
        channel_set_words(blocks)
    )


def _mix_from_set(u_set, blocks, params, d, feed_dist):
    """Normalized fading mixture sqrt(k/(k+1)) e^{-j phase} + sqrt(1/(2(k+1))) nlos."""
    nlos = nlos_from_uniforms(u_set, blocks, params.correlation)
    kap = params.rician_factor
    phase = (
        2.0 * np.pi * d / params.wavelength
        + 2.0 * np.pi * feed_dist / params.guided_wavelength
    )
    return np.sqrt(kap / (kap + 1.0)) * np.exp(-1j * phase)[:, None] + np.sqrt(
        1.0 / (2.0 * (kap + 1.0))
    ) * nlos


def _two_user_indicators(scenario: ScenarioTwoUser, mode, rng, t0, t1):
    """Per-user outage indicators for the two-waveguide layout."""
    p = scenario.params
    blocks = scenario.blocks
    set_words = channel_set_words(blocks)
    set_stride = padded_words(set_words)
    stride = _mu_stride(blocks, 2, 1)
    nt = t1 - t0
    u = rng.uniforms(t0 * stride, nt * stride).reshape(nt, stride)

    x1 = u[:, 0] * p.region_x
    y1 = -0.5 * p.region_y + u[:, 1] * (0.5 * p.region_y)  # region 1: (-D2/2, 0)
    x2 = u[:, 2] * p.region_x
    y2 = u[:, 3] * (0.5 * p.region_y)  # region 2: (0, D2/2)
    h = p.waveguide_height

    if mode == "fa_only":
        c1, c2 = scenario.conventional_bs_centers
        d_11 = np.sqrt((x1 - c1[0]) ** 2 + (y1 - c1[1]) ** 2 + h * h)
        d_12 = np.sqrt((x1 - c2[0]) ** 2 + (y1 - c2[1]) ** 2 + h * h)
        d_22 = np.sqrt((x2 - c2[0]) ** 2 + (y2 - c2[1]) ** 2 + h * h)
        d_21 = np.sqrt((x2 - c1[0]) ** 2 + (y2 - c1[1]) ** 2 + h * h)
    else:
        # aligned radiators: PA_k x tracks user k's x
        d_11 = np.sqrt((y1 - scenario.pa1_y) ** 2 + h * h)
        d_12 = np.sqrt((x1 - x2) ** 2 + (y1 - scenario.pa2_y) ** 2 + h * h)
        d_22 = np.sqrt((y2 - scenario.pa2_y) ** 2 + h * h)
        d_21 = np.sqrt((x2 - x1) ** 2 + (y2 - scenario.pa1_y) ** 2 + h * h)

    base = padded_words(4)
    fd = (scenario.feed_distance_1, scenario.feed_distance_2)

    def mix(set_idx, d, wg):
        lo = base + set_idx * set_stride
        return _mix_from_set(u[:, lo : lo + set_words], blocks, p, d, fd[wg])

    # sets: (user k, waveguide i) -> index 2k + i
    m_11 = mix(0, d_11, 0)
    m_12 = mix(1, d_12, 1)
    m_21 = mix(2, d_21, 0)
    m_22 = mix(3, d_22, 1)
    if mode == "pa_only":
        m_11, m_12, m_21, m_22 = (m[:, :1] for m in (m_11, m_12, m_21, m_22))

    eps = p.pathloss_exponent
    sir1 = (d_12 / d_11)[:, None] ** eps * np.abs(m_11) ** 2 / np.abs(m_12) ** 2
    sir2 = (d_21 / d_22)[:, None] ** eps * np.abs(m_22) ** 2 / np.abs(m_21) ** 2
    gth = p.snr_threshold
    return sir1.max(axis=1) < gth, sir2.max(axis=1) < gth


def _general_indicators(layout: MultiuserLayout, mode, rng, t0, t1):
    """Outage indicators per user for a general (K, M) layout."""
    p = layout.params
    blocks = layout.blocks
    K = layout.num_users
    M = layout.radiators_per_waveguide
    set_words = channel_set_words(blocks)
    set_stride = padded_words(set_words)
    stride = _mu_stride(blocks, K, M)
    nt = t1 - t0
    u = rng.uniforms(t0 * stride, nt * stride).reshape(nt, stride)

    users = np.empty((K, nt, 3))
    for k, (x_lo, x_hi, y_lo, y_hi) in enumerate(layout.user_regions):
        users[k, :, 0] = x_lo + u[:, 2 * k] * (x_hi - x_lo)
        users[k, :, 1] = y_lo + u[:, 2 * k + 1] * (y_hi - y_lo)
        users[k, :, 2] = 0.0

    base = padded_words(2 * K)
    n_ports = 1 if mode == "pa_only" else blocks.num_ports
    outs = []
    for k in range(K):
        desired = np.zeros((nt, n_ports), dtype=complex)
        interference = np.zeros((nt, n_ports), dtype=complex)
        for i in range(K):
            for m in range(M):
                j = (k * K + i) * M + m
                lo = base + j * set_stride
                d = np.sqrt(((users[k] - layout.pa_positions[i, m]) ** 2).sum(axis=1))
                mix = _mix_from_set(
                    u[:, lo : lo + set_words], blocks, p, d, layout.feed_distances[i, m]
                )[:, :n_ports]
                amp = np.sqrt(p.eta0 * d**-p.pathloss_exponent)[:, None]
                term = layout.weights[i, m] * amp * mix
                if i == k:
                    desired += term
                else:
                    interference += term
        sir = np.abs(desired) ** 2 / np.abs(interference) ** 2
        outs.append(sir.max(axis=1) < p.snr_threshold)
    return outs


def mc_outage_multiuser(scenario, mode, cfg: McConfig, stream_id=0):
    """Monte Carlo SIR outage per user (interference limited, noise-free).

    Accepts a :class:`ScenarioTwoUser` (aligned radiators, analytic-model
    counterpart) or a general :class:`MultiuserLayout` with K waveguides and
    M radiators each.  Returns one :class:`McResult` per user.
    """
    _check_mode(mode)
    if isinstance(scenario, ScenarioTwoUser):
        indicator_fn = lambda rng, t0, t1: _two_user_indicators(scenario, mode, rng, t0, t1)
        n_users = 2
    elif isinstance(scenario, MultiuserLayout):
        if mode == "fa_only":
            raise ValueError("fa_only is defined only for the two-user scenario")
        indicator_fn = lambda rng, t0, t1: _general_indicators(scenario, mode, rng, t0, t1)
        n_users = scenario.num_users
    else:
        raise TypeError("scenario must be ScenarioTwoUser or MultiuserLayout")

    rng = RngStream(cfg.seed, stream_id)
    counts = [0] * n_users
    for t0, t1 in _batches(cfg.trials, cfg.batch_size):
        for k, ind in enumerate(indicator_fn(rng, t0, t1)):
            counts[k] += int(np.count_nonzero(ind))
    results = []
    for c in counts:
        p, se, lo, hi = _interval(c, cfg.trials, cfg.confidence_level)
        results.append(
            McResult(outage=p, standard_error=se, ci_low=lo, ci_high=hi, trials=cfg.trials)
        )
    return results


# ---------------------------------------------------------------------------
# paired comparison (common random numbers)
# ---------------------------------------------------------------------------


def _indicator_driver(scenario, mode):
    _check_mode(mode)
    if isinstance(scenario, ScenarioSingleUser):
        stride = _su_stride(scenario.blocks)
        fn = lambda rng, t0, t1: _su_indicators(scenario, mode, rng, t0, t1)
    elif isinstance(scenario, ScenarioTwoUser):
        stride = _mu_stride(scenario.blocks, 2, 1)
        fn = lambda rng, t0, t1: _two_user_indicators(scenario, mode, rng, t0, t1)[0]
    else:
        raise TypeError("paired comparison needs ScenarioSingleUser or ScenarioTwoUser")
    return stride, fn


def mc_paired_compare(scenario_a, mode_a, scenario_b, mode_b, cfg: McConfig, stream_id=0):
    """Mean difference of outage indicators (A - B) on shared random draws.

    Both configurations must consume identical per-trial draw counts
    (identical block structures and scenario family), so the same stream
    window feeds both; for two-user scenarios user 1 is compared.
    """
    stride_a, fn_a = _indicator_driver(scenario_a, mode_a)
    stride_b, fn_b = _indicator_driver(scenario_b, mode_b)
    if stride_a != stride_b:
        raise ValueError(
            f"scenarios consume different draw counts per trial ({stride_a} vs {stride_b})"
        )
    rng = RngStream(cfg.seed, stream_id)
    n_pos = 0  # A outage, B not
    n_neg = 0  # B outage, A not
    for t0, t1 in _batches(cfg.trials, cfg.batch_size):
        ia = fn_a(rng, t0, t1)
        ib = fn_b(rng, t0, t1)
        n_pos += int(np.count_nonzero(ia & ~ib))
        n_neg += int(np.count_nonzero(~ia & ib))
    n = cfg.trials
    mean = (n_pos - n_neg) / n
    var = (n_pos + n_neg) / n - mean**2
    se = float(np.sqrt(max(var, 0.0) / n))
    z = float(stats.norm.ppf(0.5 + cfg.confidence_level / 2.0))
    return PairedCompare(
        mean_diff=mean,
        standard_error=se,
        ci_low=mean - z * se,
        ci_high=mean + z * se,
        trials=n,
    )
