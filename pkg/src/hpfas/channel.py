"""Channel realizations: waveguide-fed line-of-sight links with
block-correlated Rician fading at the fluid antenna.

Randomness comes from counter-based Philox streams.  Every trial owns a
fixed, block-aligned window of raw 64-bit words inside its stream, so draws
are bitwise reproducible for a given (seed, stream_id, trial) regardless of
batching or thread count.  The batched Monte Carlo engine in
:mod:`hpfas.outage_mc` consumes the same word layout; the per-trial
samplers here are its single-draw equivalents.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.random import Philox

from .model import BlockStructure, ScenarioTwoUser, SystemParams

__all__ = [
    "RngStream",
    "ChannelRealization",
    "MultiuserLayout",
    "gaussians_from_uniforms",
    "los_gain",
    "sample_nlos_block",
    "sample_channel",
    "sample_multiuser_channels",
    "channel_set_words",
    "padded_words",
]

_WORD_BLOCK = 4  # Philox-4x64 emits four 64-bit words per counter tick


def padded_words(n):
    """Round a per-trial word budget up to a whole number of Philox blocks."""
    return -(-int(n) // _WORD_BLOCK) * _WORD_BLOCK


def channel_set_words(blocks: BlockStructure):
    """Raw words consumed by one fading draw (block pairs + port pairs)."""
    return 2 * blocks.num_blocks + 2 * blocks.num_ports


@dataclass(frozen=True)
class RngStream:
    """Addressable counter-based random stream.

    Identical (seed, stream_id) always reproduce identical words.  Windows
    are addressed by absolute word offset (multiple of 4); disjoint windows
    are statistically independent, which is how per-trial substreams are
    carved out of one stream.
    """

    seed: int
    stream_id: int = 0

    def raw_words(self, start_word, count):
        if start_word % _WORD_BLOCK:
            raise ValueError("start_word must be a multiple of 4")
        bg = Philox(key=np.array([self.seed, self.stream_id], dtype=np.uint64))
        if start_word:
            bg.advance(start_word // _WORD_BLOCK)
        return bg.random_raw(int(count))

    def uniforms(self, start_word, count):
        """Uniform doubles strictly inside (0, 1), one word each."""
        w = self.raw_words(start_word, count)
        return ((w >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def gaussians_from_uniforms(u):
    """Box-Muller transform; consumes uniforms in pairs along the last axis.

    Fixed consumption (two uniforms -> two standard normals) keeps trial
    windows aligned no matter how work is batched.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[-1] % 2:
        raise ValueError("need an even number of uniforms")
    u1 = u[..., 0::2]
    u2 = u[..., 1::2]
    rho = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * np.pi * u2
    z = np.empty_like(u)
    z[..., 0::2] = rho * np.cos(ang)
    z[..., 1::2] = rho * np.sin(ang)
    return z


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the N complex port gains of a user-radiator pair."""

    port_gains: np.ndarray
    los_phase: float
    distance: float


def los_gain(d, d0, params: SystemParams):
    """Deterministic line-of-sight gain sqrt(eta0/d^eps) e^{-j2pi d/lambda} e^{-j2pi d0/lambda_g}."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("propagation distance must be positive")
    if np.any(np.asarray(d0, dtype=float) < 0.0):
        raise ValueError("feed distance must be nonnegative")
    phase = 2.0 * np.pi * d / params.wavelength + 2.0 * np.pi * np.asarray(
        d0, dtype=float
    ) / params.guided_wavelength
    amp = np.sqrt(params.eta0 / d**params.pathloss_exponent)
    out = amp * np.exp(-1j * phase)
    return complex(out) if out.ndim == 0 else out


def nlos_from_uniforms(u_set, blocks: BlockStructure, mu):
    """Map one window of uniforms to the N correlated NLoS port coefficients.

    Layout per set: 2B words for the block-common Gaussian pairs, then 2N
    words for the port-local pairs.  Within block b every port shares
    (x_b, y_b); the composite coefficient is
    sqrt(1-mu^2) x_n + mu x_b + j (sqrt(1-mu^2) y_n + mu y_b).
    """
    nb = blocks.num_blocks
    z = gaussians_from_uniforms(u_set)
    xb = z[..., 0 : 2 * nb : 2]
    yb = z[..., 1 : 2 * nb : 2]
    xn = z[..., 2 * nb :: 2]
    yn = z[..., 2 * nb + 1 :: 2]
    idx = blocks.port_block_index
    root = np.sqrt(1.0 - mu * mu)
    return (root * xn + mu * xb[..., idx]) + 1j * (root * yn + mu * yb[..., idx])


def sample_nlos_block(blocks: BlockStructure, mu, rng: RngStream, trial=0):
    """One draw of the N NLoS coefficients (Eq.-level single-trial sampler)."""
    stride = padded_words(channel_set_words(blocks))
    u = rng.uniforms(trial * stride, channel_set_words(blocks))
    return nlos_from_uniforms(u, blocks, mu)


def sample_channel(
    user_pos,
    pa_pos,
    feed_dist,
    params: SystemParams,
    blocks: BlockStructure,
    rng: RngStream,
    trial=0,
):
    """Sample the Rician port-gain vector for one user-radiator pair.

    h_n = sqrt(beta(d)) (sqrt(kappa/(kappa+1)) e^{-j phase}
          + sqrt(1/(2(kappa+1))) h_n^{NLoS}),   d = |user - pa|.
    """
    user_pos = np.asarray(user_pos, dtype=float)
    pa_pos = np.asarray(pa_pos, dtype=float)
    d = float(np.sqrt(((user_pos - pa_pos) ** 2).sum()))
    if d <= 0.0:
        raise ValueError("user and radiator positions coincide")
    nlos = sample_nlos_block(blocks, params.correlation, rng, trial=trial)
    kap = params.rician_factor
    phase = (
        2.0 * np.pi * d / params.wavelength
        + 2.0 * np.pi * float(feed_dist) / params.guided_wavelength
    )
    beta = params.eta0 * d**-params.pathloss_exponent
    gains = np.sqrt(beta) * (
        np.sqrt(kap / (kap + 1.0)) * np.exp(-1j * phase)
        + np.sqrt(1.0 / (2.0 * (kap + 1.0))) * nlos
    )
    return ChannelRealization(port_gains=gains, los_phase=phase, distance=d)


@dataclass(frozen=True)
class MultiuserLayout:
    """General K-waveguide, M-radiators-per-waveguide downlink layout.

    ``pa_positions`` has shape (K, M, 3); ``weights`` (K, M) must be
    unit-norm per waveguide; ``user_regions`` lists one (x_lo, x_hi, y_lo,
    y_hi) rectangle per user.  Fading is independent across user-radiator
    pairs; the correlation block structure applies at each user's fluid
    antenna.
    """

    params: SystemParams
    blocks: BlockStructure
    pa_positions: np.ndarray
    weights: np.ndarray
    user_regions: tuple
    feed_distances: np.ndarray = field(default=None)

    def __post_init__(self):
        pa = np.asarray(self.pa_positions, dtype=float)
        w = np.asarray(self.weights, dtype=complex)
        if pa.ndim != 3 or pa.shape[2] != 3:
            raise ValueError("pa_positions must have shape (K, M, 3)")
        if w.shape != pa.shape[:2]:
            raise ValueError("weights must have shape (K, M)")
        norms = (np.abs(w) ** 2).sum(axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError(f"per-waveguide weight norms must be 1, got {norms}")
        if len(self.user_regions) != pa.shape[0]:
            raise ValueError("need one user region per waveguide")
        fd = self.feed_distances
        fd = np.zeros(pa.shape[:2]) if fd is None else np.asarray(fd, dtype=float)
        if fd.shape != pa.shape[:2]:
            raise ValueError("feed_distances must have shape (K, M)")
        object.__setattr__(self, "pa_positions", pa)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "feed_distances", fd)
        object.__setattr__(self, "user_regions", tuple(tuple(map(float, r)) for r in self.user_regions))

    @property
    def num_users(self):
        return self.pa_positions.shape[0]

    @property
    def radiators_per_waveguide(self):
        return self.pa_positions.shape[1]


def two_user_fixed_layout(scenario: ScenarioTwoUser):
    """The K=2, M=1 layout with radiators pinned at the region-centre x.

    The aligned variant (radiator x tracking the user's x) is handled inside
    the samplers because it changes per trial.
    """
    p = scenario.params
    pa = np.array(
        [
            [[p.region_x / 2.0, scenario.pa1_y, p.waveguide_height]],
            [[p.region_x / 2.0, scenario.pa2_y, p.waveguide_height]],
        ]
    )
    regions = (
        (0.0, p.region_x, -p.region_y / 2.0, 0.0),
        (0.0, p.region_x, 0.0, p.region_y / 2.0),
    )
    return MultiuserLayout(
        params=p,
        blocks=scenario.blocks,
        pa_positions=pa,
        weights=np.ones((2, 1), dtype=complex),
        user_regions=regions,
        feed_distances=np.array(
            [[scenario.feed_distance_1], [scenario.feed_distance_2]]
        ),
    )


def sample_multiuser_channels(layout, user_positions, rng: RngStream, trial=0):
    """Channels from every radiator to every user for one trial.

    Accepts a :class:`MultiuserLayout` or a :class:`ScenarioTwoUser` (the
    latter applies the radiator-x-tracks-user-x alignment).  Returns a
    nested list ``ch[k][i][m]``: the realization from radiator m of
    waveguide i at user k.  Draws for distinct (k, i, m) triples come from
    disjoint sub-windows, so they are independent.
    """
    if isinstance(layout, ScenarioTwoUser):
        scen = layout
        layout = two_user_fixed_layout(scen)
        pa = layout.pa_positions.copy()
        pa[0, 0, 0] = user_positions[0][0]
        pa[1, 0, 0] = user_positions[1][0]
    else:
        pa = layout.pa_positions
    users = np.asarray(user_positions, dtype=float)
    k_users = layout.num_users
    m_pas = layout.radiators_per_waveguide
    if users.shape != (k_users, 3):
        raise ValueError(f"user_positions must have shape ({k_users}, 3)")

    set_words = channel_set_words(layout.blocks)
    set_stride = padded_words(set_words)
    sets_per_trial = k_users * k_users * m_pas
    base = trial * sets_per_trial * set_stride
    out = []
    for k in range(k_users):
        per_wg = []
        for i in range(k_users):
            per_pa = []
            for m in range(m_pas):
                j = (k * k_users + i) * m_pas + m
                u = rng.uniforms(base + j * set_stride, set_words)
                nlos = nlos_from_uniforms(u, layout.blocks, layout.params.correlation)
                d = float(np.sqrt(((users[k] - pa[i, m]) ** 2).sum()))
                kap = layout.params.rician_factor
                phase = (
                    2.0 * np.pi * d / layout.params.wavelength
                    + 2.0
                    * np.pi
                    * layout.feed_distances[i, m]
                    / layout.params.guided_wavelength
                )
                beta = layout.params.eta0 * d**-layout.params.pathloss_exponent
                gains = np.sqrt(beta) * (
                    np.sqrt(kap / (kap + 1.0)) * np.exp(-1j * phase)
                    + np.sqrt(1.0 / (2.0 * (kap + 1.0))) * nlos
                )
                per_pa.append(
                    ChannelRealization(port_gains=gains, los_phase=phase, distance=d)
                )
            per_wg.append(per_pa)
        out.append(per_wg)
    return out
