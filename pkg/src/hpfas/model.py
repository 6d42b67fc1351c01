"""System parameters, geometry and threshold algebra.

Everything downstream (analytic outage expressions, the Monte Carlo engine,
the CLI) consumes the immutable value types defined here.  All internal
quantities are SI (watts, meters, Hz) and linear ratios; dBm/dB/GHz values
are converted exactly once, at the configuration boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

SPEED_OF_LIGHT = 299792458.0

__all__ = [
    "SPEED_OF_LIGHT",
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "SystemParams",
    "BlockStructure",
    "ScenarioSingleUser",
    "ScenarioTwoUser",
    "OutageEstimate",
    "threshold_C",
    "threshold_C_tilde",
    "gamma_tilde_mu",
    "sfa_delta",
    "sfa_delta_from_C",
    "sfa_delta_mu",
]


def dbm_to_watts(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(p_w):
    return 10.0 * np.log10(np.asarray(p_w, dtype=float)) + 30.0


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SystemParams:
    """Physical and statistical constants of one link configuration.

    ``correlation`` is the amplitude coupling mu of the block fading model
    (the literature usually quotes mu^2).  ``snr_threshold`` is linear;
    ``tx_power`` and ``noise_power`` are watts.  ``fa_length`` is recorded
    for completeness but does not enter the block correlation model.
    """

    carrier_frequency: float = 28e9
    effective_refractive_index: float = 1.4
    pathloss_exponent: float = 2.5
    rician_factor: float = 7.0
    correlation: float = math.sqrt(0.97)
    tx_power: float = dbm_to_watts(15.0)
    noise_power: float = dbm_to_watts(-80.0)
    snr_threshold: float = db_to_linear(10.0)
    waveguide_height: float = 3.0
    region_x: float = 20.0
    region_y: float = 20.0
    fa_length: float = 2.0

    def __post_init__(self):
        if self.carrier_frequency <= 0.0:
            raise ValueError("carrier_frequency must be positive")
        if self.effective_refractive_index <= 0.0:
            raise ValueError("effective_refractive_index must be positive")
        if not 0.0 < self.correlation < 1.0:
            raise ValueError("correlation mu must lie in (0, 1)")
        if self.pathloss_exponent < 2.0:
            raise ValueError("pathloss_exponent must be >= 2")
        if self.rician_factor < 0.0:
            raise ValueError("rician_factor must be nonnegative")
        if self.tx_power <= 0.0 or self.noise_power <= 0.0:
            raise ValueError("tx_power and noise_power must be positive")
        if self.snr_threshold < 0.0:
            raise ValueError("snr_threshold must be nonnegative")
        if self.waveguide_height <= 0.0:
            raise ValueError("waveguide_height must be positive")
        if self.region_x <= 0.0 or self.region_y <= 0.0:
            raise ValueError("region dimensions must be positive")

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def guided_wavelength(self):
        return self.wavelength / self.effective_refractive_index

    @property
    def eta0(self):
        return self.wavelength**2 / (4.0 * math.pi) ** 2

    @property
    def mu_sq(self):
        return self.correlation**2

    @classmethod
    def from_db_units(
        cls,
        fc_ghz=28.0,
        n_eff=1.4,
        pathloss_exp=2.5,
        rician_kappa=7.0,
        mu_squared=0.97,
        tx_power_dbm=15.0,
        noise_dbm=-80.0,
        gamma_th_db=10.0,
        h_m=3.0,
        d1_m=20.0,
        d2_m=20.0,
        fa_length=2.0,
    ):
        """Build params from the unit-suffixed fields used in config files."""
        return cls(
            carrier_frequency=fc_ghz * 1e9,
            effective_refractive_index=n_eff,
            pathloss_exponent=pathloss_exp,
            rician_factor=rician_kappa,
            correlation=math.sqrt(mu_squared),
            tx_power=float(dbm_to_watts(tx_power_dbm)),
            noise_power=float(dbm_to_watts(noise_dbm)),
            snr_threshold=float(db_to_linear(gamma_th_db)),
            waveguide_height=h_m,
            region_x=d1_m,
            region_y=d2_m,
            fa_length=fa_length,
        )

    def with_(self, **kwargs):
        return replace(self, **kwargs)


@dataclass(frozen=True)
class BlockStructure:
    """Partition of the N fluid-antenna ports into correlation blocks."""

    num_ports: int
    block_sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        object.__setattr__(self, "block_sizes", sizes)
        if self.num_ports < 1:
            raise ValueError("num_ports must be >= 1")
        if any(s < 1 for s in sizes):
            raise ValueError("block sizes must be positive")
        if sum(sizes) != self.num_ports:
            raise ValueError(
                f"block sizes {sizes} must sum to num_ports={self.num_ports}"
            )

    @classmethod
    def equal_blocks(cls, num_ports=20, num_blocks=4):
        if num_ports % num_blocks:
            raise ValueError("num_ports must be divisible by num_blocks")
        size = num_ports // num_blocks
        return cls(num_ports=num_ports, block_sizes=(size,) * num_blocks)

    @classmethod
    def single_port(cls):
        return cls(num_ports=1, block_sizes=(1,))

    @property
    def num_blocks(self):
        return len(self.block_sizes)

    @property
    def port_block_index(self):
        """Block index of each port, shape (num_ports,)."""
        return np.repeat(np.arange(self.num_blocks), self.block_sizes)

    def distinct_sizes(self):
        """Distinct block sizes with multiplicities, ascending."""
        sizes, counts = np.unique(self.block_sizes, return_counts=True)
        return list(zip(sizes.tolist(), counts.tolist()))


@dataclass(frozen=True)
class ScenarioSingleUser:
    """Single waveguide-fed radiator serving one fluid-antenna user.

    With ``pa_alignment`` the radiator x-position tracks the user x, so the
    link distance reduces to sqrt(phi_y^2 + h^2).  Disabling alignment pins
    the radiator at the region centre x (Monte Carlo exploration only; the
    analytic expressions assume alignment).
    """

    params: SystemParams = field(default_factory=SystemParams)
    blocks: BlockStructure = field(default_factory=BlockStructure.equal_blocks)
    pa_alignment: bool = True
    feed_distance: float = 0.0


@dataclass(frozen=True)
class ScenarioTwoUser:
    """Two waveguides, two users, one radiator each (interference limited).

    User 1 lives in y in (-D2/2, 0) with its radiator line at y = -D2/4;
    user 2 mirrors it at +D2/4.  Feed distances affect phases only.
    """

    params: SystemParams = field(default_factory=SystemParams)
    blocks: BlockStructure = field(default_factory=BlockStructure.equal_blocks)
    feed_distance_1: float = 0.0
    feed_distance_2: float = 0.0

    @property
    def pa1_y(self):
        return -self.params.region_y / 4.0

    @property
    def pa2_y(self):
        return +self.params.region_y / 4.0

    @property
    def conventional_bs_centers(self):
        """Fixed antenna positions used by the conventional-BS baseline."""
        p = self.params
        return (
            np.array([p.region_x / 2.0, -p.region_y / 4.0, p.waveguide_height]),
            np.array([p.region_x / 2.0, +p.region_y / 4.0, p.waveguide_height]),
        )


@dataclass(frozen=True)
class OutageEstimate:
    """Outage probability with method tag and error metadata.

    ``converged`` is cleared when any underlying quadrature hit its
    subdivision cap; the value is then the best available estimate.
    """

    value: float
    method: str  # one of: exact, sfa, closed_form, monte_carlo
    error: float = 0.0
    trials: int | None = None
    converged: bool = True

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"outage value {self.value} outside [0, 1]")
        if self.error < 0.0:
            raise ValueError("error must be nonnegative")


def threshold_C(params: SystemParams, phi_y):
    """Normalized outage threshold for the aligned single-user link.

    C = 2(kappa+1) gamma_th sigma^2 (phi_y^2+h^2)^(eps/2)
        / (P_t eta0 (1-mu^2)).
    """
    d_sq = np.asarray(phi_y, dtype=float) ** 2 + params.waveguide_height**2
    num = (
        2.0
        * (params.rician_factor + 1.0)
        * params.snr_threshold
        * params.noise_power
        * d_sq ** (params.pathloss_exponent / 2.0)
    )
    return num / (params.tx_power * params.eta0 * (1.0 - params.mu_sq))


def threshold_C_tilde(params: SystemParams, phi_x, phi_y):
    """Threshold with the antenna fixed at the region centre x = D1/2."""
    d_sq = (
        (np.asarray(phi_x, dtype=float) - params.region_x / 2.0) ** 2
        + np.asarray(phi_y, dtype=float) ** 2
        + params.waveguide_height**2
    )
    num = (
        2.0
        * (params.rician_factor + 1.0)
        * params.snr_threshold
        * params.noise_power
        * d_sq ** (params.pathloss_exponent / 2.0)
    )
    return num / (params.tx_power * params.eta0 * (1.0 - params.mu_sq))


def gamma_tilde_mu(params: SystemParams, user1_pos, pa1_pos, pa2_pos):
    """Effective SIR threshold of user 1 given desired/interfering radiators.

    gamma_tilde = (|psi1 - pa1|^eps / |psi1 - pa2|^eps) * gamma_th.
    Positions are 3-vectors (arrays broadcast over leading axes).
    """
    user1_pos = np.asarray(user1_pos, dtype=float)
    pa1_pos = np.asarray(pa1_pos, dtype=float)
    pa2_pos = np.asarray(pa2_pos, dtype=float)
    d1_sq = ((user1_pos - pa1_pos) ** 2).sum(axis=-1)
    d2_sq = ((user1_pos - pa2_pos) ** 2).sum(axis=-1)
    ratio = (d1_sq / d2_sq) ** (params.pathloss_exponent / 2.0)
    return ratio * params.snr_threshold


_DEGENERATE_DEN = 1e-9


def sfa_delta_from_C(C, L, mu_sq):
    """Step-function-approximation threshold delta as a function of C.

    Implements the printed single-user SFA threshold.  The denominator
    (L-1)/(2 sqrt(2 pi)) + 1/(2 sqrt(C)) - sqrt(C) crosses zero as C grows;
    near the crossing the formula is evaluated at C nudged by 1e-6 relative,
    and any negative delta produced in the breakdown window just above the
    crossing is clamped to zero (the monotone continuation: the exact block
    factor is negligibly small throughout that window for the noncentrality
    values this model produces).
    """
    C = np.asarray(C, dtype=float)
    L = int(L)
    if np.any(C < 0.0):
        raise ValueError("C must be nonnegative")
    out = np.zeros_like(C)
    pos = C > 0.0
    if not np.any(pos):
        return float(out) if out.ndim == 0 else out

    def formula(c):
        root = np.sqrt(c)
        num = (L - 1) / np.sqrt(2.0 * np.pi) * root + 0.5
        den = (L - 1) / (2.0 * np.sqrt(2.0 * np.pi)) + 0.5 / root - root
        return root, num, den

    c = np.where(pos, C, 1.0)
    root, num, den = formula(c)
    near_pole = np.abs(den) < _DEGENERATE_DEN
    if np.any(near_pole):
        root2, num2, den2 = formula(c * (1.0 - 1e-6))
        root = np.where(near_pole, root2, root)
        num = np.where(near_pole, num2, num)
        den = np.where(near_pole, den2, den)
    delta = np.sqrt((1.0 - mu_sq) / mu_sq) * (root + num / den)
    out = np.where(pos, np.maximum(delta, 0.0), 0.0)
    return float(out) if out.ndim == 0 else out


def sfa_delta(phi_y, L, params: SystemParams):
    """Single-user SFA threshold delta(phi_y, L)."""
    return sfa_delta_from_C(threshold_C(params, phi_y), L, params.mu_sq)


def sfa_delta_mu(r, L, gamma_tilde, mu):
    """Two-user SFA threshold delta_tilde(r, L) for effective threshold gamma_tilde.

    delta(r) = sqrt(mu^2 r / (2 (1-mu^2) g)) + sqrt(same + 1/(2 g)) with
    g = gamma_tilde, then
    delta_tilde = ((1-mu^2)/mu^2) * [delta + ((L-1)/sqrt(2 pi) + 1/(2 delta))
                  / ((L-1)/sqrt(2 pi) * 1/(2 delta) + 2)]^2.
    Finite for r = 0 because delta(0) = sqrt(1/(2 g)) > 0.
    """
    r = np.asarray(r, dtype=float)
    g = np.asarray(gamma_tilde, dtype=float)
    if np.any(g <= 0.0):
        raise ValueError("gamma_tilde must be positive")
    mu_sq = float(mu) ** 2
    base = mu_sq * r / (2.0 * (1.0 - mu_sq) * g)
    delta = np.sqrt(base) + np.sqrt(base + 0.5 / g)
    c1 = (int(L) - 1) / np.sqrt(2.0 * np.pi)
    inv2d = 0.5 / delta
    out = (1.0 - mu_sq) / mu_sq * (delta + (c1 + inv2d) / (c1 * inv2d + 2.0)) ** 2
    if np.ndim(r) == 0 and np.ndim(gamma_tilde) == 0:
        return float(out)
    return out
