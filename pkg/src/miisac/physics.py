"""Magneto-inductive channel physics.

Complex channel gain between two coaxial coils in a homogeneous lossy
medium, its analytic partial derivatives with respect to range and
conductivity, and the derived quantities (attenuation constant, skin
depth, electrical distance, matched-filter noise level, per-symbol SNR).

All quantities are SI; unit conversions (e.g. dBm) happen at the I/O
boundary, never here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Physical constants (SI units), fixed by definition
MU0 = 4.0 * math.pi * 1e-7          # magnetic permeability of free space [H/m]
K_BOLTZMANN = 1.380649e-23          # Boltzmann constant [J/K]

# Convenience conductivity presets [S/m]. Only 0.01 S/m is tied to the
# published MLE runs; the rest are conventional textbook values.
MEDIUM_PRESETS = {
    "dry_soil": 1e-3,
    "typical_soil": 1e-2,
    "wet_soil": 1e-1,
    "seawater": 4.0,
}


class DomainError(ValueError):
    """Raised when a physical argument leaves its valid domain."""


@dataclass(frozen=True)
class CoilSpec:
    """Coil geometry: radius [m] and integer turn count."""

    radius_a: float = 0.15
    turns_n: int = 20

    def __post_init__(self):
        if self.radius_a <= 0:
            raise DomainError(f"coil radius must be positive, got {self.radius_a}")
        if self.turns_n < 1:
            raise DomainError(f"turn count must be >= 1, got {self.turns_n}")


@dataclass(frozen=True)
class LinkConfig:
    """Full physical scenario for one MI link.

    p_tx is per-symbol transmit power in watts (0 dBm = 1e-3 W).
    z_ref normalizes the voltage transfer; it rescales |h| but cancels
    out of every correlation / penalty quantity.
    """

    coil: CoilSpec = CoilSpec()
    f0: float = 10e3            # operating frequency [Hz]
    z_ref: float = 50.0         # reference impedance [ohm]
    p_tx: float = 1e-3          # per-symbol transmit power [W]
    pilots_l: int = 100         # pilot count
    bandwidth_b: float = 1e3    # noise bandwidth [Hz]
    temp_t0: float = 290.0      # noise temperature [K]

    def __post_init__(self):
        for name in ("f0", "z_ref", "p_tx", "bandwidth_b", "temp_t0"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if self.pilots_l < 1:
            raise DomainError(f"pilots_l must be >= 1, got {self.pilots_l}")

    @property
    def noise_psd(self) -> float:
        """Thermal noise PSD N0 = k_B * T0 [W/Hz]."""
        return K_BOLTZMANN * self.temp_t0


@dataclass(frozen=True)
class Theta:
    """Unknown parameter pair: coil separation r [m], conductivity sigma_m [S/m]."""

    r: float
    sigma_m: float

    def __post_init__(self):
        if not (self.r > 0):
            raise DomainError(f"range must be positive, got {self.r}")
        if not (self.sigma_m > 0):
            raise DomainError(f"conductivity must be positive, got {self.sigma_m}")


def alpha(sigma_m: float, f0: float) -> float:
    """Field attenuation constant sqrt(pi * f0 * mu0 * sigma_m) [1/m]."""
    if sigma_m <= 0 or f0 <= 0:
        raise DomainError(f"alpha requires positive inputs, got sigma={sigma_m}, f0={f0}")
    return math.sqrt(math.pi * f0 * MU0 * sigma_m)


def skin_depth(sigma_m: float, f0: float) -> float:
    """Skin depth delta = 1/alpha [m]."""
    return 1.0 / alpha(sigma_m, f0)


def kappa_r(theta: Theta, f0: float) -> float:
    """Electrical distance sqrt(2) * alpha * r (dimensionless)."""
    return math.sqrt(2.0) * alpha(theta.sigma_m, f0) * theta.r


def channel_constant(cfg: LinkConfig) -> float:
    """Geometry/frequency constant C = omega * mu0 * pi * N^2 * a^4 / (2 Z_ref) [m^3]."""
    omega = 2.0 * math.pi * cfg.f0
    n = cfg.coil.turns_n
    a = cfg.coil.radius_a
    return omega * MU0 * math.pi * n * n * a**4 / (2.0 * cfg.z_ref)


def channel_gain(theta: Theta, cfg: LinkConfig) -> complex:
    """Normalized complex channel gain h = C/r^3 * exp(-(1+j) alpha r).

    Magnitude decays as r^-3 times the eddy-current attenuation
    exp(-alpha r); the phase is exactly -alpha*r radians.
    """
    a = alpha(theta.sigma_m, cfg.f0)
    ar = a * theta.r
    amp = channel_constant(cfg) / theta.r**3 * math.exp(-ar)
    return complex(amp * math.cos(ar), -amp * math.sin(ar))


def channel_gradient(theta: Theta, cfg: LinkConfig) -> tuple[complex, complex]:
    """Analytic partials (dh/dr, dh/dsigma_m) of the channel gain.

    dh/dr     = h * (-beta - j*alpha)           with beta = 3/r + alpha
    dh/dsigma = h * (-(1+j) * alpha*r / (2*sigma_m))
    """
    h = channel_gain(theta, cfg)
    a = alpha(theta.sigma_m, cfg.f0)
    beta = 3.0 / theta.r + a
    dh_dr = h * complex(-beta, -a)
    s = a * theta.r / (2.0 * theta.sigma_m)
    dh_dsigma = h * complex(-s, -s)
    return dh_dr, dh_dsigma


def noise_variance_mf(cfg: LinkConfig) -> float:
    """Variance of the matched-filter statistic: N0*B / (L * P_tx)."""
    return cfg.noise_psd * cfg.bandwidth_b / (cfg.pilots_l * cfg.p_tx)


def snr_db(theta: Theta, cfg: LinkConfig) -> float:
    """Post-matched-filter SNR |h|^2 / var(n_tilde) in dB."""
    h = channel_gain(theta, cfg)
    return 10.0 * math.log10((h.real**2 + h.imag**2) / noise_variance_mf(cfg))


def dbm_to_watts(p_dbm: float) -> float:
    """dBm to watts (0 dBm = 1 mW)."""
    return 10.0 ** (p_dbm / 10.0) * 1e-3
