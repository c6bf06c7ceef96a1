"""Photon-pair link physics: source statistics, channel loss, and detection.

The source emits polarization-entangled photon pairs with thermal pair-number
statistics.  Each emission round sends one rail pair toward each of two
receivers through independent lossy arms; every receiver gates two threshold
detectors, and a round is accepted when each receiver sees exactly one click.
All functions here are pure and broadcast over numpy arrays where noted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError

PLANCK = 6.62607015e-34  # J s
LIGHT_SPEED = 2.99792458e8  # m/s

# Photon placement per emitted-pair count, as (side-1 rails; side-2 rails).
# One pair feeds anti-correlated rails; two pairs populate the three
# symmetric placements.  Weights divide the n-pair probability evenly.
_PATTERNS = (
    (0, (0, 0, 0, 0), 1),
    (1, (1, 0, 0, 1), 2),
    (1, (0, 1, 1, 0), 2),
    (2, (2, 0, 0, 2), 3),
    (2, (1, 1, 1, 1), 3),
    (2, (0, 2, 2, 0), 3),
)


@dataclass(frozen=True)
class SourceParams:
    """Pair source settings: mean photon number per mode and attempt rate."""

    mean_photon_number: float
    repetition_rate: float
    sign: int = -1

    def __post_init__(self):
        if self.mean_photon_number < 0:
            raise ConfigurationError("mean_photon_number must be >= 0")
        if self.repetition_rate <= 0:
            raise ConfigurationError("repetition_rate must be > 0")
        if self.sign not in (-1, 1):
            raise ConfigurationError("sign must be +1 or -1")


@dataclass(frozen=True)
class ArmChannel:
    """One downlink arm: survival probability and per-gate dark-click probability."""

    transmissivity: float
    dark_click_prob: float

    def __post_init__(self):
        if not 0.0 <= self.transmissivity <= 1.0:
            raise ConfigurationError("transmissivity must be in [0, 1]")
        if not 0.0 <= self.dark_click_prob <= 1.0:
            raise ConfigurationError("dark_click_prob must be in [0, 1]")


@dataclass(frozen=True)
class OpticsParams:
    """Apertures, wavelength, and device efficiencies of a downlink."""

    tx_radius: float
    rx_radius: float
    wavelength: float
    tx_efficiency: float
    rx_efficiency: float

    def __post_init__(self):
        if self.tx_radius <= 0 or self.rx_radius <= 0 or self.wavelength <= 0:
            raise ConfigurationError("radii and wavelength must be positive")
        for eff in (self.tx_efficiency, self.rx_efficiency):
            if not 0.0 <= eff <= 1.0:
                raise ConfigurationError("efficiencies must be in [0, 1]")


@dataclass(frozen=True)
class PairOutcome:
    """Per-attempt acceptance probability, delivered fidelity, and rate."""

    success_prob: float
    fidelity: float
    edr: float


def emission_prob(mean_photon_number: float, n: int) -> float:
    """Probability that one round emits exactly n photon pairs."""
    if mean_photon_number < 0:
        raise ConfigurationError("mean_photon_number must be >= 0")
    if n < 0:
        raise ConfigurationError("pair count must be >= 0")
    ns = mean_photon_number
    return (n + 1) * ns**n / (ns + 1.0) ** (n + 2)


def emission_tail(mean_photon_number: float, max_pairs: int) -> float:
    """Total emission probability beyond max_pairs, in closed form."""
    ns = mean_photon_number
    if ns == 0.0:
        return 0.0
    r = ns / (1.0 + ns)
    k = max_pairs
    return r ** (k + 1) * ((k + 2) - (k + 1) * r)


def free_space_transmissivity(optics: OpticsParams, slant_range: float) -> float:
    """Diffraction-limited survival over a free line of sight, clamped at 1.

    The far-field expression (pi rT^2)(pi rR^2)/(lambda s)^2 exceeds unity
    inside the near field, where essentially everything is collected.
    """
    if slant_range <= 0:
        raise ConfigurationError("slant_range must be positive")
    num = (math.pi * optics.tx_radius**2) * (math.pi * optics.rx_radius**2)
    return min(1.0, num / (optics.wavelength * slant_range) ** 2)


def arm_transmissivity(
    free_space: float, atmospheric: float, tx_efficiency: float, rx_efficiency: float
) -> float:
    """Total arm survival: product of the channel and device factors."""
    return free_space * atmospheric * tx_efficiency * rx_efficiency


def dark_click_prob(
    irradiance: float,
    gate: float,
    bandwidth: float,
    fov: float,
    rx_radius: float,
    wavelength: float,
) -> float:
    """Per-gate spurious-click probability from background sky radiance.

    irradiance is in uW cm^-2 sr^-1 nm^-1 (converted to SI internally);
    gate in seconds, bandwidth in nm, fov in steradians.  The expected
    background photon count in one gate is clamped to 1 as a probability.
    """
    if min(irradiance, gate, bandwidth, fov, rx_radius, wavelength) < 0:
        raise ConfigurationError("dark_click_prob inputs must be nonnegative")
    irr_si = irradiance * 1e-2  # uW/cm^2 -> W/m^2
    photon_energy = PLANCK * LIGHT_SPEED / wavelength
    flux = irr_si * gate * bandwidth * fov * math.pi * rx_radius**2 / photon_energy
    return min(1.0, flux)


def _one_click_prob(m1, m2, eta, dark):
    # Exactly one of the side's two gated detectors fires, with m1 and m2
    # photons incident on the rails.  Broadcasts over eta/dark arrays.
    silent1 = (1.0 - eta) ** m1 * (1.0 - dark)
    silent2 = (1.0 - eta) ** m2 * (1.0 - dark)
    return (1.0 - silent1) * silent2 + (1.0 - silent2) * silent1


def acceptance_and_bell_weights(mean_photon_number, eta1, eta2, dark1, dark2):
    """Acceptance probability and the accepted true-pair weight per round.

    The emitted state is truncated at two pair-emissions and treated as a
    mixture over photon placements; each photon survives its arm
    independently with its arm's transmissivity; each of the four detectors
    adds an independent dark click.  Acceptance means exactly one click per
    side.  The Bell weight is the part of the accepted mass in which a
    single emitted pair survived intact with no dark click on any gate;
    anything else delivers a spurious state.  Broadcasts over array inputs
    for the channel parameters.
    """
    probs = [emission_prob(mean_photon_number, n) for n in (0, 1, 2)]
    norm = probs[0] + probs[1] + probs[2]
    success = 0.0
    for n, (a1, a2, b1, b2), split in _PATTERNS:
        weight = probs[n] / split
        success = success + weight * _one_click_prob(a1, a2, eta1, dark1) * _one_click_prob(
            b1, b2, eta2, dark2
        )
    success = success / norm
    bell = (
        probs[1]
        / norm
        * eta1
        * eta2
        * ((1.0 - dark1) * (1.0 - dark2)) ** 2
    )
    return success, bell


def end_to_end_outcome(
    source: SourceParams, arm1: ArmChannel, arm2: ArmChannel
) -> PairOutcome:
    """Acceptance rate and conditional fidelity of one source-two-arm link.

    Fidelity is the probability, given acceptance, that the delivered state
    is the intact single-pair Bell state; zero when nothing is ever accepted.
    Both source sign branches behave identically under this accounting.
    """
    success, bell = acceptance_and_bell_weights(
        source.mean_photon_number,
        arm1.transmissivity,
        arm2.transmissivity,
        arm1.dark_click_prob,
        arm2.dark_click_prob,
    )
    fidelity = bell / success if success > 0.0 else 0.0
    return PairOutcome(
        success_prob=success,
        fidelity=fidelity,
        edr=source.repetition_rate * success,
    )


def reflection_arms(
    src_to_gs1: ArmChannel,
    src_to_relay_free_space: float,
    mirror_efficiency: float,
    relay_to_gs2: ArmChannel,
) -> tuple[ArmChannel, ArmChannel]:
    """Compose the relayed second arm: source -> relay mirror -> station.

    Arm 1 is untouched.  Arm 2 multiplies the source-to-relay free-space
    factor, the mirror efficiency, and the relay-to-ground arm; its dark
    clicks are those of the receiving station's detector.
    """
    if not 0.0 <= src_to_relay_free_space <= 1.0:
        raise ConfigurationError("src_to_relay_free_space must be in [0, 1]")
    if not 0.0 <= mirror_efficiency <= 1.0:
        raise ConfigurationError("mirror_efficiency must be in [0, 1]")
    relayed = ArmChannel(
        transmissivity=src_to_relay_free_space
        * mirror_efficiency
        * relay_to_gs2.transmissivity,
        dark_click_prob=relay_to_gs2.dark_click_prob,
    )
    return src_to_gs1, relayed


def rate_fidelity_curve(
    ns_grid,
    arm1: ArmChannel,
    arm2: ArmChannel,
    repetition_rate: float = 1e9,
    sign: int = -1,
) -> list[tuple[float, float, float]]:
    """Evaluate (mean photon number, edr, fidelity) along a source-power grid."""
    curve = []
    for ns in ns_grid:
        source = SourceParams(
            mean_photon_number=float(ns), repetition_rate=repetition_rate, sign=sign
        )
        outcome = end_to_end_outcome(source, arm1, arm2)
        curve.append((float(ns), outcome.edr, outcome.fidelity))
    return curve
