"""Scene geometry, propagation paths and frequency-domain channel grids.

Channels are synthesized directly on the subcarrier-by-symbol grid: each path
contributes a delay phasor across subcarriers, a Doppler phasor across symbols,
a complex amplitude and a receive steering vector, with the transmit steering
response already collapsed onto the transmit beamformer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateGeometryError
from .upa import Angle2D, ArrayGeometry, Beamformer, steering_vector

SPEED_OF_LIGHT = 3.0e8

SENSING_ECHO = "sensing-echo"
COMM_LOS = "comm-los"
COMM_NLOS = "comm-nlos"


@dataclass(frozen=True)
class OfdmNumerology:
    """Equal downlink/uplink OFDM numerology; the symbol clock has no
    cyclic-prefix extension (symbol duration = 1 / subcarrier spacing)."""

    carrier_hz: float
    subcarrier_spacing_hz: float
    num_subcarriers: int
    num_symbols: int

    def __post_init__(self):
        if self.subcarrier_spacing_hz <= 0 or self.carrier_hz <= 0:
            raise ValueError("carrier and subcarrier spacing must be positive")
        for n in (self.num_subcarriers, self.num_symbols):
            if n < 1 or (n & (n - 1)) != 0:
                raise ValueError("grid dimensions must be powers of two")

    @property
    def symbol_duration_s(self) -> float:
        return 1.0 / self.subcarrier_spacing_hz

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def bandwidth_hz(self) -> float:
        return self.num_subcarriers * self.subcarrier_spacing_hz


@dataclass(frozen=True)
class ArrayFrame:
    """Orientation of a planar array in the global frame.

    `boresight` is the array normal (elevation 0); `axis_p` and `axis_q` are
    the in-plane directions of the row and column element indices. Default:
    boresight along +x, rows along +y, columns along +z.
    """

    boresight: tuple[float, float, float] = (1.0, 0.0, 0.0)
    axis_p: tuple[float, float, float] = (0.0, 1.0, 0.0)
    axis_q: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def direction_angles(self, from_pos: np.ndarray, to_pos: np.ndarray) -> Angle2D:
        """Azimuth/elevation of `to_pos` as seen from `from_pos` in this frame."""
        diff = np.asarray(to_pos, dtype=float) - np.asarray(from_pos, dtype=float)
        dist = np.linalg.norm(diff)
        if dist == 0.0:
            raise DegenerateGeometryError("coincident positions give no direction")
        u = diff / dist
        cos_el = float(np.clip(np.dot(u, self.boresight), -1.0, 1.0))
        elevation = math.acos(cos_el)
        azimuth = math.atan2(float(np.dot(u, self.axis_q)), float(np.dot(u, self.axis_p)))
        return Angle2D(azimuth, elevation)


@dataclass(frozen=True)
class Scene:
    """Positions, radial velocities and reflection statistics of the link.

    Radial velocities are positive toward the observer (approaching targets
    produce positive Doppler). Sensing echoes exist for every scatterer;
    communication scatterer paths are synthesized only when
    `comm_nlos_enabled` is set.
    """

    bs_position_m: tuple[float, float, float]
    user_position_m: tuple[float, float, float]
    scatterer_positions_m: tuple[tuple[float, float, float], ...]
    scatterer_radial_velocities_mps: tuple[float, ...]
    user_radial_velocity_mps: float = 0.0
    reflection_variance_sensing: tuple[float, ...] = (1.0,)
    reflection_variance_comm: tuple[float, ...] = (1.0,)
    comm_nlos_enabled: bool = False
    bs_frame: ArrayFrame = field(default_factory=ArrayFrame)
    user_frame: ArrayFrame = field(default_factory=ArrayFrame)

    def __post_init__(self):
        n = len(self.scatterer_positions_m)
        if n < 1:
            raise ValueError("scene needs at least one sensing scatterer")
        if (
            len(self.scatterer_radial_velocities_mps) != n
            or len(self.reflection_variance_sensing) != n
            or len(self.reflection_variance_comm) != n
        ):
            raise ValueError("per-scatterer lists must have equal lengths")
        if any(v < 0 for v in self.reflection_variance_sensing) or any(
            v < 0 for v in self.reflection_variance_comm
        ):
            raise ValueError("reflection variances must be non-negative")
        for pos in (self.bs_position_m, self.user_position_m, *self.scatterer_positions_m):
            if not np.all(np.isfinite(pos)):
                raise ValueError("positions must be finite")


@dataclass(frozen=True)
class PropagationPath:
    kind: str
    angle_tx: Angle2D
    angle_rx: Angle2D
    delay_s: float
    doppler_hz: float
    amplitude: complex


@dataclass
class ChannelGrid:
    """num_subcarriers x num_symbols grid of post-transmit-beamforming
    receive-antenna vectors."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 3:
            raise ValueError("channel grid must be (subcarriers, symbols, rx antennas)")


def _distance(a, b) -> float:
    d = float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
    if d == 0.0:
        raise DegenerateGeometryError("coincident positions in scene")
    return d


def _complex_gaussian(rng: np.random.Generator, variance: float) -> complex:
    if variance == 0.0:
        return 0.0 + 0.0j
    std = math.sqrt(variance / 2.0)
    return complex(rng.normal(0.0, std), rng.normal(0.0, std))


def monostatic_amplitude(wavelength_m: float, distance_m: float) -> float:
    """Two-way free-space amplitude of an echo at the given range."""
    return math.sqrt(wavelength_m**2 / ((4.0 * math.pi) ** 3 * distance_m**4))


def los_amplitude(wavelength_m: float, distance_m: float) -> float:
    """One-way free-space line-of-sight amplitude."""
    return wavelength_m / (4.0 * math.pi * distance_m)


def two_hop_amplitude(wavelength_m: float, d1_m: float, d2_m: float) -> float:
    """Free-space amplitude of a single-bounce scatterer path."""
    return math.sqrt(wavelength_m**2 / ((4.0 * math.pi) ** 3 * d1_m**2 * d2_m**2))


def derive_paths(scene: Scene, numerology: OfdmNumerology, rng_seed) -> list[PropagationPath]:
    """Turn scene geometry into propagation paths, drawing fresh reflection factors.

    Draw order is fixed: one complex Gaussian per scatterer for the sensing
    echoes, then (if enabled) one per scatterer for the communication bounce
    paths. Sensing echoes come first in the returned list, then the LoS path,
    then any bounce paths.
    """
    rng = np.random.default_rng(rng_seed)
    lam = numerology.wavelength_m
    bs = np.asarray(scene.bs_position_m, dtype=float)
    user = np.asarray(scene.user_position_m, dtype=float)

    paths: list[PropagationPath] = []
    for pos, vel, var in zip(
        scene.scatterer_positions_m,
        scene.scatterer_radial_velocities_mps,
        scene.reflection_variance_sensing,
    ):
        d = _distance(bs, pos)
        angle = scene.bs_frame.direction_angles(bs, pos)
        beta = _complex_gaussian(rng, var)
        paths.append(
            PropagationPath(
                kind=SENSING_ECHO,
                angle_tx=angle,
                angle_rx=angle,
                delay_s=2.0 * d / SPEED_OF_LIGHT,
                doppler_hz=2.0 * vel / lam,
                amplitude=monostatic_amplitude(lam, d) * beta,
            )
        )

    d0 = _distance(bs, user)
    paths.append(
        PropagationPath(
            kind=COMM_LOS,
            angle_tx=scene.user_frame.direction_angles(user, bs),
            angle_rx=scene.bs_frame.direction_angles(bs, user),
            delay_s=d0 / SPEED_OF_LIGHT,
            doppler_hz=scene.user_radial_velocity_mps / lam,
            amplitude=los_amplitude(lam, d0),
        )
    )

    if scene.comm_nlos_enabled:
        for pos, vel, var in zip(
            scene.scatterer_positions_m,
            scene.scatterer_radial_velocities_mps,
            scene.reflection_variance_comm,
        ):
            if var == 0.0:
                continue
            d1 = _distance(user, pos)
            d2 = _distance(bs, pos)
            beta = _complex_gaussian(rng, var)
            # Radial inputs are scalars, so the aggregate Doppler of the
            # two-hop path is taken as the sum of the hop rates.
            paths.append(
                PropagationPath(
                    kind=COMM_NLOS,
                    angle_tx=scene.user_frame.direction_angles(user, pos),
                    angle_rx=scene.bs_frame.direction_angles(bs, pos),
                    delay_s=(d1 + d2) / SPEED_OF_LIGHT,
                    doppler_hz=(vel + scene.user_radial_velocity_mps) / lam,
                    amplitude=two_hop_amplitude(lam, d1, d2) * beta,
                )
            )
    return paths


def _phase_grid(path: PropagationPath, numerology: OfdmNumerology) -> np.ndarray:
    n = np.arange(numerology.num_subcarriers)
    m = np.arange(numerology.num_symbols)
    delay_phasor = np.exp(-2j * np.pi * n * numerology.subcarrier_spacing_hz * path.delay_s)
    doppler_phasor = np.exp(2j * np.pi * path.doppler_hz * m * numerology.symbol_duration_s)
    return np.outer(delay_phasor, doppler_phasor)


def _accumulate_grid(
    paths: list[PropagationPath],
    tx_beamformer: Beamformer,
    rx_geom: ArrayGeometry,
    tx_geom: ArrayGeometry,
    numerology: OfdmNumerology,
) -> np.ndarray:
    if tx_beamformer.weights.size != tx_geom.num_elements:
        raise ValueError("transmit beamformer does not match transmit array size")
    shape = (numerology.num_subcarriers, numerology.num_symbols, rx_geom.num_elements)
    grid = np.zeros(shape, dtype=complex)
    for path in paths:
        tx_gain = steering_vector(tx_geom, path.angle_tx).values @ tx_beamformer.weights
        rx_vec = steering_vector(rx_geom, path.angle_rx).values
        grid += _phase_grid(path, numerology)[:, :, None] * (
            path.amplitude * tx_gain * rx_vec
        )
    return grid


def sensing_channel_grid(
    paths: list[PropagationPath],
    tx_beamformer: Beamformer,
    geom: ArrayGeometry,
    numerology: OfdmNumerology,
) -> ChannelGrid:
    """Echo channel seen by the sensing receiver, one vector per grid cell.

    Both ends of every echo path live on the base station, so the receive and
    transmit arrays share the same geometry.
    """
    if any(p.kind != SENSING_ECHO for p in paths):
        raise ValueError("sensing grid accepts only sensing-echo paths")
    return ChannelGrid(_accumulate_grid(paths, tx_beamformer, geom, geom, numerology))


def comm_channel_grid(
    paths: list[PropagationPath],
    tx_beamformer: Beamformer,
    geom_bs: ArrayGeometry,
    geom_user: ArrayGeometry,
    numerology: OfdmNumerology,
) -> ChannelGrid:
    """Uplink channel after the user's transmit beamforming."""
    kinds = {p.kind for p in paths}
    if SENSING_ECHO in kinds:
        raise ValueError("communication grid accepts only comm paths")
    if COMM_LOS not in kinds:
        raise ValueError("communication paths must include a line-of-sight path")
    return ChannelGrid(_accumulate_grid(paths, tx_beamformer, geom_bs, geom_user, numerology))
