"""Uniform planar array geometry, steering vectors and least-squares beamformers.

Element indexing is (p, q) with p over rows and q over columns; vectors are
stacked row-major with p as the outer index. A direction is a 2D angle
(azimuth, elevation) in the array's own frame, where elevation 0 is the
array normal (boresight), so the steering vector at elevation 0 is all ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Transmit beamformer conventions, see ls_transmit_beamformer.
MATCHED = "matched"
LITERAL = "literal"
POWER = "power"

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Angle2D:
    """Azimuth/elevation pair in radians; azimuth wrapped to [-pi, pi)."""

    azimuth_rad: float
    elevation_rad: float

    def __post_init__(self):
        wrapped = (self.azimuth_rad + math.pi) % _TWO_PI - math.pi
        object.__setattr__(self, "azimuth_rad", float(wrapped))
        if not 0.0 <= self.elevation_rad <= math.pi:
            raise ValueError(f"elevation must lie in [0, pi], got {self.elevation_rad}")


@dataclass(frozen=True)
class ArrayGeometry:
    """P x Q planar array with uniform element spacing."""

    rows: int
    cols: int
    element_spacing_m: float
    wavelength_m: float

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array must have at least one element per axis")
        if self.element_spacing_m <= 0 or self.wavelength_m <= 0:
            raise ValueError("element spacing and wavelength must be positive")

    @property
    def num_elements(self) -> int:
        return self.rows * self.cols

    @classmethod
    def half_wavelength(cls, rows: int, cols: int, wavelength_m: float) -> "ArrayGeometry":
        return cls(rows, cols, wavelength_m / 2.0, wavelength_m)


@dataclass(frozen=True)
class SteeringVector:
    """Unit-modulus phase response of an array toward one direction."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))


@dataclass(frozen=True)
class Beamformer:
    weights: np.ndarray
    pointed_direction: Angle2D
    phase_factor_c0: complex

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=complex))


def _direction_cosines(angle: Angle2D) -> tuple[float, float]:
    sin_el = math.sin(angle.elevation_rad)
    return math.cos(angle.azimuth_rad) * sin_el, math.sin(angle.azimuth_rad) * sin_el


def steering_element(geom: ArrayGeometry, angle: Angle2D, p: int, q: int) -> complex:
    """Phase of element (p, q) relative to element (0, 0) for a far-field direction."""
    if not (0 <= p < geom.rows and 0 <= q < geom.cols):
        raise ValueError(f"element index ({p}, {q}) outside {geom.rows}x{geom.cols} array")
    u, v = _direction_cosines(angle)
    phase = -_TWO_PI / geom.wavelength_m * geom.element_spacing_m * (p * u + q * v)
    return complex(math.cos(phase), math.sin(phase))


def steering_vector(geom: ArrayGeometry, angle: Angle2D) -> SteeringVector:
    """Length P*Q steering vector, row-major over (p, q) with p outer."""
    u, v = _direction_cosines(angle)
    scale = -1j * _TWO_PI / geom.wavelength_m * geom.element_spacing_m
    p = np.arange(geom.rows)[:, None]
    q = np.arange(geom.cols)[None, :]
    values = np.exp(scale * (p * u + q * v)).reshape(-1)
    return SteeringVector(values)


def ls_transmit_beamformer(
    geom: ArrayGeometry,
    direction: Angle2D,
    c0: complex = 1.0 + 0.0j,
    convention: str = MATCHED,
) -> Beamformer:
    """Least-squares transmit beamformer pointed at `direction`.

    The "matched" convention uses w = c0 * conj(a) / (P*Q) so that the
    transmit gain a(direction)^T w equals c0 exactly (unit magnitude).
    The "power" convention rescales it to unit weight norm,
    w = c0 * conj(a) / sqrt(P*Q), so a unit feed power radiates the full
    coherent array gain sqrt(P*Q) * c0 toward the pointed direction.
    The "literal" convention keeps the unconjugated pseudo-inverse form
    w = c0 * a / (P*Q), whose gain a^T w degrades away from boresight;
    it exists only for side-by-side comparison.
    """
    if abs(abs(c0) - 1.0) > 1e-9:
        raise ValueError("c0 must have unit modulus")
    a = steering_vector(geom, direction).values
    if convention == MATCHED:
        weights = c0 * a.conj() / geom.num_elements
    elif convention == POWER:
        weights = c0 * a.conj() / math.sqrt(geom.num_elements)
    elif convention == LITERAL:
        weights = c0 * a / geom.num_elements
    else:
        raise ValueError(f"unknown beamformer convention {convention!r}")
    return Beamformer(weights, direction, complex(c0))


def sensing_receive_beamformer(tx_beamformer: Beamformer) -> Beamformer:
    """Receive beamformer for the co-located echo: conjugate of the transmit weights."""
    return Beamformer(
        tx_beamformer.weights.conj(),
        tx_beamformer.pointed_direction,
        tx_beamformer.phase_factor_c0,
    )
