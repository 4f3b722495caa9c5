"""Range-Doppler processing of the echo response grid.

The echo grid carries a delay phasor across subcarriers and a Doppler phasor
across symbols, so an inverse DFT along the subcarrier axis followed by a
forward DFT along the symbol axis concentrates each scatterer at one
(range bin, Doppler bin) cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import SPEED_OF_LIGHT, OfdmNumerology
from .receiver import EchoResponseGrid


@dataclass
class RangeDopplerMap:
    magnitudes: np.ndarray
    # Normalization convention: 1/N on the subcarrier-axis inverse transform,
    # none on the symbol-axis forward transform. Peak location does not
    # depend on it.
    transform_meta: dict = field(
        default_factory=lambda: {"ifft_scale": "1/N", "fft_scale": "1", "zero_pad_factor": 1}
    )


@dataclass(frozen=True)
class DetectionResult:
    range_bin: int
    doppler_bin: int
    range_m: float
    radial_velocity_mps: float
    peak_magnitude: float


def compute_map(echo: EchoResponseGrid, zero_pad_factor: int = 1) -> RangeDopplerMap:
    """Magnitude of the 2-D transform; optional zero padding refines the bin grid."""
    if zero_pad_factor < 1:
        raise ValueError("zero_pad_factor must be >= 1")
    n_range = echo.values.shape[0] * zero_pad_factor
    n_doppler = echo.values.shape[1] * zero_pad_factor
    ranged = np.fft.ifft(echo.values, n=n_range, axis=0)
    spectrum = np.fft.fft(ranged, n=n_doppler, axis=1)
    mmap = RangeDopplerMap(np.abs(spectrum))
    mmap.transform_meta["zero_pad_factor"] = zero_pad_factor
    return mmap


def find_peak(rd_map: RangeDopplerMap) -> tuple[int, int] | None:
    """Global argmax of the map; ties break to the lexicographically smallest
    (range bin, Doppler bin). Returns None for an all-zero map (no detection)."""
    mags = rd_map.magnitudes
    if mags.size == 0:
        raise ValueError("empty range-Doppler map")
    flat = int(np.argmax(mags))
    if mags.flat[flat] == 0.0:
        return None
    return np.unravel_index(flat, mags.shape)


def bins_to_estimates(
    bins: tuple[int, int],
    numerology: OfdmNumerology,
    peak_magnitude: float = float("nan"),
    zero_pad_factor: int = 1,
) -> DetectionResult:
    """Invert peak bins to range and radial velocity.

    Doppler bins in the upper half of the axis wrap to negative frequencies, so
    approaching and receding targets are distinguishable.
    """
    range_bin, doppler_bin = int(bins[0]), int(bins[1])
    n_range = numerology.num_subcarriers * zero_pad_factor
    n_doppler = numerology.num_symbols * zero_pad_factor
    if not (0 <= range_bin < n_range and 0 <= doppler_bin < n_doppler):
        raise ValueError("peak bins outside the map")
    signed_doppler = doppler_bin - n_doppler if doppler_bin >= n_doppler // 2 else doppler_bin
    range_m = SPEED_OF_LIGHT * range_bin / (2.0 * n_range * numerology.subcarrier_spacing_hz)
    velocity = (
        numerology.wavelength_m
        * signed_doppler
        / (2.0 * n_doppler * numerology.symbol_duration_s)
    )
    return DetectionResult(range_bin, doppler_bin, range_m, velocity, peak_magnitude)


def range_resolution_m(numerology: OfdmNumerology) -> float:
    """Width of one range bin."""
    return SPEED_OF_LIGHT / (2.0 * numerology.num_subcarriers * numerology.subcarrier_spacing_hz)
