"""QAM constellations, bit mapping, preamble / sensing symbol generation, ML demapping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import OfdmNumerology

UPLINK_DATA = "uplink-data"
SENSING = "sensing"
PREAMBLE = "preamble"
OBSERVATION = "observation"

# Fixed entropy for the preamble grid so transmitter and receiver generate
# the same symbols without exchanging state.
_PREAMBLE_ENTROPY = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class QamConstellation:
    """Square QAM with Gray bit labels and unit average symbol energy.

    `points[k]` is the symbol whose bit label is the integer k read MSB-first;
    the first half of the bits selects the in-phase level, the second half the
    quadrature level.
    """

    order: int
    points: np.ndarray
    bits_per_symbol: int

    def bits_of(self, indices: np.ndarray) -> np.ndarray:
        """Unpack point indices into bit arrays along a trailing axis, MSB first."""
        indices = np.asarray(indices)
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
        return (indices[..., None] >> shifts) & 1


@dataclass
class SymbolGrid:
    """Subcarrier-by-symbol grid of complex scalars."""

    values: np.ndarray
    kind: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 2:
            raise ValueError("symbol grid must be 2-D (subcarriers x symbols)")
        if self.kind in (SENSING, PREAMBLE):
            if not np.allclose(np.abs(self.values), 1.0, atol=1e-9):
                raise ValueError(f"{self.kind} symbols must have unit modulus")


def _gray(i: np.ndarray) -> np.ndarray:
    return i ^ (i >> 1)


def build_constellation(order: int) -> QamConstellation:
    """Unit-energy square QAM with Gray labeling. Supported orders: 4, 16, 64."""
    if order not in (4, 16, 64):
        raise ValueError(f"unsupported QAM order {order}")
    bits_per_symbol = int(np.log2(order))
    per_axis = bits_per_symbol // 2
    m = 1 << per_axis
    # amplitude index a -> level 2a - m + 1, labeled with gray(a)
    amp = np.arange(m)
    levels = 2 * amp - m + 1
    labels = _gray(amp)
    axis_level = np.empty(m, dtype=float)
    axis_level[labels] = levels
    scale = np.sqrt(2.0 * (m * m - 1) / 3.0)
    idx = np.arange(order)
    i_bits = idx >> per_axis
    q_bits = idx & (m - 1)
    points = (axis_level[i_bits] + 1j * axis_level[q_bits]) / scale
    return QamConstellation(order, points, bits_per_symbol)


def map_bits(bits: np.ndarray, constellation: QamConstellation, numerology: OfdmNumerology) -> SymbolGrid:
    """Map a flat bit array onto an uplink data grid (Gray labeling, MSB first)."""
    bits = np.asarray(bits).ravel()
    n_cells = numerology.num_subcarriers * numerology.num_symbols
    expected = n_cells * constellation.bits_per_symbol
    if bits.size != expected:
        raise ValueError(f"expected {expected} bits, got {bits.size}")
    groups = bits.reshape(n_cells, constellation.bits_per_symbol).astype(np.int64)
    if groups.min() < 0 or groups.max() > 1:
        raise ValueError("bits must be 0 or 1")
    shifts = np.arange(constellation.bits_per_symbol - 1, -1, -1)
    indices = (groups << shifts).sum(axis=1)
    values = constellation.points[indices].reshape(
        numerology.num_subcarriers, numerology.num_symbols
    )
    return SymbolGrid(values, UPLINK_DATA)


def _unit_phase_grid(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    return np.exp(2j * np.pi * rng.random(shape))


def gen_sensing_symbols(numerology: OfdmNumerology, seed) -> SymbolGrid:
    """Constant-modulus pseudo-random sensing symbol grid, reproducible from seed."""
    rng = np.random.default_rng(seed)
    shape = (numerology.num_subcarriers, numerology.num_symbols)
    return SymbolGrid(_unit_phase_grid(rng, shape), SENSING)


def gen_preamble(num_preamble_symbols: int = 4, numerology: OfdmNumerology | None = None) -> SymbolGrid:
    """Unit-modulus preamble grid known to both link ends (fixed internal seed)."""
    if numerology is None:
        raise ValueError("numerology is required")
    if num_preamble_symbols < 1:
        raise ValueError("need at least one preamble symbol")
    rng = np.random.default_rng(_PREAMBLE_ENTROPY)
    shape = (numerology.num_subcarriers, num_preamble_symbols)
    return SymbolGrid(_unit_phase_grid(rng, shape), PREAMBLE)


def nearest_points(observed: np.ndarray, constellation: QamConstellation) -> np.ndarray:
    """Indices of the closest constellation points; ties go to the lowest index."""
    observed = np.asarray(observed, dtype=complex)
    if not np.all(np.isfinite(observed)):
        raise ValueError("observations must be finite")
    d2 = np.abs(observed[..., None] - constellation.points) ** 2
    return np.argmin(d2, axis=-1)


def demap_ml(observed: complex, constellation: QamConstellation) -> tuple[complex, np.ndarray]:
    """Minimum-distance decision for one observation: (decided point, its bits)."""
    idx = int(nearest_points(np.asarray(observed), constellation))
    return complex(constellation.points[idx]), constellation.bits_of(np.asarray(idx))


def grid_point_indices(grid: SymbolGrid, constellation: QamConstellation) -> np.ndarray:
    """Recover point indices from a grid of exact constellation points."""
    return nearest_points(grid.values, constellation)


def grid_to_bits(grid: SymbolGrid, constellation: QamConstellation) -> np.ndarray:
    """Flatten a hard-decision grid back into its bit stream."""
    indices = grid_point_indices(grid, constellation)
    return constellation.bits_of(indices).reshape(-1)
