"""Base-station receive chain for the superimposed uplink + echo signal.

The chain is: estimate the uplink channel from the preamble, combine with the
minimum-MSE receive weights, demodulate the uplink symbols, reconstruct and
subtract the uplink contribution, then project the residual onto the sensing
beam to obtain the per-cell echo response.

Channel estimates and combiner weights are kept per subcarrier (the uplink
delay rotates the phase across the band); each is an array whose leading axis
is the subcarrier index and whose trailing axis is the receive antenna.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import EqualizationSingularityError, SingularChannelError
from .modem import OBSERVATION, QamConstellation, SymbolGrid, nearest_points
from .upa import Beamformer

EQUALIZATION_GAIN_FLOOR = 1e-30


@dataclass
class ObservationGrid:
    """Received antenna vectors, one per (subcarrier, symbol) cell."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 3:
            raise ValueError("observation grid must be (subcarriers, symbols, antennas)")

    @property
    def num_subcarriers(self) -> int:
        return self.values.shape[0]

    @property
    def num_symbols(self) -> int:
        return self.values.shape[1]


@dataclass
class CsiEstimate:
    """Per-subcarrier uplink channel vectors plus the per-entry error variance."""

    h_hat: np.ndarray
    per_entry_noise_var: float

    def __post_init__(self):
        self.h_hat = np.asarray(self.h_hat, dtype=complex)
        if self.h_hat.ndim != 2:
            raise ValueError("channel estimate must be (subcarriers, antennas)")


@dataclass
class CombinerWeights:
    """Per-subcarrier receive combining vectors (scaled copies of the CSI)."""

    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=complex)


@dataclass
class EchoResponseGrid:
    """Scalar echo response per (subcarrier, symbol) cell."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 2:
            raise ValueError("echo response grid must be 2-D")


def estimate_ul_csi(
    preamble_rx: ObservationGrid,
    preamble: SymbolGrid,
    ul_power_w: float,
    noise_var_w: float = 0.0,
) -> CsiEstimate:
    """Least-squares channel estimate averaged over the preamble symbols.

    Each preamble cell contributes y / (sqrt(P) * d); averaging the known-symbol
    inversions across the preamble symbols of one subcarrier divides the error
    variance by the preamble length.
    """
    if ul_power_w <= 0:
        raise ValueError("uplink power must be positive to invert the preamble")
    num_preamble = preamble.values.shape[1]
    if preamble_rx.values.shape[:2] != preamble.values.shape:
        raise ValueError("preamble grid and observation dimensions disagree")
    inv = preamble_rx.values / (math.sqrt(ul_power_w) * preamble.values[:, :, None])
    h_hat = inv.mean(axis=1)
    return CsiEstimate(h_hat, noise_var_w / (ul_power_w * num_preamble))


def mmse_objective(w: np.ndarray, h: np.ndarray, power_w: float, noise_var_w: float) -> float:
    """Mean-squared symbol error plus weighted noise power of a combiner candidate."""
    gain = np.vdot(w, h) * math.sqrt(power_w)
    return float(abs(gain - 1.0) ** 2 + noise_var_w * np.vdot(w, w).real)


def mmse_combiner(csi: CsiEstimate, ul_power_w: float, noise_var_w: float) -> CombinerWeights:
    """Combiner minimizing symbol MSE plus noise power over weights proportional
    to the channel estimate: w = sqrt(P) h / (P ||h||^2 + noise_var), per subcarrier."""
    if ul_power_w <= 0 or noise_var_w < 0:
        raise ValueError("powers must be positive (noise variance non-negative)")
    h = csi.h_hat
    norm2 = np.sum(np.abs(h) ** 2, axis=-1, keepdims=True)
    if np.any(norm2 == 0.0):
        raise SingularChannelError("zero channel estimate on at least one subcarrier")
    w = math.sqrt(ul_power_w) * h / (ul_power_w * norm2 + noise_var_w)
    return CombinerWeights(w)


def combined_gain(w: CombinerWeights, csi: CsiEstimate, ul_power_w: float) -> np.ndarray:
    """Scalar channel seen by the equalizer on each subcarrier, w^H h sqrt(P)."""
    return np.einsum("nk,nk->n", w.w.conj(), csi.h_hat) * math.sqrt(ul_power_w)


def equalize_and_demod(
    rx: ObservationGrid,
    w: CombinerWeights,
    csi: CsiEstimate,
    ul_power_w: float,
    constellation: QamConstellation,
) -> tuple[SymbolGrid, SymbolGrid]:
    """Combine, equalize by the estimated scalar channel and hard-decide each cell.

    Returns (hard decisions, soft equalized values).
    """
    gain = combined_gain(w, csi, ul_power_w)
    if np.any(np.abs(gain) < EQUALIZATION_GAIN_FLOOR):
        raise EqualizationSingularityError("combined channel gain vanishes")
    combined = np.einsum("nk,nmk->nm", w.w.conj(), rx.values)
    soft = combined / gain[:, None]
    hard = constellation.points[nearest_points(soft, constellation)]
    return SymbolGrid(hard, "uplink-data"), SymbolGrid(soft, OBSERVATION)


def cancel_communication(
    rx: ObservationGrid,
    csi: CsiEstimate,
    symbols: SymbolGrid,
    ul_power_w: float,
) -> ObservationGrid:
    """Subtract the reconstructed uplink signal, leaving echo + decision error + noise."""
    recon = math.sqrt(ul_power_w) * csi.h_hat[:, None, :] * symbols.values[:, :, None]
    return ObservationGrid(rx.values - recon)


def extract_echo(
    cleaned: ObservationGrid,
    w_rx_sensing: Beamformer,
    sensing_symbols: SymbolGrid,
) -> EchoResponseGrid:
    """Project each cell onto the sensing beam and strip the known unit-modulus symbol."""
    projected = np.einsum("k,nmk->nm", w_rx_sensing.weights.conj(), cleaned.values)
    return EchoResponseGrid(projected / sensing_symbols.values)
