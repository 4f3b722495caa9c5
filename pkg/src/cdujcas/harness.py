"""Simulation configuration, noise/power bookkeeping, per-trial assembly,
Monte-Carlo sweeps and CSV output.

Cases:
  1 - echo extraction straight from the raw superimposed grid (no cancellation),
  2 - full receive chain with demodulation and cancellation,
  3 - uplink transmit power forced to zero in the data phase (sensing bound).

Every trial derives its randomness from one seed split into fixed-purpose
child streams (reflection factors, uplink bits, sensing symbols, preamble
noise, data noise), so the three cases of one trial and paired-seed
comparisons across sweeps see identical draws.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from . import modem, receiver, upa
from .channel import (
    COMM_LOS,
    COMM_NLOS,
    SENSING_ECHO,
    OfdmNumerology,
    Scene,
    comm_channel_grid,
    derive_paths,
    sensing_channel_grid,
)
from .exceptions import ConfigError
from .range_doppler import bins_to_estimates, compute_map, find_peak, range_resolution_m
from .receiver import ObservationGrid
from .upa import Angle2D, ArrayGeometry, ls_transmit_beamformer, sensing_receive_beamformer

BOLTZMANN_J_PER_K = 1.380649e-23

CASES = (1, 2, 3)

# Child-stream indices of a trial seed; fixed so that skipping one purpose
# (e.g. no uplink bits in case 3) never shifts another purpose's draws.
_STREAM_PATHS = 0
_STREAM_BITS = 1
_STREAM_SENSING = 2
_STREAM_PREAMBLE_NOISE = 3
_STREAM_DATA_NOISE = 4


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class SimConfig:
    """All simulation parameters; defaults reproduce the reference scenario."""

    carrier_hz: float = 63e9
    subcarrier_spacing_hz: float = 240e3
    num_subcarriers: int = 128
    num_symbols: int = 64
    preamble_symbols: int = 4

    bs_rows: int = 8
    bs_cols: int = 8
    user_rows: int = 1
    user_cols: int = 1

    bs_position_m: tuple[float, float, float] = (50.0, 4.75, 7.0)
    user_position_m: tuple[float, float, float] = (140.0, 0.0, 2.0)
    scatterer_positions_m: tuple[tuple[float, float, float], ...] = ((129.0, 10.0, 5.0),)
    scatterer_radial_velocities_mps: tuple[float, ...] = (0.0,)
    user_radial_velocity_mps: float = 0.0
    reflection_variance_sensing: tuple[float, ...] = (1.0,)
    reflection_variance_comm: tuple[float, ...] = (1.0,)
    comm_nlos_enabled: bool = False

    noise_var_w: float = 1.2294e-12
    ul_power_dbm: float = 13.0
    dl_power_dbm: float = 27.0
    qam_order: int = 4
    case: int = 2
    trials: int = 200
    master_seed: int = 1

    # The link pipeline feeds the arrays with unit-norm (power-preserving)
    # beamformers by default; the unit-gain "matched" and pseudo-inverse
    # "literal" conventions stay available for comparison.
    beamformer_convention: str = upa.POWER
    detect_azimuth_rad: float | None = None
    detect_elevation_rad: float | None = None
    zero_pad_factor: int = 1
    # A peak farther than this many range bins from the target counts as a
    # missed detection: it is excluded from the MSE and reported separately.
    # A genuine echo peak can only straddle into an adjacent bin, so anything
    # beyond one bin is a noise or interference peak, not an estimate.
    miss_gate_bins: int = 1

    def validate(self) -> None:
        if self.case not in CASES:
            raise ConfigError(f"case must be one of {CASES}, got {self.case}")
        if self.qam_order not in (4, 16, 64):
            raise ConfigError(f"qam_order must be 4, 16 or 64, got {self.qam_order}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.preamble_symbols < 1:
            raise ConfigError("preamble_symbols must be >= 1")
        if self.noise_var_w < 0:
            raise ConfigError("noise_var_w must be non-negative")
        for name in ("ul_power_dbm", "dl_power_dbm"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if (self.detect_azimuth_rad is None) != (self.detect_elevation_rad is None):
            raise ConfigError("set both detection angles or neither")
        if self.miss_gate_bins < 1:
            raise ConfigError("miss_gate_bins must be >= 1")
        try:
            self.numerology()
            self.scene()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def numerology(self) -> OfdmNumerology:
        return OfdmNumerology(
            carrier_hz=self.carrier_hz,
            subcarrier_spacing_hz=self.subcarrier_spacing_hz,
            num_subcarriers=self.num_subcarriers,
            num_symbols=self.num_symbols,
        )

    def scene(self) -> Scene:
        return Scene(
            bs_position_m=tuple(self.bs_position_m),
            user_position_m=tuple(self.user_position_m),
            scatterer_positions_m=tuple(tuple(p) for p in self.scatterer_positions_m),
            scatterer_radial_velocities_mps=tuple(self.scatterer_radial_velocities_mps),
            user_radial_velocity_mps=self.user_radial_velocity_mps,
            reflection_variance_sensing=tuple(self.reflection_variance_sensing),
            reflection_variance_comm=tuple(self.reflection_variance_comm),
            comm_nlos_enabled=self.comm_nlos_enabled,
        )

    def bs_geometry(self) -> ArrayGeometry:
        return ArrayGeometry.half_wavelength(
            self.bs_rows, self.bs_cols, self.numerology().wavelength_m
        )

    def user_geometry(self) -> ArrayGeometry:
        return ArrayGeometry.half_wavelength(
            self.user_rows, self.user_cols, self.numerology().wavelength_m
        )

    def detection_direction(self, scene: Scene | None = None) -> Angle2D:
        """Configured sensing direction, or the first scatterer's true direction."""
        if self.detect_azimuth_rad is not None and self.detect_elevation_rad is not None:
            return Angle2D(self.detect_azimuth_rad, self.detect_elevation_rad)
        scene = scene or self.scene()
        return scene.bs_frame.direction_angles(
            scene.bs_position_m, scene.scatterer_positions_m[0]
        )


@dataclass(frozen=True)
class TrialResult:
    case_id: int
    seed: str
    detected: bool
    range_est_m: float
    range_sq_error_m2: float
    radial_velocity_mps: float
    bit_errors: int
    bits_total: int


@dataclass
class SweepResult:
    axis: str
    case_id: int
    points_dbm: list[float]
    mse_m2: list[float]
    ber: list[float]
    missed_rate: list[float]
    trials: list[int]
    bits: list[int]


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _child(ss: np.random.SeedSequence, index: int) -> np.random.SeedSequence:
    # Stateless equivalent of ss.spawn(): the same (seed, purpose) pair always
    # yields the same stream no matter how often or in what order it is asked for.
    return np.random.SeedSequence(entropy=ss.entropy, spawn_key=tuple(ss.spawn_key) + (index,))


def _seed_label(ss: np.random.SeedSequence) -> str:
    if ss.spawn_key:
        return f"{ss.entropy}:" + ":".join(str(k) for k in ss.spawn_key)
    return str(ss.entropy)


def _complex_noise(rng: np.random.Generator, shape: tuple[int, ...], variance_w: float) -> np.ndarray:
    if variance_w == 0.0:
        return np.zeros(shape, dtype=complex)
    n = rng.standard_normal(2 * int(np.prod(shape)))
    return math.sqrt(variance_w / 2.0) * n.view(np.complex128).reshape(shape)


def _split_paths(paths):
    sensing = [p for p in paths if p.kind == SENSING_ECHO]
    comm = [p for p in paths if p.kind in (COMM_LOS, COMM_NLOS)]
    return sensing, comm


@dataclass
class _TrialParts:
    """Everything a trial needs, built once and shared by all cases."""

    config: SimConfig
    numerology: OfdmNumerology
    true_range_m: float
    w_rx_sensing: upa.Beamformer
    constellation: modem.QamConstellation
    preamble: modem.SymbolGrid
    sensing_symbols: modem.SymbolGrid
    ul_bits: np.ndarray
    comm_column0: np.ndarray  # (subcarriers, antennas), preamble-phase channel
    comm_product: np.ndarray  # h_C * uplink symbols, unscaled by power
    echo_product: np.ndarray  # h_S * sensing symbols, unscaled by power
    preamble_noise: np.ndarray
    data_noise: np.ndarray


def _beam_setup(config: SimConfig, scene: Scene, numerology: OfdmNumerology):
    bs_geom = config.bs_geometry()
    user_geom = config.user_geometry()
    w_tx_dl = ls_transmit_beamformer(
        bs_geom, config.detection_direction(scene), convention=config.beamformer_convention
    )
    w_rx_s = sensing_receive_beamformer(w_tx_dl)
    ul_dir = scene.user_frame.direction_angles(scene.user_position_m, scene.bs_position_m)
    w_tx_ul = ls_transmit_beamformer(user_geom, ul_dir, convention=config.beamformer_convention)
    return bs_geom, user_geom, w_tx_dl, w_rx_s, w_tx_ul


def _build_trial(config: SimConfig, ss: np.random.SeedSequence) -> _TrialParts:
    numerology = config.numerology()
    scene = config.scene()
    bs_geom, user_geom, w_tx_dl, w_rx_s, w_tx_ul = _beam_setup(config, scene, numerology)

    paths = derive_paths(scene, numerology, _child(ss, _STREAM_PATHS))
    sensing_paths, comm_paths = _split_paths(paths)

    h_c = comm_channel_grid(comm_paths, w_tx_ul, bs_geom, user_geom, numerology)
    h_s = sensing_channel_grid(sensing_paths, w_tx_dl, bs_geom, numerology)

    constellation = modem.build_constellation(config.qam_order)
    bits_rng = np.random.default_rng(_child(ss, _STREAM_BITS))
    n_bits = numerology.num_subcarriers * numerology.num_symbols * constellation.bits_per_symbol
    ul_bits = bits_rng.integers(0, 2, size=n_bits)
    ul_symbols = modem.map_bits(ul_bits, constellation, numerology)
    sensing_symbols = modem.gen_sensing_symbols(numerology, _child(ss, _STREAM_SENSING))
    preamble = modem.gen_preamble(config.preamble_symbols, numerology)

    noise_var = config.noise_var_w
    pre_rng = np.random.default_rng(_child(ss, _STREAM_PREAMBLE_NOISE))
    data_rng = np.random.default_rng(_child(ss, _STREAM_DATA_NOISE))
    pre_shape = (numerology.num_subcarriers, config.preamble_symbols, bs_geom.num_elements)
    data_shape = (
        numerology.num_subcarriers,
        numerology.num_symbols,
        bs_geom.num_elements,
    )

    true_range = float(
        np.linalg.norm(
            np.asarray(scene.scatterer_positions_m[0]) - np.asarray(scene.bs_position_m)
        )
    )
    return _TrialParts(
        config=config,
        numerology=numerology,
        true_range_m=true_range,
        w_rx_sensing=w_rx_s,
        constellation=constellation,
        preamble=preamble,
        sensing_symbols=sensing_symbols,
        ul_bits=ul_bits,
        comm_column0=h_c.values[:, 0, :].copy(),
        comm_product=h_c.values * ul_symbols.values[:, :, None],
        echo_product=h_s.values * sensing_symbols.values[:, :, None],
        preamble_noise=_complex_noise(pre_rng, pre_shape, noise_var),
        data_noise=_complex_noise(data_rng, data_shape, noise_var),
    )


def _preamble_observation(comm_column0, preamble_values, noise, ul_power_w) -> ObservationGrid:
    signal = math.sqrt(ul_power_w) * comm_column0[:, None, :] * preamble_values[:, :, None]
    return ObservationGrid(signal + noise)


def _data_observation(comm_product, echo_product, noise, ul_power_w, dl_power_w) -> ObservationGrid:
    echo_term = math.sqrt(dl_power_w) * echo_product
    if ul_power_w == 0.0:
        return ObservationGrid(echo_term + noise)
    return ObservationGrid(math.sqrt(ul_power_w) * comm_product + echo_term + noise)


def synthesize_preamble_rx(
    scene: Scene, config: SimConfig, seed, ul_power_w: float | None = None
) -> ObservationGrid:
    """Preamble-phase observation: uplink preamble through the channel plus noise.

    The sensing transmitter is silent during the preamble. The channel is the
    data-phase communication channel frozen at its first symbol (block fading).
    """
    ss = _seed_sequence(seed)
    numerology = config.numerology()
    bs_geom, user_geom, _, _, w_tx_ul = _beam_setup(config, scene, numerology)
    paths = derive_paths(scene, numerology, _child(ss, _STREAM_PATHS))
    _, comm_paths = _split_paths(paths)
    h_c = comm_channel_grid(comm_paths, w_tx_ul, bs_geom, user_geom, numerology)
    preamble = modem.gen_preamble(config.preamble_symbols, numerology)
    rng = np.random.default_rng(_child(ss, _STREAM_PREAMBLE_NOISE))
    shape = (numerology.num_subcarriers, config.preamble_symbols, bs_geom.num_elements)
    noise = _complex_noise(rng, shape, config.noise_var_w)
    pu = dbm_to_watts(config.ul_power_dbm) if ul_power_w is None else ul_power_w
    return _preamble_observation(h_c.values[:, 0, :], preamble.values, noise, pu)


def synthesize_data_rx(
    scene: Scene,
    config: SimConfig,
    ul_symbols: modem.SymbolGrid,
    sensing_symbols: modem.SymbolGrid,
    seed,
    ul_power_w: float | None = None,
    dl_power_w: float | None = None,
) -> ObservationGrid:
    """Data-phase observation: superimposed uplink data and sensing echo plus noise."""
    ss = _seed_sequence(seed)
    numerology = config.numerology()
    bs_geom, user_geom, w_tx_dl, _, w_tx_ul = _beam_setup(config, scene, numerology)
    paths = derive_paths(scene, numerology, _child(ss, _STREAM_PATHS))
    sensing_paths, comm_paths = _split_paths(paths)
    h_c = comm_channel_grid(comm_paths, w_tx_ul, bs_geom, user_geom, numerology)
    h_s = sensing_channel_grid(sensing_paths, w_tx_dl, bs_geom, numerology)
    rng = np.random.default_rng(_child(ss, _STREAM_DATA_NOISE))
    shape = (numerology.num_subcarriers, numerology.num_symbols, bs_geom.num_elements)
    noise = _complex_noise(rng, shape, config.noise_var_w)
    pu = dbm_to_watts(config.ul_power_dbm) if ul_power_w is None else ul_power_w
    pd = dbm_to_watts(config.dl_power_dbm) if dl_power_w is None else dl_power_w
    return _data_observation(
        h_c.values * ul_symbols.values[:, :, None],
        h_s.values * sensing_symbols.values[:, :, None],
        noise,
        pu,
        pd,
    )


def _detect(parts: _TrialParts, echo: receiver.EchoResponseGrid):
    rd_map = compute_map(echo, parts.config.zero_pad_factor)
    peak = find_peak(rd_map)
    if peak is None:
        return False, float("nan"), float("nan"), float("nan")
    det = bins_to_estimates(
        peak,
        parts.numerology,
        peak_magnitude=float(rd_map.magnitudes[peak]),
        zero_pad_factor=parts.config.zero_pad_factor,
    )
    sq_err = (det.range_m - parts.true_range_m) ** 2
    gate_m = parts.config.miss_gate_bins * range_resolution_m(parts.numerology)
    if abs(det.range_m - parts.true_range_m) > gate_m:
        return False, det.range_m, float("nan"), det.radial_velocity_mps
    return True, det.range_m, sq_err, det.radial_velocity_mps


def _process_cases(parts: _TrialParts, cases, seed_label: str) -> dict[int, TrialResult]:
    config = parts.config
    pu = dbm_to_watts(config.ul_power_dbm)
    pd = dbm_to_watts(config.dl_power_dbm)
    results: dict[int, TrialResult] = {}

    # Shared scaled echo term keeps the two observation grids bit-identical to
    # what _data_observation produces while touching each big array only once.
    echo_term = math.sqrt(pd) * parts.echo_product
    y_super = None
    if 1 in cases or 2 in cases:
        if pu == 0.0:
            y_super = ObservationGrid(echo_term + parts.data_noise)
        else:
            y_super = ObservationGrid(
                math.sqrt(pu) * parts.comm_product + echo_term + parts.data_noise
            )

    for case in cases:
        bit_errors = 0
        bits_total = 0
        if case == 1:
            echo = receiver.extract_echo(y_super, parts.w_rx_sensing, parts.sensing_symbols)
        elif case == 2:
            pre_rx = _preamble_observation(
                parts.comm_column0, parts.preamble.values, parts.preamble_noise, pu
            )
            csi = receiver.estimate_ul_csi(pre_rx, parts.preamble, pu, config.noise_var_w)
            weights = receiver.mmse_combiner(csi, pu, config.noise_var_w)
            hard, _ = receiver.equalize_and_demod(
                y_super, weights, csi, pu, parts.constellation
            )
            rx_bits = modem.grid_to_bits(hard, parts.constellation)
            bit_errors = int(np.count_nonzero(rx_bits != parts.ul_bits))
            bits_total = int(parts.ul_bits.size)
            cleaned = receiver.cancel_communication(y_super, csi, hard, pu)
            echo = receiver.extract_echo(cleaned, parts.w_rx_sensing, parts.sensing_symbols)
        elif case == 3:
            y_clean = ObservationGrid(echo_term + parts.data_noise)
            echo = receiver.extract_echo(y_clean, parts.w_rx_sensing, parts.sensing_symbols)
        else:
            raise ConfigError(f"unknown case {case}")

        detected, range_est, sq_err, velocity = _detect(parts, echo)
        results[case] = TrialResult(
            case_id=case,
            seed=seed_label,
            detected=detected,
            range_est_m=range_est,
            range_sq_error_m2=sq_err,
            radial_velocity_mps=velocity,
            bit_errors=bit_errors,
            bits_total=bits_total,
        )
    return results


def run_trial_cases(config: SimConfig, seed, cases=CASES) -> dict[int, TrialResult]:
    """Run several cases on identical per-trial randomness (paired comparison)."""
    config.validate()
    ss = _seed_sequence(seed)
    parts = _build_trial(config, ss)
    return _process_cases(parts, cases, _seed_label(ss))


def run_trial(config: SimConfig, seed) -> TrialResult:
    """Run the configured case once; all randomness derives from `seed`."""
    return run_trial_cases(config, seed, (config.case,))[config.case]


_AXIS_ALIASES = {
    "dl_power": "dl_power_dbm",
    "ul_power": "ul_power_dbm",
    "dl_power_dbm": "dl_power_dbm",
    "ul_power_dbm": "ul_power_dbm",
}


def _sweep_job(job, config: SimConfig, axis_field: str, points, cases):
    point_idx, trial_idx = job
    cfg = replace(config, **{axis_field: points[point_idx]})
    ss = np.random.SeedSequence(config.master_seed, spawn_key=(point_idx, trial_idx))
    return point_idx, run_trial_cases(cfg, ss, cases)


def run_sweep_trials(
    config: SimConfig,
    axis: str,
    points,
    trials: int,
    cases=CASES,
    workers: int = 1,
) -> list[tuple[int, dict[int, TrialResult]]]:
    """Raw sweep outcomes: one (point index, per-case TrialResult) entry per trial.

    Trial (i, t) always uses the seed stream (master_seed, i, t), so re-running
    any subset of cases or points reproduces the same per-trial results, no
    matter how many workers execute them.
    """
    if axis not in _AXIS_ALIASES:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    axis_field = _AXIS_ALIASES[axis]
    points = [float(p) for p in points]
    if not points:
        raise ConfigError("sweep needs at least one point")
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    config.validate()

    jobs = [(i, t) for i in range(len(points)) for t in range(trials)]
    worker = partial(_sweep_job, config=config, axis_field=axis_field, points=points, cases=cases)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(worker, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    return [worker(job) for job in jobs]


def run_sweep_cases(
    config: SimConfig,
    axis: str,
    points,
    trials: int,
    cases=CASES,
    workers: int = 1,
) -> dict[int, SweepResult]:
    """Sweep one power axis for several cases at once, sharing each trial's draws."""
    if axis not in _AXIS_ALIASES:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    axis_field = _AXIS_ALIASES[axis]
    points = [float(p) for p in points]
    outcomes = run_sweep_trials(config, axis, points, trials, cases, workers)

    acc = {
        case: [
            {"sum_sq": 0.0, "detected": 0, "missed": 0, "bit_errors": 0, "bits": 0}
            for _ in points
        ]
        for case in cases
    }
    for point_idx, per_case in outcomes:
        for case, res in per_case.items():
            slot = acc[case][point_idx]
            if res.detected:
                slot["sum_sq"] += res.range_sq_error_m2
                slot["detected"] += 1
            else:
                slot["missed"] += 1
            slot["bit_errors"] += res.bit_errors
            slot["bits"] += res.bits_total

    sweeps: dict[int, SweepResult] = {}
    for case in cases:
        mse, ber, missed_rate, bits = [], [], [], []
        for slot in acc[case]:
            mse.append(slot["sum_sq"] / slot["detected"] if slot["detected"] else float("nan"))
            ber.append(slot["bit_errors"] / slot["bits"] if slot["bits"] else float("nan"))
            missed_rate.append(slot["missed"] / trials)
            bits.append(slot["bits"])
        sweeps[case] = SweepResult(
            axis=axis_field,
            case_id=case,
            points_dbm=points,
            mse_m2=mse,
            ber=ber,
            missed_rate=missed_rate,
            trials=[trials] * len(points),
            bits=bits,
        )
    return sweeps


def run_sweep(config: SimConfig, axis: str, points, trials: int, workers: int = 1) -> SweepResult:
    """Sweep one power axis for the configured case."""
    return run_sweep_cases(config, axis, points, trials, (config.case,), workers)[config.case]


def parse_points(spec: str) -> list[float]:
    """Parse a sweep grid given as "start:stop:step" (inclusive) or a single number."""
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) != 3:
            raise ValueError
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad points spec {spec!r}, expected 'a:b:step'") from None
    if step <= 0 or stop < start:
        raise ConfigError("points spec needs step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(count)]


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def write_csv(sweep: SweepResult, path) -> None:
    """Write one sweep as CSV (UTF-8, '\\n' line endings); empty cells mean undefined."""
    lines = ["axis_dbm,case,mse_m2,ber,missed_rate,trials,bits"]
    for i, point in enumerate(sweep.points_dbm):
        lines.append(
            ",".join(
                [
                    repr(float(point)),
                    str(sweep.case_id),
                    _fmt(sweep.mse_m2[i]),
                    _fmt(sweep.ber[i]),
                    _fmt(sweep.missed_rate[i]),
                    str(sweep.trials[i]),
                    str(sweep.bits[i]),
                ]
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
