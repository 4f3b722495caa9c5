"""Link-level simulator for concurrent downlink sensing and uplink communication.

A base station transmits a dedicated OFDM sensing signal and receives its echo
superimposed on the uplink data of a single user. The receiver demodulates the
uplink first, cancels it, and range-Doppler-processes the residual echo.
"""

from .channel import (
    SPEED_OF_LIGHT,
    ArrayFrame,
    ChannelGrid,
    OfdmNumerology,
    PropagationPath,
    Scene,
    comm_channel_grid,
    derive_paths,
    sensing_channel_grid,
)
from .exceptions import (
    ConfigError,
    DegenerateGeometryError,
    EqualizationSingularityError,
    SingularChannelError,
)
from .harness import (
    SimConfig,
    SweepResult,
    TrialResult,
    dbm_to_watts,
    run_sweep,
    run_sweep_cases,
    run_trial,
    run_trial_cases,
    synthesize_data_rx,
    synthesize_preamble_rx,
    write_csv,
)
from .modem import (
    QamConstellation,
    SymbolGrid,
    build_constellation,
    demap_ml,
    gen_preamble,
    gen_sensing_symbols,
    map_bits,
)
from .range_doppler import (
    DetectionResult,
    RangeDopplerMap,
    bins_to_estimates,
    compute_map,
    find_peak,
    range_resolution_m,
)
from .receiver import (
    CombinerWeights,
    CsiEstimate,
    EchoResponseGrid,
    ObservationGrid,
    cancel_communication,
    equalize_and_demod,
    estimate_ul_csi,
    extract_echo,
    mmse_combiner,
    mmse_objective,
)
from .upa import (
    Angle2D,
    ArrayGeometry,
    Beamformer,
    SteeringVector,
    ls_transmit_beamformer,
    sensing_receive_beamformer,
    steering_element,
    steering_vector,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
