"""State-vector simulation of post-selected teleportation loops.

Submodules: ``linalg`` (dense tensor algebra), ``kernel`` (gates, Bell basis,
state/map duality, measurement), ``loop`` (backward wires as post-selected
teleportation), ``protocols`` (encrypted future measurement, multistage
pipelining) and ``cli``.
"""
from ctcsim.kernel import (
    BELL_BASIS,
    BELL_LABELS,
    PSI00,
    BellLabel,
    MeasurementBasis,
    RngStream,
    apply_gate,
    bell_state,
    born_distribution,
    f_map,
    g_map,
    measure_in_basis,
    sigma,
)
from ctcsim.linalg import dagger, equal_up_to_phase, partial_trace, tensor_product
from ctcsim.loop import LoopCircuit, effective_operator, simulate_loop, time_travel_channel, verify_loop_identity
from ctcsim.protocols import (
    TrialRecord,
    build_relabel_table,
    ciphertext_uselessness_check,
    decode_trials,
    run_encrypted_measurement,
    run_multistage,
)

__version__ = "0.1.0"
