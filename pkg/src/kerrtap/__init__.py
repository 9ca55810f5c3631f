"""Translucent eavesdropping on BB84 with a Kerr-cell Mach-Zehnder probe."""

from .info import ChannelMetrics, binary_entropy, capacity, channel_metrics, threshold_alpha
from .protocol import PulseRecord, PulseRecords, RunStats, SimConfig, estimate_qber, run_bb84, sift
from .state import (
    PureState,
    apply_bs1,
    apply_bs2,
    apply_kerr,
    attach_probe,
    joint_distribution,
    make_qubit,
)
from .tap import AttackErrorRates, ProbabilityTable, attack_error_rates, circuit_table, closed_form_table, eve_decode

__version__ = "0.1.0"
