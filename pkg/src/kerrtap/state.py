"""State vectors for a polarization qubit passing through Eve's Kerr interferometer.

The joint system is the transmitted photon's polarization (H/V) times the
path of Eve's probe photon. The probe's own polarization is always vertical,
so only its spatial mode is tracked. The mode set depends on where the probe
is in the circuit:

    QUBIT      no probe attached yet
    INPUT      probe in the input port of the first beam splitter
    ARMS       probe in arm 1 (through the Kerr cell) or arm 2
    DETECTORS  probe at photodetector D3 or D4

Amplitudes are stored as a dense complex array of shape (2, n_modes): row 0
is H, row 1 is V. Everything here is immutable; every operation returns a
new state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Mapping, NamedTuple, Tuple

import numpy as np

ATOL = 1e-12

_SQRT_HALF = 1.0 / math.sqrt(2.0)


class Polarization(str, Enum):
    H = "H"
    V = "V"


class ProbeMode(str, Enum):
    IN = "IN"
    ARM1 = "ARM1"
    ARM2 = "ARM2"
    D3 = "D3"
    D4 = "D4"


class Stage(Enum):
    QUBIT = ()
    INPUT = (ProbeMode.IN,)
    ARMS = (ProbeMode.ARM1, ProbeMode.ARM2)
    DETECTORS = (ProbeMode.D3, ProbeMode.D4)

    @property
    def modes(self) -> Tuple[ProbeMode, ...]:
        return self.value


class BobOutcome(str, Enum):
    U = "u"
    V = "v"


class Detector(str, Enum):
    D3 = "D3"
    D4 = "D4"


class BasisLabel(NamedTuple):
    polarization: Polarization
    probe_mode: ProbeMode | None = None


_POL_INDEX = {Polarization.H: 0, Polarization.V: 1}


class StageError(ValueError):
    """An operation was applied to a state at the wrong point of the circuit."""


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitudes over polarization x probe mode at one circuit stage."""

    amplitudes: np.ndarray
    stage: Stage

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        width = max(len(self.stage.modes), 1)
        if amps.shape != (2, width):
            raise ValueError(
                f"stage {self.stage.name} needs amplitude shape (2, {width}), got {amps.shape}"
            )
        flat = amps.ravel()
        norm = float(np.vdot(flat, flat).real)
        if not math.isfinite(norm):
            raise ValueError("amplitudes must be finite")
        if abs(norm - 1.0) > ATOL:
            raise ValueError(f"state is not normalized (squared norm {norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_mapping(cls, amplitudes: Mapping[BasisLabel, complex], stage: Stage) -> "PureState":
        width = max(len(stage.modes), 1)
        arr = np.zeros((2, width), dtype=np.complex128)
        for label, amp in amplitudes.items():
            arr[_POL_INDEX[label.polarization], _mode_index(stage, label.probe_mode)] = amp
        return cls(arr, stage)

    def labels(self) -> Tuple[BasisLabel, ...]:
        modes = self.stage.modes or (None,)
        return tuple(BasisLabel(p, m) for p in Polarization for m in modes)

    def as_dict(self) -> Dict[BasisLabel, complex]:
        return {label: self[label] for label in self.labels()}

    def __getitem__(self, label: BasisLabel) -> complex:
        i = _POL_INDEX[label.polarization]
        return complex(self.amplitudes[i, _mode_index(self.stage, label.probe_mode)])

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def overlap(self, other: "PureState") -> complex:
        """Inner product <self|other>; both states must be at the same stage."""
        if other.stage is not self.stage:
            raise StageError("cannot compare states at different circuit stages")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def equal_up_to_phase(self, other: "PureState", atol: float = ATOL) -> bool:
        return abs(abs(self.overlap(other)) - 1.0) <= atol


def _mode_index(stage: Stage, mode: ProbeMode | None) -> int:
    if stage is Stage.QUBIT:
        if mode is not None:
            raise StageError("qubit-only state has no probe mode")
        return 0
    try:
        return stage.modes.index(mode)
    except ValueError:
        raise StageError(f"mode {mode} is not active at stage {stage.name}") from None


def _require(state: PureState, stage: Stage, op: str) -> None:
    if state.stage is not stage:
        raise StageError(f"{op} needs a state at stage {stage.name}, got {state.stage.name}")


def polarization_vector(theta: float) -> np.ndarray:
    """(H, V) components of a linear polarization at angle theta."""
    return np.array([math.cos(theta), math.sin(theta)], dtype=np.complex128)


def orthogonal_vector(theta: float) -> np.ndarray:
    """(H, V) components of cos(theta)|V> - sin(theta)|H>."""
    return np.array([-math.sin(theta), math.cos(theta)], dtype=np.complex128)


def make_qubit(theta: float) -> PureState:
    """cos(theta)|H> + sin(theta)|V>, with no probe attached."""
    return PureState(polarization_vector(theta).reshape(2, 1), Stage.QUBIT)


def attach_probe(qubit: PureState) -> PureState:
    """Tensor the qubit with Eve's probe photon sitting in the input port."""
    _require(qubit, Stage.QUBIT, "attach_probe")
    return PureState(qubit.amplitudes.copy(), Stage.INPUT)


# Columns map an input mode to output-mode amplitudes.
BS1 = np.array([[1.0], [1j]], dtype=np.complex128) * _SQRT_HALF
BS2 = np.array([[1j, 1.0], [1.0, 1j]], dtype=np.complex128) * _SQRT_HALF


def apply_bs1(state: PureState) -> PureState:
    """First 50:50 beam splitter: IN -> (ARM1 + i ARM2)/sqrt(2)."""
    _require(state, Stage.INPUT, "apply_bs1")
    return PureState(state.amplitudes @ BS1.T, Stage.ARMS)


def apply_kerr(state: PureState, phi: float) -> PureState:
    """Cross-Kerr phase e^{i phi} on the |V>|ARM1> component only."""
    _require(state, Stage.ARMS, "apply_kerr")
    amps = state.amplitudes.copy()
    amps[1, 0] *= complex(math.cos(phi), math.sin(phi))
    return PureState(amps, Stage.ARMS)


def apply_bs2(state: PureState) -> PureState:
    """Second beam splitter: ARM1 -> (i D3 + D4)/sqrt(2), ARM2 -> (D3 + i D4)/sqrt(2)."""
    _require(state, Stage.ARMS, "apply_bs2")
    return PureState(state.amplitudes @ BS2.T, Stage.DETECTORS)


def run_probe(theta: float, phi: float) -> PureState:
    """Send a qubit at angle theta through the whole interferometer."""
    return apply_bs2(apply_kerr(apply_bs1(attach_probe(make_qubit(theta))), phi))


def joint_distribution(state: PureState, bob_basis: float) -> Dict[Tuple[BobOutcome, Detector], float]:
    """Born-rule probabilities for (Bob's outcome, Eve's detector).

    Bob projects the polarization onto u (angle ``bob_basis``) or the
    orthogonal v; Eve reads which detector the probe reached.
    """
    _require(state, Stage.DETECTORS, "joint_distribution")
    u = polarization_vector(bob_basis)
    v = orthogonal_vector(bob_basis)
    # projections onto Bob's states, one amplitude per detector
    probs = {}
    for outcome, vec in ((BobOutcome.U, u), (BobOutcome.V, v)):
        amps = vec.conj() @ state.amplitudes
        for detector, amp in zip((Detector.D3, Detector.D4), amps):
            probs[(outcome, detector)] = float(abs(amp) ** 2)
    return probs
