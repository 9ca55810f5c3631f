"""Seeded Monte Carlo run of BB84 with Eve's Kerr tap on a fraction of the pulses.

Random numbers come from numpy's PCG64. The run is cut into chunks of
``SimConfig.chunk_size`` pulses; chunk ``k`` draws from its own stream seeded
by ``SeedSequence(seed, spawn_key=(0, k))``, always in the same order:

    alice basis, alice bit, intercept draw, bob basis, outcome draw, flip draw

so chunks can be processed in any order or in parallel and still reproduce
the sequential result. The QBER disclosure subsample uses
``SeedSequence(seed, spawn_key=(1,))``.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterator, NamedTuple, Optional, Sequence, TextIO, Union

import numpy as np

from .state import BobOutcome, Detector, joint_distribution, run_probe
from .tap import attack_error_rates, check_fraction, closed_form_table

DEFAULT_CHUNK_SIZE = 1 << 16


class Basis(str, Enum):
    RECTILINEAR = "rectilinear"
    DIAGONAL = "diagonal"

    @property
    def angle(self) -> float:
        return 0.0 if self is Basis.RECTILINEAR else math.pi / 4


BASES = (Basis.RECTILINEAR, Basis.DIAGONAL)
DETECTORS = (Detector.D3, Detector.D4)
# order of the four joint outcomes sampled for an intercepted pulse
_JOINT_ORDER = [(o, d) for o in (BobOutcome.U, BobOutcome.V) for d in DETECTORS]


class InsufficientDataError(ValueError):
    """Raised when there are no sifted bits to estimate a QBER from."""


@dataclass(frozen=True)
class SimConfig:
    n_pulses: int
    alpha: float
    phi: float = math.pi
    eve_frame_angle: float = math.pi / 8
    seed: int = 0
    channel_flip_rate: float = 0.0
    sample_fraction: float = 0.5
    chunk_size: int = DEFAULT_CHUNK_SIZE

    def __post_init__(self):
        if int(self.n_pulses) != self.n_pulses or self.n_pulses < 1:
            raise ValueError(f"n_pulses must be a positive integer, got {self.n_pulses!r}")
        if int(self.chunk_size) != self.chunk_size or self.chunk_size < 1:
            raise ValueError(f"chunk_size must be a positive integer, got {self.chunk_size!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        check_fraction(self.alpha, "alpha")
        check_fraction(self.channel_flip_rate, "channel_flip_rate")
        if not 0.0 < self.sample_fraction <= 1.0:
            raise ValueError(f"sample_fraction must lie in (0, 1], got {self.sample_fraction!r}")
        for name in ("phi", "eve_frame_angle"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def chunk_plan(self) -> list[tuple[int, int]]:
        """(start, stop) pulse ranges; each chunk owns one RNG sub-stream."""
        return [
            (start, min(start + self.chunk_size, self.n_pulses))
            for start in range(0, self.n_pulses, self.chunk_size)
        ]


@dataclass(frozen=True)
class PulseRecord:
    alice_basis: Basis
    alice_bit: int
    intercepted: bool
    eve_detector: Optional[Detector]
    eve_guess: Optional[int]
    bob_basis: Basis
    bob_bit: int
    sifted: bool


RECORD_FIELDS = tuple(PulseRecord.__dataclass_fields__)


@dataclass(frozen=True, eq=False)
class PulseRecords(Sequence[PulseRecord]):
    """Column store of pulse records; indexing yields ``PulseRecord`` objects.

    ``eve_detector`` is coded 0 = D3, 1 = D4, -1 = not intercepted, and
    ``eve_guess`` uses -1 for "no guess". Bases are coded 0 = rectilinear,
    1 = diagonal.
    """

    alice_basis: np.ndarray
    alice_bit: np.ndarray
    intercepted: np.ndarray
    eve_detector: np.ndarray
    eve_guess: np.ndarray
    bob_basis: np.ndarray
    bob_bit: np.ndarray
    sifted: np.ndarray

    @classmethod
    def concatenate(cls, parts: Sequence["PulseRecords"]) -> "PulseRecords":
        return cls(**{f: np.concatenate([getattr(p, f) for p in parts]) for f in RECORD_FIELDS})

    def __len__(self) -> int:
        return len(self.alice_bit)

    def __getitem__(self, index):
        if isinstance(index, (int, np.integer)):
            return self._record(int(index))
        return PulseRecords(**{f: getattr(self, f)[index] for f in RECORD_FIELDS})

    def __iter__(self) -> Iterator[PulseRecord]:
        for i in range(len(self)):
            yield self._record(i)

    def _record(self, i: int) -> PulseRecord:
        det = int(self.eve_detector[i])
        guess = int(self.eve_guess[i])
        return PulseRecord(
            alice_basis=BASES[self.alice_basis[i]],
            alice_bit=int(self.alice_bit[i]),
            intercepted=bool(self.intercepted[i]),
            eve_detector=None if det < 0 else DETECTORS[det],
            eve_guess=None if guess < 0 else guess,
            bob_basis=BASES[self.bob_basis[i]],
            bob_bit=int(self.bob_bit[i]),
            sifted=bool(self.sifted[i]),
        )

    def write_csv(self, stream: TextIO) -> None:
        """One line per pulse, fields in ``PulseRecord`` order, header first."""
        basis = np.array([b.value for b in BASES])
        det = np.array(["D3", "D4", "-"])
        guess = np.array(["0", "1", "-"])
        cols = [
            basis[self.alice_basis],
            self.alice_bit.astype(str),
            self.intercepted.astype(np.int8).astype(str),
            det[self.eve_detector],
            guess[self.eve_guess],
            basis[self.bob_basis],
            self.bob_bit.astype(str),
            self.sifted.astype(np.int8).astype(str),
        ]
        stream.write(",".join(RECORD_FIELDS) + "\n")
        for row in zip(*cols):
            stream.write(",".join(row) + "\n")

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


@dataclass(frozen=True)
class RunStats:
    n_pulses: int
    n_sifted: int
    n_disclosed: int
    key_length: int
    qber_estimate: Optional[float]
    qber_true: Optional[float]
    eve_accuracy_on_sifted: Optional[float]
    per_basis_qber: dict = field(default_factory=dict)
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _joint_tables(config: SimConfig) -> np.ndarray:
    """Cumulative joint distributions indexed by [alice_basis, alice_bit, bob_basis]."""
    cum = np.empty((2, 2, 2, 4))
    for a, a_basis in enumerate(BASES):
        for bit in (0, 1):
            sent = a_basis.angle + bit * math.pi / 2 - config.eve_frame_angle
            state = run_probe(sent, config.phi)
            for b, b_basis in enumerate(BASES):
                dist = joint_distribution(state, b_basis.angle - config.eve_frame_angle)
                cum[a, bit, b] = np.cumsum([dist[k] for k in _JOINT_ORDER])
    return cum


def _chunk_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0, k))))


def _simulate_chunk(config: SimConfig, cum: np.ndarray, k: int, size: int) -> PulseRecords:
    rng = _chunk_rng(config.seed, k)
    alice_basis = rng.integers(0, 2, size, dtype=np.int8)
    alice_bit = rng.integers(0, 2, size, dtype=np.int8)
    intercepted = rng.random(size) < config.alpha
    bob_basis = rng.integers(0, 2, size, dtype=np.int8)
    outcome_draw = rng.random(size)
    flip_draw = rng.random(size)

    # tapped pulses: sample (Bob outcome, detector) jointly
    c = cum[alice_basis, alice_bit, bob_basis]
    joint = np.sum(outcome_draw[:, None] >= c[:, :3], axis=1)
    tapped_bob_bit = (joint >= 2).astype(np.int8)
    detector = (joint % 2).astype(np.int8)

    # untouched pulses: Malus's law plus optional channel noise
    rel = (alice_basis.astype(float) - bob_basis) * (math.pi / 4) + alice_bit * (math.pi / 2)
    p_bit0 = np.cos(rel) ** 2
    clean_bit = (outcome_draw >= p_bit0).astype(np.int8)
    clean_bit ^= (flip_draw < config.channel_flip_rate).astype(np.int8)

    bob_bit = np.where(intercepted, tapped_bob_bit, clean_bit).astype(np.int8)
    eve_detector = np.where(intercepted, detector, -1).astype(np.int8)
    return PulseRecords(
        alice_basis=alice_basis,
        alice_bit=alice_bit,
        intercepted=intercepted,
        eve_detector=eve_detector,
        # D3 decodes to u, which carries bit 0 in both basis pairs
        eve_guess=eve_detector.copy(),
        bob_basis=bob_basis,
        bob_bit=bob_bit,
        sifted=alice_basis == bob_basis,
    )


def sift(records: Union[PulseRecords, Sequence[PulseRecord]]):
    """Keep the pulses where Alice and Bob used the same basis, in order."""
    if isinstance(records, PulseRecords):
        return records[records.alice_basis == records.bob_basis]
    return [r for r in records if r.alice_basis == r.bob_basis]


class QberEstimate(NamedTuple):
    qber: float
    alice_key: np.ndarray
    bob_key: np.ndarray


def estimate_qber(sifted: PulseRecords, sample_fraction: float, seed: int) -> QberEstimate:
    """Disclose a random subsample of the sifted bits and measure its error rate.

    The undisclosed bits are returned as Alice's and Bob's working keys.
    """
    if not 0.0 < sample_fraction <= 1.0:
        raise ValueError(f"sample_fraction must lie in (0, 1], got {sample_fraction!r}")
    if not isinstance(sifted, PulseRecords):
        sifted = _from_records(sifted)
    n = len(sifted)
    if n == 0:
        raise InsufficientDataError("no sifted bits to compare")
    k = min(n, max(1, round(sample_fraction * n)))
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1,))))
    disclosed = np.zeros(n, dtype=bool)
    disclosed[rng.choice(n, size=k, replace=False)] = True
    mismatch = sifted.alice_bit[disclosed] != sifted.bob_bit[disclosed]
    return QberEstimate(
        qber=float(np.mean(mismatch)),
        alice_key=sifted.alice_bit[~disclosed],
        bob_key=sifted.bob_bit[~disclosed],
    )


def _from_records(records: Sequence[PulseRecord]) -> PulseRecords:
    def code(x, table):
        return -1 if x is None else table.index(x)

    return PulseRecords(
        alice_basis=np.array([BASES.index(r.alice_basis) for r in records], dtype=np.int8),
        alice_bit=np.array([r.alice_bit for r in records], dtype=np.int8),
        intercepted=np.array([r.intercepted for r in records], dtype=bool),
        eve_detector=np.array([code(r.eve_detector, DETECTORS) for r in records], dtype=np.int8),
        eve_guess=np.array([-1 if r.eve_guess is None else r.eve_guess for r in records], dtype=np.int8),
        bob_basis=np.array([BASES.index(r.bob_basis) for r in records], dtype=np.int8),
        bob_bit=np.array([r.bob_bit for r in records], dtype=np.int8),
        sifted=np.array([r.sifted for r in records], dtype=bool),
    )


def _rate(mask: np.ndarray) -> Optional[float]:
    return float(np.mean(mask)) if mask.size else None


def run_bb84(config: SimConfig, workers: int = 1) -> tuple[RunStats, PulseRecords]:
    """Simulate ``config.n_pulses`` pulses and collect the sifted-key statistics.

    ``workers`` > 1 spreads the chunk plan over a thread pool; the output is
    identical to the single-threaded run.
    """
    cum = _joint_tables(config)
    plan = config.chunk_plan()

    def work(item):
        k, (start, stop) = item
        return _simulate_chunk(config, cum, k, stop - start)

    if workers > 1 and len(plan) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, enumerate(plan)))
    else:
        parts = [work(item) for item in enumerate(plan)]
    records = PulseRecords.concatenate(parts)

    kept = sift(records)
    errors = kept.alice_bit != kept.bob_bit
    if len(kept):
        est = estimate_qber(kept, config.sample_fraction, config.seed)
        qber_estimate, key_length = est.qber, len(est.alice_key)
    else:
        qber_estimate, key_length = None, 0
    seen_by_eve = kept.intercepted
    eve_right = kept.eve_guess[seen_by_eve] == kept.alice_bit[seen_by_eve]
    stats = RunStats(
        n_pulses=config.n_pulses,
        n_sifted=len(kept),
        n_disclosed=len(kept) - key_length,
        key_length=key_length,
        qber_estimate=qber_estimate,
        qber_true=_rate(errors),
        eve_accuracy_on_sifted=_rate(eve_right),
        per_basis_qber={
            b.value: _rate(errors[kept.alice_basis == i]) for i, b in enumerate(BASES)
        },
        seed=config.seed,
    )
    return stats, records


def expected_rates(config: SimConfig) -> dict:
    """Large-n limits of the run statistics from the closed-form tap tables."""
    per_basis, eve_error = {}, []
    for b in BASES:
        rates = attack_error_rates(
            closed_form_table(b.angle - config.eve_frame_angle, config.phi), config.alpha
        )
        per_basis[b.value] = rates.q_ab + (1 - config.alpha) * config.channel_flip_rate
        eve_error.append(rates.q_ae)
    return {
        "qber_true": sum(per_basis.values()) / 2,
        "eve_accuracy_on_sifted": 1 - sum(eve_error) / 2,
        "per_basis_qber": per_basis,
    }
