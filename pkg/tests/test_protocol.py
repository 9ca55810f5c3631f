import math

import numpy as np
import pytest

from kerrtap.protocol import (
    Basis,
    InsufficientDataError,
    PulseRecord,
    PulseRecords,
    SimConfig,
    estimate_qber,
    expected_rates,
    run_bb84,
    sift,
)
from kerrtap.state import Detector


def sigma(p, n):
    return math.sqrt(p * (1 - p) / n)


def make_records(alice_bits, bob_bits, alice_basis=None, bob_basis=None):
    n = len(alice_bits)
    alice_basis = np.zeros(n, np.int8) if alice_basis is None else np.asarray(alice_basis, np.int8)
    bob_basis = alice_basis.copy() if bob_basis is None else np.asarray(bob_basis, np.int8)
    return PulseRecords(
        alice_basis=alice_basis,
        alice_bit=np.asarray(alice_bits, np.int8),
        intercepted=np.zeros(n, bool),
        eve_detector=np.full(n, -1, np.int8),
        eve_guess=np.full(n, -1, np.int8),
        bob_basis=bob_basis,
        bob_bit=np.asarray(bob_bits, np.int8),
        sifted=alice_basis == bob_basis,
    )


class TestSimConfig:
    @pytest.mark.parametrize("kwargs", [
        dict(n_pulses=0, alpha=0.5),
        dict(n_pulses=10, alpha=1.5),
        dict(n_pulses=10, alpha=0.5, channel_flip_rate=-0.1),
        dict(n_pulses=10, alpha=0.5, sample_fraction=0.0),
        dict(n_pulses=10, alpha=0.5, seed=-1),
        dict(n_pulses=10, alpha=0.5, seed=2**64),
        dict(n_pulses=10, alpha=0.5, phi=float("inf")),
        dict(n_pulses=10, alpha=0.5, chunk_size=0),
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SimConfig(**kwargs)

    def test_chunk_plan_covers_all_pulses(self):
        plan = SimConfig(n_pulses=10, alpha=0, chunk_size=4).chunk_plan()
        assert plan == [(0, 4), (4, 8), (8, 10)]


class TestRecords:
    def test_invariants(self):
        _, records = run_bb84(SimConfig(n_pulses=2000, alpha=0.5, seed=5))
        for r in records:
            assert (r.eve_detector is not None) == r.intercepted == (r.eve_guess is not None)
            assert r.sifted == (r.alice_basis == r.bob_basis)

    def test_indexing(self):
        _, records = run_bb84(SimConfig(n_pulses=100, alpha=1.0, seed=5))
        assert isinstance(records[0], PulseRecord)
        assert isinstance(records[-1].alice_basis, Basis)
        assert len(records[10:20]) == 10
        assert records[3].eve_detector in (Detector.D3, Detector.D4)

    def test_csv_dump(self):
        _, records = run_bb84(SimConfig(n_pulses=50, alpha=0.5, seed=9))
        lines = records.to_csv().splitlines()
        assert lines[0] == "alice_basis,alice_bit,intercepted,eve_detector,eve_guess,bob_basis,bob_bit,sifted"
        assert len(lines) == 51
        for line, r in zip(lines[1:], records):
            fields = line.split(",")
            assert fields[0] == r.alice_basis.value
            assert fields[2] == str(int(r.intercepted))
            assert fields[3] == (r.eve_detector.value if r.eve_detector else "-")
            assert fields[4] == ("-" if r.eve_guess is None else str(r.eve_guess))
            assert fields[7] == str(int(r.sifted))


class TestSift:
    def test_all_matching_is_identity(self):
        recs = make_records([0, 1, 1], [0, 1, 0])
        kept = sift(recs)
        assert len(kept) == 3 and np.array_equal(kept.alice_bit, recs.alice_bit)

    def test_none_matching_is_empty(self):
        recs = make_records([0, 1], [0, 1], alice_basis=[0, 1], bob_basis=[1, 0])
        assert len(sift(recs)) == 0

    def test_plain_record_lists(self):
        recs = list(make_records([0, 1, 0], [0, 1, 1], alice_basis=[0, 1, 0], bob_basis=[0, 0, 0]))
        kept = sift(recs)
        assert [r.alice_bit for r in kept] == [0, 0]

    def test_order_preserved(self):
        _, records = run_bb84(SimConfig(n_pulses=1000, alpha=0.3, seed=2))
        kept = list(sift(records))
        assert kept == [r for r in records if r.alice_basis == r.bob_basis]

    def test_retained_fraction(self):
        n = 10**6
        _, records = run_bb84(SimConfig(n_pulses=n, alpha=0.0, seed=11))
        frac = len(sift(records)) / n
        assert abs(frac - 0.5) <= 4 * sigma(0.5, n)


class TestEstimateQber:
    def test_identical_keys(self):
        est = estimate_qber(make_records([0, 1] * 50, [0, 1] * 50), 0.5, seed=1)
        assert est.qber == 0.0
        assert len(est.alice_key) == 50 and np.array_equal(est.alice_key, est.bob_key)

    def test_anticorrelated_keys(self):
        est = estimate_qber(make_records([0, 1] * 50, [1, 0] * 50), 0.3, seed=1)
        assert est.qber == 1.0

    def test_full_disclosure_leaves_no_key(self):
        est = estimate_qber(make_records([0, 1, 1], [0, 1, 1]), 1.0, seed=1)
        assert len(est.alice_key) == 0

    def test_empty_raises(self):
        with pytest.raises(InsufficientDataError):
            estimate_qber(make_records([], []), 0.5, seed=1)

    def test_rejects_bad_fraction(self):
        with pytest.raises(ValueError):
            estimate_qber(make_records([0], [0]), 0.0, seed=1)

    def test_concentrates_on_true_rate(self):
        rng = np.random.default_rng(123)
        n = 10**6
        alice = rng.integers(0, 2, n)
        bob = alice ^ (rng.random(n) < 0.25)
        est = estimate_qber(make_records(alice, bob), 0.5, seed=7)
        assert abs(est.qber - 0.25) <= 4 * sigma(0.25, n // 2)

    def test_seeded(self):
        recs = make_records([0, 1] * 500, [0, 0] * 500)
        assert estimate_qber(recs, 0.1, 3).qber == estimate_qber(recs, 0.1, 3).qber


class TestRun:
    def test_no_attack_no_noise(self):
        n = 10**5
        stats, records = run_bb84(SimConfig(n_pulses=n, alpha=0.0, seed=4))
        assert stats.qber_true == 0.0 and stats.qber_estimate == 0.0
        assert abs(stats.n_sifted - n / 2) <= 4 * math.sqrt(n) / 2
        assert stats.eve_accuracy_on_sifted is None
        est = estimate_qber(sift(records), 0.5, 4)
        assert np.array_equal(est.alice_key, est.bob_key)

    def test_channel_noise_only(self):
        n = 10**6
        stats, _ = run_bb84(SimConfig(n_pulses=n, alpha=0.0, channel_flip_rate=0.05, seed=4))
        assert abs(stats.qber_true - 0.05) <= 4 * sigma(0.05, stats.n_sifted)

    def test_deterministic(self):
        cfg = SimConfig(n_pulses=200_000, alpha=0.7, phi=2.0, seed=99)
        s1, r1 = run_bb84(cfg)
        s2, r2 = run_bb84(cfg)
        assert s1 == s2
        assert r1.to_csv() == r2.to_csv()

    def test_seed_changes_output(self):
        a, _ = run_bb84(SimConfig(n_pulses=10_000, alpha=0.7, seed=1))
        b, _ = run_bb84(SimConfig(n_pulses=10_000, alpha=0.7, seed=2))
        assert a != b

    def test_threaded_chunks_match_sequential(self):
        cfg = SimConfig(n_pulses=300_001, alpha=0.6, seed=17, chunk_size=10_000)
        s1, r1 = run_bb84(cfg, workers=1)
        s4, r4 = run_bb84(cfg, workers=4)
        assert s1 == s4
        for name in ("alice_basis", "alice_bit", "eve_detector", "bob_bit"):
            assert np.array_equal(getattr(r1, name), getattr(r4, name))

    def test_eve_perfect_on_rectilinear_when_aligned(self):
        _, records = run_bb84(SimConfig(n_pulses=50_000, alpha=1.0, eve_frame_angle=0.0, seed=8))
        rect = records[records.alice_basis == 0]
        # D3 exactly when Alice sent H (bit 0)
        assert np.array_equal(rect.eve_detector == 0, rect.alice_bit == 0)

    @pytest.mark.parametrize("alpha", [0.5, 1.0])
    @pytest.mark.parametrize("phi", [math.pi / 2, math.pi])
    @pytest.mark.parametrize("frame", [0.0, math.pi / 8])
    def test_converges_to_closed_form(self, alpha, phi, frame):
        cfg = SimConfig(n_pulses=10**6, alpha=alpha, phi=phi, eve_frame_angle=frame, seed=2024)
        stats, records = run_bb84(cfg)
        want = expected_rates(cfg)
        q = want["qber_true"]
        assert abs(stats.qber_true - q) <= 4 * sigma(q, stats.n_sifted)
        n_eve = int(np.sum(records.intercepted & records.sifted))
        acc = want["eve_accuracy_on_sifted"]
        assert abs(stats.eve_accuracy_on_sifted - acc) <= 4 * sigma(acc, n_eve)
