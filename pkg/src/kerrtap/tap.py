"""Detection statistics of the Kerr-interferometer tap.

Alice sends u = cos(theta)|H> + sin(theta)|V> or the orthogonal
v = cos(theta)|V> - sin(theta)|H>, Bob measures in the {u, v} basis, and Eve
reads detector D3 or D4. ``theta`` is always measured in Eve's frame, i.e.
relative to the H/V axes of the Kerr cell.

Table entries are named ``p<detector>_<sent><measured>``, so ``p3_vu`` is
the probability that Alice sent v, Bob found u and the probe hit D3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .state import ATOL, BobOutcome, Detector, joint_distribution, run_probe


@dataclass(frozen=True)
class ProbabilityTable:
    theta: float
    phi: float
    p3_uu: float
    p4_uu: float
    p3_vv: float
    p4_vv: float
    p3_uv: float
    p4_uv: float
    p3_vu: float
    p4_vu: float

    ENTRIES = ("p3_uu", "p4_uu", "p3_vv", "p4_vv", "p3_uv", "p4_uv", "p3_vu", "p4_vu")

    def entries(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self.ENTRIES}

    def row_sums(self) -> tuple[float, float]:
        """Total probability given Alice sent u, and given she sent v."""
        return (
            self.p3_uu + self.p4_uu + self.p3_uv + self.p4_uv,
            self.p3_vv + self.p4_vv + self.p3_vu + self.p4_vu,
        )

    def detector_given(self, sent: str, detector: Detector) -> float:
        """P(detector | Alice sent ``sent``), marginalised over Bob."""
        d = "3" if detector is Detector.D3 else "4"
        other = "v" if sent == "u" else "u"
        return getattr(self, f"p{d}_{sent}{sent}") + getattr(self, f"p{d}_{sent}{other}")

    def check(self, atol: float = ATOL) -> None:
        """Raise ValueError if the table is not a pair of valid distributions."""
        for name, p in self.entries().items():
            if not -atol <= p <= 1 + atol:
                raise ValueError(f"{name}={p!r} is not a probability")
        for which, total in zip("uv", self.row_sums()):
            if abs(total - 1.0) > atol:
                raise ValueError(f"row for Alice sending {which} sums to {total!r}")


def closed_form_table(theta: float, phi: float) -> ProbabilityTable:
    """Joint probabilities from the analytic expressions for the tap."""
    c2 = math.cos(theta) ** 2
    s2 = math.sin(theta) ** 2
    cphi = math.cos(phi)
    cross = s2 * c2 * math.sin(phi / 2) ** 2
    return ProbabilityTable(
        theta=theta,
        phi=phi,
        p3_uu=0.5 * (1 - c2 * s2 * (1 - cphi) + c2 + cphi * s2),
        p4_uu=0.5 * s2 * s2 * (1 - cphi),
        p3_vv=0.5 * (1 - c2 * s2 * (1 - cphi) + s2 + cphi * c2),
        p4_vv=0.5 * c2 * c2 * (1 - cphi),
        p3_uv=cross,
        p4_uv=cross,
        p3_vu=cross,
        p4_vu=cross,
    )


def circuit_table(theta: float, phi: float) -> ProbabilityTable:
    """Same table, computed by pushing u and v through the state-vector circuit."""
    from_u = joint_distribution(run_probe(theta, phi), theta)
    from_v = joint_distribution(run_probe(theta + math.pi / 2, phi), theta)
    U, V = BobOutcome.U, BobOutcome.V
    D3, D4 = Detector.D3, Detector.D4
    return ProbabilityTable(
        theta=theta,
        phi=phi,
        p3_uu=from_u[U, D3],
        p4_uu=from_u[U, D4],
        p3_vv=from_v[V, D3],
        p4_vv=from_v[V, D4],
        p3_uv=from_u[V, D3],
        p4_uv=from_u[V, D4],
        p3_vu=from_v[U, D3],
        p4_vu=from_v[U, D4],
    )


def eve_decode(detector: Detector) -> BobOutcome:
    """Eve's guess of which basis state was sent: D3 -> u, D4 -> v."""
    return BobOutcome.U if Detector(detector) is Detector.D3 else BobOutcome.V


@dataclass(frozen=True)
class AttackErrorRates:
    q_ae: float
    q_eb: float
    q_ab_per_intercept: float
    alpha: float
    q_ab: float


def check_fraction(value: float, name: str = "alpha") -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def attack_error_rates(table: ProbabilityTable, alpha: float) -> AttackErrorRates:
    """Error rates of the three pairwise channels for intercept fraction ``alpha``.

    ``q_ae`` and ``q_eb`` are per intercepted pulse; ``q_ab`` is the rate Bob
    sees over all sifted pulses. Alice's two inputs are equally likely.
    """
    alpha = check_fraction(alpha)
    t = table
    q_ae = (t.p3_vu + t.p3_vv + t.p4_uu + t.p4_uv) / 2
    q_ab_per_intercept = (t.p3_uv + t.p4_uv + t.p3_vu + t.p4_vu) / 2
    # Eve's decode disagrees with Bob: D4 while Bob saw u, or D3 while Bob saw v
    q_eb = ((t.p4_uu + t.p3_uv) + (t.p4_vu + t.p3_vv)) / 2
    return AttackErrorRates(
        q_ae=q_ae,
        q_eb=q_eb,
        q_ab_per_intercept=q_ab_per_intercept,
        alpha=alpha,
        q_ab=alpha * q_ab_per_intercept,
    )
