"""Binary-channel information measures and the security threshold."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .tap import attack_error_rates, check_fraction, closed_form_table

# Rounding slack tolerated on probabilities assembled from floating-point tables.
_PROB_SLACK = 1e-12


def _probability(q: float, name: str) -> float:
    q = float(q)
    if not -_PROB_SLACK <= q <= 1 + _PROB_SLACK:
        raise ValueError(f"{name} must lie in [0, 1], got {q!r}")
    return min(max(q, 0.0), 1.0)


def binary_entropy(q: float) -> float:
    """Shannon entropy in bits of a Bernoulli(q) variable (0 log 0 = 0)."""
    q = _probability(q, "q")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def capacity(p_success: float) -> float:
    """Capacity of a binary symmetric channel that is right with probability ``p_success``."""
    p = _probability(p_success, "p_success")
    return 1.0 - binary_entropy(1.0 - p)


@dataclass(frozen=True)
class ChannelMetrics:
    theta: float
    phi: float
    alpha: float
    q_ae: float
    q_eb: float
    q_ab: float
    i_ae: float
    i_ab: float
    i_eb: float
    unsafe: bool


def channel_metrics(theta: float, phi: float, alpha: float) -> ChannelMetrics:
    """Mutual informations for Eve tapping a fraction ``alpha`` of the pulses.

    Each channel is treated as binary symmetric. Eve learns nothing from
    pulses she lets through, so her informations scale with ``alpha``; Bob's
    error rate is diluted by ``alpha`` instead. The link is flagged unsafe
    when I_AB <= min(I_AE, I_EB).
    """
    alpha = check_fraction(alpha)
    rates = attack_error_rates(closed_form_table(theta, phi), alpha)
    i_ae = alpha * capacity(1 - rates.q_ae)
    i_eb = alpha * capacity(1 - rates.q_eb)
    i_ab = capacity(1 - rates.q_ab)
    return ChannelMetrics(
        theta=theta,
        phi=phi,
        alpha=alpha,
        q_ae=rates.q_ae,
        q_eb=rates.q_eb,
        q_ab=rates.q_ab,
        i_ae=i_ae,
        i_ab=i_ab,
        i_eb=i_eb,
        unsafe=i_ab <= min(i_ae, i_eb),
    )


def security_margin(theta: float, phi: float, alpha: float) -> float:
    """I_AB - min(I_AE, I_EB); non-positive means unsafe."""
    m = channel_metrics(theta, phi, alpha)
    return m.i_ab - min(m.i_ae, m.i_eb)


def _bisect(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    # invariant: f(lo) > 0 >= f(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def threshold_alpha(theta: float, phi: float, tol: float = 1e-9) -> Optional[float]:
    """Smallest intercept fraction at which the link becomes unsafe.

    A coarse scan over alpha = 0, 0.01, ..., 1 brackets the first sign change
    of the security margin, then bisection refines it to ``tol``. Returns None
    when the link stays safe for every alpha in [0, 1].
    """
    def margin(a: float) -> float:
        return security_margin(theta, phi, a)

    prev = 0.0
    if margin(prev) <= 0:
        return 0.0
    for k in range(1, 101):
        a = k / 100
        if margin(a) <= 0:
            return _bisect(margin, prev, a, tol)
        prev = a
    return None
