"""Regression checks run by ``kerrtap verify``.

Each check returns a ``CheckResult``; the suite covers the closed-form versus
circuit agreement on a grid and the published reference numbers.
"""
from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass
from typing import List

import numpy as np

from .info import capacity, channel_metrics, threshold_alpha
from .state import ATOL, PureState, Stage, apply_bs1, apply_kerr, attach_probe, make_qubit
from .tap import attack_error_rates, circuit_table, closed_form_table


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def entangled_state_formula(theta: float, phi: float) -> PureState:
    """Probe-qubit state after the Kerr cell, written out term by term.

    (cos t |H>|p1> + sin t e^{i phi} |V>|p1> + i |u>|p2>) / sqrt(2)
    """
    c, s = math.cos(theta), math.sin(theta)
    e = cmath.exp(1j * phi)
    amps = np.array([[c, 1j * c], [s * e, 1j * s]]) / math.sqrt(2)
    return PureState(amps, Stage.ARMS)


def plus_state_formula(phi: float) -> PureState:
    """Same state for a |+> input, expanded over |+> and |->."""
    e = cmath.exp(1j * phi)
    plus = np.array([1, 1]) / math.sqrt(2)
    minus = np.array([1, -1]) / math.sqrt(2)
    p1 = plus * (1 + e) + minus * (1 - e)
    p2 = plus * 2j
    return PureState(np.stack([p1, p2], axis=1) / (2 * math.sqrt(2)), Stage.ARMS)


def after_kerr(theta: float, phi: float) -> PureState:
    return apply_kerr(apply_bs1(attach_probe(make_qubit(theta))), phi)


def oracle_grid(n: int) -> tuple[float, float]:
    """Largest closed-form/circuit discrepancy and largest invariant violation on an n x n grid.

    theta spans [0, pi] and phi spans [0, 2 pi].
    """
    worst_gap = worst_invariant = 0.0
    for theta in np.linspace(0, math.pi, n):
        for phi in np.linspace(0, 2 * math.pi, n):
            exact = closed_form_table(theta, phi)
            brute = circuit_table(theta, phi)
            a, b = exact.entries(), brute.entries()
            worst_gap = max(worst_gap, max(abs(a[k] - b[k]) for k in a))
            for t in (exact, brute):
                cross = (t.p3_uv, t.p4_uv, t.p3_vu, t.p4_vu)
                worst_invariant = max(
                    worst_invariant,
                    max(abs(r - 1) for r in t.row_sums()),
                    max(cross) - min(cross),
                )
    return worst_gap, worst_invariant


def _within(name: str, value: float, target: float, tol: float) -> CheckResult:
    ok = bool(abs(value - target) <= tol)
    return CheckResult(name, ok, f"{value:.6g} vs {target:.6g} (tol {tol:g})")


def run_checks(grid: int = 101) -> List[CheckResult]:
    results: List[CheckResult] = []

    t0 = time.perf_counter()
    gap, invariant = oracle_grid(grid)
    elapsed = time.perf_counter() - t0
    results.append(CheckResult(
        f"closed form = circuit on {grid}x{grid} grid",
        gap <= ATOL,
        f"max |diff| {gap:.3g} in {elapsed:.2f}s",
    ))
    results.append(CheckResult(
        "row sums and equal cross terms",
        invariant <= ATOL,
        f"max violation {invariant:.3g}",
    ))

    results.append(_within("capacity(3/4)", capacity(0.75), 0.189, 5e-4))

    worked = closed_form_table(0.0, math.pi)
    rates = attack_error_rates(worked, 1.0)
    results.append(CheckResult(
        "H/V input: perfect identification, no disturbance",
        max(rates.q_ae, rates.q_ab_per_intercept, abs(worked.p3_uu - 1), abs(worked.p4_vv - 1)) <= ATOL,
        f"q_ae={rates.q_ae:.3g} q_ab={rates.q_ab_per_intercept:.3g} "
        f"P(D3|H)={worked.p3_uu:.12g} P(D4|V)={worked.p4_vv:.12g}",
    ))

    diag = closed_form_table(math.pi / 4, math.pi)
    d3 = diag.p3_uu + diag.p3_uv
    bob_err = diag.p3_uv + diag.p4_uv
    results.append(CheckResult(
        "|+> input: D3/D4 even split, Bob error 1/2",
        max(abs(d3 - 0.5), abs(bob_err - 0.5)) <= ATOL,
        f"P(D3)={d3:.12g} Bob error={bob_err:.12g}",
    ))

    m = channel_metrics(math.pi / 8, math.pi, 1.0)
    results.append(_within("I_AE at bisecting basis, alpha=1", m.i_ae, 0.40, 5e-3))
    results.append(_within("q_AB at bisecting basis, alpha=1", m.q_ab, 0.25, ATOL))

    star = threshold_alpha(math.pi / 8, math.pi)
    if star is None:
        results.append(CheckResult("threshold alpha", False, "no threshold found"))
    else:
        results.append(_within("threshold alpha", star, 0.755, 1e-3))
        results.append(_within("q_AB at threshold", channel_metrics(math.pi / 8, math.pi, star).q_ab, 0.189, 1e-3))

    thetas = np.linspace(0, math.pi / 2, 9)
    phis = np.linspace(0, 2 * math.pi, 9)
    worst = max(
        np.max(np.abs(after_kerr(t, p).amplitudes - entangled_state_formula(t, p).amplitudes))
        for t in thetas for p in phis
    )
    results.append(CheckResult("entangled probe state term by term", bool(worst <= ATOL), f"max |diff| {worst:.3g}"))

    worst = max(
        np.max(np.abs(after_kerr(math.pi / 4, p).amplitudes - plus_state_formula(p).amplitudes))
        for p in phis
    )
    results.append(CheckResult("|+> input expanded over |+>, |->", bool(worst <= ATOL), f"max |diff| {worst:.3g}"))
    return results
