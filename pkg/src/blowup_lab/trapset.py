"""Shrinking trap set for the deviation and exit bookkeeping.

A deviation field with decomposition (q0, q1, q2, q_minus, q_e) at rescaled
time s is inside the trap of amplitude A >= 1 when

    |q0|, |q1|         <= A      / s^2
    |q2|               <= A^2 log(s) / s^2
    sup |q_minus|/(1+|y|^3)  <= A / s^2     (over the cutoff support)
    ||q_e||_inf        <= A^2 / sqrt(s).

The bounds shrink in s, so membership is a statement about tracking the
blow-up profile at a quantified rate.  Only the q0 and q1 directions are
linearly expanding; the reduction tested here is that trajectories leave
the trap through those two faces, transversally (the outward velocity has
the sign of the violated mode), which is what makes two-parameter shooting
on the initial data sufficient.

Membership implies two derived envelopes that are checked separately: the
cutoff part q_b = q0 h0 + q1 h1 + q2 h2 + q_minus obeys
|q_b| <= C A^2 (log s / s^2)(1 + |y|^3) and the full field obeys
||q||_inf <= C A^2 / sqrt(s).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermite import SpectralDecomp, hermite_h, seminorm_minus

__all__ = [
    "COMPONENTS",
    "TrapParams",
    "TrapStatus",
    "ExitInfo",
    "component_bounds",
    "measured_components",
    "check_membership",
    "check_derived_bounds",
    "exit_classify",
    "reduction_witness",
]

COMPONENTS = ("q0", "q1", "q2", "q_minus", "q_e")


@dataclass(frozen=True)
class TrapParams:
    """Trap amplitude A >= 1 and cutoff radius multiplier K0 > 0."""

    A: float
    K0: float

    def __post_init__(self) -> None:
        if self.A < 1.0:
            raise ValueError(f"trap amplitude must be >= 1, got A={self.A!r}")
        if self.K0 <= 0.0:
            raise ValueError(f"cutoff radius must be > 0, got K0={self.K0!r}")


@dataclass
class TrapStatus:
    """Signed margins (bound - measured) per component at one time."""

    s: float
    inside: bool
    measured: np.ndarray
    bounds: np.ndarray
    margins: np.ndarray
    violated: str | None


@dataclass
class ExitInfo:
    """How and when a trajectory left the trap (or failed)."""

    s_star: float
    reason: str  # "trap-exit" or "divergence"
    component: str | None
    margins: np.ndarray | None
    mode: int | None = None
    omega: float | None = None
    dqm_ds: float | None = None
    transverse: bool | None = None


def component_bounds(trap: TrapParams, s: float) -> np.ndarray:
    """The five shrinking bounds at rescaled time s (requires s >= e)."""
    if s < np.e:
        raise ValueError(f"trap bounds need s >= e, got s={s!r}")
    A = trap.A
    return np.array(
        [
            A / s**2,
            A / s**2,
            A**2 * np.log(s) / s**2,
            A / s**2,
            A**2 / np.sqrt(s),
        ]
    )


def measured_components(d: SpectralDecomp) -> np.ndarray:
    return np.array(
        [
            abs(d.q0),
            abs(d.q1),
            abs(d.q2),
            seminorm_minus(d),
            d.q_e.sup(),
        ]
    )


def check_membership(d: SpectralDecomp, trap: TrapParams) -> TrapStatus:
    """Compare a decomposition against the bounds at its own time.

    Ties in the most-violated component resolve to the lowest index, so
    the outcome is deterministic.
    """
    bounds = component_bounds(trap, d.s)
    measured = measured_components(d)
    margins = bounds - measured
    inside = bool(np.all(margins >= 0.0))
    violated = None if inside else COMPONENTS[int(np.argmin(margins))]
    return TrapStatus(
        s=d.s,
        inside=inside,
        measured=measured,
        bounds=bounds,
        margins=margins,
        violated=violated,
    )


def check_derived_bounds(d: SpectralDecomp, trap: TrapParams) -> dict:
    """Empirical constants of the two envelopes implied by membership."""
    grid = d.q_minus.grid
    y = grid.y
    qb = (
        d.q0 * hermite_h(0, y)
        + d.q1 * hermite_h(1, y)
        + d.q2 * hermite_h(2, y)
        + d.q_minus.values
    )
    support = np.abs(y) <= 2.0 * d.K0 * np.sqrt(d.s)
    A, s = trap.A, d.s
    envelope_b = A**2 * (np.log(s) / s**2) * (1.0 + np.abs(y) ** 3)
    C_cutoff = float(np.max(np.abs(qb[support]) / envelope_b[support]))
    q_full = qb + d.q_e.values
    C_sup = float(np.max(np.abs(q_full)) * np.sqrt(s) / A**2)
    return {"C_cutoff_part": C_cutoff, "C_sup": C_sup}


def exit_classify(record, trap: TrapParams) -> ExitInfo | None:
    """Locate and classify the first trap exit in a trajectory record.

    For an expanding-mode exit (q0 or q1) the outward velocity dq_m/ds is
    estimated by a 3-point backward difference at the exit step and the
    crossing is transverse when omega * dq_m/ds > 0 with omega the sign of
    the violated mode.  Returns None if the record never leaves the trap.
    """
    inside = record.inside
    if bool(np.all(inside)):
        return None
    i = int(np.argmin(inside))  # first False
    margins = record.margins[i]
    comp = COMPONENTS[int(np.argmin(margins))]
    info = ExitInfo(
        s_star=float(record.s[i]),
        reason="trap-exit",
        component=comp,
        margins=margins.copy(),
    )
    if comp in ("q0", "q1"):
        m = 0 if comp == "q0" else 1
        series = record.q0 if m == 0 else record.q1
        info.mode = m
        info.omega = float(np.sign(series[i])) or 1.0
        if i >= 2:
            h = record.s[i] - record.s[i - 1]
            dq = (3.0 * series[i] - 4.0 * series[i - 1] + series[i - 2]) / (2.0 * h)
        elif i == 1:
            dq = (series[1] - series[0]) / (record.s[1] - record.s[0])
        else:
            dq = 0.0
        info.dqm_ds = float(dq)
        info.transverse = bool(info.omega * dq > 0.0)
    return info


def reduction_witness(records, trap: TrapParams) -> dict:
    """Batch exit statistics over a family of trajectory records.

    Reports the fraction of exits that occur through the expanding pair
    (q0, q1) and whether every expanding exit was transverse; trajectories
    that never exit are excluded from the fraction.
    """
    exits = []
    survivors = 0
    for rec in records:
        info = exit_classify(rec, trap)
        if info is None:
            survivors += 1
        else:
            exits.append(info)
    by_component: dict[str, int] = {c: 0 for c in COMPONENTS}
    by_component["divergence"] = 0
    for e in exits:
        key = e.component if e.component is not None else "divergence"
        by_component[key] += 1
    n_exp = by_component["q0"] + by_component["q1"]
    expanding = [e for e in exits if e.mode is not None]
    return {
        "n_runs": len(records),
        "n_exits": len(exits),
        "n_survivors": survivors,
        "fraction_q0q1": (n_exp / len(exits)) if exits else float("nan"),
        "all_transverse": all(e.transverse for e in expanding) if expanding else True,
        "by_component": by_component,
        "exits": exits,
    }
