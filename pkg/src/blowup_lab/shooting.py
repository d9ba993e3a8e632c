"""Two-parameter shooting on the expanding directions.

The prepared initial data at time s0 is the two-parameter family

    q(y, s0) = (d0 + d1 z) f(z)^p - kappa/(2 p s0),      z = y / sqrt(s0),

which in the w form is f(z) (1 + (d0 + d1 z)/(p - 1 + b z^2)) plus the
log-correction of the ansatz.  The map (d0, d1) -> (q0(s0), q1(s0)) is
affine; its preimage of the mode box [-A/s0^2, A/s0^2]^2 is the shooting
rectangle.  Because the q0 and q1 directions are the only linearly
expanding ones, a trajectory that starts anywhere in the rectangle and is
not exactly tuned leaves the trap through a mode face with a definite
sign, and the critical parameter pair can be enclosed by quadrisection:
each level evaluates a plus-pattern of trajectories (two endpoints per
axis and the center), halves the d0 interval by the sign of q0 at exit,
and halves the d1 interval by the sign of q1 at exit.

The search stops as soon as any evaluated trajectory survives to the
requested time (the certificate), and reports failure honestly: exits
through a non-expanding component mean the trap does not funnel at this
amplitude ("degenerate-exit", the expected outcome for A = 1), equal exit
signs at both ends mean lost enclosure, and intervals shrunk to floating
point granularity mean the window is numerically out of reach.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Field, Grid
from .hermite import decompose
from .model import ModelParams, profile_f
from .solver import SolverConfig, TrajectoryRecord, run_trajectory
from .trapset import TrapParams, check_membership

__all__ = [
    "InitialDataParams",
    "ModeMap",
    "ShootResult",
    "initial_q",
    "initial_mode_map",
    "initial_rectangle",
    "initial_components_check",
    "shoot",
    "certificate_dict",
]


@dataclass(frozen=True)
class InitialDataParams:
    """Shooting parameters (d0, d1) and the starting rescaled time s0."""

    d0: float
    d1: float
    s0: float

    def __post_init__(self) -> None:
        if self.s0 < np.e:
            raise ValueError(f"starting time must satisfy s0 >= e, got {self.s0!r}")


def initial_q(params: ModelParams, grid: Grid, init: InitialDataParams) -> Field:
    """Prepared deviation at s0 for one parameter pair."""
    z = grid.y / np.sqrt(init.s0)
    fp = profile_f(params, z) ** params.p
    values = (init.d0 + init.d1 * z) * fp - params.kappa / (2.0 * params.p * init.s0)
    return Field(grid=grid, values=values, s=init.s0)


@dataclass(frozen=True)
class ModeMap:
    """Affine map (d0, d1) -> (q0, q1) at the initial time.

    modes = M @ (d0, d1) + b, with M the 2x2 matrix and b the offset that
    the log-correction of the ansatz deposits on the even mode.
    """

    M: np.ndarray
    b: np.ndarray
    s0: float
    K0: float

    def modes(self, d0: float, d1: float) -> np.ndarray:
        return self.M @ np.array([d0, d1]) + self.b

    def preimage(self, q0: float, q1: float) -> np.ndarray:
        return np.linalg.solve(self.M, np.array([q0, q1]) - self.b)


def initial_mode_map(
    params: ModelParams, grid: Grid, s0: float, K0: float
) -> ModeMap:
    """Measure the affine mode map by decomposing three prepared fields."""

    def modes_of(d0: float, d1: float) -> np.ndarray:
        q = initial_q(params, grid, InitialDataParams(d0=d0, d1=d1, s0=s0))
        d = decompose(q, K0)
        return np.array([d.q0, d.q1])

    b = modes_of(0.0, 0.0)
    col0 = modes_of(1.0, 0.0) - b
    col1 = modes_of(0.0, 1.0) - b
    M = np.column_stack([col0, col1])
    if abs(np.linalg.det(M)) < 1e-12:
        raise RuntimeError("mode map is numerically singular on this grid")
    return ModeMap(M=M, b=b, s0=s0, K0=K0)


def initial_rectangle(
    mode_map: ModeMap, trap: TrapParams, shrink: float = 1e-9
) -> np.ndarray:
    """Parameter rectangle mapping onto the mode box [-A/s0^2, A/s0^2]^2.

    Returned as [[d0_lo, d0_hi], [d1_lo, d1_hi]].  The map is affine and, by
    parity of the family, numerically diagonal, so the preimage of the box
    is itself an axis-aligned rectangle; corners are computed from the four
    box corners and the envelope is taken for robustness against the tiny
    off-diagonal entries.  The box is pulled in by the relative amount
    `shrink` so that roundoff cannot park a corner a few ulp outside the
    trap it is meant to saturate.
    """
    eps0 = (1.0 - shrink) * trap.A / mode_map.s0**2
    corners = [
        mode_map.preimage(sx * eps0, sy * eps0)
        for sx in (-1.0, 1.0)
        for sy in (-1.0, 1.0)
    ]
    corners = np.array(corners)
    return np.array(
        [
            [corners[:, 0].min(), corners[:, 0].max()],
            [corners[:, 1].min(), corners[:, 1].max()],
        ]
    )


def initial_components_check(
    params: ModelParams,
    grid: Grid,
    s0: float,
    trap: TrapParams,
    rect: np.ndarray,
) -> dict:
    """Trap membership of the prepared data across the rectangle.

    All five measured components are affine in (d0, d1) up to absolute
    values, so their maxima over the rectangle sit at corners; the four
    corners and the center are checked.  Returns the worst margin per
    component and whether every probe was inside.
    """
    (d0_lo, d0_hi), (d1_lo, d1_hi) = rect
    probes = [
        (d0_lo, d1_lo),
        (d0_lo, d1_hi),
        (d0_hi, d1_lo),
        (d0_hi, d1_hi),
        (0.5 * (d0_lo + d0_hi), 0.5 * (d1_lo + d1_hi)),
    ]
    worst = np.full(5, np.inf)
    all_inside = True
    for d0, d1 in probes:
        q = initial_q(params, grid, InitialDataParams(d0=d0, d1=d1, s0=s0))
        status = check_membership(decompose(q, trap.K0), trap)
        worst = np.minimum(worst, status.margins)
        all_inside = all_inside and status.inside
    return {"all_inside": all_inside, "worst_margins": worst, "n_probes": len(probes)}


_MODE_COMPONENTS = ("q0", "q1")


@dataclass
class _PointOutcome:
    d0: float
    d1: float
    survived: bool
    s_star: float
    component: str | None
    sign_q0: float
    sign_q1: float
    record: TrajectoryRecord


@dataclass
class ShootResult:
    """Outcome of the quadrisection search."""

    status: str  # "survived" | "degenerate-exit" | "enclosure-lost" | "granularity" | "max-levels"
    d0: float
    d1: float
    s0: float
    s_end: float
    levels: int
    n_evals: int
    rect0: np.ndarray
    rect: np.ndarray
    record: TrajectoryRecord | None
    note: str = ""
    # one row per refinement level: (level, d0_width, d1_width, min exit s*,
    # max exit s*) over the five evaluated points of that level
    level_stats: list = None


def _sign_with_floor(x: float, floor: float) -> float:
    if abs(x) <= floor:
        return 0.0
    return 1.0 if x > 0 else -1.0


def shoot(
    params: ModelParams,
    grid: Grid,
    trap: TrapParams,
    cfg: SolverConfig,
    s0: float,
    s_end: float,
    rect0: np.ndarray | None = None,
    max_levels: int = 64,
    progress: bool = False,
) -> ShootResult:
    """Enclose the critical (d0, d1) by quadrisection until survival.

    Returns with status "survived" and the surviving trajectory record as
    soon as any evaluated point stays in the trap up to s_end.  A zero exit
    sign at the center (the classified mode is below the noise floor)
    triggers a centered half-width shrink instead of a halving, which
    preserves containment unconditionally.
    """
    if rect0 is None:
        mode_map = initial_mode_map(params, grid, s0, trap.K0)
        rect0 = initial_rectangle(mode_map, trap)
    rect = np.array(rect0, dtype=float).copy()
    cache: dict[tuple[float, float], _PointOutcome] = {}
    n_evals = 0
    level_stats: list[dict] = []

    def evaluate(d0: float, d1: float) -> _PointOutcome:
        nonlocal n_evals
        key = (d0, d1)
        if key in cache:
            return cache[key]
        q = initial_q(params, grid, InitialDataParams(d0=d0, d1=d1, s0=s0))
        rec = run_trajectory(q, params, trap, cfg, s_end)
        n_evals += 1
        survived = rec.survived(s_end)
        floor = 1e-9 * trap.A / rec.final_s**2
        out = _PointOutcome(
            d0=d0,
            d1=d1,
            survived=survived,
            s_star=rec.final_s,
            component=None if rec.exit is None else rec.exit.component,
            sign_q0=_sign_with_floor(float(rec.q0[-1]), floor),
            sign_q1=_sign_with_floor(float(rec.q1[-1]), floor),
            record=rec,
        )
        cache[key] = out
        return out

    def finish(status: str, point: _PointOutcome | None, level: int, note: str = "") -> ShootResult:
        return ShootResult(
            status=status,
            d0=point.d0 if point else float(np.mean(rect[0])),
            d1=point.d1 if point else float(np.mean(rect[1])),
            s0=s0,
            s_end=s_end,
            levels=level,
            n_evals=n_evals,
            rect0=np.array(rect0, dtype=float),
            rect=rect.copy(),
            record=point.record if point else None,
            note=note,
            level_stats=list(level_stats),
        )

    for level in range(max_levels):
        m0 = 0.5 * (rect[0, 0] + rect[0, 1])
        m1 = 0.5 * (rect[1, 0] + rect[1, 1])
        granular0 = rect[0, 1] - rect[0, 0] < 4.0 * np.spacing(abs(m0) + 1e-30)
        granular1 = rect[1, 1] - rect[1, 0] < 4.0 * np.spacing(abs(m1) + 1e-30)
        if granular0 and granular1:
            # the rectangle has collapsed to floating point resolution; the
            # sign tests below would compare a point against itself
            center = evaluate(m0, m1)
            if center.survived:
                return finish("survived", center, level)
            return finish(
                "granularity",
                center,
                level,
                note="both parameter intervals reached floating point granularity",
            )
        plus = [
            evaluate(rect[0, 0], m1),
            evaluate(rect[0, 1], m1),
            evaluate(m0, m1),
            evaluate(m0, rect[1, 0]),
            evaluate(m0, rect[1, 1]),
        ]
        exits = [pt.s_star for pt in plus if not pt.survived]
        level_stats.append(
            {
                "level": level,
                "d0_width": float(rect[0, 1] - rect[0, 0]),
                "d1_width": float(rect[1, 1] - rect[1, 0]),
                "min_exit_s": float(min(exits)) if exits else None,
                "max_exit_s": float(max(exits)) if exits else None,
            }
        )
        for pt in plus:
            if pt.survived:
                return finish("survived", pt, level)
        for pt in plus:
            if pt.component is not None and pt.component not in _MODE_COMPONENTS:
                return finish(
                    "degenerate-exit",
                    pt,
                    level,
                    note=f"exit through {pt.component} at (d0={pt.d0:.6g}, d1={pt.d1:.6g})",
                )
        left, right, center, down, up = plus

        if left.sign_q0 * right.sign_q0 >= 0 and not (
            left.sign_q0 == 0 or right.sign_q0 == 0
        ):
            return finish(
                "enclosure-lost",
                center,
                level,
                note=f"q0 exit sign {left.sign_q0:+.0f} at both d0 ends",
            )
        if center.sign_q0 == 0:
            w = 0.25 * (rect[0, 1] - rect[0, 0])
            rect[0] = [m0 - w, m0 + w]
        elif left.sign_q0 * center.sign_q0 < 0:
            rect[0] = [rect[0, 0], m0]
        else:
            rect[0] = [m0, rect[0, 1]]

        if down.sign_q1 * up.sign_q1 >= 0 and not (
            down.sign_q1 == 0 or up.sign_q1 == 0
        ):
            return finish(
                "enclosure-lost",
                center,
                level,
                note=f"q1 exit sign {down.sign_q1:+.0f} at both d1 ends",
            )
        if center.sign_q1 == 0:
            w = 0.25 * (rect[1, 1] - rect[1, 0])
            rect[1] = [m1 - w, m1 + w]
        elif down.sign_q1 * center.sign_q1 < 0:
            rect[1] = [rect[1, 0], m1]
        else:
            rect[1] = [m1, rect[1, 1]]

        if progress:
            print(
                f"level {level:3d}: d0 in [{rect[0,0]:.17g}, {rect[0,1]:.17g}] "
                f"width {rect[0,1]-rect[0,0]:.3e}, longest run s*={max(p.s_star for p in plus):.3f}"
            )

    best = evaluate(0.5 * (rect[0, 0] + rect[0, 1]), 0.5 * (rect[1, 0] + rect[1, 1]))
    if best.survived:
        return finish("survived", best, max_levels)
    return finish("max-levels", best, max_levels, note="refinement budget exhausted")


def certificate_dict(result: ShootResult) -> dict:
    """JSON-friendly summary of a shooting run."""
    rec = result.record
    out = {
        "status": result.status,
        "d0": result.d0,
        "d1": result.d1,
        "s0": result.s0,
        "s_end": result.s_end,
        "levels": result.levels,
        "n_evals": result.n_evals,
        "rect0": result.rect0.tolist(),
        "rect": result.rect.tolist(),
        "note": result.note,
    }
    if result.level_stats:
        out["level_stats"] = result.level_stats
        mins = [row["min_exit_s"] for row in result.level_stats if row["min_exit_s"] is not None]
        # refinement should never push the earliest exit backwards; monitored
        # as data, asserted only as a soft regression elsewhere
        out["min_exit_s_series"] = mins
        out["min_exit_monotone"] = bool(
            all(b >= a - 1e-9 for a, b in zip(mins, mins[1:]))
        )
    if rec is not None:
        out["final_s"] = rec.final_s
        out["min_margin"] = float(np.min(rec.margins)) if rec.margins.size else None
        if rec.exit is not None:
            out["exit_component"] = rec.exit.component
            out["exit_s"] = rec.exit.s_star
            out["exit_reason"] = rec.exit.reason
    return out
