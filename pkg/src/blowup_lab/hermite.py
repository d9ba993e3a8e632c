"""Gaussian-weighted spectral toolbox for the rescaled linear operator.

The drift-diffusion operator

    L = d2/dy2 - y/2 d/dy + 1

is self-adjoint in L^2(rho) with Gaussian weight

    rho(y) = exp(-y^2/4) / sqrt(4 pi),

and is diagonalized by the polynomial family

    h_0 = 1,  h_1 = y,  h_2 = y^2 - 2,  h_3 = y^3 - 6y, ...
    h_{m+1} = y h_m - 2 m h_{m-1},          L h_m = (1 - m/2) h_m,

with squared norms ||h_m||^2 = integral(h_m^2 rho) = 2^m m!.  Only the
modes m = 0, 1 are expanding and m = 2 is neutral; everything above decays,
which is what the trap-set argument exploits.

A solution-sized field q is split into five tracked components.  With the
radial cutoff chi(y, s) (identically one inside |y| <= K0 sqrt(s), zero
outside twice that radius) set q_b = q*chi and q_e = q*(1-chi); then

    q = q0 h0 + q1 h1 + q2 h2 + q_minus + q_e,

where q_m are the rho-projections of q_b onto h_m and q_minus is the
projection residue q_b - sum(q_m h_m), rho-orthogonal to h_0, h_1, h_2.
The reconstruction above is exact at every node by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .grids import Field, Grid

__all__ = [
    "weight_rho",
    "hermite_h",
    "hermite_h_explicit",
    "hermite_norm_sq",
    "inner_rho",
    "cutoff_chi",
    "SpectralDecomp",
    "decompose",
    "seminorm_minus",
    "cubic_weighted_sup",
    "apply_L_discrete",
]


def weight_rho(y):
    """Gaussian weight rho(y) = exp(-y^2/4)/sqrt(4 pi); unit total mass."""
    y = np.asarray(y, dtype=float)
    return np.exp(-0.25 * y**2) / np.sqrt(4.0 * np.pi)


def hermite_h(m: int, y):
    """Eigenfunction h_m via the stable three-term recurrence."""
    if m < 0:
        raise ValueError(f"mode index must be >= 0, got {m}")
    y = np.asarray(y, dtype=float)
    h_prev = np.ones_like(y)
    if m == 0:
        return h_prev
    h_cur = y.copy()
    for k in range(1, m):
        h_prev, h_cur = h_cur, y * h_cur - 2.0 * k * h_prev
    return h_cur


def hermite_h_explicit(m: int, y):
    """Reference evaluation from the explicit finite sum.

    h_m(y) = sum_{n=0}^{floor(m/2)} m!/(n! (m-2n)!) (-1)^n y^(m-2n);
    used only to cross-check the recurrence in tests.
    """
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    for n in range(m // 2 + 1):
        coef = factorial(m) / (factorial(n) * factorial(m - 2 * n)) * (-1.0) ** n
        out = out + coef * y ** (m - 2 * n)
    return out


def hermite_norm_sq(m: int) -> float:
    """Exact squared weighted norm integral(h_m^2 rho) = 2^m m!."""
    return float(2**m * factorial(m))


def inner_rho(grid: Grid, fvals: np.ndarray, gvals: np.ndarray) -> float:
    """Trapezoid quadrature of f*g against the Gaussian weight."""
    return float(np.sum(grid.weights * fvals * gvals * weight_rho(grid.y)))


def cutoff_chi(y, s: float, K0: float):
    """Radial cutoff chi = chi0(|y|/(K0 sqrt(s))).

    chi0 is 1 on [0,1], 0 on [2,inf) and bridges (1,2) with the smooth
    monotone ramp exp(1 - 1/(1 - (r-1)^2)).
    """
    if K0 <= 0 or s <= 0:
        raise ValueError(f"need K0 > 0 and s > 0, got K0={K0!r}, s={s!r}")
    r = np.abs(np.asarray(y, dtype=float)) / (K0 * np.sqrt(s))
    out = np.ones_like(r)
    out[r >= 2.0] = 0.0
    mid = (r > 1.0) & (r < 2.0)
    t = r[mid] - 1.0
    out[mid] = np.exp(1.0 - 1.0 / (1.0 - t**2))
    return out


@dataclass
class SpectralDecomp:
    """Five-component split of a field at rescaled time s.

    q0, q1, q2 are the expanding/neutral mode amplitudes of the cutoff part;
    q_minus is the projection residue (rho-orthogonal to h_0, h_1, h_2) and
    q_e the outer part supported where the cutoff has died.
    """

    q0: float
    q1: float
    q2: float
    q_minus: Field
    q_e: Field
    K0: float
    s: float

    def modes(self) -> tuple[float, float, float]:
        return (self.q0, self.q1, self.q2)

    def reconstruct(self) -> np.ndarray:
        g = self.q_minus.grid
        y = g.y
        out = self.q0 * hermite_h(0, y) + self.q1 * hermite_h(1, y)
        out = out + self.q2 * hermite_h(2, y)
        return out + self.q_minus.values + self.q_e.values


def decompose(q: Field, K0: float) -> SpectralDecomp:
    """Split q into mode amplitudes, projection residue, and outer part.

    Requires the grid to contain the full cutoff support,
    2*K0*sqrt(s) <= y_max; the projections use the analytic norms 2^m m!.
    """
    grid, s = q.grid, q.s
    if 2.0 * K0 * np.sqrt(s) > grid.y_max + 1e-9:
        raise ValueError(
            f"grid too narrow: need y_max >= 2*K0*sqrt(s) = "
            f"{2.0 * K0 * np.sqrt(s):.2f}, have y_max = {grid.y_max:.2f}"
        )
    chi = cutoff_chi(grid.y, s, K0)
    qb = q.values * chi
    qe = q.values * (1.0 - chi)
    coeffs = []
    recon = np.zeros_like(qb)
    for m in range(3):
        hm = hermite_h(m, grid.y)
        qm = inner_rho(grid, qb, hm) / hermite_norm_sq(m)
        coeffs.append(qm)
        recon = recon + qm * hm
    q_minus = Field(grid, qb - recon, s)
    return SpectralDecomp(
        q0=coeffs[0],
        q1=coeffs[1],
        q2=coeffs[2],
        q_minus=q_minus,
        q_e=Field(grid, qe, s),
        K0=K0,
        s=s,
    )


def cubic_weighted_sup(grid: Grid, values: np.ndarray, mask=None) -> float:
    """sup over nodes of |values| / (1 + |y|^3), optionally masked."""
    ratio = np.abs(values) / (1.0 + np.abs(grid.y) ** 3)
    if mask is not None:
        ratio = ratio[mask]
        if ratio.size == 0:
            return 0.0
    return float(np.max(ratio))


def seminorm_minus(d: SpectralDecomp, restrict_to_support: bool = True) -> float:
    """Cubic-weighted sup of the projection residue.

    By default restricted to the cutoff support |y| <= 2*K0*sqrt(s), the
    region where the residue carries actual field content; outside it the
    residue is the analytic continuation of the subtracted polynomial.
    """
    grid = d.q_minus.grid
    mask = None
    if restrict_to_support:
        mask = np.abs(grid.y) <= 2.0 * d.K0 * np.sqrt(d.s)
    return cubic_weighted_sup(grid, d.q_minus.values, mask)


def apply_L_discrete(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Centered-difference discretization of L = d2/dy2 - y/2 d/dy + 1.

    One-sided first differences at the two boundary nodes; second
    differences there reuse the adjacent interior stencil, which is enough
    because every test weights the result by the Gaussian.
    """
    dy = grid.dy
    y = grid.y
    lap = np.empty_like(values)
    lap[1:-1] = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / dy**2
    lap[0] = (values[2] - 2.0 * values[1] + values[0]) / dy**2
    lap[-1] = (values[-1] - 2.0 * values[-2] + values[-3]) / dy**2
    grad = np.gradient(values, dy)
    return lap - 0.5 * y * grad + values
