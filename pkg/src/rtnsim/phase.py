"""Revival versus single-death classification over (g/gamma, theta).

The reference boundary is ``g / gamma = sec(theta)``, i.e. ``g cos(theta) = gamma``:
above it the concurrence dies and revives, below it dies once (or never).
Points close to the boundary are flagged as in the band rather than forced
into a binary verdict.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import single_qubit as sq
from .entanglement import Family, InitialState, Model, concurrence_analytic, esd_times
from .noise import QubitSpec, RtnSource

__all__ = [
    "Label",
    "RegionLabel",
    "BAND",
    "effective_rate",
    "classification_horizon",
    "classify",
    "boundary_curve",
    "bloch_cone_test",
    "in_band",
    "phase_scan",
    "write_scan_csv",
]

BAND = 0.1
# Classification needs the concurrence followed this many decay times.
HORIZON_DECAYS = 20.0


class Label(enum.Enum):
    ESD_WITH_REVIVAL = "EsdWithRevival"
    SINGLE_DEATH = "SingleDeath"
    NO_ESD = "NoEsd"


@dataclass(frozen=True)
class RegionLabel:
    label: Label
    boundary_distance: float  # g/gamma - sec(theta)
    predicted: Label  # from the sign of boundary_distance
    in_band: bool
    conclusive: bool
    deaths: int = 0

    @property
    def revival(self) -> bool:
        return self.label is Label.ESD_WITH_REVIVAL

    @property
    def agrees(self) -> bool:
        """Revival verdict matches the boundary formula."""
        return self.revival == (self.predicted is Label.ESD_WITH_REVIVAL)


def in_band(ratio, theta, width: float = BAND):
    """``|log((g/gamma) cos(theta))| < width``."""
    return np.abs(np.log(np.asarray(ratio) * np.cos(theta))) < width


def boundary_curve(theta_grid) -> np.ndarray:
    """``sec(theta)``: the critical ``g/gamma`` at each working point."""
    th = np.asarray(theta_grid, dtype=float)
    if np.any(th < 0) or np.any(th >= np.pi / 2):
        raise ValueError("theta must lie in [0, pi/2); sec diverges at pi/2")
    return 1 / np.cos(th)


def bloch_cone_test(rho_a: float, theta_a: float) -> bool:
    """True when ``2 rho |sin theta| + rho cos theta <= 1``.

    ``rho_a`` and ``theta_a`` are the length and polar angle of the reduced
    Bloch vector of qubit A in the (rotating-frame transverse, z) plane, so
    ``|zeta| = rho sin(theta)`` and ``exp(-Gamma_1 t) = rho cos(theta)``. For a
    Bell state with noise on A alone, true means the pair is separable.
    """
    if not 0 <= rho_a <= 1:
        raise ValueError("rho_a must lie in [0, 1]")
    return bool(2 * rho_a * abs(np.sin(theta_a)) + rho_a * np.cos(theta_a) <= 1)


def effective_rate(src: RtnSource, b0: float = 1.0) -> float:
    """Decay rate of the dephasing envelope.

    Relaxation only raises the death threshold over time, so no revival can
    occur once the envelope has decayed; the envelope rate sets the horizon.
    Slow sources decay at ``gamma``; fast ones at the slow root
    ``gamma - sqrt(gamma^2 - (g cos theta)^2)`` plus half the relaxation rate.
    """
    gc = src.longitudinal
    if src.gamma > gc:
        rate = src.gamma - np.sqrt(src.gamma**2 - gc**2) + 0.5 * sq.gamma1(src, b0)
    else:
        rate = src.gamma
    return float(rate)


def classification_horizon(src: RtnSource, b0: float = 1.0) -> float:
    rate = effective_rate(src, b0)
    return np.inf if rate == 0 else HORIZON_DECAYS / rate


def default_grid(src: RtnSource, horizon: float, b0: float = 1.0, per_period: int = 24,
                 min_points: int = 400):
    """Uniform grid resolving the dephasing oscillation (if any)."""
    gc = src.longitudinal
    w = np.sqrt(max(src.g**2 - src.gamma**2, 0.0)) if src.theta == 0 else (gc if gc > src.gamma else 0.0)
    n = min_points
    if w > 0:
        n = max(n, int(np.ceil(horizon * w * per_period / (2 * np.pi))) + 1)
    return np.linspace(0.0, horizon, n)


def classify(src: RtnSource, state: Optional[InitialState] = None, b0: float = 1.0,
             horizon: Optional[float] = None, grid=None) -> RegionLabel:
    """Numerical revival verdict for the two-one model, plus the formula's prediction.

    The horizon defaults to ``20 / rate`` with ``rate`` from
    :func:`effective_rate`; a shorter horizon gives ``conclusive=False``.
    """
    if state is None:
        state = InitialState(Family.PHI, r=0.5)
    if src.gamma <= 0:
        raise ValueError("classification needs gamma > 0")
    need = classification_horizon(src, b0)
    if horizon is None:
        horizon = need
    if grid is None:
        grid = default_grid(src, horizon, b0)
    grid = np.asarray(grid, dtype=float)
    curve = concurrence_analytic(state, Model.TWO_ONE, QubitSpec(b0, src), QubitSpec(b0), grid)
    deaths = esd_times(curve)
    if not deaths:
        label = Label.NO_ESD
    elif any(not d.terminal for d in deaths):
        label = Label.ESD_WITH_REVIVAL
    else:
        label = Label.SINGLE_DEATH
    ratio = src.g / src.gamma
    if src.theta >= np.pi / 2:
        dist = -np.inf
    else:
        dist = float(ratio - 1 / np.cos(src.theta))
    predicted = Label.ESD_WITH_REVIVAL if dist > 0 else Label.SINGLE_DEATH
    band = bool(in_band(ratio, src.theta)) if src.theta < np.pi / 2 else False
    return RegionLabel(label, dist, predicted, band, bool(grid[-1] >= need * (1 - 1e-12)),
                       len(deaths))


def phase_scan(thetas=None, ratios=None, g: float = 0.1, b0: float = 1.0,
               state: Optional[InitialState] = None, phi: float = 0.0):
    """Classify a (theta, g/gamma) grid at fixed ``g``; returns rows of dicts.

    Defaults: 20 values of theta in [0, 1.4] and 20 log-spaced ratios in
    [0.2, 20].
    """
    thetas = np.linspace(0, 1.4, 20) if thetas is None else np.asarray(thetas, dtype=float)
    ratios = np.geomspace(0.2, 20, 20) if ratios is None else np.asarray(ratios, dtype=float)
    boundary_curve(thetas)  # rejects theta >= pi/2
    rows = []
    for th in thetas:
        for ratio in ratios:
            src = RtnSource(g, float(th), g / ratio, phi)
            res = classify(src, state, b0)
            rows.append({"theta": float(th), "ratio": float(ratio), "result": res})
    return rows


def write_scan_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "g_over_gamma", "label", "boundary_distance", "predicted",
                    "in_band", "conclusive"])
        for row in rows:
            res = row["result"]
            w.writerow([f"{row['theta']:.12g}", f"{row['ratio']:.12g}", res.label.value,
                        f"{res.boundary_distance:.12g}", res.predicted.value,
                        int(res.in_band), int(res.conclusive)])
