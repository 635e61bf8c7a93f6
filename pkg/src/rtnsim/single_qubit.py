"""Closed-form dephasing and relaxation of one qubit under telegraph noise.

Two regimes are separated by ``g cos(theta) = gamma``: fast (weakly coupled,
Markovian-like) sources give an exponential dephasing function, slow
(strongly coupled) ones an oscillating one. At the pure dephasing point
``theta = 0`` an exact expression exists for any coupling ratio.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .noise import RtnSource

__all__ = [
    "Regime",
    "RegimeWarning",
    "NoZerosError",
    "DephasingProfile",
    "regime",
    "dephasing_profile",
    "gamma1",
    "gamma2",
    "zeta_weak",
    "zeta_strong",
    "zeta_pure_dephasing_exact",
    "zeta_closed_form",
    "zeta_zeros",
    "fid_signal",
]


class Regime(enum.Enum):
    WEAK = "WeakCoupling"
    STRONG = "StrongCoupling"
    PURE_DEPHASING_EXACT = "PureDephasingExact"


class RegimeWarning(UserWarning):
    """A regime-specific formula was evaluated outside its regime."""


class NoZerosError(ValueError):
    """Raised when zeros of the dephasing function are requested at weak coupling."""


def regime(src: RtnSource) -> Regime:
    """Coupling regime of a source; the boundary ``g cos(theta) = gamma`` counts as weak."""
    gc = src.longitudinal
    if np.isclose(gc, src.gamma, rtol=1e-12, atol=0.0):
        warnings.warn(
            f"source sits on the regime boundary g cos(theta) = gamma = {src.gamma}",
            RegimeWarning,
            stacklevel=2,
        )
        return Regime.WEAK
    return Regime.WEAK if src.gamma > gc else Regime.STRONG


@dataclass(frozen=True)
class DephasingProfile:
    regime: Regime
    gamma1: float
    gamma2: float  # nan outside the weak regime
    eps1: float
    eps2: float


def dephasing_profile(src: RtnSource, b0: float) -> DephasingProfile:
    reg = regime(src)
    gc = src.longitudinal
    eps1 = src.gamma / gc if gc > 0 else np.inf
    if src.theta == 0:
        label = Regime.PURE_DEPHASING_EXACT
    else:
        label = reg
    return DephasingProfile(
        regime=label,
        gamma1=gamma1(src, b0),
        gamma2=gamma2(src, b0) if reg is Regime.WEAK else float("nan"),
        eps1=eps1,
        eps2=src.g / b0,
    )


def gamma1(src: RtnSource, b0: float) -> float:
    """Longitudinal relaxation rate for the source's regime."""
    s2 = np.sin(src.theta) ** 2
    if src.theta == 0:
        return 0.0
    if regime(src) is Regime.WEAK:
        return 2 * src.gamma * src.g**2 * s2 / (4 * src.gamma**2 + b0**2)
    return 2 * src.gamma * (src.g / b0) ** 2 * s2


def gamma2(src: RtnSource, b0: float) -> float:
    """Transverse rate of the weak-coupling (Redfield) result."""
    s2 = np.sin(src.theta) ** 2
    g1 = 2 * src.gamma * src.g**2 * s2 / (4 * src.gamma**2 + b0**2)
    if src.gamma == 0:
        return np.inf
    return g1 / 2 + src.longitudinal**2 / (2 * src.gamma)


def _warn_regime(src, expected, name):
    if regime(src) is not expected:
        warnings.warn(
            f"{name} evaluated outside its regime (g cos(theta)={src.longitudinal:g}, "
            f"gamma={src.gamma:g})",
            RegimeWarning,
            stacklevel=3,
        )


def zeta_weak(src: RtnSource, b0: float, t):
    """``exp(-Gamma_2 t)``, valid for ``gamma > g cos(theta)``."""
    _warn_regime(src, Regime.WEAK, "zeta_weak")
    return np.exp(-gamma2(src, b0) * np.asarray(t, dtype=float))


def zeta_strong(src: RtnSource, t):
    """Damped oscillation valid for ``gamma < g cos(theta)``."""
    _warn_regime(src, Regime.STRONG, "zeta_strong")
    t = np.asarray(t, dtype=float)
    w = src.longitudinal
    eps1 = src.gamma / w
    return np.exp(-src.gamma * t) * (np.cos(w * t) + eps1 * np.sin(w * t))


def _sinhc(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    return np.where(small, 1 + x**2 / 6 + x**4 / 120, np.sinh(xs) / xs)


def zeta_pure_dephasing_exact(g: float, gamma: float, t):
    """Exact dephasing function at ``theta = 0``.

    Hyperbolic for ``g < gamma``, trigonometric for ``g > gamma``. Both are
    written as ``exp(-gamma t) [C(t) + gamma t S(t)]`` with ``S`` a
    ``sinh(x)/x``-type factor, so ``g = gamma`` gives ``exp(-gamma t)(1 + gamma t)``
    without a special case.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    d = gamma**2 - g**2
    if d < 0:
        k = np.sqrt(-d)
        x = k * t
        sinc = np.where(x == 0, 1.0, np.sin(x) / np.where(x == 0, 1.0, x))
        return np.exp(-gamma * t) * (np.cos(x) + gamma * t * sinc)
    k = np.sqrt(d)
    x = k * t
    big = x > 1.0
    # exp(-gamma t) cosh(kt) overflows for long times; use the split form there.
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        split = 0.5 * np.exp((k - gamma) * t) * (1 + gamma / k) + 0.5 * np.exp(
            -(k + gamma) * t
        ) * (1 - gamma / k)
    xs = np.where(big, 0.0, x)
    direct = np.exp(-gamma * t) * (np.cosh(xs) + gamma * t * _sinhc(xs))
    return np.where(big, split, direct)


def zeta_closed_form(src: RtnSource, b0: float, t):
    """Regime-appropriate closed form; exact expression at ``theta = 0``."""
    if src.theta == 0:
        return zeta_pure_dephasing_exact(src.g, src.gamma, t)
    if regime(src) is Regime.WEAK:
        return zeta_weak(src, b0, t)
    return zeta_strong(src, t)


def zeta_zeros(src: RtnSource, count: int) -> np.ndarray:
    """First ``count`` zeros of the dephasing function (strong coupling only)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    ell = np.arange(1, count + 1)
    if src.theta == 0:
        if not src.g > src.gamma:
            raise NoZerosError("dephasing is monotone for g <= gamma at theta = 0")
        w = np.sqrt(src.g**2 - src.gamma**2)
        return (np.pi * ell - np.arctan2(w, src.gamma)) / w
    w = src.longitudinal
    if not w > src.gamma:
        raise NoZerosError("dephasing is monotone at weak coupling")
    # arctan(1/eps1) with eps1 = gamma / w
    return (np.pi * ell - np.arctan2(w, src.gamma)) / w


def fid_signal(src: RtnSource, b0: float, t):
    """Free-induction signal ``cos(b0 t) zeta(t)``."""
    t = np.asarray(t, dtype=float)
    return np.cos(b0 * t) * zeta_closed_form(src, b0, t)
