"""Concurrence of two qubits: generic Wootters route and closed forms.

The closed forms cover generalized Bell states ``|Phi> = a|00> + b|11>``,
``|Psi> = a|01> + b|10>`` and their extended Werner mixtures
``r |.><.| + (1 - r) I/4``, evolving with noise on qubit A only (two-one
model) or independent noise on both qubits (two-two model). Everything is
driven by two numbers per qubit at each time: the dephasing function ``zeta``
and the longitudinal decay factor ``exp(-Gamma_1 t)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import single_qubit as sq
from .bloch import MU, PAULI, check_density_matrix, from_bloch, purity_norm, to_bloch
from .noise import QubitSpec, coherence, single_transfer

__all__ = [
    "Family",
    "Model",
    "InitialState",
    "LambdaSpectrum",
    "ConcurrenceCurve",
    "EsdInterval",
    "GridTooCoarseError",
    "concurrence_wootters",
    "dephasing_factors",
    "analytic_bloch",
    "analytic_bloch_two_one",
    "analytic_bloch_two_two",
    "relaxation_functions",
    "lambda_spectrum_analytic",
    "concurrence_analytic",
    "xi_limit",
    "esd_times",
    "purity_curve",
    "REVIVAL_THRESHOLD",
]

YY = np.kron(PAULI[2], PAULI[2])
REVIVAL_THRESHOLD = 1e-6


class Family(enum.Enum):
    PHI = "Phi"
    PSI = "Psi"


class Model(enum.Enum):
    TWO_ONE = "TwoOne"
    TWO_TWO = "TwoTwo"


class GridTooCoarseError(ValueError):
    pass


@dataclass(frozen=True)
class InitialState:
    """Generalized Bell state (``r = 1``) or extended Werner state."""

    family: Family
    alpha: float = 1 / np.sqrt(2)
    beta: complex = 1 / np.sqrt(2)
    r: float = 1.0

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if abs(self.alpha**2 + abs(self.beta) ** 2 - 1) > 1e-12:
            raise ValueError("alpha^2 + |beta|^2 must equal 1")
        if not 0 <= self.r <= 1:
            raise ValueError("Werner weight r must lie in [0, 1]")

    @classmethod
    def from_angles(cls, family, alpha=1 / np.sqrt(2), delta=0.0, r=1.0):
        family = Family(family) if not isinstance(family, Family) else family
        beta = np.sqrt(1 - alpha**2) * np.exp(1j * delta)
        return cls(family, float(alpha), complex(beta), float(r))

    @property
    def weight(self) -> float:
        """``r alpha |beta|``, the prefactor shared by all lambda's."""
        return self.r * self.alpha * abs(self.beta)

    def ket(self) -> np.ndarray:
        psi = np.zeros(4, dtype=complex)
        if self.family is Family.PHI:
            psi[0], psi[3] = self.alpha, self.beta
        else:
            psi[1], psi[2] = self.alpha, self.beta
        return psi

    def density_matrix(self) -> np.ndarray:
        psi = self.ket()
        return self.r * np.outer(psi, psi.conj()) + (1 - self.r) / 4 * np.eye(4)

    def bloch(self) -> np.ndarray:
        return to_bloch(self.density_matrix())


@dataclass
class LambdaSpectrum:
    lambdas: np.ndarray  # (..., 4), descending
    q: np.ndarray


def _sorted_spectrum(lam):
    lam = -np.sort(-np.asarray(lam, dtype=float), axis=-1)
    return LambdaSpectrum(lam, lam[..., 0] - lam[..., 1:].sum(axis=-1))


def concurrence_wootters(rho, tol: float = 1e-10):
    """Concurrence ``max(0, l1 - l2 - l3 - l4)`` and the lambda spectrum.

    The ``l_i`` are square roots of the eigenvalues of ``rho rho~``. They are
    computed as singular values of ``sqrt(rho) YY sqrt(rho)*``, whose squares
    are the eigenvalues of the Hermitian ``sqrt(rho) rho~ sqrt(rho)``; taking
    singular values directly keeps small ``l_i`` accurate to roundoff.
    Accepts stacks ``(..., 4, 4)``.
    """
    rho = check_density_matrix(rho)
    w, v = np.linalg.eigh(rho)
    if w.min() < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {w.min():.3g}")
    w = np.clip(w, 0.0, None)
    root = (v * np.sqrt(w)[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))
    m = root @ YY @ np.conj(root)
    spec = _sorted_spectrum(np.linalg.svd(m, compute_uv=False))
    return np.maximum(0.0, spec.q), spec


def dephasing_factors(spec: QubitSpec, t, source: str = "exact"):
    """``(zeta(t), exp(-Gamma_1 t))`` for one qubit.

    ``source="exact"`` uses the exact pure-dephasing expression at
    ``theta = 0`` and otherwise the quasi-Hamiltonian transfer matrix:
    ``zeta`` is the amplitude of the rotating-frame coherence and the decay
    factor is the ``zz`` entry. ``source="closed_form"`` uses the regime
    formulas. A noise-free qubit gives ``(1, 1)``.
    """
    t = np.asarray(t, dtype=float)
    if spec.source is None:
        return np.ones_like(t), np.ones_like(t)
    src = spec.source
    if source == "closed_form":
        return sq.zeta_closed_form(src, spec.b0, t), np.exp(-sq.gamma1(src, spec.b0) * t)
    if source != "exact":
        raise ValueError(f"unknown zeta source {source!r}")
    if src.theta == 0 or src.g == 0:
        return sq.zeta_pure_dephasing_exact(src.g, src.gamma, t), np.ones_like(t)
    r = single_transfer(spec, t)
    return np.abs(coherence(spec, t)), r[..., 3, 3]


def analytic_bloch(state: InitialState, zeta_a, decay_a, zeta_b, decay_b, phase):
    """Extended Bloch vector from per-qubit dephasing and decay factors.

    ``phase`` is the accumulated free phase of the Bell-state coherence:
    ``(b0_A + b0_B) t`` for the Phi family, ``(b0_A - b0_B) t`` for Psi.
    """
    za, ea, zb, eb, ph = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (zeta_a, decay_a, zeta_b, decay_b, phase))
    )
    a, b, r = state.alpha, state.beta, state.r
    z = za * zb
    n = np.zeros(za.shape + (16,))
    n[..., 0] = 1.0
    pol = 2 * a**2 - 1
    coh = 2 * r * a * z
    c, s = np.cos(ph), np.sin(ph)
    if state.family is Family.PHI:
        n[..., 3] = r * pol * eb
        n[..., 5] = coh * (c * b.real + s * b.imag)
        n[..., 6] = coh * (c * b.imag - s * b.real)
        n[..., 9] = n[..., 6]
        n[..., 10] = -n[..., 5]
        n[..., 12] = r * pol * ea
        n[..., 15] = r * ea * eb
    else:
        n[..., 3] = -r * pol * eb
        n[..., 5] = coh * (c * b.real + s * b.imag)
        n[..., 6] = -coh * (c * b.imag - s * b.real)
        n[..., 9] = -n[..., 6]
        n[..., 10] = n[..., 5]
        n[..., 12] = r * pol * ea
        n[..., 15] = -r * ea * eb
    return n


def _phase(state, b0_a, b0_b, t):
    t = np.asarray(t, dtype=float)
    if state.family is Family.PHI:
        return (b0_a + b0_b) * t
    return (b0_a - b0_b) * t


def analytic_bloch_two_one(
    state: InitialState, spec_a: QubitSpec, b0: float, t, zeta_source: str = "exact"
):
    """Closed-form Bloch vector with noise on qubit A; qubit B has splitting ``b0``."""
    za, ea = dephasing_factors(spec_a, t, zeta_source)
    return analytic_bloch(state, za, ea, 1.0, 1.0, _phase(state, spec_a.b0, b0, t))


def analytic_bloch_two_two(
    state: InitialState, spec_a: QubitSpec, spec_b: QubitSpec, t, zeta_source: str = "exact"
):
    """Closed-form Bloch vector with independent noise on both qubits."""
    za, ea = dephasing_factors(spec_a, t, zeta_source)
    zb, eb = dephasing_factors(spec_b, t, zeta_source)
    return analytic_bloch(state, za, ea, zb, eb, _phase(state, spec_a.b0, spec_b.b0, t))


def relaxation_functions(state: InitialState, decay_a, decay_b=1.0):
    """``(xi, xi_tilde)`` from the decay factors ``exp(-Gamma_1 t)`` of A and B.

    With ``decay_b = 1`` these are the two-one expressions. Undefined (nan)
    when ``r alpha |beta| = 0``.
    """
    ea = np.asarray(decay_a, dtype=float)
    eb = np.asarray(decay_b, dtype=float)
    r, pol = state.r, 2 * state.alpha**2 - 1
    den = 4 * state.weight
    rad_t = (1 + r * ea * eb) ** 2 - r**2 * pol**2 * (ea + eb) ** 2
    rad = (1 - r * ea * eb) ** 2 - r**2 * pol**2 * (ea - eb) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        xi_t = np.sqrt(np.clip(rad_t, 0, None)) / den
        xi = np.sqrt(np.clip(rad, 0, None)) / den
    return xi, xi_t


def lambda_spectrum_analytic(
    state: InitialState, model: Model, zeta_a, decay_a, zeta_b=1.0, decay_b=1.0
) -> LambdaSpectrum:
    """Closed-form lambda's: ``w(xi~ +- |zeta_AB|)`` and ``w xi`` (twice).

    ``w = r alpha |beta|``. For the two-one model qubit B is noise free, so
    ``zeta_b`` and ``decay_b`` must be 1.
    """
    model = Model(model)
    if model is Model.TWO_ONE and (np.any(np.asarray(zeta_b) != 1) or np.any(np.asarray(decay_b) != 1)):
        raise ValueError("two-one model: qubit B carries no noise")
    if state.weight == 0:
        raise ValueError("closed forms need r > 0 and 0 < alpha < 1")
    xi, xi_t = relaxation_functions(state, decay_a, decay_b)
    zab = np.abs(np.asarray(zeta_a, dtype=float) * np.asarray(zeta_b, dtype=float))
    w = state.weight
    lam = np.stack(np.broadcast_arrays(w * (xi_t + zab), np.abs(w * (xi_t - zab)), w * xi, w * xi), axis=-1)
    return _sorted_spectrum(lam)


@dataclass
class ConcurrenceCurve:
    times: np.ndarray
    c: np.ndarray
    q: np.ndarray
    xi: np.ndarray
    xi_tilde: np.ndarray
    zeta_ab: np.ndarray
    n_norm: np.ndarray
    lambdas: np.ndarray
    # |zeta_AB| - xi and the frequency used for grid checks
    dephasing_term: np.ndarray = field(repr=False, default=None)
    frequency: float = 0.0
    q_func: Optional[Callable] = field(repr=False, default=None)
    zeta_func: Optional[Callable] = field(repr=False, default=None)


def _model_specs(model, spec_a, spec_b):
    model = Model(model)
    if not spec_a.noisy:
        raise ValueError("qubit A must carry a noise source")
    if model is Model.TWO_ONE and spec_b.noisy:
        raise ValueError("two-one model: qubit B must be noise free")
    if model is Model.TWO_TWO and not spec_b.noisy:
        raise ValueError("two-two model: qubit B must carry a noise source")
    return model


def _oscillation_frequency(*specs):
    w = 0.0
    for s in specs:
        if s.source is not None:
            src = s.source
            if src.theta == 0:
                w = max(w, np.sqrt(max(src.g**2 - src.gamma**2, 0.0)))
            elif src.longitudinal > src.gamma:
                w = max(w, src.longitudinal)
    return w


def concurrence_analytic(
    state: InitialState,
    model: Model,
    spec_a: QubitSpec,
    spec_b: QubitSpec,
    t,
    zeta_source: str = "exact",
) -> ConcurrenceCurve:
    """Closed-form concurrence ``max(0, 2 r a |b| (|zeta_AB| - xi))`` on a grid.

    Also returns the pieces of the race between dephasing (``|zeta_AB|``) and
    relaxation (``xi``). For ``r alpha |beta| = 0`` the state is separable and
    the Wootters route is used instead (``xi`` is then nan).
    """
    model = _model_specs(model, spec_a, spec_b)
    t = np.atleast_1d(np.asarray(t, dtype=float))

    def factors(tt):
        za, ea = dephasing_factors(spec_a, tt, zeta_source)
        zb, eb = dephasing_factors(spec_b, tt, zeta_source)
        return za, ea, zb, eb

    za, ea, zb, eb = factors(t)
    n = analytic_bloch(state, za, ea, zb, eb, _phase(state, spec_a.b0, spec_b.b0, t))
    zab = za * zb
    n_norm = purity_norm(n)
    if state.weight == 0:
        c, spec = concurrence_wootters(from_bloch(n))
        nan = np.full_like(t, np.nan)
        return ConcurrenceCurve(t, c, spec.q, nan, nan, zab, n_norm, spec.lambdas,
                                np.abs(zab), _oscillation_frequency(spec_a, spec_b))
    spec = lambda_spectrum_analytic(state, model, za, ea, zb, eb)
    xi, xi_t = relaxation_functions(state, ea, eb)
    pref = 2 * state.weight
    q = pref * (np.abs(zab) - xi)

    def q_func(tt):
        a_, b_, c_, d_ = factors(np.asarray(tt, dtype=float))
        x_, _ = relaxation_functions(state, b_, d_)
        return float(pref * (np.abs(a_ * c_) - x_))

    def zeta_func(tt):
        a_, _, c_, _ = factors(np.asarray(tt, dtype=float))
        return float(a_ * c_)

    return ConcurrenceCurve(
        times=t,
        c=np.maximum(0.0, q),
        q=q,
        xi=xi,
        xi_tilde=xi_t,
        zeta_ab=zab,
        n_norm=n_norm,
        lambdas=spec.lambdas,
        dephasing_term=np.abs(zab),
        frequency=_oscillation_frequency(spec_a, spec_b),
        q_func=q_func,
        zeta_func=zeta_func,
    )


def xi_limit(state: InitialState, model: Model, relaxing: bool = True) -> float:
    """Long-time relaxation function.

    ``relaxing`` means every noisy qubit has ``Gamma_1 > 0``; otherwise the
    pure-dephasing value ``(1 - r) / (4 r a |b|)`` holds at all times.
    """
    w4 = 4 * state.weight
    if not relaxing:
        return (1 - state.r) / w4
    if Model(model) is Model.TWO_ONE:
        return np.sqrt(1 - state.r**2 * (2 * state.alpha**2 - 1) ** 2) / w4
    return 1 / w4


@dataclass(frozen=True)
class EsdInterval:
    death: float
    revival: Optional[float]  # None: entanglement never returns within the horizon
    point: bool = False  # isolated zero of C rather than an interval

    @property
    def terminal(self) -> bool:
        return self.revival is None


def _refine(f, a, b, fa, fb):
    if f is None or not (fa * fb < 0):
        # linear interpolation of the crossing
        return a if fb == fa else a + (b - a) * fa / (fa - fb)
    return brentq(f, a, b, xtol=1e-12)


def esd_times(curve: ConcurrenceCurve, check_grid: bool = True):
    """Maximal intervals with ``C = 0``.

    Grid points with ``q <= 0`` form death intervals. Between grid points,
    a sign change of ``zeta_AB`` with negligible ``xi`` is an isolated zero
    (point death), and local minima of ``q`` are refined with ``q_func`` so
    short death intervals are not missed. A death must be followed by
    ``C > REVIVAL_THRESHOLD`` to count as revived; the final interval is
    open-ended (terminal) when ``C = 0`` at the end of the grid.
    """
    t, q = curve.times, curve.q
    if check_grid and curve.frequency > 0 and len(t) > 1:
        if np.max(np.diff(t)) > np.pi / (10 * curve.frequency):
            raise GridTooCoarseError(
                f"grid spacing {np.max(np.diff(t)):.3g} exceeds pi/(10 w) for w = {curve.frequency:.3g}"
            )
    f = curve.q_func
    dead = q <= 0
    events = []  # (start, end) of zero sets; end None -> open
    k, m = 0, len(t)
    while k < m:
        if dead[k]:
            j = k
            while j + 1 < m and dead[j + 1]:
                j += 1
            start = t[0] if k == 0 else _refine(f, t[k - 1], t[k], q[k - 1], q[k])
            end = None if j == m - 1 else _refine(f, t[j], t[j + 1], q[j], q[j + 1])
            events.append((start, end, False))
            k = j + 1
            continue
        if k + 1 < m and not dead[k + 1]:
            za, zb = curve.zeta_ab[k], curve.zeta_ab[k + 1]
            xa, xb = curve.xi[k], curve.xi[k + 1]
            if za * zb < 0 and max(xa, xb) < 1e-12:
                tz = _refine(curve.zeta_func, t[k], t[k + 1], za, zb)
                events.append((tz, tz, True))
            elif f is not None and 0 < k and q[k] < q[k - 1] and q[k] <= q[k + 1]:
                res = minimize_scalar(f, bounds=(t[k - 1], t[k + 1]), method="bounded",
                                      options={"xatol": 1e-10})
                if res.fun <= 0:
                    events.append((brentq(f, t[k - 1], res.x, xtol=1e-12),
                                   brentq(f, res.x, t[k + 1], xtol=1e-12), False))
        k += 1
    events.sort(key=lambda e: e[0])

    def revived(end, until):
        if end is None:
            return False
        return bool(np.any(curve.c[(t > end) & (t <= until)] > REVIVAL_THRESHOLD))

    out = []
    cur = None
    for ev in events:
        if cur is not None and not revived(cur[1], ev[0]):
            # C never got above the threshold in between: one longer death
            cur = (cur[0], ev[1], False)
            continue
        if cur is not None:
            out.append(cur)
        cur = ev
    if cur is not None:
        if not revived(cur[1], t[-1]):
            cur = (cur[0], None, False)
        out.append(cur)
    return [EsdInterval(float(s), None if e is None else float(e), p) for s, e, p in out]


def purity_curve(state: InitialState, model: Model, spec_a: QubitSpec, spec_b: QubitSpec,
                 grid, zeta_source: str = "exact") -> np.ndarray:
    """``|n|(t)``: closed-form expression for two-two, direct norm for two-one."""
    model = _model_specs(model, spec_a, spec_b)
    t = np.asarray(grid, dtype=float)
    if model is Model.TWO_ONE:
        return purity_norm(analytic_bloch_two_one(state, spec_a, spec_b.b0, t, zeta_source))
    za, ea = dephasing_factors(spec_a, t, zeta_source)
    zb, eb = dephasing_factors(spec_b, t, zeta_source)
    a2 = state.alpha**2
    inner = 8 * a2 * (1 - a2) * (za * zb) ** 2 + (ea * eb) ** 2 + (1 - 2 * a2) ** 2 * (ea**2 + eb**2)
    return state.r * np.sqrt(inner)
