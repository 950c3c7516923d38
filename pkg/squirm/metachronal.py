"""
Metachronal waves on a ciliary envelope: tangential tip displacement, its inverse, envelope
velocity, the cilia drag law, and the Opalina body outline.
"""
from typing import Optional
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, root_validator, validator
from scipy.optimize import bisect

from squirm.coupling.conditions import TYPE_I, TYPE_II
from squirm.exceptions import MetachronalException

FIRST_ORDER = "first"
SECOND_ORDER = "second"

NEWTON_MAX_ITER = 30
NEWTON_TOLERANCE = 1e-12
MONOTONICITY_SAMPLES = 10_000


class WaveParams(BaseModel):
    """Parameters of the metachronal wave w = s + A(s) cos(k s - omega t)."""

    K: float  # amplitude scale (length)
    eta: float  # sharpness of the amplitude envelope
    k: float  # wave number (1/length)
    omega: float  # angular frequency (rad/time)
    L: float  # semi-perimeter, also the length in the drag law
    C_D: float = float("inf")  # cilia drag coefficient
    mode: str = TYPE_I
    order: str = SECOND_ORDER
    envelope_length: Optional[float] = None  # meridian length of A(s), defaults to L

    class Config:
        allow_mutation = False

    @validator("K", "L", "omega")
    def check_positive(cls, val: float) -> float:  # pylint: disable=no-self-argument, no-self-use
        if not val > 0:
            raise ValueError(f"positive value expected, but {val} is found")
        return val

    @validator("C_D")
    def check_drag(cls, val: float) -> float:  # pylint: disable=no-self-argument, no-self-use
        if val < 0:
            raise ValueError(f"drag coefficient must be non-negative, but {val} is found")
        return val

    @validator("mode")
    def check_mode(cls, val: str) -> str:  # pylint: disable=no-self-argument, no-self-use
        if val not in (TYPE_I, TYPE_II):
            raise ValueError(f"mode must be {TYPE_I} or {TYPE_II}, but {val} is found")
        return val

    @validator("order")
    def check_order(cls, val: str) -> str:  # pylint: disable=no-self-argument, no-self-use
        if val not in (FIRST_ORDER, SECOND_ORDER):
            raise ValueError(f"order must be {FIRST_ORDER} or {SECOND_ORDER}, but {val} is found")
        return val

    @root_validator(skip_on_failure=True)
    def check_monotone(cls, values):  # type: ignore  # pylint: disable=no-self-argument, no-self-use
        """s -> w must increase, otherwise neighbouring cilia overlap; type2 needs a finite drag"""
        params = dict(values)
        if params["mode"] == TYPE_II and not np.isfinite(params["C_D"]):
            raise ValueError("type2 waves need a finite drag coefficient C_D")
        margin = monotonicity_margin(
            params["K"], params["eta"], params["k"], params["envelope_length"] or params["L"]
        )
        if margin >= 1.0:
            raise ValueError(
                f"max |d(A cos ks)/ds| = {margin:.4f} >= 1, the tangential envelope folds over"
            )
        return values

    @property
    def meridian(self) -> float:
        return self.envelope_length if self.envelope_length else self.L

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    @property
    def wavelength(self) -> float:
        return 2.0 * np.pi / self.k


class OpalinaShape(BaseModel):
    """Ellipse with semi-axes a, b perturbed by -eps sin(pi x / a)"""

    a: float
    b: float
    eps: float = 0.0

    class Config:
        allow_mutation = False

    @validator("a", "b")
    def check_axes(cls, val: float) -> float:  # pylint: disable=no-self-argument, no-self-use
        if not val > 0:
            raise ValueError(f"positive semi-axis expected, but {val} is found")
        return val

    @validator("eps")
    def check_eps(cls, val: float) -> float:  # pylint: disable=no-self-argument, no-self-use
        if val < 0:
            raise ValueError(f"asymmetry must be non-negative, but {val} is found")
        return val


def opalina_wave(C_D: float = float("inf"), mode: str = TYPE_I, order: str = SECOND_ORDER) -> WaveParams:
    """Parameter set of the Opalina model, lengths in micrometers and time in seconds"""
    semi_perimeter = 324.0
    return WaveParams(
        K=0.02 * semi_perimeter,
        eta=5.0,
        k=2.0 * np.pi / 50.0,
        omega=10.0 * np.pi,
        L=semi_perimeter,
        C_D=C_D,
        mode=mode,
        order=order,
    )


OPALINA_SHAPE = OpalinaShape(a=110.0, b=36.3, eps=0.09 * 36.3)
OPALINA_VISCOSITY = 1e-3


def _amplitude(s: NDArray[np.float64], K: float, eta: float, length: float) -> NDArray[np.float64]:
    return K * np.abs(np.tanh(eta * np.sin(np.pi * s / length)))


def _amplitude_slope(s: NDArray[np.float64], K: float, eta: float, length: float) -> NDArray[np.float64]:
    arg = eta * np.sin(np.pi * s / length)
    slope = K * eta * (np.pi / length) * np.cos(np.pi * s / length) / np.cosh(arg) ** 2
    return np.sign(arg) * slope


def monotonicity_margin(K: float, eta: float, k: float, length: float) -> float:
    """max over s and phase of |d(A(s) cos(k s - phase))/ds|"""
    s = np.linspace(0.0, length, MONOTONICITY_SAMPLES)
    amp = _amplitude(s, K, eta, length)
    slope = _amplitude_slope(s, K, eta, length)
    return float(np.max(np.sqrt(slope**2 + (k * amp) ** 2)))


def amplitude(s: ArrayLike, p: WaveParams) -> NDArray[np.float64]:
    """A(s) = K |tanh(eta sin(pi s / L))|"""
    return _amplitude(np.asarray(s, dtype=float), p.K, p.eta, p.meridian)


def envelope_position(s: ArrayLike, t: float, p: WaveParams) -> NDArray[np.float64]:
    """Envelope arc position w = s + A(s) cos(k s - omega t) of the material point s.

    Raises:
        MetachronalException: s -> w is not increasing at a queried point.
    """
    s = np.asarray(s, dtype=float)
    phase = p.k * s - p.omega * t
    derivative = _dw_ds(s, t, p)
    if np.any(derivative <= 0):
        raise MetachronalException("Envelope position is not increasing in the arc length")
    return s + amplitude(s, p) * np.cos(phase)


def _dw_ds(s: NDArray[np.float64], t: float, p: WaveParams) -> NDArray[np.float64]:
    phase = p.k * s - p.omega * t
    slope = _amplitude_slope(s, p.K, p.eta, p.meridian)
    return 1.0 + slope * np.cos(phase) - p.k * amplitude(s, p) * np.sin(phase)


def invert_envelope(
    w: ArrayLike, t: float, p: WaveParams, tolerance: Optional[float] = None
) -> NDArray[np.float64]:
    """Material arc length s with envelope_position(s) = w, by Newton from s = w.

    Points where Newton does not converge in 30 iterations are bisected on [w - 2K, w + 2K].

    Raises:
        MetachronalException: the bisection bracket does not contain a root.
    """
    w = np.asarray(w, dtype=float)
    tol = NEWTON_TOLERANCE * p.L if tolerance is None else tolerance

    def residual(s: NDArray[np.float64]) -> NDArray[np.float64]:
        return s + amplitude(s, p) * np.cos(p.k * s - p.omega * t) - w

    s = w.copy()
    for _ in range(NEWTON_MAX_ITER):
        res = residual(s)
        if np.all(np.abs(res) <= tol):
            return s
        s = s - res / _dw_ds(s, t, p)
    res = residual(s)
    failed = np.flatnonzero(~(np.abs(res) <= tol))
    if failed.size:
        logging.warning("Newton failed at %d envelope points, bisecting", failed.size)
    flat_s, flat_w = s.reshape(-1), w.reshape(-1)
    for index in failed:
        target = flat_w[index]

        def scalar_residual(x: float, target: float = target) -> float:
            return float(x + amplitude(x, p) * np.cos(p.k * x - p.omega * t) - target)

        try:
            flat_s[index] = bisect(scalar_residual, target - 2 * p.K, target + 2 * p.K, xtol=tol)
        except ValueError as ex:
            raise MetachronalException(f"Cannot invert the envelope at w = {target}", ex) from ex
    return flat_s.reshape(w.shape)


def envelope_velocity(s: ArrayLike, t: float, p: WaveParams) -> NDArray[np.float64]:
    """Tangential envelope speed omega A(s) sin(k s - omega t)"""
    s = np.asarray(s, dtype=float)
    return p.omega * amplitude(s, p) * np.sin(p.k * s - p.omega * t)


def drag_coefficient(p: WaveParams, mu: float) -> float:
    """C_D mu / L, the factor of the drag law"""
    return p.C_D * mu / p.L


def drag_force(u_env: ArrayLike, u_s_tau: ArrayLike, p: WaveParams, mu: float) -> NDArray[np.float64]:
    """Tangential force density C_D (mu / L) (u_env - u_s . tau)"""
    return drag_coefficient(p, mu) * (np.asarray(u_env, dtype=float) - np.asarray(u_s_tau, dtype=float))


def opalina_profile(x: ArrayLike, shape: OpalinaShape, upper: bool = True) -> NDArray[np.float64]:
    """Ordinate of the upper (or mirrored lower) branch at abscissa x.

    Raises:
        MetachronalException: |x| > a.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > shape.a * (1 + 1e-12)):
        raise MetachronalException(f"Abscissa outside [-{shape.a}, {shape.a}]")
    ellipse = shape.b * np.sqrt(np.clip(1.0 - (x / shape.a) ** 2, 0.0, None))
    return (ellipse if upper else -ellipse) - shape.eps * np.sin(np.pi * x / shape.a)


def opalina_outline(shape: OpalinaShape, h: float, center=(0.0, 0.0)) -> NDArray[np.float64]:  # type: ignore
    """Counter-clockwise outline with nodes spaced about h in arc length.

    A node sits on each tip (x = -a and x = a).
    """
    phi = np.linspace(0.0, 2.0 * np.pi, 4001)
    x = shape.a * np.cos(phi)
    y = shape.b * np.sin(phi) - shape.eps * np.sin(np.pi * x / shape.a)
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(x), np.diff(y)))])
    half = int(np.argmin(np.abs(phi - np.pi)))
    # resample each half separately so that both tips are nodes
    pieces = []
    for lo, hi in ((0, half), (half, phi.size - 1)):
        n_seg = max(4, int(np.ceil((arc[hi] - arc[lo]) / h)))
        targets = np.linspace(arc[lo], arc[hi], n_seg + 1)[:-1]
        pieces.append(np.stack([np.interp(targets, arc, x), np.interp(targets, arc, y)], axis=1))
    return np.concatenate(pieces) + np.asarray(center, dtype=float)
