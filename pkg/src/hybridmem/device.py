"""Threshold-type memristor compact model.

Current follows a sinh-shaped I-V scaled by the state variable ``x``; the
state moves only when the terminal voltage leaves the dead band
``[-Vn, Vp]``, with exponential windows slowing motion near the bounds.

All functions accept scalars or numpy arrays so a whole array of devices can
be evaluated in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class DeviceParams:
    """Model constants. Defaults are the fit to the Lu et al. device (R_on ~ 125 kOhm)."""

    Vp: float = 1.088
    Vn: float = 1.088
    Ap: float = 816000.0
    An: float = 816000.0
    xp: float = 0.985
    xn: float = 0.985
    alpha_p: float = 0.1
    alpha_n: float = 0.1
    a1: float = 1.6e-4
    a2: float = 1.6e-4
    b: float = 0.05
    x0: float = 0.01
    x_floor: float = 1e-6

    def __post_init__(self):
        checks = {
            "Vp": self.Vp > 0,
            "Vn": self.Vn > 0,
            "Ap": self.Ap > 0,
            "An": self.An > 0,
            "xp": 0 < self.xp < 1,
            "xn": 0 < self.xn < 1,
            "a1": self.a1 > 0,
            "a2": self.a2 > 0,
            "b": self.b > 0,
            "x_floor": 0 < self.x_floor <= self.x0 <= 1,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise ValueError(f"invalid device parameters: {', '.join(bad)}")

    def with_(self, **changes) -> "DeviceParams":
        return replace(self, **changes)

    @property
    def v_safe(self) -> float:
        """Largest |v| that is guaranteed not to move the state."""
        return min(self.Vp, self.Vn)


@dataclass
class DeviceState:
    x: float

    def clamp(self, p: DeviceParams) -> "DeviceState":
        return DeviceState(float(np.clip(self.x, p.x_floor, 1.0)))


def ionic_rate(v, p: DeviceParams):
    """Threshold-gated motion function g(v) in 1/s."""
    v = np.asarray(v, dtype=float)
    pos = p.Ap * (np.exp(np.minimum(v, 700.0)) - math.exp(p.Vp))
    neg = -p.An * (np.exp(np.minimum(-v, 700.0)) - math.exp(p.Vn))
    out = np.where(v > p.Vp, pos, np.where(v < -p.Vn, neg, 0.0))
    return out if out.ndim else float(out)


def window(x, increasing, p: DeviceParams):
    """Window function f(x); ``increasing`` selects the branch (bool or bool array)."""
    x = np.asarray(x, dtype=float)
    f_up = np.where(
        x < p.xp,
        1.0,
        np.exp(-p.alpha_p * (x - p.xp)) * ((p.xp - x) / (1.0 - p.xp) + 1.0),
    )
    f_down = np.where(
        x > 1.0 - p.xn,
        1.0,
        np.exp(p.alpha_n * (x + p.xn - 1.0)) * (x / (1.0 - p.xn)),
    )
    out = np.where(increasing, f_up, f_down)
    return out if out.ndim else float(out)


def _amplitude(v, p: DeviceParams):
    return p.a1 if p.a1 == p.a2 else np.where(v >= 0, p.a1, p.a2)


def device_current(v, x, p: DeviceParams):
    """Terminal current in amperes for voltage ``v`` and state ``x``."""
    v = np.asarray(v, dtype=float)
    amp = _amplitude(v, p)
    out = amp * x * np.sinh(p.b * v)
    return out if np.ndim(out) else float(out)


def device_conductance(v, x, p: DeviceParams):
    """Small-signal conductance dI/dv, used by the Newton companion model."""
    v = np.asarray(v, dtype=float)
    amp = _amplitude(v, p)
    out = amp * x * p.b * np.cosh(p.b * v)
    return out if np.ndim(out) else float(out)


def state_derivative(v, x, p: DeviceParams):
    """dx/dt = g(v) * f(x, direction of g)."""
    g = ionic_rate(v, p)
    return g * window(x, np.asarray(g) >= 0, p)


# substep target for |h * df/dx|; RK4 is stable up to ~2.8, 0.1 keeps the local error near 1e-7 relative
RK4_H_LAMBDA = 0.1


def _window_slope_bound(p: DeviceParams) -> float:
    # max |df/dx| over [0, 1], both branches
    up = 1.0 / (1.0 - p.xp) + p.alpha_p
    down = 1.0 / (1.0 - p.xn) + p.alpha_n
    return max(up, down)


def advance_state(x, v, dt: float, p: DeviceParams):
    """Advance ``x`` over ``dt`` with ``v`` held fixed (classical RK4).

    Up to the window knee the rate is constant and the update is exact;
    past it the remainder is split into enough equal substeps to keep RK4
    accurate on the stiff tail of the windows. The result is clamped to
    ``[x_floor, 1]``. Devices with ``-Vn <= v <= Vp`` are returned
    unchanged, bit for bit.
    """
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be finite and positive, got {dt!r}")
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite device voltage")
    x = np.asarray(x, dtype=float)
    x_out = np.array(np.broadcast_to(x, np.broadcast(x, v).shape), dtype=float)
    v = np.broadcast_to(v, x_out.shape)

    g = np.asarray(ionic_rate(v, p))
    moving = g != 0
    if not np.any(moving):
        return x_out if x_out.ndim else float(x_out)

    gm = g[moving]
    xm = x_out[moving]
    up = gm > 0
    # f == 1 until the knee, so that stretch is integrated exactly
    knee = np.where(up, p.xp, 1.0 - p.xn)
    before = np.where(up, xm < p.xp, xm > 1.0 - p.xn)
    t_knee = np.where(before, (knee - xm) / gm, 0.0)
    free = before & (t_knee >= dt)
    xm = np.where(free, xm + gm * dt, np.where(before, knee, xm))
    rem = np.where(before, dt - t_knee, dt)
    # pinned at the bound the drive pushes toward: stays there after clamping
    pinned = ~free & np.where(up, xm >= 1.0, xm <= p.x_floor)
    hard = ~(free | pinned)
    if hard.any():
        stiffness = float(np.max(np.abs(gm[hard]))) * _window_slope_bound(p)
        n_sub = max(1, math.ceil(stiffness * float(rem[hard].max()) / RK4_H_LAMBDA))
        h = rem / n_sub
        xm[hard] = _rk4_tail(xm[hard], gm[hard], h[hard], n_sub, up[hard], p)
    x_out[moving] = np.clip(xm, p.x_floor, 1.0)
    return x_out if x_out.ndim else float(x_out)


def _rk4_tail(x, g, h, n_sub: int, up, p: DeviceParams):
    """RK4 past the knee, where both windows share the form c * exp(beta x) * (d + s x).

    Increasing: f = exp(-alpha_p (x - xp)) (1 - x) / (1 - xp).
    Decreasing: f = exp(alpha_n (x + xn - 1)) x / (1 - xn).
    Stages move monotonically away from the knee, so no branch switching.
    """
    c = np.where(up, g * math.exp(p.alpha_p * p.xp) / (1.0 - p.xp),
                 g * math.exp(p.alpha_n * (p.xn - 1.0)) / (1.0 - p.xn))
    beta = np.where(up, -p.alpha_p, p.alpha_n)
    d = np.where(up, 1.0, 0.0)
    sx = np.where(up, -1.0, 1.0)

    def f(xx):
        return c * np.exp(beta * xx) * (d + sx * xx)

    for _ in range(n_sub):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x_new = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if np.array_equal(x_new, x):  # settled at the window's fixed point
            break
        x = x_new
    return x


def read_resistance(x, p: DeviceParams, v_read: float = 1.0):
    """Static resistance seen by a read pulse of ``v_read`` volts."""
    return v_read / device_current(v_read, x, p)
