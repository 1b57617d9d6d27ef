"""Control-affine dynamics models: xdot = f(x) + g(x) u.

Two concrete models are provided: a 2D single integrator (xdot = u) and a
planar unicycle (x, y, heading) with (v, omega) inputs. Both expose the same
(f, g) interface so the learner and the safety filter never special-case a
model. Integration is explicit Euler, x_next = x + (f(x) + g(x) u) * dt.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class DynamicsModel:
    """Control-affine system with box-bounded controls.

    f(x) returns the drift (n,), g(x) the actuation matrix (n, m).
    control_bounds is (m, 2) with rows [lo, hi], lo <= hi per axis.
    """

    name: str
    n: int
    m: int
    control_bounds: np.ndarray
    f: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    g: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __post_init__(self):
        bounds = np.asarray(self.control_bounds, dtype=float)
        if bounds.shape != (self.m, 2):
            raise ValueError(
                f"control_bounds must have shape ({self.m}, 2), got {bounds.shape}"
            )
        if np.any(bounds[:, 0] > bounds[:, 1]):
            raise ValueError("control_bounds rows must satisfy lo <= hi")
        if not np.all(np.isfinite(bounds)):
            raise ValueError("control_bounds must be finite")
        object.__setattr__(self, "control_bounds", bounds)


def _check_state(model: DynamicsModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (model.n,):
        raise ValueError(f"state must have dim {model.n}, got {x.shape}")
    return x


def _check_control(model: DynamicsModel, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float).ravel()
    if u.shape != (model.m,):
        raise ValueError(f"control must have dim {model.m}, got {u.shape}")
    return u


def drift(model: DynamicsModel, x: np.ndarray) -> np.ndarray:
    """Evaluate the drift term f(x)."""
    return model.f(_check_state(model, x))


def actuation(model: DynamicsModel, x: np.ndarray) -> np.ndarray:
    """Evaluate the actuation matrix g(x), shape (n, m)."""
    return model.g(_check_state(model, x))


def clamp_control(model: DynamicsModel, u: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Clip u to the model's control box. Returns (u_clamped, was_clamped)."""
    u = _check_control(model, u)
    lo, hi = model.control_bounds[:, 0], model.control_bounds[:, 1]
    u_c = np.clip(u, lo, hi)
    return u_c, bool(np.any(u_c != u))


def step_with_info(
    model: DynamicsModel, x: np.ndarray, u: np.ndarray, dt: float
) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Explicit-Euler step. Returns (x_next, u_applied, clamped).

    Controls outside the box are clamped before integration so downstream
    consumers (the filter, the simulator) can reason about saturation.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x = _check_state(model, x)
    u_c, clamped = clamp_control(model, u)
    x_next = x + (model.f(x) + model.g(x) @ u_c) * dt
    return x_next, u_c, clamped


def step(model: DynamicsModel, x: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    """Explicit-Euler step x + (f(x) + g(x) u) * dt, with u clamped to bounds."""
    x_next, _, _ = step_with_info(model, x, u, dt)
    return x_next


# Default bounds are wide enough not to bind at nominal demonstration
# speeds (~0.5 m/s) while still giving the safety filter a real box.
_INTEGRATOR_BOUNDS = np.array([[-2.0, 2.0], [-2.0, 2.0]])
_UNICYCLE_BOUNDS = np.array([[-0.6, 1.2], [-2.0, 2.0]])


def single_integrator_2d(control_bounds: Optional[np.ndarray] = None) -> DynamicsModel:
    """Planar single integrator: xdot = u, so f = 0 and g = I."""
    return DynamicsModel(
        name="integrator2d",
        n=2,
        m=2,
        control_bounds=_INTEGRATOR_BOUNDS if control_bounds is None else control_bounds,
        f=lambda x: np.zeros(2),
        g=lambda x: np.eye(2),
    )


def unicycle(control_bounds: Optional[np.ndarray] = None) -> DynamicsModel:
    """Planar unicycle, state (x, y, heading), control (v, omega).

    xdot = v cos(heading), ydot = v sin(heading), heading_dot = omega.
    Experimental surrogate for a nonholonomic wheelchair; the default model
    everywhere else is the integrator.
    """

    def g(x: np.ndarray) -> np.ndarray:
        th = x[2]
        return np.array([[np.cos(th), 0.0], [np.sin(th), 0.0], [0.0, 1.0]])

    return DynamicsModel(
        name="unicycle",
        n=3,
        m=2,
        control_bounds=_UNICYCLE_BOUNDS if control_bounds is None else control_bounds,
        f=lambda x: np.zeros(3),
        g=g,
    )


_REGISTRY = {
    "integrator2d": single_integrator_2d,
    "unicycle": unicycle,
}


def get_model(name: str, control_bounds: Optional[np.ndarray] = None) -> DynamicsModel:
    """Look up a dynamics model by its string id ("integrator2d", "unicycle")."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown dynamics model {name!r}; known: {sorted(_REGISTRY)}"
        ) from None
    return factory(control_bounds)
