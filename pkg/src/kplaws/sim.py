"""Galerkin truncation of the Kirchhoff-Pokhozhaev equation in Fourier modes.

Each retained mode j carries a frequency value xi2_j = |xi_j|^2, a quadrature
weight mu_j and a complex amplitude w_j obeying

    w_j'' = -xi2_j w_j / q^2,     q = a sum_j mu_j xi2_j |w_j|^2 + b.

The truncated system conserves every lowered law exactly, so the drift seen
here is integrator error only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lawgen import InvariantDescriptor
from .momentcheck import CompiledPoly, lower_invariant

DRIFT_FLOOR = 1e-12
PRECISIONS = {"double": (np.float64, np.complex128), "extended": (np.longdouble, np.clongdouble)}


class QNearZero(ArithmeticError):
    """|q| fell to the guard level; the nondegeneracy hypothesis q != 0 failed."""


@dataclass(frozen=True)
class ModeSystem:
    xi2: np.ndarray
    weights: np.ndarray
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        xi2 = np.asarray(self.xi2, dtype=float)
        mu = np.asarray(self.weights, dtype=float)
        if xi2.ndim != 1 or xi2.shape != mu.shape or not len(xi2):
            raise ValueError("need equally sized, nonempty xi2 and weight lists")
        if (xi2 <= 0).any() or (mu <= 0).any():
            raise ValueError("xi2 and weights must be positive")
        if self.a == 0:
            raise ValueError("a must be nonzero")
        order = np.argsort(xi2, kind="stable")
        object.__setattr__(self, "xi2", xi2[order])
        object.__setattr__(self, "weights", mu[order])

    @classmethod
    def default(cls, n_modes: int = 8, a: float = 1.0, b: float = 1.0) -> ModeSystem:
        """xi2_j = j^2 for j = 1..N with unit weights."""
        j = np.arange(1, n_modes + 1, dtype=float)
        return cls(j**2, np.ones(n_modes), a, b)

    @property
    def q_floor(self) -> float:
        return 1e-9 * (abs(self.a) + abs(self.b))

    def __len__(self) -> int:
        return len(self.xi2)


@dataclass(frozen=True)
class ModeState:
    t: float
    w: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, system: ModeSystem) -> ModeState:
        n = len(system)
        return cls(0.0, np.zeros(n, complex), np.zeros(n, complex))


def initial_data(system: ModeSystem, seed: int = 0, smoothness: int = 6) -> ModeState:
    """Random amplitudes decaying like an H^smoothness function.

    w_j = r e^{i theta} xi2^{-(s+1)/2}, v_j = r' e^{i theta'} xi2^{-s/2},
    r, r' uniform in [0.5, 1].
    """
    rng = np.random.default_rng(seed)
    n = len(system)
    r = rng.uniform(0.5, 1.0, size=(2, n))
    theta = rng.uniform(0.0, 2 * np.pi, size=(2, n))
    w = r[0] * np.exp(1j * theta[0]) * system.xi2 ** (-(smoothness + 1) / 2)
    v = r[1] * np.exp(1j * theta[1]) * system.xi2 ** (-smoothness / 2)
    return ModeState(0.0, w, v)


def q_of(state: ModeState, system: ModeSystem) -> float:
    return float(system.a * np.sum(system.weights * system.xi2 * np.abs(state.w) ** 2) + system.b)


def _accel(w: np.ndarray, system: ModeSystem, sign: float = 0.0) -> np.ndarray:
    # with sign = +-1 a stage value of q on the wrong side of zero also counts:
    # a step that jumps over q = 0 has crossed the degenerate set
    q = system.a * np.sum(system.weights * system.xi2 * (w.real**2 + w.imag**2)) + system.b
    if abs(q) <= system.q_floor or q * sign < 0:
        raise QNearZero(f"q = {float(q):.3e} reached the guard {system.q_floor:.3e} (or changed sign)")
    return -system.xi2 * w / (q * q)


def _sign_of_q(w: np.ndarray, system: ModeSystem) -> float:
    return float(np.sign(system.a * np.sum(system.weights * system.xi2 * (w.real**2 + w.imag**2)) + system.b))


def rhs(state: ModeState, system: ModeSystem) -> tuple[np.ndarray, np.ndarray]:
    """(dw/dt, dv/dt)."""
    return state.v.copy(), _accel(state.w, system)


def _rk4_increment(w: np.ndarray, v: np.ndarray, system: ModeSystem, dt, sign: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    k1w, k1v = v, _accel(w, system, sign)
    k2w, k2v = v + 0.5 * dt * k1v, _accel(w + 0.5 * dt * k1w, system, sign)
    k3w, k3v = v + 0.5 * dt * k2v, _accel(w + 0.5 * dt * k2w, system, sign)
    k4w, k4v = v + dt * k3v, _accel(w + dt * k3w, system, sign)
    return dt / 6 * (k1w + 2 * k2w + 2 * k3w + k4w), dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)


def step_rk4(state: ModeState, system: ModeSystem, dt: float) -> ModeState:
    """One classical RK4 step; q is re-evaluated at every stage.

    Raises :class:`QNearZero` if any stage puts q within the guard of zero
    or on the other side of it.
    """
    if dt == 0:
        raise ValueError("dt must be nonzero")
    dw, dv = _rk4_increment(state.w, state.v, system, dt, _sign_of_q(state.w, system))
    return ModeState(state.t + dt, state.w + dw, state.v + dv)


def moments(state: ModeState, system: ModeSystem, j_max: int) -> dict:
    """A_j (2..j_max), B_j and X_j (1..j_max-1), and q.

    Keys are ("A", j)-style tuples plus "q" and "a", ready for a
    :class:`~kplaws.momentcheck.CompiledPoly`.
    """
    if j_max < 2:
        raise ValueError("j_max must be >= 2")
    return _moments(np.atleast_2d(state.w), np.atleast_2d(state.v), system, j_max, squeeze=True)


def _moments(w: np.ndarray, v: np.ndarray, system: ModeSystem, j_max: int, squeeze=False) -> dict:
    # rows are time samples, columns are modes
    ww = w.real**2 + w.imag**2
    vv = v.real**2 + v.imag**2
    wv = w.real * v.real + w.imag * v.imag
    out: dict = {}
    for j in range(1, j_max + 1):
        c = system.weights * system.xi2**j
        if j >= 2:
            out[("A", j)] = ww @ c
        if j < j_max:
            out[("B", j)] = vv @ c
            out[("X", j)] = wv @ c
    out["q"] = system.a * (ww @ (system.weights * system.xi2)) + system.b
    out["a"] = np.full_like(out["q"], system.a)
    if squeeze:
        out = {k: float(x[0]) for k, x in out.items()}
    return out


class InvariantEvaluator:
    """Float evaluation of a lowered law at states or whole trajectories."""

    def __init__(self, inv: InvariantDescriptor, dtype=np.float64):
        self.descriptor = inv
        self.poly = lower_invariant(inv)
        self.j_max = max(2, self.poly.max_index())
        self._compiled = CompiledPoly(self.poly, dtype)

    def at(self, state: ModeState, system: ModeSystem) -> float:
        if abs(q_of(state, system)) <= system.q_floor:
            raise QNearZero("q is too close to zero to evaluate a law")
        return float(self._compiled(moments(state, system, self.j_max)))

    def along(self, w: np.ndarray, v: np.ndarray, system: ModeSystem) -> np.ndarray:
        return np.asarray(self._compiled(_moments(w, v, system, self.j_max)))


def eval_invariant(inv: InvariantDescriptor, state: ModeState, system: ModeSystem) -> float:
    return InvariantEvaluator(inv).at(state, system)


@dataclass
class DriftReport:
    times: np.ndarray
    q: np.ndarray
    values: dict[str, np.ndarray]
    drifts: dict[str, float]
    dt: float
    steps: int
    method: str = "rk4"
    valid: bool = True
    error: str | None = None
    floor: float = DRIFT_FLOOR
    meta: dict = field(default_factory=dict)


def relative_drift(series: np.ndarray, floor: float = DRIFT_FLOOR) -> float:
    series = np.asarray(series)
    if not len(series):
        return 0.0
    return float(np.max(np.abs(series - series[0])) / max(abs(series[0]), floor))


def _kahan(total, inc, comp):
    y = inc - comp
    t = total + y
    return t, (t - total) - y


def run(
    system: ModeSystem,
    initial: ModeState,
    horizon: float,
    dt: float,
    invariants: dict[str, InvariantDescriptor] | Sequence[InvariantDescriptor],
    precision: str = "double",
) -> DriftReport:
    """Fixed-step RK4 up to ``horizon``; every law is sampled at every step.

    The step count is ``round(horizon/dt)``.  On :class:`QNearZero` the
    report covers the steps taken so far and is flagged invalid.
    ``precision="extended"`` integrates and evaluates in ``np.longdouble``,
    which pushes the round-off floor of the drift well below 1e-15.
    """
    if horizon <= 0 or dt <= 0:
        raise ValueError("horizon and dt must be positive")
    real, cplx = PRECISIONS[precision]
    if not isinstance(invariants, dict):
        invariants = {f"I_{inv.k}": inv for inv in invariants}
    evaluators = {name: InvariantEvaluator(inv, real) for name, inv in invariants.items()}

    steps = max(1, int(round(horizon / dt)))
    ws = np.empty((steps + 1, len(system)), cplx)
    vs = np.empty_like(ws)
    ts = np.empty(steps + 1)
    state = ModeState(initial.t, initial.w.astype(cplx), initial.v.astype(cplx))
    dt = real(dt)
    ws[0], vs[0], ts[0] = state.w, state.v, state.t
    n_done, error = 0, None
    w, v = state.w, state.v
    # Kahan-compensated accumulation of the RK4 increments keeps the
    # round-off floor of the drift flat in the number of steps
    cw, cv = np.zeros_like(w), np.zeros_like(v)
    sign = _sign_of_q(w, system)
    try:
        for n in range(1, steps + 1):
            dw, dv = _rk4_increment(w, v, system, dt, sign)
            w, cw = _kahan(w, dw, cw)
            v, cv = _kahan(v, dv, cv)
            ws[n], vs[n], ts[n] = w, v, initial.t + n * float(dt)
            n_done = n
    except QNearZero as exc:
        error = str(exc)
    ws, vs, ts = ws[: n_done + 1], vs[: n_done + 1], ts[: n_done + 1]

    qs = _moments(ws, vs, system, 2)["q"]
    values = {name: ev.along(ws, vs, system) for name, ev in evaluators.items()}
    return DriftReport(
        times=ts,
        q=qs.astype(float),
        values={name: x.astype(float) for name, x in values.items()},
        drifts={name: relative_drift(x) for name, x in values.items()},
        dt=float(dt),
        steps=n_done,
        valid=error is None,
        error=error,
        meta={"precision": precision},
    )


def observed_orders(drifts: Sequence[float]) -> list[float]:
    """log2 of successive drift ratios for a sequence of halved step sizes."""
    return [math.log2(d0 / d1) if d0 > 0 and d1 > 0 else math.nan for d0, d1 in zip(drifts, drifts[1:])]


def convergence_study(
    system: ModeSystem,
    initial: ModeState,
    horizon: float,
    dt0: float,
    invariants: dict[str, InvariantDescriptor],
    halvings: int = 3,
    precision: str = "extended",
) -> dict:
    """Run at dt0, dt0/2, ... and report per-law drifts and observed orders.

    ``orders[name][-1]`` (the finest pair) is the observed convergence order.
    """
    dts = [dt0 / 2**n for n in range(halvings + 1)]
    reports = [run(system, initial, horizon, dt, invariants, precision) for dt in dts]
    drifts = {name: [r.drifts[name] for r in reports] for name in invariants}
    return {
        "dts": dts,
        "drifts": drifts,
        "orders": {name: observed_orders(d) for name, d in drifts.items()},
        "reports": reports,
    }
