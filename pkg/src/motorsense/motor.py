"""Lumped-parameter electro-thermal model of a brushed DC motor.

The model couples three first-order balances on the state (i_a, omega, theta):

    electrical   l_a * di/dt     = v_a - R(theta) * i - k_e * omega
    mechanical   j * domega/dt   = k_e * i - b * omega - t_l
    thermal      h * dtheta/dt   = R(theta) * i^2 + k_ir * omega^2
                                   - k_0 * (1 + k_t * omega) * theta

with the winding resistance following the linear temperature law
R(theta) = r_a0 * (1 + alpha * theta). ``theta`` is temperature above
ambient throughout; no absolute ambient value is introduced.

All functions here are pure and operate on immutable value types, so they
are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from functools import lru_cache
from pathlib import Path

from scipy.integrate import quad

from .errors import CalibrationError, ConvergenceError
from .validation import check_finite, check_non_negative, check_positive


@dataclass(frozen=True)
class MotorParams:
    """Physical constants of the motor model, in SI units.

    Attributes
    ----------
    v_a:   armature supply voltage (V)
    r_a0:  armature resistance at ambient temperature (ohm)
    alpha: temperature coefficient of resistance (1/K)
    l_a:   armature inductance (H)
    k_e:   torque and back-EMF constant (V*s/rad, equivalently N*m/A)
    b:     viscous friction constant (N*m*s/rad)
    j:     total inertia (kg*m^2)
    t_l:   constant load torque (N*m)
    k_ir:  iron loss constant (W*s^2/rad^2)
    k_0:   thermal transfer coefficient at zero speed (W/K)
    k_t:   speed dependence of the thermal transfer coefficient (s/rad)
    h:     thermal capacity (J/K)
    """

    v_a: float
    r_a0: float
    alpha: float
    l_a: float
    k_e: float
    b: float
    j: float
    t_l: float
    k_ir: float
    k_0: float
    k_t: float
    h: float

    def __post_init__(self) -> None:
        check_finite("v_a", self.v_a)
        check_finite("k_e", self.k_e)
        for name in ("r_a0", "l_a", "j", "h", "k_0"):
            check_positive(name, getattr(self, name))
        for name in ("alpha", "b", "k_ir", "k_t", "t_l"):
            check_non_negative(name, getattr(self, name))

    def replace(self, **changes) -> "MotorParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class MotorState:
    """State vector: armature current (A), speed (rad/s), temperature rise (K)."""

    i_a: float
    omega: float
    theta: float

    def __post_init__(self) -> None:
        check_finite("i_a", self.i_a)
        check_finite("omega", self.omega)
        check_finite("theta", self.theta)


@dataclass(frozen=True)
class StateDerivative:
    """Time derivative of :class:`MotorState` (A/s, rad/s^2, K/s)."""

    di_a_dt: float
    domega_dt: float
    dtheta_dt: float


@dataclass(frozen=True)
class LossBreakdown:
    """Dissipated power split into copper and iron contributions (W)."""

    copper: float
    iron: float
    total: float


def armature_resistance(params: MotorParams, theta: float) -> float:
    """Winding resistance at temperature rise ``theta``: r_a0 * (1 + alpha*theta)."""
    theta = check_finite("theta", theta)
    return params.r_a0 * (1.0 + params.alpha * theta)


def cooling_coefficient(params: MotorParams, omega: float) -> float:
    """Speed-dependent heat transfer coefficient k_0 * (1 + k_t*omega), W/K."""
    omega = check_finite("omega", omega)
    return params.k_0 * (1.0 + params.k_t * omega)


def losses(params: MotorParams, state: MotorState) -> LossBreakdown:
    """Copper (I^2 R) and iron (k_ir * omega^2) losses at the given state."""
    copper = armature_resistance(params, state.theta) * state.i_a * state.i_a
    iron = params.k_ir * state.omega * state.omega
    return LossBreakdown(copper=copper, iron=iron, total=copper + iron)


def state_derivative(params: MotorParams, state: MotorState) -> StateDerivative:
    """Right-hand side of the coupled electro-mechanical-thermal system."""
    r = armature_resistance(params, state.theta)
    i, w, th = state.i_a, state.omega, state.theta
    di = (params.v_a - r * i - params.k_e * w) / params.l_a
    dw = (params.k_e * i - params.b * w - params.t_l) / params.j
    dth = (r * i * i + params.k_ir * w * w
           - cooling_coefficient(params, w) * th) / params.h
    out = StateDerivative(di, dw, dth)
    for name, value in (("di_a_dt", di), ("domega_dt", dw), ("dtheta_dt", dth)):
        if not math.isfinite(value):
            raise ValueError(f"state derivative {name} is non-finite at {state}")
    return out


def electromechanical_equilibrium(params: MotorParams, theta: float) -> tuple[float, float]:
    """Solve the 2x2 linear electro-mechanical balance at a frozen temperature.

    Returns (i, omega) with di/dt = domega/dt = 0 for resistance R(theta).
    """
    r = armature_resistance(params, theta)
    den = r * params.b + params.k_e * params.k_e
    if den == 0.0:
        raise ConvergenceError("electro-mechanical balance is singular (b and k_e both zero)")
    i = (params.b * params.v_a + params.k_e * params.t_l) / den
    w = (params.k_e * params.v_a - r * params.t_l) / den
    return i, w


def steady_state(params: MotorParams, max_iter: int = 200, tol: float = 1e-9) -> MotorState:
    """Fixed point of the full system, found by damped Newton iteration.

    The residual is the state derivative in natural units (A/s, rad/s^2,
    K/s); convergence requires every component below ``tol``. Seeded from
    the frozen-temperature equilibrium and the zero-derivative thermal
    balance, which is exact when alpha = 0.
    """
    i, w = electromechanical_equilibrium(params, 0.0)
    p = losses(params, MotorState(i, w, 0.0)).total
    th = max(p / cooling_coefficient(params, w), 0.0)

    def residual(i, w, th):
        d = state_derivative(params, MotorState(i, w, th))
        return (d.di_a_dt, d.domega_dt, d.dtheta_dt)

    f = residual(i, w, th)
    for _ in range(max_iter):
        if max(abs(c) for c in f) < tol:
            return MotorState(i, w, th)
        r = armature_resistance(params, th)
        # analytic Jacobian of the residual
        j11 = -r / params.l_a
        j12 = -params.k_e / params.l_a
        j13 = -params.r_a0 * params.alpha * i / params.l_a
        j21 = params.k_e / params.j
        j22 = -params.b / params.j
        j31 = 2.0 * r * i / params.h
        j32 = (2.0 * params.k_ir * w - params.k_0 * params.k_t * th) / params.h
        j33 = (params.r_a0 * params.alpha * i * i
               - cooling_coefficient(params, w)) / params.h
        det = (j11 * j22 * j33 - j12 * j21 * j33
               + j13 * (j21 * j32 - j22 * j31))
        if det == 0.0 or not math.isfinite(det):
            raise ConvergenceError("singular Jacobian in steady-state solve")
        # Cramer's rule for the 3x3 Newton step (j23 = 0)
        di = -(f[0] * (j22 * j33) - j12 * (f[1] * j33) + j13 * (f[1] * j32 - j22 * f[2])) / det
        dw = -(j11 * (f[1] * j33) - f[0] * (j21 * j33) + j13 * (j21 * f[2] - f[1] * j31)) / det
        dth = -(j11 * (j22 * f[2] - f[1] * j32) - j12 * (j21 * f[2] - f[1] * j31)
                + f[0] * (j21 * j32 - j22 * j31)) / det
        norm0 = max(abs(c) for c in f)
        step = 1.0
        for _ in range(40):
            cand = (i + step * di, w + step * dw, th + step * dth)
            try:
                f_cand = residual(*cand)
            except ValueError:
                step *= 0.5
                continue
            if max(abs(c) for c in f_cand) < norm0:
                i, w, th = cand
                f = f_cand
                break
            step *= 0.5
        else:
            raise ConvergenceError("steady-state Newton step failed to reduce the residual")
    raise ConvergenceError(f"steady state not found within {max_iter} iterations")


@dataclass(frozen=True)
class CalibrationTargets:
    """Observable targets plus the conventions that pin the remaining freedom.

    The five targets fix (r_a0, alpha, k_e, the torque scale, k_0, h). The
    remaining constants are not observable from those targets alone, so they
    are explicit conventions: the supply voltage and steady speed, the
    electrical and mechanical time scales (inductance, inertia), the split
    of the steady torque between viscous friction and constant load, and the
    iron-loss and fan-cooling coefficients.
    """

    peak_current: float = 60.0       # A, inrush peak from a cold standstill start
    steady_current: float = 7.27     # A, final armature current
    theta_ss: float = 80.0           # K above ambient at thermal steady state
    resistance_rise: float = 0.31    # fractional resistance increase at theta_ss
    settle_time: float = 8400.0      # s for theta to come within settle_band of theta_ss
    settle_band: float = 1.0         # K
    # conventions
    supply_voltage: float = 240.0    # V
    steady_speed: float = 500.0      # rad/s
    inductance: float = 0.08         # H
    inertia: float = 0.15            # kg*m^2
    friction_fraction: float = 0.5   # share of steady torque taken by b*omega
    iron_loss_coeff: float = 1e-4    # W*s^2/rad^2
    cooling_speed_coeff: float = 2e-3  # s/rad


def calibrate_default_params(targets: CalibrationTargets | None = None) -> MotorParams:
    """Derive a full parameter set that reproduces the calibration targets.

    Derivation, in order:

    1. r_a0 = supply_voltage / peak_current (the inrush peak from standstill
       approaches v_a / r_a0 when the electrical time constant is much
       shorter than the mechanical one).
    2. alpha = resistance_rise / theta_ss.
    3. k_e from the zeroed electrical equation at the hot steady state.
    4. b and t_l split the steady torque k_e * steady_current per
       ``friction_fraction``.
    5. k_0 from the steady-state power balance with the convention values
       of k_ir and k_t.
    6. h from the requested settle time: along the quasi-static thermal
       trajectory (electro-mechanical balance tracked at every theta) time
       scales linearly with h, so h = settle_time / integral of
       d(theta) / net heating power from 0 to theta_ss - settle_band.

    Raises :class:`CalibrationError` naming the violated balance when the
    target combination is infeasible.
    """
    t = targets if targets is not None else CalibrationTargets()
    for name in ("peak_current", "steady_current", "theta_ss", "settle_time",
                 "settle_band", "supply_voltage", "steady_speed", "inductance",
                 "inertia"):
        check_positive(name, getattr(t, name))
    check_non_negative("resistance_rise", t.resistance_rise)
    if not 0.0 <= t.friction_fraction <= 1.0:
        raise CalibrationError("friction_fraction must lie in [0, 1]")
    if t.settle_band >= t.theta_ss:
        raise CalibrationError("settle_band must be smaller than theta_ss")

    r_a0 = t.supply_voltage / t.peak_current
    alpha = t.resistance_rise / t.theta_ss
    r_hot = r_a0 * (1.0 + alpha * t.theta_ss)
    k_e = (t.supply_voltage - r_hot * t.steady_current) / t.steady_speed
    if k_e <= 0.0:
        raise CalibrationError(
            "electrical balance infeasible: hot resistive drop "
            f"{r_hot * t.steady_current:.3f} V exceeds the supply voltage")
    torque = k_e * t.steady_current
    b = t.friction_fraction * torque / t.steady_speed
    t_l = (1.0 - t.friction_fraction) * torque
    k_ir = t.iron_loss_coeff
    k_t = t.cooling_speed_coeff
    p_loss = r_hot * t.steady_current ** 2 + k_ir * t.steady_speed ** 2
    k_0 = p_loss / (t.theta_ss * (1.0 + k_t * t.steady_speed))
    if k_0 <= 0.0:
        raise CalibrationError("thermal balance infeasible: non-positive k_0")

    # Thermal capacity from the settle time. Probe the heating imbalance on
    # a grid first so an infeasible shape fails with a clear message instead
    # of a quadrature warning.
    probe = MotorParams(v_a=t.supply_voltage, r_a0=r_a0, alpha=alpha,
                        l_a=t.inductance, k_e=k_e, b=b, j=t.inertia, t_l=t_l,
                        k_ir=k_ir, k_0=k_0, k_t=k_t, h=1.0)

    def imbalance(theta: float) -> float:
        i, w = electromechanical_equilibrium(probe, theta)
        p = losses(probe, MotorState(i, w, theta)).total
        return p - cooling_coefficient(probe, w) * theta

    upper = t.theta_ss - t.settle_band
    n_probe = 200
    for k in range(n_probe + 1):
        th = upper * k / n_probe
        if imbalance(th) <= 0.0:
            raise CalibrationError(
                "thermal balance infeasible: net heating power is non-positive "
                f"at theta = {th:.2f} K, before the settle band")
    tau_unit, _ = quad(lambda th: 1.0 / imbalance(th), 0.0, upper, limit=200)
    h = t.settle_time / tau_unit

    params = probe.replace(h=h)
    ss = steady_state(params)
    if abs(ss.i_a - t.steady_current) > 1e-6 * t.steady_current:
        raise CalibrationError(
            f"round-trip check failed: steady current {ss.i_a!r} != {t.steady_current!r}")
    return params


@lru_cache(maxsize=1)
def default_params() -> MotorParams:
    """The shipped default parameter set (calibrated, cached)."""
    return calibrate_default_params()


# --- flat key-value parameter files -----------------------------------------

_PARAM_UNITS = {
    "v_a": "V", "r_a0": "ohm", "alpha": "1/K", "l_a": "H", "k_e": "V*s/rad",
    "b": "N*m*s/rad", "j": "kg*m^2", "t_l": "N*m", "k_ir": "W*s^2/rad^2",
    "k_0": "W/K", "k_t": "s/rad", "h": "J/K",
}


def save_params(params: MotorParams, path: str | Path) -> None:
    """Write one ``name = value`` line per field, with the unit as a comment."""
    lines = ["# motor parameters (SI units)"]
    for f in fields(MotorParams):
        value = getattr(params, f.name)
        lines.append(f"{f.name} = {value!r}  # {_PARAM_UNITS[f.name]}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_params(path: str | Path) -> MotorParams:
    """Read a parameter file written by :func:`save_params`.

    Blank lines and ``#`` comments are ignored; unknown or repeated keys and
    missing fields are errors.
    """
    known = {f.name for f in fields(MotorParams)}
    values: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'name = value', got {raw!r}")
        name, _, text = line.partition("=")
        name = name.strip()
        if name not in known:
            raise ValueError(f"{path}:{lineno}: unknown parameter {name!r}")
        if name in values:
            raise ValueError(f"{path}:{lineno}: duplicate parameter {name!r}")
        values[name] = float(text.strip())
    missing = sorted(known - set(values))
    if missing:
        raise ValueError(f"{path}: missing parameters: {', '.join(missing)}")
    return MotorParams(**values)
