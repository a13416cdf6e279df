"""ESC pulse-width semantics and the main-board PWM source multiplexer."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

PWM_MIN = 1100.0
PWM_MAX = 1900.0
PWM_NEUTRAL = 1500.0
DEADBAND = 25.0
SLEW_LIMIT = 40.0  # us per tick while a bank is switching over
BANKS = 2
CHANNELS_PER_BANK = 4
CHANNELS = BANKS * CHANNELS_PER_BANK


def clamp_pwm(us: float) -> float:
    return min(max(float(us), PWM_MIN), PWM_MAX)


def pwm_to_thrust(cmd_us: float, max_thrust: float) -> float:
    """Piecewise-linear ESC map with a symmetric deadband around neutral."""
    us = clamp_pwm(cmd_us)
    off = us - PWM_NEUTRAL
    if abs(off) <= DEADBAND:
        return 0.0
    span = PWM_MAX - PWM_NEUTRAL - DEADBAND
    mag = (abs(off) - DEADBAND) / span * max_thrust
    return mag if off > 0 else -mag


def thrust_to_pwm(thrust: float, max_thrust: float) -> float:
    """Inverse of :func:`pwm_to_thrust` on its range; zero maps to neutral."""
    if thrust == 0.0:
        return PWM_NEUTRAL
    span = PWM_MAX - PWM_NEUTRAL - DEADBAND
    frac = min(abs(thrust) / max_thrust, 1.0)
    off = DEADBAND + frac * span
    return PWM_NEUTRAL + off if thrust > 0 else PWM_NEUTRAL - off


class PwmSource(enum.Enum):
    SOFTWARE = "SOFTWARE"
    HARDWARE = "HARDWARE"


@dataclass(frozen=True)
class MuxState:
    """Two 4-channel 2:1 selectors feeding eight ESC outputs.

    ``settling`` marks channels still slewing toward a newly selected
    source; everything else passes its source straight through.
    """

    sources: tuple = (PwmSource.SOFTWARE, PwmSource.SOFTWARE)
    output: tuple = (PWM_NEUTRAL,) * CHANNELS
    settling: tuple = (False,) * CHANNELS
    slew_limit: float = SLEW_LIMIT


class InvalidBankError(ValueError):
    pass


def mux_select(state: MuxState, bank: int, source: PwmSource) -> MuxState:
    if bank not in range(BANKS):
        raise InvalidBankError(f"bank must be 0 or 1, got {bank!r}")
    source = PwmSource(source)
    if state.sources[bank] is source:
        return state
    sources = list(state.sources)
    sources[bank] = source
    settling = list(state.settling)
    for ch in range(bank * CHANNELS_PER_BANK, (bank + 1) * CHANNELS_PER_BANK):
        settling[ch] = True
    return replace(state, sources=tuple(sources), settling=tuple(settling))


def mux_tick(state: MuxState, software, hardware) -> MuxState:
    """Advance one tick given both sources' 8-channel pulse widths."""
    out = list(state.output)
    settling = list(state.settling)
    for ch in range(CHANNELS):
        src = state.sources[ch // CHANNELS_PER_BANK]
        target = clamp_pwm(software[ch] if src is PwmSource.SOFTWARE else hardware[ch])
        if settling[ch]:
            delta = target - out[ch]
            if abs(delta) <= state.slew_limit:
                out[ch] = target
                settling[ch] = False
            else:
                out[ch] += state.slew_limit if delta > 0 else -state.slew_limit
        else:
            out[ch] = target
    return replace(state, output=tuple(out), settling=tuple(settling))
