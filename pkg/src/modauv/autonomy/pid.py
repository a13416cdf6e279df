from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass
class PidController:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    output_limit: float = float("inf")
    integral_limit: Optional[float] = None
    integral: float = 0.0
    last_error: Optional[float] = None

    def reset(self) -> None:
        self.integral = 0.0
        self.last_error = None

    def step(self, error: float, dt: float) -> float:
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.integral += error * dt
        if self.ki:
            # anti-windup: the integral term alone may not exceed its limit
            lim = self.integral_limit if self.integral_limit is not None else self.output_limit
            bound = lim / abs(self.ki)
            self.integral = min(max(self.integral, -bound), bound)
        deriv = 0.0 if self.last_error is None else (error - self.last_error) / dt
        self.last_error = error
        u = self.kp * error + self.ki * self.integral + self.kd * deriv
        return min(max(u, -self.output_limit), self.output_limit)


def pid_step(ctrl: PidController, error: float, dt: float) -> float:
    return ctrl.step(error, dt)
