from .autopilot import Autopilot, Gains
from .geometry import Direction, OrbitPlan, bearing_from_bbox, detection_ray, plan_orbit
from .mission import (
    ALLOWED, Capture, IllegalTransition, MissionInputs, MissionParams, MissionState, Phase,
    Setpoint, abort, mission_step,
)
from .pid import PidController, pid_step
