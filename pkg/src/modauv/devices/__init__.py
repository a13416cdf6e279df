from .camera import CameraIntrinsics, Detection, project_bbox
from .esc import (
    InvalidBankError, MuxState, PwmSource, mux_select, mux_tick, pwm_to_thrust, thrust_to_pwm,
    PWM_MAX, PWM_MIN, PWM_NEUTRAL,
)
from .imu import ImuNoise, ImuReading, MotionClass, MotionThresholds, classify_motion, sample_imu
from .odometry import OdomEstimate, dead_reckon
