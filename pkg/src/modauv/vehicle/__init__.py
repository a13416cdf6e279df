from .allocation import UnreachableWrenchError, Wrench, ZERO_WRENCH, allocate_thrust, mixing_matrix, thrusters_wrench
from .buoyancy import NegativeBallastError, displaced_volume, net_buoyancy, solve_ballast, with_ballast
from .config import (
    Enclosure, GRAVITY, LB, STANDARD_TUBES, Thruster, VehicleConfig, vectored_eight, vectored_six,
)
from .dynamics import RigidBodyState, step_dynamics, terminal_speed
