from .lp2d import HalfPlane, safest_velocity, solve_lp2d
from .orca import OrcaParams, orca_half_plane, orca_velocity
from .social_force import SocialForceParams, social_force_acceleration, social_force_velocity
from .controllers import ExpertController, OrcaExpert, SocialForceExpert, expert_controller
