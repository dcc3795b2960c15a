from .gp import GpHyperparameters, GpModel, fit_gp, gp_predict
from .planner import Layout, PlanGrid, PlannerConfig, Plan, astar_plan, build_costmap, local_goal, visible_waypoint, write_pgm
from .providers import GlobalGuidance, GpGuidance, PreferredVelocityGuidance, WaypointGuidance, guidance_for
