"""Numerical tolerances shared by the whole package.

All values are chosen for double precision with up to ~1e5 RK4 steps.
"""

# Density-matrix validation: hermiticity, trace and determinant residuals.
DENSITY_TOL = 1e-12

# Bloch-ball membership of user-supplied states.
BALL_TOL = 1e-9

# Agreement between the density-level and Bloch-level right-hand sides.
ORACLE_TOL = 1e-10

# Ball membership along integrated trajectories.
TRAJECTORY_BALL_TOL = 1e-6

# Slack for box-constraint checks on GPM iterates (convex combinations round).
BOUNDS_TOL = 1e-12
