"""Physical constants (CODATA 2018 exact values where defined)."""

C_LIGHT = 299792458.0          # speed of light in vacuum, m/s
HBAR = 1.054571817e-34         # reduced Planck constant, J*s
K_B = 1.380649e-23             # Boltzmann constant, J/K
EPS0 = 8.8541878128e-12        # vacuum permittivity, F/m
