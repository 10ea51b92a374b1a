"""Physical constants (SI, CODATA 2018). Single source of truth for the package."""

EPS0 = 8.8541878128e-12      # vacuum permittivity [F/m]
K_B = 1.380649e-23           # Boltzmann constant [J/K] (exact)
HBAR = 1.054571817e-34       # reduced Planck constant [J s]
C_LIGHT = 299792458.0        # speed of light [m/s] (exact)
Q_E = 1.602176634e-19        # elementary charge [C] (exact)
AMU = 1.66053906660e-27      # atomic mass unit [kg]
