"""Physical constants and unit helpers used across the simulator.

Internal unit convention: SI everywhere (m, s, K, Pa, A, V, Ohm), except
that layout coordinates and wire geometry enter through input files in
micrometers and are converted at parse time.
"""

# Boltzmann constant
KB_EV = 8.617333262e-5   # eV/K
KB_J = 1.380649e-23      # J/K

# Elementary charge
QE = 1.602176634e-19     # C

# Micrometer to meter
UM = 1.0e-6
