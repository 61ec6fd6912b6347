"""Physical constants (SI units)."""

import math

C0 = 299_792_458.0                 # speed of light in vacuum, m/s
MU0 = 4e-7 * math.pi               # vacuum permeability, H/m
ETA0 = MU0 * C0                    # free-space wave impedance, ohm (~376.73)
K_B = 1.380649e-23                 # Boltzmann constant, J/K
T_REF_NOISE = 290.0                # noise-figure reference temperature, K
