"""Golden per-iteration values for the three reference runs.

Each row maps iteration index -> (log10 mu, log10 ||dz||,
log10 ||U^T dlambda_B||, log10 ||V^T dlambda_B||, alpha_max).
Rows 2-4 are transient and deliberately unpinned.
"""

AUGMENTED_GEPP = {
    0: (-1.0, -0.9, -1.9, -1.9, 0.9227),
    1: (-2.7, -1.5, -1.3, -1.2, 0.9193),
    5: (-9.4, -6.7, -6.3, -4.6, 1.0),
    6: (-11.4, -8.7, -8.3, -5.9, 1.0),
    7: (-13.4, -10.7, -10.3, -3.8, 0.9999),
    8: (-15.4, -12.7, -12.3, -1.2, 0.9439),
    9: (-17.1, -13.9, -13.4, -0.6, 0.9723),
}

CONDENSED_CHOLESKY = {
    0: (-1.0, -0.9, -1.9, -1.9, 0.9227),
    1: (-2.7, -1.5, -1.3, -1.2, 0.9193),
    5: (-9.4, -6.7, -6.3, -4.6, 1.0),
    6: (-11.4, -8.7, -8.3, -5.7, 1.0),
    7: (-13.4, -10.7, -10.3, -8.3, 1.0),
    8: (-15.4, -12.7, -12.4, -10.3, 1.0),
    9: (-17.4, -14.7, -13.3, -12.3, 1.0),
}

MODIFIED_CONDENSED = {
    0: (-1.0, -0.9, -2.1, -2.3, 0.9161),
    1: (-2.7, -1.5, -1.3, -1.4, 0.8872),
    5: (-7.6, -5.7, -5.7, -4.2, 0.9999),
    6: (-9.5, -7.7, -7.7, -6.3, 1.0),
    7: (-11.5, -9.7, -9.7, -4.3, 0.9999),
    8: (-13.5, -11.7, -11.5, -2.6, 0.9960),
    9: (-15.3, -13.5, -11.7, -0.6, 0.7386),
}

LOG_TOL = 0.3          # log10 mu, log10 ||dz||, log10 ||U^T dlambda_B||
LOG_TOL_V = 1.0        # log10 ||V^T dlambda_B|| is roundoff-determined
ALPHA0_TOL = 0.005     # alpha_max on the first iteration
