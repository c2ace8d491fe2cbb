"""Physical constants shared across the package (SI units)."""

import numpy as np

MU_EARTH = 3.986004418e14  # m^3/s^2
R_EARTH = 6.371e6  # m
SPEED_OF_LIGHT = 3.0e8  # m/s, the rounded value used throughout the link budget
BOLTZMANN = 1.38e-23  # J/K


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(w):
    return 10.0 * np.log10(w) + 30.0
