"""Physical constants and the unit convention.

Every rate is stored as an angular frequency (rad/s). Reports divide by 2π
and quote ordinary frequency in Hz; energies are reported as E/h in Hz.
"""
import json
import math
from importlib import resources

import numpy as np


def _load(name):
    with resources.files("pcwlattice.data").joinpath(name).open("r", encoding="utf-8") as fh:
        return json.load(fh)


_CONST = _load("constants.json")

CONSTANTS_VERSION = _CONST["version"]
C = _CONST["c"]
H = _CONST["h"]
HBAR = _CONST["hbar"]
EPSILON_0 = _CONST["epsilon_0"]
AMU = _CONST["amu"]
EULER_GAMMA = _CONST["euler_gamma"]

TWO_PI = 2.0 * math.pi

NM = 1e-9
UM = 1e-6
# band curvature quoted in um^2/s, multiplying k^2 to give rad/s
UM2_PER_S = 1e-12


def to_angular(nu):
    """Ordinary frequency (Hz) -> angular frequency (rad/s)."""
    return TWO_PI * np.asarray(nu) if np.ndim(nu) else TWO_PI * nu


def to_hz(omega):
    """Angular frequency (rad/s) -> ordinary frequency (Hz)."""
    return np.asarray(omega) / TWO_PI if np.ndim(omega) else omega / TWO_PI


def energy_to_hz(energy):
    """Energy (J) -> E/h (Hz)."""
    return np.asarray(energy) / H if np.ndim(energy) else energy / H


def hz_to_energy(nu):
    """E/h (Hz) -> energy (J)."""
    return np.asarray(nu) * H if np.ndim(nu) else nu * H
