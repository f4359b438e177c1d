"""Unit helpers.

Frequencies are stored as angular frequencies in rad/us and times in us.
Configuration values use ordinary frequencies (value = omega / 2 pi) in MHz or
GHz and times in ns.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def mhz(f):
    """Ordinary frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * np.asarray(f, dtype=float) if np.ndim(f) else TWO_PI * float(f)


def ghz(f):
    return mhz(1e3 * np.asarray(f, dtype=float)) if np.ndim(f) else mhz(1e3 * float(f))


def to_mhz(omega):
    """Angular frequency in rad/us -> ordinary frequency in MHz."""
    return np.asarray(omega) / TWO_PI if np.ndim(omega) else float(omega) / TWO_PI


def to_ghz(omega):
    return to_mhz(omega) / 1e3


def ns(t):
    return np.asarray(t, dtype=float) * 1e-3 if np.ndim(t) else float(t) * 1e-3


def to_ns(t):
    return np.asarray(t) * 1e3 if np.ndim(t) else float(t) * 1e3
