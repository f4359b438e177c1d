"""Reference parameter card.

Every default used by scenarios is read from :data:`CARD`, in external units
(MHz as omega/2pi, GHz, ns).  Bump ``version`` when a value changes.
"""

from types import MappingProxyType

CARD = MappingProxyType({
    "version": 1,
    # comb
    "m": 7,
    "delta_omega_mhz": 40.0,
    "sigma_g_mhz": 150.0,
    "gamma_q_mhz": 9.4,
    "q": 1.39,
    "omega_c_ghz": 2.6915,
    "omega_s_ghz": 2.6915,
    "omega_over_2pi_mhz": 26.0,
    # losses (HWHM)
    "kappa_mhz": 0.4,
    "gamma_mhz": 0.01,
    # holes
    "hole_fwhm_mhz": 0.47,
    "hole_count": 8,
    # drive
    "pulse_ns": 6.0,
    # numerics
    "n_spins": 1200,
    "step_ns": 0.05,
    "t_end_ns": 400.0,
    "long_t_end_ns": 3000.0,
    "sweep_half_range_mhz": 150.0,
    "sweep_points": 301,
    "validation_tolerance": 1e-5,
})
