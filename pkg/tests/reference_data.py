"""Published reference coefficients used as noiseless generators in tests.

The fitted functions below come from field studies of inland-waterway
vessel traffic; raw observations are unavailable, so the coefficients act
as inputs and the tests check analytic derivations and round-trip fitting
against them.
"""

# Speed-gap fits: dataset -> list of (family, a, b).
# v in km/h, g in m.
SPEED_GAP_FITS = {
    "loaded_run_1": [
        ("logarithmic", 1.3382, 0.4536),
        ("exponential", 5.224, 0.0015),
        ("linear", 0.0102, 5.1955),
        ("power", 2.4139, 0.2138),
    ],
    "loaded_run_2": [
        ("logarithmic", 0.6102, 3.5863),
        ("exponential", 5.8728, 0.0006),
        ("linear", 0.004, 5.8622),
        ("power", 4.1042, 0.0954),
    ],
    "loaded_combined": [
        ("logarithmic", 0.9816, 1.714),
        ("exponential", 5.4803, 0.0009),
        ("linear", 0.0057, 5.5197),
        ("power", 2.8704, 0.1649),
    ],
    "empty_run": [
        ("logarithmic", 0.8776, 6.0802),
        ("exponential", 9.4029, 0.0005),
        ("linear", 0.0054, 9.3791),
        ("power", 6.8223, 0.0849),
    ],
}

# Speed-density fits per dataset: (form, c1, c2) with v in km/h, k in vessels/km.
SPEED_DENSITY_FITS = [
    ("greenshields", 0.6611, 10.826),
    ("greenberg", 4.8222, 15.411),
    ("underwood", 13.504, 0.115),
    ("greenshields", 0.706, 10.099),
    ("greenberg", 4.0612, 13.07),
    ("underwood", 11.88, 0.119),
    ("greenshields", 1.2854, 17.072),
    ("greenberg", 7.377, 22.42),
    ("underwood", 20.915, 0.136),
    ("greenshields", 0.4355, 11.418),
    ("underwood", 11.643, 0.048),
]

V_MIN = 2.65  # km/h
V_F_PIECEWISE = 10.5  # km/h
K1 = 4.0  # vessels/km

# Pooled classical fits with their published characteristic parameters.
CLASSICAL_CHARACTERISTICS = [
    # form, c1, c2, v_f, v_m, k_m, q_m, k_max
    ("greenshields", 0.7634, 11.817, 11.817, 5.909, 7.740, 45.730, 12.008),
    ("greenberg", 2.502, 11.227, None, 2.650, 30.834, 81.709, 30.834),
    ("underwood", 12.999, 0.107, 12.999, 4.782, 9.346, 44.692, 14.863),
]

# Piecewise fits (v_f = 10.5, k1 = 4) with published characteristic parameters.
PIECEWISE_CHARACTERISTICS = [
    # form, c1, c2, v_m, k_m, q_m, k_max
    ("piecewise_linear", 0.667, 10.92, 5.462, 8.184, 44.700, 12.398),
    ("piecewise_log", 4.74, 15.28, 4.737, 9.257, 43.855, 14.383),
    ("piecewise_exp", 13.62, 0.115, 5.011, 8.696, 43.573, 14.235),
]

# Four-way congestion thresholds in km/h.
STATE_BOUNDARIES = (5.67, 7.28, 9.38)
