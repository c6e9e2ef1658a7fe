"""Shared test fixtures: the reference network setup used across the suite."""

import ehrelay as er

NOISE_W = 1e-9  # -60 dBm


def dbm(value):
    return 10.0 ** ((value - 30.0) / 10.0)


def reference_params(p_s_dbm=20.0, n_antennas=1, **overrides):
    """Default 80/10/70 m geometry, alpha 3, K 10, eta 0.5, rate 1."""
    fields = dict(
        p_s=dbm(p_s_dbm),
        n0=NOISE_W,
        eta=0.5,
        rate=1.0,
        n_antennas=n_antennas,
        rician_k=10.0,
        d_sd=80.0,
        d_sr=10.0,
        d_rd=70.0,
        alpha=3.0,
    )
    fields.update(overrides)
    return er.SystemParams(**fields)


def reference_battery(levels=20, e_t=1e-3, capacity=5e-3):
    return er.BatteryConfig(capacity=capacity, levels=levels, e_t=e_t)


def solve_outage(params, battery):
    """Analytic pipeline: chain -> stationary state -> outage breakdown."""
    links = er.link_stats(params)
    thr = er.thresholds(params.rate)
    tm = er.build_transition_matrix(params, links, thr, battery)
    pi = er.reachable_steady_state(tm)
    return er.outage_probability(params, links, thr, battery, pi)
