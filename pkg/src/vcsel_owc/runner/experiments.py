"""Experiment drivers.  Each ``run_*`` takes a :class:`ScenarioConfig` and
returns a :class:`ResultTable`.

Work is cut into items whose size depends only on the configuration, each
item draws from its own keyed generator (see :mod:`.parallel`), and partial
sums are combined with ``fsum``; a table is therefore the same for any
number of workers.
"""
from __future__ import annotations

import functools
import math
import time

import numpy as np
from scipy import stats

from .. import analysis, eyesafety
from ..activation import (NO_COVERAGE, BenchmarkScheme, effective_rate, generate_training_set,
                          activation_accuracy, scheme_positions, select_beams, serving_beams,
                          train_mlp)
from ..channel import (beam_width, ceiling_pd_constellation, downlink_power_matrix,
                       in_footprint)
from ..geometry import (UP, MobilityParams, OrientationModel, angles, build_grid_array,
                        random_waypoint_advance, stationary_waypoint_batch)
from ..link import (calibrate_noise_floor, data_rate, freeze_noise, sinr_with_ici,
                    snr_per_subcarrier, to_db)
from .config import ScenarioConfig
from .parallel import fsum_mean, item_rng, pmap
from .tables import ResultTable

# stream keys, one per experiment, so experiments never share random numbers
_KEY = {"snr_pdf": 1, "rate_vs_cell": 2, "rate_vs_array": 3, "multiuser": 4,
        "mobility": 5, "ann": 6}


# --------------------------------------------------------------------------
# shared helpers
# --------------------------------------------------------------------------

def center_power(beam, a_eff: float, h: float) -> float:
    """Pre-gain power straight under a vertical beam."""
    w = float(beam_width(beam, h))
    return 2.0 * beam.p_tx_opt * a_eff / (math.pi * w * w)


def receiver_ledger(cfg: ScenarioConfig, theta: float, beam=None):
    """Receiver ledger for one beam angle under ``cfg.noise_mode``.

    ``frozen`` fixes the noise PSD at its value for the cell-centre power and
    ``calibrated`` picks the PSD that puts the cell-centre SNR at the
    configured target.
    """
    beam = beam or cfg.beam(theta)
    base = cfg.receiver.ledger()
    if cfg.noise_mode == "signal":
        return base
    p0 = center_power(beam, base.a_eff, cfg.layout.h)
    if cfg.noise_mode == "frozen":
        return freeze_noise(base, p0)
    if theta not in cfg.theta_fwhm_deg:
        raise ValueError(f"no calibration target for {theta} deg")
    return calibrate_noise_floor(base, cfg.ofdm, p0, cfg.calibration_target(theta))


def central_params(cfg: ScenarioConfig, theta: float, d_cell: float):
    beam = cfg.beam(theta)
    ledger = receiver_ledger(cfg, theta, beam)
    return analysis.central_beam_params(beam, ledger, cfg.ofdm, cfg.layout.h, d_cell)


def _single_beam(cfg: ScenarioConfig, d_cell: float):
    return build_grid_array(1, d_cell, cfg.layout.ap_height, cfg.layout.ue_height,
                            cfg.layout.d_beam)


def _on_plane(xy, z):
    xy = np.asarray(xy, dtype=float)
    return np.column_stack([xy, np.full(len(xy), z)])


def _uniform_footprint(layout, rng, n):
    xmin, xmax, ymin, ymax = layout.footprint
    return np.column_stack([rng.uniform(xmin, xmax, n), rng.uniform(ymin, ymax, n)])


def _chunks(total: int, size: int):
    """``(index, count)`` pairs covering ``total`` samples."""
    size = max(1, int(size))
    return [(i, min(size, total - s)) for i, s in enumerate(range(0, total, size))]


def _table(cfg, name, columns):
    return ResultTable(name, list(columns), metadata={
        "seed": cfg.seed, "config_hash": cfg.digest(), "noise_mode": cfg.noise_mode})


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(cfg, *args, **kwargs):
        t0 = time.perf_counter()
        table = fn(cfg, *args, **kwargs)
        table.wall_time = time.perf_counter() - t0
        return table
    return wrapper


# --------------------------------------------------------------------------
# SNR maps
# --------------------------------------------------------------------------

@_timed
def run_snr_map(cfg: ScenarioConfig) -> ResultTable:
    """SNR over the central cell for every beam angle, plus the full array
    at the mobility beam angle when ``cfg.full_array_map`` is set."""
    table = _table(cfg, "snr_map", ["map", "theta_fwhm_deg", "x", "y", "beam", "snr_db"])
    d = cfg.layout.d_cell
    g = np.linspace(-d / 2, d / 2, cfg.samples.grid)
    gx, gy = np.meshgrid(g, g[::-1])
    for theta in cfg.theta_fwhm_deg:
        beam = cfg.beam(theta)
        ledger = receiver_ledger(cfg, theta, beam)
        layout = _single_beam(cfg, d)
        pts = _on_plane(np.column_stack([gx.ravel(), gy.ravel()]), layout.ue_plane_height)
        p = downlink_power_matrix(layout, beam, pts, UP, ledger.a_eff, ledger.psi_c)[:, 0]
        snr = to_db(snr_per_subcarrier(ledger, cfg.ofdm, p))
        for (x, y), s in zip(pts[:, :2], snr):
            table.add("central", theta, float(x), float(y), 0, float(s))
        table.metadata[f"peak_snr_db_{theta:g}deg"] = round(float(snr.max()), 6)
        table.metadata[f"corner_falloff_db_{theta:g}deg"] = round(float(snr.max() - snr.min()), 6)
    if cfg.full_array_map:
        theta = cfg.mobility.theta_fwhm_deg
        beam = cfg.beam(theta)
        ledger = receiver_ledger(cfg, theta, beam)
        layout = cfg.layout.build()
        xmin, xmax, ymin, ymax = layout.footprint
        n = cfg.samples.grid * cfg.layout.n_side // 2 + 1
        gx, gy = np.meshgrid(np.linspace(xmin, xmax, n), np.linspace(ymax, ymin, n))
        pts = _on_plane(np.column_stack([gx.ravel(), gy.ravel()]), layout.ue_plane_height)
        p = downlink_power_matrix(layout, beam, pts, UP, ledger.a_eff, ledger.psi_c)
        best = np.argmax(p, axis=1)
        snr = to_db(snr_per_subcarrier(ledger, cfg.ofdm, p[np.arange(len(p)), best]))
        for (x, y), k, s in zip(pts[:, :2], best, snr):
            table.add("array", theta, float(x), float(y), int(k), float(s))
    return table


# --------------------------------------------------------------------------
# central-beam SNR distribution and mean rate
# --------------------------------------------------------------------------

def _disk_snr(cfg: ScenarioConfig, theta: float, d_cell: float, key, count: int):
    """Linear SNR of ``count`` users uniform on the equal-area disk, computed
    through the channel and link models (not the closed form)."""
    rng = item_rng(cfg.seed, *key)
    beam = cfg.beam(theta)
    ledger = receiver_ledger(cfg, theta, beam)
    layout = _single_beam(cfg, d_cell)
    r = analysis.equal_area_radius(d_cell) * np.sqrt(rng.uniform(size=count))
    a = rng.uniform(0.0, 2 * math.pi, count)
    pts = _on_plane(np.column_stack([r * np.cos(a), r * np.sin(a)]), layout.ue_plane_height)
    p = downlink_power_matrix(layout, beam, pts, UP, ledger.a_eff, ledger.psi_c)[:, 0]
    return snr_per_subcarrier(ledger, cfg.ofdm, p)


def _disk_rate_sum(cfg, theta, d_cell, key, count):
    gamma = _disk_snr(cfg, theta, d_cell, key, count)
    rate = data_rate(cfg.ofdm, cfg.receiver.b_l, gamma)
    return math.fsum(rate), count


def _disk_snr_db_item(cfg, theta, d_cell, key, count):
    return to_db(_disk_snr(cfg, theta, d_cell, key, count))


@_timed
def run_pdf_experiment(cfg: ScenarioConfig, bins: int = 100) -> ResultTable:
    """Histogram of the central-beam SNR with the exact and uniform densities."""
    table = _table(cfg, "snr_pdf", ["theta_fwhm_deg", "snr_db", "empirical", "pdf_exact",
                                    "pdf_uniform"])
    d = cfg.layout.d_cell
    for ti, theta in enumerate(cfg.theta_fwhm_deg):
        items = [(cfg, theta, d, (_KEY["snr_pdf"], ti, i), n)
                 for i, n in _chunks(cfg.samples.mc, cfg.samples.chunk)]
        s = np.concatenate(pmap(_disk_snr_db_item, items, cfg.workers))
        cb = central_params(cfg, theta, d)
        lo, hi = analysis.snr_db_support(cb)
        hist, edges = np.histogram(s, bins=bins, range=(lo, hi), density=True)
        mid = 0.5 * (edges[1:] + edges[:-1])
        exact = analysis.snr_pdf_exact(cb, mid)
        unif = analysis.snr_pdf_uniform(cb, mid)
        for row in zip(mid, hist, exact, unif):
            table.add(theta, *map(float, row))
        ks_exact = stats.kstest(s, lambda g: analysis.snr_cdf_exact(cb, g)).statistic
        ks_unif = stats.kstest(s, lambda g: analysis.snr_cdf_uniform(cb, g)).statistic
        tag = f"{theta:g}deg"
        table.metadata[f"ks_exact_{tag}"] = round(float(ks_exact), 8)
        table.metadata[f"ks_uniform_{tag}"] = round(float(ks_unif), 8)
        table.metadata[f"support_db_{tag}"] = f"[{lo:.6f}, {hi:.6f}]"
        table.metadata[f"sample_range_db_{tag}"] = f"[{s.min():.6f}, {s.max():.6f}]"
    return table


@_timed
def run_avg_rate_vs_cell_size(cfg: ScenarioConfig) -> ResultTable:
    """Central-beam mean rate against cell size: simulation, closed form and quadrature."""
    table = _table(cfg, "rate_vs_cell", [
        "theta_fwhm_deg", "d_cell", "mc_rate", "closed_form", "quadrature",
        "rel_err_closed", "min_snr_db", "high_snr"])
    for ti, theta in enumerate(cfg.theta_fwhm_deg):
        for di, d in enumerate(cfg.sweep.d_cell):
            items = [(cfg, theta, d, (_KEY["rate_vs_cell"], ti, di, i), n)
                     for i, n in _chunks(cfg.samples.mc, cfg.samples.chunk)]
            mc = fsum_mean(pmap(_disk_rate_sum, items, cfg.workers))
            cb = central_params(cfg, theta, d)
            cf = analysis.avg_rate_central(cb, cfg.ofdm, cfg.receiver.b_l)
            quad = analysis.avg_rate_central_quad(cb, cfg.ofdm, cfg.receiver.b_l)
            table.add(theta, d, mc, cf.rate, quad, (cf.rate - mc) / mc, cf.min_snr_db,
                      cf.high_snr)
    return table


# --------------------------------------------------------------------------
# system rate, single and multiple users
# --------------------------------------------------------------------------

def _array_rate_sum(cfg, theta, n_side, key, count):
    rng = item_rng(cfg.seed, *key)
    beam = cfg.beam(theta)
    ledger = receiver_ledger(cfg, theta, beam)
    layout = cfg.layout.build(n_side=n_side)
    pts = _on_plane(_uniform_footprint(layout, rng, count), layout.ue_plane_height)
    p = downlink_power_matrix(layout, beam, pts, UP, ledger.a_eff, ledger.psi_c)
    best = p.max(axis=1)
    rate = data_rate(cfg.ofdm, cfg.receiver.b_l, snr_per_subcarrier(ledger, cfg.ofdm, best))
    return math.fsum(rate), count, math.fsum(rate * rate)


@_timed
def run_avg_rate_vs_array(cfg: ScenarioConfig) -> ResultTable:
    """Single-user system mean rate against array size, with the central-beam bound."""
    table = _table(cfg, "rate_vs_array", [
        "theta_fwhm_deg", "n_side", "n_beam", "mc_rate", "mc_se", "bound_quad",
        "bound_closed"])
    d = cfg.layout.d_cell
    for ti, theta in enumerate(cfg.theta_fwhm_deg):
        cb = central_params(cfg, theta, d)
        bq = analysis.avg_rate_central_quad(cb, cfg.ofdm, cfg.receiver.b_l)
        bc = analysis.avg_rate_central(cb, cfg.ofdm, cfg.receiver.b_l).rate
        for si, n_side in enumerate(cfg.sweep.n_side):
            n_side = int(n_side)
            per_item = max(1, cfg.samples.chunk // (n_side * n_side))
            items = [(cfg, theta, n_side, (_KEY["rate_vs_array"], ti, si, i), n)
                     for i, n in _chunks(cfg.samples.array_mc, per_item)]
            parts = pmap(_array_rate_sum, items, cfg.workers)
            mean = fsum_mean(parts)
            n = sum(p[1] for p in parts)
            var = math.fsum(p[2] for p in parts) / n - mean * mean
            table.add(theta, n_side, n_side * n_side, mean, math.sqrt(max(var, 0.0) / n),
                      bq, bc)
    return table


def multiuser_trials(layout, beam, ledger, ofdm, b_l, n_ue: int, trials: int, rng):
    """Totals of ``trials`` independent drops of ``n_ue`` users.

    Returns per-trial arrays ``(total_no_ici, total_ici, n_active)``.  Users
    on the same beam split its rate equally; with ICI every other occupied
    beam's power at a user counts as Gaussian interference.
    """
    xy = _uniform_footprint(layout, rng, trials * n_ue)
    pts = _on_plane(xy, layout.ue_plane_height)
    p = downlink_power_matrix(layout, beam, pts, UP, ledger.a_eff, ledger.psi_c)
    p = p.reshape(trials, n_ue, layout.n_beam)
    serv = np.argmax(p, axis=2)
    p_sig = np.take_along_axis(p, serv[..., None], axis=2)[..., 0]
    covered = p_sig > 0
    serv = np.where(covered, serv, NO_COVERAGE)
    share = (serv[:, :, None] == serv[:, None, :]).sum(axis=2)
    active = np.zeros((trials, layout.n_beam), dtype=bool)
    t_idx = np.repeat(np.arange(trials), n_ue).reshape(trials, n_ue)
    active[t_idx[covered], serv[covered]] = True
    rate = data_rate(ofdm, b_l, snr_per_subcarrier(ledger, ofdm, p_sig))
    interferers = np.where(active[:, None, :], p, 0.0)
    np.put_along_axis(interferers, np.maximum(serv, 0)[..., None], 0.0, axis=2)
    rate_ici = data_rate(ofdm, b_l, sinr_with_ici(ledger, ofdm, p_sig, interferers))
    share = np.maximum(share, 1)
    no_ici = np.where(covered, rate / share, 0.0).sum(axis=1)
    ici = np.where(covered, rate_ici / share, 0.0).sum(axis=1)
    return no_ici, ici, active.sum(axis=1)


def _multiuser_item(cfg, theta, n_ue, key, trials):
    rng = item_rng(cfg.seed, *key)
    beam = cfg.beam(theta)
    ledger = receiver_ledger(cfg, theta, beam)
    layout = cfg.layout.build()
    a, b, c = multiuser_trials(layout, beam, ledger, cfg.ofdm, cfg.receiver.b_l, n_ue,
                               trials, rng)
    return math.fsum(a), math.fsum(b), math.fsum(c), trials, math.fsum(a * a)


@_timed
def run_multiuser(cfg: ScenarioConfig) -> ResultTable:
    """Total system rate against the number of users, with and without ICI."""
    table = _table(cfg, "multiuser", [
        "theta_fwhm_deg", "n_ue", "total_no_ici", "total_ici", "se_no_ici", "n_active",
        "n_active_theory", "bound_quad", "bound_closed"])
    layout = cfg.layout.build()
    for ti, theta in enumerate(cfg.theta_fwhm_deg):
        cb = central_params(cfg, theta, cfg.layout.d_cell)
        for ui, n_ue in enumerate(cfg.sweep.n_ue):
            n_ue = int(n_ue)
            bq = analysis.multi_user_upper_bound(cb, cfg.ofdm, cfg.receiver.b_l,
                                                 layout.n_beam, n_ue, exact=True)
            bc = analysis.multi_user_upper_bound(cb, cfg.ofdm, cfg.receiver.b_l,
                                                 layout.n_beam, n_ue)
            if n_ue == 0:
                table.add(theta, 0, 0.0, 0.0, 0.0, 0.0, 0.0, bq, bc)
                continue
            per_item = max(1, cfg.samples.chunk // (n_ue * layout.n_beam))
            items = [(cfg, theta, n_ue, (_KEY["multiuser"], ti, ui, i), n)
                     for i, n in _chunks(cfg.samples.trials, per_item)]
            parts = pmap(_multiuser_item, items, cfg.workers)
            n = sum(p[3] for p in parts)
            mean = math.fsum(p[0] for p in parts) / n
            var = math.fsum(p[4] for p in parts) / n - mean * mean
            table.add(theta, n_ue, mean, math.fsum(p[1] for p in parts) / n,
                      math.sqrt(max(var, 0.0) / n), math.fsum(p[2] for p in parts) / n,
                      analysis.avg_active_beams(layout.n_beam, n_ue), bq, bc)
    return table


# --------------------------------------------------------------------------
# mobility
# --------------------------------------------------------------------------

def _user_rates(layout, beam, ledger, ofdm, b_l, pts, p_all, sel, groups, ici: bool):
    """Rate each user gets from its selected beam at its true position.

    ``p_all`` is the ``(K, n_beam)`` power matrix at the true positions
    ``pts``; ``sel`` holds beam indices (``NO_COVERAGE`` allowed) and
    ``groups = (B, n_ue)`` says which users share an access point.
    Out-of-FOV and out-of-footprint users get zero.
    """
    B, n = groups
    k = np.maximum(sel, 0)
    d, phi, _ = angles(layout.p_tx[k], layout.n_tx[k], pts, UP)
    ok = (sel >= 0) & in_footprint(beam, d, phi)
    p_sig = np.where(ok, p_all[np.arange(len(k)), k], 0.0)
    ok &= p_sig > 0
    sel_ok = np.where(ok, sel, NO_COVERAGE)
    gamma = snr_per_subcarrier(ledger, ofdm, p_sig)
    rate = np.where(ok, data_rate(ofdm, b_l, gamma), 0.0)
    if not ici:
        return rate, None, sel_ok
    sel_g = sel_ok.reshape(B, n)
    active = np.zeros((B, layout.n_beam), dtype=bool)
    rows = np.repeat(np.arange(B), n).reshape(B, n)
    active[rows[sel_g >= 0], sel_g[sel_g >= 0]] = True
    interferers = np.where(np.repeat(active, n, axis=0), p_all, 0.0)
    interferers[np.arange(len(k)), k] = 0.0
    gamma_i = sinr_with_ici(ledger, ofdm, p_sig, interferers)
    return rate, np.where(ok, data_rate(ofdm, b_l, gamma_i), 0.0), sel_ok


def _share(sel, groups):
    """Equal-share divisor: number of users of the same AP on the same beam."""
    B, n = groups
    s = sel.reshape(B, n)
    cnt = (s[:, :, None] == s[:, None, :]).sum(axis=2)
    return np.where(s >= 0, cnt, 1).ravel()


def _mobility_item(cfg, speed, key, n_rep):
    """One batch of independent mobility replicates at one speed.

    Returns per-scheme ``[sum_thr, sum_thr_ici, n_outage, n_outage_ici,
    count]`` plus per-replicate mean system throughput (no ICI).
    """
    mob_cfg = cfg.mobility
    theta = mob_cfg.theta_fwhm_deg
    beam = cfg.beam(theta)
    ledger = receiver_ledger(cfg, theta, beam)
    layout = cfg.layout.build()
    ofdm, b_l = cfg.ofdm, cfg.receiver.b_l
    mobility = MobilityParams(speed=speed, bounds=layout.footprint,
                              pause_time=mob_cfg.pause_time)
    schemes = [s.scheme() for s in mob_cfg.schemes]
    lags = [0 if s.kind == "ccr" else int(round(s.delay / mob_cfg.dt)) for s in schemes]
    n_hist = max(lags) + 1
    init_rng, walk_rng, err_rng = item_rng(cfg.seed, *key).spawn(3)
    groups = (n_rep, mob_cfg.n_ue)
    want_ici = cfg.ici in ("on", "both")

    xy, wp, pause = stationary_waypoint_batch(mobility, n_rep * mob_cfg.n_ue, init_rng)
    ring = [None] * n_hist  # past positions; step s lives in slot s % n_hist
    ring[0] = xy
    for step in range(1, n_hist):
        xy, wp, pause = random_waypoint_advance(xy, wp, pause, mobility, mob_cfg.dt, walk_rng)
        ring[step % n_hist] = xy
    acc = [[0.0, 0.0, 0, 0, 0] for _ in schemes]
    per_rep = [np.zeros(n_rep) for _ in schemes]
    for w in range(mob_cfg.window_steps):
        step = n_hist - 1 + w
        if w:
            xy, wp, pause = random_waypoint_advance(xy, wp, pause, mobility, mob_cfg.dt,
                                                    walk_rng)
            ring[step % n_hist] = xy
        pts = _on_plane(xy, layout.ue_plane_height)
        p_true = downlink_power_matrix(layout, beam, pts, UP, ledger.a_eff, ledger.psi_c)
        for j, (scheme, lag) in enumerate(zip(schemes, lags)):
            if scheme.kind == "ccr":
                sel = select_beams(p_true)
            else:
                seen = scheme_positions(scheme, ring[(step - lag) % n_hist], err_rng)
                sel = serving_beams(layout, beam, ledger, seen)
            rate, rate_i, sel_ok = _user_rates(layout, beam, ledger, ofdm, b_l, pts, p_true,
                                               sel, groups, want_ici)
            share = _share(sel_ok, groups)
            if scheme.kind == "ccr":
                rate = effective_rate(cfg.timing, rate)
            thr = rate / share
            acc[j][0] += math.fsum(thr)
            acc[j][2] += int(np.sum(thr < cfg.r_threshold))
            acc[j][4] += len(thr)
            per_rep[j] += thr.reshape(groups).sum(axis=1)
            if want_ici:
                if scheme.kind == "ccr":
                    rate_i = effective_rate(cfg.timing, rate_i)
                thr_i = rate_i / share
                acc[j][1] += math.fsum(thr_i)
                acc[j][3] += int(np.sum(thr_i < cfg.r_threshold))
    return acc, [r / mob_cfg.window_steps for r in per_rep]


@_timed
def run_mobility_throughput(cfg: ScenarioConfig, batch: int = 250) -> ResultTable:
    """System throughput and user outage against speed for each selection scheme.

    Every replicate starts from the stationary random-waypoint state, walks
    through the largest scheme delay, then is scored over
    ``mobility.window_steps`` steps.  Replicate ``i`` uses the same random
    numbers at every speed, which keeps speed-to-speed differences sharp.
    """
    table = _table(cfg, "mobility", [
        "speed", "scheme", "throughput", "throughput_se", "outage", "throughput_ici",
        "outage_ici", "n_samples"])
    mob_cfg = cfg.mobility
    labels = [s.scheme().label for s in mob_cfg.schemes]
    table.metadata["r_threshold"] = cfg.r_threshold
    table.metadata["theta_fwhm_deg"] = mob_cfg.theta_fwhm_deg
    for speed in cfg.sweep.speeds:
        items = [(cfg, speed, (_KEY["mobility"], i), n)
                 for i, n in _chunks(mob_cfg.replicates, batch)]
        parts = pmap(_mobility_item, items, cfg.workers)
        for j, label in enumerate(labels):
            reps = np.concatenate([p[1][j] for p in parts])
            count = sum(p[0][j][4] for p in parts)
            steps = count / mob_cfg.n_ue
            sys_thr = math.fsum(p[0][j][0] for p in parts) / steps
            sys_ici = math.fsum(p[0][j][1] for p in parts) / steps
            se = float(np.std(reps, ddof=1) / math.sqrt(len(reps))) if len(reps) > 1 else 0.0
            out = sum(p[0][j][2] for p in parts) / count
            out_i = sum(p[0][j][3] for p in parts) / count
            if cfg.ici == "off":
                sys_ici, out_i = float("nan"), float("nan")
            table.add(float(speed), label, sys_thr, se, out, sys_ici, out_i, int(count))
    return table


# --------------------------------------------------------------------------
# eye safety
# --------------------------------------------------------------------------

@_timed
def run_eyesafety(cfg: ScenarioConfig) -> ResultTable:
    table = _table(cfg, "eyesafety", ["lambda_nm", "theta_fwhm_deg", "t_exp", "e_mpe",
                                      "d_a", "p_max_mw", "p_config_mw", "config_is_safe"])
    for theta in cfg.theta_fwhm_deg:
        for t in cfg.sweep.t_exp:
            mpe = eyesafety.mpe_lookup(cfg.wavelength, t)
            pmax = eyesafety.max_transmit_power(cfg.wavelength, theta, t)
            p_cfg = cfg.tx_power(theta)
            table.add(cfg.lambda_nm, theta, float(t), mpe.e_mpe, mpe.d_a, pmax * 1e3,
                      p_cfg * 1e3, bool(p_cfg <= pmax * (1 + 1e-12)))
    return table


# --------------------------------------------------------------------------
# beam-activation classifier
# --------------------------------------------------------------------------

def _ann_setup(cfg):
    ann = cfg.ann
    layout = build_grid_array(ann.n_side, cfg.layout.d_cell, cfg.layout.ap_height,
                              cfg.layout.ue_height, cfg.layout.d_beam)
    beam = cfg.beam(ann.theta_fwhm_deg)
    ledger = cfg.receiver.ledger()  # labels are an argmax of powers; noise does not matter
    pds = ceiling_pd_constellation((0.0, 0.0, cfg.layout.ap_height), cfg.odtx.pd_tilt_deg,
                                   cfg.odtx.pd_spacing)
    return layout, beam, ledger, pds


def _ann_dataset(cfg, oi, orientation_kind, uplink):
    layout, beam, ledger, pds = _ann_setup(cfg)
    o = cfg.orientation
    model = OrientationModel(orientation_kind, o.mean_elev, o.std_elev, o.max_elev)
    # same key for both uplinks: identical positions and orientations
    rng = item_rng(cfg.seed, _KEY["ann"], 0, oi)
    return generate_training_set(layout, beam, ledger, cfg.odtx.params(), pds, model,
                                 cfg.ann.n_samples, rng, uplink=uplink)


def _ann_item(cfg, oi, orientation_kind, ui, uplink, hi, n_hidden, output, model_dir):
    layout, beam, ledger, _ = _ann_setup(cfg)
    ds = _ann_dataset(cfg, oi, orientation_kind, uplink)
    rng = item_rng(cfg.seed, _KEY["ann"], 1, oi, ui, hi, 0 if output == "softmax" else 1)
    kw = dict(n_out=layout.n_beam) if output == "softmax" else dict(position_bounds=layout.footprint)
    model = train_mlp(ds, n_hidden, cfg.ann.epochs, cfg.ann.learning_rate, rng,
                      output=output, batch_size=cfg.ann.batch_size, **kw)
    acc = activation_accuracy(model, ds.subset(ds.test), layout, beam, ledger,
                              layout.footprint)
    if model_dir is not None:
        head = "beam" if output == "softmax" else "position"
        model.save(f"{model_dir}/ann_{orientation_kind}_{uplink}_{head}_h{n_hidden}.json")
    return acc


@_timed
def run_ann_accuracy(cfg: ScenarioConfig, model_dir=None) -> ResultTable:
    """Beam-activation accuracy of the classifier (and of the baselines) on held-out rows."""
    table = _table(cfg, "ann_accuracy", ["orientation", "method", "n_hidden", "accuracy"])
    ann = cfg.ann
    items, labels = [], []
    for oi, kind in enumerate(ann.orientations):
        for ui, uplink in enumerate(ann.uplinks):
            for hi, h in enumerate(ann.n_hidden):
                items.append((cfg, oi, kind, ui, uplink, hi, int(h), "softmax", model_dir))
                labels.append((kind, f"ann_{uplink}", int(h)))
        if ann.positioning_head and "odtx" in ann.uplinks:
            for hi, h in enumerate(ann.n_hidden):
                ui = ann.uplinks.index("odtx")
                items.append((cfg, oi, kind, ui, "odtx", hi, int(h), "sigmoid", model_dir))
                labels.append((kind, "ann_positioning_odtx", int(h)))
    accs = pmap(_ann_item, items, cfg.workers)
    for (kind, method, h), acc in zip(labels, accs):
        table.add(kind, method, h, acc)
    # image-sensor positioning baseline: SSS on noisy true positions
    layout, beam, ledger, _ = _ann_setup(cfg)
    ds = _ann_dataset(cfg, 0, ann.orientations[0], "odtx") if ann.orientations else None
    if ds is not None:
        test = ds.subset(ds.test)
        for ei, err in enumerate(ann.isvlp_errors):
            rng = item_rng(cfg.seed, _KEY["ann"], 2, ei)
            seen = scheme_positions(BenchmarkScheme("isvlp", 0.0, err), test.positions, rng)
            pred = serving_beams(layout, beam, ledger, seen)
            table.add("any", f"isvlp_{err * 1e3:g}mm", 0, float(np.mean(pred == test.labels)))
    return table


EXPERIMENTS = {
    "snr-map": run_snr_map,
    "pdf": run_pdf_experiment,
    "rate-vs-cell": run_avg_rate_vs_cell_size,
    "rate-vs-array": run_avg_rate_vs_array,
    "multiuser": run_multiuser,
    "mobility": run_mobility_throughput,
    "eyesafety": run_eyesafety,
    "train-ann": run_ann_accuracy,
}
