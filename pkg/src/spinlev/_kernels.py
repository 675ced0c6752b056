"""Numba kernels for the fixed-step stochastic integrators.

All kernels use the same scheme: Heun (RK2) for the deterministic drift,
one additive Gaussian velocity kick per step drawn from a precomputed noise
array, population clamp + renormalization after every step.  Status codes:
0 = ok, 1 = non-finite state, 2 = |phi| left the small-angle validity range.
"""

import math

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_PHI_RANGE = 2

PHI_LIMIT = math.pi / 2.0

LORENTZIAN = 0
GAUSSIAN = 1


@njit(cache=True, inline="always")
def _pump_profile(delta, sigma, lineshape, gb, phi0g, phi):
    """P(Delta, phi): pumping lineshape, peak 1/(2*sigma) for both shapes."""
    if lineshape == LORENTZIAN:
        x = delta / sigma
        return 0.5 / sigma / (1.0 + x * x)
    # Gaussian profile carries the static offset phi0g explicitly
    d = delta + gb * phi0g
    return 0.5 / sigma * math.exp(-(d * d) / (sigma * sigma))


@njit(cache=True, inline="always")
def _rate_spin_derivs(p0, pm, pp, phi, sigma, inv_t1, gamma_las, rabi, det,
                      gb, lineshape, phi0g):
    delta = det + gb * phi
    w = rabi * rabi * _pump_profile(delta, sigma, lineshape, gb, phi0g, phi)
    dpp = -inv_t1 * (pp - p0) - gamma_las * pp
    dpm = -inv_t1 * (pm - p0) - gamma_las * pm + w * (p0 - pm)
    dp0 = -(dpm + dpp)
    return dp0, dpm, dpp


@njit(cache=True, inline="always")
def _bloch_spin_derivs(p0, pm, pp, re_s, im_s, phi, sigma, inv_t1, gamma_las,
                       rabi, det, gb):
    delta = det + gb * phi
    # dS/dt = [-sigma + i*delta] S + i (rabi/2) (pm - p0)
    dre = -sigma * re_s - delta * im_s
    dim = -sigma * im_s + delta * re_s + 0.5 * rabi * (pm - p0)
    # i (rabi/2)(S - S*) = -rabi * Im S
    pump = -rabi * im_s
    dpp = -inv_t1 * (pp - p0) - gamma_las * pp
    dpm = -inv_t1 * (pm - p0) - gamma_las * pm + pump
    dp0 = -(dpm + dpp)
    return dp0, dpm, dpp, dre, dim


@njit(cache=True, inline="always")
def _clamp_populations(p0, pm, pp):
    if p0 < 0.0:
        p0 = 0.0
    elif p0 > 1.0:
        p0 = 1.0
    if pm < 0.0:
        pm = 0.0
    elif pm > 1.0:
        pm = 1.0
    if pp < 0.0:
        pp = 0.0
    elif pp > 1.0:
        pp = 1.0
    total = p0 + pm + pp
    return p0 / total, pm / total, pp / total


@njit(cache=True, nogil=True)
def mech_kernel(phi, phi_dot, torque, dt, n_steps, stride, omega2, gamma,
                noise, rec):
    """Damped oscillator with a constant extra torque-per-inertia term."""
    i_rec = 0
    rec[i_rec, 0] = phi
    rec[i_rec, 1] = phi_dot
    i_rec += 1
    for step in range(n_steps):
        a1 = -omega2 * phi - gamma * phi_dot + torque
        phi_p = phi + dt * phi_dot
        v_p = phi_dot + dt * a1
        a2 = -omega2 * phi_p - gamma * v_p + torque
        phi = phi + 0.5 * dt * (phi_dot + v_p)
        phi_dot = phi_dot + 0.5 * dt * (a1 + a2) + noise[step]
        if (step + 1) % stride == 0:
            if not (math.isfinite(phi) and math.isfinite(phi_dot)):
                return STATUS_NONFINITE, step
            if abs(phi) >= PHI_LIMIT:
                return STATUS_PHI_RANGE, step
            rec[i_rec, 0] = phi
            rec[i_rec, 1] = phi_dot
            i_rec += 1
    return STATUS_OK, n_steps


@njit(cache=True, nogil=True)
def rate_kernel(phi, phi_dot, p0, pm, pp, dt, n_steps, stride,
                omega2, gamma, torque_coeff, gb, sigma, inv_t1, gamma_las,
                lineshape, phi0g, seg_t1, seg_rabi, seg_det, noise, rec):
    """Coupled libration + population rate equations.

    seg_t1/seg_rabi/seg_det describe a gap-free drive timeline: segment i is
    active while t < seg_t1[i].
    """
    i_rec = 0
    rec[i_rec, 0] = phi
    rec[i_rec, 1] = phi_dot
    rec[i_rec, 2] = p0
    rec[i_rec, 3] = pm
    rec[i_rec, 4] = pp
    i_rec += 1
    i_seg = 0
    n_seg = seg_t1.shape[0]
    for step in range(n_steps):
        t = step * dt
        while i_seg < n_seg - 1 and t >= seg_t1[i_seg]:
            i_seg += 1
        rabi = seg_rabi[i_seg]
        det = seg_det[i_seg]

        dp0a, dpma, dppa = _rate_spin_derivs(
            p0, pm, pp, phi, sigma, inv_t1, gamma_las, rabi, det,
            gb, lineshape, phi0g)
        acc1 = -omega2 * phi - gamma * phi_dot + torque_coeff * (pm - pp)

        phi_p = phi + dt * phi_dot
        v_p = phi_dot + dt * acc1
        p0_p = p0 + dt * dp0a
        pm_p = pm + dt * dpma
        pp_p = pp + dt * dppa

        dp0b, dpmb, dppb = _rate_spin_derivs(
            p0_p, pm_p, pp_p, phi_p, sigma, inv_t1, gamma_las, rabi, det,
            gb, lineshape, phi0g)
        acc2 = -omega2 * phi_p - gamma * v_p + torque_coeff * (pm_p - pp_p)

        phi = phi + 0.5 * dt * (phi_dot + v_p)
        phi_dot = phi_dot + 0.5 * dt * (acc1 + acc2) + noise[step]
        p0 = p0 + 0.5 * dt * (dp0a + dp0b)
        pm = pm + 0.5 * dt * (dpma + dpmb)
        pp = pp + 0.5 * dt * (dppa + dppb)
        p0, pm, pp = _clamp_populations(p0, pm, pp)

        if (step + 1) % stride == 0:
            if not (math.isfinite(phi) and math.isfinite(phi_dot)
                    and math.isfinite(p0)):
                return STATUS_NONFINITE, step
            if abs(phi) >= PHI_LIMIT:
                return STATUS_PHI_RANGE, step
            rec[i_rec, 0] = phi
            rec[i_rec, 1] = phi_dot
            rec[i_rec, 2] = p0
            rec[i_rec, 3] = pm
            rec[i_rec, 4] = pp
            i_rec += 1
    return STATUS_OK, n_steps


@njit(cache=True, nogil=True)
def bloch_kernel(phi, phi_dot, p0, pm, pp, re_s, im_s, dt, n_steps, stride,
                 omega2, gamma, torque_coeff, gb, sigma, inv_t1, gamma_las,
                 seg_t1, seg_rabi, seg_det, noise, rec):
    """Coupled libration + full Bloch equations (coherence retained)."""
    i_rec = 0
    rec[i_rec, 0] = phi
    rec[i_rec, 1] = phi_dot
    rec[i_rec, 2] = p0
    rec[i_rec, 3] = pm
    rec[i_rec, 4] = pp
    rec[i_rec, 5] = re_s
    rec[i_rec, 6] = im_s
    i_rec += 1
    i_seg = 0
    n_seg = seg_t1.shape[0]
    for step in range(n_steps):
        t = step * dt
        while i_seg < n_seg - 1 and t >= seg_t1[i_seg]:
            i_seg += 1
        rabi = seg_rabi[i_seg]
        det = seg_det[i_seg]

        d1 = _bloch_spin_derivs(p0, pm, pp, re_s, im_s, phi, sigma, inv_t1,
                                gamma_las, rabi, det, gb)
        acc1 = -omega2 * phi - gamma * phi_dot + torque_coeff * (pm - pp)

        phi_p = phi + dt * phi_dot
        v_p = phi_dot + dt * acc1
        p0_p = p0 + dt * d1[0]
        pm_p = pm + dt * d1[1]
        pp_p = pp + dt * d1[2]
        re_p = re_s + dt * d1[3]
        im_p = im_s + dt * d1[4]

        d2 = _bloch_spin_derivs(p0_p, pm_p, pp_p, re_p, im_p, phi_p, sigma,
                                inv_t1, gamma_las, rabi, det, gb)
        acc2 = -omega2 * phi_p - gamma * v_p + torque_coeff * (pm_p - pp_p)

        phi = phi + 0.5 * dt * (phi_dot + v_p)
        phi_dot = phi_dot + 0.5 * dt * (acc1 + acc2) + noise[step]
        p0 = p0 + 0.5 * dt * (d1[0] + d2[0])
        pm = pm + 0.5 * dt * (d1[1] + d2[1])
        pp = pp + 0.5 * dt * (d1[2] + d2[2])
        re_s = re_s + 0.5 * dt * (d1[3] + d2[3])
        im_s = im_s + 0.5 * dt * (d1[4] + d2[4])
        p0, pm, pp = _clamp_populations(p0, pm, pp)

        if (step + 1) % stride == 0:
            if not (math.isfinite(phi) and math.isfinite(phi_dot)
                    and math.isfinite(p0) and math.isfinite(re_s)):
                return STATUS_NONFINITE, step
            if abs(phi) >= PHI_LIMIT:
                return STATUS_PHI_RANGE, step
            rec[i_rec, 0] = phi
            rec[i_rec, 1] = phi_dot
            rec[i_rec, 2] = p0
            rec[i_rec, 3] = pm
            rec[i_rec, 4] = pp
            rec[i_rec, 5] = re_s
            rec[i_rec, 6] = im_s
            i_rec += 1
    return STATUS_OK, n_steps


@njit(cache=True, nogil=True)
def spin_probe_kernel(use_bloch, amp, omega_probe, dt, n_transient, n_meas,
                      sigma, inv_t1, gamma_las, rabi, det, gb, lineshape,
                      phi0g, proj_out):
    """Spin block driven by a clamped angle phi(t) = amp*cos(omega_probe*t).

    Integrates n_transient + n_meas probe periods; for each measurement
    period accumulates the cosine/sine quadratures and the mean of the
    population difference (pm - pp) into proj_out[(k, 0..2)].
    Returns the final (p0, pm, pp, re_s, im_s).
    """
    p0 = 1.0
    pm = 0.0
    pp = 0.0
    re_s = 0.0
    im_s = 0.0
    period = 2.0 * math.pi / omega_probe
    steps_per_period = int(round(period / dt))
    dt_eff = period / steps_per_period
    total = (n_transient + n_meas) * steps_per_period
    t = 0.0
    for step in range(total):
        phi_a = amp * math.cos(omega_probe * t)
        t_b = t + dt_eff
        phi_b = amp * math.cos(omega_probe * t_b)

        if use_bloch:
            d1 = _bloch_spin_derivs(p0, pm, pp, re_s, im_s, phi_a, sigma,
                                    inv_t1, gamma_las, rabi, det, gb)
            p0_p = p0 + dt_eff * d1[0]
            pm_p = pm + dt_eff * d1[1]
            pp_p = pp + dt_eff * d1[2]
            re_p = re_s + dt_eff * d1[3]
            im_p = im_s + dt_eff * d1[4]
            d2 = _bloch_spin_derivs(p0_p, pm_p, pp_p, re_p, im_p, phi_b,
                                    sigma, inv_t1, gamma_las, rabi, det, gb)
            p0 += 0.5 * dt_eff * (d1[0] + d2[0])
            pm += 0.5 * dt_eff * (d1[1] + d2[1])
            pp += 0.5 * dt_eff * (d1[2] + d2[2])
            re_s += 0.5 * dt_eff * (d1[3] + d2[3])
            im_s += 0.5 * dt_eff * (d1[4] + d2[4])
        else:
            a0, am, ap = _rate_spin_derivs(p0, pm, pp, phi_a, sigma, inv_t1,
                                           gamma_las, rabi, det, gb,
                                           lineshape, phi0g)
            p0_p = p0 + dt_eff * a0
            pm_p = pm + dt_eff * am
            pp_p = pp + dt_eff * ap
            b0, bm, bp = _rate_spin_derivs(p0_p, pm_p, pp_p, phi_b, sigma,
                                           inv_t1, gamma_las, rabi, det, gb,
                                           lineshape, phi0g)
            p0 += 0.5 * dt_eff * (a0 + b0)
            pm += 0.5 * dt_eff * (am + bm)
            pp += 0.5 * dt_eff * (ap + bp)
        p0, pm, pp = _clamp_populations(p0, pm, pp)
        t = t_b

        k = step // steps_per_period - n_transient
        if k >= 0:
            dsz = pm - pp
            proj_out[k, 0] += dsz * math.cos(omega_probe * t) * dt_eff
            proj_out[k, 1] += dsz * math.sin(omega_probe * t) * dt_eff
            proj_out[k, 2] += dsz * dt_eff
    return p0, pm, pp, re_s, im_s
