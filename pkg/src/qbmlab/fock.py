"""Brute-force Fock-space propagation of the same master equations.

This module exists to cross-check the Gaussian moment maps in
:mod:`qbmlab.dynamics` against direct density-matrix integration in a
truncated number basis.  It is deliberately simple: dense matrices,
fixed-step RK4, explicit monitors for trace drift and truncation
leakage.  Matrix elements use the oscillator length of the system
frequency as the basis scale.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .bath import PhysicalConstants
from .dynamics import GaussianMomentState, Variant

_LEAK_THRESHOLD = 1e-6  # combined population of the top two levels
_TRACE_RATE = 1e-8  # allowed trace drift per unit time


class TruncationWarning(UserWarning):
    """State weight reached the top of the truncated basis."""


class TraceDriftWarning(UserWarning):
    """Propagation lost more trace than the per-unit-time budget."""


def ladder(dim):
    """Lowering operator a."""
    a = np.zeros((dim, dim), dtype=complex)
    n = np.arange(1, dim)
    a[n - 1, n] = np.sqrt(n)
    return a


def position_momentum(dim, system, constants=PhysicalConstants()):
    """q and p matrices in the number basis of omega_S."""
    if system.omega_S <= 0.0:
        raise ValueError("number basis needs omega_S > 0")
    a = ladder(dim)
    ad = a.conj().T
    ell = np.sqrt(constants.hbar / (system.m * system.omega_S))
    q = ell / np.sqrt(2.0) * (a + ad)
    p = 1j * np.sqrt(constants.hbar * system.m * system.omega_S / 2.0) \
        * (ad - a)
    return q, p


def vacuum_state(dim):
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    return psi


def coherent_state(dim, alpha):
    """|alpha> via the displacement operator (exact within truncation)."""
    a = ladder(dim)
    d_op = expm(alpha * a.conj().T - np.conj(alpha) * a)
    return d_op @ vacuum_state(dim)


def squeezed_state(dim, r, alpha=0.0):
    """Displaced position-squeezed vacuum, D(alpha) S(r) |0>."""
    a = ladder(dim)
    s_op = expm(0.5 * r * (a @ a - a.conj().T @ a.conj().T))
    psi = s_op @ vacuum_state(dim)
    if alpha != 0.0:
        psi = expm(alpha * a.conj().T - np.conj(alpha) * a) @ psi
    return psi


def thermal_density(dim, nbar):
    """Thermal density matrix with mean occupation nbar."""
    if nbar < 0.0:
        raise ValueError("nbar must be non-negative")
    if nbar == 0.0:
        w = np.zeros(dim)
        w[0] = 1.0
    else:
        n = np.arange(dim)
        w = np.exp(n * np.log(nbar / (1.0 + nbar))) / (1.0 + nbar)
        w /= w.sum()  # renormalize the truncated tail
    return np.diag(w).astype(complex)


def alpha_from_moments(system, mean_q, mean_p, constants=PhysicalConstants()):
    """Coherent amplitude with the given expectation values."""
    ell = np.sqrt(constants.hbar / (system.m * system.omega_S))
    return (mean_q / ell + 1j * mean_p * ell / constants.hbar) / np.sqrt(2.0)


def moments_from_density(rho, q, p):
    """First and symmetrized second central moments of rho."""
    def ev(op):
        return float(np.einsum('ij,ji->', op, rho).real)

    mq = ev(q)
    mp = ev(p)
    qp_sym = 0.5 * (q @ p + p @ q)
    return GaussianMomentState(
        mean_q=mq, mean_p=mp,
        sigma_qq=ev(q @ q) - mq * mq,
        sigma_pp=ev(p @ p) - mp * mp,
        sigma_qp=ev(qp_sym) - mq * mp)


def make_generator(spec, dim):
    """Right-hand side rho -> drho/dt for the chosen variant.

    The returned closure captures all operator products; only the HPZ
    variant re-reads its coefficient table at each call.
    """
    sys_ = spec.system
    c = spec.constants
    hbar = c.hbar
    m = sys_.m
    q, p = position_momentum(dim, sys_, c)
    h_sys = p @ p / (2.0 * m) + 0.5 * m * sys_.omega_S ** 2 * (q @ q)
    q2 = q @ q

    def commutator(a, b):
        return a @ b - b @ a

    def double_q(rho):  # [q, [q, rho]]
        return q2 @ rho - 2.0 * (q @ rho @ q) + rho @ q2

    def friction(rho):  # [q, {p, rho}]
        anti = p @ rho + rho @ p
        return q @ anti - anti @ q

    def cross(rho):  # [q, [p, rho]]
        inner = p @ rho - rho @ p
        return q @ inner - inner @ q

    v = spec.variant
    if v is Variant.HPZ:
        coeffs = spec.coefficients

        def rhs(rho, t):
            gamma_t, theta_t, xi_t, upsilon_t = coeffs.at(t)
            out = (-1j / hbar) * commutator(h_sys, rho)
            out += (1j * xi_t / hbar ** 2) * commutator(q2, rho)
            out += (gamma_t / hbar ** 2) * double_q(rho)
            out += (theta_t / (m * hbar ** 2)) * cross(rho)
            out += (1j * upsilon_t / (m * hbar ** 2)) * friction(rho)
            return out

        return rhs

    diff = spec.diffusion_strength
    dq_coef = -diff / (2.0 * hbar ** 2)  # times [q,[q,rho]]
    if v is Variant.QP_COUPLED:
        a_op = q - spec.mu * p
        a2 = a_op @ a_op

        def rhs(rho, t):
            out = (-1j / hbar) * commutator(h_sys, rho)
            out += dq_coef * (a2 @ rho - 2.0 * (a_op @ rho @ a_op) + rho @ a2)
            return out

        return rhs

    fr_coef = -1j * spec.gamma / hbar if v in (Variant.CL, Variant.CCL) \
        else 0.0
    pp_coef = 0.0
    if v is Variant.CCL:
        pp_coef = -spec.gamma / (8.0 * m * c.k_B * spec.T)
    p2 = p @ p

    def rhs(rho, t):
        out = (-1j / hbar) * commutator(h_sys, rho)
        out += dq_coef * double_q(rho)
        if fr_coef != 0.0:
            out += fr_coef * friction(rho)
        if pp_coef != 0.0:
            out += pp_coef * (p2 @ rho - 2.0 * (p @ rho @ p) + rho @ p2)
        return out

    return rhs


@dataclass
class FockTrajectory:
    times: np.ndarray
    data: np.ndarray  # (n, 5) moment history, same layout as MomentTrajectory
    trace: np.ndarray
    top_population: np.ndarray
    rho_final: np.ndarray
    first_leak_time: float | None


def fock_propagate(spec, rho0, t_span, dt, store_every=1):
    """RK4 integration of the density matrix; monitors trace and leakage."""
    rho = np.array(rho0, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("rho0 must be a square matrix")
    dim = rho.shape[0]
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must satisfy t1 > t0")
    span = t1 - t0
    n_steps = max(1, int(round(span / dt)))
    h = span / n_steps

    rhs = make_generator(spec, dim)
    q, p = position_momentum(dim, spec.system, spec.constants)

    def observe(rho_now, t_now, first_leak):
        st = moments_from_density(rho_now, q, p)
        tr = float(np.trace(rho_now).real)
        top = float(rho_now[-1, -1].real + rho_now[-2, -2].real)
        if top > _LEAK_THRESHOLD and first_leak is None:
            warnings.warn(
                f"truncation leakage {top:.3e} at t = {t_now:.6g} "
                f"(dim = {dim})", TruncationWarning, stacklevel=3)
            first_leak = t_now
        return st.as_array(), tr, top, first_leak

    first_leak = None
    row, tr, top, first_leak = observe(rho, t0, first_leak)
    times, rows, traces, tops = [t0], [row], [tr], [top]
    for i in range(n_steps):
        t = t0 + i * h
        k1 = rhs(rho, t)
        k2 = rhs(rho + 0.5 * h * k1, t + 0.5 * h)
        k3 = rhs(rho + 0.5 * h * k2, t + 0.5 * h)
        k4 = rhs(rho + h * k3, t + h)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (i + 1) % store_every == 0 or i == n_steps - 1:
            row, tr, top, first_leak = observe(rho, t0 + (i + 1) * h,
                                               first_leak)
            times.append(t0 + (i + 1) * h)
            rows.append(row)
            traces.append(tr)
            tops.append(top)

    traces = np.array(traces)
    drift = np.max(np.abs(traces - traces[0]))
    if drift > _TRACE_RATE * max(1.0, span):
        warnings.warn(
            f"trace drifted by {drift:.3e} over span {span:g}",
            TraceDriftWarning, stacklevel=2)

    return FockTrajectory(times=np.array(times), data=np.array(rows),
                          trace=traces, top_population=np.array(tops),
                          rho_final=rho, first_leak_time=first_leak)
