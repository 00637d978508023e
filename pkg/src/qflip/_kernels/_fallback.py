"""Pure-numpy propagation kernels.

Reference implementation of the kernel interface re-exported by
``qflip._kernels``.  The compiled backend (``_core``) mirrors these
semantics; the parity tests run every backend against this module.

Conventions: basis ordering (|0>, |1>) with sigma_z |1> = +|1>, so
sigma_z = diag(-1, +1).  The step Hamiltonian is
H/hbar = (omega/2) sigma_x + (delta/2) sigma_z.
"""

import numpy as np

BACKEND_NAME = "fallback"


def step_unitary(omega, delta, dt):
    """Exact propagator exp(-i H dt / hbar) for one constant step.

    Closed form: U = cos(phi) I - i sin(phi) (nx sigma_x + nz sigma_z)
    with phi = dt/2 * sqrt(omega^2 + delta^2) and (nx, nz) the unit
    rotation axis.  Returns a (2, 2) complex ndarray.
    """
    w = np.hypot(omega, delta)
    phi = 0.5 * w * dt
    c = np.cos(phi)
    s = np.sin(phi)
    if w == 0.0:
        nx = 0.0
        nz = 0.0
    else:
        nx = omega / w
        nz = delta / w
    return np.array(
        [
            [c + 1j * s * nz, -1j * s * nx],
            [-1j * s * nx, c - 1j * s * nz],
        ],
        dtype=np.complex128,
    )


def propagate_unitary(rho, omega, deltas, durations):
    """Propagate a 2x2 density matrix through a piecewise-constant sequence.

    Each step applies the exact propagator, rho -> U rho U+.  Closed
    (trace-preserving, coherent) evolution only; for dephasing use
    ``propagate_lindblad``.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    durations = np.asarray(durations, dtype=np.float64)
    if deltas.shape != durations.shape:
        raise ValueError("deltas and durations must have equal length")
    out = np.array(rho, dtype=np.complex128, copy=True)
    for delta, dt in zip(deltas, durations):
        u = step_unitary(omega, delta, dt)
        out = u @ out @ u.conj().T
    return out


def _lindblad_rhs(rho, omega, delta, gamma):
    # d(rho)/dt = -i [H, rho]/hbar + gamma (sigma_z rho sigma_z - rho)
    r00 = rho[0, 0]
    r01 = rho[0, 1]
    r10 = rho[1, 0]
    r11 = rho[1, 1]
    hx = 0.5 * omega
    d00 = -1j * hx * (r10 - r01)
    d01 = -1j * (-delta * r01 + hx * (r11 - r00)) - 2.0 * gamma * r01
    d10 = -1j * (delta * r10 + hx * (r00 - r11)) - 2.0 * gamma * r10
    d11 = -1j * hx * (r01 - r10)
    return np.array([[d00, d01], [d10, d11]], dtype=np.complex128)


def propagate_lindblad(rho, omega, deltas, durations, gamma_phi, substeps):
    """Propagate through a sequence under pure dephasing at rate gamma_phi.

    Integrates the master equation with classical RK4 at a fixed number
    of substeps per sequence step.  gamma_phi = 1/(2 T2) gives coherence
    decay exp(-t/T2) on the off-diagonal elements.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    durations = np.asarray(durations, dtype=np.float64)
    if deltas.shape != durations.shape:
        raise ValueError("deltas and durations must have equal length")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    out = np.array(rho, dtype=np.complex128, copy=True)
    for delta, dt_step in zip(deltas, durations):
        h = dt_step / substeps
        for _ in range(substeps):
            k1 = _lindblad_rhs(out, omega, delta, gamma_phi)
            k2 = _lindblad_rhs(out + 0.5 * h * k1, omega, delta, gamma_phi)
            k3 = _lindblad_rhs(out + 0.5 * h * k2, omega, delta, gamma_phi)
            k4 = _lindblad_rhs(out + h * k3, omega, delta, gamma_phi)
            out = out + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return out
