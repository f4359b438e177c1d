"""Pure-numpy versions of the hot loops.

Same signatures and arithmetic as the compiled ``_ckernels`` module; used when
the extension is not built or ``SPINCOMB_PURE_PYTHON`` is set.
"""

import numpy as np

# 4th-order Gregory end corrections (trapezoid weights elsewhere)
GREGORY = (3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0)
# closed Newton-Cotes rules for the first steps
NEWTON_COTES = {
    1: (0.5, 0.5),
    2: (1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0),
    3: (3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0),
    4: (14.0 / 45.0, 64.0 / 45.0, 24.0 / 45.0, 64.0 / 45.0, 14.0 / 45.0),
}


def rk4_arrowhead(A, B, g, d, kc, h, drive, A_out, pop_out):
    """Advance the cavity/spin system by ``len(drive) * substeps`` RK4 steps.

    dA/dt = -kc A + sum(g B) - eta,   dB/dt = -d B - g A

    ``drive[n, s]`` holds the drive value for substep ``s`` of output step
    ``n``.  ``B`` is updated in place; ``A_out[n]`` and ``pop_out[n]``
    (sum |B|**2) receive the state after output step ``n``.  Returns the final A.
    """
    nsteps, substeps = drive.shape
    half = 0.5 * h
    sixth = h / 6.0
    for n in range(nsteps):
        for s in range(substeps):
            eta = drive[n, s]
            a1 = -kc * A + g @ B - eta
            b1 = -d * B - g * A
            A2 = A + half * a1
            B2 = B + half * b1
            a2 = -kc * A2 + g @ B2 - eta
            b2 = -d * B2 - g * A2
            A3 = A + half * a2
            B3 = B + half * b2
            a3 = -kc * A3 + g @ B3 - eta
            b3 = -d * B3 - g * A3
            A4 = A + h * a3
            B4 = B + h * b3
            a4 = -kc * A4 + g @ B4 - eta
            b4 = -d * B4 - g * A4
            A = A + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            B += sixth * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        A_out[n] = A
        pop_out[n] = np.vdot(B, B).real
    return A


def lawson_arrowhead(A, B, g, eB1, eB2, eA1, eA2, h, drive, A_out, pop_out):
    """Integrating-factor RK4 for the same system.

    The diagonal decay/rotation is propagated exactly (``eB1 = exp(-d h/2)``,
    ``eB2 = exp(-d h)``, likewise ``eA1``, ``eA2`` for the cavity); RK4 acts
    on the coupling and drive only.  Every spin stage increment is
    ``-g * A_stage``, so a step needs three weighted sums of B and one pass.
    """
    nsteps, substeps = drive.shape
    c0 = np.dot(g, g)
    c1 = np.dot(g * g, eB1)
    for n in range(nsteps):
        for s in range(substeps):
            eta = drive[n, s]
            S0 = np.dot(g, B)
            S1 = np.dot(g * eB1, B)
            S2 = np.dot(g * eB2, B)
            a1 = S0 - eta
            A2 = eA1 * (A + 0.5 * h * a1)
            a2 = S1 - 0.5 * h * A * c1 - eta
            A3 = eA1 * A + 0.5 * h * a2
            a3 = S1 - 0.5 * h * A2 * c0 - eta
            A4 = eA2 * A + h * eA1 * a3
            a4 = S2 - h * A3 * c1 - eta
            B *= eB2
            B -= (h / 6.0) * g * (eB2 * A + 2.0 * eB1 * (A2 + A3) + A4)
            A = eA2 * A + (h / 6.0) * (eA2 * a1 + 2.0 * eA1 * (a2 + a3) + a4)
        A_out[n] = A
        pop_out[n] = np.vdot(B, B).real
    return A


def volterra_gregory(K, f, h, out):
    """Solve y_n = f_n + int_0^{t_n} K(t_n - s) y(s) ds on a uniform grid.

    Requires K[0] == 0, which makes every step explicit.  Newton-Cotes rules
    for n <= 4, 4th-order Gregory weights afterwards.
    """
    nt = len(f)
    out[0] = f[0]
    Kr = np.ascontiguousarray(K[::-1])  # Kr[nt-1-m] == K[m]
    w0, w1, w2 = GREGORY
    last = nt - 1
    for n in range(1, nt):
        if n <= 4:
            w = NEWTON_COTES[n]
            s = 0j
            for j in range(n):
                s += w[j] * K[n - j] * out[j]
        else:
            s = np.dot(Kr[last - n:last], out[:n])
            s += (w0 - 1.0) * K[n] * out[0] + (w1 - 1.0) * K[n - 1] * out[1] + (w2 - 1.0) * K[n - 2] * out[2]
            s += (w1 - 1.0) * K[1] * out[n - 1] + (w2 - 1.0) * K[2] * out[n - 2]
        out[n] = f[n] + h * s
    return out
