# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: RK4 stepping of the cavity/spin system and the
O(T^2) Volterra convolution.  Mirrors ``_pykernels`` exactly."""

import numpy as np
from scipy.linalg.cython_blas cimport zdotu

ctypedef double complex cplx

cdef double G0 = 3.0 / 8.0
cdef double G1 = 7.0 / 6.0
cdef double G2 = 23.0 / 24.0


def rk4_arrowhead(cplx A, cplx[::1] B, const double[::1] g, const cplx[::1] d,
                  cplx kc, double h, const cplx[:, ::1] drive,
                  cplx[::1] A_out, double[::1] pop_out):
    cdef Py_ssize_t N = B.shape[0]
    cdef Py_ssize_t nsteps = drive.shape[0], substeps = drive.shape[1]
    cdef Py_ssize_t n, s, l
    cdef double half = 0.5 * h, sixth = h / 6.0
    cdef cplx eta, a1, a2, a3, a4, A2, A3, A4, gb, b, Bs_l
    cdef double pop
    cdef cplx[::1] acc = np.empty(N, dtype=np.complex128)
    cdef cplx[::1] Bs = np.empty(N, dtype=np.complex128)

    for n in range(nsteps):
        for s in range(substeps):
            eta = drive[n, s]
            gb = 0
            for l in range(N):
                gb = gb + g[l] * B[l]
            a1 = -kc * A + gb - eta
            gb = 0
            for l in range(N):
                b = -d[l] * B[l] - g[l] * A
                acc[l] = b
                Bs_l = B[l] + half * b
                Bs[l] = Bs_l
                gb = gb + g[l] * Bs_l
            A2 = A + half * a1
            a2 = -kc * A2 + gb - eta
            gb = 0
            for l in range(N):
                b = -d[l] * Bs[l] - g[l] * A2
                acc[l] = acc[l] + 2.0 * b
                Bs_l = B[l] + half * b
                Bs[l] = Bs_l
                gb = gb + g[l] * Bs_l
            A3 = A + half * a2
            a3 = -kc * A3 + gb - eta
            gb = 0
            for l in range(N):
                b = -d[l] * Bs[l] - g[l] * A3
                acc[l] = acc[l] + 2.0 * b
                Bs_l = B[l] + h * b
                Bs[l] = Bs_l
                gb = gb + g[l] * Bs_l
            A4 = A + h * a3
            a4 = -kc * A4 + gb - eta
            for l in range(N):
                b = -d[l] * Bs[l] - g[l] * A4
                B[l] = B[l] + sixth * (acc[l] + b)
            A = A + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        pop = 0.0
        for l in range(N):
            pop += B[l].real * B[l].real + B[l].imag * B[l].imag
        A_out[n] = A
        pop_out[n] = pop
    return A


def lawson_arrowhead(cplx A, cplx[::1] B, const double[::1] g, const cplx[::1] eB1,
                     const cplx[::1] eB2, cplx eA1, cplx eA2, double h,
                     const cplx[:, ::1] drive, cplx[::1] A_out, double[::1] pop_out):
    cdef Py_ssize_t N = B.shape[0]
    cdef Py_ssize_t nsteps = drive.shape[0], substeps = drive.shape[1]
    cdef Py_ssize_t n, s, l
    cdef double half = 0.5 * h, sixth = h / 6.0, c0 = 0.0, pop, gl
    cdef cplx c1 = 0, S0 = 0, S1 = 0, S2 = 0, eta, a1, a2, a3, a4, A2, A3, A4, Anew, b, e1, e2, A23

    for l in range(N):
        gl = g[l]
        c0 += gl * gl
        c1 = c1 + gl * gl * eB1[l]
        S0 = S0 + gl * B[l]
        S1 = S1 + gl * eB1[l] * B[l]
        S2 = S2 + gl * eB2[l] * B[l]
    for n in range(nsteps):
        for s in range(substeps):
            eta = drive[n, s]
            a1 = S0 - eta
            A2 = eA1 * (A + half * a1)
            a2 = S1 - half * A * c1 - eta
            A3 = eA1 * A + half * a2
            a3 = S1 - half * A2 * c0 - eta
            A4 = eA2 * A + h * eA1 * a3
            a4 = S2 - h * A3 * c1 - eta
            Anew = eA2 * A + sixth * (eA2 * a1 + 2.0 * eA1 * (a2 + a3) + a4)
            A23 = 2.0 * (A2 + A3)
            S0 = 0
            S1 = 0
            S2 = 0
            for l in range(N):
                gl = g[l]
                e1 = eB1[l]
                e2 = eB2[l]
                b = e2 * B[l] - sixth * gl * (e2 * A + e1 * A23 + A4)
                B[l] = b
                S0 = S0 + gl * b
                S1 = S1 + gl * e1 * b
                S2 = S2 + gl * e2 * b
            A = Anew
        pop = 0.0
        for l in range(N):
            pop += B[l].real * B[l].real + B[l].imag * B[l].imag
        A_out[n] = A
        pop_out[n] = pop
    return A


cdef double NC1[2]
cdef double NC2[3]
cdef double NC3[4]
cdef double NC4[5]
NC1[:] = [0.5, 0.5]
NC2[:] = [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]
NC3[:] = [3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0]
NC4[:] = [14.0 / 45.0, 64.0 / 45.0, 24.0 / 45.0, 64.0 / 45.0, 14.0 / 45.0]


def volterra_gregory(const cplx[::1] K, const cplx[::1] f, double h, cplx[::1] out):
    cdef Py_ssize_t nt = f.shape[0], n, j, last = nt - 1
    cdef cplx s
    cdef double *w
    cdef int cnt, one = 1
    cdef cplx[::1] Kr = np.ascontiguousarray(np.asarray(K)[::-1])
    out[0] = f[0]
    for n in range(1, nt):
        if n <= 4:
            if n == 1:
                w = NC1
            elif n == 2:
                w = NC2
            elif n == 3:
                w = NC3
            else:
                w = NC4
            s = 0
            for j in range(n):
                s = s + w[j] * K[n - j] * out[j]
        else:
            cnt = <int>n
            s = zdotu(&cnt, &Kr[last - n], &one, &out[0], &one)
            s = s + (G0 - 1.0) * K[n] * out[0] + (G1 - 1.0) * K[n - 1] * out[1] + (G2 - 1.0) * K[n - 2] * out[2]
            s = s + (G1 - 1.0) * K[1] * out[n - 1] + (G2 - 1.0) * K[2] * out[n - 2]
        out[n] = f[n] + h * s
    return np.asarray(out)
