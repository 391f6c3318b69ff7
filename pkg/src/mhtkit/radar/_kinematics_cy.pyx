# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled constant-velocity Kalman kernels.

Same contract as _kinematics_py: out-parameter style, non-zero return on
a singular innovation covariance. State layout is [x, y, vx, vy]; the
measurement is a position pair.
"""

from libc.math cimport exp, isfinite, sqrt, M_PI


def backend_name():
    return "compiled"


def cv_predict(double[::1] mean, double[:, ::1] cov, double dt, double sigma_a,
               double[::1] out_mean, double[:, ::1] out_cov):
    cdef double fp[4][4]
    cdef double q = sigma_a * sigma_a
    cdef double q_pp = q * dt * dt * dt * dt / 4.0
    cdef double q_pv = q * dt * dt * dt / 2.0
    cdef double q_vv = q * dt * dt
    cdef Py_ssize_t i, j

    out_mean[0] = mean[0] + dt * mean[2]
    out_mean[1] = mean[1] + dt * mean[3]
    out_mean[2] = mean[2]
    out_mean[3] = mean[3]

    for j in range(4):
        fp[0][j] = cov[0, j] + dt * cov[2, j]
        fp[1][j] = cov[1, j] + dt * cov[3, j]
        fp[2][j] = cov[2, j]
        fp[3][j] = cov[3, j]
    for i in range(4):
        out_cov[i, 0] = fp[i][0] + dt * fp[i][2]
        out_cov[i, 1] = fp[i][1] + dt * fp[i][3]
        out_cov[i, 2] = fp[i][2]
        out_cov[i, 3] = fp[i][3]
    out_cov[0, 0] += q_pp
    out_cov[1, 1] += q_pp
    out_cov[0, 2] += q_pv
    out_cov[2, 0] += q_pv
    out_cov[1, 3] += q_pv
    out_cov[3, 1] += q_pv
    out_cov[2, 2] += q_vv
    out_cov[3, 3] += q_vv


def cv_update(double[::1] mean, double[:, ::1] cov, double zx, double zy,
              double sigma_z, double[::1] out_mean, double[:, ::1] out_cov):
    cdef double r2 = sigma_z * sigma_z
    cdef double s00 = cov[0, 0] + r2
    cdef double s01 = 0.5 * (cov[0, 1] + cov[1, 0])
    cdef double s11 = cov[1, 1] + r2
    cdef double det = s00 * s11 - s01 * s01
    cdef double i00, i01, i11, dx, dy
    cdef double k[4][2]
    cdef double tmp[4][4]
    cdef Py_ssize_t i, j

    if not isfinite(det) or det <= 0.0:
        return 1
    i00 = s11 / det
    i01 = -s01 / det
    i11 = s00 / det
    for i in range(4):
        k[i][0] = cov[i, 0] * i00 + cov[i, 1] * i01
        k[i][1] = cov[i, 0] * i01 + cov[i, 1] * i11
    dx = zx - mean[0]
    dy = zy - mean[1]
    for i in range(4):
        out_mean[i] = mean[i] + k[i][0] * dx + k[i][1] * dy
    for i in range(4):
        for j in range(4):
            tmp[i][j] = cov[i, j] - k[i][0] * cov[0, j] - k[i][1] * cov[1, j]
    for i in range(4):
        for j in range(4):
            out_cov[i, j] = 0.5 * (tmp[i][j] + tmp[j][i])
    return 0


def innovation_stats(double[::1] mean, double[:, ::1] cov, double zx, double zy,
                     double sigma_z):
    cdef double r2 = sigma_z * sigma_z
    cdef double s00 = cov[0, 0] + r2
    cdef double s01 = 0.5 * (cov[0, 1] + cov[1, 0])
    cdef double s11 = cov[1, 1] + r2
    cdef double det = s00 * s11 - s01 * s01
    cdef double dx, dy, d2, lik

    if not isfinite(det) or det <= 0.0:
        return (1, 0.0, 0.0)
    dx = zx - mean[0]
    dy = zy - mean[1]
    d2 = (s11 * dx * dx - 2.0 * s01 * dx * dy + s00 * dy * dy) / det
    lik = exp(-0.5 * d2) / (2.0 * M_PI * sqrt(det))
    return (0, d2, lik)


def gate_matrix(double[:, ::1] means, double[:, :, ::1] covs,
                double[:, ::1] zs, double sigma_z, double[:, ::1] out):
    cdef double r2 = sigma_z * sigma_z
    cdef double s00, s01, s11, det, dx, dy
    cdef Py_ssize_t n = means.shape[0]
    cdef Py_ssize_t m = zs.shape[0]
    cdef Py_ssize_t i, j

    for i in range(n):
        s00 = covs[i, 0, 0] + r2
        s01 = 0.5 * (covs[i, 0, 1] + covs[i, 1, 0])
        s11 = covs[i, 1, 1] + r2
        det = s00 * s11 - s01 * s01
        if not isfinite(det) or det <= 0.0:
            return 1
        for j in range(m):
            dx = zs[j, 0] - means[i, 0]
            dy = zs[j, 1] - means[i, 1]
            out[i, j] = (s11 * dx * dx - 2.0 * s01 * dx * dy + s00 * dy * dy) / det
    return 0
