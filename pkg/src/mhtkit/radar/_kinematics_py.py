"""Pure numpy constant-velocity Kalman kernels.

Mirror of the compiled module: out-parameter style, non-zero return on a
singular innovation covariance.
"""

from __future__ import annotations

import math

import numpy as np


def backend_name() -> str:
    return "pure"


def _transition(dt: float) -> np.ndarray:
    return np.array([
        [1.0, 0.0, dt, 0.0],
        [0.0, 1.0, 0.0, dt],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])


def _process_noise(dt: float, sigma_a: float) -> np.ndarray:
    q = sigma_a * sigma_a
    q_pp = q * dt ** 4 / 4.0
    q_pv = q * dt ** 3 / 2.0
    q_vv = q * dt ** 2
    return np.array([
        [q_pp, 0.0, q_pv, 0.0],
        [0.0, q_pp, 0.0, q_pv],
        [q_pv, 0.0, q_vv, 0.0],
        [0.0, q_pv, 0.0, q_vv],
    ])


def cv_predict(mean, cov, dt, sigma_a, out_mean, out_cov) -> None:
    f = _transition(dt)
    out_mean[:] = f @ mean
    out_cov[:] = f @ cov @ f.T + _process_noise(dt, sigma_a)


def _innovation_cov(cov, sigma_z):
    r2 = sigma_z * sigma_z
    s00 = cov[0, 0] + r2
    s01 = 0.5 * (cov[0, 1] + cov[1, 0])
    s11 = cov[1, 1] + r2
    det = s00 * s11 - s01 * s01
    return s00, s01, s11, det


def cv_update(mean, cov, zx, zy, sigma_z, out_mean, out_cov) -> int:
    s00, s01, s11, det = _innovation_cov(cov, sigma_z)
    if not math.isfinite(det) or det <= 0.0:
        return 1
    sinv = np.array([[s11, -s01], [-s01, s00]]) / det
    k = cov[:, :2] @ sinv
    innov = np.array([zx - mean[0], zy - mean[1]])
    out_mean[:] = mean + k @ innov
    reduced = cov - k @ cov[:2, :]
    out_cov[:] = 0.5 * (reduced + reduced.T)
    return 0


def innovation_stats(mean, cov, zx, zy, sigma_z):
    s00, s01, s11, det = _innovation_cov(cov, sigma_z)
    if not math.isfinite(det) or det <= 0.0:
        return (1, 0.0, 0.0)
    dx = zx - mean[0]
    dy = zy - mean[1]
    d2 = (s11 * dx * dx - 2.0 * s01 * dx * dy + s00 * dy * dy) / det
    lik = math.exp(-0.5 * d2) / (2.0 * math.pi * math.sqrt(det))
    return (0, float(d2), float(lik))


def gate_matrix(means, covs, zs, sigma_z, out) -> int:
    n, m = out.shape
    if n == 0 or m == 0:
        return 0
    r2 = sigma_z * sigma_z
    s00 = covs[:, 0, 0] + r2
    s01 = 0.5 * (covs[:, 0, 1] + covs[:, 1, 0])
    s11 = covs[:, 1, 1] + r2
    det = s00 * s11 - s01 * s01
    if not np.all(np.isfinite(det)) or np.any(det <= 0.0):
        return 1
    dx = zs[None, :, 0] - means[:, None, 0]
    dy = zs[None, :, 1] - means[:, None, 1]
    out[:] = (
        s11[:, None] * dx * dx
        - 2.0 * s01[:, None] * dx * dy
        + s00[:, None] * dy * dy
    ) / det[:, None]
    return 0
