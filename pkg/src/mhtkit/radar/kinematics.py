"""Constant-velocity Kalman math with a compiled core when available.

Set MHTKIT_PURE=1 to force the numpy implementation; otherwise the
compiled extension is used when it imported cleanly. ``BACKEND`` reports
which one won.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import SingularCovarianceError

if os.environ.get("MHTKIT_PURE"):
    from . import _kinematics_py as _impl
else:
    try:
        from . import _kinematics_cy as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kinematics_py as _impl

BACKEND: str = _impl.backend_name()


def _vec4(x) -> np.ndarray:
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.shape != (4,):
        raise ValueError(f"expected state vector of shape (4,), got {a.shape}")
    return a


def _mat44(x) -> np.ndarray:
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.shape != (4, 4):
        raise ValueError(f"expected covariance of shape (4, 4), got {a.shape}")
    return a


def cv_predict(mean, cov, dt: float, sigma_a: float) -> tuple[np.ndarray, np.ndarray]:
    """Propagate a state dt seconds with white-noise acceleration."""
    out_mean = np.empty(4)
    out_cov = np.empty((4, 4))
    _impl.cv_predict(_vec4(mean), _mat44(cov), float(dt), float(sigma_a),
                     out_mean, out_cov)
    return out_mean, out_cov


def cv_update(mean, cov, z, sigma_z: float) -> tuple[np.ndarray, np.ndarray]:
    """Condition a state on a position measurement ``z = (x, y)``."""
    out_mean = np.empty(4)
    out_cov = np.empty((4, 4))
    status = _impl.cv_update(_vec4(mean), _mat44(cov), float(z[0]), float(z[1]),
                             float(sigma_z), out_mean, out_cov)
    if status:
        raise SingularCovarianceError("innovation covariance is not positive")
    return out_mean, out_cov


def innovation_stats(mean, cov, z, sigma_z: float) -> tuple[float, float]:
    """Mahalanobis distance squared and Gaussian density of a measurement."""
    status, d2, lik = _impl.innovation_stats(_vec4(mean), _mat44(cov),
                                             float(z[0]), float(z[1]),
                                             float(sigma_z))
    if status:
        raise SingularCovarianceError("innovation covariance is not positive")
    return d2, lik


def gate_matrix(means, covs, zs, sigma_z: float) -> np.ndarray:
    """Pairwise squared Mahalanobis distances, states by measurements."""
    means = np.ascontiguousarray(means, dtype=np.float64).reshape(-1, 4)
    covs = np.ascontiguousarray(covs, dtype=np.float64).reshape(-1, 4, 4)
    zs = np.ascontiguousarray(zs, dtype=np.float64).reshape(-1, 2)
    if means.shape[0] != covs.shape[0]:
        raise ValueError("means and covs disagree on state count")
    out = np.empty((means.shape[0], zs.shape[0]))
    status = _impl.gate_matrix(means, covs, zs, float(sigma_z), out)
    if status:
        raise SingularCovarianceError("innovation covariance is not positive")
    return out
