"""Fixed-corotated hyperelasticity: energy density and first Piola-Kirchhoff stress.

Psi(F) = mu * sum_i (sigma_i - 1)^2 + lambda/2 * (J - 1)^2
P(F)   = 2 mu (F - R) + lambda (J - 1) J F^{-T}

with R the rotation factor of F and sigma_i its singular values.
"""

from __future__ import annotations

import numpy as np

from ..gscore import polar_decompose


def corotated_energy(f: np.ndarray, mu: float, lam: float) -> float:
    f = np.asarray(f, dtype=np.float64).reshape(3, 3)
    sigma = np.linalg.svd(f, compute_uv=False)
    j = float(np.linalg.det(f))
    if j < 0:
        # reflected configurations: use signed singular values so the energy
        # stays consistent with the polar convention
        sigma = sigma.copy()
        sigma[2] = -sigma[2]
    return float(mu * np.sum((sigma - 1.0) ** 2) + 0.5 * lam * (j - 1.0) ** 2)


def corotated_piola(f: np.ndarray, mu: float, lam: float) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64).reshape(3, 3)
    r = polar_decompose(f).rotation
    j = float(np.linalg.det(f))
    f_inv_t = np.linalg.inv(f).T
    return 2.0 * mu * (f - r) + lam * (j - 1.0) * j * f_inv_t
