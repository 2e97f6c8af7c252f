"""Pure-numpy twins of the compiled kernels.

Same signatures and the same math as ``_kernels.pyx``; used when the
extension is unavailable or when ``SPLATSIM_PURE_PYTHON=1``. Summation order
differs from the compiled loops, so cross-backend agreement is to rounding,
not bit-exact.
"""

from __future__ import annotations

from itertools import product

import numpy as np
from scipy.spatial import cKDTree

from ..gscore import polar_rotations


def _spline_weights(fx):
    # (3, N, 3): weight of node offset i along each axis
    return np.stack(
        [
            0.5 * (1.5 - fx) ** 2,
            0.75 - (fx - 1.0) ** 2,
            0.5 * (fx - 0.5) ** 2,
        ]
    )


def _base_and_frac(pos, origin, inv_dx, shape):
    """Grid base indices and fractional offsets, with an OOB/NaN index guard."""
    fx = (pos - origin[None, :]) * inv_dx
    with np.errstate(invalid="ignore"):
        base = np.floor(fx - 0.5)
    base = np.nan_to_num(base, nan=0.0).astype(np.int64)
    limit = np.asarray(shape, dtype=np.int64) - 3
    np.clip(base, 0, limit[None, :], out=base)
    return base, fx - base


def p2g_elastic(pos, vel, F, C, mass, vol, mu, lam, dt, origin, inv_dx, grid_m, grid_p):
    dx = 1.0 / inv_dx
    base, fx = _base_and_frac(pos, origin, inv_dx, grid_m.shape)
    w = _spline_weights(fx)

    f_new = F + dt * np.einsum("nab,nbc->nac", C, F)
    F[...] = f_new
    dets = np.linalg.det(f_new)
    rot = polar_rotations(f_new)
    rot[dets <= 1e-10] = np.eye(3)

    stress = 2.0 * mu[:, None, None] * np.einsum(
        "nac,nbc->nab", f_new - rot, f_new
    )
    lam_term = lam * dets * (dets - 1.0)
    stress[:, [0, 1, 2], [0, 1, 2]] += lam_term[:, None]
    coeff = -dt * vol * 4.0 * inv_dx * inv_dx
    affine = coeff[:, None, None] * stress + mass[:, None, None] * C

    mv = mass[:, None] * vel
    wm = mass
    for i, j, k in product(range(3), range(3), range(3)):
        weight = w[i, :, 0] * w[j, :, 1] * w[k, :, 2]
        dpos = (np.array([i, j, k], dtype=np.float64) - fx) * dx
        contrib = weight[:, None] * (mv + np.einsum("nab,nb->na", affine, dpos))
        idx = (base[:, 0] + i, base[:, 1] + j, base[:, 2] + k)
        np.add.at(grid_m, idx, weight * wm)
        np.add.at(grid_p, idx, contrib)


def p2g_rigid(pos, mass, body_com, body_v, body_w, origin, inv_dx, grid_m, grid_p, grid_rm):
    dx = 1.0 / inv_dx
    rel = pos - body_com[None, :]
    vel = body_v[None, :] + np.cross(np.broadcast_to(body_w, rel.shape), rel)

    base, fx = _base_and_frac(pos, origin, inv_dx, grid_m.shape)
    w = _spline_weights(fx)

    for i, j, k in product(range(3), range(3), range(3)):
        weight = w[i, :, 0] * w[j, :, 1] * w[k, :, 2]
        wm = weight * mass
        dpos = (np.array([i, j, k], dtype=np.float64) - fx) * dx
        v_node = vel + np.cross(np.broadcast_to(body_w, dpos.shape), dpos)
        idx = (base[:, 0] + i, base[:, 1] + j, base[:, 2] + k)
        np.add.at(grid_m, idx, wm)
        np.add.at(grid_rm, idx, wm)
        np.add.at(grid_p, idx, wm[:, None] * v_node)


def grid_finalize(grid_m, grid_p, dt, gravity, ground_z, ground_friction, origin, inv_dx, wall):
    dx = 1.0 / inv_dx
    nx, ny, nz = grid_m.shape
    active = grid_m > 0.0
    v = np.zeros_like(grid_p)
    v[active] = grid_p[active] / grid_m[active][:, None] + dt * gravity[None, :]

    z_nodes = origin[2] + np.arange(nz) * dx
    ground = active & (z_nodes[None, None, :] <= ground_z) & (v[..., 2] < 0.0)
    if np.any(ground):
        vt = np.sqrt(v[..., 0] ** 2 + v[..., 1] ** 2)
        vn = -v[..., 2]
        scale = np.ones_like(vt)
        moving = ground & (vt > 1e-12)
        scale[moving] = np.maximum(0.0, 1.0 - ground_friction * vn[moving] / vt[moving])
        v[..., 0] = np.where(ground, v[..., 0] * scale, v[..., 0])
        v[..., 1] = np.where(ground, v[..., 1] * scale, v[..., 1])
        v[..., 2] = np.where(ground, 0.0, v[..., 2])

    if wall > 0:
        v[:wall, :, :, :] = 0.0
        v[-wall:, :, :, :] = 0.0
        v[:, :wall, :, :] = 0.0
        v[:, -wall:, :, :] = 0.0
        v[:, :, :wall, :] = 0.0
        v[:, :, -wall:, :] = 0.0
    grid_p[...] = v


def rigid_grid_project(grid_rm, grid_m, grid_v, body_com, body_v, body_w, dt,
                       gravity, origin, inv_dx, out_impulse, out_torque):
    dx = 1.0 / inv_dx
    ii, jj, kk = np.nonzero(grid_rm > 0.0)
    out_impulse[:] = 0.0
    out_torque[:] = 0.0
    if len(ii) == 0:
        return
    nodes = origin[None, :] + np.stack([ii, jj, kk], axis=1) * dx
    rel = nodes - body_com[None, :]
    target = body_v[None, :] + np.cross(np.broadcast_to(body_w, rel.shape), rel) + dt * gravity[None, :]
    m = grid_m[ii, jj, kk]
    imp = m[:, None] * (target - grid_v[ii, jj, kk])
    grid_v[ii, jj, kk] = target
    out_impulse[:] = imp.sum(axis=0)
    out_torque[:] = np.cross(rel, imp).sum(axis=0)


def g2p_elastic(pos, vel, C, dt, origin, inv_dx, grid_v, lo, hi):
    dx = 1.0 / inv_dx
    base, fx = _base_and_frac(pos, origin, inv_dx, grid_v.shape[:3])
    w = _spline_weights(fx)

    new_v = np.zeros_like(vel)
    new_b = np.zeros_like(C)
    for i, j, k in product(range(3), range(3), range(3)):
        weight = w[i, :, 0] * w[j, :, 1] * w[k, :, 2]
        dpos = (np.array([i, j, k], dtype=np.float64) - fx) * dx
        gv = grid_v[base[:, 0] + i, base[:, 1] + j, base[:, 2] + k]
        new_v += weight[:, None] * gv
        new_b += weight[:, None, None] * np.einsum("na,nb->nab", gv, dpos)
    vel[...] = new_v
    C[...] = 4.0 * inv_dx * inv_dx * new_b
    pos += dt * new_v
    np.clip(pos, lo[None, :], hi[None, :], out=pos)


def _w_cubic(r, h):
    q = r / h
    sigma = 8.0 / (np.pi * h**3)
    out = np.where(
        q <= 0.5,
        sigma * (6.0 * (q**3 - q**2) + 1.0),
        sigma * 2.0 * np.maximum(1.0 - q, 0.0) ** 3,
    )
    return np.where(q <= 1.0, out, 0.0)


def _dw_cubic(r, h):
    q = r / h
    sigma = 8.0 / (np.pi * h**3)
    out = np.where(
        q <= 0.5,
        sigma * (18.0 * q**2 - 12.0 * q) / h,
        -sigma * 6.0 * np.maximum(1.0 - q, 0.0) ** 2 / h,
    )
    return np.where(q <= 1.0, out, 0.0)


def _cohesion_spline(r, h):
    c = 32.0 / (np.pi * h**9)
    cube = (h - r) ** 3 * r**3
    out = np.where(2.0 * r > h, c * cube, c * (2.0 * cube - h**6 / 64.0))
    return np.where((r > 0.0) & (r <= h), out, 0.0)


def sph_density(pos, mass, h, order, cell_start, grid_dims, grid_lo, rho_out):
    # cell-list arguments accepted for signature parity; a KD-tree pair query
    # is the vectorized equivalent here
    pairs = cKDTree(pos).query_pairs(h, output_type="ndarray")
    rho_out[...] = mass * _w_cubic(np.zeros(len(pos)), h)
    if len(pairs):
        i, j = pairs[:, 0], pairs[:, 1]
        r = np.linalg.norm(pos[i] - pos[j], axis=1)
        wij = _w_cubic(r, h)
        np.add.at(rho_out, i, mass[j] * wij)
        np.add.at(rho_out, j, mass[i] * wij)


def sph_accel(pos, vel, rho, pres, mass, h, alpha_visc, c_sound, rho0, cohesion,
              order, cell_start, grid_dims, grid_lo, acc_out):
    acc_out[...] = 0.0
    pairs = cKDTree(pos).query_pairs(h, output_type="ndarray")
    if not len(pairs):
        return
    i, j = pairs[:, 0], pairs[:, 1]
    rij = pos[i] - pos[j]
    r2 = np.einsum("na,na->n", rij, rij)
    keep = r2 >= 1e-24
    i, j, rij, r2 = i[keep], j[keep], rij[keep], r2[keep]
    r = np.sqrt(r2)
    dw = _dw_cubic(r, h)

    term = -(pres[i] / rho[i] ** 2 + pres[j] / rho[j] ** 2) * dw
    vxr = np.einsum("na,na->n", vel[i] - vel[j], rij)
    visc = np.zeros_like(r)
    approaching = vxr < 0.0
    mu_ij = h * vxr[approaching] / (r2[approaching] + 0.01 * h * h)
    pi_ij = -alpha_visc * c_sound * mu_ij / (0.5 * (rho[i][approaching] + rho[j][approaching]))
    visc[approaching] = -pi_ij * dw[approaching]
    term = term + visc
    coh = cohesion * _cohesion_spline(r, h)

    r_hat = rij / r[:, None]
    acc_pair = (term - coh)[:, None] * r_hat
    np.add.at(acc_out, i, mass[j][:, None] * acc_pair)
    np.add.at(acc_out, j, -mass[i][:, None] * acc_pair)
