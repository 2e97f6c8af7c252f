# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: MLS-MPM transfers, grid ops, and SPH pair sums.

Each function has a pure-numpy twin with the same signature in
``splatsim.sim.kernels_py``; the active backend is chosen at import time in
``splatsim.sim.backend``. All arrays are float64 and C-contiguous.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, floor, fabs

cnp.import_array()


cdef inline void _quad_weights(double fx, double* w) nogil:
    # quadratic B-spline weights over the 3 nearest nodes
    w[0] = 0.5 * (1.5 - fx) * (1.5 - fx)
    w[1] = 0.75 - (fx - 1.0) * (fx - 1.0)
    w[2] = 0.5 * (fx - 0.5) * (fx - 0.5)


cdef inline int _clamp_base(int base, Py_ssize_t n) nogil:
    # memory-safety guard only: healthy particles are kept in-domain by the
    # g2p position clip; this catches NaN/garbage before an OOB write
    if base < 0:
        return 0
    if base > <int>n - 3:
        return <int>n - 3
    return base


cdef inline double _det3(double* a) nogil:
    return (a[0] * (a[4] * a[8] - a[5] * a[7])
            - a[1] * (a[3] * a[8] - a[5] * a[6])
            + a[2] * (a[3] * a[7] - a[4] * a[6]))


cdef inline int _inv3(double* a, double* out) nogil:
    cdef double det = _det3(a)
    if fabs(det) < 1e-300:
        return 1
    cdef double inv_det = 1.0 / det
    out[0] = (a[4] * a[8] - a[5] * a[7]) * inv_det
    out[1] = (a[2] * a[7] - a[1] * a[8]) * inv_det
    out[2] = (a[1] * a[5] - a[2] * a[4]) * inv_det
    out[3] = (a[5] * a[6] - a[3] * a[8]) * inv_det
    out[4] = (a[0] * a[8] - a[2] * a[6]) * inv_det
    out[5] = (a[2] * a[3] - a[0] * a[5]) * inv_det
    out[6] = (a[3] * a[7] - a[4] * a[6]) * inv_det
    out[7] = (a[1] * a[6] - a[0] * a[7]) * inv_det
    out[8] = (a[0] * a[4] - a[1] * a[3]) * inv_det
    return 0


cdef inline void _polar_rotation(double* f, double* r) nogil:
    # Rotation factor of F by Newton iteration R <- (R + R^-T)/2.
    # Falls back to identity for (near-)singular or inverted F; such states
    # are already outside the solver's validity and get caught by the
    # per-frame blowup check.
    cdef double det = _det3(f)
    cdef int i, it
    cdef double inv[9]
    cdef double nxt[9]
    cdef double diff
    if det <= 1e-10:
        for i in range(9):
            r[i] = 0.0
        r[0] = r[4] = r[8] = 1.0
        return
    for i in range(9):
        r[i] = f[i]
    for it in range(40):
        if _inv3(r, inv):
            for i in range(9):
                r[i] = 0.0
            r[0] = r[4] = r[8] = 1.0
            return
        # next = (R + inv(R)^T) / 2
        nxt[0] = 0.5 * (r[0] + inv[0]); nxt[1] = 0.5 * (r[1] + inv[3]); nxt[2] = 0.5 * (r[2] + inv[6])
        nxt[3] = 0.5 * (r[3] + inv[1]); nxt[4] = 0.5 * (r[4] + inv[4]); nxt[5] = 0.5 * (r[5] + inv[7])
        nxt[6] = 0.5 * (r[6] + inv[2]); nxt[7] = 0.5 * (r[7] + inv[5]); nxt[8] = 0.5 * (r[8] + inv[8])
        diff = 0.0
        for i in range(9):
            diff += fabs(nxt[i] - r[i])
            r[i] = nxt[i]
        if diff < 1e-13:
            break


def p2g_elastic(double[:, ::1] pos, double[:, ::1] vel, double[:, :, ::1] F,
                double[:, :, ::1] C, double[::1] mass, double[::1] vol,
                double[::1] mu, double[::1] lam, double dt,
                double[::1] origin, double inv_dx,
                double[:, :, ::1] grid_m, double[:, :, :, ::1] grid_p):
    """Scatter elastic particles to the grid; updates F in place first."""
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t nx = grid_m.shape[0], ny = grid_m.shape[1], nz = grid_m.shape[2]
    cdef Py_ssize_t p, i, j, k, a, b
    cdef double dx = 1.0 / inv_dx
    cdef double fx0, fx1, fx2
    cdef int base0, base1, base2
    cdef double wx[3]
    cdef double wy[3]
    cdef double wz[3]
    cdef double fnew[9]
    cdef double fold[9]
    cdef double r[9]
    cdef double stress[9]
    cdef double affine[9]
    cdef double jdet, w, coeff, lam_term
    cdef double dposx, dposy, dposz
    cdef double mv0, mv1, mv2

    for p in range(n):
        fx0 = (pos[p, 0] - origin[0]) * inv_dx
        fx1 = (pos[p, 1] - origin[1]) * inv_dx
        fx2 = (pos[p, 2] - origin[2]) * inv_dx
        base0 = _clamp_base(<int>floor(fx0 - 0.5), nx)
        base1 = _clamp_base(<int>floor(fx1 - 0.5), ny)
        base2 = _clamp_base(<int>floor(fx2 - 0.5), nz)
        fx0 -= base0
        fx1 -= base1
        fx2 -= base2
        _quad_weights(fx0, wx)
        _quad_weights(fx1, wy)
        _quad_weights(fx2, wz)

        # F <- (I + dt C) F
        for a in range(3):
            for b in range(3):
                fold[3 * a + b] = F[p, a, b]
        for a in range(3):
            for b in range(3):
                fnew[3 * a + b] = (fold[3 * a + b]
                                   + dt * (C[p, a, 0] * fold[b]
                                           + C[p, a, 1] * fold[3 + b]
                                           + C[p, a, 2] * fold[6 + b]))
        for a in range(3):
            for b in range(3):
                F[p, a, b] = fnew[3 * a + b]

        _polar_rotation(fnew, r)
        jdet = _det3(fnew)
        # Kirchhoff-style stress tau = 2 mu (F - R) F^T + lam J (J - 1) I
        lam_term = lam[p] * jdet * (jdet - 1.0)
        for a in range(3):
            for b in range(3):
                stress[3 * a + b] = 2.0 * mu[p] * (
                    (fnew[3 * a] - r[3 * a]) * fnew[3 * b]
                    + (fnew[3 * a + 1] - r[3 * a + 1]) * fnew[3 * b + 1]
                    + (fnew[3 * a + 2] - r[3 * a + 2]) * fnew[3 * b + 2])
            stress[4 * a] += lam_term
        coeff = -dt * vol[p] * 4.0 * inv_dx * inv_dx
        for a in range(9):
            affine[a] = coeff * stress[a] + mass[p] * C[p, a // 3, a % 3]

        mv0 = mass[p] * vel[p, 0]
        mv1 = mass[p] * vel[p, 1]
        mv2 = mass[p] * vel[p, 2]
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    w = wx[i] * wy[j] * wz[k]
                    dposx = (i - fx0) * dx
                    dposy = (j - fx1) * dx
                    dposz = (k - fx2) * dx
                    grid_m[base0 + i, base1 + j, base2 + k] += w * mass[p]
                    grid_p[base0 + i, base1 + j, base2 + k, 0] += w * (
                        mv0 + affine[0] * dposx + affine[1] * dposy + affine[2] * dposz)
                    grid_p[base0 + i, base1 + j, base2 + k, 1] += w * (
                        mv1 + affine[3] * dposx + affine[4] * dposy + affine[5] * dposz)
                    grid_p[base0 + i, base1 + j, base2 + k, 2] += w * (
                        mv2 + affine[6] * dposx + affine[7] * dposy + affine[8] * dposz)


def p2g_rigid(double[:, ::1] pos, double[::1] mass,
              double[::1] body_com, double[::1] body_v, double[::1] body_w,
              double[::1] origin, double inv_dx,
              double[:, :, ::1] grid_m, double[:, :, :, ::1] grid_p,
              double[:, :, ::1] grid_rm):
    """Scatter kinematic rigid followers as momentum-carrying boundary mass."""
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t nx = grid_m.shape[0], ny = grid_m.shape[1], nz = grid_m.shape[2]
    cdef Py_ssize_t p, i, j, k
    cdef double dx = 1.0 / inv_dx
    cdef double fx0, fx1, fx2
    cdef int base0, base1, base2
    cdef double wx[3]
    cdef double wy[3]
    cdef double wz[3]
    cdef double rx, ry, rz, vx, vy, vz
    cdef double w, wm
    cdef double dposx, dposy, dposz
    # affine part = skew(omega): carries body rotation into the transfer
    cdef double w0 = body_w[0], w1 = body_w[1], w2 = body_w[2]

    for p in range(n):
        rx = pos[p, 0] - body_com[0]
        ry = pos[p, 1] - body_com[1]
        rz = pos[p, 2] - body_com[2]
        vx = body_v[0] + w1 * rz - w2 * ry
        vy = body_v[1] + w2 * rx - w0 * rz
        vz = body_v[2] + w0 * ry - w1 * rx

        fx0 = (pos[p, 0] - origin[0]) * inv_dx
        fx1 = (pos[p, 1] - origin[1]) * inv_dx
        fx2 = (pos[p, 2] - origin[2]) * inv_dx
        base0 = _clamp_base(<int>floor(fx0 - 0.5), nx)
        base1 = _clamp_base(<int>floor(fx1 - 0.5), ny)
        base2 = _clamp_base(<int>floor(fx2 - 0.5), nz)
        fx0 -= base0
        fx1 -= base1
        fx2 -= base2
        _quad_weights(fx0, wx)
        _quad_weights(fx1, wy)
        _quad_weights(fx2, wz)

        for i in range(3):
            for j in range(3):
                for k in range(3):
                    w = wx[i] * wy[j] * wz[k]
                    wm = w * mass[p]
                    dposx = (i - fx0) * dx
                    dposy = (j - fx1) * dx
                    dposz = (k - fx2) * dx
                    grid_m[base0 + i, base1 + j, base2 + k] += wm
                    grid_rm[base0 + i, base1 + j, base2 + k] += wm
                    grid_p[base0 + i, base1 + j, base2 + k, 0] += wm * (vx + w1 * dposz - w2 * dposy)
                    grid_p[base0 + i, base1 + j, base2 + k, 1] += wm * (vy + w2 * dposx - w0 * dposz)
                    grid_p[base0 + i, base1 + j, base2 + k, 2] += wm * (vz + w0 * dposy - w1 * dposx)


def grid_finalize(double[:, :, ::1] grid_m, double[:, :, :, ::1] grid_p,
                  double dt, double[::1] gravity,
                  double ground_z, double ground_friction,
                  double[::1] origin, double inv_dx, int wall):
    """Momentum -> velocity, gravity kick, ground plane and sticky wall BCs."""
    cdef Py_ssize_t nx = grid_m.shape[0], ny = grid_m.shape[1], nz = grid_m.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double dx = 1.0 / inv_dx
    cdef double m, vx, vy, vz, zn, vt, scale

    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                m = grid_m[i, j, k]
                if m <= 0.0:
                    continue
                vx = grid_p[i, j, k, 0] / m + dt * gravity[0]
                vy = grid_p[i, j, k, 1] / m + dt * gravity[1]
                vz = grid_p[i, j, k, 2] / m + dt * gravity[2]
                zn = origin[2] + k * dx
                if zn <= ground_z and vz < 0.0:
                    # slip with Coulomb friction against the removed normal impulse
                    vt = sqrt(vx * vx + vy * vy)
                    if vt > 1e-12:
                        scale = 1.0 - ground_friction * (-vz) / vt
                        if scale < 0.0:
                            scale = 0.0
                        vx *= scale
                        vy *= scale
                    vz = 0.0
                if i < wall or i >= nx - wall or j < wall or j >= ny - wall \
                        or k < wall or k >= nz - wall:
                    vx = 0.0
                    vy = 0.0
                    vz = 0.0
                grid_p[i, j, k, 0] = vx
                grid_p[i, j, k, 1] = vy
                grid_p[i, j, k, 2] = vz


def rigid_grid_project(double[:, :, ::1] grid_rm, double[:, :, ::1] grid_m,
                       double[:, :, :, ::1] grid_v,
                       double[::1] body_com, double[::1] body_v, double[::1] body_w,
                       double dt, double[::1] gravity,
                       double[::1] origin, double inv_dx,
                       double[::1] out_impulse, double[::1] out_torque):
    """Constrain rigid-loaded nodes to the body's velocity field.

    Accumulates the momentum the grid gained; the engine applies the negation
    to the body, making the exchange momentum-conserving.
    """
    cdef Py_ssize_t nx = grid_rm.shape[0], ny = grid_rm.shape[1], nz = grid_rm.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double dx = 1.0 / inv_dx
    cdef double m, xn, yn, zn, rx, ry, rz
    cdef double tx, ty, tz, ix, iy, iz
    cdef double w0 = body_w[0], w1 = body_w[1], w2 = body_w[2]
    cdef double g0 = dt * gravity[0], g1 = dt * gravity[1], g2 = dt * gravity[2]

    out_impulse[0] = out_impulse[1] = out_impulse[2] = 0.0
    out_torque[0] = out_torque[1] = out_torque[2] = 0.0
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                if grid_rm[i, j, k] <= 0.0:
                    continue
                m = grid_m[i, j, k]
                xn = origin[0] + i * dx
                yn = origin[1] + j * dx
                zn = origin[2] + k * dx
                rx = xn - body_com[0]
                ry = yn - body_com[1]
                rz = zn - body_com[2]
                # target = body velocity at the node, with the same gravity kick
                tx = body_v[0] + w1 * rz - w2 * ry + g0
                ty = body_v[1] + w2 * rx - w0 * rz + g1
                tz = body_v[2] + w0 * ry - w1 * rx + g2
                ix = m * (tx - grid_v[i, j, k, 0])
                iy = m * (ty - grid_v[i, j, k, 1])
                iz = m * (tz - grid_v[i, j, k, 2])
                grid_v[i, j, k, 0] = tx
                grid_v[i, j, k, 1] = ty
                grid_v[i, j, k, 2] = tz
                out_impulse[0] += ix
                out_impulse[1] += iy
                out_impulse[2] += iz
                out_torque[0] += ry * iz - rz * iy
                out_torque[1] += rz * ix - rx * iz
                out_torque[2] += rx * iy - ry * ix


def g2p_elastic(double[:, ::1] pos, double[:, ::1] vel, double[:, :, ::1] C,
                double dt, double[::1] origin, double inv_dx,
                double[:, :, :, ::1] grid_v,
                double[::1] lo, double[::1] hi):
    """Gather grid velocities back to particles and advect them."""
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t nx = grid_v.shape[0], ny = grid_v.shape[1], nz = grid_v.shape[2]
    cdef Py_ssize_t p, i, j, k, a
    cdef double dx = 1.0 / inv_dx
    cdef double fx0, fx1, fx2
    cdef int base0, base1, base2
    cdef double wx[3]
    cdef double wy[3]
    cdef double wz[3]
    cdef double nv0, nv1, nv2
    cdef double nc[9]
    cdef double w, gv0, gv1, gv2
    cdef double dposx, dposy, dposz
    cdef double four_inv_dx2 = 4.0 * inv_dx * inv_dx

    for p in range(n):
        fx0 = (pos[p, 0] - origin[0]) * inv_dx
        fx1 = (pos[p, 1] - origin[1]) * inv_dx
        fx2 = (pos[p, 2] - origin[2]) * inv_dx
        base0 = _clamp_base(<int>floor(fx0 - 0.5), nx)
        base1 = _clamp_base(<int>floor(fx1 - 0.5), ny)
        base2 = _clamp_base(<int>floor(fx2 - 0.5), nz)
        fx0 -= base0
        fx1 -= base1
        fx2 -= base2
        _quad_weights(fx0, wx)
        _quad_weights(fx1, wy)
        _quad_weights(fx2, wz)

        nv0 = nv1 = nv2 = 0.0
        for a in range(9):
            nc[a] = 0.0
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    w = wx[i] * wy[j] * wz[k]
                    gv0 = grid_v[base0 + i, base1 + j, base2 + k, 0]
                    gv1 = grid_v[base0 + i, base1 + j, base2 + k, 1]
                    gv2 = grid_v[base0 + i, base1 + j, base2 + k, 2]
                    dposx = (i - fx0) * dx
                    dposy = (j - fx1) * dx
                    dposz = (k - fx2) * dx
                    nv0 += w * gv0
                    nv1 += w * gv1
                    nv2 += w * gv2
                    nc[0] += w * gv0 * dposx
                    nc[1] += w * gv0 * dposy
                    nc[2] += w * gv0 * dposz
                    nc[3] += w * gv1 * dposx
                    nc[4] += w * gv1 * dposy
                    nc[5] += w * gv1 * dposz
                    nc[6] += w * gv2 * dposx
                    nc[7] += w * gv2 * dposy
                    nc[8] += w * gv2 * dposz
        vel[p, 0] = nv0
        vel[p, 1] = nv1
        vel[p, 2] = nv2
        for a in range(9):
            C[p, a // 3, a % 3] = four_inv_dx2 * nc[a]
        pos[p, 0] += dt * nv0
        pos[p, 1] += dt * nv1
        pos[p, 2] += dt * nv2
        if pos[p, 0] < lo[0]:
            pos[p, 0] = lo[0]
        elif pos[p, 0] > hi[0]:
            pos[p, 0] = hi[0]
        if pos[p, 1] < lo[1]:
            pos[p, 1] = lo[1]
        elif pos[p, 1] > hi[1]:
            pos[p, 1] = hi[1]
        if pos[p, 2] < lo[2]:
            pos[p, 2] = lo[2]
        elif pos[p, 2] > hi[2]:
            pos[p, 2] = hi[2]


cdef inline double _w_cubic(double r, double h) nogil:
    # cubic spline kernel, support radius h, 3D normalization
    cdef double q = r / h
    cdef double sigma = 8.0 / (3.14159265358979323846 * h * h * h)
    if q <= 0.5:
        return sigma * (6.0 * (q * q * q - q * q) + 1.0)
    elif q <= 1.0:
        return sigma * 2.0 * (1.0 - q) * (1.0 - q) * (1.0 - q)
    return 0.0


cdef inline double _dw_cubic(double r, double h) nogil:
    # d/dr of the cubic spline kernel
    cdef double q = r / h
    cdef double sigma = 8.0 / (3.14159265358979323846 * h * h * h)
    if q <= 0.5:
        return sigma * (18.0 * q * q - 12.0 * q) / h
    elif q <= 1.0:
        return -sigma * 6.0 * (1.0 - q) * (1.0 - q) / h
    return 0.0


cdef inline double _cohesion_spline(double r, double h) nogil:
    # Akinci-style cohesion spline, zero at r=0 and r=h
    cdef double c = 32.0 / (3.14159265358979323846 * h ** 9)
    cdef double t
    if 2.0 * r > h and r <= h:
        t = (h - r) * (h - r) * (h - r) * r * r * r
        return c * t
    elif r > 0.0 and 2.0 * r <= h:
        t = (h - r) * (h - r) * (h - r) * r * r * r
        return c * (2.0 * t - (h ** 6) / 64.0)
    return 0.0


def sph_density(double[:, ::1] pos, double[::1] mass, double h,
                long long[::1] order, long long[::1] cell_start,
                long long[::1] grid_dims, double[::1] grid_lo,
                double[::1] rho_out):
    """Kernel-sum densities using a prebuilt uniform cell list (cell size h)."""
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t p, q, idx
    cdef long long cx, cy, cz, ncx, ncy, ncz, ci, cj, ck, cell
    cdef long long nx = grid_dims[0], ny = grid_dims[1], nz = grid_dims[2]
    cdef double rx, ry, rz, r2, r, acc
    cdef double h2 = h * h

    for p in range(n):
        cx = <long long>floor((pos[p, 0] - grid_lo[0]) / h)
        cy = <long long>floor((pos[p, 1] - grid_lo[1]) / h)
        cz = <long long>floor((pos[p, 2] - grid_lo[2]) / h)
        acc = 0.0
        for ci in range(cx - 1, cx + 2):
            if ci < 0 or ci >= nx:
                continue
            for cj in range(cy - 1, cy + 2):
                if cj < 0 or cj >= ny:
                    continue
                for ck in range(cz - 1, cz + 2):
                    if ck < 0 or ck >= nz:
                        continue
                    cell = (ci * ny + cj) * nz + ck
                    for idx in range(cell_start[cell], cell_start[cell + 1]):
                        q = order[idx]
                        rx = pos[p, 0] - pos[q, 0]
                        ry = pos[p, 1] - pos[q, 1]
                        rz = pos[p, 2] - pos[q, 2]
                        r2 = rx * rx + ry * ry + rz * rz
                        if r2 < h2:
                            r = sqrt(r2)
                            acc += mass[q] * _w_cubic(r, h)
        rho_out[p] = acc


def sph_accel(double[:, ::1] pos, double[:, ::1] vel, double[::1] rho,
              double[::1] pres, double[::1] mass, double h,
              double alpha_visc, double c_sound, double rho0, double cohesion,
              long long[::1] order, long long[::1] cell_start,
              long long[::1] grid_dims, double[::1] grid_lo,
              double[:, ::1] acc_out):
    """Pressure + artificial viscosity + cohesion accelerations (no gravity)."""
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t p, q, idx
    cdef long long cx, cy, cz, ci, cj, ck, cell
    cdef long long nx = grid_dims[0], ny = grid_dims[1], nz = grid_dims[2]
    cdef double rx, ry, rz, r2, r, dw, term, ax, ay, az
    cdef double vxr, mu_ij, pi_ij, coh
    cdef double h2 = h * h
    cdef double eps_h2 = 0.01 * h * h

    for p in range(n):
        cx = <long long>floor((pos[p, 0] - grid_lo[0]) / h)
        cy = <long long>floor((pos[p, 1] - grid_lo[1]) / h)
        cz = <long long>floor((pos[p, 2] - grid_lo[2]) / h)
        ax = ay = az = 0.0
        for ci in range(cx - 1, cx + 2):
            if ci < 0 or ci >= nx:
                continue
            for cj in range(cy - 1, cy + 2):
                if cj < 0 or cj >= ny:
                    continue
                for ck in range(cz - 1, cz + 2):
                    if ck < 0 or ck >= nz:
                        continue
                    cell = (ci * ny + cj) * nz + ck
                    for idx in range(cell_start[cell], cell_start[cell + 1]):
                        q = order[idx]
                        if q == p:
                            continue
                        rx = pos[p, 0] - pos[q, 0]
                        ry = pos[p, 1] - pos[q, 1]
                        rz = pos[p, 2] - pos[q, 2]
                        r2 = rx * rx + ry * ry + rz * rz
                        if r2 >= h2 or r2 < 1e-24:
                            continue
                        r = sqrt(r2)
                        dw = _dw_cubic(r, h)
                        # symmetric pressure gradient
                        term = -mass[q] * (pres[p] / (rho[p] * rho[p])
                                           + pres[q] / (rho[q] * rho[q])) * dw
                        # Monaghan artificial viscosity
                        vxr = ((vel[p, 0] - vel[q, 0]) * rx
                               + (vel[p, 1] - vel[q, 1]) * ry
                               + (vel[p, 2] - vel[q, 2]) * rz)
                        if vxr < 0.0:
                            mu_ij = h * vxr / (r2 + eps_h2)
                            pi_ij = -alpha_visc * c_sound * mu_ij / (0.5 * (rho[p] + rho[q]))
                            term -= mass[q] * pi_ij * dw
                        # pairwise cohesion pulls along -r_hat
                        coh = cohesion * mass[q] * _cohesion_spline(r, h)
                        ax += term * rx / r - coh * rx / r
                        ay += term * ry / r - coh * ry / r
                        az += term * rz / r - coh * rz / r
        acc_out[p, 0] = ax
        acc_out[p, 1] = ay
        acc_out[p, 2] = az
