"""Numba stencils for the staggered lattice (periodic indexing).

Layout, with node (i, j, k) at (i h, j h, k h):
  Ex[i,j,k] at (i+1/2, j, k)       Bx[i,j,k] at (i, j+1/2, k+1/2)
  Ey[i,j,k] at (i, j+1/2, k)       By[i,j,k] at (i+1/2, j, k+1/2)
  Ez[i,j,k] at (i, j, k+1/2)       Bz[i,j,k] at (i+1/2, j+1/2, k)
Every cell is written by exactly one iteration, so results do not depend on
the thread count.
"""
import numba as nb
import numpy as np

# an old system TBB only produces a warning before numba falls back; skip it
if nb.config.THREADING_LAYER == "default":
    nb.config.THREADING_LAYER = "workqueue"

FOUR_PI = 4.0 * np.pi


@nb.njit(parallel=True, cache=True)
def advance_faces(Ex, Ey, Ez, Bx, By, Bz, jx, jy, jz, a, c, inv_h):
    """B <- B - a (c curl E + 4 pi j) with the forward (edge -> face) curl."""
    nx, ny, nz = Ex.shape
    for i in nb.prange(nx):
        ip = i + 1 if i + 1 < nx else 0
        for j in range(ny):
            jp = j + 1 if j + 1 < ny else 0
            for k in range(nz):
                kp = k + 1 if k + 1 < nz else 0
                cx = (Ez[i, jp, k] - Ez[i, j, k] - Ey[i, j, kp] + Ey[i, j, k]) * inv_h
                cy = (Ex[i, j, kp] - Ex[i, j, k] - Ez[ip, j, k] + Ez[i, j, k]) * inv_h
                cz = (Ey[ip, j, k] - Ey[i, j, k] - Ex[i, jp, k] + Ex[i, j, k]) * inv_h
                Bx[i, j, k] = Bx[i, j, k] - a * (c * cx + FOUR_PI * jx[i, j, k])
                By[i, j, k] = By[i, j, k] - a * (c * cy + FOUR_PI * jy[i, j, k])
                Bz[i, j, k] = Bz[i, j, k] - a * (c * cz + FOUR_PI * jz[i, j, k])


@nb.njit(parallel=True, cache=True)
def advance_edges(Ex, Ey, Ez, Bx, By, Bz, jx, jy, jz, a, c, inv_h):
    """E <- E + a (c curl B - 4 pi j) with the backward (face -> edge) curl."""
    nx, ny, nz = Ex.shape
    for i in nb.prange(nx):
        im = i - 1 if i > 0 else nx - 1
        for j in range(ny):
            jm = j - 1 if j > 0 else ny - 1
            for k in range(nz):
                km = k - 1 if k > 0 else nz - 1
                cx = (Bz[i, j, k] - Bz[i, jm, k] - By[i, j, k] + By[i, j, km]) * inv_h
                cy = (Bx[i, j, k] - Bx[i, j, km] - Bz[i, j, k] + Bz[im, j, k]) * inv_h
                cz = (By[i, j, k] - By[im, j, k] - Bx[i, j, k] + Bx[i, jm, k]) * inv_h
                Ex[i, j, k] = Ex[i, j, k] + a * (c * cx - FOUR_PI * jx[i, j, k])
                Ey[i, j, k] = Ey[i, j, k] + a * (c * cy - FOUR_PI * jy[i, j, k])
                Ez[i, j, k] = Ez[i, j, k] + a * (c * cz - FOUR_PI * jz[i, j, k])


@nb.njit(parallel=True, cache=True)
def divergence_nodes(Ex, Ey, Ez, inv_h):
    """Backward-difference divergence of edge data, located at nodes."""
    nx, ny, nz = Ex.shape
    out = np.empty((nx, ny, nz))
    for i in nb.prange(nx):
        im = i - 1 if i > 0 else nx - 1
        for j in range(ny):
            jm = j - 1 if j > 0 else ny - 1
            for k in range(nz):
                km = k - 1 if k > 0 else nz - 1
                out[i, j, k] = (Ex[i, j, k] - Ex[im, j, k]
                                + Ey[i, j, k] - Ey[i, jm, k]
                                + Ez[i, j, k] - Ez[i, j, km]) * inv_h
    return out


@nb.njit(parallel=True, cache=True)
def divergence_centers(Bx, By, Bz, inv_h):
    """Forward-difference divergence of face data, located at cell centers."""
    nx, ny, nz = Bx.shape
    out = np.empty((nx, ny, nz))
    for i in nb.prange(nx):
        ip = i + 1 if i + 1 < nx else 0
        for j in range(ny):
            jp = j + 1 if j + 1 < ny else 0
            for k in range(nz):
                kp = k + 1 if k + 1 < nz else 0
                out[i, j, k] = (Bx[ip, j, k] - Bx[i, j, k]
                                + By[i, jp, k] - By[i, j, k]
                                + Bz[i, j, kp] - Bz[i, j, k]) * inv_h
    return out
