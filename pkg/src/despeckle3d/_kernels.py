"""Numba kernels behind the blockwise non-local means filter.

``reference_filter`` is the semantic definition: literal nested loops over
block centers, search offsets and block voxels, recomputing every block
distance term from scratch. The optimized kernels reorder the same math
offset-major: for one search offset at a time, the per-voxel distance terms
are computed pointwise against a precomputed denominator volume and reduced
with separable window sums, yielding the distances for every block center
at once. Each output element is written by exactly one parallel iteration
and accumulated in a fixed search-offset order, so results are bitwise
independent of the thread count.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True)
def pearson_block_distance(block_i, block_j, two_gamma, eps):
    # sum_p (bi_p - bj_p)^2 / max(bj_p^(2*gamma), eps); block_j entries >= 0
    d = 0.0
    for t in range(block_i.size):
        y = block_j[t]
        den = y**two_gamma
        if den < eps:
            den = eps
        diff = block_i[t] - y
        d += diff * diff / den
    return d


@njit(cache=True)
def reference_filter(U, dims, r, m, s, pad, cx, cy, cz, two_gamma, eps, h2):
    """Blockwise non-local means by direct enumeration (sequential oracle).

    U is the mirror-padded volume; dims the original extent; r/m/s/pad the
    per-axis block radius, search half-width, center stride and pad width;
    cx/cy/cz the per-axis block-center coordinates in original voxel units.
    """
    nx, ny, nz = dims[0], dims[1], dims[2]
    bp = (2 * r[0] + 1) * (2 * r[1] + 1) * (2 * r[2] + 1)
    block_i = np.empty(bp, dtype=np.float64)
    block_j = np.empty(bp, dtype=np.float64)
    est = np.empty(bp, dtype=np.float64)
    num = np.zeros((nx, ny, nz), dtype=np.float64)
    cnt = np.zeros((nx, ny, nz), dtype=np.float64)

    for a in range(cx.size):
        for b in range(cy.size):
            for c in range(cz.size):
                # center in padded coordinates
                ox = cx[a] + pad[0]
                oy = cy[b] + pad[1]
                oz = cz[c] + pad[2]
                t = 0
                for bx in range(-r[0], r[0] + 1):
                    for by in range(-r[1], r[1] + 1):
                        for bz in range(-r[2], r[2] + 1):
                            block_i[t] = U[ox + bx, oy + by, oz + bz]
                            t += 1
                for t in range(bp):
                    est[t] = 0.0
                wsum = 0.0
                for dx in range(-m[0], m[0] + 1):
                    for dy in range(-m[1], m[1] + 1):
                        for dz in range(-m[2], m[2] + 1):
                            jx = ox + s[0] * dx
                            jy = oy + s[1] * dy
                            jz = oz + s[2] * dz
                            t = 0
                            for bx in range(-r[0], r[0] + 1):
                                for by in range(-r[1], r[1] + 1):
                                    for bz in range(-r[2], r[2] + 1):
                                        block_j[t] = U[jx + bx, jy + by, jz + bz]
                                        t += 1
                            d = pearson_block_distance(block_i, block_j, two_gamma, eps)
                            w = np.exp(-d / h2)
                            wsum += w
                            for t in range(bp):
                                est[t] += w * block_j[t]
                # restored block -> average into every covered original voxel
                t = 0
                for bx in range(-r[0], r[0] + 1):
                    for by in range(-r[1], r[1] + 1):
                        for bz in range(-r[2], r[2] + 1):
                            vx = cx[a] + bx
                            vy = cy[b] + by
                            vz = cz[c] + bz
                            if (
                                vx >= 0 and vx < nx
                                and vy >= 0 and vy < ny
                                and vz >= 0 and vz < nz
                            ):
                                num[vx, vy, vz] += est[t] / wsum
                                cnt[vx, vy, vz] += 1.0
                            t += 1
    return num / cnt


@njit(cache=True, parallel=True)
def shifted_ratio(U, Dm, E, off0, off1, off2, d0, d1, d2):
    # E[i,j,k] = (U[q] - U[q+d])^2 / Dm[q+d] with q = (i,j,k) + off
    n0, n1, n2 = E.shape
    for i in prange(n0):
        qi = i + off0
        si = qi + d0
        for j in range(n1):
            qj = j + off1
            sj = qj + d1
            for k in range(n2):
                qk = k + off2
                sk = qk + d2
                diff = U[qi, qj, qk] - U[si, sj, sk]
                E[i, j, k] = diff * diff / Dm[si, sj, sk]


@njit(cache=True, parallel=True)
def window_sum_axis0(src, dst, taps):
    n0, n1, n2 = dst.shape
    for i in prange(n0):
        for j in range(n1):
            for k in range(n2):
                acc = 0.0
                for t in range(taps):
                    acc += src[i + t, j, k]
                dst[i, j, k] = acc


@njit(cache=True, parallel=True)
def window_sum_axis1(src, dst, taps):
    n0, n1, n2 = dst.shape
    for i in prange(n0):
        for j in range(n1):
            for k in range(n2):
                acc = 0.0
                for t in range(taps):
                    acc += src[i, j + t, k]
                dst[i, j, k] = acc


@njit(cache=True, parallel=True)
def window_sum_axis2(src, dst, taps):
    n0, n1, n2 = dst.shape
    for i in prange(n0):
        for j in range(n1):
            for k in range(n2):
                acc = 0.0
                for t in range(taps):
                    acc += src[i, j, k + t]
                dst[i, j, k] = acc


@njit(cache=True, parallel=True)
def accumulate_weight(D, wsum, h2):
    # wsum += exp(-D / h2), elementwise
    n0, n1, n2 = D.shape
    for i in prange(n0):
        for j in range(n1):
            for k in range(n2):
                wsum[i, j, k] += np.exp(-D[i, j, k] / h2)


@njit(cache=True, parallel=True)
def normalized_weight(D, wsum, maskx, masky, maskz, wpad, r0, r1, r2, h2):
    # wpad[interior] = center_mask * exp(-D / h2) / wsum; borders stay zero
    n0, n1, n2 = D.shape
    for i in prange(n0):
        mx = maskx[i]
        for j in range(n1):
            mxy = mx * masky[j]
            for k in range(n2):
                w = np.exp(-D[i, j, k] / h2)
                wpad[i + r0, j + r1, k + r2] = mxy * maskz[k] * w / wsum[i, j, k]


@njit(cache=True, parallel=True)
def accumulate_output(C, U, acc, b0, b1, b2):
    # acc[p] += C[p] * U[p + b] with b = pad + step * delta
    n0, n1, n2 = acc.shape
    for i in prange(n0):
        for j in range(n1):
            for k in range(n2):
                acc[i, j, k] += C[i, j, k] * U[i + b0, j + b1, k + b2]
