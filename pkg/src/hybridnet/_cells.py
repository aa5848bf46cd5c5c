"""Compiled kernel that draws one uniform point per Voronoi cell.

Each cell is computed exactly by half-plane clipping against nearby nuclei,
found through a uniform bucket grid.  Clipping stops once every nucleus that
could still cut the polygon (closer than twice its circumradius) has been
visited.  A point is then drawn uniformly from the polygon and rejected if it
falls outside the circular window.

The starting polygon comes from an octant bound.  Split the plane around the
nucleus into eight 45 degree wedges and let w_k be any neighbour in wedge k.
A point z of wedge k is closer to w_k than to the nucleus once
|z| > |w_k| / (2 cos 45deg), so the cell lies in the disk of radius
max_k |w_k| / sqrt(2).  Without a neighbour in every wedge the start is an
octagon around the whole window.
"""

import math

import numpy as np
from numba import njit

_OCT_SIDES = 8
_OCT_X = np.array([math.cos((2 * k + 1) * math.pi / _OCT_SIDES) for k in range(_OCT_SIDES)])
_OCT_Y = np.array([math.sin((2 * k + 1) * math.pi / _OCT_SIDES) for k in range(_OCT_SIDES)])
# circumradius of an octagon with unit inradius, padded against rounding
_OCT_SCALE = (1.0 + 1e-9) / math.cos(math.pi / _OCT_SIDES)
# Cells near the rim are cut by tangent lines of the window around the nucleus direction.
_TANGENT_ANGLES = (0.0, 0.3, -0.3, 0.6, -0.6)
# Average nuclei per bucket.  Rings 0.._INNER_RINGS are always gathered, more
# (up to _MAX_GATHER_RINGS) while some wedge is still empty.
_BUCKET_LOAD = 1.0
_INNER_RINGS = 1
_MAX_GATHER_RINGS = 4


@njit(cache=True, nogil=True)
def _build_grid(points, half_width, m):
    """Counting sort of the points into an m x m grid over [-half_width, half_width]^2.

    Returns bucket offsets, the coordinates in bucket order, and for every point
    its bucket and its position in that order.
    """
    n = points.shape[0]
    h = 2.0 * half_width / m
    bucket = np.empty(n, np.int64)
    starts = np.zeros(m * m + 1, np.int64)
    for i in range(n):
        cx = int((points[i, 0] + half_width) / h)
        cy = int((points[i, 1] + half_width) / h)
        cx = min(max(cx, 0), m - 1)
        cy = min(max(cy, 0), m - 1)
        b = cy * m + cx
        bucket[i] = b
        starts[b + 1] += 1
    for b in range(m * m):
        starts[b + 1] += starts[b]
    fill = starts[:-1].copy()
    sx = np.empty(n)
    sy = np.empty(n)
    pos = np.empty(n, np.int64)
    for i in range(n):
        b = bucket[i]
        s = fill[b]
        sx[s] = points[i, 0]
        sy[s] = points[i, 1]
        pos[i] = s
        fill[b] += 1
    return starts, sx, sy, bucket, pos


@njit(cache=True, nogil=True, inline="always")
def _clip(poly, src, nv, ax, ay, c):
    # Keep the part of poly[src] with ax*x + ay*y <= c, written to poly[1 - src].
    dst = 1 - src
    nout = 0
    x1 = poly[src, 0, nv - 1]
    y1 = poly[src, 1, nv - 1]
    s1 = ax * x1 + ay * y1 - c
    for k in range(nv):
        x2 = poly[src, 0, k]
        y2 = poly[src, 1, k]
        s2 = ax * x2 + ay * y2 - c
        if (s1 <= 0.0) != (s2 <= 0.0):
            t = s1 / (s1 - s2)
            poly[dst, 0, nout] = x1 + t * (x2 - x1)
            poly[dst, 1, nout] = y1 + t * (y2 - y1)
            nout += 1
        if s2 <= 0.0:
            poly[dst, 0, nout] = x2
            poly[dst, 1, nout] = y2
            nout += 1
        x1 = x2
        y1 = y2
        s1 = s2
    return nout


@njit(cache=True, nogil=True, inline="always")
def _reaches(poly, src, nv, ax, ay, c):
    # Largest ax*x + ay*y over the vertices, compared against c.
    top = -np.inf
    for k in range(nv):
        v = ax * poly[src, 0, k] + ay * poly[src, 1, k]
        top = max(top, v)
    return top > c


@njit(cache=True, nogil=True, inline="always")
def _max_radius2(poly, src, nv):
    r2 = 0.0
    for k in range(nv):
        d2 = poly[src, 0, k] * poly[src, 0, k] + poly[src, 1, k] * poly[src, 1, k]
        r2 = max(r2, d2)
    return r2


@njit(cache=True, nogil=True)
def _ring_buckets(bx, by, ring, m, out):
    # Buckets at Chebyshev distance exactly ``ring`` from (bx, by).
    if ring == 0:
        out[0] = by * m + bx
        return 1
    nb = 0
    lo = max(bx - ring, 0)
    hi = min(bx + ring, m - 1)
    if by - ring >= 0:
        for cx in range(lo, hi + 1):
            out[nb] = (by - ring) * m + cx
            nb += 1
    if by + ring < m:
        for cx in range(lo, hi + 1):
            out[nb] = (by + ring) * m + cx
            nb += 1
    lo = max(by - ring + 1, 0)
    hi = min(by + ring - 1, m - 1)
    if bx - ring >= 0:
        for cy in range(lo, hi + 1):
            out[nb] = cy * m + bx - ring
            nb += 1
    if bx + ring < m:
        for cy in range(lo, hi + 1):
            out[nb] = cy * m + bx + ring
            nb += 1
    return nb


@njit(cache=True, nogil=True)
def voronoi_cell(i, radius, grid, m, poly, work, bbuf):
    """Cell of nucleus ``i`` intersected with a polygon enclosing the window disk.

    ``grid`` is the tuple from :func:`_build_grid`; ``work`` is a (3, n + 8)
    scratch array.  Vertices are left in ``poly[src]`` relative to the
    nucleus, counter-clockwise.  Returns ``(src, nv)``.
    """
    starts, sx, sy, bucket, pos = grid
    h = 2.0 * radius / m
    me = pos[i]
    xi = sx[me]
    yi = sy[me]
    bx = bucket[i] % m
    by = bucket[i] // m
    # rows of ``work``: dx, dy, squared distance; slots 0..7 hold the wedge-nearest
    cx_ = work[0]
    cy_ = work[1]
    cd_ = work[2]
    for k in range(8):
        cd_[k] = np.inf

    nc = 8
    ring = -1
    bound2 = np.inf
    while ring < _INNER_RINGS or (bound2 == np.inf and ring < _MAX_GATHER_RINGS):
        ring += 1
        nb = _ring_buckets(bx, by, ring, m, bbuf)
        for bi in range(nb):
            b = bbuf[bi]
            for s in range(starts[b], starts[b + 1]):
                if s == me:
                    continue
                dx = sx[s] - xi
                dy = sy[s] - yi
                dd = dx * dx + dy * dy
                cx_[nc] = dx
                cy_[nc] = dy
                cd_[nc] = dd
                nc += 1
                k = 4 * (dy < 0.0) + 2 * (dx < 0.0) + (abs(dx) < abs(dy))
                if dd < cd_[k]:
                    cx_[k] = dx
                    cy_[k] = dy
                    cd_[k] = dd
        bound2 = 0.0
        for k in range(8):
            bound2 = max(bound2, cd_[k])
    bound2 *= 0.5

    ri = math.hypot(xi, yi)
    if bound2 < np.inf and math.sqrt(bound2) < radius + ri:
        r_oct = math.sqrt(bound2) * _OCT_SCALE
        ox = 0.0
        oy = 0.0
    else:
        r_oct = radius * _OCT_SCALE
        ox = -xi
        oy = -yi
    for k in range(_OCT_SIDES):
        poly[0, 0, k] = r_oct * _OCT_X[k] + ox
        poly[0, 1, k] = r_oct * _OCT_Y[k] + oy
    src = 0
    nv = _OCT_SIDES
    if ri > radius - 4.0 * h:
        phi = math.atan2(yi, xi)
        for dphi in _TANGENT_ANGLES:
            ux = math.cos(phi + dphi)
            uy = math.sin(phi + dphi)
            # window lies in {x : u.x <= R}; shifted to nucleus-relative coordinates
            c = radius - ux * xi - uy * yi
            if _reaches(poly, src, nv, ux, uy, c):
                nv = _clip(poly, src, nv, ux, uy, c)
                src = 1 - src

    # wedge-nearest neighbours come first; they usually carry the cell's edges
    rmax2 = _max_radius2(poly, src, nv)
    for c in range(nc):
        dd = cd_[c]
        # a bisector beyond the farthest vertex cannot cut the polygon
        if dd >= 4.0 * rmax2 or not _reaches(poly, src, nv, cx_[c], cy_[c], 0.5 * dd):
            continue
        nv = _clip(poly, src, nv, cx_[c], cy_[c], 0.5 * dd)
        src = 1 - src
        rmax2 = _max_radius2(poly, src, nv)

    # rings 0..ring cover every nucleus within ring*h of nucleus i
    while (ring * h) ** 2 < 4.0 * rmax2 and ring <= m:
        ring += 1
        nb = _ring_buckets(bx, by, ring, m, bbuf)
        for bi in range(nb):
            b = bbuf[bi]
            for s in range(starts[b], starts[b + 1]):
                dx = sx[s] - xi
                dy = sy[s] - yi
                dd = dx * dx + dy * dy
                if dd >= 4.0 * rmax2 or not _reaches(poly, src, nv, dx, dy, 0.5 * dd):
                    continue
                nv = _clip(poly, src, nv, dx, dy, 0.5 * dd)
                src = 1 - src
                rmax2 = _max_radius2(poly, src, nv)
    return src, nv


@njit(cache=True, nogil=True)
def place_mobiles(points, radius, rng, budget):
    """Uniform point in (cell ∩ window) for every nucleus.

    Returns ``(mobiles, failed)`` where ``failed`` is -1 on success or the index
    of the first cell that exhausted ``budget`` candidates.
    """
    n = points.shape[0]
    mobiles = np.empty((n, 2))
    # bucket side chosen so an average bucket inside the disk holds _BUCKET_LOAD
    m = max(1, int(2.0 * math.sqrt(n / (math.pi * _BUCKET_LOAD))))
    grid = _build_grid(points, radius, m)
    cap = n + _OCT_SIDES + len(_TANGENT_ANGLES) + 2
    poly = np.empty((2, 2, cap))
    cum = np.empty(cap)
    work = np.empty((3, n + 8))
    bbuf = np.empty(8 * m + 8, np.int64)
    r2 = radius * radius
    for i in range(n):
        src, nv = voronoi_cell(i, radius, grid, m, poly, work, bbuf)
        total = 0.0
        for k in range(nv):
            k2 = k + 1 if k + 1 < nv else 0
            total += 0.5 * abs(poly[src, 0, k] * poly[src, 1, k2]
                               - poly[src, 1, k] * poly[src, 0, k2])
            cum[k] = total
        placed = False
        for _ in range(budget):
            u = rng.random() * total
            k = 0
            while k < nv - 1 and cum[k] < u:
                k += 1
            k2 = k + 1 if k + 1 < nv else 0
            s = rng.random()
            t = rng.random()
            if s + t > 1.0:
                s = 1.0 - s
                t = 1.0 - t
            x = points[i, 0] + s * poly[src, 0, k] + t * poly[src, 0, k2]
            y = points[i, 1] + s * poly[src, 1, k] + t * poly[src, 1, k2]
            if x * x + y * y <= r2:
                mobiles[i, 0] = x
                mobiles[i, 1] = y
                placed = True
                break
        if not placed:
            return mobiles, i
    return mobiles, -1


@njit(cache=True, nogil=True)
def uniform_disk(rng, n, radius):
    """``n`` uniform points on the disk; radii are drawn first, then angles."""
    pts = np.empty((n, 2))
    for k in range(n):
        pts[k, 0] = radius * math.sqrt(rng.random())
    for k in range(n):
        t = 2.0 * math.pi * rng.random()
        r = pts[k, 0]
        pts[k, 0] = r * math.cos(t)
        pts[k, 1] = r * math.sin(t)
    return pts


@njit(cache=True, nogil=True)
def sample_cells(rng, density, radius, budget):
    """PPP on the window with a point prepended at the origin, plus one mobile per cell."""
    n = rng.poisson(density * math.pi * radius * radius)
    bs = np.zeros((n + 1, 2))
    bs[1:] = uniform_disk(rng, n, radius)
    mobiles, failed = place_mobiles(bs, radius, rng, budget)
    return bs, mobiles, failed


@njit(cache=True, nogil=True)
def unit_interference(mobiles, K, alpha):
    """Sum of |U|^-alpha over mobiles[1:] except the K closest to the origin.

    Ranking is by distance with ties kept in index order.
    """
    n = mobiles.shape[0] - 1
    if K >= n:
        return 0.0
    d2 = np.empty(n)
    for k in range(n):
        d2[k] = mobiles[k + 1, 0] ** 2 + mobiles[k + 1, 1] ** 2
    keep = np.ones(n, np.bool_)
    if K > 0:
        rank = np.argsort(d2, kind="mergesort")
        for k in range(K):
            keep[rank[k]] = False
    half = -0.5 * alpha
    total = 0.0
    for k in range(n):
        if keep[k]:
            total += d2[k] ** half
    return total


@njit(cache=True, nogil=True)
def outage_trial(rng, density, radius, budget, K, alpha):
    """Signal gain |U_0|^-alpha and unit-power interference for one realization.

    Returns ``(signal, interference, failed_cell, n_cells)``.
    """
    bs, mobiles, failed = sample_cells(rng, density, radius, budget)
    if failed >= 0:
        return 0.0, 0.0, failed, bs.shape[0]
    d2 = mobiles[0, 0] ** 2 + mobiles[0, 1] ** 2
    return d2 ** (-0.5 * alpha), unit_interference(mobiles, K, alpha), -1, bs.shape[0]
