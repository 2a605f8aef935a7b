"""Batched small-matrix helpers.  A leading axis of length R indexes restarts."""

from __future__ import annotations

import itertools

import numpy as np


def mode_dot(x: np.ndarray, j: int, m: np.ndarray) -> np.ndarray:
    """Contract mode ``j`` of batched tensor ``x`` (R, d0, ..., d_{N-1}) with
    batched matrices ``m`` (R, r, d_j).  ``x`` may have batch size 1."""
    xm = np.moveaxis(x, j + 1, -1)
    shp = xm.shape
    y = xm.reshape(shp[0], -1, shp[-1]) @ np.swapaxes(m, -1, -2)
    y = y.reshape((y.shape[0],) + shp[1:-1] + (m.shape[-2],))
    return np.moveaxis(y, -1, j + 1)


def multilinear(t: np.ndarray, mats) -> np.ndarray:
    """Apply batched matrices ``mats[j]`` (R, r_j, 3) or None along each mode of
    the unbatched tensor ``t``; result has a leading batch axis."""
    x = t[None]
    for j, m in enumerate(mats):
        if m is not None:
            x = mode_dot(x, j, m)
    return x


def unfold(x: np.ndarray, j: int) -> np.ndarray:
    """(R, d0, ...) -> (R, d_j, prod(others))."""
    xm = np.moveaxis(x, j + 1, 1)
    return xm.reshape(xm.shape[0], xm.shape[1], -1)


def top_eigvecs(g: np.ndarray, r: int) -> np.ndarray:
    """Rows are the ``r`` leading eigenvectors of each symmetric matrix in ``g``."""
    _, v = np.linalg.eigh(g)
    return np.swapaxes(v[..., ::-1][..., :r], -1, -2)


def sym2_top(d: np.ndarray):
    """Largest eigenvalue and its unit eigenvector for stacked symmetric 2x2 matrices."""
    a, b, c = d[..., 0, 0], d[..., 0, 1], d[..., 1, 1]
    half = (a - c) / 2
    rad = np.hypot(half, b)
    lam = (a + c) / 2 + rad
    # leading eigenvector sits at angle atan2(2b, a - c) / 2; exactly unit length
    theta = 0.5 * np.arctan2(2 * b, a - c)
    vec = np.empty(theta.shape + (2,))
    vec[..., 0] = np.cos(theta)
    vec[..., 1] = np.sin(theta)
    return lam, vec


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # np.cross has a large per-call overhead for the tiny batches used here
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def plane_bases(normals: np.ndarray) -> np.ndarray:
    """Orthonormal basis (..., 2, 3) of the plane orthogonal to each unit normal."""
    helper = np.where(np.abs(normals[..., :1]) < 0.9, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    out = np.empty(normals.shape[:-1] + (2, 3))
    e1 = _cross(normals, helper)
    e1 /= np.sqrt((e1 * e1).sum(axis=-1, keepdims=True))
    out[..., 0, :] = e1
    out[..., 1, :] = _cross(normals, e1)
    return out


def fibonacci_sphere(m: int) -> np.ndarray:
    i = np.arange(m) + 0.5
    polar = np.arccos(1 - 2 * i / m)
    azim = np.pi * (1 + 5**0.5) * i
    return np.stack([np.cos(azim) * np.sin(polar), np.sin(azim) * np.sin(polar), np.cos(polar)], axis=1)


# Only the axis of a plane matters, so half the sphere suffices.
_GRID = fibonacci_sphere(512)
_GRID = _GRID[_GRID[:, 2] >= 0]
_GRID_BASES = plane_bases(_GRID)
# e_a e_b^T flattened, so that e_a.M.e_b for every grid plane is one matmul with M.ravel()
_GRID_OUTER = {
    (i, j): np.einsum("gi,gj->gij", _GRID_BASES[:, i], _GRID_BASES[:, j]).reshape(-1, 9).T
    for i, j in ((0, 0), (0, 1), (1, 1))
}
_GRID_TRACE = _GRID_OUTER[0, 0] + _GRID_OUTER[1, 1]


def _quad(g: np.ndarray, v: np.ndarray) -> np.ndarray:
    return ((g @ v[..., None])[..., 0] * v).sum(axis=-1)


def _perp_top(g: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Leading eigenvector of ``g`` restricted to the plane orthogonal to ``v``."""
    e = plane_bases(v)
    gp = e @ g @ np.swapaxes(e, -1, -2)
    _, c = sym2_top(gp)
    return (c[:, None, :] @ e)[:, 0]


def best_orthonormal_pair(a: np.ndarray, b: np.ndarray, u0: np.ndarray, w0: np.ndarray,
                          polish: int = 8):
    """Approximately maximise u.A.u + w.B.w over orthonormal pairs (u, w).

    For a fixed plane with normal n the optimum is closed form
    (top eigenvalue of A - B on the plane plus the trace of B there), so the
    search runs over plane normals: a fixed hemisphere grid plus the current
    pair's plane, then alternating exact single-vector updates.  The returned
    value is never below that of (u0, w0).
    """
    r = a.shape[0]
    idx = np.arange(r)
    # grid planes: only the three distinct entries of each projected 2x2 block are needed
    d = a - b
    d_flat = d.reshape(r, 9)
    dg = np.empty((r, _GRID.shape[0], 2, 2))
    dg[..., 0, 0] = d_flat @ _GRID_OUTER[0, 0]
    dg[..., 0, 1] = dg[..., 1, 0] = d_flat @ _GRID_OUTER[0, 1]
    dg[..., 1, 1] = d_flat @ _GRID_OUTER[1, 1]
    tr_b = b.reshape(r, 9) @ _GRID_TRACE
    lam, c = sym2_top(dg)
    vals = lam + tr_b
    best = np.argmax(vals, axis=1)
    eb, c = _GRID_BASES[best], c[idx, best]
    u = (c[:, None, :] @ eb)[:, 0]
    w = (np.stack([-c[:, 1], c[:, 0]], axis=1)[:, None, :] @ eb)[:, 0]
    # the current pair's own plane competes with the best grid plane
    cur = np.stack([u0, w0], axis=1)
    dc = cur @ d @ np.swapaxes(cur, -1, -2)
    lam_c, c_c = sym2_top(dc)
    own = lam_c + _quad(b, u0) + _quad(b, w0) > vals[idx, best]
    u = np.where(own[:, None], (c_c[:, None, :] @ cur)[:, 0], u)
    w = np.where(own[:, None], (np.stack([-c_c[:, 1], c_c[:, 0]], axis=1)[:, None, :] @ cur)[:, 0], w)
    for _ in range(polish):
        w = _perp_top(b, u)
        u = _perp_top(a, w)
    new = _quad(a, u) + _quad(b, w)
    old = _quad(a, u0) + _quad(b, w0)
    keep = new < old
    u = np.where(keep[:, None], u0, u)
    w = np.where(keep[:, None], w0, w)
    return u, w, np.maximum(new, old)


def permutation_frames() -> np.ndarray:
    """The six axis-permutation frames (rows are permuted unit vectors)."""
    eye = np.eye(3)
    return np.stack([eye[list(p)] for p in itertools.permutations(range(3))])


def seed_frames(restarts: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """(restarts, count, 3, 3) initial frames.  The first restarts use the same
    axis-permutation frame for every slot (identity first); the rest are
    independent Haar-random rotations."""
    perms = permutation_frames()
    n_perm = min(restarts, len(perms))
    out = np.empty((restarts, count, 3, 3))
    out[:n_perm] = perms[:n_perm, None]
    n_rand = restarts - n_perm
    if n_rand:
        q, rr = np.linalg.qr(rng.normal(size=(n_rand * count, 3, 3)))
        q = q * np.sign(np.diagonal(rr, axis1=-2, axis2=-1))[:, None, :]
        # rows of q^T are orthonormal; flip to proper rotations
        q = np.swapaxes(q, -1, -2)
        flip = np.linalg.det(q) < 0
        q[flip, 0] *= -1
        out[n_perm:] = q.reshape(n_rand, count, 3, 3)
    return out
