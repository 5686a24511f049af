"""NumPy fallback for the trilinear sampling kernel."""

import numpy as np

# Fractional indices this close to the valid range still count as inside;
# absorbs round-trip error for points exactly on the volume boundary.
EDGE_TOL = 1e-9


def sample_trilinear(frame: np.ndarray, coords: np.ndarray) -> np.ndarray:
    ni, nj, nk = frame.shape
    fi, fj, fk = coords[:, 0], coords[:, 1], coords[:, 2]
    inside = (
        (fi >= -EDGE_TOL) & (fi <= ni - 1 + EDGE_TOL)
        & (fj >= -EDGE_TOL) & (fj <= nj - 1 + EDGE_TOL)
        & (fk >= -EDGE_TOL) & (fk <= nk - 1 + EDGE_TOL)
    )
    out = np.zeros(coords.shape[0], dtype=np.float64)
    if not inside.any():
        return out
    fi = np.clip(fi[inside], 0.0, ni - 1)
    fj = np.clip(fj[inside], 0.0, nj - 1)
    fk = np.clip(fk[inside], 0.0, nk - 1)
    i0 = np.minimum(np.floor(fi).astype(np.intp), ni - 2)
    j0 = np.minimum(np.floor(fj).astype(np.intp), nj - 2)
    k0 = np.minimum(np.floor(fk).astype(np.intp), nk - 2)
    di, dj, dk = fi - i0, fj - j0, fk - k0

    c000 = frame[i0, j0, k0].astype(np.float64)
    c001 = frame[i0, j0, k0 + 1].astype(np.float64)
    c010 = frame[i0, j0 + 1, k0].astype(np.float64)
    c011 = frame[i0, j0 + 1, k0 + 1].astype(np.float64)
    c100 = frame[i0 + 1, j0, k0].astype(np.float64)
    c101 = frame[i0 + 1, j0, k0 + 1].astype(np.float64)
    c110 = frame[i0 + 1, j0 + 1, k0].astype(np.float64)
    c111 = frame[i0 + 1, j0 + 1, k0 + 1].astype(np.float64)

    c00 = c000 * (1 - dk) + c001 * dk
    c01 = c010 * (1 - dk) + c011 * dk
    c10 = c100 * (1 - dk) + c101 * dk
    c11 = c110 * (1 - dk) + c111 * dk
    c0 = c00 * (1 - dj) + c01 * dj
    c1 = c10 * (1 - dj) + c11 * dj
    out[inside] = c0 * (1 - di) + c1 * di
    return out
