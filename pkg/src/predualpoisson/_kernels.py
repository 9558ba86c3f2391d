"""Dense numeric kernels with an optional numba path.

Set ``PREDUALPOISSON_NUMBA=0`` before import to force the pure-numpy
implementations. Both paths compute identical quantities; the numba path
only pays off for the dense structure-constant contractions at fiber
dimensions of a few dozen and above, and for long prefix-norm sweeps.

Structure constants use the layout ``C[i, j, k] = ([e_i, e_j])_k`` and are
assumed skew in ``(i, j)``. The skew contractions below sum over ``i < j``
only, using ``x_i y_j - x_j y_i``, so swapping ``x`` and ``y`` negates the
result bit-for-bit.
"""

import os

import numpy as np

_NORM_CODES = {"p1": 0, "p2": 1, "pinf": 2}


def _want_numba() -> bool:
    return os.environ.get("PREDUALPOISSON_NUMBA", "1").strip().lower() not in (
        "0",
        "false",
        "no",
        "off",
    )


try:
    if not _want_numba():
        raise ImportError("numba disabled by PREDUALPOISSON_NUMBA")
    from numba import njit
except ImportError:
    njit = None

BACKEND = "numba" if njit is not None else "numpy"


# ---------------------------------------------------------------------------
# numpy reference path
# ---------------------------------------------------------------------------


def _skew_bilinear_np(C, x, y):
    w = np.triu(np.outer(x, y) - np.outer(y, x), 1)
    return np.einsum("ij,ijk->k", w, C)


def _ad_star_np(C, x, phi):
    return np.einsum("i,ijk,k->j", x, C, phi)


def _phi_matrix_np(C, phi):
    return C @ phi


def _skew_pairing_np(M, x, y):
    w = np.triu(np.outer(x, y) - np.outer(y, x), 1)
    return float(np.sum(w * M))


def _prefix_norms_np(x, dims, code):
    a = np.abs(x)
    if code == 0:
        acc = np.cumsum(a)
    elif code == 1:
        acc = np.sqrt(np.cumsum(a * a))
    else:
        acc = np.maximum.accumulate(a) if a.size else a
    return acc[np.asarray(dims, dtype=np.int64) - 1]


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if njit is not None:

    @njit(cache=True)
    def _skew_bilinear_nb(C, x, y):
        n = x.shape[0]
        nk = C.shape[2]
        out = np.zeros(nk)
        for i in range(n):
            for j in range(i + 1, n):
                w = x[i] * y[j] - x[j] * y[i]
                if w != 0.0:
                    for k in range(nk):
                        out[k] += w * C[i, j, k]
        return out

    @njit(cache=True)
    def _ad_star_nb(C, x, phi):
        n = C.shape[0]
        nj = C.shape[1]
        nk = C.shape[2]
        out = np.zeros(nj)
        for i in range(n):
            xi = x[i]
            if xi == 0.0:
                continue
            for j in range(nj):
                s = 0.0
                for k in range(nk):
                    s += C[i, j, k] * phi[k]
                out[j] += xi * s
        return out

    @njit(cache=True)
    def _phi_matrix_nb(C, phi):
        n = C.shape[0]
        nj = C.shape[1]
        nk = C.shape[2]
        out = np.zeros((n, nj))
        for i in range(n):
            for j in range(nj):
                s = 0.0
                for k in range(nk):
                    s += C[i, j, k] * phi[k]
                out[i, j] = s
        return out

    @njit(cache=True)
    def _skew_pairing_nb(M, x, y):
        n = x.shape[0]
        s = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                s += (x[i] * y[j] - x[j] * y[i]) * M[i, j]
        return s

    @njit(cache=True)
    def _prefix_norms_nb(x, dims, code):
        out = np.empty(dims.shape[0])
        acc = 0.0
        pos = 0
        for d in range(dims.shape[0]):
            stop = dims[d]
            while pos < stop:
                a = abs(x[pos])
                if code == 0:
                    acc += a
                elif code == 1:
                    acc += a * a
                elif a > acc:
                    acc = a
                pos += 1
            out[d] = np.sqrt(acc) if code == 1 else acc
        return out


def skew_bilinear(C, x, y):
    """``C(x, y)`` for skew constants, exactly antisymmetric in ``(x, y)``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if njit is not None:
        return _skew_bilinear_nb(C, x, y)
    return _skew_bilinear_np(C, x, y)


def ad_star(C, x, phi):
    """Transpose of ``y -> C(x, y)`` applied to ``phi``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    if njit is not None:
        return _ad_star_nb(C, x, phi)
    return _ad_star_np(C, x, phi)


def phi_matrix(C, phi):
    """Matrix ``M[i, j] = <C(e_i, e_j), phi>``."""
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    if njit is not None:
        return _phi_matrix_nb(C, phi)
    return _phi_matrix_np(C, phi)


def skew_pairing(M, x, y):
    """``sum_{i<j} (x_i y_j - x_j y_i) M[i, j]`` for a skew matrix ``M``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if njit is not None:
        return float(_skew_pairing_nb(np.ascontiguousarray(M), x, y))
    return _skew_pairing_np(M, x, y)


def prefix_norms(x, dims, tag):
    """Norms of the prefixes ``x[:N]`` for each ``N`` in ``dims`` (increasing)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    dims = np.ascontiguousarray(dims, dtype=np.int64)
    code = _NORM_CODES[tag]
    if njit is not None:
        return _prefix_norms_nb(x, dims, code)
    return _prefix_norms_np(x, dims, code)


# Direct handles on both implementations, for tests and the benchmark.
NUMPY_KERNELS = {
    "skew_bilinear": _skew_bilinear_np,
    "ad_star": _ad_star_np,
    "phi_matrix": _phi_matrix_np,
    "skew_pairing": _skew_pairing_np,
    "prefix_norms": lambda x, dims, tag: _prefix_norms_np(
        np.asarray(x, dtype=np.float64), dims, _NORM_CODES[tag]
    ),
}

if njit is not None:
    NUMBA_KERNELS = {
        "skew_bilinear": _skew_bilinear_nb,
        "ad_star": _ad_star_nb,
        "phi_matrix": _phi_matrix_nb,
        "skew_pairing": _skew_pairing_nb,
        "prefix_norms": lambda x, dims, tag: _prefix_norms_nb(
            np.ascontiguousarray(x, dtype=np.float64),
            np.ascontiguousarray(dims, dtype=np.int64),
            _NORM_CODES[tag],
        ),
    }
else:
    NUMBA_KERNELS = {}
