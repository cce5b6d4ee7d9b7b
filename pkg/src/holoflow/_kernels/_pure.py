"""Pure-Python kernels for sparse exterior-algebra term arithmetic.

Blades are bit masks over axes 0..N-1 (bit i set means the basis covector
of axis i is a factor of the blade).  A form is a pair of parallel arrays:
``masks`` (int64, strictly increasing) and ``coeffs``, which is 1-d for
scalar-valued forms (float64 or complex128) and 3-d with shape
(nterms, d, d) for matrix-valued forms.  Every kernel returns a canonical
term list: masks sorted ascending, duplicate blades merged, exact zeros
dropped.

These are the reference implementations.  ``holoflow._kernels`` swaps in
the compiled versions from ``_speedups`` when they are available; the two
must agree bit for bit on float64 inputs.
"""

import numpy as np

_INT = np.int64


def reorder_sign(a, b):
    """Sign of merging two disjoint ascending blades into one sorted blade."""
    swaps = 0
    x = int(a) >> 1
    b = int(b)
    while x:
        swaps += (x & b).bit_count()
        x >>= 1
    return -1.0 if swaps & 1 else 1.0


def _pack_scalar(acc, dtype):
    if not acc:
        return np.zeros(0, dtype=_INT), np.zeros(0, dtype=dtype)
    masks = []
    coeffs = []
    for m in sorted(acc):
        c = acc[m]
        if c != 0:
            masks.append(m)
            coeffs.append(c)
    return np.asarray(masks, dtype=_INT), np.asarray(coeffs, dtype=dtype)


def _pack_matrix(acc, d, dtype):
    masks = []
    coeffs = []
    for m in sorted(acc):
        c = acc[m]
        if np.any(c):
            masks.append(m)
            coeffs.append(c)
    if not masks:
        return np.zeros(0, dtype=_INT), np.zeros((0, d, d), dtype=dtype)
    return np.asarray(masks, dtype=_INT), np.asarray(coeffs, dtype=dtype)


def wedge_ss(masks_a, ca, masks_b, cb):
    """Wedge of two scalar-valued term lists."""
    acc = {}
    for i in range(len(masks_a)):
        ma = int(masks_a[i])
        ai = ca[i]
        for j in range(len(masks_b)):
            mb = int(masks_b[j])
            if ma & mb:
                continue
            m = ma | mb
            acc[m] = acc.get(m, 0) + reorder_sign(ma, mb) * ai * cb[j]
    return _pack_scalar(acc, np.result_type(ca.dtype, cb.dtype))


def wedge_mm(masks_a, ca, masks_b, cb):
    """Wedge of two matrix-valued term lists (coefficients multiply in order)."""
    d = ca.shape[1] if ca.shape[0] else cb.shape[1]
    acc = {}
    for i in range(len(masks_a)):
        ma = int(masks_a[i])
        ai = ca[i]
        for j in range(len(masks_b)):
            mb = int(masks_b[j])
            if ma & mb:
                continue
            m = ma | mb
            term = reorder_sign(ma, mb) * (ai @ cb[j])
            if m in acc:
                acc[m] = acc[m] + term
            else:
                acc[m] = term
    return _pack_matrix(acc, d, np.complex128)


def wedge_sm(masks_a, ca, masks_b, cb):
    """Wedge of a scalar-valued list with a matrix-valued list."""
    d = cb.shape[1] if cb.shape[0] else 1
    acc = {}
    for i in range(len(masks_a)):
        ma = int(masks_a[i])
        ai = ca[i]
        for j in range(len(masks_b)):
            mb = int(masks_b[j])
            if ma & mb:
                continue
            m = ma | mb
            term = (reorder_sign(ma, mb) * ai) * cb[j]
            if m in acc:
                acc[m] = acc[m] + term
            else:
                acc[m] = term
    return _pack_matrix(acc, d, np.complex128)


def wedge_ms(masks_a, ca, masks_b, cb):
    """Wedge of a matrix-valued list with a scalar-valued list."""
    d = ca.shape[1] if ca.shape[0] else 1
    acc = {}
    for i in range(len(masks_a)):
        ma = int(masks_a[i])
        ai = ca[i]
        for j in range(len(masks_b)):
            mb = int(masks_b[j])
            if ma & mb:
                continue
            m = ma | mb
            term = (reorder_sign(ma, mb) * cb[j]) * ai
            if m in acc:
                acc[m] = acc[m] + term
            else:
                acc[m] = term
    return _pack_matrix(acc, d, np.complex128)


def interior_scalar(masks, coeffs, v):
    """Contraction of a scalar-valued term list with the vector v."""
    acc = {}
    for i in range(len(masks)):
        m = int(masks[i])
        c = coeffs[i]
        rem = m
        while rem:
            low = rem & -rem
            j = low.bit_length() - 1
            rem ^= low
            vj = v[j]
            if vj != 0.0:
                sign = -1.0 if (m & (low - 1)).bit_count() & 1 else 1.0
                key = m ^ low
                acc[key] = acc.get(key, 0) + sign * vj * c
    return _pack_scalar(acc, np.result_type(coeffs.dtype, np.float64))


def interior_matrix(masks, coeffs, v):
    """Contraction of a matrix-valued term list with the vector v."""
    d = coeffs.shape[1] if coeffs.shape[0] else 1
    acc = {}
    for i in range(len(masks)):
        m = int(masks[i])
        c = coeffs[i]
        rem = m
        while rem:
            low = rem & -rem
            j = low.bit_length() - 1
            rem ^= low
            vj = v[j]
            if vj != 0.0:
                sign = -1.0 if (m & (low - 1)).bit_count() & 1 else 1.0
                key = m ^ low
                term = (sign * vj) * c
                if key in acc:
                    acc[key] = acc[key] + term
                else:
                    acc[key] = term
        # zero-grade terms contract to nothing
    return _pack_matrix(acc, d, np.complex128)


def hodge_scalar(masks, coeffs, dim, orientation):
    """Identity-metric Hodge dual of a scalar-valued term list."""
    full = (1 << dim) - 1
    acc = {}
    for i in range(len(masks)):
        m = int(masks[i])
        comp = full ^ m
        acc[comp] = acc.get(comp, 0) + orientation * reorder_sign(m, comp) * coeffs[i]
    return _pack_scalar(acc, np.result_type(coeffs.dtype, np.float64))


def hodge_matrix(masks, coeffs, dim, orientation):
    """Identity-metric Hodge dual of a matrix-valued term list."""
    d = coeffs.shape[1] if coeffs.shape[0] else 1
    full = (1 << dim) - 1
    acc = {}
    for i in range(len(masks)):
        m = int(masks[i])
        comp = full ^ m
        term = (orientation * reorder_sign(m, comp)) * coeffs[i]
        if comp in acc:
            acc[comp] = acc[comp] + term
        else:
            acc[comp] = term
    return _pack_matrix(acc, d, np.complex128)


def canonicalize_scalar(masks, coeffs):
    acc = {}
    for i in range(len(masks)):
        m = int(masks[i])
        acc[m] = acc.get(m, 0) + coeffs[i]
    return _pack_scalar(acc, coeffs.dtype)


def canonicalize_matrix(masks, coeffs):
    d = coeffs.shape[1] if coeffs.shape[0] else 1
    acc = {}
    for i in range(len(masks)):
        m = int(masks[i])
        if m in acc:
            acc[m] = acc[m] + coeffs[i]
        else:
            acc[m] = coeffs[i].copy()
    return _pack_matrix(acc, d, np.complex128)
