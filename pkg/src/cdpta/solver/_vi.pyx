# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled robust value-iteration sweep over a CSR choice system."""

import numpy as np
from libc.math cimport fabs
from libc.stdlib cimport malloc, free


cdef inline bint _before(long long a, long long b, const long long[::1] col,
                         const double[::1] x, bint maximize) noexcept nogil:
    cdef double va = x[col[a]]
    cdef double vb = x[col[b]]
    if va == vb:
        return col[a] < col[b]
    if maximize:
        return va > vb
    return va < vb


cdef double _row_value(long long start, long long end, const long long[::1] col,
                       const double[::1] lo, const double[::1] hi, const double[::1] x,
                       long long* order, bint maximize) noexcept nogil:
    cdef long long n = end - start
    cdef long long i, j, k, key
    cdef double budget = 1.0
    cdef double total = 0.0
    cdef double room, add
    for i in range(n):
        order[i] = start + i
        budget -= lo[start + i]
        total += lo[start + i] * x[col[start + i]]
    for i in range(1, n):
        key = order[i]
        j = i - 1
        while j >= 0 and _before(key, order[j], col, x, maximize):
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = key
    for i in range(n):
        if budget <= 0.0:
            break
        k = order[i]
        room = hi[k] - lo[k]
        add = room if room < budget else budget
        total += add * x[col[k]]
        budget -= add
    return total


def value_iteration(const long long[::1] state_ptr, const long long[::1] choice_ptr,
                    const long long[::1] col, const double[::1] lo, const double[::1] hi,
                    double[::1] x, const unsigned char[::1] fixed, bint maximize,
                    double eps, long long max_iter):
    """Jacobi sweeps until the sup-norm change drops below ``eps``.

    ``x`` holds the initial vector and receives the result.  Returns
    ``(iterations, converged)``.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef long long widest = 1
    cdef long long c, s, it = 0
    cdef double best, v, delta, d
    cdef bint converged = False, first
    for c in range(choice_ptr.shape[0] - 1):
        if choice_ptr[c + 1] - choice_ptr[c] > widest:
            widest = choice_ptr[c + 1] - choice_ptr[c]
    cdef long long* order = <long long*> malloc(widest * sizeof(long long))
    if order == NULL:
        raise MemoryError()
    cdef double[::1] y = np.array(x, dtype=np.float64)
    try:
        with nogil:
            while it < max_iter:
                it += 1
                delta = 0.0
                for s in range(n):
                    if fixed[s] or state_ptr[s] == state_ptr[s + 1]:
                        y[s] = x[s]
                        continue
                    first = True
                    best = 0.0
                    for c in range(state_ptr[s], state_ptr[s + 1]):
                        v = _row_value(choice_ptr[c], choice_ptr[c + 1], col, lo, hi, x, order, maximize)
                        if first or (maximize and v > best) or (not maximize and v < best):
                            best = v
                            first = False
                    y[s] = best
                    d = fabs(best - x[s])
                    if d > delta:
                        delta = d
                for s in range(n):
                    x[s] = y[s]
                if delta < eps:
                    converged = True
                    break
    finally:
        free(order)
    return it, converged
