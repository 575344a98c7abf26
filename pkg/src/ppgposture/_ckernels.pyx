# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Must stay behaviourally identical to _pykernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

cdef int MAX_DIGITS = 10
cdef unsigned long long CARRIER_LIMIT = 1ULL << 32


def parse_tokens(bytes buf):
    cdef const unsigned char[:] data = buf
    cdef Py_ssize_t n = data.shape[0]
    cdef Py_ssize_t k, start = 0
    cdef unsigned char c
    cdef unsigned long long value = 0
    cdef int digits = 0
    cdef bint bad = False
    cdef bint empty = True
    cdef long malformed = 0
    cdef list carriers = []
    for k in range(n):
        c = data[k]
        if c == 44:  # ','
            if empty or bad:
                malformed += 1
            else:
                carriers.append(value)
            value = 0
            digits = 0
            bad = False
            empty = True
            start = k + 1
        elif bad:
            continue
        elif 48 <= c <= 57:
            empty = False
            if digits > 0 or c != 48:
                digits += 1
            if digits > MAX_DIGITS:
                bad = True
            else:
                value = value * 10 + (c - 48)
                if value >= CARRIER_LIMIT:
                    bad = True
        else:
            bad = True
            empty = False
    return carriers, malformed, start


def select_onsets(filtered, baseline, double min_spacing):
    cdef double[::1] x = np.ascontiguousarray(filtered, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(baseline, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j, count = 0
    cdef Py_ssize_t last = -1
    out = np.empty(n if n > 0 else 1, dtype=np.int64)
    cdef long long[::1] o = out
    if n < 3:
        return out[:0]
    i = 1
    while i < n - 1:
        if x[i] < x[i - 1]:
            j = i
            while j < n - 1 and x[j + 1] == x[i]:
                j += 1
            if j < n - 1 and x[j + 1] > x[i]:
                if x[i] < b[i]:
                    if last < 0 or (i - last) > min_spacing:
                        o[count] = i
                        count += 1
                        last = i
                    elif x[i] < x[last]:
                        o[count - 1] = i
                        last = i
            i = j + 1
        else:
            i += 1
    return out[:count].copy()


def smo_solve(K, y, double C, double tol, long max_iter):
    cdef double[:, ::1] Km = np.ascontiguousarray(K, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0]
    alpha_arr = np.zeros(n, dtype=np.float64)
    G_arr = -np.ones(n, dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] G = G_arr
    cdef double tau = 1e-12
    cdef long it = 0
    cdef Py_ssize_t t, i, j
    cdef double gmax, gmin, yg, bb, a, obj, best
    cdef double quad, delta, diff, total, old_ai, old_aj, dai, daj
    cdef double qij
    cdef bint is_up, is_low
    while it < max_iter:
        i = -1
        gmax = -INFINITY
        gmin = INFINITY
        for t in range(n):
            yg = -yv[t] * G[t]
            if yv[t] > 0:
                is_up = alpha[t] < C
                is_low = alpha[t] > 0
            else:
                is_up = alpha[t] > 0
                is_low = alpha[t] < C
            if is_up and yg > gmax:
                gmax = yg
                i = t
            if is_low and yg < gmin:
                gmin = yg
        if i < 0 or gmin == INFINITY:
            break
        if gmax - gmin < tol:
            break
        j = -1
        best = INFINITY
        for t in range(n):
            if yv[t] > 0:
                is_low = alpha[t] > 0
            else:
                is_low = alpha[t] < C
            if not is_low:
                continue
            bb = gmax + yv[t] * G[t]
            if bb <= 0:
                continue
            a = Km[i, i] + Km[t, t] - 2.0 * Km[i, t]
            if a <= 0:
                a = tau
            obj = -(bb * bb) / a
            if obj < best:
                best = obj
                j = t
        if j < 0:
            break

        old_ai = alpha[i]
        old_aj = alpha[j]
        qij = yv[i] * yv[j] * Km[i, j]
        if yv[i] != yv[j]:
            quad = Km[i, i] + Km[j, j] + 2.0 * qij
            if quad <= 0:
                quad = tau
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            elif alpha[j] > C:
                alpha[j] = C
                alpha[i] = C + diff
        else:
            quad = Km[i, i] + Km[j, j] - 2.0 * qij
            if quad <= 0:
                quad = tau
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total
        dai = (alpha[i] - old_ai) * yv[i]
        daj = (alpha[j] - old_aj) * yv[j]
        for t in range(n):
            G[t] += yv[t] * (Km[i, t] * dai + Km[j, t] * daj)
        it += 1

    cdef double sum_free = 0.0
    cdef long nr_free = 0
    cdef double ub = INFINITY
    cdef double lb = -INFINITY
    cdef double rho
    for t in range(n):
        yg = yv[t] * G[t]
        if alpha[t] >= C:
            if yv[t] < 0:
                if yg < ub:
                    ub = yg
            elif yg > lb:
                lb = yg
        elif alpha[t] <= 0:
            if yv[t] > 0:
                if yg < ub:
                    ub = yg
            elif yg > lb:
                lb = yg
        else:
            nr_free += 1
            sum_free += yg
    if nr_free > 0:
        rho = sum_free / nr_free
    elif ub != INFINITY and lb != -INFINITY:
        rho = (ub + lb) / 2.0
    else:
        rho = 0.0
    return alpha_arr, rho, it
