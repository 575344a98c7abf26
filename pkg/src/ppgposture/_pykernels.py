"""Pure-Python/numpy implementations of the hot kernels.

Mirrors ``_ckernels.pyx`` signature for signature; used when the compiled
extension is unavailable or ``PPGPOSTURE_PURE_PYTHON`` is set.
"""

import numpy as np

CARRIER_LIMIT = 1 << 32
_MAX_DIGITS = 10


def parse_tokens(buf):
    """Parse comma-terminated unsigned decimal tokens from ``buf``.

    Returns ``(carriers, malformed, consumed)`` where ``consumed`` is the
    number of bytes up to and including the last comma. Bytes after the
    last comma are an incomplete token and are left for the caller.
    """
    carriers = []
    malformed = 0
    start = 0
    find = buf.find
    while True:
        comma = find(b",", start)
        if comma < 0:
            break
        tok = buf[start:comma]
        start = comma + 1
        if not tok or not tok.isdigit():
            malformed += 1
            continue
        stripped = tok.lstrip(b"0")
        if len(stripped) > _MAX_DIGITS:
            malformed += 1
            continue
        value = int(tok)
        if value >= CARRIER_LIMIT:
            malformed += 1
            continue
        carriers.append(value)
    return carriers, malformed, start


def select_onsets(filtered, baseline, min_spacing):
    """Greedy onset selection over strict local minima.

    A candidate is a strict local minimum (plateaus collapse to their
    leftmost sample) lying below ``baseline``. Scanning left to right, a
    candidate more than ``min_spacing`` samples after the last accepted onset
    is appended; a closer one replaces the last accepted onset only if it is
    strictly deeper.
    """
    x = np.asarray(filtered, dtype=np.float64)
    b = np.asarray(baseline, dtype=np.float64)
    n = x.shape[0]
    out = []
    if n < 3:
        return np.array(out, dtype=np.int64)
    last = -1
    i = 1
    while i < n - 1:
        if x[i] < x[i - 1]:
            j = i
            while j < n - 1 and x[j + 1] == x[i]:
                j += 1
            if j < n - 1 and x[j + 1] > x[i]:
                if x[i] < b[i]:
                    if last < 0 or i - last > min_spacing:
                        out.append(i)
                        last = i
                    elif x[i] < x[last]:
                        out[-1] = i
                        last = i
            i = j + 1
        else:
            i += 1
    return np.array(out, dtype=np.int64)


def smo_solve(K, y, C, tol, max_iter):
    """Solve the C-SVM dual with second-order working-set selection.

    ``K`` is the (n, n) kernel matrix and ``y`` holds +1/-1 labels.
    Returns ``(alpha, rho, n_iter)``; the decision function is
    ``sum(alpha * y * K[:, x]) - rho``.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    tau = 1e-12
    alpha = np.zeros(n)
    G = -np.ones(n)
    QD = np.diag(K).copy()
    it = 0
    while it < max_iter:
        yG = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        cand = np.where(up, yG, -np.inf)
        i = int(np.argmax(cand))
        gmax = cand[i]
        gmin = np.min(np.where(low, yG, np.inf))
        if gmax - gmin < tol:
            break
        b = gmax - yG
        mask = low & (b > 0)
        if not mask.any():
            break
        a = QD[i] + QD - 2.0 * K[i]
        a = np.where(a > 0, a, tau)
        obj = np.where(mask, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))

        Qi = y[i] * y * K[i]
        Qj = y[j] * y * K[j]
        old_ai = alpha[i]
        old_aj = alpha[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Qi[j]
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
            quad = QD[i] + QD[j] - 2.0 * Qi[j]
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
        G += Qi * (alpha[i] - old_ai) + Qj * (alpha[j] - old_aj)
        it += 1

    yG = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        rho = float(np.mean(yG[free]))
    else:
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = np.min(yG[ub_mask]) if ub_mask.any() else np.inf
        lb = np.max(yG[lb_mask]) if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2.0) if np.isfinite(ub + lb) else 0.0
    return alpha, rho, it
