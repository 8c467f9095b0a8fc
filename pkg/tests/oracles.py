"""Independent reference implementations used as test oracles.

Each oracle is written from the defining formula with plain loops or a
different algorithm than the package uses, so agreement is meaningful.
"""

from __future__ import annotations

import math

import numpy as np


# -- transforms ---------------------------------------------------------------


def _alpha(u, N):
    return math.sqrt(1.0 / N) if u == 0 else math.sqrt(2.0 / N)


def naive_dct_1d(f):
    N = len(f)
    return np.array(
        [_alpha(u, N) * sum(f[x] * math.cos((2 * x + 1) * u * math.pi / (2 * N)) for x in range(N)) for u in range(N)]
    )


def naive_idct_1d(C):
    N = len(C)
    return np.array(
        [sum(_alpha(u, N) * C[u] * math.cos((2 * x + 1) * u * math.pi / (2 * N)) for u in range(N)) for x in range(N)]
    )


def naive_dct_2d(f):
    N = f.shape[0]
    out = np.zeros((N, N))
    for u in range(N):
        for v in range(N):
            s = 0.0
            for x in range(N):
                for y in range(N):
                    s += (
                        f[x, y]
                        * math.cos((2 * x + 1) * u * math.pi / (2 * N))
                        * math.cos((2 * y + 1) * v * math.pi / (2 * N))
                    )
            out[u, v] = _alpha(u, N) * _alpha(v, N) * s
    return out


def naive_dct_2d_batch(blocks):
    """The same quadruple loop over (u, v, x, y), carried out on a stack of blocks at once."""
    blocks = np.asarray(blocks, dtype=np.float64)
    N = blocks.shape[-1]
    out = np.zeros_like(blocks)
    for u in range(N):
        for v in range(N):
            s = np.zeros(blocks.shape[0])
            for x in range(N):
                for y in range(N):
                    s += (
                        blocks[:, x, y]
                        * math.cos((2 * x + 1) * u * math.pi / (2 * N))
                        * math.cos((2 * y + 1) * v * math.pi / (2 * N))
                    )
            out[:, u, v] = _alpha(u, N) * _alpha(v, N) * s
    return out


def naive_idct_2d(C):
    N = C.shape[0]
    out = np.zeros((N, N))
    for x in range(N):
        for y in range(N):
            s = 0.0
            for u in range(N):
                for v in range(N):
                    s += (
                        _alpha(u, N)
                        * _alpha(v, N)
                        * C[u, v]
                        * math.cos((2 * x + 1) * u * math.pi / (2 * N))
                        * math.cos((2 * y + 1) * v * math.pi / (2 * N))
                    )
            out[x, y] = s
    return out


def walk_zigzag(N):
    """Zigzag by simulating the JPEG scan pointer bouncing off the edges."""
    r = c = 0
    out = [(0, 0)]
    up = True
    while len(out) < N * N:
        if up:
            if c == N - 1:
                r += 1
                up = False
            elif r == 0:
                c += 1
                up = False
            else:
                r -= 1
                c += 1
        else:
            if r == N - 1:
                c += 1
                up = True
            elif c == 0:
                r += 1
                up = True
            else:
                r += 1
                c -= 1
        out.append((r, c))
    return out


# -- eigen ----------------------------------------------------------------------


def jacobi_eigenvalues(A, sweeps=100, tol=1e-15):
    """Cyclic Jacobi rotation eigensolver for a symmetric matrix."""
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(sweeps):
        off = math.sqrt(sum(A[p, q] ** 2 for p in range(n) for q in range(n) if p != q))
        if off < tol * max(1.0, np.abs(A).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J
    order = np.argsort(-np.diag(A), kind="stable")
    return np.diag(A)[order], V[:, order]


def dense_covariance(X):
    X = np.asarray(X, dtype=np.float64)
    mean = X.sum(axis=0) / X.shape[0]
    C = np.zeros((X.shape[1], X.shape[1]))
    for row in X:
        d = row - mean
        C += np.outer(d, d)
    return C / X.shape[0]


# -- histogram / intensity --------------------------------------------------------


def count_histogram(pixels, bins):
    width = 256 // bins
    counts = [0] * bins
    total = 0
    for v in np.asarray(pixels).ravel():
        q = min(max(int(math.floor(v)), 0), 255)
        counts[q // width] += 1
        total += 1
    probs = [c / total for c in counts]
    mids = [(k + 0.5) * width / 256 for k in range(bins)]
    return np.array(probs + mids)


def sort_count_intensity(pixels):
    q = sorted(min(max(int(math.floor(v)), 0), 255) for v in np.asarray(pixels).ravel())
    n = len(q)
    mean = sum(q) / n
    median = (q[n // 2 - 1] + q[n // 2]) / 2 if n % 2 == 0 else q[n // 2]
    best, best_count, run_value, run = None, -1, None, 0
    for v in q + [None]:
        if v == run_value:
            run += 1
            continue
        if run_value is not None and run > best_count:
            best, best_count = run_value, run
        run_value, run = v, 1
    return np.array([mean / 255, median / 255, best / 255])


# -- bilinear resize --------------------------------------------------------------


def bilinear_pixel(src, r, c, size=48):
    H, W = src.shape
    sy = r * (H - 1) / (size - 1)
    sx = c * (W - 1) / (size - 1)
    y0, x0 = int(math.floor(sy)), int(math.floor(sx))
    y1, x1 = min(y0 + 1, H - 1), min(x0 + 1, W - 1)
    fy, fx = sy - y0, sx - x0
    top = src[y0, x0] * (1 - fx) + src[y0, x1] * fx
    bottom = src[y1, x0] * (1 - fx) + src[y1, x1] * fx
    return min(max(top * (1 - fy) + bottom * fy, 0.0), 255.0)


# -- SVM dual ---------------------------------------------------------------------


def _project_box_hyperplane(v, y, C):
    """Euclidean projection onto {0 <= a <= C, y.a = 0}.

    ``g(lam) = y . clip(v - lam*y, 0, C)`` is piecewise linear and
    nonincreasing, so its root lies between two adjacent breakpoints and is
    found exactly by linear interpolation.
    """
    g = lambda lam: (y * np.clip(v[None, :] - np.outer(lam, y), 0.0, C)).sum(axis=1)  # noqa: E731
    bps = np.unique(np.concatenate([v / y, (v - C) / y]))
    vals = g(bps)
    if vals[0] <= 0:  # root at or left of the first breakpoint; g is flat there
        lam = bps[0]
    elif vals[-1] >= 0:
        lam = bps[-1]
    else:
        j = np.flatnonzero(vals <= 0)[0]
        lo, hi, glo, ghi = bps[j - 1], bps[j], vals[j - 1], vals[j]
        lam = lo if glo == ghi else lo + (hi - lo) * glo / (glo - ghi)
    return np.clip(v - lam * y, 0.0, C)


def projected_gradient_dual(K, y, C, iters=200000, tol=1e-13):
    """Maximise sum(a) - 1/2 a'Qa over the SVM dual feasible set with FISTA
    (adaptive restart), stopping once the projected step stalls."""
    y = np.asarray(y, dtype=np.float64)
    Q = (y[:, None] * y[None, :]) * K
    L = max(np.linalg.eigvalsh(Q).max(), 1e-12)
    a = np.zeros(len(y))
    z, t = a.copy(), 1.0
    for _ in range(iters):
        a_next = _project_box_hyperplane(z + (1.0 - Q @ z) / L, y, C)
        if np.abs(a_next - z).max() < tol * max(1.0, C):
            a = a_next
            break
        t_next = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        if (a_next - a) @ (z - a_next) > 0:  # momentum points downhill: restart
            t_next, z = 1.0, a_next
        else:
            z = a_next + ((t - 1) / t_next) * (a_next - a)
        a, t = a_next, t_next
    return float(a.sum() - 0.5 * a @ Q @ a), a


def full_alphas(model, n):
    alpha = np.zeros(n)
    alpha[model.support_indices] = np.abs(model.dual_coeffs)
    return alpha


def kkt_violation(model, X, y, tol):
    """Largest KKT violation beyond ``tol`` of a binary model on its training set (0 if none)."""
    from fusionface.svm import decision_value

    alpha = full_alphas(model, len(y))
    margins = y * decision_value(model, X)
    C = model.c_param
    worst = 0.0
    for a, m in zip(alpha, margins):
        if a <= 0:
            worst = max(worst, (1 - tol) - m)
        elif a >= C:
            worst = max(worst, m - (1 + tol))
        else:
            worst = max(worst, abs(m - 1) - tol)
    return max(worst, 0.0)
