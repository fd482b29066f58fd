"""Independent reference implementations used only to check the library.

Everything here is deliberately naive: plain-Python counting loops for the
threshold sweep, a quadratic-space edit distance, and central finite
differences for gradients. None of it shares code with the package.
"""

import numpy as np

SWEEP = [i / 100.0 for i in range(101)]


def brute_force_det(positives, negatives):
    """(far, frr) lists over the fixed sweep, counted one score at a time."""
    far, frr = [], []
    for t in SWEEP:
        fa = sum(1 for s in negatives if s >= t)
        fr = sum(1 for s in positives if s < t)
        far.append(fa / len(negatives))
        frr.append(fr / len(positives))
    return far, frr


def brute_force_eer(positives, negatives):
    """EER by the documented rule: grid equality, else interpolation of the
    bracketing segment, else the min-|FAR-FRR| point."""
    far, frr = brute_force_det(positives, negatives)
    diff = [fa - fr for fa, fr in zip(far, frr)]
    for i, d in enumerate(diff):
        if d == 0.0:
            return far[i]
    for i in range(len(diff) - 1):
        if diff[i] * diff[i + 1] < 0.0:
            denom = (far[i + 1] - far[i]) - (frr[i + 1] - frr[i])
            alpha = (frr[i] - far[i]) / denom
            return far[i] + alpha * (far[i + 1] - far[i])
    best = min(range(len(diff)), key=lambda i: abs(diff[i]))
    return far[best]


def brute_force_auc(positives, negatives):
    """Trapezoidal area of FRR over FAR, curve sorted by FAR and extended
    horizontally to FAR=0 and FAR=1."""
    far, frr = brute_force_det(positives, negatives)
    pts = sorted(zip(far, frr))
    if pts[0][0] > 0.0:
        pts.insert(0, (0.0, pts[0][1]))
    if pts[-1][0] < 1.0:
        pts.append((1.0, pts[-1][1]))
    area = 0.0
    for (f0, r0), (f1, r1) in zip(pts, pts[1:]):
        area += (f1 - f0) * (r0 + r1) / 2.0
    return area


def slow_levenshtein(a, b):
    """Full-matrix edit distance."""
    n, m = len(a), len(b)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[n][m]


def finite_diff(fn, arr, step=1e-5):
    """Central-difference gradient of scalar fn with respect to arr."""
    arr = np.asarray(arr, dtype=np.float64)
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = fn(arr)
        flat[i] = orig - step
        lo = fn(arr)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * step)
    return grad


def rel_error(a, b, eps=1e-10):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    denom = max(np.linalg.norm(a), np.linalg.norm(b), eps)
    return float(np.linalg.norm(a - b) / denom)
