"""Independent reference implementations used to check the real code.

Everything here is deliberately naive: dense linear algebra, exhaustive
scans, O(n^2) loops.  Slow but obviously correct, which is the point.
"""

from itertools import combinations

import numpy as np


def dense_qp_oracle(P, c, G, h, tol=1e-9):
    """Globally optimal QP solution by dense active-set enumeration.

    Tries active sets in order of increasing size and returns the first
    primal-dual pair that satisfies every KKT condition.  Strict convexity
    makes that pair the unique optimum.  Exponential in the number of
    constraints, so callers keep m small.
    """
    P = np.asarray(P, dtype=float)
    c = np.asarray(c, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    n = c.size
    m = h.size
    for size in range(min(m, n) + 1):
        for active in combinations(range(m), size):
            act = list(active)
            Ga = G[act]
            K = np.block([[P, Ga.T], [Ga, np.zeros((size, size))]])
            rhs = np.concatenate([-c, h[act]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x = sol[:n]
            lam = np.zeros(m)
            lam[act] = -sol[n:]
            if np.any(lam[act] < -tol):
                continue
            if np.any(G @ x - h < -tol):
                continue
            return x, lam
    raise RuntimeError("enumeration found no KKT point; problem infeasible?")


def make_known_optimum_qp(rng, n, m, n_active):
    """Random strictly convex QP whose optimum is known by construction.

    Picks the optimizer, an active set, and strictly positive multipliers
    first, then back-solves for c and h so the KKT conditions hold exactly
    with strict complementarity.  Returns (P, c, G, h, x_star).
    """
    L = rng.normal(size=(n, n))
    P = L @ L.T + n * np.eye(n)
    G = rng.normal(size=(m, n))
    x_star = rng.normal(size=n)
    active = rng.choice(m, size=n_active, replace=False) if n_active else np.array([], dtype=int)
    lam = np.zeros(m)
    lam[active] = rng.uniform(0.1, 2.0, size=n_active)
    c = G.T @ lam - P @ x_star
    h = G @ x_star - rng.uniform(0.1, 2.0, size=m)
    h[active] = (G @ x_star)[active]
    return P, c, G, h, x_star


def naive_moving_average(x, w):
    """Centered moving average with edge windows clipped to the signal."""
    x = np.asarray(x, dtype=float)
    half = w // 2
    out = np.empty_like(x)
    for i in range(x.size):
        lo = max(0, i - half)
        hi = min(x.size, i + half + 1)
        out[i] = x[lo:hi].mean()
    return out


def naive_downsample_bins(n, fs, target_hz):
    """Sample-index bins used by rate reduction, one loop at a time."""
    return [int(np.floor(i / fs * target_hz)) for i in range(n)]


def naive_iir(b, a, x):
    """Direct-form transposed-nothing recurrence, scalar Python floats."""
    y = [0.0] * len(x)
    for i in range(len(x)):
        acc = 0.0
        for k in range(len(b)):
            if i - k >= 0:
                acc += b[k] * x[i - k]
        for k in range(1, len(a)):
            if i - k >= 0:
                acc -= a[k] * y[i - k]
        y[i] = acc
    return np.array(y)


def naive_window_scan(x, fs, onset_thr, offset_thr, min_dur_s):
    """Brute-force re-derivation of the onset/offset window scan."""
    windows = []
    n = len(x)
    i = 0
    while i < n:
        above = x[i] > onset_thr
        prev_below = i == 0 or x[i - 1] <= onset_thr
        if above and prev_below:
            j = i + 1
            while j < n and x[j] > offset_thr:
                j += 1
            off = j if j < n else n - 1
            if off > i and (off - i) / fs >= min_dur_s:
                windows.append((i, off))
            i = off + 1
        else:
            i += 1
    return windows


def naive_peaks(x, windows, amp_thr):
    """Earliest argmax per window; emit when amplitude strictly exceeds."""
    out = []
    for onset, offset in windows:
        seg = x[onset : offset + 1]
        best = 0
        for k in range(1, len(seg)):
            if seg[k] > seg[best]:
                best = k
        amp = seg[best] - x[onset]
        if amp > amp_thr:
            out.append((onset + best, amp))
    return out


def naive_conv1d(x, w, b):
    """Valid cross-correlation, one output element per triple loop."""
    c_out, c_in, k = w.shape
    t = x.shape[1] - k + 1
    out = np.zeros((c_out, t))
    for o in range(c_out):
        for j in range(t):
            acc = b[o]
            for i in range(c_in):
                for u in range(k):
                    acc += w[o, i, u] * x[i, j + u]
            out[o, j] = acc
    return out


def naive_maxpool1d(x, width):
    c, t = x.shape
    t_out = t // width
    out = np.zeros((c, t_out))
    for ch in range(c):
        for j in range(t_out):
            out[ch, j] = x[ch, j * width : (j + 1) * width].max()
    return out


def naive_knn_predict(train_X, train_y, q, k):
    """Exhaustive neighbor sort with the same tie conventions:

    distance ties resolve by training index, vote ties by smaller label.
    """
    d2 = [float(((train_X[i] - q) ** 2).sum()) for i in range(len(train_X))]
    order = sorted(range(len(d2)), key=lambda i: (d2[i], i))[:k]
    votes = {}
    for i in order:
        votes[int(train_y[i])] = votes.get(int(train_y[i]), 0) + 1
    best = max(votes.values())
    return min(label for label, cnt in votes.items() if cnt == best)


def gaussian_nb_loglik(x, prior, mean, var):
    """Class log-score as a plain formula, summed feature by feature."""
    ll = np.log(prior)
    for j in range(len(x)):
        ll += -0.5 * np.log(2.0 * np.pi * var[j]) - (x[j] - mean[j]) ** 2 / (2.0 * var[j])
    return ll
