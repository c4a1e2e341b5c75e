"""Brute-force constructions used as oracles for the iteration lemmas.

Two kinds of objects are built here:

* maximal sampled functions: the pointwise-largest nonincreasing
  function satisfying a recursive decay hypothesis on a grid, built by
  taking the running minimum of every pairwise bound; any correct
  envelope must dominate these;
* explicit iterations of the recursions at equality, which reproduce
  the extinction/decay claims step by step without using the
  closed-form predictions.
"""

import numpy as np


def maximal_decay(xs, f0, C, alpha, beta):
    """Largest nonincreasing sample with f(y) <= C (y-x)^{-a} f(x)^b for all pairs."""
    xs = np.asarray(xs, dtype=float)
    vals = np.empty_like(xs)
    vals[0] = f0
    for j in range(1, len(xs)):
        gaps = xs[j] - xs[:j]
        bounds = C * gaps**-alpha * vals[:j] ** beta
        vals[j] = min(vals[j - 1], float(np.min(bounds)))
    return vals


def maximal_decay_inhomogeneous(xs, f0, c0, alpha, beta, S_tilde, R):
    """Largest nonincreasing sample satisfying the inhomogeneous hypothesis."""
    xs = np.asarray(xs, dtype=float)
    vals = np.empty_like(xs)
    vals[0] = f0
    src_exp = alpha / (beta - 1.0)
    for j in range(1, len(xs)):
        gaps = xs[j] - xs[:j]
        source = vals[:j] + S_tilde * (R - xs[:j]) ** src_exp
        bounds = c0 * gaps**-alpha * source**beta
        vals[j] = min(vals[j - 1], float(np.min(bounds)))
    return vals


def dyadic_log_iteration(C, alpha, beta, f0, d, n_steps=80):
    """log f_k for the dyadic recursion f_{k+1} = C 2^{(k+1)a} f_k^b / d^a.

    This is the extinction-case recursion at the dyadic points
    x_k = x0 + d (1 - 2^{-k}); working in logs avoids overflow when the
    chosen d is below the critical extinction width.
    """
    logs = [np.log(f0)]
    for k in range(n_steps):
        logs.append(
            np.log(C)
            + (k + 1) * alpha * np.log(2.0)
            + beta * logs[-1]
            - alpha * np.log(d)
        )
    return np.array(logs)


def inhomogeneous_iteration(c0, alpha, beta, S_tilde, R, f0, n_steps=80):
    """g_k for the recursion at the ladder xi_k = R (1 - 2^{-k}).

    g_{k+1} = c0 / (xi_{k+1}-xi_k)^a (g_k + S_tilde (R-xi_k)^{a/(b-1)})^b.
    """
    src_exp = alpha / (beta - 1.0)
    g = [f0]
    for k in range(n_steps):
        gap = R * 2.0 ** -(k + 1)
        tail = R * 2.0**-k
        nxt = c0 * gap**-alpha * (g[-1] + S_tilde * tail**src_exp) ** beta
        if not np.isfinite(nxt) or nxt > 1e200:
            g.append(np.inf)
            break
        g.append(nxt)
    return np.array(g)


def geometric_iteration(f0, eps, nu, tiny=1e-16):
    """Positions s_k and values f_k of the equality chain f_{k+1} = eps f_k^nu
    with steps s_{k+1} = s_k + f_k."""
    ss, fs = [0.0], [f0]
    while fs[-1] > tiny and len(fs) < 10000:
        ss.append(ss[-1] + fs[-1])
        fs.append(eps * fs[-1] ** nu)
    return np.array(ss), np.array(fs)


def piecewise_constant_sample(xs, breakpoints, levels, beyond=0.0):
    """Sample the right-continuous step function with the given levels."""
    idx = np.searchsorted(breakpoints, xs, side="right") - 1
    vals = np.where(idx < len(levels), np.take(levels, idx, mode="clip"), beyond)
    vals[idx >= len(levels)] = beyond
    return vals
