"""Independent reference computations used by several test modules."""

import numpy as np
from scipy.optimize import minimize


def pattern_n2(z, p, s):
    """Pattern of ``R = p [[a, z], [z*, 1 - a]]`` at ``sin(theta) = s``."""
    return p * (1.0 + 2.0 * np.real(np.multiply.outer(z, np.exp(1j * np.pi * s))))


def best_fit(P, g):
    """min over delta >= 0 of ``||delta g - P||^2`` (rows of ``P``)."""
    delta = np.maximum(P @ g / (g @ g), 0.0)
    r = delta[..., None] * g - P
    return np.sum(r * r, axis=-1)


def brute_force_ideal_n2(gains, angles_deg, p):
    """Grid search over ``(a, rho, phi)`` with ``|z| = rho sqrt(a (1 - a))``,
    polished by Nelder-Mead from the best grid point."""
    s = np.sin(np.deg2rad(angles_deg))
    rho, phi = np.meshgrid(np.linspace(0, 1, 101), np.linspace(0, 2 * np.pi, 361))
    best = (np.inf, None)
    for a in np.linspace(0.0, 1.0, 41):
        z = rho * np.sqrt(a * (1 - a)) * np.exp(1j * phi)
        err = best_fit(pattern_n2(z, p, s), gains)
        i = np.unravel_index(np.argmin(err), err.shape)
        if err[i] < best[0]:
            best = (err[i], (a, rho[i], phi[i]))

    def f(v):
        a = np.clip(v[0], 0, 1)
        r = np.clip(v[1], 0, 1)
        z = r * np.sqrt(a * (1 - a)) * np.exp(1j * v[2])
        return float(best_fit(pattern_n2(np.array([z]), p, s), gains)[0])

    res = minimize(f, np.array(best[1]), method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14 * best[0], "maxiter": 4000})
    return min(best[0], res.fun)


def rates_scalar(hc, hr, ws, am, au):
    """Per-pair cluster NOMA rates by explicit loops."""
    K = len(ws)
    out = []
    for k in range(K):
        row = {}
        for name, h in (("c", hc[k]), ("r", hr[k])):
            own = abs(np.vdot(h, ws[k])) ** 2
            inter = sum(abs(np.vdot(h, ws[i])) ** 2 for i in range(K) if i != k)
            row["m" + name] = np.log2(1 + am[k] * own / (au[k] * own + inter + 1))
            if name == "c":
                row["u"] = np.log2(1 + au[k] * own / (inter + 1))
        out.append(row)
    return out


def one_sided_lower(d, conf=0.95):
    """Lower confidence bound of the mean of paired differences ``d``."""
    from scipy import stats

    d = np.asarray(d, float)
    n = len(d)
    return d.mean() - stats.t.ppf(conf, n - 1) * d.std(ddof=1) / np.sqrt(n)
