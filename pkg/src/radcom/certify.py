"""Independent constraint checks on a finished design.

Everything is recomputed from the extracted beamformers: multicast rates,
the beampattern mismatch, the total power and the rank-one residual of
the lifted matrices.
"""

from dataclasses import dataclass

import numpy as np

from . import beampattern as bp
from .hermitian import outer, rank_one_residual

RATE_TOL = 1e-6
MISMATCH_TOL = 1e-6
POWER_RTOL = 1e-6
RANK_TOL = 1e-5


@dataclass
class Certificate:
    multicast_shortfall: float
    mismatch_excess: float
    power_error: float
    rank_residual: float

    @property
    def ok(self):
        return (self.multicast_shortfall <= RATE_TOL and self.mismatch_excess <= MISMATCH_TOL
                and self.power_error <= POWER_RTOL and self.rank_residual <= RANK_TOL)


def certify(inst, sol, rbar, gamma_b):
    """Check ``sol`` (any scheme) against multicast target(s) ``rbar``."""
    ws = list(sol.ws) if hasattr(sol, "ws") else [sol.w_m, sol.w_u]
    Ws = list(sol.Ws) if hasattr(sol, "Ws") else [sol.W_m, sol.W_u]
    r_m = np.atleast_1d(np.asarray(sol.rates.r_m, float))
    shortfall = float(np.max(np.broadcast_to(rbar, r_m.shape) - r_m))
    R = sum(outer(w) for w in ws)
    ratio = bp.mismatch_ratio(R, inst.ideal, inst.desired, inst.grid)
    power = sum(float(np.vdot(w, w).real) for w in ws)
    return Certificate(
        multicast_shortfall=shortfall,
        mismatch_excess=float(ratio - gamma_b),
        power_error=abs(power - inst.p_max) / inst.p_max,
        rank_residual=max(rank_one_residual(W / inst.p_max) for W in Ws),
    )
