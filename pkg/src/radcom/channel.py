"""Scenario geometry, ULA steering vectors, path loss and seeded channels.

Everything downstream works in noise-normalised units: receiver noise
power is 1 and the total transmit power is the transmit SNR
``10**(gamma_p_db / 10)``. Channel vectors keep their path-loss
amplitude, so the full-power single-user SNR is ``p_max * g``.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ContractViolation

NOISE_DBM = -100.0


@dataclass
class Scenario:
    n_antennas: int = 4
    k_pairs: int = 1
    r_angles_deg: list = field(default_factory=lambda: [0.0])
    d_r: float = 1000.0
    d_c: float = 100.0
    l0_db: float = 40.0
    gamma_p_db: float = 110.0
    rbar_m: float = 0.5
    gamma_b_db: float = -10.0
    seed: int = 0

    def __post_init__(self):
        self.r_angles_deg = [float(a) for a in self.r_angles_deg]
        self.validate()

    def validate(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 2:
            raise ContractViolation("n_antennas must be an integer >= 2")
        if int(self.k_pairs) != self.k_pairs or self.k_pairs < 1:
            raise ContractViolation("k_pairs must be an integer >= 1")
        if len(self.r_angles_deg) != self.k_pairs:
            raise ContractViolation(
                f"r_angles_deg has {len(self.r_angles_deg)} entries, expected k_pairs={self.k_pairs}"
            )
        if any(not (-90.0 < a < 90.0) for a in self.r_angles_deg):
            raise ContractViolation("R-user angles must lie strictly inside (-90, 90) degrees")
        if not (self.d_r > 0 and self.d_c > 0):
            raise ContractViolation("distances must be positive")
        if not (self.rbar_m >= 0):
            raise ContractViolation("rbar_m must be non-negative")
        for name in ("l0_db", "gamma_p_db", "gamma_b_db"):
            if not np.isfinite(getattr(self, name)):
                raise ContractViolation(f"{name} must be finite")

    @property
    def p_max_linear(self):
        return 10.0 ** (self.gamma_p_db / 10.0)

    @property
    def gamma_b(self):
        """Linear mismatch tolerance."""
        return 10.0 ** (self.gamma_b_db / 10.0)

    def as_dict(self):
        return asdict(self)


@dataclass
class ChannelSet:
    """Per-pair channels, rows indexed by pair: ``h_r[k]``, ``h_c[k]``."""

    h_r: np.ndarray
    h_c: np.ndarray
    p_max_linear: float
    scenario: Scenario = None

    @property
    def k_pairs(self):
        return self.h_r.shape[0]

    @property
    def n_antennas(self):
        return self.h_r.shape[1]

    def gram(self, which, k):
        """``h h^H`` for the R-user (``which='r'``) or C-user of pair ``k``."""
        h = (self.h_r if which == "r" else self.h_c)[k]
        return np.outer(h, h.conj())


def steering_vector(theta_deg, n):
    """Half-wavelength ULA response ``exp(j pi i sin(theta))``, ``i = 0..n-1``."""
    if n < 1:
        raise ContractViolation("array size must be positive")
    i = np.arange(n)
    return np.exp(1j * np.pi * i * np.sin(np.deg2rad(theta_deg)))


def steering_matrix(angles_deg, n):
    """Rows are steering vectors for each angle."""
    i = np.arange(n)
    return np.exp(1j * np.pi * np.outer(np.sin(np.deg2rad(np.asarray(angles_deg))), i))


def path_loss_db(model, d, l0_db=40.0):
    """Log-distance path loss: exponent 2 for ``"LoS"``, 3 for ``"NLoS"``."""
    if d < 1:
        raise ContractViolation(f"distance {d} m is below the 1 m reference")
    exponent = {"LoS": 20.0, "NLoS": 30.0}
    if model not in exponent:
        raise ContractViolation(f"unknown path-loss model {model!r}")
    return l0_db + exponent[model] * np.log10(d)


def pair_rng(seed, k):
    """Counter-based generator for pair ``k`` of a trial seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(k)])))


def generate_channels(scenario, seed=None):
    """Draw the channels of every pair.

    The R-user link is deterministic line of sight toward its angle; the
    C-user link is Rayleigh with variance ``10**(-L_C/10)`` per antenna.
    Each pair uses its own substream so adding pairs does not perturb
    the earlier ones.
    """
    seed = scenario.seed if seed is None else seed
    n, K = scenario.n_antennas, scenario.k_pairs
    g_r = 10.0 ** (-path_loss_db("LoS", scenario.d_r, scenario.l0_db) / 10.0)
    g_c = 10.0 ** (-path_loss_db("NLoS", scenario.d_c, scenario.l0_db) / 10.0)
    h_r = np.empty((K, n), dtype=complex)
    h_c = np.empty((K, n), dtype=complex)
    for k in range(K):
        h_r[k] = np.sqrt(g_r) * steering_vector(scenario.r_angles_deg[k], n)
        rng = pair_rng(seed, k)
        re, im = rng.standard_normal((2, n))
        h_c[k] = np.sqrt(g_c / 2.0) * (re + 1j * im)
    return ChannelSet(h_r=h_r, h_c=h_c, p_max_linear=scenario.p_max_linear, scenario=scenario)
