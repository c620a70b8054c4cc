"""Parameter schedules for the two-loop SL0 iteration.

Four derivations are provided:

* :func:`derive_schedule_known_gamma` uses a certified ``gamma(n0)`` and
  yields every constant needed for guaranteed recovery within ``delta``.
* :func:`derive_schedule_gaussian` plugs in the Gaussian-ensemble asymptotics
  (``rho(alpha)``, ``gamma(alpha, beta*)``) in place of a certified ``gamma``.
* :func:`derive_schedule_noisy_theorem4` gives the noisy schedule with the
  ``C * eps`` error bound.
* :func:`derive_schedule_heuristic` is a plain geometric schedule with
  user-chosen constants and no guarantee.

All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .constants import gaussian_gamma, rho
from .dictionary import Dictionary
from .errors import DegenerateInput, DeltaTooSmall, InvalidKPrime, SparsityTooHigh

MODES = ("guaranteed", "gaussian", "noisy", "heuristic")

HEURISTIC_C = 0.7
HEURISTIC_L = 10
HEURISTIC_MU = 2.0
HEURISTIC_SHAPE = 3.0
HEURISTIC_SIGMA_MIN_RATIO = 1e-3
HEURISTIC_SIGMA1_FACTOR = 2.0

NOISY_STEP_CAP = 2000
NOISY_TOL = 1e-10


@dataclass(frozen=True)
class SL0Schedule:
    """Everything the solver needs, plus the constants that justify it.

    ``sigma`` is the decreasing sequence ``sigma_1 .. sigma_J``; the solver
    performs ``steps`` ascent updates per level with step ``mu * sigma^2`` on
    the objective of shape ``shape``.  When ``inner_tol > 0`` a level ends
    early once an update moves the point by at most ``inner_tol * sigma``.
    Theoretical fields are ``None`` for the heuristic mode.
    """

    mode: str
    m: int
    sigma: np.ndarray
    steps: int
    mu: float
    shape: float
    guaranteed: bool
    inner_tol: float = 0.0
    n: int | None = None
    n0: int | None = None
    gamma: float | None = None
    k: int | None = None
    Delta: float | None = None
    k_prime: float | None = None
    k_double_prime: float | None = None
    gamma_prime: float | None = None
    delta_target: float | None = None
    delta_prime: float | None = None
    eps: float = 0.0
    c: float | None = None
    L: int | None = None
    lambda_min_prime: float | None = None
    lambda_max_prime: float | None = None
    kappa_prime: float | None = None
    CR_prime: float | None = None
    C: float | None = None
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        sig = np.array(self.sigma, dtype=np.float64).ravel()
        if sig.size < 1 or not np.all(np.isfinite(sig)) or np.any(sig <= 0):
            raise ValueError("sigma must be a nonempty sequence of positive finite values")
        if np.any(np.diff(sig) >= 0):
            raise ValueError("sigma must be strictly decreasing")
        sig.setflags(write=False)
        object.__setattr__(self, "sigma", sig)
        if self.steps < 0 or not self.mu > 0 or not self.shape > 0:
            raise ValueError("need steps >= 0, mu > 0 and shape > 0")

    @property
    def J(self) -> int:
        return int(self.sigma.size)

    @property
    def sigma1(self) -> float:
        return float(self.sigma[0])

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sigma"] = [float(v) for v in self.sigma]
        out["J"] = self.J
        out["notes"] = list(self.notes)
        return out

    def summary(self) -> dict:
        """Scalars only (``sigma`` reduced to its endpoints)."""
        out = self.to_dict()
        sig = out.pop("sigma")
        out["sigma_1"], out["sigma_J"] = sig[0], sig[-1]
        return out


def geometric(sigma1: float, sigma_J: float, J: int) -> np.ndarray:
    """``sigma1 * c^(j-1)`` for ``j = 1..J`` with ``c`` chosen to land on ``sigma_J``."""
    if J == 1:
        return np.array([sigma1])
    return np.exp(np.linspace(math.log(sigma1), math.log(sigma_J), J))


def _fig2_core(
    m: int, n0: int, gamma: float, k: int, delta: float, eps: float, norm_A: float
) -> dict:
    """Constants that do not depend on the measurement (``sigma_1`` excluded)."""
    budget = n0 / (2.0 * (1.0 + gamma))
    if not k < budget:
        raise SparsityTooHigh(f"k={k} is not below n0/(2(1+gamma))={budget:.6g}")
    Delta = (budget - k) / (4.0 * m)
    if not Delta > 0:
        raise SparsityTooHigh(f"Delta={Delta} is not positive")
    k1 = k + m * Delta
    k2 = k + 2 * m * Delta
    gamma_p = n0 / (2.0 * (k + 3 * m * Delta)) - 1.0
    C = (4.0 / (Delta * math.sqrt(gamma + 1.0)) + 1.0) * norm_A
    if eps > 0 and not delta > C * eps:
        raise DeltaTooSmall(f"delta={delta:g} must exceed C*eps={C * eps:g}")
    delta_p = delta - norm_A * eps
    if not delta_p > 0:
        raise DeltaTooSmall(f"delta'={delta_p:g} is not positive")
    sigma_J = delta_p / (2.0 * math.sqrt(m * (gamma_p + 1.0)))
    lam_max = 2.0 / (1.0 + gamma)
    lam_min = 2.0 * (gamma_p - gamma) / ((1.0 + gamma) * (gamma_p**2 + gamma_p))
    mu = 2.0 / (lam_min + lam_max)
    kappa = lam_max / lam_min
    CR = (kappa - 1.0) / (kappa + 1.0)
    L = math.ceil((-math.log(Delta / 4.0) - 0.5 * math.log(gamma_p + 1.0)) / -math.log(CR)) + 1
    return dict(
        m=m, n0=n0, gamma=gamma, k=k, Delta=Delta, k_prime=k1, k_double_prime=k2,
        gamma_prime=gamma_p, delta_target=delta, delta_prime=delta_p, eps=eps,
        sigma_J=sigma_J, lambda_min_prime=lam_min, lambda_max_prime=lam_max, mu=mu,
        kappa_prime=kappa, CR_prime=CR, L=L, C=C,
    )


def _finish(core: dict, sigma1: float, mode: str, n: int | None, notes=()) -> SL0Schedule:
    sigma_J = core.pop("sigma_J")
    if not sigma1 > sigma_J:
        raise DegenerateInput(
            f"sigma_1={sigma1:g} does not exceed sigma_J={sigma_J:g}; the start point is already within reach"
        )
    ratio = math.log(sigma1) - math.log(sigma_J)
    J = math.ceil(ratio / math.log1p(core["Delta"] / 2.0)) + 1
    c = math.exp(-ratio / (J - 1))
    return SL0Schedule(
        mode=mode, sigma=geometric(sigma1, sigma_J, J), steps=core["L"] - 1,
        shape=core["gamma_prime"], guaranteed=True, c=c, n=n, notes=tuple(notes), **core,
    )


def derive_schedule_known_gamma(
    d: Dictionary, n0: int, gamma: float, k: int, delta_target: float, eps: float, x
) -> SL0Schedule:
    """Schedule that provably recovers the sparsest solution within ``delta_target``.

    Parameters
    ----------
    d : Dictionary
    n0 : int
        Support size at which ``gamma`` was certified.
    gamma : float
        Upper bound on ``gamma(n0)`` (usually :func:`sl0.constants.gamma_exact`).
    k : int
        Upper bound on the sparsity of the planted solution.
    delta_target : float
        Required accuracy; must exceed ``C * eps``.
    eps : float
        Noise radius, ``||x - A s0|| < eps``.
    x : array_like
        Measurement vector; only ``||A^T x||`` enters the schedule.

    Raises
    ------
    SparsityTooHigh, DeltaTooSmall, DegenerateInput
    """
    if not math.isfinite(gamma) or gamma < 0:
        raise SparsityTooHigh(f"gamma={gamma} is not a finite nonnegative value")
    x = np.asarray(x, dtype=np.float64)
    core = _fig2_core(d.m, n0, gamma, k, delta_target, eps, d.spectral_norm)
    sigma1 = float(np.linalg.norm(d.A.T @ x)) / math.sqrt(n0 / (2.0 + 2.0 * core["gamma_prime"]))
    return _finish(core, sigma1, "guaranteed", d.n)


def gaussian_constants(alpha: float, r_sparsity: float) -> dict:
    """``rho(alpha)``, ``beta*``, ``gamma(alpha, beta*)`` and the error factor ``C'``."""
    rho_val, beta = rho(alpha)
    if not r_sparsity < rho_val:
        raise SparsityTooHigh(f"r={r_sparsity:g} is not below rho(alpha)={rho_val:.6g}")
    gamma = gaussian_gamma(alpha, beta)
    C_soft = (16.0 / ((rho_val - r_sparsity) * math.sqrt(gamma + 1.0)) + 1.0) * (1.0 + math.sqrt(alpha))
    return dict(rho=rho_val, beta_star=beta, gamma=gamma, C_soft=C_soft)


def gaussian_schedule_from_sizes(
    n: int, m: int, r_sparsity: float, eps: float, norm_A: float, delta: float | None = None
) -> SL0Schedule:
    """Gaussian-mode schedule from the sizes alone (no matrix needed).

    With ``eps = 0`` the derived ``delta = C' eps`` vanishes, so an explicit
    positive ``delta`` is required.
    """
    if not m > n >= 1:
        raise ValueError(f"need m > n >= 1, got n={n}, m={m}")
    alpha = n / m
    g = gaussian_constants(alpha, r_sparsity)
    if delta is None:
        if eps <= 0:
            raise DeltaTooSmall("eps = 0 gives delta = 0; pass an explicit positive delta")
        delta = g["C_soft"] * eps
    n0 = math.ceil(g["beta_star"] * m)
    k = math.ceil(r_sparsity * m)
    core = _fig2_core(m, n0, g["gamma"], k, delta, 0.0, norm_A)
    core["eps"] = eps
    core["C"] = g["C_soft"]
    core["delta_prime"] = delta - norm_A * eps
    if not core["delta_prime"] > 0:
        raise DeltaTooSmall(f"delta'={core['delta_prime']:g} is not positive")
    core["sigma_J"] = core["delta_prime"] / (2.0 * math.sqrt(m * (core["gamma_prime"] + 1.0)))
    sigma1 = (1.0 + math.sqrt(alpha)) * (1.0 + math.sqrt(alpha) + eps)
    notes = (
        f"rho(alpha)={g['rho']:.6g}, beta*={g['beta_star']:.6g}",
        "guarantee assumes ||s0|| <= 1 (not enforced)",
    )
    return _finish(core, sigma1, "gaussian", n, notes)


def derive_schedule_gaussian(
    d: Dictionary, r_sparsity: float, eps: float, x=None, delta: float | None = None
) -> SL0Schedule:
    """Schedule for Gaussian dictionaries with unknown ``gamma``.

    The measurement does not enter (``sigma_1`` depends only on ``alpha`` and
    ``eps``); ``x`` is accepted for signature symmetry with the other modes.
    Needs ``m`` in the thousands before ``k = ceil(r m)`` fits the budget.
    """
    return gaussian_schedule_from_sizes(d.n, d.m, r_sparsity, eps, d.spectral_norm, delta)


def _noisy_threshold(m, norm_A, eps, gamma, k, k_prime):
    return 2.0 * math.sqrt(m) * norm_A * eps / ((1.0 + gamma) * (k_prime - k))


def derive_schedule_noisy_theorem4(
    d: Dictionary,
    n0: int,
    gamma: float,
    k: int,
    k_prime: float | str | None,
    eps: float,
    min_norm_solution_norm: float,
    step_cap: int = NOISY_STEP_CAP,
    inner_tol: float = NOISY_TOL,
) -> SL0Schedule:
    """Noisy-measurement schedule whose output lies within ``C * eps`` of ``s0``.

    ``k_prime`` of ``None`` or ``"midpoint"`` selects the midpoint of
    ``(k, n0/(2+2 gamma))``.  The error bound assumes each level is solved to
    its maximiser, so the inner loop runs ascent steps of ``mu = (1+gamma)/2``
    on the shape-``gamma`` objective until an update moves the point by at
    most ``inner_tol * sigma`` (at most ``step_cap`` updates).
    """
    if not eps > 0:
        raise DeltaTooSmall("the noisy schedule needs eps > 0")
    budget = n0 / (2.0 + 2.0 * gamma)
    if not k < budget:
        raise SparsityTooHigh(f"k={k} is not below n0/(2+2 gamma)={budget:.6g}")
    if k_prime is None or k_prime == "midpoint":
        k_prime = (k + budget) / 2.0
    k_prime = float(k_prime)
    if not k < k_prime < budget:
        raise InvalidKPrime(f"need k={k} < k'={k_prime:g} < {budget:.6g}")
    m, norm_A = d.m, d.spectral_norm
    sigma1 = min_norm_solution_norm / math.sqrt(k_prime * (1.0 + gamma))
    c = 2.0 * m / (2.0 * m + budget - k_prime)
    thr = _noisy_threshold(m, norm_A, eps, gamma, k, k_prime)
    if not sigma1 >= thr:
        raise DegenerateInput(f"sigma_1={sigma1:g} is below the stopping level {thr:g}")
    J = int(math.floor(math.log(sigma1 / thr) / -math.log(c))) + 1
    # guard the floor against rounding at the boundary
    while sigma1 * c ** (J - 1) < thr:
        J -= 1
    while sigma1 * c**J >= thr:
        J += 1
    C = (4.0 * m / (c * (k_prime - k) * math.sqrt(gamma + 1.0)) + 1.0) * norm_A
    sigma = sigma1 * c ** np.arange(J)
    return SL0Schedule(
        mode="noisy", m=m, n=d.n, sigma=sigma, steps=step_cap, mu=(1.0 + gamma) / 2.0,
        shape=gamma, guaranteed=True, inner_tol=inner_tol, n0=n0, gamma=gamma, k=k,
        k_prime=k_prime, eps=eps, c=c, C=C, delta_target=C * eps,
        notes=(f"stopping level {thr:.6g}",),
    )


def heuristic_sigma1(d: Dictionary, x) -> float:
    """Default starting level ``2 max_i |(A^T x)_i|``."""
    v = np.abs(d.A.T @ np.asarray(x, dtype=np.float64))
    return HEURISTIC_SIGMA1_FACTOR * float(np.max(v)) if v.size else 0.0


def derive_schedule_heuristic(
    sigma1: float,
    c: float = HEURISTIC_C,
    L: int = HEURISTIC_L,
    mu: float = HEURISTIC_MU,
    sigma_min: float | None = None,
    shape: float = HEURISTIC_SHAPE,
    m: int = 0,
) -> SL0Schedule:
    """Geometric schedule ``sigma1, sigma1 c, ...`` down to the first term ``<= sigma_min``.

    Runs ``L`` ascent steps per level.  With the defaults (``mu = 2``,
    ``shape = 3``) one step sends every entry inside ``[-sigma, sigma]``
    straight to zero before projection.  ``sigma_min`` defaults to
    ``1e-3 * sigma1``.  No convergence guarantee.
    """
    if not (sigma1 > 0 and math.isfinite(sigma1)):
        raise ValueError(f"sigma1 must be positive and finite, got {sigma1}")
    if not 0 < c < 1:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if sigma_min is None:
        sigma_min = HEURISTIC_SIGMA_MIN_RATIO * sigma1
    if not 0 < sigma_min < sigma1:
        raise ValueError(f"need 0 < sigma_min < sigma1, got sigma_min={sigma_min}")
    J = 1
    while sigma1 * c ** (J - 1) > sigma_min:
        J += 1
    return SL0Schedule(
        mode="heuristic", m=m, sigma=sigma1 * c ** np.arange(J), steps=L, mu=mu,
        shape=shape, guaranteed=False, c=c, L=L, notes=("no convergence guarantee",),
    )
