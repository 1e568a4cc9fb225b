"""Achievable rates of GRAND-family decoders on a bit channel.

All three rates are computed from one set of (x, T) points, either a
quadrature rule (analytic channels) or Monte Carlo samples, so their
differences carry little sampling noise:

* ``i_orbgrand``: ln2 - inf_{theta<0} [ L(theta) - theta * E[psi(|T|) 1(xT<0)] ]
  with ``L(theta) = int_0^1 ln(1 + e^{theta t}) dt``;
* ``i_mi``: ln2 - E[ln(1 + e^{-xT})];
* ``i_sgrand``: ln2 - inf_{theta<0} [ E ln(1 + e^{theta|T|}) - theta * E[|T| 1(xT<0)] ].

Rates are in nats per channel use.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import log
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.special import spence

from .llr_channel import BitChannel, LlrSample, ReliabilityCdf, draw_llrs, psi_cdf, seed_sequence
from .optimize import golden_section

LN2 = log(2.0)
OPTIMIZER_SLACK = 1e-6
LOGISTIC_QUAD_ERR = 1e-10
# ln(1 + e^-u) < 2e-22 beyond this point
_LOGISTIC_CUTOFF = 50.0


@dataclass
class GmiConfig:
    n_samples: int = 10**6
    seed: int = 0xC0FFEE
    method: str = "auto"
    theta_max: float = 500.0
    theta_min: float = 1e-6
    rtol: float = 1e-8
    # bracket is widened tenfold while the optimum sits on its far edge
    widen: bool = True
    theta_cap: float = 5e6
    workers: int = 1


@dataclass
class GmiObjective:
    """``log_mgf_term(theta) - theta * linear_coefficient``, convex in theta."""

    linear_coefficient: float
    log_mgf_term: Callable[[float], float]

    def __call__(self, theta: float) -> float:
        return self.log_mgf_term(theta) - theta * self.linear_coefficient


@dataclass
class GmiResult:
    rate: float
    theta_star: float
    iterations: int
    std_error: float = 0.0
    integration_abs_err: float = 0.0
    bracket_edge: bool = False
    theta_max: float = 500.0


@dataclass
class RateReport:
    i_orbgrand: float
    i_mi: float
    i_sgrand: float
    theta_star_orb: float
    theta_star_sgrand: float
    mc_std_error: float
    integration_abs_err: float
    linear_term: float = 0.0
    std_error_orbgrand: float = 0.0
    std_error_mi: float = 0.0
    std_error_sgrand: float = 0.0
    iterations_orb: int = 0
    iterations_sgrand: int = 0
    bracket_edge: bool = False
    method: str = "mc"
    n_samples: int = 0
    channel: dict = field(default_factory=dict)

    @property
    def error_budget(self) -> float:
        return error_budget(self.mc_std_error, self.integration_abs_err)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["error_budget"] = self.error_budget
        return d


def error_budget(std_error: float, integration_abs_err: float = 0.0) -> float:
    return 3.0 * std_error + integration_abs_err + OPTIMIZER_SLACK


def logistic_integral(theta: float) -> float:
    """``int_0^1 ln(1 + e^{theta t}) dt`` for ``theta <= 0`` by adaptive quadrature."""
    theta = float(theta)
    if theta > 0:
        raise ValueError(f"theta must be <= 0, got {theta}")
    if theta == 0.0:
        return LN2
    if np.isinf(theta):
        return 0.0
    # substitute u = -theta t
    a = -theta
    upper = min(a, _LOGISTIC_CUTOFF)
    val, _ = integrate.quad(lambda u: np.log1p(np.exp(-u)), 0.0, upper, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val / a


def logistic_integral_dilog(theta):
    """Closed form ``(-pi^2/12 - Li2(-e^theta)) / theta``, vectorized."""
    theta = np.asarray(theta, dtype=float)
    # scipy's spence(z) is Li2(1 - z)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = (-np.pi**2 / 12.0 - spence(1.0 + np.exp(theta))) / theta
    return np.where(theta == 0.0, LN2, val)


def minimize_objective(obj: GmiObjective, cfg: Optional[GmiConfig] = None) -> GmiResult:
    """Golden-section search for the infimum over theta < 0.

    Searches in ``u = ln(-theta)`` so the tolerance is relative in theta.
    """
    cfg = cfg or GmiConfig()
    if obj.linear_coefficient <= 0.0:
        # objective decreasing in -theta; infimum approached as theta -> -inf
        theta = -cfg.theta_cap
        val = obj(theta)
        return GmiResult(_clamp(LN2 - val), theta, 0, theta_max=cfg.theta_cap)

    theta_max = cfg.theta_max
    total_it = 0
    while True:
        res = golden_section(lambda u: obj(-np.exp(u)), np.log(cfg.theta_min), np.log(theta_max), tol=cfg.rtol)
        total_it += res.iterations
        theta = -float(np.exp(res.x))
        edge = -theta >= 0.99 * theta_max
        if not (edge and cfg.widen and theta_max < cfg.theta_cap):
            break
        theta_max = min(theta_max * 10.0, cfg.theta_cap)
    return GmiResult(
        rate=_clamp(LN2 - res.fx),
        theta_star=theta,
        iterations=total_it,
        bracket_edge=bool(edge),
        theta_max=theta_max,
    )


def _clamp(rate: float) -> float:
    return float(min(max(rate, 0.0), LN2))


def _wrong_sign(llrs: LlrSample) -> np.ndarray:
    # hard decision with sgn(0) = +1, as in the decoders
    return np.where(llrs.t >= 0, 1.0, -1.0) != llrs.x


def _int_err(llrs: LlrSample, fn) -> float:
    if llrs.coarse is None:
        return 0.0
    return abs(fn(llrs) - fn(llrs.coarse))


def linear_term_from(llrs: LlrSample, psi: ReliabilityCdf, psi_samples: Optional[np.ndarray] = None):
    """``E[psi(|T|) 1(x sgn(T) < 0)]`` with (std error, integration error).

    When ``psi`` is empirical its own sampling noise is added to the standard
    error (two-sample U-statistic variance).
    """

    def value(s):
        return float(psi(np.abs(s.t)) @ (_wrong_sign(s) * _weights(s)))

    vals = psi(np.abs(llrs.t)) * _wrong_sign(llrs)
    mean, se = llrs.expect(vals)
    if psi.form == "empirical":
        se = float(np.sqrt(se**2 + _empirical_psi_var(llrs, psi.sorted_samples)))
    return mean, se, _int_err(llrs, value)


def _weights(s: LlrSample) -> np.ndarray:
    return np.full(s.size, 1.0 / s.size) if s.weights is None else s.weights


def _empirical_psi_var(llrs: LlrSample, psi_sorted: np.ndarray) -> float:
    # h(u) = E[1(|T| >= u) 1(xT<0)], evaluated at every cdf sample u
    wrong = _wrong_sign(llrs)
    mags = np.abs(llrs.t[wrong])
    w = _weights(llrs)[wrong]
    order = np.argsort(mags)
    mags, w = mags[order], w[order]
    tail = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    h = tail[np.searchsorted(mags, psi_sorted, side="left")]
    return float(h.var(ddof=1) / psi_sorted.size)


def mutual_information_from(llrs: LlrSample):
    """Return ``(I, std error, integration error)``."""

    def value(s):
        return LN2 - float(np.logaddexp(0.0, -s.x * s.t) @ _weights(s))

    loss = np.logaddexp(0.0, -llrs.x * llrs.t)
    mean, se = llrs.expect(loss)
    return LN2 - mean, se, _int_err(llrs, value)


def orbgrand_from(llrs: LlrSample, psi: ReliabilityCdf, cfg: Optional[GmiConfig] = None) -> GmiResult:
    c, se, ierr = linear_term_from(llrs, psi)
    res = minimize_objective(GmiObjective(c, logistic_integral), cfg)
    # envelope theorem: d rate / d c = theta*
    res.std_error = abs(res.theta_star) * se
    res.integration_abs_err = abs(res.theta_star) * ierr + LOGISTIC_QUAD_ERR
    return res


def sgrand_objective(llrs: LlrSample) -> GmiObjective:
    mag = np.abs(llrs.t)
    w = _weights(llrs)
    lin = float((mag * _wrong_sign(llrs)) @ w)
    return GmiObjective(lin, lambda th: float(np.logaddexp(0.0, th * mag) @ w))


def sgrand_from(llrs: LlrSample, cfg: Optional[GmiConfig] = None) -> GmiResult:
    res = minimize_objective(sgrand_objective(llrs), cfg)
    th = res.theta_star
    mag = np.abs(llrs.t)
    per_point = np.logaddexp(0.0, th * mag) - th * mag * _wrong_sign(llrs)
    _, res.std_error = llrs.expect(per_point)
    if llrs.coarse is not None:
        res.integration_abs_err = abs(sgrand_objective(llrs)(th) - sgrand_objective(llrs.coarse)(th))
    return res


def _channel_psi(ch: BitChannel, cfg: GmiConfig) -> ReliabilityCdf:
    # independent sample set for an empirical cdf
    return psi_cdf(ch, cfg.n_samples, seed_sequence(cfg.seed, 1))


def _draw(ch: BitChannel, cfg: GmiConfig) -> LlrSample:
    return draw_llrs(ch, cfg.n_samples, seed_sequence(cfg.seed, 0), cfg.method, cfg.workers)


def orbgrand_linear_term(ch: BitChannel, psi: Optional[ReliabilityCdf] = None, n_samples: int = 10**6, seed=0, method="auto"):
    """Limit of E[D(1)]: ``(value, std_error)``."""
    cfg = GmiConfig(n_samples=n_samples, seed=seed, method=method)
    psi = psi if psi is not None else _channel_psi(ch, cfg)
    c, se, _ = linear_term_from(_draw(ch, cfg), psi)
    return c, se


def orbgrand_gmi(ch: BitChannel, cfg: Optional[GmiConfig] = None) -> GmiResult:
    cfg = cfg or GmiConfig()
    return orbgrand_from(_draw(ch, cfg), _channel_psi(ch, cfg), cfg)


def sgrand_gmi(ch: BitChannel, cfg: Optional[GmiConfig] = None) -> GmiResult:
    cfg = cfg or GmiConfig()
    return sgrand_from(_draw(ch, cfg), cfg)


def mutual_information(ch: BitChannel, n_samples: int = 10**6, seed=0xC0FFEE, method="auto") -> float:
    cfg = GmiConfig(n_samples=n_samples, seed=seed, method=method)
    return mutual_information_from(_draw(ch, cfg))[0]


def rate_report(ch: BitChannel, cfg: Optional[GmiConfig] = None) -> RateReport:
    """All three rates from one shared point set."""
    cfg = cfg or GmiConfig()
    llrs = _draw(ch, cfg)
    psi = _channel_psi(ch, cfg)
    orb = orbgrand_from(llrs, psi, cfg)
    sg = sgrand_from(llrs, cfg)
    mi, mi_se, mi_err = mutual_information_from(llrs)
    c, _, _ = linear_term_from(llrs, psi)
    return RateReport(
        i_orbgrand=orb.rate,
        i_mi=_clamp(mi),
        i_sgrand=sg.rate,
        theta_star_orb=orb.theta_star,
        theta_star_sgrand=sg.theta_star,
        mc_std_error=max(orb.std_error, mi_se, sg.std_error),
        integration_abs_err=max(orb.integration_abs_err, mi_err, sg.integration_abs_err),
        linear_term=c,
        std_error_orbgrand=orb.std_error,
        std_error_mi=mi_se,
        std_error_sgrand=sg.std_error,
        iterations_orb=orb.iterations,
        iterations_sgrand=sg.iterations,
        bracket_edge=orb.bracket_edge or sg.bracket_edge,
        method="mc" if llrs.is_monte_carlo else "quadrature",
        n_samples=llrs.size,
        channel=ch.describe(),
    )


def delta_log_mgf_estimator(ranks, theta: float) -> float:
    """Finite-N value ``(1/N) sum_n ln((1 + e^{theta r_n / N}) / 2)``."""
    r = np.asarray(ranks)
    n = r.size
    if n == 0 or not np.array_equal(np.sort(r), np.arange(1, n + 1)):
        raise ValueError("ranks must be a permutation of 1..N")
    return float(np.mean(np.logaddexp(0.0, theta * r / n)) - LN2)
