"""Binary-input bit channels represented through their LLR distributions.

Every channel exposes ``sample_llr(x, rng)`` which draws the log-likelihood
ratio ``T = ln q+(Y)/q-(Y)`` given the transmitted symbol ``x`` in {+1, -1}.
Analytic channels additionally provide a closed-form reliability cdf and a
deterministic quadrature rule over T, so that rate integrals can be computed
without Monte Carlo noise.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr

CHUNK = 1 << 16
GAUSS_TAIL_SD = 8.0


def seed_sequence(seed, *key: int) -> np.random.SeedSequence:
    """Derive a child seed sequence from ``seed`` and an integer path."""
    if isinstance(seed, np.random.SeedSequence):
        base_entropy, base_key = seed.entropy, tuple(seed.spawn_key)
    else:
        base_entropy, base_key = int(seed), ()
    return np.random.SeedSequence(base_entropy, spawn_key=base_key + tuple(int(k) for k in key))


def random_inputs(rng: np.random.Generator, size: int) -> np.ndarray:
    return 2 * rng.integers(0, 2, size=size, dtype=np.int8).astype(np.float64) - 1.0


class BitChannel:
    """Base class of all bit channels.

    Subclasses implement :meth:`sample_llr`. Channels are immutable and hold
    no random state; callers own the generator.
    """

    kind = "abstract"

    def sample_llr(self, x, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def llr_of_output(self, y, h=None):
        raise NotImplementedError(f"{self.kind} channel has no raw-output LLR map")

    def sample(self, n: int, rng: np.random.Generator):
        """Draw ``n`` equiprobable inputs and their LLRs."""
        x = random_inputs(rng, n)
        return x, self.sample_llr(x, rng)

    def psi(self) -> Optional["ReliabilityCdf"]:
        """Analytic cdf of |T|, or None when only sampling is available."""
        return None

    def quadrature(self, order: int = 32) -> Optional["LlrSample"]:
        """Deterministic weighted node set over (x, T), or None."""
        return None

    def describe(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class BpskAwgn(BitChannel):
    """``y = x + n`` with ``n ~ N(0, sigma2)`` and ``sigma2 = 10^(-snr/10)``."""

    snr_db: float
    kind = "bpsk-awgn"

    def __post_init__(self):
        if not np.isfinite(self.snr_db):
            raise ValueError(f"snr_db must be finite, got {self.snr_db}")

    @property
    def sigma2(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    @property
    def llr_mean(self) -> float:
        return 2.0 / self.sigma2

    @property
    def llr_sd(self) -> float:
        return 2.0 / np.sqrt(self.sigma2)

    def llr_of_output(self, y, h=None):
        return 2.0 * np.asarray(y, dtype=float) / self.sigma2

    def sample_llr(self, x, rng):
        x = np.asarray(x, dtype=float)
        y = x + np.sqrt(self.sigma2) * rng.standard_normal(x.shape)
        return self.llr_of_output(y)

    def psi(self):
        mu, s = self.llr_mean, self.llr_sd

        def folded_normal_cdf(t):
            t = np.maximum(np.asarray(t, dtype=float), 0.0)
            return ndtr((t - mu) / s) - ndtr((-t - mu) / s)

        return ReliabilityCdf.analytic(folded_normal_cdf)

    def llr_pdf(self, t):
        """Density of T given x = +1."""
        mu, s = self.llr_mean, self.llr_sd
        return np.exp(-0.5 * ((t - mu) / s) ** 2) / (s * np.sqrt(2 * np.pi))

    def quadrature(self, order=32):
        mu, s = self.llr_mean, self.llr_sd
        lo, hi = mu - GAUSS_TAIL_SD * s, mu + GAUSS_TAIL_SD * s
        breaks = np.linspace(lo, hi, 17)
        if lo < 0.0 < hi:
            breaks = np.union1d(breaks, [0.0])
        return LlrSample.symmetric_rule(self.llr_pdf, breaks, order)

    def describe(self):
        return {"kind": self.kind, "snr_db": self.snr_db}


@dataclass(frozen=True)
class Bsc(BitChannel):
    """Binary symmetric channel; T takes the two values +-ln((1-p)/p)."""

    p: float
    kind = "bsc"

    def __post_init__(self):
        if not (0.0 < self.p < 0.5):
            raise ValueError(f"BSC crossover p must lie in (0, 1/2), got {self.p}")

    @property
    def magnitude(self) -> float:
        return float(np.log((1.0 - self.p) / self.p))

    def llr_of_output(self, y, h=None):
        # output symbol in {+1, -1}
        return self.magnitude * np.asarray(y, dtype=float)

    def sample_llr(self, x, rng):
        x = np.asarray(x, dtype=float)
        flips = rng.random(x.shape) < self.p
        return self.llr_of_output(np.where(flips, -x, x))

    def psi(self):
        mag = self.magnitude
        return ReliabilityCdf.analytic(
            lambda t: (np.asarray(t, dtype=float) >= mag).astype(float)
        )

    def quadrature(self, order=32):
        mag, p = self.magnitude, self.p
        x = np.array([1.0, 1.0, -1.0, -1.0])
        t = np.array([mag, -mag, -mag, mag])
        w = 0.5 * np.array([1 - p, p, 1 - p, p])
        return LlrSample(x=x, t=t, weights=w)

    def describe(self):
        return {"kind": self.kind, "p": self.p}


@dataclass(frozen=True)
class BpskRayleigh(BitChannel):
    """BPSK over flat Rayleigh fading with perfect CSI.

    ``y = h x + z`` with ``h ~ CN(0, 1)`` and ``z ~ CN(0, N0)``. The noise
    per real dimension is ``10^(-snr/10)``, so ``N0 = 2 * 10^(-snr/10)`` and
    the average LLR matches :class:`BpskAwgn` at the same SNR.

    Conditioned on ``|h|^2 = g`` the LLR is Gaussian with mean ``2g/sigma2``;
    mixing over the exponential ``g`` gives an asymmetric Laplace law with
    decay rates ``k+`` (t > 0) and ``k- = k+ + 1`` (t < 0).
    """

    snr_db: float
    kind = "bpsk-rayleigh"

    def __post_init__(self):
        if not np.isfinite(self.snr_db):
            raise ValueError(f"snr_db must be finite, got {self.snr_db}")

    @property
    def sigma2(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    @property
    def noise_var(self) -> float:
        return 2.0 * self.sigma2

    @property
    def decay_rates(self):
        kp = 0.5 * (np.sqrt(1.0 + 2.0 * self.sigma2) - 1.0)
        return kp, kp + 1.0

    def llr_of_output(self, y, h=None):
        if h is None:
            raise ValueError("Rayleigh LLR needs the channel gain h (perfect CSI)")
        return 4.0 * np.real(np.conj(h) * y) / self.noise_var

    def sample_llr(self, x, rng):
        x = np.asarray(x, dtype=float)
        shape = x.shape
        h = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)
        z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(
            0.5 * self.noise_var
        )
        return self.llr_of_output(h * x + z, h)

    def llr_pdf(self, t):
        kp, km = self.decay_rates
        t = np.asarray(t, dtype=float)
        c = kp * km / (kp + km)
        return c * np.where(t >= 0, np.exp(-kp * np.abs(t)), np.exp(-km * np.abs(t)))

    def psi(self):
        kp, km = self.decay_rates
        wp, wm = km / (kp + km), kp / (kp + km)

        def cdf(t):
            t = np.maximum(np.asarray(t, dtype=float), 0.0)
            return wp * -np.expm1(-kp * t) + wm * -np.expm1(-km * t)

        return ReliabilityCdf.analytic(cdf)

    def quadrature(self, order=32):
        kp, km = self.decay_rates
        scales = np.array([0.25, 0.5, 1, 2, 4, 8, 16, 28, 40])
        breaks = np.concatenate([-scales[::-1] / km, [0.0], scales / kp])
        return LlrSample.symmetric_rule(self.llr_pdf, breaks, order)

    def describe(self):
        return {"kind": self.kind, "snr_db": self.snr_db}


@dataclass(frozen=True, eq=False)
class EmpiricalChannel(BitChannel):
    """Channel defined by stored LLR samples under each input (bootstrap resampling)."""

    llr_plus: np.ndarray
    llr_minus: np.ndarray
    kind = "empirical"

    @classmethod
    def from_channel(cls, ch: BitChannel, n: int, seed=0):
        rng = np.random.default_rng(seed_sequence(seed))
        return cls(ch.sample_llr(np.ones(n), rng), ch.sample_llr(-np.ones(n), rng))

    def sample_llr(self, x, rng):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        plus = x > 0
        out[plus] = rng.choice(self.llr_plus, size=int(plus.sum()))
        out[~plus] = rng.choice(self.llr_minus, size=int((~plus).sum()))
        return out


@dataclass(frozen=True, eq=False)
class ReliabilityTransformed(BitChannel):
    """LLR magnitudes replaced by ``psi(|T|)``, signs kept."""

    base: BitChannel
    cdf: "ReliabilityCdf"
    kind = "psi-transformed"

    def sample_llr(self, x, rng):
        t = self.base.sample_llr(x, rng)
        return np.where(t >= 0, 1.0, -1.0) * self.cdf(np.abs(t))

    def describe(self):
        return {"kind": self.kind, "base": self.base.describe()}


@dataclass(frozen=True, eq=False)
class ReliabilityCdf:
    """cdf of |T|, either a closure or a sorted sample array.

    The empirical form is the right-continuous step function by default;
    ``interpolate=True`` switches to linear interpolation between order
    statistics.
    """

    form: str
    fn: Optional[Callable] = None
    sorted_samples: Optional[np.ndarray] = None
    interpolate: bool = False

    @classmethod
    def analytic(cls, fn):
        return cls(form="analytic", fn=fn)

    @classmethod
    def empirical(cls, abs_samples, interpolate=False):
        s = np.sort(np.abs(np.asarray(abs_samples, dtype=float)))
        return cls(form="empirical", sorted_samples=s, interpolate=interpolate)

    def __call__(self, t):
        if self.form == "analytic":
            return self.fn(t)
        s = self.sorted_samples
        t = np.asarray(t, dtype=float)
        if self.interpolate:
            grid = np.arange(1, s.size + 1) / s.size
            return np.interp(t, s, grid, left=0.0, right=1.0)
        return np.searchsorted(s, t, side="right") / s.size


@dataclass
class LlrSample:
    """Weighted point set over the joint law of (X, T) with X equiprobable.

    Monte Carlo samples carry no weights (uniform 1/n). Quadrature rules carry
    explicit weights plus a coarser companion rule used for error estimates.
    """

    x: np.ndarray
    t: np.ndarray
    weights: Optional[np.ndarray] = None
    coarse: Optional["LlrSample"] = field(default=None, repr=False)

    @property
    def is_monte_carlo(self) -> bool:
        return self.weights is None

    @property
    def size(self) -> int:
        return self.t.size

    def expect(self, values):
        """Return ``(mean, standard error)`` of per-point ``values``."""
        values = np.asarray(values, dtype=float)
        if self.weights is None:
            n = values.size
            return float(values.mean()), float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return float(values @ self.weights), 0.0

    @classmethod
    def symmetric_rule(cls, pdf_plus, breaks, order):
        """Composite Gauss-Legendre rule for a channel with ``T|-1 ~ -T|+1``."""
        fine = _symmetric_gl(pdf_plus, breaks, order)
        fine.coarse = _symmetric_gl(pdf_plus, breaks, order // 2)
        return fine


def _symmetric_gl(pdf_plus, breaks, order):
    nodes, w = np.polynomial.legendre.leggauss(order)
    a, b = np.asarray(breaks[:-1]), np.asarray(breaks[1:])
    half = 0.5 * (b - a)
    t = (a[:, None] + half[:, None] * (nodes[None, :] + 1.0)).ravel()
    wt = (half[:, None] * w[None, :]).ravel() * pdf_plus(t) * 0.5
    return LlrSample(
        x=np.concatenate([np.ones_like(t), -np.ones_like(t)]),
        t=np.concatenate([t, -t]),
        weights=np.concatenate([wt, wt]),
    )


def sample_llrs(ch: BitChannel, n: int, seed=0, workers: int = 1) -> LlrSample:
    """Monte Carlo draw of ``n`` (x, T) pairs under equiprobable inputs.

    The draw is split into fixed-size chunks, each with its own child seed, so
    the result depends only on ``(seed, n)`` and never on ``workers``.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    seeds = seed_sequence(seed).spawn(len(sizes))

    def draw(args):
        size, ss = args
        return ch.sample(size, np.random.default_rng(ss))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(draw, zip(sizes, seeds)))
    else:
        parts = [draw(a) for a in zip(sizes, seeds)]
    return LlrSample(
        x=np.concatenate([p[0] for p in parts]), t=np.concatenate([p[1] for p in parts])
    )


def draw_llrs(ch: BitChannel, n: int, seed=0, method: str = "auto", workers: int = 1):
    """Quadrature rule when the channel offers one (and ``method`` allows), else Monte Carlo."""
    if method not in ("auto", "mc", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method != "mc":
        rule = ch.quadrature()
        if rule is not None:
            return rule
        if method == "quadrature":
            raise ValueError(f"{ch.kind} channel has no quadrature rule")
    return sample_llrs(ch, n, seed, workers)


def psi_cdf(ch: BitChannel, n_samples: int = 10**6, seed=0, empirical: bool = False):
    """Reliability cdf of a channel: analytic when available, else from |T| samples."""
    if not empirical:
        cdf = ch.psi()
        if cdf is not None:
            return cdf
    if n_samples < 10**4:
        raise ValueError(f"empirical cdf needs at least 1e4 samples, got {n_samples}")
    llrs = sample_llrs(ch, n_samples, seed)
    return ReliabilityCdf.empirical(np.abs(llrs.t))


def bpsk_awgn_channel(snr_db: float) -> BpskAwgn:
    return BpskAwgn(float(snr_db))


def bsc_channel(p: float) -> Bsc:
    return Bsc(float(p))


def bpsk_rayleigh_channel(snr_db: float) -> BpskRayleigh:
    return BpskRayleigh(float(snr_db))
