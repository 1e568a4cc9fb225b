"""BICM constellations and their parallel bit channels.

Labels are m-bit integers; bit level 1 is the most significant bit. A label
bit of 1 maps to the bit-channel input +1, a 0 to -1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .llr_channel import CHUNK, BitChannel, seed_sequence
from .rates import GmiConfig, RateReport, rate_report

SCHEMES = ("qpsk", "psk8", "qam16")
LABELINGS = ("gray", "set_partitioning")
FADINGS = ("awgn", "rayleigh")


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit-energy constellation; ``points[label]`` is the symbol carrying ``label``."""

    scheme: str
    labeling: str
    points: np.ndarray
    m: int

    def __post_init__(self):
        if self.points.size != 2**self.m:
            raise ValueError("constellation size must be 2^m")

    @property
    def labels(self) -> np.ndarray:
        return np.arange(2**self.m)

    def bit(self, labels, level: int):
        """Bit at ``level`` (1 = MSB) of each label."""
        return (np.asarray(labels) >> (self.m - level)) & 1

    def subset(self, level: int, b: int) -> np.ndarray:
        """Points whose bit at ``level`` equals ``b``."""
        return self.points[self.bit(self.labels, level) == b]

    def table(self):
        """Rows ``(label bits, real, imag)`` ordered by label value."""
        return [
            (format(lab, f"0{self.m}b"), float(p.real), float(p.imag))
            for lab, p in zip(self.labels, self.points)
        ]


def _psk(labels_by_angle, offset=0.0):
    m_pts = len(labels_by_angle)
    pts = np.empty(m_pts, dtype=complex)
    for k, lab in enumerate(labels_by_angle):
        pts[int(lab, 2)] = np.exp(1j * (offset + 2 * np.pi * k / m_pts))
    return pts


def _bit_reverse(k, m):
    return int(format(k, f"0{m}b")[::-1], 2)


def _qam16(labeling):
    levels = np.array([-3.0, -1.0, 1.0, 3.0]) / np.sqrt(10.0)
    pts = np.empty(16, dtype=complex)
    if labeling == "gray":
        axis_bits = {0: 0b00, 1: 0b01, 2: 0b11, 3: 0b10}
        for ia in range(4):
            for ib in range(4):
                pts[(axis_bits[ia] << 2) | axis_bits[ib]] = levels[ia] + 1j * levels[ib]
        return pts
    for ia in range(4):
        for ib in range(4):
            b1 = (ia + ib) % 2  # checkerboard coset
            b2 = ia % 2  # 4Z^2 sub-lattice within the coset
            b3 = 0 if ib >= 2 else 1  # row, top first
            b4 = 0 if ia < 2 else 1  # column, left first
            pts[(b1 << 3) | (b2 << 2) | (b3 << 1) | b4] = levels[ia] + 1j * levels[ib]
    return pts


def make_constellation(scheme: str, labeling: str) -> Constellation:
    """Build one of the supported constellations with a pinned labeling table."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if labeling not in LABELINGS:
        raise ValueError(f"unknown labeling {labeling!r}; choose from {LABELINGS}")
    if scheme == "qpsk":
        order = ["00", "01", "11", "10"] if labeling == "gray" else [format(_bit_reverse(k, 2), "02b") for k in range(4)]
        return Constellation(scheme, labeling, _psk(order, np.pi / 4), 2)
    if scheme == "psk8":
        if labeling == "gray":
            order = ["000", "001", "011", "010", "110", "111", "101", "100"]
        else:
            order = ["000", "100", "010", "110", "001", "101", "011", "111"]
        return Constellation(scheme, labeling, _psk(order), 3)
    return Constellation(scheme, labeling, _qam16(labeling), 4)


@dataclass(frozen=True)
class FadingModel:
    """``Y = H S + Z``; ``Z ~ CN(0, N0)`` with ``N0 = 10^(-snr/10)`` for unit symbol energy."""

    kind: str
    snr_db: float

    def __post_init__(self):
        if self.kind not in FADINGS:
            raise ValueError(f"unknown fading {self.kind!r}; choose from {FADINGS}")
        if not np.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")

    @property
    def noise_var(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    def gains(self, rng, n):
        if self.kind == "awgn":
            return np.ones(n, dtype=complex)
        return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(0.5)


@dataclass(frozen=True, eq=False)
class BicmBitChannel(BitChannel):
    """Level ``level`` of a BICM scheme seen as a binary-input channel."""

    constellation: Constellation
    level: int
    fading: FadingModel
    kind = "bicm-bit"
    _masks: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if not 1 <= self.level <= self.constellation.m:
            raise ValueError(f"level must be in 1..{self.constellation.m}")
        ones = self.constellation.bit(self.constellation.labels, self.level) == 1
        object.__setattr__(self, "_masks", (ones, ~ones))

    def llr_of_output(self, y, h=None):
        y = np.atleast_1d(np.asarray(y, dtype=complex))
        h = np.ones_like(y) if h is None else np.broadcast_to(np.asarray(h, dtype=complex), y.shape)
        out = np.empty(y.shape)
        ones, zeros = self._masks
        for lo in range(0, y.size, CHUNK):
            sl = slice(lo, lo + CHUNK)
            d = -np.abs(y[sl, None] - h[sl, None] * self.constellation.points[None, :]) ** 2 / self.fading.noise_var
            out[sl] = logsumexp(d[:, ones], axis=1) - logsumexp(d[:, zeros], axis=1)
        return out

    def sample_llr(self, x, rng):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = x.size
        s1 = self.constellation.points[self._masks[0]]
        s0 = self.constellation.points[self._masks[1]]
        idx = rng.integers(0, s1.size, size=n)
        s = np.where(x > 0, s1[idx], s0[idx])
        h = self.fading.gains(rng, n)
        z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(0.5 * self.fading.noise_var)
        return self.llr_of_output(h * s + z, h)

    def describe(self):
        c = self.constellation
        return {
            "kind": self.kind,
            "scheme": c.scheme,
            "labeling": c.labeling,
            "fading": self.fading.kind,
            "snr_db": self.fading.snr_db,
            "level": self.level,
        }


def bit_channel(c: Constellation, i: int, f: FadingModel) -> BicmBitChannel:
    return BicmBitChannel(c, i, f)


@dataclass
class BicmRate:
    which: str
    total: float
    per_level: list
    std_error: float
    integration_abs_err: float = 0.0
    bracket_edge: bool = False


def bicm_reports(c: Constellation, f: FadingModel, cfg: Optional[GmiConfig] = None) -> list[RateReport]:
    """Per-level rate reports, each level on its own seed stream."""
    cfg = cfg or GmiConfig()
    reports = []
    for i in range(1, c.m + 1):
        level_cfg = GmiConfig(**{**cfg.__dict__, "seed": seed_sequence(cfg.seed, 100 + i)})
        reports.append(rate_report(bit_channel(c, i, f), level_cfg))
    return reports


_FIELDS = {
    "orbgrand": ("i_orbgrand", "std_error_orbgrand"),
    "mi": ("i_mi", "std_error_mi"),
    "sgrand": ("i_sgrand", "std_error_sgrand"),
}


def combine(reports: list[RateReport], which: str) -> BicmRate:
    if which not in _FIELDS:
        raise ValueError(f"which must be one of {tuple(_FIELDS)}")
    val, se = _FIELDS[which]
    per_level = [getattr(r, val) for r in reports]
    return BicmRate(
        which=which,
        total=float(sum(per_level)),
        per_level=per_level,
        std_error=float(np.sqrt(sum(getattr(r, se) ** 2 for r in reports))),
        integration_abs_err=float(sum(r.integration_abs_err for r in reports)),
        bracket_edge=any(r.bracket_edge for r in reports),
    )


def bicm_rate(c: Constellation, f: FadingModel, which: str, cfg: Optional[GmiConfig] = None) -> BicmRate:
    """Sum over label positions of the requested bit-channel rate."""
    return combine(bicm_reports(c, f, cfg), which)
