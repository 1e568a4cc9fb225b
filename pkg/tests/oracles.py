"""Reference computations that share no code with the package."""

import numpy as np
from scipy import integrate, stats
from scipy.special import logsumexp

LN2 = np.log(2.0)


def logistic_midpoint(theta, points=10**6):
    t = (np.arange(points) + 0.5) / points
    return float(np.mean(np.log1p(np.exp(theta * t))))


def binary_entropy(p):
    return float(-p * np.log(p) - (1 - p) * np.log(1 - p))


def awgn_llr_moments(snr_db):
    # BPSK, noise variance per real dimension 10^(-snr/10); T = 2y/sigma^2
    s2 = 10.0 ** (-snr_db / 10.0)
    return 2.0 / s2, 2.0 / np.sqrt(s2)


def awgn_mi(s2):
    """MI of BPSK over real AWGN with noise variance s2, integrating over y given x=+1."""
    sd = np.sqrt(s2)

    def f(y):
        return stats.norm.pdf(y, 1.0, sd) * np.logaddexp(0.0, -2.0 * y / s2)

    val, _ = integrate.quad(f, 1.0 - 8 * sd, 1.0 + 8 * sd, epsabs=1e-12, limit=200)
    return LN2 - val


def awgn_linear_term(snr_db):
    """E[Psi(|T|) 1(T < 0) | x=+1] by quadrature over y, Psi written out from the normal cdf."""
    s2 = 10.0 ** (-snr_db / 10.0)
    sd = np.sqrt(s2)

    def psi_of_y(y):
        # |T| <= |t|  <=>  |y'| <= |y| for y' ~ N(+-1, s2) folded
        a = abs(y)
        return stats.norm.cdf((a - 1) / sd) - stats.norm.cdf((-a - 1) / sd)

    val, _ = integrate.quad(lambda y: stats.norm.pdf(y, 1.0, sd) * psi_of_y(y), 1.0 - 8 * sd, 0.0, epsabs=1e-13, limit=200)
    return val


def rayleigh_mi(snr_db):
    """BPSK with perfect CSI: average the AWGN MI over |h|^2 ~ Exp(1)."""
    s2 = 10.0 ** (-snr_db / 10.0)

    def inner(g):
        return np.exp(-g) * awgn_mi(s2 / g) if g > 0 else 0.0

    val, _ = integrate.quad(inner, 0.0, 60.0, epsabs=1e-9, limit=400)
    return val


def psk_points(labels_by_angle, offset=0.0):
    m = len(labels_by_angle)
    pts = np.empty(m, dtype=complex)
    for k, lab in enumerate(labels_by_angle):
        pts[int(lab, 2)] = np.exp(1j * (offset + 2 * np.pi * k / m))
    return pts


def qam16_gray_points():
    lv = np.array([-3, -1, 1, 3]) / np.sqrt(10)
    code = [0, 1, 3, 2]
    pts = np.empty(16, dtype=complex)
    for ia in range(4):
        for ib in range(4):
            pts[code[ia] * 4 + code[ib]] = lv[ia] + 1j * lv[ib]
    return pts


def _symbols(points, n, snr_db, rng):
    n0 = 10.0 ** (-snr_db / 10.0)
    lab = rng.integers(0, points.size, size=n)
    z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(n0 / 2)
    return lab, points[lab] + z, n0


def histogram_bicm_mi(points, snr_db, n=10**7, bins=100, span=2.0, seed=1):
    """Plug-in BICM MI from a 2-D histogram of y jointly with the label, summed over bit levels."""
    m = int(np.log2(points.size))
    rng = np.random.default_rng(seed)
    counts = np.zeros((points.size, bins * bins))
    for lo in range(0, n, 10**6):
        lab, y, _ = _symbols(points, min(10**6, n - lo), snr_db, rng)
        ix = np.clip(((y.real + span) / (2 * span) * bins).astype(int), 0, bins - 1)
        iy = np.clip(((y.imag + span) / (2 * span) * bins).astype(int), 0, bins - 1)
        np.add.at(counts, (lab, ix * bins + iy), 1)
    total = 0.0
    py = counts.sum(axis=0) / n
    for level in range(m):
        bit = (np.arange(points.size) >> (m - 1 - level)) & 1
        for b in (0, 1):
            joint = counts[bit == b].sum(axis=0) / n
            pb = joint.sum()
            nz = joint > 0
            total += float(np.sum(joint[nz] * np.log(joint[nz] / (pb * py[nz]))))
    return total


def coded_modulation_mi(points, snr_db, n=2 * 10**5, seed=2):
    """Symbol-wise MI ln M - E[ln sum_s' exp(-(|y-s'|^2 - |y-s|^2)/N0)]."""
    rng = np.random.default_rng(seed)
    lab, y, n0 = _symbols(points, n, snr_db, rng)
    d = -np.abs(y[:, None] - points[None, :]) ** 2 / n0
    own = d[np.arange(n), lab]
    return float(np.log(points.size) - np.mean(logsumexp(d, axis=1) - own))


def exhaustive_ml(codewords, llrs):
    """Codeword maximizing sum_n x_n t_n with x = 2c - 1."""
    score = (2.0 * codewords - 1.0) @ llrs
    return codewords[int(np.argmax(score))]


def metric_argmin(codewords, llrs):
    """Codewords minimizing the rank-weighted disagreement with the hard decision; all minimizers returned."""
    n = llrs.size
    hard = (llrs >= 0).astype(int)
    ranks = np.empty(n, dtype=int)
    ranks[np.argsort(np.abs(llrs))] = np.arange(1, n + 1)
    cost = ((codewords != hard) * ranks).sum(axis=1)
    return codewords[cost == cost.min()]
