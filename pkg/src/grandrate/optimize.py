from dataclasses import dataclass
from math import sqrt

INV_PHI = (sqrt(5.0) - 1.0) / 2.0


@dataclass
class GoldenResult:
    x: float
    fx: float
    iterations: int
    converged: bool


def golden_section(f, lo: float, hi: float, tol: float = 1e-8, max_iter: int = 500) -> GoldenResult:
    """Minimize a unimodal ``f`` on ``[lo, hi]`` to bracket width ``tol``.

    The interval endpoints are also compared against the interior minimum so
    that a monotone objective returns the better endpoint.
    """
    if not lo < hi:
        raise ValueError(f"empty bracket [{lo}, {hi}]")
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    it = 0
    while b - a > tol and it < max_iter:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
        it += 1
    x, fx = (x1, f1) if f1 <= f2 else (x2, f2)
    for edge in (lo, hi):
        fe = f(edge)
        if fe < fx:
            x, fx = edge, fe
    return GoldenResult(x=x, fx=fx, iterations=it, converged=b - a <= tol)
