"""Chebyshev representation of test functions.

Test functions enter every experiment through their Chebyshev coefficients
on [-1, 1]: the limit functionals have closed forms in these coefficients,
and evaluation anywhere reduces to the Clenshaw recurrence.  The transform
is the direct O(m^2) cosine sum at the Chebyshev-Gauss nodes, exact (to
roundoff) for polynomials of degree <= m.

Convention: ``f = c0 + sum_{j>=1} c_j T_j``, i.e. c0 is the mean against
the arcsine weight, so f(+-1) = sum c_j (+-1)^j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import NonFiniteSample, ToleranceNotMet

__all__ = [
    "ChebyshevSeries",
    "TestFunction",
    "transform",
    "evaluate",
    "hilbert_pv_oracle",
    "BUILTIN_FUNCTIONS",
    "resolve_function",
]

TRIM_TOL = 1e-14


@dataclass(frozen=True)
class ChebyshevSeries:
    """Coefficients c0..cm of a function on [-1, 1] in first-kind Chebyshev basis."""

    coeffs: np.ndarray

    def __init__(self, coeffs: Sequence) -> None:
        arr = np.atleast_1d(np.asarray(coeffs))
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coefficients must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", arr.astype(np.result_type(arr, float)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return evaluate(self, x)

    def trimmed(self, tol: float = TRIM_TOL) -> "ChebyshevSeries":
        """Drop trailing coefficients below tol * max|c_j| (never drops c0)."""
        c = self.coeffs
        cutoff = tol * max(np.max(np.abs(c)), 1e-300)
        keep = len(c)
        while keep > 1 and abs(c[keep - 1]) < cutoff:
            keep -= 1
        return ChebyshevSeries(c[:keep])

    def scaled(self, factor) -> "ChebyshevSeries":
        return ChebyshevSeries(self.coeffs * factor)

    def plus_constant(self, shift) -> "ChebyshevSeries":
        c = self.coeffs.copy()
        c[0] = c[0] + shift
        return ChebyshevSeries(c)

    def derivative_coeffs(self) -> np.ndarray:
        """Coefficients of f' in the same convention (c'_0 is the mean term)."""
        c = self.coeffs
        m = len(c) - 1
        # Standard backward recurrence for d/dx of a Chebyshev series:
        # with full coefficients a_j (a_0 = 2*c_0), b_{j-1} = b_{j+1} + 2*j*a_j.
        b = np.zeros(m + 2)
        for j in range(m, 0, -1):
            b[j - 1] = b[j + 1] + 2.0 * j * c[j]
        out = b[: max(m, 1)]
        out = out.copy()
        out[0] *= 0.5
        return out

    def to_json(self) -> list:
        return [float(v) for v in self.coeffs]


@dataclass(frozen=True)
class TestFunction:
    """A real-analytic evaluator on a neighborhood of [-1, 1].

    ``tail`` extends the function to the unbounded part of the support
    (needed when eigenvalues of the Gaussian or Laguerre ensembles fall
    outside [-1, 1]); it must obey the declared growth bound so that the
    exponential moments exist.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "f"
    tail: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


def transform(f, m: int) -> ChebyshevSeries:
    """Interpolating Chebyshev coefficients of f at the m+1 Chebyshev-Gauss nodes.

    Exact (to roundoff) when f is a polynomial of degree <= m.  Raises
    NonFiniteSample if f returns a non-finite value at a node.
    """
    if m < 0:
        raise ValueError("degree must be nonnegative")
    fn = f.fn if isinstance(f, TestFunction) else f
    k = np.arange(m + 1)
    theta = (2.0 * k + 1.0) * math.pi / (2.0 * (m + 1))
    x = np.cos(theta)
    fx = np.asarray(fn(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape).astype(float)
    if not np.all(np.isfinite(fx)):
        bad = x[~np.isfinite(fx)]
        raise NonFiniteSample(f"non-finite sample at node(s) {bad[:3]}")
    j = k[:, None]
    cos_table = np.cos(j * theta[None, :])
    c = (2.0 / (m + 1)) * cos_table @ fx
    c[0] *= 0.5
    return ChebyshevSeries(c)


def evaluate(s: ChebyshevSeries, x):
    """Clenshaw evaluation of c0 + sum c_j T_j(x); defined for all real x."""
    c = s.coeffs
    xa = np.asarray(x, dtype=float)
    b1 = np.zeros_like(xa)
    b2 = np.zeros_like(xa)
    two_x = 2.0 * xa
    for j in range(len(c) - 1, 0, -1):
        b1, b2 = c[j] + two_x * b1 - b2, b1
    out = c[0] + xa * b1 - b2
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def hilbert_pv_oracle(s: ChebyshevSeries, x: float, tol: float = 1e-9) -> float:
    """Principal-value integral of f'(y) sqrt(1-y^2) / (x - y) over (-1, 1).

    Brute-force cross-check for the coefficient form of the variance
    functional: symmetric excision around y = x plus adaptive quadrature on
    the remainder.  Only meant as an oracle, not a production path.
    """
    if not -1.0 < x < 1.0:
        raise ValueError("x must lie strictly inside (-1, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    dc = s.derivative_coeffs()
    ds = ChebyshevSeries(dc)

    def g(y):
        return evaluate(ds, y) * math.sqrt(max(1.0 - y * y, 0.0))

    eps = min(1.0 - abs(x), 0.5) * 0.5
    total_err = 0.0
    out = 0.0
    for lo, hi in ((-1.0, x - eps), (x + eps, 1.0)):
        if hi > lo:
            val, err = integrate.quad(
                lambda y: g(y) / (x - y), lo, hi, epsabs=tol / 8, epsrel=0.0, limit=400
            )
            out += val
            total_err += err

    # Symmetric window: pv int_{x-eps}^{x+eps} g(y)/(x-y) dy
    #                 = int_0^eps (g(x-u) - g(x+u))/u du, with a removable 0/0 at u=0.
    d2s = ChebyshevSeries(ds.derivative_coeffs())
    root = math.sqrt(max(1.0 - x * x, 1e-300))
    g_prime_x = evaluate(d2s, x) * root - evaluate(ds, x) * x / root

    def sym(u):
        if u == 0.0:
            return -2.0 * g_prime_x
        return (g(x - u) - g(x + u)) / u

    val, err = integrate.quad(sym, 0.0, eps, epsabs=tol / 8, epsrel=0.0, limit=400)
    out += val
    total_err += err
    if total_err > tol:
        raise ToleranceNotMet(
            f"pv quadrature error estimate {total_err:.2e} exceeds tol {tol:.1e}"
        )
    return out


def _runge(x):
    return 1.0 / (1.0 + 4.0 * np.asarray(x, dtype=float) ** 2)


BUILTIN_FUNCTIONS = {
    "exp": TestFunction(np.exp, name="exp", tail=np.exp),
    "runge": TestFunction(_runge, name="runge", tail=_runge),
}


def resolve_function(name: str, degree: int = 40) -> tuple[TestFunction, ChebyshevSeries]:
    """Resolve a named built-in ('chebyshev:k', 'exp', 'runge') to (function, series)."""
    if name.startswith("chebyshev:"):
        k = int(name.split(":", 1)[1])
        if k < 0:
            raise ValueError("chebyshev index must be nonnegative")
        coeffs = np.zeros(k + 1)
        coeffs[k] = 1.0
        series = ChebyshevSeries(coeffs)
        fn = TestFunction(lambda x, s=series: evaluate(s, x), name=f"T{k}",
                          tail=lambda x, s=series: evaluate(s, x))
        return fn, series
    if name in BUILTIN_FUNCTIONS:
        fn = BUILTIN_FUNCTIONS[name]
        return fn, transform(fn, degree).trimmed()
    raise KeyError(f"unknown built-in function {name!r}")
