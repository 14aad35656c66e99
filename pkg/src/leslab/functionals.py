"""Limiting functionals of the CLT and the exact small-n characteristic function.

The centered, normalized linear statistic is

    S = (sum_j f(lambda_j) - n*kappa[f] - mu[f]) / sqrt(k_variance[f]),

where kappa is the equilibrium-measure mean of f, mu the alpha/beta edge
correction, and k_variance the limiting variance.  In Chebyshev coefficients
(f = c0 + sum c_j T_j) these have closed forms, derived from the defining
integrals by x = cos(theta):

    kappa:  GUE c0 - c2/2,  LUE c0 - c1/2,  JUE c0
    mu:     LUE (alpha/2)(c0 - f(-1));  JUE adds (beta/2)(c0 - f(1));  GUE 0
    k_variance: (1/4) sum_{j>=1} j c_j^2

The integral definitions are retained behind ``*_quadrature`` oracles.

For n <= 8 the characteristic function of S is computed exactly as a ratio
of two n x n moment determinants (the exponential moment of a linear
statistic equals such a ratio), with moments accumulated in extended
precision and the common scale normalized away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .chebyshev import ChebyshevSeries, evaluate, hilbert_pv_oracle
from .ensembles import Ensemble, EnsembleSpec
from .errors import IllConditioned, OutOfSupport, TooLarge

__all__ = [
    "LimitFunctionals",
    "EquilibriumMeasure",
    "HankelOracle",
    "kappa",
    "mu",
    "k_variance",
    "limit_functionals",
    "equilibrium",
    "joint_density_log",
    "hankel_charfn",
    "kappa_quadrature",
    "mu_quadrature",
    "k_variance_quadrature",
]


@dataclass(frozen=True)
class LimitFunctionals:
    kappa: float
    mu: float
    k_var: float

    def __post_init__(self):
        if self.k_var < -1e-15:
            raise ValueError("variance functional must be nonnegative")


def kappa(spec: EnsembleSpec, f: ChebyshevSeries) -> float:
    """Equilibrium-measure mean of f, in closed coefficient form."""
    c = f.coeffs
    if spec.kind is Ensemble.GUE:
        return float(c[0] - (c[2] / 2.0 if len(c) > 2 else 0.0))
    if spec.kind is Ensemble.LUE:
        return float(c[0] - (c[1] / 2.0 if len(c) > 1 else 0.0))
    return float(c[0])


def mu(spec: EnsembleSpec, f: ChebyshevSeries) -> float:
    """Edge correction from the alpha/beta weight factors."""
    c0 = float(f.coeffs[0])
    if spec.kind is Ensemble.GUE:
        return 0.0
    out = spec.alpha / 2.0 * (c0 - evaluate(f, -1.0))
    if spec.kind is Ensemble.JUE:
        out += spec.beta_param / 2.0 * (c0 - evaluate(f, 1.0))
    return float(out)


def k_variance(f: ChebyshevSeries) -> float:
    """Limiting variance (1/4) sum_{j>=1} j c_j^2."""
    c = f.coeffs
    j = np.arange(len(c))
    return float(0.25 * np.sum(j[1:] * c[1:] ** 2))


def limit_functionals(spec: EnsembleSpec, f: ChebyshevSeries) -> LimitFunctionals:
    return LimitFunctionals(kappa=kappa(spec, f), mu=mu(spec, f), k_var=k_variance(f))


# ---------------------------------------------------------------------------
# Quadrature oracles for the defining integrals
# ---------------------------------------------------------------------------

def _quad(fn, tol=1e-12):
    val, _ = integrate.quad(fn, 0.0, math.pi, epsabs=tol, epsrel=0.0, limit=400)
    return val


def kappa_quadrature(spec: EnsembleSpec, f: Callable[[float], float]) -> float:
    """kappa by direct quadrature of the defining integral (x = cos theta)."""
    if spec.kind is Ensemble.GUE:
        return 2.0 / math.pi * _quad(lambda t: f(math.cos(t)) * math.sin(t) ** 2)
    if spec.kind is Ensemble.LUE:
        return 1.0 / math.pi * _quad(lambda t: f(math.cos(t)) * (1.0 - math.cos(t)))
    return 1.0 / math.pi * _quad(lambda t: f(math.cos(t)))


def mu_quadrature(spec: EnsembleSpec, f: Callable[[float], float]) -> float:
    if spec.kind is Ensemble.GUE:
        return 0.0
    fm1 = f(-1.0)
    out = spec.alpha / (2.0 * math.pi) * _quad(lambda t: f(math.cos(t)) - fm1, tol=1e-11)
    if spec.kind is Ensemble.JUE:
        fp1 = f(1.0)
        out += spec.beta_param / (2.0 * math.pi) * _quad(
            lambda t: f(math.cos(t)) - fp1, tol=1e-11
        )
    return out


def k_variance_quadrature(f: ChebyshevSeries, nodes: int = 120, pv_tol: float = 1e-8) -> float:
    """Variance functional via the double integral with the inner pv oracle.

    Outer integral against 1/sqrt(1-x^2) by Chebyshev-Gauss quadrature; the
    singular inner integral delegates to the brute-force pv oracle.
    """
    k = np.arange(nodes)
    x = np.cos((2 * k + 1) * math.pi / (2 * nodes))
    inner = np.array([hilbert_pv_oracle(f, xi, tol=pv_tol) for xi in x])
    fx = evaluate(f, x)
    return float(np.sum(fx * inner) * (math.pi / nodes) / (2.0 * math.pi**2))


# ---------------------------------------------------------------------------
# Equilibrium measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquilibriumMeasure:
    """Closed-form equilibrium density on (-1,1) and its Robin constant."""

    kind: Ensemble
    density: Callable[[np.ndarray], np.ndarray]
    robin: float

    def cdf_complement(self, x):
        """Mass of (x, 1]; elementary antiderivatives of the three densities."""
        xa = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
        if self.kind is Ensemble.GUE:
            return (math.pi / 2 - xa * np.sqrt(1 - xa**2) - np.arcsin(xa)) / math.pi
        if self.kind is Ensemble.LUE:
            return (np.arccos(xa) - np.sqrt(1 - xa**2)) / math.pi
        return np.arccos(xa) / math.pi


def equilibrium(spec: EnsembleSpec) -> EquilibriumMeasure:
    if spec.kind is Ensemble.GUE:
        return EquilibriumMeasure(
            Ensemble.GUE,
            lambda x: 2.0 / math.pi * np.sqrt(np.clip(1.0 - np.asarray(x) ** 2, 0, None)),
            1.0 + 2.0 * math.log(2.0),
        )
    if spec.kind is Ensemble.LUE:
        return EquilibriumMeasure(
            Ensemble.LUE,
            lambda x: 1.0 / math.pi * np.sqrt(np.clip((1.0 - np.asarray(x)) / (1.0 + np.asarray(x)), 0, None)),
            2.0 + 2.0 * math.log(2.0),
        )
    return EquilibriumMeasure(
        Ensemble.JUE,
        lambda x: 1.0 / (math.pi * np.sqrt(np.clip(1.0 - np.asarray(x) ** 2, 1e-300, None))),
        2.0 * math.log(2.0),
    )


def joint_density_log(spec: EnsembleSpec, lambdas) -> float:
    """Unnormalized log joint density: -sum Q_n + 2 sum_{j<k} log|diff|."""
    lam = np.asarray(lambdas, dtype=float)
    lo, hi = spec.support
    inside = (lam > lo) & (lam < hi)
    # parameter values that kill the boundary singularity keep the endpoint legal
    if spec.kind is not Ensemble.GUE and spec.alpha == 0.0:
        inside |= lam == -1.0
    if spec.kind is Ensemble.JUE and spec.beta_param == 0.0:
        inside |= lam == 1.0
    if not np.all(inside):
        raise OutOfSupport(f"eigenvalue(s) outside the support: {lam[~inside]}")
    out = -float(np.sum(spec.weight_exponent(lam)))
    if len(lam) > 1:
        diff = lam[:, None] - lam[None, :]
        iu = np.triu_indices(len(lam), k=1)
        out += 2.0 * float(np.sum(np.log(np.abs(diff[iu]))))
    return out


# ---------------------------------------------------------------------------
# Exact characteristic function via moment determinants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HankelOracle:
    """Exact-characteristic-function oracle for small n.

    Moment matrices are catastrophically ill-conditioned in n, so the oracle
    is capped (default n <= 8) and works in extended precision with a
    condition estimate that trips IllConditioned rather than returning noise.
    """

    spec: EnsembleSpec
    n_max: int = 8
    nodes: int = 200
    max_nodes: int = 3200
    rtol: float = 1e-10
    cond_limit: float = 1e14

    def __post_init__(self):
        if self.spec.n > self.n_max:
            raise TooLarge(f"n = {self.spec.n} exceeds the oracle cap {self.n_max}")


def _gauss_rule(spec: EnsembleSpec, nodes: int):
    """Weighted Gauss rule absorbing exp(-Q_n) after the affine map to [-1,1] scale.

    Returns points x and weights w with sum w * g(x) ~ int g(x) exp(-Q_n(x)) dx
    up to one overall positive constant (which cancels in determinant ratios).
    """
    n = spec.n
    if spec.kind is Ensemble.GUE:
        t, w = special.roots_hermite(nodes)
        x = t / math.sqrt(2.0 * n)
        return x, w
    if spec.kind is Ensemble.LUE:
        t, w = special.roots_genlaguerre(nodes, spec.alpha)
        x = t / (2.0 * n) - 1.0
        return x, w
    t, w = special.roots_jacobi(nodes, spec.beta_param, spec.alpha)
    return t, w


def _moment_matrix(spec: EnsembleSpec, phase: Callable, nodes: int) -> np.ndarray:
    """Scaled moment matrix in clongdouble; common scale removed via x-powers."""
    n = spec.n
    x, w = _gauss_rule(spec, nodes)
    wl = w.astype(np.longdouble)
    xl = x.astype(np.longdouble)
    ph = np.asarray(phase(x), dtype=np.clongdouble)
    base = wl * np.exp(ph)
    # moments mu_j = sum base * x^j, j = 0..2n-2, accumulated in extended precision
    powers = np.empty((2 * n - 1, len(xl)), dtype=np.clongdouble)
    powers[0] = 1.0
    for j in range(1, 2 * n - 1):
        powers[j] = powers[j - 1] * xl
    mom = powers @ base
    scale = np.abs(mom[0])
    if not np.isfinite(float(scale)) or float(scale) == 0.0:
        raise IllConditioned("zeroth moment vanished or overflowed")
    mom = mom / scale
    h = np.empty((n, n), dtype=np.clongdouble)
    for j in range(n):
        h[j] = mom[j : j + n]
    return h


def _det_lu(a: np.ndarray) -> tuple[complex, float]:
    """Determinant by partial-pivot LU in clongdouble; returns (det, cond proxy)."""
    m = a.copy()
    n = m.shape[0]
    det = np.clongdouble(1.0)
    max_entry = float(np.max(np.abs(m))) if n else 1.0
    min_pivot = np.inf
    for k in range(n):
        p = k + int(np.argmax(np.abs(m[k:, k])))
        if p != k:
            m[[k, p]] = m[[p, k]]
            det = -det
        piv = m[k, k]
        if piv == 0:
            return 0.0 + 0.0j, np.inf
        min_pivot = min(min_pivot, float(np.abs(piv)))
        det = det * piv
        if k + 1 < n:
            m[k + 1 :, k:] -= np.outer(m[k + 1 :, k] / piv, m[k, k:])
    cond = max_entry / max(min_pivot, 1e-300)
    return complex(det), cond


def hankel_charfn(oracle: HankelOracle, f: ChebyshevSeries, h: float) -> complex:
    """Exact characteristic function of the normalized statistic at argument h.

    Computed as exp(-i h (n kappa + mu)/sqrt(K)) times the ratio of the
    perturbed and unperturbed moment determinants, the perturbation being the
    purely imaginary exponent i (h/sqrt(K)) f.  Node counts double until the
    ratio stabilizes to rtol.
    """
    spec = oracle.spec
    if h == 0.0:
        return 1.0 + 0.0j
    lf = limit_functionals(spec, f)
    if lf.k_var <= 0.0:
        raise ValueError("statistic requires positive variance functional")
    scale = h / math.sqrt(lf.k_var)

    def phase(x):
        return 1j * scale * evaluate(f, x)

    def zero_phase(x):
        return np.zeros(np.shape(x), dtype=complex)

    prev = None
    nodes = oracle.nodes
    while True:
        num, cond_n = _det_lu(_moment_matrix(spec, phase, nodes))
        den, cond_d = _det_lu(_moment_matrix(spec, zero_phase, nodes))
        if max(cond_n, cond_d) > oracle.cond_limit:
            raise IllConditioned(
                f"moment-matrix condition proxy {max(cond_n, cond_d):.2e} exceeds limit"
            )
        if den == 0:
            raise IllConditioned("unperturbed determinant vanished")
        ratio = num / den
        if prev is not None and abs(ratio - prev) <= oracle.rtol * max(1.0, abs(ratio)):
            break
        if nodes >= oracle.max_nodes:
            if prev is None:
                break
            raise IllConditioned("determinant ratio failed to stabilize")
        prev = ratio
        nodes *= 2
    center = -1j * h * (spec.n * lf.kappa + lf.mu) / math.sqrt(lf.k_var)
    return complex(np.exp(center) * ratio)
