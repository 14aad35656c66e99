"""Exact finite-n eigenvalue samplers for the three unitary ensembles.

All three ensembles are scaled so that the limiting spectral measure lives
on [-1, 1]:

* Gaussian: joint density prop. to prod (x_k - x_j)^2 exp(-2n sum x_j^2) on R^n.
  Sampled from the beta=2 Hermite tridiagonal model (diag N(0,1), off-diag
  chi_{2k}/sqrt(2)) whose eigenvalues carry exp(-sum lam^2/2); dividing by
  2 sqrt(n) produces the target weight.
* Laguerre: density prop. to prod (x_k-x_j)^2 prod (1+x_j)^alpha
  exp(-2n sum (x_j+1)) on [-1, inf)^n.  Sampled from the beta=2 Laguerre
  bidiagonal model (L = B B^T, t ~ t^alpha e^{-t/2}); x = t/(4n) - 1.
* Jacobi: density prop. to prod (x_k-x_j)^2 prod (1+x_j)^alpha (1-x_j)^beta
  on [-1,1]^n.  Sampled from the Jacobi tridiagonal model built from
  beta-distributed canonical coordinates on [0,1]; x = 2u - 1.

Streams are counter-based (Philox keyed by seed, jumped by partition index),
so (spec, seed, index) determines every draw bit-for-bit and disjoint
partitions can be generated concurrently.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import EigensolveFailure, OutOfSupport

__all__ = [
    "Ensemble",
    "EnsembleSpec",
    "EigenSample",
    "sample",
    "sample_batch",
    "counting_measure_moment",
    "rejection_sample",
    "write_csv",
    "read_csv",
    "write_binary",
    "read_binary",
]

_BINARY_MAGIC = b"LESLAB01"


class Ensemble(str, Enum):
    GUE = "gue"
    LUE = "lue"
    JUE = "jue"


@dataclass(frozen=True)
class EnsembleSpec:
    """Which ensemble, its size, and the weight parameters alpha, beta > -1."""

    kind: Ensemble
    n: int
    alpha: float = 0.0
    beta_param: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Ensemble(self.kind))
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.kind is Ensemble.GUE:
            if self.alpha != 0.0 or self.beta_param != 0.0:
                raise ValueError("GUE takes no alpha/beta parameters")
        elif self.kind is Ensemble.LUE:
            if not self.alpha > -1.0:
                raise ValueError("LUE requires alpha > -1")
            if self.beta_param != 0.0:
                raise ValueError("LUE takes no beta parameter")
        else:
            if not (self.alpha > -1.0 and self.beta_param > -1.0):
                raise ValueError("JUE requires alpha > -1 and beta > -1")

    @property
    def support(self) -> tuple[float, float]:
        if self.kind is Ensemble.GUE:
            return (-np.inf, np.inf)
        if self.kind is Ensemble.LUE:
            return (-1.0, np.inf)
        return (-1.0, 1.0)

    def support_contains(self, x, slack: float = 0.0) -> np.ndarray:
        lo, hi = self.support
        xa = np.asarray(x, dtype=float)
        return (xa >= lo - slack) & (xa <= hi + slack)

    def potential(self, x):
        """External potential V(x) in the exponent weight n V - omega."""
        xa = np.asarray(x, dtype=float)
        if self.kind is Ensemble.GUE:
            return 2.0 * xa**2
        if self.kind is Ensemble.LUE:
            return 2.0 * (xa + 1.0)
        return np.zeros_like(xa)

    def omega(self, x):
        """Fixed (n-independent) logarithmic part of the weight exponent."""
        xa = np.asarray(x, dtype=float)
        if self.kind is Ensemble.GUE:
            return np.zeros_like(xa)
        if self.kind is Ensemble.LUE:
            return self.alpha * np.log1p(xa)
        return self.alpha * np.log1p(xa) + self.beta_param * np.log1p(-xa)

    def weight_exponent(self, x):
        """Q_n(x) = n V(x) - omega(x); the weight is exp(-Q_n)."""
        return self.n * self.potential(x) - self.omega(x)


@dataclass(frozen=True)
class EigenSample:
    """One exact draw: strictly sorted eigenvalues plus stream provenance."""

    eigenvalues: np.ndarray
    seed: int
    partition_index: int

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(lam) <= 0.0):
            raise EigensolveFailure("eigenvalues not strictly increasing (sampler bug)")
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


def _stream(seed: int, index: int) -> np.random.Generator:
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be nonnegative")
    return np.random.Generator(np.random.Philox(key=seed).jumped(index))


def _chunk_size(n: int) -> int:
    # keeps the dense eigensolver working set around 32 MB
    return max(64, (1 << 22) // max(n * n, 64))


def _gue_tridiag(rng: np.random.Generator, n: int, draws: int):
    diag = rng.standard_normal((draws, n))
    k = np.arange(n - 1, 0, -1, dtype=float)
    off = np.sqrt(rng.gamma(shape=k, scale=1.0, size=(draws, n - 1)))
    return diag, off


def _lue_bidiag_sq(rng: np.random.Generator, n: int, alpha: float, draws: int):
    # squared bidiagonal entries; chi^2_k = Gamma(k/2, scale 2)
    dof_d = 2.0 * (alpha + np.arange(n, 0, -1, dtype=float))
    dof_s = 2.0 * np.arange(n - 1, 0, -1, dtype=float)
    d2 = rng.gamma(shape=dof_d / 2.0, scale=2.0, size=(draws, n))
    s2 = rng.gamma(shape=dof_s / 2.0, scale=2.0, size=(draws, n - 1)) if n > 1 else None
    return d2, s2


def _lue_tridiag_from_bidiag(d2, s2):
    # L = B B^T for lower-bidiagonal B: diag_i = d_i^2 + s_{i-1}^2, off_i = d_i s_i
    draws, n = d2.shape
    diag = d2.copy()
    if n > 1:
        diag[:, 1:] += s2
        off = np.sqrt(d2[:, :-1] * s2)
    else:
        off = np.zeros((draws, 0))
    return diag, off


def _jue_tridiag(rng: np.random.Generator, n: int, alpha: float, beta: float, draws: int):
    # Canonical-coordinate chain for the Jacobi ensemble on [0,1] with
    # weight u^alpha (1-u)^beta (Dyson index 2).
    a = alpha + 1.0
    b = beta + 1.0
    p = np.zeros((draws, 2 * n))
    i = np.arange(1, n + 1, dtype=float)
    p[:, 1::2] = rng.beta(n - i + a, n - i + b, size=(draws, n))
    if n > 1:
        j = np.arange(1, n, dtype=float)
        p[:, 2::2] = rng.beta(n - j, n - j + a + b - 1.0, size=(draws, n - 1))
    q = 1.0 - p
    zeta = np.zeros((draws, 2 * n))
    zeta[:, 1] = p[:, 1]
    zeta[:, 2:] = q[:, 1:-1] * p[:, 2:]
    # Jacobi-matrix entries from the chain: d_i = zeta_{2i-2} + zeta_{2i-1},
    # e_i^2 = zeta_{2i-1} zeta_{2i}
    diag = zeta[:, 0::2] + zeta[:, 1::2]
    off = np.sqrt(zeta[:, 1:-1:2] * zeta[:, 2::2]) if n > 1 else np.zeros((draws, 0))
    return diag, off


def _eig_tridiag_stack(diag, off) -> np.ndarray:
    """Eigenvalues of a stack of symmetric tridiagonal matrices, row-sorted."""
    draws, n = diag.shape
    if n == 1:
        return diag.copy()
    m = np.zeros((draws, n, n))
    idx = np.arange(n)
    m[:, idx, idx] = diag
    m[:, idx[:-1], idx[:-1] + 1] = off
    m[:, idx[:-1] + 1, idx[:-1]] = off
    try:
        return np.linalg.eigvalsh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise EigensolveFailure(str(exc)) from exc


def _sample_chunk(spec: EnsembleSpec, rng: np.random.Generator, draws: int) -> np.ndarray:
    n = spec.n
    if spec.kind is Ensemble.GUE:
        diag, off = _gue_tridiag(rng, n, draws)
        lam = _eig_tridiag_stack(diag, off)
        return lam / (2.0 * np.sqrt(n))
    if spec.kind is Ensemble.LUE:
        d2, s2 = _lue_bidiag_sq(rng, n, spec.alpha, draws)
        diag, off = _lue_tridiag_from_bidiag(d2, s2)
        t = _eig_tridiag_stack(diag, off)
        return t / (4.0 * n) - 1.0
    diag, off = _jue_tridiag(rng, n, spec.alpha, spec.beta_param, draws)
    u = _eig_tridiag_stack(diag, off)
    return 2.0 * u - 1.0


def _sample_chunk_dense(spec: EnsembleSpec, rng: np.random.Generator, draws: int) -> np.ndarray:
    """Independent dense-matrix cross-check sampler (integer parameters for LUE/JUE)."""
    n = spec.n
    if spec.kind is Ensemble.GUE:
        g = rng.standard_normal((draws, n, n)) + 1j * rng.standard_normal((draws, n, n))
        h = (g + np.conj(np.swapaxes(g, -1, -2))) / 2.0
        lam = np.linalg.eigvalsh(h)
        return lam / (2.0 * np.sqrt(n))
    if spec.kind is Ensemble.LUE:
        m = n + int(round(spec.alpha))
        if abs(m - n - spec.alpha) > 1e-12 or m < n:
            raise ValueError("dense LUE sampler needs integer alpha >= 0")
        x = (rng.standard_normal((draws, n, m)) + 1j * rng.standard_normal((draws, n, m))) / np.sqrt(2.0)
        w = x @ np.conj(np.swapaxes(x, -1, -2))
        t = np.linalg.eigvalsh(w)
        return t / (2.0 * n) - 1.0
    m1 = n + int(round(spec.alpha))
    m2 = n + int(round(spec.beta_param))
    if abs(m1 - n - spec.alpha) > 1e-12 or abs(m2 - n - spec.beta_param) > 1e-12:
        raise ValueError("dense JUE sampler needs integer alpha, beta >= 0")
    x1 = (rng.standard_normal((draws, n, m1)) + 1j * rng.standard_normal((draws, n, m1))) / np.sqrt(2.0)
    x2 = (rng.standard_normal((draws, n, m2)) + 1j * rng.standard_normal((draws, n, m2))) / np.sqrt(2.0)
    a = x1 @ np.conj(np.swapaxes(x1, -1, -2))
    b = x2 @ np.conj(np.swapaxes(x2, -1, -2))
    u = np.linalg.eigvalsh(np.linalg.solve(a + b, a))
    return 2.0 * u - 1.0


def sample_batch(
    spec: EnsembleSpec,
    seed: int,
    partition: int,
    draws: int,
    method: str = "tridiagonal",
) -> np.ndarray:
    """Vectorized draws from one partition stream; rows sorted ascending.

    Deterministic function of (spec, seed, partition, draws, method).
    """
    if draws < 1:
        raise ValueError("draws must be positive")
    if method not in ("tridiagonal", "dense"):
        raise ValueError(f"unknown sampling method {method!r}")
    rng = _stream(seed, partition)
    sampler = _sample_chunk if method == "tridiagonal" else _sample_chunk_dense
    chunk = _chunk_size(spec.n)
    out = np.empty((draws, spec.n))
    done = 0
    while done < draws:
        take = min(chunk, draws - done)
        out[done : done + take] = sampler(spec, rng, take)
        done += take
    out.sort(axis=1)
    return out


def sample(spec: EnsembleSpec, seed: int, index: int) -> EigenSample:
    """One exact draw from the joint eigenvalue law at stream (seed, index)."""
    lam = sample_batch(spec, seed, index, 1)[0]
    return EigenSample(eigenvalues=lam, seed=seed, partition_index=index)


def counting_measure_moment(sample, k: int) -> float:
    """k-th moment (1/n) sum lambda_j^k of the empirical counting measure."""
    if k < 0:
        raise ValueError("moment order must be nonnegative")
    lam = sample.eigenvalues if isinstance(sample, EigenSample) else np.asarray(sample)
    return float(np.mean(lam**k))


# ---------------------------------------------------------------------------
# Rejection oracle for tiny n: samples directly from the explicit joint
# density, for certifying the matrix-model scalings.
# ---------------------------------------------------------------------------

def rejection_sample(spec: EnsembleSpec, draws: int, seed: int, batch: int = 200_000) -> np.ndarray:
    """Exact rejection sampling from the joint density for n <= 3.

    Proposals are iid from the single-particle weight (slightly flattened for
    the non-compact ensembles); the Vandermonde-squared factor is bounded in
    closed form, so acceptance is exact.
    """
    n = spec.n
    if n > 3:
        raise ValueError("rejection oracle only supports n <= 3")
    from .functionals import joint_density_log  # local import to avoid a cycle

    rng = _stream(seed, 0)
    k = n * (n - 1)  # power of the spread in the Vandermonde bound
    eps = 0.25
    if spec.kind is Ensemble.GUE:
        sigma2 = 1.0 / (4.0 * n * (1.0 - eps))

        def propose(size):
            return rng.normal(0.0, np.sqrt(sigma2), size=(size, n))

        def log_prop(x):
            return -np.sum(x**2, axis=1) / (2.0 * sigma2)

        if k > 0:
            r2_star = k / (8.0 * n * eps)
            log_m = 0.5 * k * np.log(4.0 * r2_star) - 2.0 * n * eps * r2_star
        else:
            log_m = 0.0
    elif spec.kind is Ensemble.LUE:
        rate = 2.0 * n * (1.0 - eps)
        shape = spec.alpha + 1.0

        def propose(size):
            return rng.gamma(shape, 1.0 / rate, size=(size, n)) - 1.0

        def log_prop(x):
            u = x + 1.0
            return np.sum(spec.alpha * np.log(u) - rate * u, axis=1)

        if k > 0:
            u_star = k / (2.0 * n * eps)
            log_m = k * np.log(2.0 * u_star) - 2.0 * n * eps * u_star
        else:
            log_m = 0.0
    else:

        def propose(size):
            return 2.0 * rng.beta(spec.alpha + 1.0, spec.beta_param + 1.0, size=(size, n)) - 1.0

        def log_prop(x):
            return np.sum(
                spec.alpha * np.log1p(x) + spec.beta_param * np.log1p(-x), axis=1
            )

        log_m = k * np.log(2.0)

    def log_target(x):
        out = -np.sum(spec.weight_exponent(x), axis=1)
        for i in range(n):
            for j in range(i + 1, n):
                out += 2.0 * np.log(np.abs(x[:, i] - x[:, j]))
        return out

    # spot-check the vectorized target against the reference implementation
    probe = propose(4)
    ref = np.array([joint_density_log(spec, row) for row in probe])
    assert np.allclose(log_target(probe), ref, rtol=1e-12, atol=1e-12)

    out = np.empty((draws, n))
    got = 0
    attempts = 0
    while got < draws:
        x = propose(batch)
        la = log_target(x) - log_prop(x) - log_m
        if np.any(la > 1e-9):
            raise RuntimeError("rejection bound violated; envelope constant is wrong")
        accept = np.log(rng.random(batch)) < la
        take = min(int(accept.sum()), draws - got)
        out[got : got + take] = x[accept][:take]
        got += take
        attempts += batch
        if attempts > 5000 * draws + 50_000_000:
            raise RuntimeError("rejection sampler acceptance rate too low")
    out.sort(axis=1)
    return out


# ---------------------------------------------------------------------------
# Batch serialization
# ---------------------------------------------------------------------------

def write_csv(path_or_buf, spec: EnsembleSpec, seed: int, index: int, batch: np.ndarray) -> None:
    """CSV batch format: two comment header lines, then one row of n values per draw."""
    own = isinstance(path_or_buf, (str, bytes))
    fh = open(path_or_buf, "w") if own else path_or_buf
    try:
        fh.write("# ensemble,n,alpha,beta,seed,index\n")
        fh.write(
            f"# {spec.kind.value},{spec.n},{spec.alpha!r},{spec.beta_param!r},{seed},{index}\n"
        )
        for row in np.atleast_2d(batch):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    finally:
        if own:
            fh.close()


def read_csv(path_or_buf) -> tuple[EnsembleSpec, int, int, np.ndarray]:
    own = isinstance(path_or_buf, (str, bytes))
    fh = open(path_or_buf, "r") if own else path_or_buf
    try:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("missing CSV header")
        meta = fh.readline().lstrip("# ").strip().split(",")
        kind, n, alpha, beta, seed, index = meta
        spec = EnsembleSpec(Ensemble(kind), int(n), float(alpha), float(beta))
        rows = [
            [float(v) for v in line.strip().split(",")]
            for line in fh
            if line.strip() and not line.startswith("#")
        ]
        return spec, int(seed), int(index), np.asarray(rows)
    finally:
        if own:
            fh.close()


def write_binary(path_or_buf, spec: EnsembleSpec, seed: int, index: int, batch: np.ndarray) -> None:
    """Compact batch format: magic 'LESLAB01', little-endian header, then f64 data.

    Header after the magic: kind (1 byte: 0 gue / 1 lue / 2 jue), uint32 n,
    f64 alpha, f64 beta, int64 seed, int64 index, uint64 draw count; data is
    draws*n little-endian float64, row major.
    """
    batch = np.atleast_2d(np.asarray(batch, dtype="<f8"))
    kind_code = {"gue": 0, "lue": 1, "jue": 2}[spec.kind.value]
    own = isinstance(path_or_buf, (str, bytes))
    fh = open(path_or_buf, "wb") if own else path_or_buf
    try:
        fh.write(_BINARY_MAGIC)
        fh.write(struct.pack("<BIddqqQ", kind_code, spec.n, spec.alpha, spec.beta_param, seed, index, batch.shape[0]))
        fh.write(batch.tobytes())
    finally:
        if own:
            fh.close()


def read_binary(path_or_buf) -> tuple[EnsembleSpec, int, int, np.ndarray]:
    own = isinstance(path_or_buf, (str, bytes))
    fh = open(path_or_buf, "rb") if own else path_or_buf
    try:
        if fh.read(len(_BINARY_MAGIC)) != _BINARY_MAGIC:
            raise ValueError("bad magic; not a leslab binary batch")
        kind_code, n, alpha, beta, seed, index, count = struct.unpack(
            "<BIddqqQ", fh.read(struct.calcsize("<BIddqqQ"))
        )
        kind = {0: "gue", 1: "lue", 2: "jue"}[kind_code]
        spec = EnsembleSpec(Ensemble(kind), n, alpha, beta)
        data = np.frombuffer(fh.read(8 * count * n), dtype="<f8").reshape(count, n)
        return spec, seed, index, data.copy()
    finally:
        if own:
            fh.close()
