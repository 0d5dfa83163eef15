"""Samplers for symmetric +-1 matrix ensembles.

Four kinds: the full Curie-Weiss ensemble (all N(N+1)/2 upper-triangle spins
conditionally iid given one latent t with mixing scale N^2), the diagonal
Curie-Weiss ensemble (one latent t per diagonal, mixing scale N), generalized
ensembles e^{-N^alpha F} with an arbitrary even potential, and the iid
Rademacher baseline.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .definetti import DeFinettiMeasure, PointMass, Potential, curie_weiss_potential
from .errors import ConfigError, DomainError, UnsupportedEnsembleError

__all__ = [
    "EnsembleConfig",
    "SpinMatrix",
    "ScaledMatrix",
    "sample_full_cw",
    "sample_diagonal_cw",
    "sample_generalized",
    "sample_iid",
    "sample_matrix",
    "scale",
    "mixing_measure",
    "seed_stream",
    "dump_matrix",
]

N_MAX = 4096

_PURPOSE_CODES = {"latent": 0, "spins": 1, "mc": 2}


def seed_stream(seed: int, replica: int, purpose: str) -> np.random.Generator:
    """Deterministic, disjoint substream for (seed, replica, purpose).

    The latent-t draw and the spin draws of one replica never share a stream,
    so replicas can run in parallel and still reproduce bit-identically.
    """
    try:
        code = _PURPOSE_CODES[purpose]
    except KeyError:
        raise ConfigError(f"unknown stream purpose {purpose!r}") from None
    ss = np.random.SeedSequence(seed, spawn_key=(replica, code))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class EnsembleConfig:
    kind: str  # full_cw | diagonal_cw | generalized | iid
    N: int
    beta: float | None = None
    alpha: float | None = None
    potential: Potential | None = None
    seed: int = 0
    replica_index: int = 0
    # diagonal_cw only: "ambient" draws each diagonal's spins as the first
    # N-k coordinates of an N-spin Curie-Weiss law (mixing scale N);
    # "length" uses the (N-k)-spin law instead.
    diagonal_law: str = "ambient"

    def __post_init__(self):
        if self.kind not in ("full_cw", "diagonal_cw", "generalized", "iid"):
            raise ConfigError(f"unknown ensemble kind {self.kind!r}")
        if not 1 <= self.N <= N_MAX:
            raise ConfigError(f"N must be in [1, {N_MAX}], got {self.N}")
        if self.kind in ("full_cw", "diagonal_cw"):
            if self.beta is None or not self.beta > 0:
                raise ConfigError(f"{self.kind} requires beta > 0")
        if self.kind == "generalized":
            if self.alpha is None or not self.alpha > 0:
                raise ConfigError("generalized kind requires alpha > 0")
            if self.potential is None and self.beta is None:
                raise ConfigError(
                    "generalized kind requires a potential (or beta for F_beta)")
        if self.diagonal_law not in ("ambient", "length"):
            raise ConfigError(f"unknown diagonal_law {self.diagonal_law!r}")
        if self.replica_index < 0:
            raise ConfigError("replica_index must be non-negative")

    def with_replica(self, replica: int) -> "EnsembleConfig":
        return replace(self, replica_index=replica)


@dataclass(frozen=True)
class SpinMatrix:
    N: int
    entries: np.ndarray  # int8, symmetric, values in {-1, +1}
    latent_t: float | np.ndarray | None
    config: EnsembleConfig

    def __post_init__(self):
        self.entries.setflags(write=False)


@dataclass(frozen=True)
class ScaledMatrix:
    """View of a spin matrix with entries divided by N^exponent.

    exponent=1/2 is the semicircle normalization A_N, exponent=1 the B_N
    matrix of the norm-transition experiments.
    """

    source: SpinMatrix
    exponent: float

    @property
    def values(self) -> np.ndarray:
        return self.source.entries.astype(float) / self.source.N**self.exponent


def scale(X: SpinMatrix, gamma: float) -> ScaledMatrix:
    if gamma < 0:
        raise DomainError(f"gamma must be non-negative, got {gamma}")
    return ScaledMatrix(source=X, exponent=gamma)


# ---------------------------------------------------------------------------
# mixing measures (cached: construction runs adaptive quadrature)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _cw_measure(beta: float, scale_: float) -> DeFinettiMeasure:
    return DeFinettiMeasure(curie_weiss_potential(beta), scale_)


_generalized_cache: dict[tuple[int, float], DeFinettiMeasure] = {}


def _measure_for(potential: Potential, scale_: float) -> DeFinettiMeasure:
    key = (id(potential), scale_)
    if key not in _generalized_cache:
        if len(_generalized_cache) > 64:
            _generalized_cache.clear()
        _generalized_cache[key] = DeFinettiMeasure(potential, scale_)
    return _generalized_cache[key]


def mixing_measure(cfg: EnsembleConfig):
    """The de Finetti mixing measure of the shared latent t for ensembles
    with a single t (full, generalized, iid).  Raises for diagonal_cw, whose
    latent field is one t per diagonal."""
    if cfg.kind == "full_cw":
        return _cw_measure(cfg.beta, float(cfg.N) ** 2)
    if cfg.kind == "generalized":
        pot = cfg.potential or curie_weiss_potential(cfg.beta)
        return _measure_for(pot, float(cfg.N) ** cfg.alpha)
    if cfg.kind == "iid":
        return PointMass(0.0)
    raise UnsupportedEnsembleError(
        "diagonal_cw has no single shared mixing measure")


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def _spin_fill(N: int, t: float, rng: np.random.Generator) -> np.ndarray:
    """Symmetric matrix of conditionally iid spins with mean t (upper triangle
    incl. diagonal drawn, mirrored)."""
    iu = np.triu_indices(N)
    spins = np.where(rng.random(len(iu[0])) < 0.5 * (1.0 + t), 1, -1).astype(np.int8)
    X = np.zeros((N, N), dtype=np.int8)
    X[iu] = spins
    X.T[iu] = spins
    return X


def _streams(cfg: EnsembleConfig, rng: np.random.Generator | None):
    if rng is None:
        return (seed_stream(cfg.seed, cfg.replica_index, "latent"),
                seed_stream(cfg.seed, cfg.replica_index, "spins"))
    children = rng.spawn(2)
    return children[0], children[1]


def sample_full_cw(cfg: EnsembleConfig,
                   rng: np.random.Generator | None = None) -> SpinMatrix:
    """One draw of the full Curie-Weiss ensemble: latent t from the mixing
    measure with scale N^2, then conditionally iid spins with mean t."""
    if cfg.kind != "full_cw":
        raise ConfigError(f"config kind is {cfg.kind!r}, expected 'full_cw'")
    r_latent, r_spins = _streams(cfg, rng)
    t = mixing_measure(cfg).sample_t(r_latent)
    return SpinMatrix(N=cfg.N, entries=_spin_fill(cfg.N, t, r_spins),
                      latent_t=t, config=cfg)


def sample_generalized(cfg: EnsembleConfig,
                       rng: np.random.Generator | None = None) -> SpinMatrix:
    """Generalized ensemble: latent t from e^{-N^alpha F(t)/2}/(1-t^2)."""
    if cfg.kind != "generalized":
        raise ConfigError(f"config kind is {cfg.kind!r}, expected 'generalized'")
    r_latent, r_spins = _streams(cfg, rng)
    t = mixing_measure(cfg).sample_t(r_latent)
    return SpinMatrix(N=cfg.N, entries=_spin_fill(cfg.N, t, r_spins),
                      latent_t=t, config=cfg)


def sample_diagonal_cw(cfg: EnsembleConfig,
                       rng: np.random.Generator | None = None) -> SpinMatrix:
    """Diagonal Curie-Weiss ensemble: independent latent t_k per diagonal
    k = 0..N-1, each diagonal conditionally iid given its t_k."""
    if cfg.kind != "diagonal_cw":
        raise ConfigError(f"config kind is {cfg.kind!r}, expected 'diagonal_cw'")
    r_latent, r_spins = _streams(cfg, rng)
    N = cfg.N
    if cfg.diagonal_law == "ambient":
        m = _cw_measure(cfg.beta, float(N))
        ts = np.atleast_1d(m.sample_t(r_latent, size=N))
    else:
        ts = np.array([
            _cw_measure(cfg.beta, float(N - k)).sample_t(r_latent)
            for k in range(N)])
    X = np.zeros((N, N), dtype=np.int8)
    for k in range(N):
        n_k = N - k
        spins = np.where(r_spins.random(n_k) < 0.5 * (1.0 + ts[k]),
                         1, -1).astype(np.int8)
        i = np.arange(n_k)
        X[i, i + k] = spins
        X[i + k, i] = spins
    return SpinMatrix(N=N, entries=X, latent_t=ts, config=cfg)


def sample_iid(cfg: EnsembleConfig,
               rng: np.random.Generator | None = None) -> SpinMatrix:
    """iid fair +-1 baseline (symmetric)."""
    if cfg.kind != "iid":
        raise ConfigError(f"config kind is {cfg.kind!r}, expected 'iid'")
    _, r_spins = _streams(cfg, rng)
    return SpinMatrix(N=cfg.N, entries=_spin_fill(cfg.N, 0.0, r_spins),
                      latent_t=None, config=cfg)


_SAMPLERS = {
    "full_cw": sample_full_cw,
    "diagonal_cw": sample_diagonal_cw,
    "generalized": sample_generalized,
    "iid": sample_iid,
}


def sample_matrix(cfg: EnsembleConfig,
                  rng: np.random.Generator | None = None) -> SpinMatrix:
    """Dispatch on cfg.kind."""
    return _SAMPLERS[cfg.kind](cfg, rng)


def sample_full_cw_batch(cfg: EnsembleConfig, replicas: int,
                         rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized batch of full-CW (or generalized/iid) draws for Monte Carlo.

    Returns (ts, X) with X of shape (replicas, N, N).  Intended for small N.
    """
    m = mixing_measure(cfg)
    ts = np.atleast_1d(m.sample_t(rng, size=replicas))
    N = cfg.N
    iu = np.triu_indices(N)
    u = rng.random((replicas, len(iu[0])))
    spins = np.where(u < 0.5 * (1.0 + ts[:, None]), 1, -1).astype(np.int8)
    X = np.zeros((replicas, N, N), dtype=np.int8)
    X[:, iu[0], iu[1]] = spins
    X[:, iu[1], iu[0]] = spins
    return ts, X


# ---------------------------------------------------------------------------
# plain-text dump
# ---------------------------------------------------------------------------

def dump_matrix(X: SpinMatrix) -> str:
    """Header line 'N kind beta alpha seed replica latent_t' followed by N
    rows of space-separated +-1 entries.  Missing fields are written as 'nan';
    the diagonal ensemble's latent field is comma-joined."""
    cfg = X.config
    if X.latent_t is None:
        latent = "nan"
    elif np.ndim(X.latent_t) == 0:
        latent = repr(float(X.latent_t))
    else:
        latent = ",".join(repr(float(v)) for v in X.latent_t)
    beta = "nan" if cfg.beta is None else repr(float(cfg.beta))
    alpha = "nan" if cfg.alpha is None else repr(float(cfg.alpha))
    buf = io.StringIO()
    buf.write(f"{X.N} {cfg.kind} {beta} {alpha} {cfg.seed} "
              f"{cfg.replica_index} {latent}\n")
    for row in X.entries:
        buf.write(" ".join(str(int(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()
