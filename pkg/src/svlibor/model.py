"""Model parameterization and volatility factorization.

The displaced forward Libors carry expiry-wise square-root stochastic
variances.  Under the terminal measure, for j = 1..n-1,

    d(L_j + alpha_j) = (L_j + alpha_j) [ (...) dt
        + sqrt(v_j) beta_j . dW + gamma_j . dWhat ],
    dv_j = kappa_j (theta_j - v_j) dt
        + sqrt(v_j) ( sigma_j . dW + sigmabar_j dWbar ),     v_j(0) = theta_j,

where W (dim m), What (dim m_hat) and Wbar (scalar) are independent standard
Brownian motions.  The vol loadings are factorized as

    sigma_j    = eps_j rho_j e_j,
    sigmabar_j = sqrt(1 - rho_j^2) eps_j,

so that |sigma_j|^2 + sigmabar_j^2 = eps_j^2 and the instantaneous
correlation between L_j and v_j is exactly rho_j.  The unit vectors e_j are
rows of the lower-triangular Cholesky factor of the exponential correlation
matrix r_ij = exp(-a |T_i - T_j|), and beta_j = |beta_j| e_j.

Per-expiry arrays follow the package-wide padding convention: entry j holds
the quantity for expiry j, entry 0 is NaN (scalars) or a zero row (vectors).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CorrelationError, DecompositionError, InvariantError

__all__ = [
    "ModelParams",
    "VolFactorization",
    "build_loadings",
    "factorize_vols",
    "build_factorization",
    "instantaneous_correlations",
    "correlation_matrices",
    "load_params",
]

_SCALAR_FIELDS = ("alpha", "beta_norm", "rho", "kappa", "theta", "eps")


def _pad_scalar(raw, n: int, name: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.shape != (n - 1,):
        raise InvariantError(name, f"expected {n - 1} entries, got {arr.shape}")
    out = np.full(n, np.nan)
    out[1:] = arr
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Full model parameter set for expiries j = 1..n-1.

    Parameters
    ----------
    alpha, beta_norm, rho, kappa, theta, eps
        Padded per-expiry arrays (see module docstring): displacement,
        Libor loading norm |beta_j|, Libor-variance correlation, variance
        mean-reversion speed and level, vol of vol.
    gamma
        Padded (n, m_hat) matrix of Gaussian loadings; m_hat = 0 when the
        Gaussian part is absent.
    corr_decay
        Decay rate a >= 0 of the input correlations r_ij = exp(-a|T_i-T_j|).
    """

    alpha: np.ndarray
    beta_norm: np.ndarray
    rho: np.ndarray
    kappa: np.ndarray
    theta: np.ndarray
    eps: np.ndarray
    gamma: np.ndarray = field(default=None)  # type: ignore[assignment]
    corr_decay: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.kappa).size
        for name in _SCALAR_FIELDS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise InvariantError(name, f"expected padded length {n}")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        gamma = self.gamma
        if gamma is None:
            gamma = np.zeros((n, 0))
        gamma = np.array(gamma, dtype=float)
        if gamma.ndim != 2 or gamma.shape[0] != n:
            raise InvariantError("gamma", f"expected shape ({n}, m_hat)")
        gamma.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)

        body = slice(1, None)
        if np.any(self.kappa[body] <= 0.0):
            raise InvariantError("kappa", "mean-reversion speed must be positive")
        if np.any(self.theta[body] <= 0.0):
            raise InvariantError("theta", "mean-reversion level must be positive")
        if np.any(self.eps[body] < 0.0):
            raise InvariantError("eps", "vol of vol must be non-negative")
        if np.any(np.abs(self.rho[body]) > 1.0):
            raise InvariantError("rho", "correlation must lie in [-1, 1]")
        if np.any(self.beta_norm[body] < 0.0):
            raise InvariantError("beta_norm", "loading norm must be non-negative")
        if self.corr_decay < 0.0:
            raise InvariantError("corr_decay", "decay rate must be >= 0")

    @property
    def n(self) -> int:
        """Number of tenor periods; expiries run 1..n-1."""
        return self.kappa.size

    @property
    def m_hat(self) -> int:
        return self.gamma.shape[1]

    def with_expiry(self, j: int, *, beta_norm=None, rho=None, kappa=None,
                    eps=None) -> "ModelParams":
        """Copy of the parameter set with expiry j's entries replaced."""
        updates = {}
        for name, value in (("beta_norm", beta_norm), ("rho", rho),
                            ("kappa", kappa), ("eps", eps)):
            if value is not None:
                arr = getattr(self, name).copy()
                arr[j] = value
                updates[name] = arr
        return replace(self, **updates)

    @classmethod
    def from_arrays(cls, *, alpha, beta_norm, rho, kappa, theta, eps,
                    gamma=None, corr_decay=0.0) -> "ModelParams":
        """Build from plain per-expiry arrays of length n-1 (unpadded)."""
        n = len(kappa) + 1
        fields = {name: _pad_scalar(vals, n, name) for name, vals in
                  zip(_SCALAR_FIELDS, (alpha, beta_norm, rho, kappa, theta, eps))}
        if gamma is not None:
            gamma = np.asarray(gamma, dtype=float)
            if gamma.ndim == 1:
                gamma = gamma[:, None]
            if gamma.shape[0] != n - 1:
                raise InvariantError("gamma", f"expected {n - 1} rows")
            gamma = np.vstack([np.zeros((1, gamma.shape[1])), gamma])
        return cls(gamma=gamma, corr_decay=float(corr_decay), **fields)


@dataclass(frozen=True, eq=False)
class VolFactorization:
    """Factorized volatility loadings.

    ``loadings`` holds the unit vectors e_j as rows (padded, zero row 0),
    ``sigma`` the rows sigma_j = rho_j eps_j e_j, and ``sigma_bar`` the
    scalars sigmabar_j = sqrt(1 - rho_j^2) eps_j.
    """

    loadings: np.ndarray
    sigma: np.ndarray
    sigma_bar: np.ndarray

    def __post_init__(self):
        for name in ("loadings", "sigma", "sigma_bar"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        norms = np.linalg.norm(self.loadings[1:], axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise InvariantError("loadings", "rows must be unit vectors")

    @property
    def m(self) -> int:
        return self.loadings.shape[1]


def build_loadings(tenor, decay: float, dim: int | None = None) -> np.ndarray:
    """Unit loading vectors e_j from the exponential correlation matrix.

    Returns the padded (n, m) matrix whose row j (j = 1..n-1) is e_j, the
    j-th row of the lower-triangular Cholesky factor of
    r_ij = exp(-decay |T_i - T_j|), so that e_i . e_j = r_ij.

    ``dim`` may enlarge the factor space beyond the full-rank m = n-1
    (extra coordinates are zero); it cannot be smaller.
    """
    n = tenor.n
    k = n - 1
    if decay < 0.0:
        raise InvariantError("corr_decay", "decay rate must be >= 0")
    if dim is None:
        dim = k
    if dim < k:
        raise DecompositionError(
            f"dimension {dim} below full rank {k}; rank-reduced loadings "
            "are not supported")
    expiries = tenor.dates[1:n]
    corr = np.exp(-decay * np.abs(expiries[:, None] - expiries[None, :]))
    if decay == 0.0 and k > 1:
        # The all-ones matrix is singular; jitter would only mask it.
        raise DecompositionError(
            "correlation matrix is singular for decay 0 with more than one "
            "expiry; use a positive decay or add diagonal jitter")
    try:
        chol = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        try:
            chol = np.linalg.cholesky(corr + 1e-12 * np.eye(k))
        except np.linalg.LinAlgError as exc:
            raise DecompositionError(
                "correlation matrix is not positive definite even after "
                "1e-12 diagonal jitter") from exc
    out = np.zeros((n, dim))
    out[1:, :k] = chol
    out.setflags(write=False)
    return out


def factorize_vols(params: ModelParams, loadings: np.ndarray) -> VolFactorization:
    """Split eps_j into the W-loading sigma_j and orthogonal scalar sigmabar_j."""
    rho_eps = params.rho * params.eps
    sigma = np.where(np.isnan(rho_eps)[:, None], 0.0, rho_eps[:, None]) * loadings
    sigma_bar = np.sqrt(np.maximum(1.0 - params.rho ** 2, 0.0)) * params.eps
    return VolFactorization(loadings=loadings, sigma=sigma, sigma_bar=sigma_bar)


def build_factorization(params: ModelParams, tenor,
                        dim: int | None = None) -> VolFactorization:
    """Convenience: Cholesky loadings for params.corr_decay, then factorize."""
    return factorize_vols(params, build_loadings(tenor, params.corr_decay, dim))


def _libor_vol_sq(j: int, v_j: float, params: ModelParams) -> float:
    gamma_sq = float(params.gamma[j] @ params.gamma[j])
    return gamma_sq + v_j * params.beta_norm[j] ** 2


def instantaneous_correlations(j: int, jp: int, v_j: float, v_jp: float,
                               params: ModelParams,
                               fact: VolFactorization) -> tuple[float, float, float]:
    """Instantaneous correlations (Cor_LL, Cor_Lv, Cor_vv) at state (v_j, v_jp).

    Cor_LL couples L_j with L_jp, Cor_Lv couples L_j with v_jp, Cor_vv
    couples v_j with v_jp.  With gamma = 0 the Libor correlation reduces to
    e_j . e_jp = r_jjp independently of the variance state.
    """
    if v_j < 0.0 or v_jp < 0.0:
        raise InvariantError("v", "variance state must be non-negative")
    E, sig, sigbar = fact.loadings, fact.sigma, fact.sigma_bar
    beta_j = params.beta_norm[j] * E[j]
    beta_jp = params.beta_norm[jp] * E[jp]
    var_j = _libor_vol_sq(j, v_j, params)
    var_jp = _libor_vol_sq(jp, v_jp, params)
    if var_j <= 0.0 or var_jp <= 0.0:
        raise CorrelationError(
            f"Libor volatility vanishes at j={j} or j'={jp} (v=0 and gamma=0)")
    if params.eps[j] <= 0.0 or params.eps[jp] <= 0.0:
        raise CorrelationError(f"vol of vol vanishes at j={j} or j'={jp}")
    cor_ll = ((params.gamma[j] @ params.gamma[jp]
               + np.sqrt(v_j * v_jp) * (beta_j @ beta_jp))
              / np.sqrt(var_j * var_jp))
    cor_lv = np.sqrt(v_j) * (beta_j @ sig[jp]) / (np.sqrt(var_j) * params.eps[jp])
    cor_vv = (sig[j] @ sig[jp] + sigbar[j] * sigbar[jp]) / (params.eps[j] * params.eps[jp])
    return float(cor_ll), float(cor_lv), float(cor_vv)


def correlation_matrices(params: ModelParams, fact: VolFactorization,
                         v: np.ndarray | None = None):
    """All three correlation matrices over j, j' = 1..n-1 (padded, NaN fringe).

    ``v`` defaults to the initial state v_j(0) = theta_j.
    """
    n = params.n
    if v is None:
        v = params.theta
    cor_ll = np.full((n, n), np.nan)
    cor_lv = np.full((n, n), np.nan)
    cor_vv = np.full((n, n), np.nan)
    for j in range(1, n):
        for jp in range(1, n):
            cor_ll[j, jp], cor_lv[j, jp], cor_vv[j, jp] = \
                instantaneous_correlations(j, jp, float(v[j]), float(v[jp]),
                                           params, fact)
    return cor_ll, cor_lv, cor_vv


def load_params(path) -> ModelParams:
    """Read a model parameter JSON file.

    The file is an object with per-expiry arrays ``alpha, beta_norm, rho,
    kappa, theta, eps`` (length n-1), an optional 2-D array ``gamma``
    (n-1 rows), and the scalar ``corr_decay``.
    """
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    missing = [k for k in (*_SCALAR_FIELDS, "corr_decay") if k not in obj]
    if missing:
        raise InvariantError(missing[0], "missing from parameter file")
    return ModelParams.from_arrays(
        alpha=obj["alpha"], beta_norm=obj["beta_norm"], rho=obj["rho"],
        kappa=obj["kappa"], theta=obj["theta"], eps=obj["eps"],
        gamma=obj.get("gamma"), corr_decay=obj["corr_decay"])
