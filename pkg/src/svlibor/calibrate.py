"""Per-maturity calibration of (|beta_j|, kappa_j, eps_j, rho_j) to caplet panels.

Maturities are processed in decreasing order: the measure change for expiry
j sums over all k > j, so later maturities must be fixed first.  Each
subproblem is a bounded derivative-free simplex search on the mean relative
price error against the Fourier pricer, multi-started from a few spread-out
points and re-chained on the incumbent because the objective is cheap and
not everywhere smooth.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ArbitrageBoundError, DegenerateDriftError, InvariantError
from .fourier import QuadratureConfig, black76, caplet_price, implied_vol
from .market_data import CapletPanel, strip_libors
from .model import ModelParams, build_loadings, factorize_vols

__all__ = [
    "CalibrationOptions",
    "MaturityFit",
    "CalibrationResult",
    "panel_market_prices",
    "objective",
    "calibrate_maturity",
    "calibrate_all",
    "fit_report_rows",
]

# (|beta|, kappa, eps, rho) search box.
BOUNDS = ((1e-4, 2.0), (1e-3, 20.0), (1e-3, 10.0), (-0.999, 0.999))
START = (0.15, 1.0, 1.0, -0.5)
PENALTY = 1e6


@dataclass(frozen=True)
class CalibrationOptions:
    quad: QuadratureConfig = QuadratureConfig(z_max=400.0, n=64, tol=1e-9)
    max_evals: int = 1200  # total objective-eval budget per maturity
    xatol: float = 1e-8
    fatol: float = 1e-13
    early_stop: float = 1e-7  # stop the search below this objective
    start_scales: tuple = (1.0, 1.5, 0.5)


# Simplex evaluations per Nelder-Mead call; the search restarts from the
# incumbent with a fresh simplex between slices, which escapes the flat
# (kappa, eps) ridge far more reliably than one long run.
_NM_SLICE = 250


@dataclass(frozen=True)
class MaturityFit:
    expiry: int
    beta_norm: float
    kappa: float
    eps: float
    rho: float
    objective: float
    iterations: int
    converged: bool
    note: str = ""


@dataclass(frozen=True)
class CalibrationResult:
    fits: tuple
    theta: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    corr_decay: float

    def params(self) -> ModelParams:
        """Fitted parameter set (padded arrays assembled from the fits)."""
        n = self.theta.size
        arrays = {name: np.full(n, np.nan)
                  for name in ("beta_norm", "kappa", "eps", "rho")}
        for fit in self.fits:
            arrays["beta_norm"][fit.expiry] = fit.beta_norm
            arrays["kappa"][fit.expiry] = fit.kappa
            arrays["eps"][fit.expiry] = fit.eps
            arrays["rho"][fit.expiry] = fit.rho
        return ModelParams(alpha=self.alpha, theta=self.theta,
                           gamma=self.gamma, corr_decay=self.corr_decay,
                           **arrays)

    def to_dict(self) -> dict:
        return {
            "corr_decay": self.corr_decay,
            "theta": self.theta[1:].tolist(),
            "alpha": self.alpha[1:].tolist(),
            "fits": [{
                "expiry": f.expiry, "beta_norm": f.beta_norm,
                "kappa": f.kappa, "eps": f.eps, "rho": f.rho,
                "objective": f.objective, "iterations": f.iterations,
                "converged": f.converged, "note": f.note,
            } for f in self.fits],
        }


def _to_box(u: np.ndarray) -> np.ndarray:
    """Map unconstrained simplex coordinates into the search box."""
    out = np.empty(4)
    for i, (lo, hi) in enumerate(BOUNDS):
        out[i] = lo + (hi - lo) * (np.sin(u[i]) + 1.0) / 2.0
    return out


def _from_box(x) -> np.ndarray:
    out = np.empty(4)
    for i, (lo, hi) in enumerate(BOUNDS):
        frac = np.clip((x[i] - lo) / (hi - lo), 1e-9, 1.0 - 1e-9)
        out[i] = np.arcsin(2.0 * frac - 1.0)
    return out


def panel_market_prices(panel: CapletPanel, tenor, curve, params,
                        libors=None) -> np.ndarray:
    """Panel quotes as prices; vol quotes run through Black-76."""
    if libors is None:
        libors = strip_libors(curve, tenor)
    if panel.quote_kind == "price":
        return np.asarray(panel.quotes, dtype=float)
    j = panel.expiry
    delta = tenor.accruals()
    discount = float(delta[j] * curve.bonds[j + 1])
    forward = float(libors[j] + params.alpha[j])
    expiry = float(tenor.dates[j])
    return np.array([discount * black76(forward, expiry, vol, k + params.alpha[j])
                     for k, vol in zip(panel.strikes, panel.quotes)])


def objective(j: int, candidate, strikes, market_prices, tenor, curve,
              params: ModelParams, loadings,
              quad: QuadratureConfig, libors=None) -> float:
    """Mean relative price error of the candidate (|beta|, kappa, eps, rho)."""
    beta_norm, kappa, eps, rho = candidate
    work = params.with_expiry(j, beta_norm=beta_norm, rho=rho,
                              kappa=kappa, eps=eps)
    fact = factorize_vols(work, loadings)
    try:
        model = caplet_price(j, np.asarray(strikes), tenor, curve, work,
                             fact, quad, libors)
    except DegenerateDriftError:
        return PENALTY
    return float(np.mean(np.abs(model - market_prices) / market_prices))


def _boundary_note(x) -> str:
    names = ("beta_norm", "kappa", "eps", "rho")
    hits = []
    for name, xi, (lo, hi) in zip(names, x, BOUNDS):
        if xi - lo < 1e-4 * (hi - lo):
            hits.append(f"{name} at lower bound")
        elif hi - xi < 1e-4 * (hi - lo):
            hits.append(f"{name} at upper bound")
    return "; ".join(hits)


def calibrate_maturity(j: int, panel: CapletPanel, params: ModelParams,
                       tenor, curve, loadings,
                       options: CalibrationOptions = CalibrationOptions(),
                       libors=None, warm_start=None) -> MaturityFit:
    """Fit expiry j holding every k > j at its current value in ``params``.

    ``warm_start`` is tried before the standard multi-starts; passing the
    neighbouring maturity's fit keeps parameters from hopping along the
    price-equivalent (kappa, eps) ridge between adjacent maturities.
    """
    if panel.expiry != j:
        raise InvariantError("expiry", f"panel is for {panel.expiry}, not {j}")
    if libors is None:
        libors = strip_libors(curve, tenor)
    market = panel_market_prices(panel, tenor, curve, params, libors)
    strikes = np.asarray(panel.strikes, dtype=float)

    def fun(u: np.ndarray) -> float:
        return objective(j, _to_box(u), strikes, market, tenor, curve,
                         params, loadings, options.quad, libors)

    starts = [np.asarray(warm_start, dtype=float)] if warm_start is not None else []
    starts += [[s * scale for s in START] for scale in options.start_scales]
    best = None
    total_evals = 0
    any_success = False
    for raw in starts:
        start = np.clip(raw, [lo for lo, _ in BOUNDS],
                        [hi for _, hi in BOUNDS])
        u = _from_box(start)
        prev = np.inf
        while total_evals < options.max_evals:
            res = minimize(fun, u, method="Nelder-Mead",
                           options={"maxfev": min(_NM_SLICE,
                                                  options.max_evals - total_evals),
                                    "xatol": options.xatol,
                                    "fatol": options.fatol,
                                    "adaptive": True})
            total_evals += res.nfev
            any_success = any_success or bool(res.success)
            if best is None or res.fun < best.fun:
                best = res
            u = res.x
            if res.fun < options.early_stop or res.fun > 0.9 * prev:
                break
            prev = res.fun
        if best.fun < options.early_stop:
            break
    x = _to_box(best.x)
    note = _boundary_note(x)
    return MaturityFit(expiry=j, beta_norm=float(x[0]), kappa=float(x[1]),
                       eps=float(x[2]), rho=float(x[3]),
                       objective=float(best.fun), iterations=total_evals,
                       converged=bool(any_success or best.fun < 1e-6),
                       note=note)


def calibrate_all(panels: list[CapletPanel], skeleton: ModelParams, tenor,
                  curve, options: CalibrationOptions = CalibrationOptions()
                  ) -> CalibrationResult:
    """Fit all paneled maturities in decreasing order.

    ``skeleton`` supplies the fixed inputs (theta, alpha, gamma, decay) and
    the starting values for any maturity without a panel, which is skipped
    with a warning.
    """
    by_expiry = {panel.expiry: panel for panel in panels}
    for j in by_expiry:
        if not (1 <= j <= skeleton.n - 1):
            raise IndexError(f"panel expiry {j} outside 1..{skeleton.n - 1}")
    loadings = build_loadings(tenor, skeleton.corr_decay)
    libors = strip_libors(curve, tenor)
    work = skeleton
    fits: dict[int, MaturityFit] = {}
    warm = None
    for j in range(skeleton.n - 1, 0, -1):
        panel = by_expiry.get(j)
        if panel is None:
            warnings.warn(f"no panel for expiry {j}: holding initial guess",
                          stacklevel=2)
            fits[j] = MaturityFit(
                expiry=j, beta_norm=float(work.beta_norm[j]),
                kappa=float(work.kappa[j]), eps=float(work.eps[j]),
                rho=float(work.rho[j]), objective=float("nan"),
                iterations=0, converged=False, note="no panel")
            continue
        fit = calibrate_maturity(j, panel, work, tenor, curve, loadings,
                                 options, libors, warm_start=warm)
        fits[j] = fit
        work = work.with_expiry(j, beta_norm=fit.beta_norm, rho=fit.rho,
                                kappa=fit.kappa, eps=fit.eps)
        warm = (fit.beta_norm, fit.kappa, fit.eps, fit.rho)
    ordered = tuple(fits[j] for j in sorted(fits))
    return CalibrationResult(fits=ordered, theta=skeleton.theta,
                             alpha=skeleton.alpha, gamma=skeleton.gamma,
                             corr_decay=skeleton.corr_decay)


def fit_report_rows(result: CalibrationResult, panels: list[CapletPanel],
                    tenor, curve,
                    quad: QuadratureConfig = QuadratureConfig()) -> list[dict]:
    """Per-strike fit diagnostics: prices and implied vols, market vs model."""
    params = result.params()
    loadings = build_loadings(tenor, params.corr_decay)
    fact = factorize_vols(params, loadings)
    libors = strip_libors(curve, tenor)
    delta = tenor.accruals()
    rows = []
    for panel in sorted(panels, key=lambda p: p.expiry):
        j = panel.expiry
        market = panel_market_prices(panel, tenor, curve, params, libors)
        model = caplet_price(j, panel.strikes, tenor, curve, params, fact,
                             quad, libors)
        discount = float(delta[j] * curve.bonds[j + 1])
        forward = float(libors[j] + params.alpha[j])
        expiry_time = float(tenor.dates[j])

        def ivol(price: float, strike: float) -> float:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    return implied_vol(price, forward,
                                       strike + params.alpha[j],
                                       expiry_time, discount)
            except ArbitrageBoundError:
                return float("nan")

        for i, strike in enumerate(panel.strikes):
            rows.append({
                "maturity": expiry_time,
                "strike": float(strike),
                "market_price": float(market[i]),
                "model_price": float(model[i]),
                "market_ivol": ivol(float(market[i]), float(strike)),
                "model_ivol": ivol(float(model[i]), float(strike)),
            })
    return rows
