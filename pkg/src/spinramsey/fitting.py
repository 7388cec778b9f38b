"""Recover interferometer parameters from fringe scans.

The fit minimizes the squared deviation of the closed-form fringe from one
measured component (default m_F = +2, the highest-visibility one) with a
damped least-squares iteration and a central-difference Jacobian, then
forward-evaluates all five components with the recovered parameters.
Because the fringe has a local-minimum structure with period 1/T in f0,
the fit multi-starts from a coarse grid over the initial-guess box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import kernels
from .model import FringeScan, accumulated_phase, phase_sign
from .rotation import LEVELS, level_index

__all__ = [
    "PARAM_NAMES",
    "DEFAULT_BOUNDS",
    "FitConfig",
    "FitResult",
    "SensitivityReport",
    "HarmonicSpectrum",
    "neighbor_average",
    "fit_fringe",
    "sensitivity",
    "harmonic_spectrum",
]

PARAM_NAMES = ("f0", "t", "phi", "delta", "scale")

DEFAULT_GUESSES = {"phi": 0.0, "delta": 25.0, "scale": 1.0}

DEFAULT_BOUNDS = {
    "f0": (50.0, 500.0),
    "t": (10.0, 5000.0),
    # the model is 2*pi-periodic in phi; wide bounds let the optimizer slide
    # along the (f0, phi) ridge, and the result is wrapped to (-pi, pi]
    "phi": (-1000.0, 1000.0),
    "delta": (5.0, 100.0),
    "scale": (0.05, 2.0),
}

_JACOBIAN_REL_STEP = 1e-6


def neighbor_average(scan: FringeScan, window: int = 3) -> FringeScan:
    """Average each row over a window of neighboring frequencies.

    The window is truncated at the scan edges.  The returned scan carries
    the per-component standard deviation over each window as its replicate
    spread, the way error bars are usually built from a dense scan.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd count")
    n = len(scan)
    if window > n:
        raise ValueError(f"window {window} larger than scan ({n} rows)")
    half = window // 2
    means = np.empty_like(scan.populations)
    stds = np.empty_like(scan.populations)
    for i in range(n):
        block = scan.populations[max(0, i - half): min(n, i + half + 1)]
        means[i] = block.mean(axis=0)
        stds[i] = block.std(axis=0)
    return FringeScan(
        scan.f_khz, means, stddev=stds, source=scan.source,
        f0_khz=scan.f0_khz, t_us=scan.t_us, delta_khz=scan.delta_khz,
    )


@dataclass(frozen=True)
class FitConfig:
    """Free parameters, starting guesses and optimizer settings for a fit.

    ``guesses`` must provide f0 and t (kHz / us); phi, delta and scale
    default to 0, 25 kHz and 1.  Parameters not listed in ``free`` stay
    fixed at their guess.  ``tolerance`` is the relative drop in the sum of
    squared residuals below which an accepted step counts as converged.
    """

    guesses: Mapping[str, float]
    free: tuple[str, ...] = ("f0", "t", "phi")
    bounds: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    target: str = "+2"
    weighted: bool = False
    max_iterations: int = 200
    tolerance: float = 1e-10
    multistart: bool = True
    multistart_f0_halfwidth_khz: float = 5.0
    multistart_t_relwidth: float = 0.15
    multistart_keep: int = 4
    convention: str = "sum"

    def __post_init__(self):
        free = tuple(self.free)
        if not free:
            raise ValueError("at least one parameter must be free")
        for name in free:
            if name not in PARAM_NAMES:
                raise ValueError(f"unknown parameter {name!r}; expected from {PARAM_NAMES}")
        guesses = dict(DEFAULT_GUESSES)
        guesses.update(self.guesses)
        missing = [p for p in ("f0", "t") if p not in guesses]
        if missing:
            raise ValueError(f"guesses must include {missing}")
        bounds = dict(DEFAULT_BOUNDS)
        bounds.update(self.bounds)
        for name in PARAM_NAMES:
            lo, hi = bounds[name]
            if not lo < hi:
                raise ValueError(f"empty bounds for {name}: ({lo}, {hi})")
            if not lo <= guesses[name] <= hi:
                raise ValueError(f"guess for {name} ({guesses[name]}) outside bounds ({lo}, {hi})")
        level_index(self.target)
        phase_sign(self.convention)
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        object.__setattr__(self, "free", free)
        object.__setattr__(self, "guesses", guesses)
        object.__setattr__(self, "bounds", bounds)


@dataclass(frozen=True)
class FitResult:
    """Recovered parameters with residual diagnostics."""

    parameters: dict[str, float]
    stderr: dict[str, float]
    ssr: float
    residuals: np.ndarray
    component_residuals: np.ndarray
    converged: bool
    ill_conditioned: bool
    iterations: int
    cost_history: tuple[float, ...]
    free: tuple[str, ...]
    target: str


def _model_components(f, params, sign):
    out = kernels.fringe_components(f, params["f0"], params["t"], params["delta"],
                                    params["phi"], sign)
    return params["scale"] * out


class _TargetModel:
    """Residuals of one fringe component as a function of the free parameters."""

    def __init__(self, scan: FringeScan, config: FitConfig):
        self.f = scan.f_khz
        self.y = scan.component(config.target)
        self.idx = level_index(config.target)
        self.sign = phase_sign(config.convention)
        self.fixed = dict(config.guesses)
        self.free = config.free
        if config.weighted:
            if scan.stddev is None:
                raise ValueError("weighted fit requested but the scan has no stddev")
            spread = scan.stddev[:, self.idx]
            positive = spread[spread > 0]
            floor = max(1e-4, 0.05 * float(np.median(positive)) if positive.size else 1e-4)
            self.weights = 1.0 / np.maximum(spread, floor)
        else:
            self.weights = np.ones_like(self.y)

    def params(self, theta) -> dict[str, float]:
        out = dict(self.fixed)
        for name, value in zip(self.free, theta):
            out[name] = float(value)
        return out

    def residuals(self, theta) -> np.ndarray:
        p = self.params(theta)
        model = kernels.fringe_components(self.f, p["f0"], p["t"], p["delta"],
                                          p["phi"], self.sign)[:, self.idx]
        return self.weights * (p["scale"] * model - self.y)


def _jacobian(fun, theta, lower, upper):
    n = len(fun(theta))
    jac = np.zeros((n, theta.size))
    for k in range(theta.size):
        h = _JACOBIAN_REL_STEP * max(abs(theta[k]), 1.0)
        hi = np.array(theta)
        lo = np.array(theta)
        hi[k] = min(theta[k] + h, upper[k])
        lo[k] = max(theta[k] - h, lower[k])
        span = hi[k] - lo[k]
        if span <= 0.0:
            continue
        jac[:, k] = (fun(hi) - fun(lo)) / span
    return jac


def _levenberg_marquardt(fun, theta0, lower, upper, max_iterations, tolerance):
    theta = np.clip(np.asarray(theta0, dtype=float), lower, upper)
    r = fun(theta)
    cost = float(r @ r)
    history = [cost]
    lam = 1e-3
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        jac = _jacobian(fun, theta, lower, upper)
        grad = jac.T @ r
        hess = jac.T @ jac
        if float(np.max(np.abs(grad))) < 1e-14 * (1.0 + cost):
            converged = True
            break
        accepted = False
        for _ in range(30):
            damped = hess + lam * np.diag(np.maximum(np.diag(hess), 1e-12))
            try:
                step = np.linalg.solve(damped, -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = np.clip(theta + step, lower, upper)
            r_trial = fun(trial)
            cost_trial = float(r_trial @ r_trial)
            if cost_trial < cost:
                rel_drop = (cost - cost_trial) / max(cost, 1e-300)
                theta, r, cost = trial, r_trial, cost_trial
                history.append(cost)
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                if rel_drop < tolerance or cost < 1e-300:
                    converged = True
                break
            lam *= 10.0
            if lam > 1e12:
                break
        if not accepted:
            # no descent direction left; already at a (numerical) minimum
            converged = True
            break
        if converged:
            break
    return theta, r, cost, tuple(history), converged, iterations


def _axis_values(center, offsets):
    values = [center]
    for o in offsets:
        values += [center + o, center - o]
    return values


def _multistart_candidates(config: FitConfig, f_halfspan_khz: float) -> list[np.ndarray]:
    """Coarse grid of start vectors covering the narrow attraction basins.

    A wrong T decorrelates the fringes once the phase error across the scan
    reaches about a quarter turn, so the T grid step follows the scan span;
    phi is gridded over one period; f0 sees fringe shifts only through the
    wide envelope (when phi is free), so a few coarse values suffice, but
    with phi fixed the f0 basin shrinks to a fringe and the grid tightens.
    """
    base = np.array([config.guesses[name] for name in config.free])
    starts = [base]
    if not config.multistart:
        return starts
    free = config.free
    f0_values = [config.guesses["f0"]]
    if "f0" in free:
        width = config.multistart_f0_halfwidth_khz
        if "phi" in free:
            step = width / 2.0
        else:
            step = max(1000.0 / max(config.guesses["t"], 1.0) / 3.0, 1e-3)
        f0_values = _axis_values(config.guesses["f0"],
                                 np.arange(step, width + 0.5 * step, step))
    t_values = [config.guesses["t"]]
    if "t" in free:
        basin = 0.125 / max(f_halfspan_khz * 1e-3, 1e-9)
        width = config.multistart_t_relwidth * config.guesses["t"]
        step = max(basin, width / 30.0)
        t_values = _axis_values(config.guesses["t"],
                                np.arange(step, width + 0.5 * step, step))
    phi_values = [config.guesses["phi"]]
    if "phi" in free:
        phi_values = [config.guesses["phi"] + k * np.pi / 4.0 for k in range(-3, 5)]
    for f0 in f0_values:
        for t in t_values:
            for phi in phi_values:
                theta = base.copy()
                if "f0" in free:
                    theta[free.index("f0")] = f0
                if "t" in free:
                    theta[free.index("t")] = t
                if "phi" in free:
                    theta[free.index("phi")] = phi
                starts.append(theta)
    return starts


def fit_fringe(scan: FringeScan, config: FitConfig) -> FitResult:
    """Least-squares fit of the closed-form fringe to one scan component.

    Runs the damped least-squares iteration from the best few multi-start
    candidates and keeps the lowest sum of squared residuals.  A constant
    (uninformative) target component is flagged ill-conditioned instead of
    fitted.  Deterministic for a given scan and config.
    """
    n_free = len(config.free)
    if len(scan) < 2 * n_free:
        raise ValueError(f"scan has {len(scan)} rows; need at least {2 * n_free} "
                         f"for {n_free} free parameters")
    model = _TargetModel(scan, config)
    sign = phase_sign(config.convention)
    guess_params = model.params([config.guesses[name] for name in config.free])

    if float(np.std(model.y)) < 1e-12:
        comps = _model_components(scan.f_khz, guess_params, sign)
        r0 = model.residuals([guess_params[name] for name in config.free])
        return FitResult(
            parameters=guess_params,
            stderr={name: math.nan for name in config.free},
            ssr=float(r0 @ r0),
            residuals=r0,
            component_residuals=comps - scan.populations,
            converged=False,
            ill_conditioned=True,
            iterations=0,
            cost_history=(),
            free=config.free,
            target=config.target,
        )

    lower = np.array([config.bounds[name][0] for name in config.free])
    upper = np.array([config.bounds[name][1] for name in config.free])

    halfspan = 0.5 * float(scan.f_khz[-1] - scan.f_khz[0])
    starts = [np.clip(s, lower, upper) for s in _multistart_candidates(config, halfspan)]
    costs = [float(np.sum(model.residuals(s) ** 2)) for s in starts]
    order = np.argsort(costs, kind="stable")[: max(1, config.multistart_keep)]

    best = None
    for i in order:
        result = _levenberg_marquardt(model.residuals, starts[i], lower, upper,
                                      config.max_iterations, config.tolerance)
        if best is None or result[2] < best[2]:
            best = result
    theta, r, cost, history, converged, iterations = best

    if "phi" in config.free:
        # the model is exactly periodic in phi; report it within (-pi, pi]
        k = config.free.index("phi")
        wrapped = theta[k] - 2.0 * np.pi * np.round(theta[k] / (2.0 * np.pi))
        if lower[k] <= wrapped <= upper[k]:
            theta = np.array(theta)
            theta[k] = wrapped
            r = model.residuals(theta)
            cost = float(r @ r)

    jac = _jacobian(model.residuals, theta, lower, upper)
    hess = jac.T @ jac
    stderr = {name: math.nan for name in config.free}
    ill_conditioned = False
    dof = len(scan) - n_free
    try:
        cov = np.linalg.inv(hess) * (cost / max(dof, 1))
        diag = np.diag(cov)
        if np.any(diag < 0.0) or not np.all(np.isfinite(diag)):
            ill_conditioned = True
        else:
            stderr = {name: float(math.sqrt(d)) for name, d in zip(config.free, diag)}
    except np.linalg.LinAlgError:
        ill_conditioned = True

    params = model.params(theta)
    comps = _model_components(scan.f_khz, params, sign)
    return FitResult(
        parameters=params,
        stderr=stderr,
        ssr=cost,
        residuals=r,
        component_residuals=comps - scan.populations,
        converged=converged,
        ill_conditioned=ill_conditioned,
        iterations=iterations,
        cost_history=history,
        free=config.free,
        target=config.target,
    )


@dataclass(frozen=True)
class SensitivityReport:
    """Smallest distinguishable phase offset per fringe peak, and the mean."""

    peak_f_khz: tuple[float, ...]
    peak_phase_rad: tuple[float, ...]
    per_peak_rad: tuple[float, ...]
    average_rad: float


def _refine_peak(f, curve, i):
    # quadratic interpolation through the maximum and its neighbors
    if i == 0 or i == len(f) - 1:
        return float(f[i])
    denom = curve[i - 1] - 2.0 * curve[i] + curve[i + 1]
    if denom >= 0.0:
        return float(f[i])
    shift = 0.5 * (curve[i - 1] - curve[i + 1]) / denom
    return float(f[i] + shift * (f[1] - f[0]))


def find_fringe_peaks(f, curve, threshold):
    """Indices of strict local maxima of ``curve`` at or above ``threshold``."""
    inner = (curve[1:-1] > curve[:-2]) & (curve[1:-1] >= curve[2:]) & (curve[1:-1] >= threshold)
    return np.flatnonzero(inner) + 1


def sensitivity(scan: FringeScan, fitted: FitResult, *, threshold_fraction: float = 0.5,
                max_phase_rad: float = np.pi, convention: str | None = None) -> SensitivityReport:
    """Smallest distinguishable phase offsets of the fitted fringe peaks.

    For each peak of the fitted target-component curve inside the scan
    range, finds the smallest phase offset whose population change exceeds
    the measured spread at the nearest scan point (one-sigma criterion),
    capped at ``max_phase_rad``.  The scan must carry replicate spread,
    e.g. from :func:`neighbor_average`.
    """
    if scan.stddev is None:
        raise ValueError("scan has no replicate spread; apply neighbor_average or provide stddev")
    if convention is None:
        convention = "sum"
    params = fitted.parameters
    idx = level_index(fitted.target)
    sign = phase_sign(convention)

    dense_f = np.linspace(scan.f_khz[0], scan.f_khz[-1], 20 * len(scan) + 1)
    curve = _model_components(dense_f, params, sign)[:, idx]
    peaks = find_fringe_peaks(dense_f, curve, threshold_fraction * params["scale"])
    if peaks.size == 0:
        raise ValueError("no fringe peaks inside the scan range")

    deltas = np.linspace(0.0, max_phase_rad, 4097)
    per_peak = []
    peak_fs = []
    peak_phases = []
    for i in peaks:
        f_peak = _refine_peak(dense_f, curve, i)
        eta = float(kernels.envelope(np.array([f_peak]), params["f0"], params["delta"])[0])
        phase_peak = float(accumulated_phase(f_peak, params["f0"], params["t"],
                                             params["phi"], convention))
        nearest = int(np.argmin(np.abs(scan.f_khz - f_peak)))
        sigma = float(scan.stddev[nearest, idx])
        p = params["scale"] * kernels.phase_components(phase_peak + deltas, eta)[:, idx]
        p_minus = params["scale"] * kernels.phase_components(phase_peak - deltas, eta)[:, idx]
        change = np.maximum(np.abs(p - p[0]), np.abs(p_minus - p_minus[0]))
        crossing = np.flatnonzero(change >= sigma)
        if crossing.size == 0:
            per_peak.append(float(max_phase_rad))
        elif crossing[0] == 0:
            per_peak.append(0.0)
        else:
            j = crossing[0]
            lo, hi = deltas[j - 1], deltas[j]
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                p_mid = params["scale"] * kernels.phase_components(
                    np.array([phase_peak + mid, phase_peak - mid]), eta)[:, idx]
                if max(abs(p_mid[0] - p[0]), abs(p_mid[1] - p_minus[0])) >= sigma:
                    hi = mid
                else:
                    lo = mid
            per_peak.append(float(hi))
        peak_fs.append(f_peak)
        peak_phases.append(phase_peak)
    return SensitivityReport(
        peak_f_khz=tuple(peak_fs),
        peak_phase_rad=tuple(peak_phases),
        per_peak_rad=tuple(per_peak),
        average_rad=float(np.mean(per_peak)),
    )


@dataclass(frozen=True)
class HarmonicSpectrum:
    """Discrete Fourier magnitudes of a fringe sampled over one phase period."""

    dominant: int
    magnitudes: np.ndarray


def harmonic_spectrum(phases, series, component: str | int | None = None) -> HarmonicSpectrum:
    """Dominant harmonic of a population series on a uniform phase grid.

    ``phases`` must uniformly sample one full period [0, 2*pi) with at
    least 16 points.  ``series`` is either a single population column or an
    (n, 5) table, in which case ``component`` selects the column.  Returns
    the index of the largest nonzero-frequency Fourier bin together with
    all bin magnitudes.
    """
    phases = np.asarray(phases, dtype=float).reshape(-1)
    values = np.asarray(series, dtype=float)
    if values.ndim == 2:
        if component is None:
            raise ValueError("component is required for a five-column series")
        values = values[:, level_index(component)]
    if values.shape != phases.shape:
        raise ValueError("phases and series lengths differ")
    n = phases.size
    if n < 16:
        raise ValueError("need at least 16 samples over one period")
    step = 2.0 * np.pi / n
    diffs = np.diff(phases)
    if np.max(np.abs(diffs - step)) > 1e-9 * max(step, 1.0):
        raise ValueError("phase grid must be uniform with spacing 2*pi/n")
    span = phases[-1] - phases[0] + step
    if abs(span - 2.0 * np.pi) > 1e-6:
        raise ValueError("phase grid must cover exactly one period [0, 2*pi)")
    magnitudes = np.abs(np.fft.rfft(values))
    dominant = 1 + int(np.argmax(magnitudes[1:]))
    return HarmonicSpectrum(dominant=dominant, magnitudes=magnitudes)
