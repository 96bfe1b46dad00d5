"""Scaling fits, correlation statistics and cluster-Ising analytics.

Everything here is a pure function of plain numbers, so the module can be
used on CSV output as well as on live results.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import io

DEFAULT_MARGIN = 4
ZERO_FLOOR = 1e-3


class FitError(ValueError):
    """Raised when a fit is ill-posed (too few or degenerate points)."""


# ---------------------------------------------------------------- linear fits


@dataclass(frozen=True)
class ScalingFit:
    """``y = slope * x + intercept`` with ordinary least-squares errors.

    ``x`` is the chord variable ``ln((2L/pi) sin(pi l / L))`` for cut scans
    and ``ln(L/pi)`` for half-chain scans.
    """

    slope: float
    intercept: float
    slope_err: float
    intercept_err: float
    form: str
    x: tuple[float, ...]
    y: tuple[float, ...]
    residual_rms: float
    length: float | None = None

    @property
    def central_charge(self) -> float:
        return 6.0 * self.slope

    @property
    def central_charge_err(self) -> float:
        return 6.0 * self.slope_err

    @property
    def n_points(self) -> int:
        return len(self.x)

    def predict(self, x: Sequence[float] | np.ndarray) -> np.ndarray:
        return self.slope * np.asarray(x, dtype=float) + self.intercept

    @property
    def residuals(self) -> np.ndarray:
        return np.asarray(self.y) - self.predict(self.x)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["central_charge"] = self.central_charge
        d["central_charge_err"] = self.central_charge_err
        d["n_points"] = self.n_points
        return d


def linear_fit(x: Sequence[float], y: Sequence[float], form: str = "linear", length: float | None = None) -> ScalingFit:
    """OLS line fit; standard errors use the residual variance ``RSS/(n-2)``."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise FitError("x and y must be 1-d arrays of equal length")
    n = xa.size
    if n < 2:
        raise FitError("need at least two points")
    sxx = float(np.sum((xa - xa.mean()) ** 2))
    if sxx <= 1e-14 * max(1.0, float(np.sum(xa**2))):
        raise FitError("rank-deficient design: all x values coincide")
    slope = float(np.sum((xa - xa.mean()) * (ya - ya.mean())) / sxx)
    intercept = float(ya.mean() - slope * xa.mean())
    res = ya - (slope * xa + intercept)
    rss = float(res @ res)
    if n > 2:
        s2 = rss / (n - 2)
        slope_err = math.sqrt(s2 / sxx)
        intercept_err = math.sqrt(s2 * (1.0 / n + xa.mean() ** 2 / sxx))
    else:
        slope_err = intercept_err = 0.0
    return ScalingFit(
        slope, intercept, slope_err, intercept_err, form,
        tuple(xa.tolist()), tuple(ya.tolist()), math.sqrt(rss / n), length,
    )


def chord(ell: Sequence[float] | np.ndarray, L: float) -> np.ndarray:
    """``ln((2L/pi) sin(pi l / L))``."""
    e = np.asarray(ell, dtype=float)
    return np.log(2.0 * L / math.pi * np.sin(math.pi * e / L))


def cft_entropy(ell: Sequence[float] | np.ndarray, L: float, c: float, gamma: float) -> np.ndarray:
    """Open-chain CFT entanglement ``(c/6) * chord + gamma``."""
    return c / 6.0 * chord(ell, L) + gamma


def fit_cut_scan(
    pairs: Iterable[tuple[float, float]],
    L: float,
    margin: int = DEFAULT_MARGIN,
    window: tuple[float, float] | None = None,
) -> ScalingFit:
    """Fit ``S(l)`` at fixed ``L`` against the chord variable.

    Cuts with ``l < margin`` or ``l > L - margin`` are dropped; ``window``
    further restricts to ``lo <= l <= hi``. ``L`` may be an effective length
    (for example ``L/2`` when fitting one sublattice of a dual chain).
    """
    pts = sorted((float(l), float(s)) for l, s in pairs)
    lo, hi = (margin, L - margin) if window is None else (max(margin, window[0]), min(L - margin, window[1]))
    pts = [(l, s) for l, s in pts if lo <= l <= hi and 0 < l < L]
    if len(pts) < 4:
        raise FitError(f"need at least 4 cuts inside [{lo}, {hi}], got {len(pts)}")
    ell, s = zip(*pts)
    return linear_fit(chord(ell, L), s, "cut-scan", float(L))


def fit_half_chain(pairs: Iterable[tuple[float, float]]) -> ScalingFit:
    """Fit ``S(L/2)`` across sizes against ``ln(L/pi)``."""
    pts = sorted((float(L), float(s)) for L, s in pairs)
    if len(pts) < 2:
        raise FitError("need at least two system sizes")
    Ls, s = zip(*pts)
    return linear_fit(np.log(np.asarray(Ls) / math.pi), s, "half-chain")


# ---------------------------------------------------------------- correlations


@dataclass(frozen=True)
class CorrelationReport:
    """Zero-intercept proportionality ``delta = C * m2`` plus Pearson ``r``."""

    C: float
    C_err: float
    pearson_r: float
    n_points: int
    delta_max: float
    m2_max: float

    @property
    def anchor_ratio(self) -> float:
        return self.delta_max / self.m2_max

    def to_dict(self) -> dict:
        d = asdict(self)
        d["anchor_ratio"] = self.anchor_ratio
        return d


def delta_m2_correlation(points: Iterable[tuple[float, float, float]]) -> CorrelationReport:
    """Points are ``(parameter, delta, m2)``."""
    arr = np.asarray([(d, m) for _, d, m in points], dtype=float)
    if arr.shape[0] < 3:
        raise FitError("need at least three points")
    d, m = arr[:, 0], arr[:, 1]
    if np.std(d) == 0.0 or np.std(m) == 0.0:
        raise FitError("degenerate variance")
    mm = float(m @ m)
    C = float(d @ m) / mm
    res = d - C * m
    C_err = math.sqrt(float(res @ res) / (len(d) - 1) / mm)
    r = float(np.corrcoef(d, m)[0, 1])
    return CorrelationReport(C, C_err, r, len(d), float(d.max()), float(m.max()))


# ---------------------------------------------------------------- classification


def compatible_with_zero(value: float, floor: float = 0.0) -> bool:
    """``value < max(1e-3, 3 * floor)``; ``floor`` is a truncation-induced entropy floor."""
    return value < max(ZERO_FLOOR, 3.0 * floor)


@dataclass(frozen=True)
class Classification:
    label: str  # "nLCD", "LCD" or "fLCD"
    gain_slope: float
    gain_slope_err: float
    zero_cuts: tuple[int, ...]


def classify(
    gain_fit: ScalingFit,
    smee: Sequence[tuple[int, float]] = (),
    n_sigma: float = 3.0,
    min_slope: float = 0.01,
    floor: float = 0.0,
) -> Classification:
    """Label a state from the size scaling of its entropy gain.

    fLCD if some bulk cut has SMEE compatible with zero; LCD if the gain
    slope exceeds both ``min_slope`` and ``n_sigma`` standard errors;
    nLCD otherwise.
    """
    L = len(smee) + 1
    zeros = tuple(int(l) for l, s in smee if 1 < l < L - 1 and compatible_with_zero(s, floor))
    a, e = gain_fit.slope, gain_fit.slope_err
    if zeros:
        label = "fLCD"
    elif a > min_slope and a > n_sigma * e:
        label = "LCD"
    else:
        label = "nLCD"
    return Classification(label, a, e, zeros)


# ---------------------------------------------------------------- critical point


@dataclass(frozen=True)
class CriticalPointEstimate:
    h_c: float
    h_c_err: float
    peaks: dict[int, float]
    slope: float
    boundary_flags: dict[int, bool]

    def to_dict(self) -> dict:
        return asdict(self)


def peak_position(h: Sequence[float], y: Sequence[float]) -> tuple[float, bool]:
    """Grid maximum refined by a parabola through its neighbours.

    Returns ``(position, on_boundary)``; boundary maxima are returned
    unrefined and flagged.
    """
    order = np.argsort(h)
    hx = np.asarray(h, dtype=float)[order]
    yy = np.asarray(y, dtype=float)[order]
    i = int(np.argmax(yy))
    if i == 0 or i == len(hx) - 1:
        return float(hx[i]), True
    x0, x1, x2 = hx[i - 1 : i + 2]
    y0, y1, y2 = yy[i - 1 : i + 2]
    coef = np.polyfit([x0, x1, x2], [y0, y1, y2], 2)
    if coef[0] >= 0:
        return float(x1), False
    return float(-coef[1] / (2 * coef[0])), False


def critical_point_estimate(curves: Mapping[int, Sequence[tuple[float, float]]]) -> CriticalPointEstimate:
    """Extrapolate the peak of ``S(L/2)/ln L`` linearly in ``1/L``."""
    if len(curves) < 3:
        raise FitError("need at least three system sizes")
    peaks: dict[int, float] = {}
    flags: dict[int, bool] = {}
    for L, pts in sorted(curves.items()):
        hs, ss = zip(*sorted(pts))
        pos, edge = peak_position(hs, np.asarray(ss) / math.log(L))
        peaks[int(L)] = pos
        flags[int(L)] = edge
    inv = [1.0 / L for L in peaks]
    fit = linear_fit(inv, list(peaks.values()), "peak-vs-invL")
    return CriticalPointEstimate(fit.intercept, fit.intercept_err, peaks, fit.slope, flags)


# ---------------------------------------------------------------- cluster-Ising analytics


@dataclass(frozen=True)
class DispersionPoint:
    k: int
    Lambda: float
    epsilon: float
    delta: float
    u: float
    v: float


def cluster_dispersion(variant: int, L: int, g: float, k: int) -> DispersionPoint:
    """Bogoliubov data of the free-fermion cluster chains.

    ``g`` is ``h`` for variant 1 and ``V`` for variant 3. Variant 3 uses
    momenta ``4 pi k/L`` and ``2 pi k/L`` so that ``Lambda`` depends on
    ``6 pi k/L``; variant 1 has ``Lambda`` depending on ``4 pi k/L``.
    ``v`` carries the sign of ``delta`` (taken as +1 at ``delta = 0``).
    """
    if not 1 <= k <= L:
        raise ValueError("mode index must satisfy 1 <= k <= L")
    q = 2.0 * math.pi * k / L
    if variant == 1:
        eps = math.cos(2 * q) - g
        dlt = math.sin(2 * q)
        lam = math.sqrt(1.0 + g * g - 2.0 * g * math.cos(2 * q))
    elif variant == 3:
        eps = math.cos(2 * q) - g * math.cos(q)
        dlt = math.sin(2 * q) + g * math.sin(q)
        lam = math.sqrt(1.0 + g * g - 2.0 * g * math.cos(3 * q))
    else:
        raise ValueError("variant must be 1 or 3")
    ratio = eps / lam if lam > 0 else 1.0
    ratio = min(1.0, max(-1.0, ratio))
    sgn = 1.0 if dlt >= 0 else -1.0
    u = math.sqrt(0.5 * (1.0 + ratio))
    v = -sgn * math.sqrt(0.5 * (1.0 - ratio))
    return DispersionPoint(k, lam, eps, dlt, u, v)


def ising_dispersion(M: int, h: float, k: int) -> float:
    """Transverse-field Ising ``Lambda_k = sqrt(1 + h^2 - 2h cos(2 pi k/M))``."""
    return math.sqrt(1.0 + h * h - 2.0 * h * math.cos(2.0 * math.pi * k / M))


@dataclass(frozen=True)
class DualityPrediction:
    """Expected SMEE features of a critical cluster chain.

    ``zero_cuts`` are the cuts where the SWAP duality decouples the chain;
    ``expected_zero_cuts`` is the subset a two-qubit greedy search is
    expected to reach. Below the first zero cut the SMEE should follow an
    open-chain CFT law of length ``effective_length`` with central charge
    ``c_effective``.
    """

    variant: int
    L: int
    period: int
    zero_cuts: tuple[int, ...]
    expected_zero_cuts: tuple[int, ...]
    c_parent: float
    c_effective: float
    effective_length: int
    notes: tuple[str, ...] = field(default=())

    def predicted_smee(self, ell: Sequence[float], gamma: float = 0.0) -> np.ndarray:
        e = np.asarray(ell, dtype=float)
        out = cft_entropy(np.mod(e, self.effective_length) + 0.0, self.effective_length, self.c_effective, gamma)
        return np.where(np.mod(e, self.effective_length) == 0, 0.0, out)


# Two-qubit gates reach the 2L/3 cut of variant 3 only at small sizes.
MAX_L_SECOND_ZERO = 24


def duality_predictions(variant: int, L: int) -> DualityPrediction:
    if variant == 1:
        p, c = 2, 1.0
    elif variant == 3:
        p, c = 3, 1.5
    else:
        raise ValueError("variant must be 1 or 3")
    if L % p:
        raise ValueError(f"L={L} must be divisible by {p} for variant {variant}")
    M = L // p
    zeros = tuple(M * j for j in range(1, p))
    notes: list[str] = []
    if variant == 3 and L > MAX_L_SECOND_ZERO:
        expected = zeros[:1]
        notes.append("2L/3 zero not expected: the dual map has three-site support")
    else:
        expected = zeros
    return DualityPrediction(variant, L, p, zeros, expected, c, c / p, M, tuple(notes))


# ---------------------------------------------------------------- emission


def write_fit_json(path: str | Path, fit: ScalingFit | CorrelationReport | CriticalPointEstimate) -> Path:
    return io.write_json(path, fit.to_dict())


def write_plot_csv(
    path: str | Path,
    x: Sequence[float],
    y: Sequence[float],
    yerr: Sequence[float] | None = None,
    fit: ScalingFit | None = None,
) -> Path:
    """Columns ``x, y, yerr, fit_y``."""
    n = len(x)
    ye = list(yerr) if yerr is not None else [0.0] * n
    fy = fit.predict(x).tolist() if fit is not None else [float("nan")] * n
    rows = [[x[i], y[i], ye[i], fy[i]] for i in range(n)]
    return io.write_csv(path, ["x", "y", "yerr", "fit_y"], rows)


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def write_svg(
    path: str | Path,
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    xlabel: str = "x",
    ylabel: str = "y",
    width: int = 480,
    height: int = 320,
) -> Path:
    """Minimal line plot with one polyline per named series."""
    pad = 48
    xs = np.concatenate([np.asarray(v[0], dtype=float) for v in series.values()])
    ys = np.concatenate([np.asarray(v[1], dtype=float) for v in series.values()])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def px(x: float) -> float:
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y: float) -> float:
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{height / 2}" transform="rotate(-90 14 {height / 2})" text-anchor="middle">{ylabel}</text>',
        f'<text x="{pad}" y="{height - pad + 16}" font-size="10">{x0:.3g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" font-size="10" text-anchor="end">{x1:.3g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{y1:.3g}</text>',
    ]
    for j, (name, (sx, sy)) in enumerate(series.items()):
        col = _SVG_COLORS[j % len(_SVG_COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(sx, sy))
        parts.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{width - pad}" y="{pad + 14 * j}" font-size="11" fill="{col}" text-anchor="end">{name}</text>')
    parts.append("</svg>")
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text("\n".join(parts) + "\n")
    return p


__all__ = [
    "Classification",
    "CorrelationReport",
    "CriticalPointEstimate",
    "DispersionPoint",
    "DualityPrediction",
    "FitError",
    "ScalingFit",
    "chord",
    "cft_entropy",
    "classify",
    "cluster_dispersion",
    "compatible_with_zero",
    "critical_point_estimate",
    "delta_m2_correlation",
    "duality_predictions",
    "fit_cut_scan",
    "fit_half_chain",
    "ising_dispersion",
    "linear_fit",
    "peak_position",
    "write_fit_json",
    "write_plot_csv",
    "write_svg",
]
