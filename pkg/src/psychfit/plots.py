"""Self-contained deterministic SVG plots (no external assets).

Hand-rolled rather than matplotlib so repeated runs emit byte-identical
files.
"""
from __future__ import annotations

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = 56

_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, xlim, ylim, title, xlabel, ylabel):
        self.xlim, self.ylim = xlim, ylim
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" font-family="sans-serif" '
            f'font-size="15">{title}</text>',
            f'<text x="{WIDTH // 2}" y="{HEIGHT - 8}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{xlabel}</text>',
            f'<text x="16" y="{HEIGHT // 2}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="12" transform="rotate(-90 16 {HEIGHT // 2})">{ylabel}</text>',
        ]
        self._frame_and_ticks()

    def px(self, x: float) -> float:
        x0, x1 = self.xlim
        return MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def py(self, y: float) -> float:
        y0, y1 = self.ylim
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    def _frame_and_ticks(self):
        self.parts.append(
            f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
            f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="#444" stroke-width="1"/>'
        )
        for x in np.linspace(self.xlim[0], self.xlim[1], 5):
            pxx = self.px(x)
            self.parts.append(
                f'<line x1="{_fmt(pxx)}" y1="{HEIGHT - MARGIN}" x2="{_fmt(pxx)}" '
                f'y2="{HEIGHT - MARGIN + 5}" stroke="#444"/>'
            )
            self.parts.append(
                f'<text x="{_fmt(pxx)}" y="{HEIGHT - MARGIN + 18}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="11">{x:.3g}</text>'
            )
        for y in np.linspace(self.ylim[0], self.ylim[1], 5):
            pyy = self.py(y)
            self.parts.append(
                f'<line x1="{MARGIN - 5}" y1="{_fmt(pyy)}" x2="{MARGIN}" '
                f'y2="{_fmt(pyy)}" stroke="#444"/>'
            )
            self.parts.append(
                f'<text x="{MARGIN - 8}" y="{_fmt(pyy)}" text-anchor="end" dy="4" '
                f'font-family="sans-serif" font-size="11">{y:.3g}</text>'
            )

    def polyline(self, xs, ys, color, width=1.5, dashed=False):
        pts = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys))
        dash = ' stroke-dasharray="5,4"' if dashed else ""
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>'
        )

    def scatter(self, xs, ys, color, r=3.0):
        for x, y in zip(xs, ys):
            self.parts.append(
                f'<circle cx="{_fmt(self.px(x))}" cy="{_fmt(self.py(y))}" r="{r}" '
                f'fill="{color}" fill-opacity="0.7"/>'
            )

    def marker(self, x, y, label, color="#d62728"):
        self.parts.append(
            f'<circle cx="{_fmt(self.px(x))}" cy="{_fmt(self.py(y))}" r="4" fill="{color}"/>'
        )
        self.parts.append(
            f'<text x="{_fmt(self.px(x) + 8)}" y="{_fmt(self.py(y) - 8)}" '
            f'font-family="sans-serif" font-size="11">{label}</text>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def icc_grid_svg(fit, theta_lo=-4.0, theta_hi=4.0, n_samples=161) -> str:
    """Item characteristic curves for one fitted model."""
    from .irt import icc

    thetas = np.linspace(theta_lo, theta_hi, n_samples)
    cv = _Canvas((theta_lo, theta_hi), (0.0, 1.0),
                 f"Item characteristic curves ({fit.kind})", "theta", "P(correct)")
    for jx, params in enumerate(fit.items):
        cv.polyline(thetas, icc(params, thetas), _PALETTE[jx % len(_PALETTE)], width=1.2)
    return cv.render()


def tif_svg(theta_grid, information, se, peak_theta, peak_value) -> str:
    """Test information function and standard error curves with peak marker."""
    info = np.asarray(information)
    se = np.asarray(se)
    top = max(float(info.max()), float(np.nanmax(se[np.isfinite(se)]))) * 1.1
    cv = _Canvas((float(theta_grid[0]), float(theta_grid[-1])), (0.0, top),
                 "Test information and standard error", "theta", "information / SE")
    cv.polyline(theta_grid, info, "#1f77b4", width=2.0)
    cv.polyline(theta_grid, np.where(np.isfinite(se), se, top), "#ff7f0e", width=1.5, dashed=True)
    cv.marker(peak_theta, peak_value, f"peak {peak_value:.2f} @ {peak_theta:.2f}")
    return cv.render()


def pred_vs_obs_svg(fitted, observed) -> str:
    """Predicted-versus-observed scatter with the identity line."""
    fitted = np.asarray(fitted)
    observed = np.asarray(observed)
    lo = float(min(fitted.min(), observed.min()))
    hi = float(max(fitted.max(), observed.max()))
    pad = 0.05 * (hi - lo or 1.0)
    cv = _Canvas((lo - pad, hi + pad), (lo - pad, hi + pad),
                 "Predicted vs observed", "predicted", "observed")
    cv.polyline([lo, hi], [lo, hi], "#888", width=1.0, dashed=True)
    cv.scatter(fitted, observed, "#1f77b4")
    return cv.render()
