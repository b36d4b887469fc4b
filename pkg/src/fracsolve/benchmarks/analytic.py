"""Closed-form plane-strain crack solutions and error/convergence tooling.

Two classic configurations used to validate the contact solver:

* a frictional crack in an infinite plane under uniform remote
  compression (slip profile of an elliptic mode-II crack),
* a partially pressurized crack in compression whose open region closes
  smoothly at the tip (zero stress-intensity equilibrium), with the
  logarithmic opening and arctangent stress field given by Sneddon-type
  potentials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def phan_solution(xi, *, E: float, nu: float, sigma: float, psi: float,
                  theta: float, half_length: float):
    """Traction and slip on a frictional crack under remote compression.

    ``xi`` is the position along the crack in [0, 2b], measured from one
    tip; ``sigma`` the magnitude of the remote uniaxial compression,
    ``psi`` the angle (radians) between the compression axis and the
    crack plane, ``theta`` the friction angle.  Plane strain.

    Returns ``(t_N, g_T)``: the (constant, compressive) normal traction
    and the slip magnitude profile.
    """
    xi = np.asarray(xi, dtype=float)
    b = half_length
    if np.any(xi < -1e-12) or np.any(xi > 2.0 * b + 1e-12):
        raise ValueError("coordinate outside the crack [0, 2b]")
    t_n = -sigma * np.sin(psi) ** 2
    drive = sigma * np.sin(psi) * (np.cos(psi) - np.sin(psi) * np.tan(theta))
    g_t = (4.0 * (1.0 - nu * nu) / E) * drive * np.sqrt(
        np.maximum(b * b - (b - xi) ** 2, 0.0))
    return t_n, g_t


def griffith_pressurized_length(l: float, p0: float, sigma0: float) -> float:
    """Extent of the pressurized patch so that the crack tip closes smoothly.

    For a crack of half-length ``l`` loaded by a uniform pressure ``p0``
    on ``|x| < x0`` against a remote closing stress ``sigma0``, smooth
    closure (zero stress intensity) requires
    ``arcsin(x0/l) = pi*sigma0/(2*p0)``.
    """
    if not 0.0 < sigma0 < p0:
        raise ValueError("smooth closure requires 0 < sigma0 < p0")
    return l * np.sin(0.5 * np.pi * sigma0 / p0)


def griffith_opening(x, *, l: float, p0: float, sigma0: float, E: float, nu: float):
    """Opening profile of the partially pressurized crack, 0 <= x <= l."""
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12) or np.any(x > l * (1.0 + 1e-12)):
        raise ValueError("opening is defined on the crack 0 <= x <= l")
    x0 = griffith_pressurized_length(l, p0, sigma0)
    # both logarithms diverge at x = x0 with a finite sum; step off the
    # singular point instead of evaluating the indeterminate form
    x = np.where(np.abs(x - x0) < 1e-9 * l, x0 + 1e-9 * l, x)
    q1 = np.sqrt(l * l - x0 * x0)
    q2 = np.sqrt(np.maximum(l * l - x * x, 0.0))
    q3 = np.sqrt(np.abs(x0 * x0 - x * x))
    num = l * l * x0 * x0 - 2.0 * q1 * q2 * x0 * x + l * l * x * x - 2.0 * x0 * x0 * x * x
    den = l * l * x0 * x0 + 2.0 * q1 * q2 * x0 * x + l * l * x * x - 2.0 * x0 * x0 * x * x
    term1 = 4.0 * x0 * np.log((q1 + q2) / q3)
    term2 = x * np.log(num / den)
    g = (2.0 * (1.0 - nu * nu) / (np.pi * E)) * p0 * (term1 + term2)
    return np.maximum(g, 0.0)


def griffith_stress_y(x, *, l: float, p0: float, sigma0: float):
    """Total stress sigma_y on the crack plane ahead of the tip, x >= l."""
    x = np.asarray(x, dtype=float)
    if np.any(x < l * (1.0 - 1e-12)):
        raise ValueError("stress formula holds ahead of the tip, x >= l")
    x0 = griffith_pressurized_length(l, p0, sigma0)
    q1 = np.sqrt(l * l - x0 * x0)
    q3 = np.sqrt(np.abs(x0 * x0 - x * x))
    return -p0 + (2.0 / np.pi) * p0 * np.arctan2(x * q1, x0 * q3)


def griffith_solution(x, *, l: float, p0: float, sigma0: float, E: float, nu: float):
    """Evaluate the pressurized-crack solution at coordinates ``x``.

    Returns ``(g_N, sigma_y, x0)``; the opening is NaN beyond the tip
    and the stress NaN inside the crack, each field being defined on its
    own side of ``x = l``.
    """
    x = np.asarray(x, dtype=float)
    g = np.full(x.shape, np.nan)
    s = np.full(x.shape, np.nan)
    crack = x <= l
    if np.any(crack):
        g[crack] = griffith_opening(x[crack], l=l, p0=p0, sigma0=sigma0, E=E, nu=nu)
    if np.any(~crack):
        s[~crack] = griffith_stress_y(x[~crack], l=l, p0=p0, sigma0=sigma0)
    return g, s, griffith_pressurized_length(l, p0, sigma0)


@dataclass(frozen=True)
class ErrorReport:
    """Area-weighted integral errors of a face field against a reference."""

    rel_l1: float
    rel_l2: float
    n_faces: int


def error_norms(values, reference, weights, window=None) -> ErrorReport:
    """Integral relative errors sum(w|num-ref|)/sum(w|ref|) and L2 variant.

    ``weights`` are face areas (or any positive quadrature weights);
    ``window`` is an optional boolean mask restricting the comparison.
    """
    num = np.asarray(values, dtype=float)
    ref = np.asarray(reference, dtype=float)
    w = np.asarray(weights, dtype=float)
    if window is not None:
        mask = np.asarray(window, dtype=bool)
        num, ref, w = num[mask], ref[mask], w[mask]
    if num.size == 0:
        raise ValueError("empty comparison window")
    ref_l1 = np.sum(w * np.abs(ref))
    ref_l2 = np.sqrt(np.sum(w * ref * ref))
    if ref_l1 <= 0.0 or ref_l2 <= 0.0:
        raise ValueError("reference field has zero norm")
    diff = num - ref
    return ErrorReport(
        rel_l1=float(np.sum(w * np.abs(diff)) / ref_l1),
        rel_l2=float(np.sqrt(np.sum(w * diff * diff)) / ref_l2),
        n_faces=int(num.size),
    )


def central_window(coords, fraction: float = 0.9):
    """Mask keeping the central ``fraction`` of a 1D coordinate range.

    Used to drop the tip neighborhoods when comparing tractions, where
    bounded oscillations would otherwise dominate the norm.
    """
    s = np.asarray(coords, dtype=float)
    lo, hi = s.min(), s.max()
    margin = 0.5 * (1.0 - fraction) * (hi - lo)
    return (s >= lo + margin) & (s <= hi - margin)


def convergence_rate(points) -> float:
    """Least-squares slope of log(error) against log(h)."""
    pts = [(float(h), float(e)) for h, e in points]
    if len(pts) < 2:
        raise ValueError("need at least two (h, error) samples")
    if any(h <= 0.0 or e <= 0.0 for h, e in pts):
        raise ValueError("mesh sizes and errors must be positive")
    log_h = np.log([h for h, _ in pts])
    log_e = np.log([e for _, e in pts])
    return float(np.polyfit(log_h, log_e, 1)[0])
