"""Prescribed-mean-curvature data on a convex base surface.

Given the induced metric of the base surface and a prescribed positive
function H (the data's mean curvature), the extension built from initial
factor u0 = H0 / H has total mass controlled by H.  Scaling H down by mu
(equivalently starting from u0 = H0 / (mu H)) moves the mass monotonically,
and there is a unique critical constant mu0 > 0 at which the total mass is
exactly zero:

    mass(H0 / (mu H)) > 0  for mu < mu0,   < 0  for mu > mu0.

mu0 is bracketed by two quadratures of the data alone,

    sqrt( Int H0 / Int H^2/H0 )  <=  mu0  <=  Int H0 / Int H,

with equality on the right exactly when H is a constant multiple of H0
(the Euclidean/rigidity case).  Any fill-in threshold for the data is
bounded above by mu0, which powers the non-existence certificate: if a
candidate mean curvature H_hat satisfies H_hat >= mu0 H strictly, the data
(surface, H_hat) admits no nonnegative-scalar-curvature fill-in, except in
the borderline proportional case where the flat ball itself is the fill-in.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import geometry, mass
from .errors import BracketFailureError, MarginTooSmallError, NotConvergedError
from .evolution import SolverConfig
from .geometry import ConvexSurface

logger = logging.getLogger("quasispherical")

PROPORTIONALITY_TOL = 1e-8


@dataclass
class BartnikData:
    """Base surface together with prescribed mean curvature H at the nodes.

    H may be axisymmetric (n_theta,) or full (n_theta, n_phi); it must be
    strictly positive.
    """

    surface: ConvexSurface
    H: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.H, dtype=float)
        n = self.surface.n_theta
        if arr.ndim == 0:
            arr = np.full(n, float(arr))
        if arr.ndim == 1 and arr.shape[0] != n:
            raise ValueError(f"H length {arr.shape[0]} != n_theta {n}")
        if arr.ndim == 2 and arr.shape != (n, self.surface.n_phi):
            raise ValueError(
                f"H shape {arr.shape} != ({n}, {self.surface.n_phi})"
            )
        if arr.ndim > 2:
            raise ValueError("H must be scalar, 1-d, or 2-d")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("H must be finite and strictly positive")
        self.H = arr


@dataclass(frozen=True)
class Mu0Result:
    """Critical scaling constant with its certification data.

    bracket is the final bisection interval; mass_at_lo / mass_at_hi are the
    measured total masses (ADM units) at its ends, which straddle zero.
    lambda0_upper_bound is the certified upper bound for any fill-in
    threshold of the data (the conservative end of the bracket).
    """

    mu0: float
    bracket: tuple[float, float]
    mass_at_lo: float
    mass_at_hi: float
    analytic_lower: float
    analytic_upper: float
    iterations: int
    lambda0_upper_bound: float
    is_euclidean_case: bool


@dataclass(frozen=True)
class Certificate:
    """Outcome of the no-fill-in test for candidate mean curvature H_hat."""

    granted: bool
    exceptional_case: bool
    margin_required: float
    margin_measured: float
    ratio_min: float
    mu0: float
    mu0_bracket: tuple[float, float]
    certified_error: float
    reason: str


def h0_of(surface: ConvexSurface) -> np.ndarray:
    """Mean curvature of the base surface at the grid nodes (sum of the
    principal curvatures; 2/rho on a round sphere of radius rho)."""
    return surface.kappa1 + surface.kappa2


def _h_node_factor(surface: ConvexSurface, H: np.ndarray) -> np.ndarray:
    """H0 broadcast against the shape of H."""
    h0 = h0_of(surface)
    return h0[:, None] if H.ndim == 2 else h0


def mu0_bounds(data: BartnikData) -> tuple[float, float]:
    """Quadrature bracket for the critical scaling constant.

    lower = sqrt( Int H0 / Int H^2/H0 ), upper = Int H0 / Int H, both over
    the base surface.  upper equals mu0 exactly when H is proportional to
    H0; lower comes from the non-decreasing lower mass functional.
    """
    frame0 = geometry.frame_at(data.surface, 0.0)
    h0 = _h_node_factor(data.surface, data.H)
    int_h0 = geometry.integrate(frame0, h0 * np.ones_like(data.H))
    int_h = geometry.integrate(frame0, data.H)
    int_h2_over_h0 = geometry.integrate(frame0, data.H * data.H / h0)
    lower = float(np.sqrt(int_h0 / int_h2_over_h0))
    upper = float(int_h0 / int_h)
    return lower, upper


def proportionality_diagnostic(
    data: BartnikData, tol: float = PROPORTIONALITY_TOL
) -> tuple[bool, float]:
    """Detect H = H0 / k for a constant k (the Euclidean/rigidity case).

    Returns (is_proportional, k) with k = Int H0 / Int H; proportional means
    max |k H - H0| <= tol * max H0.
    """
    frame0 = geometry.frame_at(data.surface, 0.0)
    h0 = _h_node_factor(data.surface, data.H)
    k = geometry.integrate(frame0, h0 * np.ones_like(data.H)) / geometry.integrate(
        frame0, data.H
    )
    deviation = float(np.max(np.abs(k * data.H - h0)))
    scale = float(np.max(np.abs(h0)))
    return deviation <= tol * scale, float(k)


def _probe_mass(
    data: BartnikData, mu: float, config: SolverConfig, mass_tol: float
) -> mass.MassEstimate:
    """Total mass of the extension for the scaled data H0 / (mu H)."""
    u0 = _h_node_factor(data.surface, data.H) / (mu * data.H)
    series, _ = mass.compute_mass_series(data.surface, u0, config)
    try:
        return mass.estimate_mass(series, tol=mass_tol)
    except NotConvergedError as err:
        logger.info("probe at mu=%.8g not fully converged: %s", mu, err)
        return err.estimate


def _certified_sign(est: mass.MassEstimate, mass_tol: float) -> int:
    if abs(est.value) <= mass_tol and est.bracket_hi - est.bracket_lo <= 50.0 * mass_tol:
        return 0
    if est.bracket_lo > 0.0:
        return 1
    if est.bracket_hi < 0.0:
        return -1
    # Wide straddling bracket: fall back on the extrapolated value.
    return 1 if est.value > 0 else -1


def solve_mu0(
    data: BartnikData,
    mu_tol: float = 1e-3,
    mass_tol: float = 1e-6,
    config: Optional[SolverConfig] = None,
) -> Mu0Result:
    """Locate the zero-mass scaling constant by monotone bisection.

    The analytic bounds are widened by 5 percent on each side to form the
    starting bracket; the mass at the two ends must straddle zero
    (BracketFailureError otherwise).  Bisection stops when the bracket is
    narrower than mu_tol * mu0 or the midpoint mass vanishes within
    mass_tol.
    """
    if config is None:
        config = SolverConfig()
    analytic_lower, analytic_upper = mu0_bounds(data)
    is_euclidean, _ = proportionality_diagnostic(data)

    lo = 0.95 * analytic_lower
    hi = 1.05 * analytic_upper
    est_lo = _probe_mass(data, lo, config, mass_tol)
    est_hi = _probe_mass(data, hi, config, mass_tol)
    iterations = 2
    if _certified_sign(est_lo, mass_tol) <= 0:
        raise BracketFailureError(
            f"mass at the low end mu={lo:.8g} is not positive "
            f"(bracket [{est_lo.bracket_lo:.3e}, {est_lo.bracket_hi:.3e}])"
        )
    if _certified_sign(est_hi, mass_tol) >= 0:
        raise BracketFailureError(
            f"mass at the high end mu={hi:.8g} is not negative "
            f"(bracket [{est_hi.bracket_lo:.3e}, {est_hi.bracket_hi:.3e}])"
        )

    while hi - lo > mu_tol * 0.5 * (lo + hi):
        mid = 0.5 * (lo + hi)
        est_mid = _probe_mass(data, mid, config, mass_tol)
        iterations += 1
        sign = _certified_sign(est_mid, mass_tol)
        logger.info(
            "bisection %d: mu=[%.8g, %.8g], mid mass %.3e",
            iterations,
            lo,
            hi,
            est_mid.value,
        )
        if sign == 0:
            # The mass at the midpoint vanishes within mass_tol, so mu0 is
            # localized to mass_tol divided by the local slope of the mass
            # in mu; the slope is estimated from the certified endpoints.
            slope = (est_lo.value - est_hi.value) / (hi - lo)
            eps = mass_tol / max(slope, 1e-300)
            lo = max(lo, mid - eps)
            hi = min(hi, mid + eps)
            break
        if sign > 0:
            lo, est_lo = mid, est_mid
        else:
            hi, est_hi = mid, est_mid

    mu0 = 0.5 * (lo + hi)
    return Mu0Result(
        mu0=mu0,
        bracket=(lo, hi),
        mass_at_lo=est_lo.value,
        mass_at_hi=est_hi.value,
        analytic_lower=analytic_lower,
        analytic_upper=analytic_upper,
        iterations=iterations,
        lambda0_upper_bound=hi,
        is_euclidean_case=is_euclidean,
    )


def quasilocal_masses(
    data: BartnikData,
    mu0: Union[Mu0Result, float, None] = None,
    mu_tol: float = 1e-3,
    mass_tol: float = 1e-6,
    config: Optional[SolverConfig] = None,
) -> tuple[float, float]:
    """Two quasi-local mass values attached to the data, m2 <= m1.

    m1 = sqrt(|Sigma|/16 pi) (1 - (Int H / Int H0)^2) needs quadratures
    only; m2 = sqrt(|Sigma|/16 pi) (1 - 1/mu0^2) needs the critical scaling
    constant, which is solved for when not supplied.
    """
    frame0 = geometry.frame_at(data.surface, 0.0)
    h0 = _h_node_factor(data.surface, data.H)
    ratio = geometry.integrate(frame0, data.H) / geometry.integrate(
        frame0, h0 * np.ones_like(data.H)
    )
    scale = float(np.sqrt(data.surface.area / (16.0 * np.pi)))
    m1 = scale * (1.0 - ratio * ratio)

    if mu0 is None:
        mu0 = solve_mu0(data, mu_tol=mu_tol, mass_tol=mass_tol, config=config)
    mu0_value = mu0.mu0 if isinstance(mu0, Mu0Result) else float(mu0)
    m2 = scale * (1.0 - 1.0 / (mu0_value * mu0_value))
    return float(m1), float(m2)


def certify_no_fill_in(
    data: BartnikData,
    h_hat: np.ndarray,
    margin: float,
    mu0_result: Optional[Mu0Result] = None,
    mu_tol: float = 1e-3,
    mass_tol: float = 1e-6,
    config: Optional[SolverConfig] = None,
) -> Certificate:
    """Certificate that (surface, h_hat) admits no compact fill-in with
    nonnegative scalar curvature.

    Granted when min(h_hat / H) clears the certified upper end of the mu0
    bracket by at least the requested relative margin, outside the
    borderline proportional case.  The borderline case (data proportional
    to H0 and h_hat sitting at mu0 H within the margin) is flagged
    exceptional and the certificate is withheld: there the flat ball itself
    provides a fill-in.

    Raises MarginTooSmallError when the requested margin is below the
    certified relative error of mu0 itself.
    """
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")
    h_hat = np.asarray(h_hat, dtype=float)
    if h_hat.shape != data.H.shape:
        raise ValueError(f"h_hat shape {h_hat.shape} != H shape {data.H.shape}")
    if not np.all(np.isfinite(h_hat)) or np.any(h_hat <= 0):
        raise ValueError("h_hat must be finite and strictly positive")

    if mu0_result is None:
        mu0_result = solve_mu0(data, mu_tol=mu_tol, mass_tol=mass_tol, config=config)

    mu0 = mu0_result.mu0
    bracket_lo, bracket_hi = mu0_result.bracket
    certified_error = (bracket_hi - bracket_lo) / (2.0 * mu0)
    if margin <= certified_error:
        raise MarginTooSmallError(
            f"requested margin {margin:.3e} is not above the certified relative "
            f"error {certified_error:.3e} of mu0; tighten mu_tol or raise margin"
        )

    ratios = h_hat / data.H
    ratio_min = float(np.min(ratios))
    ratio_max = float(np.max(ratios))
    margin_measured = ratio_min / bracket_hi - 1.0

    borderline = (
        mu0_result.is_euclidean_case
        and abs(ratio_min / mu0 - 1.0) <= margin
        and abs(ratio_max / mu0 - 1.0) <= margin
    )
    if borderline:
        return Certificate(
            granted=False,
            exceptional_case=True,
            margin_required=margin,
            margin_measured=margin_measured,
            ratio_min=ratio_min,
            mu0=mu0,
            mu0_bracket=(bracket_lo, bracket_hi),
            certified_error=certified_error,
            reason=(
                "borderline proportional case: data mean curvature is "
                "proportional to the ambient value and h_hat sits at mu0 H, "
                "where the flat ball is a fill-in"
            ),
        )
    granted = margin_measured >= margin
    reason = (
        "h_hat >= mu0 H with margin "
        f"{margin_measured:.3e} >= {margin:.3e}"
        if granted
        else (
            f"measured margin {margin_measured:.3e} below required {margin:.3e}; "
            "no-fill-in not certified"
        )
    )
    return Certificate(
        granted=granted,
        exceptional_case=False,
        margin_required=margin,
        margin_measured=margin_measured,
        ratio_min=ratio_min,
        mu0=mu0,
        mu0_bracket=(bracket_lo, bracket_hi),
        certified_error=certified_error,
        reason=reason,
    )
