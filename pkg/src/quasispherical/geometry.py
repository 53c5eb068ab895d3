"""Convex surfaces of revolution and their outward parallel (offset) foliation.

A surface is described by a profile curve (x(theta), z(theta)), theta in
[0, pi], revolved about the z-axis; x > 0 away from the poles and the curve
runs from the north pole (+z) to the south pole (-z).  With the outward unit
normal, both principal curvatures of an admissible surface are positive.

Flowing distance r along the normal gives the parallel surface Sigma_r.  Its
first fundamental form and curvatures follow from the base data in closed
form:

    E_r = E0 (1 + r k1)^2          (meridian metric coefficient)
    G_r = G0 (1 + r k2)^2          (azimuthal metric coefficient)
    k_i(r) = k_i / (1 + r k_i)     (principal curvatures)
    H0_r = k1(r) + k2(r)           (mean curvature, sum convention)
    R_r  = 2 k1(r) k2(r)           (scalar curvature of Sigma_r)

The discrete grid is cell-centered in theta (nodes at (j+1/2) dtheta, faces
at j dtheta) and uniform periodic in phi.  Cell area measures are computed
as exact integrals of the area density over each cell, split by the offset
polynomial: the density sqrt(E_r G_r) equals sqrt(E0 G0) (1 + r k1)(1 + r k2),
so each cell carries three coefficients (w0, wH, wK) and its measure at any
r is w0 + r wH + r^2 wK with no further quadrature error in r.  Integrals,
areas, and the finite-volume Laplacian are built on these measures, which
makes the discrete divergence theorem hold to roundoff and keeps integral
functionals of exactly round data exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DegenerateProfileError, NonConvexError

# Gauss-Legendre rule used once per cell when the measure coefficients are
# built; exact for polynomials of degree < 2*_GL_ORDER.
_GL_ORDER = 12
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


@dataclass(frozen=True)
class Sphere:
    """Round sphere of the given radius."""

    radius: float

    def canonical_dict(self) -> dict:
        return {"kind": "sphere", "radius": float(self.radius)}


@dataclass(frozen=True)
class Spheroid:
    """Ellipsoid of revolution x^2/a^2 + y^2/a^2 + z^2/c^2 = 1.

    a = equatorial_radius, c = polar_radius.  Prolate for c > a, oblate for
    c < a; both are admissible (strictly convex).
    """

    equatorial_radius: float
    polar_radius: float

    def canonical_dict(self) -> dict:
        return {
            "kind": "spheroid",
            "equatorial_radius": float(self.equatorial_radius),
            "polar_radius": float(self.polar_radius),
        }


@dataclass(frozen=True)
class ProfileCurve:
    """Sampled profile curve (x(theta), z(theta)) on [0, pi].

    Samples must include the poles (x = 0 at both ends) and be fine enough
    for centered differences: curvatures are formed on the sample grid and
    restricted to the solver grid, so accuracy is set by the sample spacing.
    """

    theta: tuple
    x: tuple
    z: tuple

    @staticmethod
    def from_arrays(theta, x, z) -> "ProfileCurve":
        return ProfileCurve(
            theta=tuple(float(t) for t in np.asarray(theta, dtype=float)),
            x=tuple(float(v) for v in np.asarray(x, dtype=float)),
            z=tuple(float(v) for v in np.asarray(z, dtype=float)),
        )

    def canonical_dict(self) -> dict:
        return {
            "kind": "profile",
            "theta": [float(f"{v:.17g}") for v in self.theta],
            "x": [float(f"{v:.17g}") for v in self.x],
            "z": [float(f"{v:.17g}") for v in self.z],
        }


Shape = Union[Sphere, Spheroid, ProfileCurve]


@dataclass(frozen=True)
class SurfaceSpec:
    """Shape plus grid resolution.

    n_theta cells cover [0, pi] (nodes at cell centers), n_phi cells cover
    [0, 2 pi) periodically.  Minimum resolutions keep the polar closure and
    the phi stencil meaningful.
    """

    shape: Shape
    n_theta: int = 64
    n_phi: int = 16

    def canonical_dict(self) -> dict:
        d = self.shape.canonical_dict()
        d["n_theta"] = int(self.n_theta)
        d["n_phi"] = int(self.n_phi)
        return d

    def spec_hash(self) -> str:
        text = json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True)
class ConvexSurface:
    """Base surface with grid data and offset-ready cell measures.

    Node arrays have length n_theta, face arrays length n_theta + 1.  The
    face coefficient aface0 = sqrt(G0/E0) vanishes at the poles, which closes
    the polar fluxes of the finite-volume Laplacian without special cases.
    """

    spec: SurfaceSpec
    theta: np.ndarray
    theta_faces: np.ndarray
    d_theta: float
    n_phi: int
    d_phi: float
    E0: np.ndarray
    G0: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    kappa1_faces: np.ndarray
    kappa2_faces: np.ndarray
    aface0: np.ndarray
    w0: np.ndarray
    wH: np.ndarray
    wK: np.ndarray
    area: float = field(default=0.0)

    @property
    def n_theta(self) -> int:
        return self.theta.shape[0]

    def area_at(self, r: float) -> float:
        """Area of the parallel surface Sigma_r (exact offset polynomial)."""
        w = self.w0 + r * self.wH + r * r * self.wK
        return 2.0 * np.pi * float(np.sum(w))


@dataclass(frozen=True)
class FoliationFrame:
    """Geometry of one leaf Sigma_r: metric, curvatures, and cell measures."""

    r: float
    theta: np.ndarray
    d_theta: float
    n_phi: int
    d_phi: float
    E: np.ndarray
    G: np.ndarray
    H0: np.ndarray
    R: np.ndarray
    sqrt_eg: np.ndarray
    w: np.ndarray
    aface: np.ndarray
    area: float

    @property
    def n_theta(self) -> int:
        return self.theta.shape[0]


def _spheroid_tables(a: float, c: float) -> Callable[[np.ndarray], dict]:
    """Closed-form profile data for x = a sin(theta), z = c cos(theta)."""

    def evaluate(theta: np.ndarray) -> dict:
        st = np.sin(theta)
        ct = np.cos(theta)
        E = a * a * ct * ct + c * c * st * st
        sqrtE = np.sqrt(E)
        x = a * st
        k1 = a * c / (E * sqrtE)
        k2 = c / (a * sqrtE)
        return {
            "E": E,
            "G": x * x,
            "k1": k1,
            "k2": k2,
            "dens": x * sqrtE,
        }

    return evaluate


def _profile_tables(curve: ProfileCurve) -> Callable[[np.ndarray], dict]:
    """Sampled-curve geometry: centered differences on the sample grid, then
    linear restriction to requested angles."""
    theta_s = np.asarray(curve.theta, dtype=float)
    x_s = np.asarray(curve.x, dtype=float)
    z_s = np.asarray(curve.z, dtype=float)

    if theta_s.ndim != 1 or theta_s.shape != x_s.shape or theta_s.shape != z_s.shape:
        raise DegenerateProfileError("profile arrays must be 1-d and equally sized")
    if theta_s.size < 32:
        raise DegenerateProfileError("profile needs at least 32 samples")
    if np.any(np.diff(theta_s) <= 0):
        raise DegenerateProfileError("profile theta samples must be strictly increasing")
    if abs(theta_s[0]) > 1e-12 or abs(theta_s[-1] - np.pi) > 1e-12:
        raise DegenerateProfileError("profile must span [0, pi] including both poles")

    # Accept curves supplied south-to-north by reversing them.
    if z_s[0] < z_s[-1]:
        x_s = x_s[::-1].copy()
        z_s = z_s[::-1].copy()

    pole_tol = 1e-9 * max(1.0, float(np.max(np.abs(x_s))))
    if abs(x_s[0]) > pole_tol or abs(x_s[-1]) > pole_tol:
        raise DegenerateProfileError("profile radius must vanish at both poles")
    if np.any(x_s[1:-1] <= 0):
        raise DegenerateProfileError("profile radius must be positive away from the poles")

    # Height must decrease monotonically near the poles (outward cap geometry).
    cap = max(2, theta_s.size // 10)
    if np.any(np.diff(z_s[: cap + 1]) >= 0) or np.any(np.diff(z_s[-cap - 1 :]) >= 0):
        raise DegenerateProfileError("profile height must decrease near both poles")

    xp = np.gradient(x_s, theta_s, edge_order=2)
    zp = np.gradient(z_s, theta_s, edge_order=2)
    xpp = np.gradient(xp, theta_s, edge_order=2)
    zpp = np.gradient(zp, theta_s, edge_order=2)

    E_s = xp * xp + zp * zp
    sqrtE_s = np.sqrt(E_s)
    # Meridian curvature from the curve, azimuthal from the normal tilt.
    k1_s = (zp * xpp - xp * zpp) / (E_s * sqrtE_s)
    with np.errstate(divide="ignore", invalid="ignore"):
        k2_s = np.where(x_s > pole_tol, -zp / (np.maximum(x_s, pole_tol) * sqrtE_s), k1_s)
    # At the poles the surface is umbilic; reuse the meridian value.
    k2_s[0] = k1_s[0]
    k2_s[-1] = k1_s[-1]

    dens_s = x_s * sqrtE_s

    def evaluate(theta: np.ndarray) -> dict:
        E = np.interp(theta, theta_s, E_s)
        x = np.interp(theta, theta_s, x_s)
        k1 = np.interp(theta, theta_s, k1_s)
        k2 = np.interp(theta, theta_s, k2_s)
        dens = np.interp(theta, theta_s, dens_s)
        return {"E": E, "G": x * x, "k1": k1, "k2": k2, "dens": dens}

    return evaluate


def _shape_tables(shape: Shape) -> Callable[[np.ndarray], dict]:
    if isinstance(shape, Sphere):
        if shape.radius <= 0:
            raise DegenerateProfileError("sphere radius must be positive")
        return _spheroid_tables(shape.radius, shape.radius)
    if isinstance(shape, Spheroid):
        if shape.equatorial_radius <= 0 or shape.polar_radius <= 0:
            raise DegenerateProfileError("spheroid semi-axes must be positive")
        return _spheroid_tables(shape.equatorial_radius, shape.polar_radius)
    if isinstance(shape, ProfileCurve):
        return _profile_tables(shape)
    raise TypeError(f"unsupported shape {type(shape).__name__}")


def build_surface(spec: SurfaceSpec) -> ConvexSurface:
    """Validate the shape, build grid data, and precompute cell measures.

    Raises NonConvexError if a principal curvature is non-positive at any
    node or interior face, DegenerateProfileError for unusable profile data,
    and ValueError for resolutions below the minima (n_theta >= 16,
    n_phi >= 8).
    """
    if spec.n_theta < 16:
        raise ValueError(f"n_theta must be >= 16, got {spec.n_theta}")
    if spec.n_phi < 8:
        raise ValueError(f"n_phi must be >= 8, got {spec.n_phi}")

    n = int(spec.n_theta)
    d_theta = np.pi / n
    theta_faces = np.linspace(0.0, np.pi, n + 1)
    theta = theta_faces[:-1] + 0.5 * d_theta
    n_phi = int(spec.n_phi)
    d_phi = 2.0 * np.pi / n_phi

    tables = _shape_tables(spec.shape)
    at_nodes = tables(theta)
    at_faces = tables(theta_faces)

    k1 = at_nodes["k1"]
    k2 = at_nodes["k2"]
    k1f = at_faces["k1"]
    k2f = at_faces["k2"]
    for name, arr in (("node", np.minimum(k1, k2)), ("face", np.minimum(k1f, k2f))):
        if not np.all(np.isfinite(arr)):
            raise DegenerateProfileError(f"non-finite curvature at a {name}")
        if np.any(arr <= 0):
            j = int(np.argmin(arr))
            angle = (theta if name == "node" else theta_faces)[j]
            raise NonConvexError(
                f"principal curvature {arr[j]:.6g} <= 0 at theta = {angle:.6f} "
                f"({name} {j}); surface must be strictly convex"
            )

    # Face transport coefficient sqrt(G0/E0); exactly zero at the poles.
    aface0 = np.sqrt(at_faces["G"] / at_faces["E"])
    aface0[0] = 0.0
    aface0[-1] = 0.0

    # Cell measures: integrate the density and its curvature-weighted forms
    # over each cell with Gauss-Legendre, once.
    half = 0.5 * d_theta
    sub = theta_faces[:-1, None] + half * (_GL_NODES[None, :] + 1.0)
    at_sub = tables(sub.ravel())
    dens = at_sub["dens"].reshape(n, _GL_ORDER)
    k1s = at_sub["k1"].reshape(n, _GL_ORDER)
    k2s = at_sub["k2"].reshape(n, _GL_ORDER)
    gw = _GL_WEIGHTS[None, :] * half
    w0 = np.sum(dens * gw, axis=1)
    wH = np.sum(dens * (k1s + k2s) * gw, axis=1)
    wK = np.sum(dens * (k1s * k2s) * gw, axis=1)

    area = 2.0 * np.pi * float(np.sum(w0))

    return ConvexSurface(
        spec=spec,
        theta=theta,
        theta_faces=theta_faces,
        d_theta=d_theta,
        n_phi=n_phi,
        d_phi=d_phi,
        E0=at_nodes["E"],
        G0=at_nodes["G"],
        kappa1=k1,
        kappa2=k2,
        kappa1_faces=k1f,
        kappa2_faces=k2f,
        aface0=aface0,
        w0=w0,
        wH=wH,
        wK=wK,
        area=area,
    )


def frame_at(surface: ConvexSurface, r: float) -> FoliationFrame:
    """Geometry of the parallel surface at offset r >= 0 in closed form."""
    if r < 0:
        raise ValueError(f"offset r must be >= 0, got {r}")
    f1 = 1.0 + r * surface.kappa1
    f2 = 1.0 + r * surface.kappa2
    E = surface.E0 * f1 * f1
    G = surface.G0 * f2 * f2
    k1r = surface.kappa1 / f1
    k2r = surface.kappa2 / f2
    H0 = k1r + k2r
    R = 2.0 * k1r * k2r
    w = surface.w0 + r * surface.wH + r * r * surface.wK
    f1f = 1.0 + r * surface.kappa1_faces
    f2f = 1.0 + r * surface.kappa2_faces
    aface = surface.aface0 * f2f / f1f
    return FoliationFrame(
        r=float(r),
        theta=surface.theta,
        d_theta=surface.d_theta,
        n_phi=surface.n_phi,
        d_phi=surface.d_phi,
        E=E,
        G=G,
        H0=H0,
        R=R,
        sqrt_eg=np.sqrt(E * G),
        w=w,
        aface=aface,
        area=2.0 * np.pi * float(np.sum(w)),
    )


def integrate(frame: FoliationFrame, fld) -> float:
    """Surface integral of a scalar field over Sigma_r.

    Accepts a python scalar, an axisymmetric (n_theta,) field, or a full
    (n_theta, n_phi) field.  Axisymmetric fields use the 2 pi azimuthal
    factor exactly.
    """
    arr = np.asarray(fld, dtype=float)
    if arr.ndim == 0:
        return float(arr) * frame.area
    if arr.ndim == 1:
        if arr.shape[0] != frame.n_theta:
            raise ValueError(f"field length {arr.shape[0]} != n_theta {frame.n_theta}")
        return 2.0 * np.pi * float(np.sum(arr * frame.w))
    if arr.ndim == 2:
        if arr.shape != (frame.n_theta, frame.n_phi):
            raise ValueError(
                f"field shape {arr.shape} != (n_theta, n_phi) = "
                f"({frame.n_theta}, {frame.n_phi})"
            )
        return frame.d_phi * float(np.sum(arr * frame.w[:, None]))
    raise ValueError(f"field must be scalar, 1-d, or 2-d, got ndim={arr.ndim}")


def laplacian(frame: FoliationFrame, fld: np.ndarray) -> np.ndarray:
    """Laplace-Beltrami operator of Sigma_r on a grid field.

    Finite-volume form: theta-fluxes through cell faces with the transport
    coefficient sqrt(G_r/E_r) (zero at the poles, closing the domain), and a
    centered periodic second difference in phi scaled by 1/G_r.  Constants
    map to exactly zero; the operator is symmetric and conservative with
    respect to integrate().
    """
    u = np.asarray(fld, dtype=float)
    n = frame.n_theta
    if u.ndim == 1:
        if u.shape[0] != n:
            raise ValueError(f"field length {u.shape[0]} != n_theta {n}")
        flux = np.zeros(n + 1)
        flux[1:-1] = frame.aface[1:-1] * np.diff(u) / frame.d_theta
        return (flux[1:] - flux[:-1]) / frame.w
    if u.ndim == 2:
        if u.shape != (n, frame.n_phi):
            raise ValueError(
                f"field shape {u.shape} != ({n}, {frame.n_phi})"
            )
        flux = np.zeros((n + 1, frame.n_phi))
        flux[1:-1, :] = frame.aface[1:-1, None] * np.diff(u, axis=0) / frame.d_theta
        out = (flux[1:, :] - flux[:-1, :]) / frame.w[:, None]
        out += (np.roll(u, -1, axis=1) - 2.0 * u + np.roll(u, 1, axis=1)) / (
            frame.G[:, None] * frame.d_phi * frame.d_phi
        )
        return out
    raise ValueError(f"field must be 1-d or 2-d, got ndim={u.ndim}")
