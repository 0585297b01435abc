"""Circle homeomorphisms, quasi-symmetry estimates, and boundary curves.

A degree-1 orientation-preserving circle map phi is the boundary datum of the
whole pipeline: its graph {(theta, phi(theta))} in ruling coordinates is an
acausal curve on the boundary torus, and the curve's profile g (time over base
angle) supplies Dirichlet values for the graph equation.

Maps are evaluated in lifted coordinates: a lift is a strictly increasing real
function with phi(theta + 2 pi) = phi(theta) + 2 pi.  Analytic families are
evaluated in closed form; sampled maps use monotone piecewise-cubic
interpolation of the lifted samples.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import ads
from .errors import (
    ConfigError,
    DegenerateQuadruple,
    NotAHomeomorphism,
    NotInChart,
)

TWO_PI = 2.0 * np.pi


class CircleMap:
    """Orientation-preserving circle homeomorphism of degree 1.

    Use the module constructors (identity_map, mobius_map, trig_map, shear_map,
    sampled_map) rather than instantiating directly.
    """

    def __init__(self, kind, **params):
        self.kind = kind
        self.params = dict(params)
        if kind == "sampled":
            theta = np.asarray(params["theta"], dtype=float)
            phi = np.asarray(params["phi"], dtype=float)
            if theta.ndim != 1 or theta.shape != phi.shape or theta.size < 8:
                raise NotAHomeomorphism("need at least 8 aligned samples")
            if np.any(np.diff(theta) <= 0) or theta[-1] - theta[0] >= TWO_PI:
                raise NotAHomeomorphism("sample angles must increase within one period")
            if np.any(np.diff(phi) <= 0):
                raise NotAHomeomorphism("sampled map is not strictly increasing")
            # periodic extension: one sample period on each side keeps the
            # interpolant degree-1 and C1 across the seam
            th = np.concatenate([theta - TWO_PI, theta, theta + TWO_PI])
            ph = np.concatenate([phi - TWO_PI, phi, phi + TWO_PI])
            self._interp = PchipInterpolator(th, ph)
        elif kind == "mobius":
            if abs(params["a"]) >= 1:
                raise ConfigError("mobius parameter must satisfy |a| < 1")
        elif kind == "trig":
            if abs(params["a"] * params["k"]) >= 1:
                raise ConfigError("trig family needs |a k| < 1 for monotonicity")
        elif kind == "shear":
            if params["s"] <= 0:
                raise ConfigError("shear factor must be positive")
        elif kind not in ("identity", "composed"):
            raise ConfigError(f"unknown circle map family: {kind}")

    def lifted(self, theta):
        """Evaluate the lift at real angles; broadcasts."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "identity":
            return theta.copy()
        if self.kind == "trig":
            a, k = self.params["a"], self.params["k"]
            return theta + a * np.sin(k * theta)
        if self.kind == "mobius":
            # boundary values of z -> e^{i rot} (z + a)/(1 + conj(a) z); the
            # principal arg below has positive real part, so this lift is
            # smooth and exact
            a, rot = complex(self.params["a"]), self.params["rot"]
            w = 1.0 + np.conj(a) * np.exp(1j * theta)
            return theta + rot - 2.0 * np.arctan2(w.imag, w.real)
        if self.kind == "shear":
            s = self.params["s"]
            period = np.floor((theta + np.pi) / TWO_PI)
            th = theta - TWO_PI * period  # (-pi, pi]
            x = np.tan(th / 2.0)
            fx = np.where(x >= 0, s * x, x)
            out = 2.0 * np.arctan(fx)
            out = np.where(np.isclose(th, np.pi), np.pi, out)
            return out + TWO_PI * period
        if self.kind == "composed":
            return self.params["outer"].lifted(self.params["inner"].lifted(theta))
        return self._interp(theta)

    def __call__(self, theta):
        """Image angle reduced mod 2 pi."""
        return np.mod(self.lifted(theta), TWO_PI)

    def points(self, theta):
        """Image as unit-circle points."""
        return np.exp(1j * self.lifted(theta))


def identity_map():
    return CircleMap("identity")


def mobius_map(a, rot=0.0):
    """Boundary map of the disk automorphism z -> e^{i rot}(z + a)/(1 + conj(a) z)."""
    return CircleMap("mobius", a=complex(a), rot=float(rot))


def trig_map(a, k):
    """phi(theta) = theta + a sin(k theta); needs |a k| < 1."""
    return CircleMap("trig", a=float(a), k=int(k))


def shear_map(s):
    """Piecewise-Mobius shear: conjugate of x -> s x (x >= 0), x (x < 0) on the line."""
    return CircleMap("shear", s=float(s))


def sampled_map(theta, phi):
    """Interpolated map through strictly increasing lifted samples (theta, phi)."""
    return CircleMap("sampled", theta=theta, phi=phi)


def compose_maps(outer, inner):
    """The circle map outer after inner (both degree 1, so the lift composes)."""
    return CircleMap("composed", outer=outer, inner=inner)


def family_map(spec):
    """Build a circle map from a {"family": ..., parameters} mapping.

    Accepted families: identity (no parameters), mobius (a as an [re, im]
    pair, optional rot), trig (a, k), shear (s).  Anything else, missing
    keys, or stray keys raise ConfigError so a bad config dies loudly.
    """
    if not isinstance(spec, dict) or "family" not in spec:
        raise ConfigError("boundary spec must be a mapping with a 'family' key")
    spec = dict(spec)
    family = spec.pop("family")
    try:
        if family == "identity":
            out = identity_map()
        elif family == "mobius":
            re, im = spec.pop("a")
            out = mobius_map(complex(float(re), float(im)), rot=float(spec.pop("rot", 0.0)))
        elif family == "trig":
            out = trig_map(float(spec.pop("a")), int(spec.pop("k")))
        elif family == "shear":
            out = shear_map(float(spec.pop("s")))
        else:
            raise ConfigError(f"unknown boundary family {family!r}")
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"bad parameters for boundary family {family!r}: {err}") from None
    if spec:
        raise ConfigError(f"unexpected boundary keys: {sorted(spec)}")
    return out


# ---------------------------------------------------------------------------
# cross-ratio machinery


def cross_ratio(x1, x2, x3, x4):
    """cr = (x4 - x1)(x3 - x2) / ((x2 - x1)(x3 - x4)), broadcasting."""
    pts = [np.asarray(x, dtype=complex) for x in (x1, x2, x3, x4)]
    for i in range(4):
        for j in range(i + 1, 4):
            if np.any(np.abs(pts[i] - pts[j]) < 1e-12):
                raise DegenerateQuadruple(f"points {i + 1} and {j + 1} coincide")
    x1, x2, x3, x4 = pts
    return (x4 - x1) * (x3 - x2) / ((x2 - x1) * (x3 - x4))


BASE_QUADRUPLE = np.array([1.0, 1.0j, -1.0, -1.0j])


def _quadruple_grid(n_quadruples, cap=6.0):
    """Symmetric cr = -1 quadruples: Mobius images of the base quadruple.

    The sampled family is the full rotation x translation x rotation
    decomposition R_omega T_ell R_psi applied to the base quadruple, with the
    translation length ell capped at `cap`.  Pre-rotating before the
    translation is what keeps the family stable under pre-composition with a
    Mobius map (up to the cap), which the norm's invariance test relies on.
    Grids are nested as n_quadruples doubles (angle counts are powers of two,
    ell counts are 2^j + 1), making the estimate monotone under refinement.
    """
    if n_quadruples < 16:
        raise ConfigError("need at least 16 quadruples")
    k = int(np.log2(n_quadruples))
    n_omega = 2 ** ((k + 2) // 3)
    n_psi = 2 ** ((k + 1) // 3)
    n_ell = 2 ** (k // 3) + 1
    omega = TWO_PI * np.arange(n_omega) / n_omega
    psi = TWO_PI * np.arange(n_psi) / n_psi
    ell = cap * np.arange(n_ell) / (n_ell - 1)
    th = np.tanh(ell / 2.0)[:, None, None, None]
    pre = np.exp(1j * psi)[None, :, None, None] * BASE_QUADRUPLE[None, None, None, :]
    translated = (pre + th) / (1.0 + th * pre)
    return np.exp(1j * omega)[None, None, :, None] * translated


def qs_norm_estimate(phi, n_quadruples=4096):
    """Lower estimate of the quasi-symmetry norm sup_Q |log|cr(phi(Q))||.

    The supremum defining the norm runs over all cr = -1 quadruples; this
    samples the capped two-parameter family of _quadruple_grid, so the result
    is a certified lower bound that is exact to sampling for the families of
    interest.  Nondecreasing in n_quadruples along the nested grid chain.
    """
    quads = _quadruple_grid(n_quadruples)
    theta = np.angle(quads)
    images = np.exp(1j * phi.lifted(theta))
    cr = cross_ratio(
        images[..., 0], images[..., 1], images[..., 2], images[..., 3]
    )
    return float(np.max(np.abs(np.log(np.abs(cr)))))


# ---------------------------------------------------------------------------
# quasicircles


class QuasiCircle:
    """Acausal graph curve on the boundary torus, with its time profile.

    Samples satisfy theta_r = phi(theta_l); alpha = (theta_l + theta_r)/2 is
    the base angle and tau = (theta_l - theta_r)/2 the asymptotic time, so the
    curve is the graph of the profile g with tau = g(alpha).  Acausality holds
    with a quantitative margin: |d tau / d alpha| <= 1 - eps_ac.
    """

    def __init__(self, theta_l, theta_r, eps_ac=1e-3):
        theta_l = np.asarray(theta_l, dtype=float)
        theta_r = np.asarray(theta_r, dtype=float)
        if theta_l.ndim != 1 or theta_l.shape != theta_r.shape or theta_l.size < 64:
            raise NotAHomeomorphism("need at least 64 aligned angle samples")
        for arr, side in ((theta_l, "left"), (theta_r, "right")):
            if np.any(np.diff(arr) <= 0) or arr[-1] - arr[0] >= TWO_PI:
                raise NotAHomeomorphism(f"{side} angles must increase within one period")
        alpha = (theta_l + theta_r) / 2.0
        tau = (theta_l - theta_r) / 2.0
        if np.any(np.abs(tau) >= np.pi / 2):
            raise NotInChart("profile leaves the static chart: |tau| >= pi/2")
        slopes = self._wrapped_slopes(alpha, tau)
        margin = 1.0 - float(np.max(np.abs(slopes)))
        if margin < eps_ac:
            raise NotAHomeomorphism(
                f"acausality margin {margin:.2e} below required {eps_ac:.2e}"
            )
        self.theta_l = theta_l
        self.theta_r = theta_r
        self.alpha = alpha
        self.tau = tau
        self.acausality_margin = margin
        a_ext = np.concatenate([alpha - TWO_PI, alpha, alpha + TWO_PI])
        t_ext = np.tile(tau, 3)
        self._profile = PchipInterpolator(a_ext, t_ext)

    @staticmethod
    def _wrapped_slopes(alpha, tau):
        da = np.diff(np.concatenate([alpha, [alpha[0] + TWO_PI]]))
        dt = np.diff(np.concatenate([tau, [tau[0]]]))
        return dt / da

    def profile(self, alpha):
        """Asymptotic time tau = g(alpha), periodic in alpha."""
        return self._profile(np.mod(np.asarray(alpha, dtype=float), TWO_PI))

    def profile_slope(self, alpha):
        """dg/dalpha, periodic; magnitude stays below 1 - eps_ac."""
        return self._profile.derivative()(
            np.mod(np.asarray(alpha, dtype=float), TWO_PI)
        )

    def null_lifts(self):
        """Continuous null-cone lift of the sampled curve (closed, oriented)."""
        pts = ads.boundary_null_vector(self.theta_l, self.theta_r)
        return np.concatenate([pts, pts[:1]], axis=0)


def make_quasicircle(phi, n_samples=1024, eps_ac=1e-3):
    """Graph of the circle map phi as a QuasiCircle."""
    if n_samples < 64:
        raise ConfigError("need at least 64 samples")
    theta_l = TWO_PI * np.arange(n_samples) / n_samples
    theta_r = phi.lifted(theta_l)
    return QuasiCircle(theta_l, theta_r, eps_ac=eps_ac)
