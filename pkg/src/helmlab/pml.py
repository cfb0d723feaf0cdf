"""
Complex coordinate stretching for absorbing layers, one profile per axis.

Each axis m carries a scaling gamma_m(x) = 1 + i g_m'(x) built from a ramp
f with f(0) = 0, f'(0) = 0, f' > 0 on (0, kappa]:

    g(x) = 0            on [lo, hi],
    g(x) = f(x - hi)    above hi,
    g(x) = -f(lo - x)   below lo,

so g' >= 0 on both sides and the layer absorbs symmetrically.  The stretched
Helmholtz operator keeps the plain sesquilinear form in the physical region
and acquires the diagonal diffusion D = diag(gamma_1^-2, gamma_2^-2) and the
drift beta = (gamma_1' gamma_1^-3, gamma_2' gamma_2^-3) inside the layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import Rect


class PmlError(ValueError):
    pass


@dataclass(frozen=True)
class PmlProfile:
    """Ramp f on [0, kappa) defining the absorption of one layer.

    kinds
    -----
    cubic:          f(t) = (a/3) t^3, so f'(t) = a t^2.
    smooth_capped:  f'(t) = (a/3) kappa_lin^2 B(min(t, kappa_lin)/kappa_lin)
                    with B(s) = s^2 (3 - 2s); matches the cubic's f' ~ a t^2
                    near 0, levels off C^2-smoothly at t = kappa_lin.
    """

    kind: str
    strength: float          # a
    width: float             # kappa (reference layer width)
    kappa_lin: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("cubic", "smooth_capped"):
            raise PmlError(f"unknown profile kind {self.kind!r}")
        if self.strength < 0.0 or not np.isfinite(self.strength):
            raise PmlError(f"profile strength must be >= 0 and finite, got {self.strength}")
        if self.width <= 0.0:
            raise PmlError(f"profile width must be positive, got {self.width}")
        if self.kind == "smooth_capped":
            if self.kappa_lin is None or not (0.0 < self.kappa_lin <= self.width):
                raise PmlError(
                    f"smooth_capped needs 0 < kappa_lin <= width, got kappa_lin={self.kappa_lin}"
                )

    @classmethod
    def cubic(cls, strength: float, width: float) -> "PmlProfile":
        return cls("cubic", strength, width)

    @classmethod
    def smooth_capped(
        cls, strength: float, width: float, kappa_lin: Optional[float] = None
    ) -> "PmlProfile":
        if kappa_lin is None:
            kappa_lin = 0.5 * width
        return cls("smooth_capped", strength, width, kappa_lin)

    def f(self, t):
        t = np.asarray(t, dtype=np.float64)
        a = self.strength
        if self.kind == "cubic":
            return (a / 3.0) * t**3
        kl = self.kappa_lin
        s = np.minimum(t / kl, 1.0)
        core = (a / 3.0) * kl**3 * (s**3 - 0.5 * s**4)
        tail = (a / 3.0) * kl**2 * np.maximum(t - kl, 0.0)
        return core + tail

    def f_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        a = self.strength
        if self.kind == "cubic":
            return a * t**2
        kl = self.kappa_lin
        s = np.minimum(t / kl, 1.0)
        return (a / 3.0) * kl**2 * s**2 * (3.0 - 2.0 * s)

    def f_second(self, t):
        t = np.asarray(t, dtype=np.float64)
        a = self.strength
        if self.kind == "cubic":
            return 2.0 * a * t
        kl = self.kappa_lin
        s = np.minimum(t / kl, 1.0)
        return 2.0 * a * kl * s * (1.0 - s)


@dataclass(frozen=True)
class AxisScaling:
    """gamma_m along one axis: identity on [lo, hi], stretched outside."""

    lo: float
    hi: float
    profile: PmlProfile

    def __post_init__(self):
        if not self.lo < self.hi:
            raise PmlError(f"axis interval degenerate: [{self.lo}, {self.hi}]")

    def g(self, x):
        x = np.asarray(x, dtype=np.float64)
        up = self.profile.f(np.maximum(x - self.hi, 0.0))
        dn = self.profile.f(np.maximum(self.lo - x, 0.0))
        return up - dn

    def g_prime(self, x):
        x = np.asarray(x, dtype=np.float64)
        up = self.profile.f_prime(np.maximum(x - self.hi, 0.0))
        dn = self.profile.f_prime(np.maximum(self.lo - x, 0.0))
        return up + dn

    def g_second(self, x):
        x = np.asarray(x, dtype=np.float64)
        up = self.profile.f_second(np.maximum(x - self.hi, 0.0))
        dn = self.profile.f_second(np.maximum(self.lo - x, 0.0))
        return up - dn

    def gamma(self, x):
        """1 + i g'(x); identically 1 on [lo, hi], Im >= 0 everywhere."""
        return 1.0 + 1j * self.g_prime(x)

    def gamma_prime(self, x):
        """d gamma / dx = i g''(x)."""
        return 1j * self.g_second(x)


def gamma(ax: AxisScaling, x):
    return ax.gamma(x)


def gamma_prime(ax: AxisScaling, x):
    return ax.gamma_prime(x)


@dataclass(frozen=True)
class CoefficientField:
    """Coefficients of the stretched Helmholtz form on a rectangle.

    ax1, ax2 are the per-axis scalings, k the wavenumber, c the wavespeed
    (None means c = 1).  eval_D_beta gives the pointwise diffusion matrix and
    drift vector; the *_at helpers are the vectorized forms assembly uses.
    """

    ax1: AxisScaling
    ax2: AxisScaling
    k: float
    c: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.k <= 0.0:
            raise PmlError(f"wavenumber must be positive, got k={self.k}")

    def d_diag_at(self, x, y):
        """(D_11(x), D_22(y)): diagonal of D at the given coordinates."""
        return self.ax1.gamma(x) ** -2, self.ax2.gamma(y) ** -2

    def beta_at(self, x, y):
        """(beta_1(x), beta_2(y)): drift components."""
        g1 = self.ax1.gamma(x)
        g2 = self.ax2.gamma(y)
        return self.ax1.gamma_prime(x) * g1**-3, self.ax2.gamma_prime(y) * g2**-3

    def c_inv_sq_at(self, x, y):
        if self.c is None:
            return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        return np.asarray(self.c(x, y), dtype=np.float64) ** -2

    def eval_D_beta(self, x: float, y: float):
        """Pointwise (D, beta): complex 2x2 diagonal matrix and 2-vector."""
        d1, d2 = self.d_diag_at(x, y)
        b1, b2 = self.beta_at(x, y)
        D = np.diag([complex(d1), complex(d2)])
        beta = np.array([complex(b1), complex(b2)])
        return D, beta


def global_field(
    omega_int: Rect,
    profile: PmlProfile,
    k: float,
    c: Optional[Callable] = None,
) -> CoefficientField:
    """Field whose identity region is the physical rectangle."""
    return CoefficientField(
        ax1=AxisScaling(omega_int.x_lo, omega_int.x_hi, profile),
        ax2=AxisScaling(omega_int.y_lo, omega_int.y_hi, profile),
        k=k,
        c=c,
    )


def local_field(cf: CoefficientField, sub_box: Rect, kappa: Optional[float] = None) -> CoefficientField:
    """Field for a subdomain problem: identity on sub_box, same ramp outside.

    The ramp profile is shared verbatim with the global field; only the branch
    points move to the sub_box edges.  That makes the local scaling agree with
    the global one bit-exactly wherever both are stretched off the same edge
    coordinate (shared external sides), and both are identically 1 on the
    plateau, which is the agreement the partition of unity relies on.  kappa
    is the local layer width, recorded by the layout; it does not change the
    ramp, so it is accepted here only for validation.
    """
    if kappa is not None and kappa <= 0.0:
        raise PmlError(f"local layer width must be positive, got kappa={kappa}")
    profile = cf.ax1.profile
    ax1 = AxisScaling(sub_box.x_lo, sub_box.x_hi, profile)
    ax2 = AxisScaling(sub_box.y_lo, sub_box.y_hi, profile)
    return CoefficientField(ax1=ax1, ax2=ax2, k=cf.k, c=cf.c)
