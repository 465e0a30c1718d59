"""Truncated Borel extensions of jet sequences and the simple extension map.

``phi_app(u, v) = sum_n sigma(mu_n u / delta) u^n / n! psi_n(v)`` reproduces the
jets ``psi_0 .. psi_N`` exactly on ``u = 0`` because ``sigma = 1`` near 0.
"""
from dataclasses import dataclass
from math import factorial

import numpy as np

from . import kernels
from .operators import GridField

PROFILES = ("exp", "tanh")
TANH_SLOPE = 1.5


class BorelError(ValueError):
    pass


def _smoothstep(x, profile):
    """C-infinity step rising from 0 at x <= 0 to 1 at x >= 1, and its derivative."""
    x = np.asarray(x, dtype=float)
    val = np.where(x >= 1.0, 1.0, 0.0)
    der = np.zeros_like(x)
    mid = (x > 0.0) & (x < 1.0)
    xm = x[mid]
    if profile == "exp":
        a = np.exp(-1.0 / xm)
        b = np.exp(-1.0 / (1.0 - xm))
        val[mid] = a / (a + b)
        da = a / xm**2
        db = b / (1.0 - xm) ** 2  # derivative of e(1 - x) is -db
        der[mid] = (da * b + a * db) / (a + b) ** 2
    elif profile == "tanh":
        # slope 1 would reproduce the exp profile exactly
        z = TANH_SLOPE * (xm - 0.5) / (xm * (1.0 - xm))
        th = np.tanh(z)
        val[mid] = 0.5 * (1.0 + th)
        dz = TANH_SLOPE * (xm * xm - xm + 0.5) / (xm * (1.0 - xm)) ** 2
        with np.errstate(over="ignore", invalid="ignore"):
            der[mid] = np.where(np.abs(z) < 350.0, 0.5 * dz * (1.0 - th) * (1.0 + th), 0.0)
    else:
        raise BorelError(f"unknown bump profile {profile!r}; choose from {PROFILES}")
    return val, der


@dataclass(frozen=True)
class BumpFunction:
    """Even cutoff: 1 on ``|t| <= 1/4``, 0 on ``|t| >= 1/2``, smooth and monotone between."""
    profile: str = "exp"
    plateau_radius: float = 0.25
    support_radius: float = 0.5

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise BorelError(f"unknown bump profile {self.profile!r}; choose from {PROFILES}")

    def _x(self, t):
        width = self.support_radius - self.plateau_radius
        return (self.support_radius - np.abs(np.asarray(t, dtype=float))) / width, width

    def __call__(self, t):
        x, _ = self._x(t)
        return _smoothstep(x, self.profile)[0]

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        x, width = self._x(t)
        return -np.sign(t) * _smoothstep(x, self.profile)[1] / width

    def cnorm(self, order, samples=4001):
        """Numerical ``C^order`` norm from a dense Chebyshev fit of the transition."""
        t = self.plateau_radius + (self.support_radius - self.plateau_radius) * (
            0.5 * (1 - np.cos(np.linspace(0, np.pi, samples))))
        cheb = np.polynomial.Chebyshev.fit(t, self(t), deg=min(60, samples - 1))
        best = 1.0
        for k in range(1, order + 1):
            best = max(best, float(np.max(np.abs(cheb.deriv(k)(t)))))
        return best


@dataclass(frozen=True)
class ExtensionConfig:
    delta: float
    mu_rule: str = "unit"
    n_jet: int = 6
    profile: str = "exp"

    def __post_init__(self):
        if not self.delta > 0:
            raise BorelError("delta must be positive")
        if self.mu_rule not in ("unit", "jet_norm"):
            raise BorelError(f"unknown mu_rule {self.mu_rule!r}")


def default_delta(u_halfwidth):
    return 0.9 * min(1.0, u_halfwidth)


def mu_factors(jets, cfg, h):
    """Scale factors ``mu_n``. ``unit`` gives all ones.

    ``jet_norm`` uses ``mu_n = max(1, 2^n sum_{l<=n} 2^l ||sigma||_{C^l} ||psi_n||_{C^l} / alpha_n)``
    with ``alpha_n = 2^-n``; derivatives of ``psi_n`` along v by differences.
    """
    n = jets.psi.shape[0]
    if cfg.mu_rule == "unit":
        return np.ones(n)
    bump = BumpFunction(cfg.profile)
    mu = np.ones(n)
    for k in range(n):
        row = jets.psi[k]
        norms = [float(np.max(np.abs(row)))]
        d = row
        for _ in range(k):
            d = np.gradient(d, h)
            norms.append(float(np.max(np.abs(d))))
        total = sum(2.0**l * bump.cnorm(l) * norms[l] for l in range(k + 1))
        mu[k] = max(1.0, 2.0**k * total / 2.0**-k)
    return mu


def _check_delta(delta, grid):
    if 0.5 * delta > grid.u_halfwidth + 1e-12:
        raise BorelError(f"delta/2 = {0.5 * delta:g} exceeds the grid half-width {grid.u_halfwidth:g}")


def borel_terms(jets, cfg, u, h=None):
    """``a_n(u) = sigma(mu_n u / delta) u^n / n!`` and ``a_n'(u)`` for each jet order."""
    bump = BumpFunction(cfg.profile)
    mu = mu_factors(jets, cfg, h if h is not None else 1.0)
    u = np.asarray(u, dtype=float)
    n = jets.psi.shape[0]
    a = np.empty((n, u.size))
    da = np.empty((n, u.size))
    for k in range(n):
        s = mu[k] * u / cfg.delta
        sig, dsig = bump(s), bump.derivative(s) * mu[k] / cfg.delta
        mono = u**k / factorial(k)
        dmono = u ** (k - 1) / factorial(k - 1) if k else np.zeros_like(u)
        a[k] = sig * mono
        da[k] = dsig * mono + sig * dmono
    return a, da


def borel_extend(jets, cfg, grid):
    """Truncated Borel sum of the jets on the grid."""
    _check_delta(cfg.delta, grid)
    n = min(cfg.n_jet, jets.order) + 1
    a, _ = borel_terms(_truncate(jets, n), cfg, grid.u, grid.h)
    return GridField(grid, a.T @ jets.psi[:n])


def _truncate(jets, n):
    if jets.psi.shape[0] == n:
        return jets
    from .propagation import JetSequence
    return JetSequence(jets.psi[:n], jets.dpsi[:n], jets.type_tag,
                       jets.cross_section_v, jets.cross_index, jets.v)


def _midpoint_rows(rows):
    return np.array([kernels.cubic_midpoints(r) for r in rows])


def borel_extend_with_derivatives(jets, cfg, grid, centers=False):
    """``(phi, phi_u, phi_v, phi_uv)`` of the truncated Borel sum.

    The u-dependence is exact; with ``centers=True`` the values are at the
    cell centres, with jets interpolated to ``v + h/2`` by cubics.
    """
    _check_delta(cfg.delta, grid)
    n = min(cfg.n_jet, jets.order) + 1
    jets = _truncate(jets, n)
    u = grid.u[:-1] + 0.5 * grid.h if centers else grid.u
    a, da = borel_terms(jets, cfg, u, grid.h)
    psi, dpsi = jets.psi, jets.dpsi
    if centers:
        psi, dpsi = _midpoint_rows(psi), _midpoint_rows(dpsi)
    return (a.T @ psi, da.T @ psi, a.T @ dpsi, da.T @ dpsi)


def simple_extension(datum, delta_e, grid, profile="exp"):
    """``e(f)(u, v) = sigma(u / delta_e) f(v)``."""
    _check_delta(delta_e, grid)
    sig = BumpFunction(profile)(grid.u / delta_e)
    return GridField(grid, np.outer(sig, datum.f))


def simple_extension_with_derivatives(datum, delta_e, grid, profile="exp", centers=False):
    _check_delta(delta_e, grid)
    bump = BumpFunction(profile)
    u = grid.u[:-1] + 0.5 * grid.h if centers else grid.u
    sig = bump(u / delta_e)
    dsig = bump.derivative(u / delta_e) / delta_e
    f, df = datum.f, datum.derivative(grid.h)
    if centers:
        f, df = kernels.cubic_midpoints(f), kernels.cubic_midpoints(df)
    return (np.outer(sig, f), np.outer(dsig, f),
            np.outer(sig, df), np.outer(dsig, df))

