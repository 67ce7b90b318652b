"""Dispersal kernels, exponential moments and heat semigroups on a grid.

All discrete kernels are renormalised to unit mass so that constants are
exact fixed points of convolution, and all weights are nonnegative so that
convolution preserves order.  The Dirac kernel is kept symbolic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError, RangeError
from .gridfn import Grid, GridFunction

_EXP_LIMIT = 700.0
_HEAT_FLOOR = 1e-16


@dataclass(frozen=True, eq=False)
class Kernel:
    """A symmetric probability density on the line.

    ``kind`` is ``"dirac"``, ``"gaussian"`` (density
    ``exp(-x^2/(4 alpha)) / sqrt(4 pi alpha)``, variance ``2 alpha``) or
    ``"tabulated"`` (samples on a symmetric uniform grid, zero outside).
    """

    kind: str
    alpha: float = 0.0
    cutoff: float = 0.0
    table_x: np.ndarray | None = None
    table_k: np.ndarray | None = None
    _weights: dict = field(default_factory=dict, repr=False)

    @classmethod
    def dirac(cls) -> Kernel:
        return cls("dirac")

    @classmethod
    def gaussian(cls, alpha: float, cutoff: float | None = None) -> Kernel:
        if not alpha > 0:
            raise DomainError("gaussian kernel needs alpha > 0")
        cut = 8.0 * math.sqrt(2.0 * alpha) if cutoff is None else float(cutoff)
        return cls("gaussian", float(alpha), cut)

    @classmethod
    def tabulated(cls, x, k) -> Kernel:
        x = np.asarray(x, dtype=float)
        k = np.asarray(k, dtype=float)
        if x.ndim != 1 or x.shape != k.shape or x.size < 3:
            raise DomainError("tabulated kernel needs matching 1-D sample arrays")
        h = np.diff(x)
        if np.any(h <= 0) or not np.allclose(h, h[0]) or not np.allclose(x, -x[::-1]):
            raise DomainError("tabulated kernel needs a symmetric uniform grid")
        if np.any(k < 0) or not np.all(np.isfinite(k)):
            raise DomainError("kernel samples must be finite and nonnegative")
        k = 0.5 * (k + k[::-1])
        mass = np.trapezoid(k, x)
        if mass <= 0:
            raise DomainError("kernel has zero mass")
        x = x.copy()
        k = k / mass
        x.flags.writeable = False
        k.flags.writeable = False
        return cls("tabulated", 0.0, float(x[-1]), x, k)

    @property
    def is_dirac(self) -> bool:
        return self.kind == "dirac"

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-x * x / (4.0 * self.alpha)) / math.sqrt(4.0 * math.pi * self.alpha)
        if self.kind == "tabulated":
            return np.interp(np.abs(x), self.table_x, self.table_k, right=0.0)
        raise DomainError("the Dirac kernel has no density")

    def variance(self) -> float:
        if self.kind == "dirac":
            return 0.0
        if self.kind == "gaussian":
            return 2.0 * self.alpha
        return float(np.trapezoid(self.table_x**2 * self.table_k, self.table_x))

    def weights(self, dx: float) -> np.ndarray:
        """Symmetric trapezoid weights on ``[-cutoff, cutoff]`` summing to exactly 1."""
        if self.is_dirac:
            return np.ones(1)
        key = float(dx)
        w = self._weights.get(key)
        if w is None:
            m = int(math.floor(self.cutoff / dx + 1e-9))
            y = dx * np.arange(-m, m + 1)
            w = self.density(y) * dx
            w[0] *= 0.5
            w[-1] *= 0.5
            w = 0.5 * (w + w[::-1])
            w /= w.sum()
            w.flags.writeable = False
            self._weights[key] = w
        return w


def convolve_values(weights: np.ndarray, values: np.ndarray, left: float, right: float) -> np.ndarray:
    """Discrete convolution of raw samples padded with constant extension values."""
    m = (weights.size - 1) // 2
    if m == 0:
        return values * weights[0]
    padded = np.concatenate([np.full(m, left), values, np.full(m, right)])
    return np.convolve(padded, weights, mode="valid")


def convolve(k: Kernel, u: GridFunction) -> GridFunction:
    """``(k * u)(x) = int u(y) k(x - y) dy`` on the grid of ``u``."""
    if k.is_dirac:
        return u
    g = u.grid
    if k.cutoff > 0.5 * (g.x_max - g.x_min):
        raise DomainError(f"kernel cutoff {k.cutoff} exceeds the grid half-width")
    return u.with_values(convolve_values(k.weights(g.dx), u.values, u.left_value, u.right_value))


def khat(k: Kernel, rho: float) -> float:
    """Exponential moment ``int exp(rho y) k(y) dy``."""
    rho = float(rho)
    if k.is_dirac or rho == 0.0:
        return 1.0
    if k.kind == "gaussian":
        e = k.alpha * rho * rho
        if e > _EXP_LIMIT:
            raise RangeError(f"exponential moment overflows at rho={rho}")
        return math.exp(e)
    if abs(rho) * k.cutoff > _EXP_LIMIT:
        raise RangeError(f"exponential moment overflows at rho={rho}")
    if math.exp(abs(rho) * k.cutoff) * float(k.table_k[-1]) >= 1e-14:
        raise PreconditionError("tabulated kernel does not decay fast enough for this rho")
    return float(np.trapezoid(np.exp(rho * k.table_x) * k.table_k, k.table_x))


def khat_quadrature(k: Kernel, rho: float, n: int = 200001) -> float:
    """Trapezoid evaluation of the exponential moment, independent of closed forms."""
    if k.is_dirac:
        return 1.0
    if k.kind == "tabulated":
        return khat(k, rho)
    centre = 2.0 * k.alpha * rho
    half = k.cutoff + abs(centre)
    y = np.linspace(-half, half, n)
    return float(np.trapezoid(np.exp(rho * y) * k.density(y), y))


def max_finite_rho(k: Kernel) -> float:
    """Largest ``rho`` at which :func:`khat` stays below the overflow guard."""
    if k.is_dirac:
        return math.inf
    if k.kind == "gaussian":
        return math.sqrt(_EXP_LIMIT / k.alpha)
    return _EXP_LIMIT / k.cutoff


# ---------------------------------------------------------------------------
# heat semigroups


HEAT_MODES = ("whole_line", "dirichlet_half_line", "shifted")


def heat_weights(d: float, t: float, dx: float) -> np.ndarray:
    radius = math.sqrt(4.0 * d * t * math.log(1.0 / _HEAT_FLOOR))
    m = max(1, int(math.ceil(radius / dx)))
    y = dx * np.arange(-m, m + 1)
    w = np.exp(-y * y / (4.0 * d * t))
    w = 0.5 * (w + w[::-1])
    return w / w.sum()


def heat_apply(mode: str, mu: float, d: float, t: float, phi: GridFunction, z: float = 0.0) -> GridFunction:
    """Apply ``S_mu(t)``, ``S_{mu,z}(t)`` or ``S_{mu,inf}(t)`` to ``phi``.

    ``whole_line`` convolves with the heat kernel ``exp(-x^2/4dt)/sqrt(4 pi d t)``
    and damps by ``exp(-mu t)``.  ``dirichlet_half_line`` (``z = 0``) and
    ``shifted`` use the image construction: the data are continued oddly about
    ``-z`` and the result is set to zero for ``x <= -z``.
    """
    if mode not in HEAT_MODES:
        raise DomainError(f"unknown heat mode {mode!r}")
    if t < 0 or mu < 0 or d <= 0:
        raise DomainError("heat_apply needs t >= 0, mu >= 0, d > 0")
    if t == 0:
        return phi
    if mode == "dirichlet_half_line":
        z = 0.0
    g: Grid = phi.grid
    w = heat_weights(d, t, g.dx)
    m = (w.size - 1) // 2
    decay = math.exp(-mu * t)
    if mode == "whole_line":
        return phi.with_values(decay * convolve_values(w, phi.values, phi.left_value, phi.right_value))
    # direct sums over grid points y_j > -z: sum_j [G(x_i - y_j) - G(x_i + y_j + 2z)] phi(y_j);
    # every coefficient is nonnegative and shrinks as z grows, so the result is monotone in z
    wall = -float(z)
    j = np.arange(-m, g.n + m)
    ye = g.x_min + g.dx * j
    phe = np.where(ye > wall + 1e-9 * g.dx, phi.sample_at_index(j), 0.0)
    direct = np.convolve(phe, w, mode="valid")
    # image term: the argument x_i + y_j + 2z depends on i + j only
    norm = float(np.sum(np.exp(-((g.dx * np.arange(-m, m + 1)) ** 2) / (4.0 * d * t))))
    radius = m * g.dx
    k = np.arange(-m, 2 * g.n + m - 1)
    arg = 2.0 * g.x_min + g.dx * k - 2.0 * wall
    image_w = np.where(np.abs(arg) <= radius + 1e-9 * g.dx, np.exp(-arg * arg / (4.0 * d * t)) / norm, 0.0)
    # image[i] = sum_e image_w[i + e] phe[e] with e running over the extended index
    image = np.convolve(image_w, phe[::-1], mode="full")[phe.size - 1 : phe.size - 1 + g.n]
    out = decay * np.maximum(direct - image, 0.0)
    out[g.x <= wall + 1e-9 * g.dx] = 0.0
    return phi.with_values(out)
