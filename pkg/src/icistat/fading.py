"""Composite fading channel models.

Three positive-gain laws cover the fading cases of interest: ``Exponential``
(Rayleigh envelope power, no shadowing), ``Gamma`` (shape ``m_s``, scale
``m_c``, the moment-matched stand-in for composite fading), and
``GeneralizedK`` (the Gamma-Gamma product of a fading and a shadowing Gamma
variable).  Every model exposes the density, distribution function, Laplace
transform E[e^{-sX}] and seeded sampling; the transform is the canonical
object consumed by the interference machinery, with the moment generating
function recovered as M(t) = laplace(-t).
"""

from __future__ import annotations

import numpy as np
from scipy import special

from .numerics import whittaker_w

__all__ = ["ChannelModel", "Exponential", "Gamma", "GeneralizedK", "gamma_from_gk"]


class ChannelModel:
    """Common interface of the composite-gain laws."""

    mean: float

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def laplace(self, s):
        """E[e^{-sX}] for complex s with Re(s) inside the convergence strip."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    @staticmethod
    def _positive(x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("gain argument must be positive")
        return x


class Exponential(ChannelModel):
    """Exponential gain with rate ``lam`` (Rayleigh fading power)."""

    def __init__(self, rate: float = 1.0):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def pdf(self, x):
        x = self._positive(x)
        out = self.rate * np.exp(-self.rate * x)
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        out = -np.expm1(-self.rate * x)
        return out if out.ndim else float(out)

    def laplace(self, s):
        s = np.asarray(s)
        if np.any(np.real(s) <= -self.rate):
            raise ValueError("laplace argument outside the convergence strip")
        out = self.rate / (self.rate + s)
        return out if out.ndim else out[()]

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def __repr__(self):
        return f"Exponential(rate={self.rate})"


class Gamma(ChannelModel):
    """Gamma gain with shape ``m_s`` and scale ``m_c`` (mean m_s * m_c)."""

    def __init__(self, shape: float, scale: float):
        if shape <= 0 or scale <= 0:
            raise ValueError("shape and scale must be positive")
        self.shape = shape
        self.scale = scale

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    def pdf(self, x):
        x = self._positive(x)
        log_pdf = (
            (self.shape - 1.0) * np.log(x)
            - x / self.scale
            - special.gammaln(self.shape)
            - self.shape * np.log(self.scale)
        )
        out = np.exp(log_pdf)
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        out = special.gammainc(self.shape, x / self.scale)
        return out if out.ndim else float(out)

    def laplace(self, s):
        s = np.asarray(s)
        if np.any(np.real(s) <= -1.0 / self.scale):
            raise ValueError("laplace argument outside the convergence strip")
        out = np.exp(-self.shape * np.log(1.0 + self.scale * s))
        return out if out.ndim else out[()]

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, self.scale, size)

    def __repr__(self):
        return f"Gamma(shape={self.shape}, scale={self.scale})"


class GeneralizedK(ChannelModel):
    """Generalized-K gain: the product of two independent Gamma variables.

    ``m_c`` is the fading shape, ``m_s`` the shadowing shape and ``omega``
    the average power; the derived constant is b = 2 sqrt(m_c m_s / omega).
    The density is

        f(x) = 2 (b/2)^{m_c+m_s} / (Gamma(m_c) Gamma(m_s))
               * x^{(m_c+m_s)/2 - 1} * K_{m_s-m_c}(b sqrt(x)),

    and the Laplace transform in closed form is

        L(s) = e^{z/2} z^{(m_c+m_s-1)/2} W_{(1-m_c-m_s)/2, (m_s-m_c)/2}(z),
        z = b^2 / (4 s),

    equivalently z^{m_s} U(m_s, m_s - m_c + 1, z).  For arguments off the
    positive real axis the transform falls back to a cached generalized
    Gauss-Laguerre rule built on the product representation
    E[(1 + s a G)^{-m_c}] with G ~ Gamma(m_s, 1), a = omega / (m_c m_s).
    """

    _QUAD_ORDER = 96

    def __init__(self, m_c: float, m_s: float, omega: float):
        if m_c <= 0 or m_s <= 0 or omega <= 0:
            raise ValueError("m_c, m_s and omega must be positive")
        self.m_c = m_c
        self.m_s = m_s
        self.omega = omega
        # mixture nodes for E_G[...] with G ~ Gamma(m_s, 1): generalized
        # Laguerre with weight t^{m_s-1} e^{-t}
        t, w = special.roots_genlaguerre(self._QUAD_ORDER, m_s - 1.0)
        self._nodes = t
        self._weights = w / special.gamma(m_s)

    @property
    def b(self) -> float:
        return 2.0 * np.sqrt(self.m_c * self.m_s / self.omega)

    @property
    def mean(self) -> float:
        return self.omega

    @property
    def _unit_scale(self) -> float:
        # scale a of the fading Gamma so that E[a G1 * G2] = omega
        return self.omega / (self.m_c * self.m_s)

    def pdf(self, x):
        x = self._positive(x)
        b = self.b
        order = self.m_s - self.m_c
        with np.errstate(over="ignore"):
            k_val = special.kv(order, b * np.sqrt(x))
        log_pref = (
            np.log(2.0)
            + (self.m_c + self.m_s) * np.log(b / 2.0)
            - special.gammaln(self.m_c)
            - special.gammaln(self.m_s)
            + ((self.m_c + self.m_s) / 2.0 - 1.0) * np.log(x)
        )
        out = np.where(k_val > 0, np.exp(log_pref) * k_val, 0.0)
        return out if out.ndim else float(out)

    def cdf(self, x):
        """P(X <= x) by mixing the conditional Gamma CDF over the shadowing
        variable on the cached rule: E_G[gammainc(m_c, x / (a G))]."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        pos = x > 0
        if np.any(pos):
            z = x[pos][:, None] / (self._unit_scale * self._nodes[None, :])
            out[pos] = np.sum(self._weights[None, :] * special.gammainc(self.m_c, z), axis=1)
        out = np.clip(out, 0.0, 1.0)
        return out if x.shape else float(out[0])

    def laplace(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
        if np.any(np.real(s_arr) < 0):
            raise ValueError("GeneralizedK laplace requires Re(s) >= 0")
        out = np.empty(s_arr.shape, dtype=complex)
        for i, si in np.ndenumerate(s_arr):
            if si == 0:
                out[i] = 1.0
            elif si.imag == 0:
                out[i] = self._laplace_whittaker(si.real)
            else:
                out[i] = self._laplace_mixture(si)
        if np.isrealobj(s) and np.all(out.imag == 0):
            out = out.real
        return out if np.asarray(s).ndim else out.ravel()[0]

    def _laplace_whittaker(self, s: float) -> float:
        z = self.b**2 / (4.0 * s)
        kap = (1.0 - self.m_c - self.m_s) / 2.0
        mu = (self.m_s - self.m_c) / 2.0
        if z > 700.0:
            # e^{z/2} W(z) overflows pairwise; use the asymptote W ~ e^{-z/2} z^kappa,
            # giving L(s) -> z^{(m_c+m_s-1)/2 + kappa} = 1 + O(1/z)
            return float(self._laplace_mixture(complex(s)).real)
        w_val = whittaker_w(kap, mu, z)
        return float(np.exp(z / 2.0 + (self.m_c + self.m_s - 1.0) / 2.0 * np.log(z)) * w_val)

    def _laplace_mixture(self, s: complex) -> complex:
        arg = 1.0 + s * self._unit_scale * self._nodes
        vals = np.exp(-self.m_c * np.log(arg.astype(complex)))
        return complex(np.sum(self._weights * vals))

    def sample(self, rng, size=None):
        return self._unit_scale * rng.gamma(self.m_c, 1.0, size) * rng.gamma(
            self.m_s, 1.0, size
        )

    def __repr__(self):
        return f"GeneralizedK(m_c={self.m_c}, m_s={self.m_s}, omega={self.omega})"


def gamma_from_gk(gk: GeneralizedK) -> Gamma:
    """Moment-matched Gamma approximation of a Generalized-K law.

    Matches mean and variance exactly: the product of independent Gammas has
    variance omega^2 [(1 + 1/m_c)(1 + 1/m_s) - 1], so the matched shape is
    k* = 1 / [(1 + 1/m_c)(1 + 1/m_s) - 1] and the scale omega / k*.
    """
    if not isinstance(gk, GeneralizedK):
        raise TypeError("gamma_from_gk expects a GeneralizedK model")
    excess = (1.0 + 1.0 / gk.m_c) * (1.0 + 1.0 / gk.m_s) - 1.0
    shape = 1.0 / excess
    return Gamma(shape=shape, scale=gk.omega / shape)
