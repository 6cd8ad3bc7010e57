"""Special functions and quadrature shared by the analytical paths.

Everything here is deterministic and stateless: log-gamma, modified Bessel K,
the Whittaker W function (through the confluent hypergeometric U, evaluated by
its real integral representation), Gauss-Laguerre rules, adaptive
semi-infinite integration, and the characteristic-function inversion used to
turn interference transforms into CDFs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

__all__ = [
    "QuadratureRule",
    "IntegrationError",
    "ln_gamma",
    "bessel_k",
    "whittaker_w",
    "gauss_laguerre",
    "integrate_semi_infinite",
    "cf_to_cdf",
    "cf_to_cdf_grid",
]


class IntegrationError(RuntimeError):
    """Raised when an adaptive quadrature cannot reach the requested accuracy."""


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of a Gauss-Laguerre rule for the weight e^-x."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if abs(self.weights.sum() - 1.0) > 1e-10:
            raise ValueError("Laguerre weights must sum to 1")


def ln_gamma(x: float) -> float:
    """Natural log of the Gamma function for x > 0."""
    if x <= 0:
        raise ValueError("ln_gamma requires x > 0")
    return float(special.gammaln(x))


def bessel_k(v: float, x: float):
    """Modified Bessel function of the second kind K_v(x), x > 0.

    Symmetric in the order, K_{-v} = K_v.  Overflow near x -> 0 with large
    |v| is reported instead of returning inf.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("bessel_k requires x > 0")
    out = special.kv(v, x)
    if np.any(~np.isfinite(out)):
        raise OverflowError(f"K_{v}(x) overflows for x={x}")
    return out if out.ndim else float(out)


def _hyperu_integral(a: float, b: float, z: float, rel_tol: float = 1e-10) -> float:
    """Confluent hypergeometric U(a, b, z) for a > 0, z > 0 from

        U(a,b,z) = 1/Gamma(a) * int_0^inf e^{-z t} t^{a-1} (1+t)^{b-a-1} dt.

    The integrand's t^{a-1} endpoint singularity (a < 1) is integrable and
    handled by the adaptive rule.
    """
    bma = b - a - 1.0

    def integrand(t):
        if t <= 0.0:
            return 0.0
        return np.exp(-z * t + (a - 1.0) * np.log(t) + bma * np.log1p(t))

    # split at the exponential scale to help the subdivision
    knee = max(1.0 / z, 1.0)
    head, tail = 0.0, 0.0
    head, head_err = integrate.quad(integrand, 0.0, knee, epsrel=rel_tol, epsabs=0.0, limit=200)
    tail, tail_err = integrate.quad(integrand, knee, np.inf, epsrel=rel_tol, epsabs=0.0, limit=200)
    total = head + tail
    if not np.isfinite(total):
        raise IntegrationError(f"U({a},{b},{z}) integral representation diverged")
    err = head_err + tail_err
    if err > 1e-6 * abs(total) + 1e-300:
        raise IntegrationError(
            f"U({a},{b},{z}) integral did not converge (err {err:.2e} vs {total:.2e})"
        )
    return total * np.exp(-special.gammaln(a))


def whittaker_w(kappa_w: float, mu_w: float, z: float) -> float:
    """Whittaker function W_{kappa, mu}(z) for z > 0.

    Uses W_{k,m}(z) = e^{-z/2} z^{m + 1/2} U(m - k + 1/2, 1 + 2m, z) with the
    confluent U evaluated by its integral representation, which requires
    a = m - k + 1/2 > 0.  The order symmetry W_{k,m} = W_{k,-m} is applied
    first when it makes ``a`` positive.
    """
    if z <= 0:
        raise ValueError("whittaker_w requires z > 0")
    a = mu_w - kappa_w + 0.5
    if a <= 0 and -mu_w - kappa_w + 0.5 > 0:
        mu_w = -mu_w
        a = mu_w - kappa_w + 0.5
    if a <= 0:
        raise ValueError(
            "integral representation requires mu - kappa + 1/2 > 0 "
            f"(got a={a}); outside the supported parameter range"
        )
    b = 1.0 + 2.0 * mu_w
    u = _hyperu_integral(a, b, z)
    # log-space assembly; W and U are positive here
    log_w = -0.5 * z + (mu_w + 0.5) * np.log(z) + np.log(u)
    return float(np.exp(log_w))


def gauss_laguerre(order: int) -> QuadratureRule:
    """Gauss-Laguerre nodes and weights for the weight function e^-x."""
    if not 1 <= order <= 64:
        raise ValueError("Laguerre order must lie in [1, 64]")
    nodes, weights = special.roots_laguerre(order)
    return QuadratureRule(order=order, nodes=nodes, weights=weights)


def integrate_semi_infinite(f, rel_tol: float = 1e-9) -> float:
    """Adaptive integral of ``f`` over (0, inf).

    The domain is mapped onto (0, 1) by x = t / (1 - t) and integrated with
    an adaptive Gauss-Kronrod subdivision.  The reported error must satisfy
    err <= rel_tol * |result|, otherwise an IntegrationError is raised.
    """
    if not 1e-12 <= rel_tol <= 1e-3:
        raise ValueError("rel_tol must lie in [1e-12, 1e-3]")

    def transformed(t):
        w = 1.0 - t
        x = t / w
        return f(x) / (w * w)

    with np.errstate(over="ignore", invalid="ignore"):
        value, err = integrate.quad(
            transformed, 0.0, 1.0, epsrel=rel_tol, epsabs=0.0, limit=500
        )
    if not np.isfinite(value):
        raise IntegrationError("semi-infinite integral diverged")
    if err > rel_tol * abs(value) + 1e-300:
        raise IntegrationError(
            f"semi-infinite integral did not converge: err {err:.3e} vs {value:.3e}"
        )
    return value


def _complex_quad(f, a: float, b: float, epsabs: float) -> complex:
    re, _ = integrate.quad(lambda w: f(w).real, a, b, epsabs=epsabs, epsrel=1e-9, limit=200)
    im, _ = integrate.quad(lambda w: f(w).imag, a, b, epsabs=epsabs, epsrel=1e-9, limit=200)
    return re + 1j * im


def cf_to_cdf(cf, x: float, trunc: float | None = None, rel_tol: float = 1e-6) -> float:
    """CDF value at ``x`` from a characteristic function, by inversion:

        F(x) = 1/2 - (1/pi) * int_0^T Im(e^{-i w x} cf(w)) / w dw.

    When ``trunc`` is omitted the truncation grows by octave doubling until
    the last octave contributes less than ``rel_tol`` (on the probability
    scale); a bounded octave budget guards divergence.
    """
    if not callable(cf):
        raise TypeError("cf must be callable")

    def integrand(w):
        return (np.exp(-1j * w * x) * cf(w)) / w

    # characteristic frequency scale: oscillation period of e^{-iwx}
    w0 = 1.0 / max(abs(x), 1e-300) if x != 0 else 1.0
    if trunc is not None:
        total = _complex_quad(integrand, 1e-12 * w0, trunc, epsabs=rel_tol / 10)
        tail_start = trunc / 2
        last = _complex_quad(integrand, tail_start, trunc, epsabs=rel_tol / 10)
        if abs(last.imag) / np.pi > rel_tol:
            raise IntegrationError(
                "tail beyond the requested truncation still contributes "
                f"{abs(last.imag) / np.pi:.2e} > rel_tol"
            )
    else:
        w_hi = w0 / 64.0
        total = _complex_quad(integrand, 1e-12 * w_hi, w_hi, epsabs=rel_tol / 10)
        quiet = 0
        for _ in range(160):
            piece = _complex_quad(integrand, w_hi, 2 * w_hi, epsabs=rel_tol / 10)
            total += piece
            w_hi *= 2.0
            # octaves below the oscillation scale of e^{-iwx} look quiet
            # before the integrand's mass is reached; do not settle there
            if abs(piece.imag) / np.pi < rel_tol and w_hi * abs(x) > 4.0:
                quiet += 1
                if quiet >= 2:
                    break
            else:
                quiet = 0
        else:
            raise IntegrationError("cf inversion did not settle within the octave budget")
    value = 0.5 - total.imag / np.pi
    return float(min(1.0, max(0.0, value)))


def cf_to_cdf_grid(cf, xs, rel_tol: float = 1e-6, max_octaves: int = 220) -> np.ndarray:
    """Vectorized characteristic-function inversion on a batch of points.

    Shares the frequency panels of the Gil-Pelaez integral across all
    requested ``xs``: each octave is integrated with enough Gauss-Legendre
    panels to resolve the fastest active oscillation, and points whose last
    two octaves contributed less than ``rel_tol`` drop out, which keeps the
    panel count bounded while the remaining slow points climb to higher
    frequencies.  ``cf`` must accept a vector of frequencies.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(xs <= 0):
        raise ValueError("grid inversion expects positive support points")
    n = xs.size
    total = np.zeros(n)
    quiet = np.zeros(n, dtype=int)
    active = np.ones(n, dtype=bool)
    gx, gw = np.polynomial.legendre.leggauss(8)

    def panel_sum(lo: float, hi: float, x_act: np.ndarray):
        span = hi * x_act.max()
        n_panels = int(min(max(8, np.ceil(0.7 * span)), 60000))
        bounds = np.linspace(lo, hi, n_panels + 1)
        half = 0.5 * np.diff(bounds)
        mid = 0.5 * (bounds[1:] + bounds[:-1])
        w_nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
        w_wts = (half[:, None] * gw[None, :]).ravel()
        vals = np.asarray(cf(w_nodes)) / w_nodes * w_wts
        out = np.empty(x_act.size)
        chunk = max(1, int(4_000_000 // max(w_nodes.size, 1)))
        for i in range(0, x_act.size, chunk):
            sl = slice(i, min(i + chunk, x_act.size))
            out[sl] = (np.exp(-1j * np.outer(x_act[sl], w_nodes)) @ vals).imag
        return out

    w_hi = 1.0 / (64.0 * xs.max())
    total += panel_sum(w_hi * 1e-9, w_hi, xs)
    for _ in range(max_octaves):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        piece = panel_sum(w_hi, 2.0 * w_hi, xs[idx])
        total[idx] += piece
        # a point may only settle once the octave lies beyond its own
        # oscillation scale, otherwise the small head octaves look quiet
        eligible = w_hi * xs[idx] > 4.0
        settled = (np.abs(piece) / np.pi < rel_tol) & eligible
        quiet[idx] = np.where(settled, quiet[idx] + 1, 0)
        active[idx[quiet[idx] >= 2]] = False
        w_hi *= 2.0
    else:
        raise IntegrationError("grid cf inversion did not settle within the octave budget")
    return np.clip(0.5 - total / np.pi, 0.0, 1.0)
