"""Weight-function machinery: Taylor coefficients, partial sums, and time scales.

The processes handled here are driven by an analytic weight function of the
form ``(1-x)^{-gamma} * Theta(x) / Phi(x)`` with polynomial ``Theta`` and
``Phi``.  This module expands that function into its coefficient stream,
maintains compensated partial sums, evaluates the limiting kernel
``k_gamma``, and inverts the partial-sum scale that converts a threshold
into a time horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DivergentNorm,
    DriftViolation,
    GfRuinError,
    NegativeCoefficient,
    ZeroG0,
)

# Relative negativity tolerance absorbing round-off from the Phi division.
NEG_TOL_REL = 1e-12

# Hard cap on how many coefficients a scale inversion may generate.
MAX_STREAM_LEN = 1 << 24


def k_gamma(gamma, u):
    """Evaluate the limit kernel ``gamma * (1-u)^(gamma-1)`` on ``[0, 1)``, 0 beyond.

    Parameters
    ----------
    gamma : float
        Positive shape exponent.
    u : float or ndarray
        Nonnegative argument(s).

    Returns
    -------
    float or ndarray
        Kernel value; the branch ``u >= 1`` returns 0, including ``u == 1``
        where the ``gamma < 1`` branch would diverge.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if np.isscalar(u):
        if u < 0:
            raise ValueError("u must be nonnegative")
        if u >= 1.0:
            return 0.0
        if gamma == 1.0:
            return 1.0
        return gamma * (1.0 - u) ** (gamma - 1.0)
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("u must be nonnegative")
    out = np.zeros_like(u)
    inside = u < 1.0
    out[inside] = gamma * (1.0 - u[inside]) ** (gamma - 1.0)
    return out


def _poly_eval(coeffs, x):
    # coeffs[k] multiplies x**k
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class GFunction:
    """Analytic weight specification ``(1-x)^{-gamma} * Theta(x) / Phi(x)``.

    Parameters
    ----------
    theta_poly : sequence of float
        Numerator coefficients, constant term first.  Must not vanish at 1.
    phi_poly : sequence of float
        Denominator coefficients, constant term first.  Must not vanish at
        0 or 1.
    gamma : float
        Positive fractional exponent; the singularity strength at ``x = 1``.
    """

    theta_poly: tuple = (1.0,)
    phi_poly: tuple = (1.0,)
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "theta_poly", tuple(float(c) for c in self.theta_poly))
        object.__setattr__(self, "phi_poly", tuple(float(c) for c in self.phi_poly))
        object.__setattr__(self, "gamma", float(self.gamma))
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if not self.theta_poly or not self.phi_poly:
            raise ValueError("theta_poly and phi_poly must be non-empty")
        if _poly_eval(self.theta_poly, 1.0) == 0.0:
            raise ValueError("Theta(1) must not vanish")
        if _poly_eval(self.phi_poly, 1.0) == 0.0:
            raise ValueError("Phi(1) must not vanish")
        if self.phi_poly[0] == 0.0:
            raise ValueError("Phi(0) must not vanish")

    @classmethod
    def from_dict(cls, d):
        allowed = {"gamma", "theta_poly", "phi_poly"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown GFunction keys: {sorted(unknown)}")
        return cls(
            theta_poly=tuple(d.get("theta_poly", (1.0,))),
            phi_poly=tuple(d.get("phi_poly", (1.0,))),
            gamma=d.get("gamma", 1.0),
        )

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "theta_poly": list(self.theta_poly),
            "phi_poly": list(self.phi_poly),
        }

    def value(self, x):
        """Evaluate g(x) analytically for ``|x| < 1`` (not via the series)."""
        return (
            (1.0 - x) ** (-self.gamma)
            * _poly_eval(self.theta_poly, x)
            / _poly_eval(self.phi_poly, x)
        )

    def stream(self, n=256):
        """Return a :class:`CoeffStream` holding at least ``n`` coefficients."""
        return taylor_coeffs(self, n)


def _frac_binomial(gamma, n):
    """First ``n`` Taylor coefficients of ``(1-x)^{-gamma}``.

    Uses the recurrence ``b_0 = 1``, ``b_k = b_{k-1} (k-1+gamma)/k`` as a
    vectorized cumulative product.
    """
    if n <= 0:
        return np.empty(0)
    k = np.arange(1, n, dtype=float)
    out = np.empty(n)
    out[0] = 1.0
    if n > 1:
        np.cumprod((k - 1.0 + gamma) / k, out=out[1:])
    return out


def _raw_coeffs(g: GFunction, n: int) -> np.ndarray:
    """Coefficients of Theta(x)*(1-x)^{-gamma}/Phi(x), no sign validation."""
    b = _frac_binomial(g.gamma, n)
    theta = np.asarray(g.theta_poly)
    num = np.convolve(b, theta)[:n] if len(theta) > 1 else b * theta[0]
    phi = g.phi_poly
    if len(phi) == 1:
        return num / phi[0]
    # power-series long division by Phi
    out = np.empty(n)
    phi0 = phi[0]
    q = len(phi) - 1
    for i in range(n):
        acc = num[i]
        for j in range(1, min(i, q) + 1):
            acc -= phi[j] * out[i - j]
        out[i] = acc / phi0
    return out


def _block_cumsum(x, offset, block=4096):
    """Cumulative sums of ``x`` shifted by ``offset``, block-compensated.

    Block boundaries are accumulated with ``math.fsum`` so that the tail of
    a long stream is not lost to float round-off; within-block error is
    bounded by ``block * eps``.
    """
    n = len(x)
    out = np.empty(n)
    off = offset
    for start in range(0, n, block):
        blk = x[start : start + block]
        out[start : start + len(blk)] = off + np.cumsum(blk)
        off += math.fsum(blk)
    return out, off


class CoeffStream:
    """Cached coefficient stream with compensated partial sums.

    ``coeffs[i]`` is the i-th Taylor coefficient; ``partial_sums[n]`` is the
    sum of the first ``n`` coefficients (``partial_sums[0] == 0``).  Streams
    backed by a :class:`GFunction` extend lazily; construction is
    single-writer and the extension swaps whole arrays, so concurrent
    readers always observe a consistent snapshot.
    """

    def __init__(self, coeffs, source=None):
        coeffs = np.asarray(coeffs, dtype=float)
        self._validate(coeffs)
        self._coeffs = coeffs
        sums, total = _block_cumsum(coeffs, 0.0)
        self._partial = np.concatenate(([0.0], sums))
        self._total = total
        self._source = source

    @staticmethod
    def _validate(coeffs):
        if len(coeffs) == 0:
            raise ValueError("empty coefficient stream")
        if coeffs[0] == 0.0:
            raise ZeroG0("leading coefficient g_0 vanishes")
        tol = NEG_TOL_REL * float(np.max(np.abs(coeffs)))
        worst = float(np.min(coeffs))
        if worst < -tol:
            i = int(np.argmin(coeffs))
            raise NegativeCoefficient(
                f"g_{i} = {worst:.3e} violates the nonnegativity assumption"
            )
        np.clip(coeffs, 0.0, None, out=coeffs)

    @classmethod
    def from_coeffs(cls, coeffs):
        """Fixed-length stream from raw coefficients (test oracles, case C)."""
        return cls(np.array(coeffs, dtype=float))

    @property
    def coeffs(self):
        return self._coeffs

    @property
    def partial_sums(self):
        return self._partial

    @property
    def source(self):
        return self._source

    def __len__(self):
        return len(self._coeffs)

    def ensure(self, n):
        """Grow the cache to hold at least ``n`` coefficients."""
        if n <= len(self._coeffs):
            return self
        if self._source is None:
            raise GfRuinError(
                f"fixed stream of length {len(self._coeffs)} cannot provide {n} terms"
            )
        if n > MAX_STREAM_LEN:
            raise GfRuinError(f"coefficient request {n} exceeds budget {MAX_STREAM_LEN}")
        m = len(self._coeffs)
        grown = max(n, 2 * m)
        coeffs = _raw_coeffs(self._source, grown)
        self._validate(coeffs)
        tail_sums, total = _block_cumsum(coeffs[m:], self._total)
        partial = np.concatenate((self._partial, tail_sums))
        # swap snapshots atomically for concurrent readers
        self._coeffs, self._partial, self._total = coeffs, partial, total
        return self

    def coeff(self, i):
        self.ensure(i + 1)
        return float(self._coeffs[i])

    def partial_sum(self, n):
        """``s_n``: the sum of coefficients with index below ``n``."""
        self.ensure(n)
        return float(self._partial[n])

    def partial_sum_interp(self, x):
        """Linear interpolation of the partial-sum sequence at real ``x >= 0``."""
        if x < 0:
            raise ValueError("x must be nonnegative")
        k = int(math.floor(x))
        self.ensure(k + 1)
        return float(self._partial[k] + (x - k) * self._coeffs[k])


def taylor_coeffs(g: GFunction, n: int) -> CoeffStream:
    """Expand ``g`` into its first ``n`` Taylor coefficients.

    The fractional-binomial recurrence generates ``(1-x)^{-gamma}``, a short
    convolution applies ``Theta`` and power-series long division removes
    ``Phi``.  Raises :class:`NegativeCoefficient` or :class:`ZeroG0` when the
    result violates the nonnegativity assumption.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    return CoeffStream(_raw_coeffs(g, n), source=g)


def scale_u_asymptotic(g: GFunction, mu: float, t: float) -> float:
    """Asymptotic inverse scale ``U(t) = (t' Phi(1)/Theta(1))^{1/gamma}``, ``t' = t/(-mu)``."""
    if t <= 0:
        raise ValueError("t must be positive")
    if mu >= 0:
        raise ValueError("mu must be negative")
    ratio = _poly_eval(g.phi_poly, 1.0) / _poly_eval(g.theta_poly, 1.0)
    return (t / (-mu) * ratio) ** (1.0 / g.gamma)


def scale_v_asymptotic(g: GFunction, mu: float, t: float) -> float:
    """Asymptotic normalization ``V(t) = Gamma(1+gamma)^{1/gamma} U(t)``."""
    return math.gamma(1.0 + g.gamma) ** (1.0 / g.gamma) * scale_u_asymptotic(g, mu, t)


def scale_v(g, mu: float, t: float) -> float:
    """Finite-t time scale: the interpolated solution ``n`` of ``(-mu) s_n = t``.

    Parameters
    ----------
    g : GFunction or CoeffStream
        Weight specification or an existing stream (which will be extended).
    mu : float
        Negative innovation mean.
    t : float
        Positive threshold.

    Returns
    -------
    float
        The unique crossing point of the piecewise-linear partial-sum
        function, located by doubling search plus bisection.

    Raises
    ------
    DriftViolation
        If the partial sums stop growing within the stream budget.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if mu >= 0:
        raise ValueError("mu must be negative")
    stream = g if isinstance(g, CoeffStream) else taylor_coeffs(g, 256)
    target = t / (-mu)

    hi = 256
    while True:
        cap = MAX_STREAM_LEN if stream.source is not None else len(stream)
        hi = min(hi, cap)
        stream.ensure(hi)
        if stream.partial_sums[hi] > target:
            break
        if hi >= cap:
            raise DriftViolation(
                f"partial sums reached {stream.partial_sums[hi]:.3e} < {target:.3e} "
                f"within the {cap}-term budget"
            )
        hi *= 2

    sums = stream.partial_sums
    # first integer n with s_n > target, then interpolate inside [n-1, n]
    n = int(np.searchsorted(sums[: hi + 1], target, side="right"))
    k = n - 1
    gk = stream.coeffs[k]
    if gk <= 0.0:
        # target sits on a flat run; crossing happens at its right end
        return float(k)
    return k + (target - sums[k]) / gk


@dataclass
class AsymptoticsReport:
    """Self-test ratios that must both approach 1 as ``n`` grows."""

    n: int
    ratio_coeff: float  # g_n * n / (gamma * s_n)
    ratio_sum: float  # s_n * Gamma(1+gamma) / g(1 - 1/n)
    g_n: float = field(repr=False, default=0.0)
    s_n: float = field(repr=False, default=0.0)


def asymptotics_check(g: GFunction, n: int) -> AsymptoticsReport:
    """Tauberian consistency ratios between coefficients, sums, and g itself.

    Compares ``g_n ~ gamma s_n / n`` and ``s_n ~ g(1-1/n)/Gamma(1+gamma)``;
    used as a self-test oracle, not in production paths.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    stream = taylor_coeffs(g, n + 1)
    g_n = stream.coeff(n)
    s_n = stream.partial_sum(n)
    g_at = g.value(1.0 - 1.0 / n)
    return AsymptoticsReport(
        n=n,
        ratio_coeff=g_n * n / (g.gamma * s_n),
        ratio_sum=s_n * math.gamma(1.0 + g.gamma) / g_at,
        g_n=g_n,
        s_n=s_n,
    )


def _tail_corrected_power_sum(stream: CoeffStream, beta: float, n: int, gamma: float):
    """``sum g_i^beta`` truncated at ``n`` plus a power-law tail estimate.

    The tail treats ``g_i ~ g_n (i/n)^{gamma-1}`` for ``i >= n`` (the
    coefficient-decay asymptotics) and sums it with an Euler-Maclaurin
    correction.  Only valid when ``beta (1-gamma) > 1``.
    """
    stream.ensure(n + 1)
    head = math.fsum(np.power(stream.coeffs[:n], beta))
    g_n = stream.coeffs[n]
    p = beta * (gamma - 1.0)  # < -1
    tail = (g_n**beta) * (n / (-p - 1.0) + 0.5)
    return head + tail


def ell_beta_norm_truncated(g, beta: float, n: int) -> float:
    """Tail-corrected ``ell_beta`` norm using ``n`` explicit coefficients."""
    if isinstance(g, CoeffStream) and g.source is None:
        m = min(n, len(g))
        return math.fsum(np.power(g.coeffs[:m], beta)) ** (1.0 / beta)
    source = g.source if isinstance(g, CoeffStream) else g
    stream = g if isinstance(g, CoeffStream) else taylor_coeffs(g, min(n + 1, 1024))
    return _tail_corrected_power_sum(stream, beta, n, source.gamma) ** (1.0 / beta)


def ell_beta_norm(g, beta: float, tol: float = 1e-8) -> float:
    """``(sum_i g_i^beta)^{1/beta}`` with automatic truncation control.

    For a fixed raw stream the sum is exact.  For an analytic weight the
    truncation doubles until the tail-corrected estimate is Cauchy-stable
    within ``tol``; requires the decaying-coefficient regime
    ``beta (1-gamma) > 1``.

    Raises
    ------
    DivergentNorm
        If ``beta (1-gamma) <= 1`` (coefficients are not beta-summable).
    """
    if beta <= 1:
        raise ValueError("beta must exceed 1")
    if isinstance(g, CoeffStream) and g.source is None:
        return math.fsum(np.power(g.coeffs, beta)) ** (1.0 / beta)
    source = g.source if isinstance(g, CoeffStream) else g
    gamma = source.gamma
    if beta * (1.0 - gamma) <= 1.0:
        raise DivergentNorm(
            f"beta(1-gamma) = {beta * (1.0 - gamma):.4g} <= 1: "
            "the coefficient sequence is not beta-summable"
        )
    stream = g if isinstance(g, CoeffStream) else taylor_coeffs(g, 1024)
    n = 1024
    prev = _tail_corrected_power_sum(stream, beta, n, gamma) ** (1.0 / beta)
    while n <= MAX_STREAM_LEN // 2:
        n *= 2
        cur = _tail_corrected_power_sum(stream, beta, n, gamma) ** (1.0 / beta)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise GfRuinError(
        f"ell_beta_norm failed to stabilize within {MAX_STREAM_LEN} terms "
        f"(last increment {abs(cur - prev):.3e} > tol {tol:.3e})"
    )


def dump_coeffs_csv(g, n: int, out):
    """Write rows ``i, g_i, s_{i+1}`` (running total including row i) to ``out``."""
    stream = g if isinstance(g, CoeffStream) else taylor_coeffs(g, n)
    stream.ensure(n)
    out.write("i,g_i,s_n\n")
    for i in range(n):
        out.write(f"{i},{stream.coeffs[i]!r},{stream.partial_sums[i + 1]!r}\n")
