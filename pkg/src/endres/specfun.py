"""Closed-form Euclidean resolvent kernels built on modified Bessel functions.

Kernels of ``(Δ + k²)^{-m}`` on ℝⁿ, in two forms:

* the point kernel ``G_m(|x - y|)``, closed form for every order m
  ``(2π)^{-n/2} 2^{1-m}/Γ(m) · k^{n-2m} (kr)^{m-n/2} K_{n/2-m}(kr)``;
* the radial kernel, the mean of the point kernel over the sphere ``|y| = s``
  seen from ``|x| = r``. It is the kernel of the resolvent restricted to
  radial functions, which is what a radially reduced mesh discretizes.

Evaluation runs through the exponentially scaled ``kve``/``ive`` so that
large arguments underflow to zero instead of producing ``inf * 0``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from endres.errors import DomainError, KernelRangeError

__all__ = [
    "KernelQuery",
    "bessel_k",
    "euclid_resolvent_kernel",
    "euclid_resolvent_gradient",
    "point_resolvent_kernel",
    "point_resolvent_gradient",
    "radial_resolvent_kernel",
    "k2_derivative",
    "m_recursion_residual",
    "sphere_area",
    "ball_volume",
    "japanese_bracket",
]

_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class KernelQuery:
    """Arguments of a Euclidean resolvent kernel evaluation."""

    n: int
    m: int
    k: float
    r: float

    def __post_init__(self) -> None:
        if self.n < 3:
            raise DomainError(f"dimension must be >= 3, got {self.n}", parameter="n", value=self.n)
        if self.m < 1:
            raise DomainError(f"order must be >= 1, got {self.m}", parameter="m", value=self.m)
        if not math.isfinite(self.k) or self.k < 0:
            raise DomainError(f"k must be finite and >= 0, got {self.k}", parameter="k", value=self.k)
        if not math.isfinite(self.r) or self.r <= 0:
            raise DomainError(f"r must be finite and > 0, got {self.r}", parameter="r", value=self.r)


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in ℝⁿ."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int) -> float:
    """Volume of the unit ball in ℝⁿ."""
    return sphere_area(n) / n


def japanese_bracket(x: ArrayLike) -> NDArray[np.float64]:
    """⟨x⟩ = (1 + |x|²)^{1/2}."""
    arr = np.asarray(x, dtype=float)
    return np.sqrt(1.0 + arr * arr)


def bessel_k(nu: float, x: float) -> float:
    """Modified Bessel function of the second kind K_ν(x) for x > 0."""
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"bessel_k requires finite x > 0, got {x}", parameter="x", value=x)
    if not math.isfinite(nu):
        raise DomainError(f"bessel_k requires a finite order, got {nu}", parameter="nu", value=nu)
    value = float(special.kv(abs(nu), x))
    if math.isnan(value) or math.isinf(value):
        raise KernelRangeError(f"K_{nu}({x}) is not representable", details={"nu": nu, "x": x})
    return value


def _check_finite(values: NDArray[np.float64], what: str) -> NDArray[np.float64]:
    if not np.all(np.isfinite(values)):
        bad = int(np.count_nonzero(~np.isfinite(values)))
        raise KernelRangeError(f"{what} overflowed", details={"non_finite": bad})
    return values


def _check_args(n: int, m: int, k: float, r: NDArray[np.float64]) -> None:
    if n < 1:
        raise DomainError(f"dimension must be >= 1, got {n}", parameter="n", value=n)
    if m < 1:
        raise DomainError(f"order must be >= 1, got {m}", parameter="m", value=m)
    if not math.isfinite(k) or k < 0:
        raise DomainError(f"k must be finite and >= 0, got {k}", parameter="k", value=k)
    if k == 0 and (m != 1 or n < 3):
        raise DomainError("k = 0 is only a valid limit for m = 1 and n >= 3", parameter="k", value=k)
    if r.size and (not np.all(np.isfinite(r)) or np.any(r <= 0)):
        raise DomainError("radial distances must be finite and > 0", parameter="r", value=float(np.min(r)))


def _green_constant(n: int) -> float:
    # Newtonian kernel Γ(n/2 - 1) / (4 π^{n/2}) r^{2-n}
    return math.gamma(n / 2.0 - 1.0) / (4.0 * math.pi ** (n / 2.0))


def _log_prefactor(n: int, m: int) -> float:
    return -0.5 * n * math.log(2.0 * math.pi) + (1 - m) * math.log(2.0) - math.lgamma(m)


def point_resolvent_kernel(n: int, m: int, k: float, r: ArrayLike) -> NDArray[np.float64]:
    """Point kernel of (Δ + k²)^{-m} on ℝⁿ at distance r (vectorized in r)."""
    rr = np.asarray(r, dtype=float)
    _check_args(n, m, k, rr)
    if k == 0:
        return _check_finite(_green_constant(n) * rr ** (2.0 - n), "Green function")
    mu = n / 2.0 - m
    z = k * rr
    with np.errstate(divide="ignore", over="ignore"):
        log_value = (
            _log_prefactor(n, m)
            + (n - 2 * m) * math.log(k)
            - mu * np.log(z)
            + np.log(special.kve(abs(mu), z))
            - z
        )
    if np.any(log_value > _LOG_MAX):
        raise KernelRangeError("resolvent kernel overflows", details={"n": n, "m": m, "k": k})
    return np.exp(log_value)


def point_resolvent_gradient(n: int, m: int, k: float, r: ArrayLike) -> NDArray[np.float64]:
    """|∂_r| of the point kernel, from d/dz[z^{-μ}K_μ(z)] = -z^{-μ}K_{μ+1}(z)."""
    rr = np.asarray(r, dtype=float)
    _check_args(n, m, k, rr)
    if k == 0:
        return _check_finite((n - 2) * _green_constant(n) * rr ** (1.0 - n), "Green function gradient")
    mu = n / 2.0 - m
    z = k * rr
    with np.errstate(divide="ignore", over="ignore"):
        log_value = (
            _log_prefactor(n, m)
            + (n - 2 * m + 1) * math.log(k)
            - mu * np.log(z)
            + np.log(special.kve(abs(mu + 1.0), z))
            - z
        )
    if np.any(log_value > _LOG_MAX):
        raise KernelRangeError("resolvent kernel gradient overflows", details={"n": n, "m": m, "k": k})
    return np.exp(log_value)


def euclid_resolvent_kernel(q: KernelQuery) -> float:
    """Kernel of (Δ_{ℝⁿ} + k²)^{-m} at distance q.r."""
    return float(point_resolvent_kernel(q.n, q.m, q.k, q.r))


def euclid_resolvent_gradient(q: KernelQuery) -> float:
    """|∂_r| of euclid_resolvent_kernel."""
    return float(point_resolvent_gradient(q.n, q.m, q.k, q.r))


# -----------------------------------------------------------------------------
# Radial (spherical-mean) kernels
# -----------------------------------------------------------------------------


def _k2_operator_terms(order: int) -> dict[tuple[int, int], float]:
    """Express (d/dk²)^order as Σ c · k^β · (d/dk)^i, keyed by (i, β)."""
    terms: dict[tuple[int, int], float] = {(0, 0): 1.0}
    for _ in range(order):
        nxt: dict[tuple[int, int], float] = defaultdict(float)
        for (i, beta), c in terms.items():
            # (1/2k) d/dk [c k^β F^(i)]
            if beta != 0:
                nxt[(i, beta - 2)] += 0.5 * c * beta
            nxt[(i + 1, beta - 1)] += 0.5 * c
        terms = dict(nxt)
    return terms


def _scaled_i_derivative(nu: float, order: int, x: NDArray[np.float64]) -> NDArray[np.float64]:
    # e^{-x} I_ν^{(order)}(x)
    out = np.zeros_like(x)
    for j in range(order + 1):
        out += math.comb(order, j) * special.ive(nu - order + 2 * j, x)
    return out / 2.0**order


def _scaled_k_derivative(nu: float, order: int, x: NDArray[np.float64]) -> NDArray[np.float64]:
    # e^{x} K_ν^{(order)}(x)
    out = np.zeros_like(x)
    for j in range(order + 1):
        out += math.comb(order, j) * special.kve(abs(nu - order + 2 * j), x)
    return (-1.0) ** order * out / 2.0**order


def radial_resolvent_kernel(n: int, m: int, k: float, r: ArrayLike, s: ArrayLike) -> NDArray[np.float64]:
    """Spherical mean of the point kernel: x on the sphere |x| = r, y averaged over |y| = s.

    For m = 1 this is |S^{n-1}|^{-1} (rs)^{-ν} I_ν(k·min(r,s)) K_ν(k·max(r,s)) with ν = n/2 - 1;
    higher orders apply ((-1)^{m-1}/(m-1)!) ∂_{k²}^{m-1} exactly through Bessel derivative identities.
    """
    rr, ss = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(s, dtype=float))
    _check_args(n, m, k, np.concatenate([rr.ravel(), ss.ravel()]))
    if n < 3:
        raise DomainError(f"radial kernels need n >= 3, got {n}", parameter="n", value=n)
    nu = n / 2.0 - 1.0
    a = np.minimum(rr, ss)
    b = np.maximum(rr, ss)
    pref = (rr * ss) ** (-nu) / sphere_area(n)
    if k == 0:
        return pref * (a / b) ** nu / (2.0 * nu)

    order = m - 1
    total = np.zeros_like(a)
    for (i, beta), c in _k2_operator_terms(order).items():
        # F^{(i)}(k) for F(k) = I_ν(ka) K_ν(kb), without the common factor e^{k(a-b)}
        deriv = np.zeros_like(a)
        for l in range(i + 1):
            deriv += (
                math.comb(i, l)
                * a**l
                * _scaled_i_derivative(nu, l, k * a)
                * b ** (i - l)
                * _scaled_k_derivative(nu, i - l, k * b)
            )
        total += c * k**beta * deriv
    sign = (-1.0) ** order / math.factorial(order)
    values = sign * pref * total * np.exp(k * (a - b))
    return _check_finite(values, "radial resolvent kernel")


# -----------------------------------------------------------------------------
# k²-derivatives
# -----------------------------------------------------------------------------


def k2_derivative(func: Callable[[float], float], k2: float, order: int = 1, rel_step: float = 0.05) -> float:
    """Richardson-extrapolated central difference of ``func`` in k² (order 1 or 2)."""
    if order not in (1, 2):
        raise DomainError(f"only first and second k²-derivatives are supported, got {order}", parameter="order")
    if k2 <= 0:
        raise DomainError(f"k² must be > 0, got {k2}", parameter="k2", value=k2)

    def central(h: float) -> float:
        if order == 1:
            return (func(k2 + h) - func(k2 - h)) / (2.0 * h)
        return (func(k2 + h) - 2.0 * func(k2) + func(k2 - h)) / (h * h)

    h = rel_step * k2
    d1, d2, d3 = central(h), central(h / 2.0), central(h / 4.0)
    r1 = (4.0 * d2 - d1) / 3.0
    r2 = (4.0 * d3 - d2) / 3.0
    return (16.0 * r2 - r1) / 15.0


def m_recursion_residual(n: int, m: int, k: float, r: float) -> float:
    """Relative gap between kernel(m+1) and (-1/m)·∂_{k²} kernel(m)."""

    def kernel_m(k2: float) -> float:
        return float(point_resolvent_kernel(n, m, math.sqrt(k2), r))

    expected = float(point_resolvent_kernel(n, m + 1, k, r))
    derived = -k2_derivative(kernel_m, k * k, 1) / m
    return abs(derived - expected) / abs(expected)
