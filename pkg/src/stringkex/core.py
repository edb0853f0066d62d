"""Ring arithmetic over the alphabet {0, ..., p-1}.

The step function is ``G_w(xi, alpha) = ((w*alpha + 1)*xi + alpha) mod p``.
Folding it over a string is order-invariant, and the fold collapses to a
single affine map ``xi -> (P*xi + (P-1)/w) mod p`` with ``P = prod(w*s_n + 1)``.
That collapse is what makes the key exchange breakable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

# A symbol string is any sequence of ints in [0, p); ``bytes`` works when p <= 256.
SymbolString = Sequence[int]

MAX_SCAN_MODULUS = 1 << 16


class ParamError(ValueError):
    """Invalid ring parameters or out-of-range symbols."""


@dataclass(frozen=True)
class RingParams:
    p: int = 256
    w: int = 2

    def __post_init__(self) -> None:
        if not isinstance(self.p, int) or self.p < 4 or self.p % 2:
            raise ParamError(f"modulus p must be an even integer >= 4, got {self.p!r}")
        if not isinstance(self.w, int) or self.w < 2 or self.w % 2:
            raise ParamError(f"multiplier w must be an even integer >= 2, got {self.w!r}")


def check_symbols(params: RingParams, s: SymbolString, name: str = "string") -> None:
    for i, v in enumerate(s):
        if not 0 <= v < params.p:
            raise ParamError(f"{name}[{i}] = {v} is outside [0, {params.p})")


def gw_step(params: RingParams, xi: int, alpha: int) -> int:
    return ((params.w * alpha + 1) * xi + alpha) % params.p


def t_fold(params: RingParams, xi: int, s: SymbolString) -> int:
    """Left fold of :func:`gw_step` over ``s`` starting from ``xi``."""
    p, w = params.p, params.w
    for a in s:
        xi = ((w * a + 1) * xi + a) % p
    return xi


@dataclass(frozen=True)
class AffineMap:
    """Collapsed fold; ``bigP`` is the factor product kept modulo ``w*p``."""

    bigP: int

    def offset(self, params: RingParams) -> int:
        return ((self.bigP - 1) // params.w) % params.p


def affine_of_string(params: RingParams, s: SymbolString) -> AffineMap:
    w, mod = params.w, params.w * params.p
    prod = 1
    for a in s:
        prod = prod * (w * a + 1) % mod
    return AffineMap(prod)


def affine_apply(params: RingParams, amap: AffineMap, xi: int) -> int:
    P = amap.bigP
    if not 0 <= P < params.w * params.p or P % params.w != 1:
        raise ParamError(f"corrupted affine map: bigP={P} is not 1 mod {params.w}")
    return (P * xi + amap.offset(params)) % params.p


def _egcd(a: int, b: int) -> tuple[int, int]:
    # returns (gcd, x) with a*x == gcd (mod b)
    x0, x1 = 1, 0
    while b:
        q = a // b
        a, b = b, a - q * b
        x0, x1 = x1, x0 - q * x1
    return a, x0


def mod_inverse(x: int, m: int) -> Optional[int]:
    """Inverse of ``x`` modulo ``m`` by extended Euclid, or None if gcd(x, m) > 1."""
    if m < 2:
        raise ValueError(f"modulus must be >= 2, got {m}")
    g, coef = _egcd(x % m, m)
    if g != 1:
        return None
    return coef % m


def fixed_point_spectrum(p: int, w: int) -> list[tuple[int, tuple[int, ...]]]:
    """Every ``xi`` with the nonzero ``alpha`` values for which ``G_w(xi, alpha) == xi``.

    Takes raw ``p`` and ``w`` on purpose: odd ``w`` is allowed here so the
    fixed points it produces can be shown. Brute-force, so ``p`` is capped.
    """
    if p % 2 or p < 4:
        raise ParamError(f"modulus p must be an even integer >= 4, got {p}")
    if w < 1:
        raise ParamError(f"multiplier w must be >= 1, got {w}")
    if p > MAX_SCAN_MODULUS:
        raise ParamError(f"exhaustive scan refused for p={p} > {MAX_SCAN_MODULUS}")
    out = []
    for xi in range(p):
        alphas = tuple(a for a in range(1, p) if ((w * a + 1) * xi + a) % p == xi)
        if alphas:
            out.append((xi, alphas))
    return out
