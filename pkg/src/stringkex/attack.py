"""Passive recovery of the shared key from the public transcript alone.

Each public component is ``A_k = (w*g_k + 1)*e_k + g_k mod p`` for a single
symbol ``e_k``: the whole hash-chained fold collapses to one affine step.
Solving for ``e_k`` needs only the inverse of ``w*g_k + 1``, and one step of
``B_k`` by ``e_k`` then reproduces the key both parties compute.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import ParamError, RingParams, SymbolString, check_symbols, gw_step, mod_inverse
from .protocol import Transcript


class AttackInfeasible(ArithmeticError):
    def __init__(self, component: int, factor: int, p: int):
        super().__init__(f"component {component}: w*g+1 = {factor} is not invertible mod {p}")
        self.component = component
        self.factor = factor


@dataclass(frozen=True)
class EffectiveKey:
    e: bytes


def recover_effective_key(params: RingParams, g: SymbolString, A: SymbolString) -> EffectiveKey:
    if len(g) != len(A):
        raise ParamError(f"|g|={len(g)} differs from |A|={len(A)}")
    p, w = params.p, params.w
    e = bytearray(len(g))
    for k, (gk, ak) in enumerate(zip(g, A)):
        factor = (w * gk + 1) % p
        inv = mod_inverse(factor, p)
        if inv is None:
            raise AttackInfeasible(k, factor, p)
        e[k] = inv * (ak - gk) % p
    return EffectiveKey(bytes(e))


def recover_shared(params: RingParams, key: EffectiveKey, B: SymbolString) -> bytes:
    if len(B) != len(key.e):
        raise ParamError(f"|B|={len(B)} differs from |e|={len(key.e)}")
    return bytes(gw_step(params, bk, ek) for bk, ek in zip(B, key.e))


def eve(params: RingParams, transcript: Transcript) -> bytes:
    transcript.validate(params)
    key = recover_effective_key(params, transcript.g, transcript.A)
    return recover_shared(params, key, transcript.B)
