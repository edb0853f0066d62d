"""Hash chain R(s), R(R(s)), ... used to derive per-component fold strings."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Iterator

from .core import ParamError, RingParams


@dataclass(frozen=True)
class DigestFunction:
    name: str
    size: int
    wire_id: int
    func: Callable[[bytes], bytes]

    def __call__(self, data: bytes) -> bytes:
        return self.func(data)


def _stub(data: bytes) -> bytes:
    # one-byte toy digest for hand-checkable tests: (sum + 1) mod 256
    return bytes([(sum(data) + 1) % 256])


SHA512 = DigestFunction("sha512", 64, 1, lambda d: hashlib.sha512(d).digest())
SHA256 = DigestFunction("sha256", 32, 2, lambda d: hashlib.sha256(d).digest())
STUB = DigestFunction("stub", 1, 3, _stub)

DIGESTS = {d.name: d for d in (SHA512, SHA256, STUB)}
DIGESTS_BY_ID = {d.wire_id: d for d in DIGESTS.values()}


def get_digest(name: str) -> DigestFunction:
    try:
        return DIGESTS[name]
    except KeyError:
        raise ParamError(f"unknown digest {name!r}; choose from {sorted(DIGESTS)}") from None


@dataclass(frozen=True)
class HashChainState:
    current: bytes
    step: int


def chain_init(R: DigestFunction, seed: bytes) -> HashChainState:
    return HashChainState(R(bytes(seed)), 1)


def chain_next(state: HashChainState, R: DigestFunction) -> HashChainState:
    return HashChainState(R(state.current), state.step + 1)


def iter_chain(R: DigestFunction, seed: bytes, count: int) -> Iterator[bytes]:
    """Yield the first ``count`` chain digests: R(seed), R^2(seed), ..."""
    if count <= 0:
        return
    state = chain_init(R, seed)
    yield state.current
    for _ in range(count - 1):
        state = chain_next(state, R)
        yield state.current


def digest_to_symbols(d: bytes, params: RingParams) -> bytes:
    if params.p > 256:
        raise ParamError(f"digest bytes cannot cover p={params.p} > 256")
    if params.p == 256:
        return bytes(d)
    return bytes(b % params.p for b in d)
