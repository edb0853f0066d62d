"""The composite transform W and the two-party key exchange built on it."""

from __future__ import annotations

import random
import secrets as _secrets
from dataclasses import dataclass, field
from typing import Optional

from .core import ParamError, RingParams, SymbolString, check_symbols, t_fold
from .hashstream import SHA512, DigestFunction, digest_to_symbols, iter_chain

DEFAULT_K = 127
DEFAULT_N = 253
DEFAULT_M = 121
SECRET_LENGTH_RANGE = (16, 256)
HEX_WRAP = 64


class ParseError(ValueError):
    """Malformed serialized key material."""


class ProtocolStateError(RuntimeError):
    """A session step was attempted out of order."""


@dataclass(frozen=True)
class ProtocolConfig:
    params: RingParams = field(default_factory=RingParams)
    digest: DigestFunction = SHA512
    K: int = DEFAULT_K

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ParamError(f"public string length K must be >= 1, got {self.K}")
        if self.params.p > 256:
            raise ParamError(f"p={self.params.p} > 256 is not supported by the byte-level protocol")


@dataclass(frozen=True)
class KeyPair:
    secret: bytes = field(repr=False)
    public_key: bytes

    def __post_init__(self) -> None:
        if len(self.secret) < 1:
            raise ParamError("secret must hold at least one symbol")


@dataclass(frozen=True)
class Transcript:
    """What a passive observer sees: the generator and both public keys."""

    g: bytes
    A: bytes
    B: bytes

    def validate(self, params: RingParams) -> None:
        if not len(self.g) == len(self.A) == len(self.B):
            raise ParamError(
                f"transcript lengths differ: |g|={len(self.g)} |A|={len(self.A)} |B|={len(self.B)}"
            )
        for name in ("g", "A", "B"):
            check_symbols(params, getattr(self, name), name)


def w_transform(cfg: ProtocolConfig, x: SymbolString, s: bytes) -> bytes:
    """Fold component ``k`` of ``x`` with the whole (k+1)-th chain digest of ``s``."""
    if len(x) != cfg.K:
        raise ParamError(f"input has length {len(x)}, expected K={cfg.K}")
    if len(s) == 0:
        raise ParamError("secret string must be nonempty")
    params = cfg.params
    out = bytearray(cfg.K)
    for k, d in enumerate(iter_chain(cfg.digest, s, cfg.K)):
        out[k] = t_fold(params, x[k], digest_to_symbols(d, params))
    return bytes(out)


def _rng(rng: Optional[random.Random]) -> random.Random:
    return rng if rng is not None else _secrets.SystemRandom()


def _random_symbols(rng: random.Random, n: int, p: int) -> bytes:
    return bytes(rng.randrange(p) for _ in range(n))


def gen_generator(cfg: ProtocolConfig, rng: Optional[random.Random] = None) -> bytes:
    return _random_symbols(_rng(rng), cfg.K, cfg.params.p)


def gen_secret(
    length: Optional[int] = None, rng: Optional[random.Random] = None, p: int = 256
) -> bytes:
    """Uniform random secret; its length is drawn from [16, 256] when not given."""
    rng = _rng(rng)
    if length is None:
        length = rng.randint(*SECRET_LENGTH_RANGE)
    if length < 1:
        raise ParamError(f"secret length must be >= 1, got {length}")
    return _random_symbols(rng, length, p)


def derive_public(cfg: ProtocolConfig, g: SymbolString, secret: bytes) -> bytes:
    return w_transform(cfg, g, secret)


def derive_shared(cfg: ProtocolConfig, peer_public: SymbolString, secret: bytes) -> bytes:
    return w_transform(cfg, peer_public, secret)


def generate_keypair(cfg: ProtocolConfig, g: SymbolString, secret: bytes) -> KeyPair:
    return KeyPair(bytes(secret), derive_public(cfg, g, secret))


class Session:
    """One party's side of an exchange, enforcing the step order.

    generator agreed -> public key published -> peer key received -> shared key.
    """

    def __init__(
        self,
        cfg: ProtocolConfig,
        secret: Optional[bytes] = None,
        rng: Optional[random.Random] = None,
    ):
        self.cfg = cfg
        self._secret = bytes(secret) if secret is not None else gen_secret(rng=rng, p=cfg.params.p)
        if not self._secret:
            raise ParamError("secret must hold at least one symbol")
        check_symbols(cfg.params, self._secret, "secret")
        self.generator: Optional[bytes] = None
        self.keypair: Optional[KeyPair] = None
        self.peer_public: Optional[bytes] = None
        self._shared: Optional[bytes] = None

    def agree_generator(self, g: SymbolString) -> None:
        if self.generator is not None:
            raise ProtocolStateError("generator already agreed")
        if len(g) != self.cfg.K:
            raise ParamError(f"generator has length {len(g)}, expected K={self.cfg.K}")
        check_symbols(self.cfg.params, g, "g")
        self.generator = bytes(g)

    def public_key(self) -> bytes:
        if self.generator is None:
            raise ProtocolStateError("no generator agreed yet")
        if self.keypair is None:
            self.keypair = generate_keypair(self.cfg, self.generator, self._secret)
        return self.keypair.public_key

    def receive_peer(self, peer_public: SymbolString) -> bytes:
        if self.keypair is None:
            raise ProtocolStateError("publish our own public key before accepting the peer's")
        if self.peer_public is not None:
            raise ProtocolStateError("peer public key already received")
        if len(peer_public) != self.cfg.K:
            raise ParamError(f"peer key has length {len(peer_public)}, expected K={self.cfg.K}")
        check_symbols(self.cfg.params, peer_public, "peer public key")
        self.peer_public = bytes(peer_public)
        self._shared = derive_shared(self.cfg, self.peer_public, self._secret)
        return self._shared

    @property
    def shared_key(self) -> bytes:
        if self._shared is None:
            raise ProtocolStateError("shared key requested before the peer key arrived")
        return self._shared


def to_hex(s: SymbolString, wrap: Optional[int] = HEX_WRAP) -> str:
    h = bytes(s).hex()
    if not wrap:
        return h
    return "\n".join(h[i : i + wrap] for i in range(0, len(h), wrap))


def from_hex(text: str) -> bytes:
    compact = "".join(text.split())
    if len(compact) % 2:
        raise ParseError(f"odd number of hex digits ({len(compact)})")
    try:
        return bytes.fromhex(compact)
    except ValueError as exc:
        raise ParseError(f"invalid hex: {exc}") from None
