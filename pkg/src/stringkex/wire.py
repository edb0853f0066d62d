"""Framed TCP exchange between two endpoints, plus a passive relay that breaks it.

Frame layout::

    +----------------+--------+-----------------+
    | length (u32 BE)| type u8| payload (length)|
    +----------------+--------+-----------------+

Session flow (initiator I, responder R):

    I -> R  HELLO(params)
    R -> I  HELLO(params)            echo = accept; anything else = reject + close
    I -> R  GENERATOR(g), PUBKEY(A)
    R -> I  PUBKEY(B)
    I <-> R CONFIRM(digest(shared || role))
"""

from __future__ import annotations

import asyncio
import hashlib
import logging
import random
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

from .attack import AttackInfeasible, eve
from .core import ParamError, RingParams
from .hashstream import DIGESTS_BY_ID
from .protocol import ProtocolConfig, Session, Transcript, gen_generator

log = logging.getLogger(__name__)

HEADER = struct.Struct(">IB")
MAX_PAYLOAD = 1 << 20
PROTOCOL_VERSION = 1
ROLE_INITIATOR = 0x01
ROLE_RESPONDER = 0x02


class FrameType(IntEnum):
    HELLO = 0x01
    GENERATOR = 0x02
    PUBKEY = 0x03
    CONFIRM = 0x04


class FrameError(ValueError):
    """Malformed or oversized frame."""


class NegotiationError(RuntimeError):
    """Peers could not agree on parameters."""


class ConfirmMismatch(RuntimeError):
    """The peer's key confirmation did not match our shared key."""


@dataclass(frozen=True)
class Frame:
    type: FrameType
    payload: bytes = b""


def encode_frame(frame: Frame) -> bytes:
    if len(frame.payload) > MAX_PAYLOAD:
        raise FrameError(f"payload of {len(frame.payload)} bytes exceeds cap {MAX_PAYLOAD}")
    return HEADER.pack(len(frame.payload), frame.type) + frame.payload


def _check_header(length: int, ftype: int) -> FrameType:
    if length > MAX_PAYLOAD:
        raise FrameError(f"declared length {length} exceeds cap {MAX_PAYLOAD}")
    try:
        return FrameType(ftype)
    except ValueError:
        raise FrameError(f"unknown frame type 0x{ftype:02x}") from None


class FrameDecoder:
    """Incremental decoder for a byte stream that may split frames anywhere."""

    def __init__(self) -> None:
        self._buf = bytearray()

    @property
    def pending(self) -> int:
        return len(self._buf)

    def feed(self, data: bytes) -> list[Frame]:
        self._buf += data
        frames = []
        while len(self._buf) >= HEADER.size:
            length, ftype = HEADER.unpack_from(self._buf)
            kind = _check_header(length, ftype)
            end = HEADER.size + length
            if len(self._buf) < end:
                break
            frames.append(Frame(kind, bytes(self._buf[HEADER.size : end])))
            del self._buf[:end]
        return frames


def decode_frames(data: bytes) -> list[Frame]:
    dec = FrameDecoder()
    frames = dec.feed(data)
    if dec.pending:
        raise FrameError(f"{dec.pending} trailing bytes do not form a complete frame")
    return frames


@dataclass(frozen=True)
class Hello:
    p: int
    w: int
    K: int
    digest_id: int
    version: int = PROTOCOL_VERSION

    _FMT = struct.Struct(">BHBHB")

    @classmethod
    def from_config(cls, cfg: ProtocolConfig) -> "Hello":
        return cls(cfg.params.p, cfg.params.w, cfg.K, cfg.digest.wire_id)

    def encode(self) -> bytes:
        return self._FMT.pack(self.version, self.p, self.w, self.K, self.digest_id)

    @classmethod
    def decode(cls, payload: bytes) -> "Hello":
        if len(payload) != cls._FMT.size:
            raise FrameError(f"HELLO payload must be {cls._FMT.size} bytes, got {len(payload)}")
        version, p, w, K, digest_id = cls._FMT.unpack(payload)
        return cls(p, w, K, digest_id, version)

    def to_config(self) -> ProtocolConfig:
        if self.version != PROTOCOL_VERSION:
            raise NegotiationError(f"unsupported protocol version {self.version}")
        if self.digest_id not in DIGESTS_BY_ID:
            raise NegotiationError(f"unknown digest id {self.digest_id}")
        try:
            return ProtocolConfig(RingParams(self.p, self.w), DIGESTS_BY_ID[self.digest_id], self.K)
        except ParamError as exc:
            raise NegotiationError(str(exc)) from None


def confirm_tag(cfg: ProtocolConfig, shared: bytes, role: int) -> bytes:
    return cfg.digest(bytes(shared) + bytes([role]))


class _Channel:
    """Frame I/O over an asyncio stream pair, hashing every byte each way."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer
        self.sent = hashlib.sha256()
        self.received = hashlib.sha256()

    async def send(self, *frames: Frame) -> None:
        data = b"".join(encode_frame(f) for f in frames)
        self.sent.update(data)
        self.writer.write(data)
        await self.writer.drain()

    async def recv(self, expect: FrameType) -> Frame:
        try:
            header = await self.reader.readexactly(HEADER.size)
            length, ftype = HEADER.unpack(header)
            kind = _check_header(length, ftype)
            payload = await self.reader.readexactly(length)
        except asyncio.IncompleteReadError:
            raise FrameError(f"connection closed while waiting for {expect.name}") from None
        self.received.update(header + payload)
        if kind is not expect:
            raise FrameError(f"expected {expect.name} frame, got {kind.name}")
        return Frame(kind, payload)

    async def close(self) -> None:
        self.writer.close()
        try:
            await self.writer.wait_closed()
        except ConnectionError:
            pass


@dataclass
class ExchangeResult:
    role: str
    shared_key: bytes
    confirmed: bool
    sent_sha256: str
    received_sha256: str


async def initiator_session(
    reader: asyncio.StreamReader,
    writer: asyncio.StreamWriter,
    cfg: ProtocolConfig,
    secret: Optional[bytes] = None,
    rng: Optional[random.Random] = None,
) -> ExchangeResult:
    ch = _Channel(reader, writer)
    try:
        ours = Hello.from_config(cfg)
        await ch.send(Frame(FrameType.HELLO, ours.encode()))
        reply = Hello.decode((await ch.recv(FrameType.HELLO)).payload)
        if reply != ours:
            raise NegotiationError(f"responder rejected parameters, counter-offer {reply}")

        session = Session(cfg, secret, rng)
        g = gen_generator(cfg, rng)
        session.agree_generator(g)
        await ch.send(
            Frame(FrameType.GENERATOR, g), Frame(FrameType.PUBKEY, session.public_key())
        )
        B = (await ch.recv(FrameType.PUBKEY)).payload
        shared = session.receive_peer(B)

        await ch.send(Frame(FrameType.CONFIRM, confirm_tag(cfg, shared, ROLE_INITIATOR)))
        theirs = (await ch.recv(FrameType.CONFIRM)).payload
        if theirs != confirm_tag(cfg, shared, ROLE_RESPONDER):
            raise ConfirmMismatch("responder confirmation does not match our shared key")
        return ExchangeResult(
            "initiator", shared, True, ch.sent.hexdigest(), ch.received.hexdigest()
        )
    finally:
        await ch.close()


async def responder_session(
    reader: asyncio.StreamReader,
    writer: asyncio.StreamWriter,
    cfg: ProtocolConfig,
    secret: Optional[bytes] = None,
    rng: Optional[random.Random] = None,
) -> ExchangeResult:
    ch = _Channel(reader, writer)
    try:
        ours = Hello.from_config(cfg)
        proposal = Hello.decode((await ch.recv(FrameType.HELLO)).payload)
        await ch.send(Frame(FrameType.HELLO, ours.encode()))
        if proposal != ours:
            raise NegotiationError(f"rejected initiator parameters {proposal}")

        session = Session(cfg, secret, rng)
        g = (await ch.recv(FrameType.GENERATOR)).payload
        A = (await ch.recv(FrameType.PUBKEY)).payload
        session.agree_generator(g)
        await ch.send(Frame(FrameType.PUBKEY, session.public_key()))
        shared = session.receive_peer(A)

        await ch.send(Frame(FrameType.CONFIRM, confirm_tag(cfg, shared, ROLE_RESPONDER)))
        theirs = (await ch.recv(FrameType.CONFIRM)).payload
        if theirs != confirm_tag(cfg, shared, ROLE_INITIATOR):
            raise ConfirmMismatch("initiator confirmation does not match our shared key")
        return ExchangeResult(
            "responder", shared, True, ch.sent.hexdigest(), ch.received.hexdigest()
        )
    finally:
        await ch.close()


async def run_initiator(
    host: str,
    port: int,
    cfg: ProtocolConfig,
    secret: Optional[bytes] = None,
    rng: Optional[random.Random] = None,
) -> ExchangeResult:
    reader, writer = await asyncio.open_connection(host, port)
    return await initiator_session(reader, writer, cfg, secret, rng)


async def run_responder(
    host: str,
    port: int,
    cfg: ProtocolConfig,
    secret: Optional[bytes] = None,
    rng: Optional[random.Random] = None,
    ready: Optional[asyncio.Future] = None,
) -> ExchangeResult:
    """Serve exactly one exchange; ``ready`` receives the bound port."""
    loop = asyncio.get_running_loop()
    done: asyncio.Future = loop.create_future()

    async def handle(reader, writer):
        if done.done():
            writer.close()
            return
        try:
            done.set_result(await responder_session(reader, writer, cfg, secret, rng))
        except Exception as exc:
            if not done.done():
                done.set_exception(exc)

    server = await asyncio.start_server(handle, host, port)
    async with server:
        if ready is not None:
            ready.set_result(server.sockets[0].getsockname()[1])
        return await done


# -- passive tap ------------------------------------------------------------


@dataclass
class TapReport:
    hello: Optional[Hello] = None
    accepted: Optional[bool] = None
    g: Optional[bytes] = None
    A: Optional[bytes] = None
    B: Optional[bytes] = None
    confirms: dict = field(default_factory=dict)
    recovered: Optional[bytes] = None
    confirm_verified: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    # direction -> (sha256 of bytes read, sha256 of bytes forwarded)
    streams: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.recovered is not None

    @property
    def verified(self) -> bool:
        return (
            self.complete
            and len(self.confirm_verified) == 2
            and all(self.confirm_verified.values())
        )

    def summary(self) -> str:
        lines = []
        if not self.complete:
            seen = [n for n in ("g", "A", "B") if getattr(self, n) is not None]
            lines.append(f"partial capture: observed {seen or 'nothing'}; no key recovered")
        else:
            lines.append(f"recovered shared key: {self.recovered.hex()}")
            for role, ok in sorted(self.confirm_verified.items()):
                lines.append(f"  {role} CONFIRM {'verified' if ok else 'MISMATCH'}")
        lines.extend(f"  note: {e}" for e in self.errors)
        return "\n".join(lines)


class _Capture:
    def __init__(self, report: TapReport):
        self.report = report
        self._proposal: Optional[Hello] = None

    def on_frame(self, direction: str, frame: Frame) -> None:
        r = self.report
        if frame.type is FrameType.HELLO:
            hello = Hello.decode(frame.payload)
            if direction == "initiator":
                self._proposal = hello
                r.hello = hello
            else:
                r.accepted = hello == self._proposal
        elif frame.type is FrameType.GENERATOR:
            r.g = frame.payload
        elif frame.type is FrameType.PUBKEY:
            if direction == "initiator":
                r.A = frame.payload
            else:
                r.B = frame.payload
        elif frame.type is FrameType.CONFIRM:
            r.confirms[direction] = frame.payload

    def finish(self) -> TapReport:
        r = self.report
        if r.accepted is False:
            r.errors.append("responder rejected the proposed parameters")
        if r.hello is None or None in (r.g, r.A, r.B):
            return r
        try:
            cfg = r.hello.to_config()
            r.recovered = eve(cfg.params, Transcript(r.g, r.A, r.B))
        except AttackInfeasible as exc:
            r.errors.append(str(exc))
            return r
        except (NegotiationError, ParamError) as exc:
            r.errors.append(f"unusable capture: {exc}")
            return r
        roles = {"initiator": ROLE_INITIATOR, "responder": ROLE_RESPONDER}
        for direction, tag in r.confirms.items():
            r.confirm_verified[direction] = tag == confirm_tag(cfg, r.recovered, roles[direction])
        return r


async def _pump(
    direction: str,
    src: asyncio.StreamReader,
    dst: asyncio.StreamWriter,
    capture: _Capture,
    chunk: int = 65536,
) -> None:
    decoder: Optional[FrameDecoder] = FrameDecoder()
    h_in, h_out = hashlib.sha256(), hashlib.sha256()
    try:
        while True:
            data = await src.read(chunk)
            if not data:
                break
            h_in.update(data)
            dst.write(data)
            h_out.update(data)
            await dst.drain()
            if decoder is None:
                continue
            # parse a copy; a parse failure stops inspection, never forwarding
            try:
                for frame in decoder.feed(data):
                    capture.on_frame(direction, frame)
            except FrameError as exc:
                capture.report.errors.append(f"{direction} stream: {exc}")
                decoder = None
        if decoder is not None and decoder.pending:
            capture.report.errors.append(
                f"{direction} stream closed with {decoder.pending} bytes of an incomplete frame"
            )
    except ConnectionError as exc:
        capture.report.errors.append(f"{direction} stream: {exc!r}")
    finally:
        capture.report.streams[direction] = (h_in.hexdigest(), h_out.hexdigest())
        try:
            if dst.can_write_eof():
                dst.write_eof()
        except (OSError, RuntimeError):
            pass


class Tap:
    """Relay between initiator and an upstream responder, recording what passes."""

    def __init__(self, upstream_host: str, upstream_port: int):
        self.upstream = (upstream_host, upstream_port)
        self.reports: asyncio.Queue = asyncio.Queue()

    async def handle(self, c_reader: asyncio.StreamReader, c_writer: asyncio.StreamWriter) -> None:
        capture = _Capture(TapReport())
        try:
            u_reader, u_writer = await asyncio.open_connection(*self.upstream)
        except OSError as exc:
            capture.report.errors.append(f"upstream connect failed: {exc}")
            c_writer.close()
            await self.reports.put(capture.finish())
            return
        await asyncio.gather(
            _pump("initiator", c_reader, u_writer, capture),
            _pump("responder", u_reader, c_writer, capture),
        )
        for wr in (u_writer, c_writer):
            wr.close()
        report = capture.finish()
        log.info("tap session finished: %s", report.summary())
        await self.reports.put(report)

    async def start(self, host: str, port: int) -> asyncio.base_events.Server:
        return await asyncio.start_server(self.handle, host, port)


async def run_tap(
    listen_host: str,
    listen_port: int,
    upstream_host: str,
    upstream_port: int,
    sessions: int = 1,
    ready: Optional[asyncio.Future] = None,
) -> list[TapReport]:
    tap = Tap(upstream_host, upstream_port)
    server = await tap.start(listen_host, listen_port)
    async with server:
        if ready is not None:
            ready.set_result(server.sockets[0].getsockname()[1])
        return [await tap.reports.get() for _ in range(sessions)]
