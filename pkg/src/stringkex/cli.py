"""Command-line front end.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 attack infeasible,
5 internal mismatch (honest keys or the attack disagree).
"""

from __future__ import annotations

import argparse
import asyncio
import io
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .attack import AttackInfeasible, eve
from .core import ParamError, RingParams, check_symbols
from .hashstream import DIGESTS, get_digest
from .protocol import (
    DEFAULT_K,
    DEFAULT_M,
    DEFAULT_N,
    ParseError,
    ProtocolConfig,
    ProtocolStateError,
    Transcript,
    derive_public,
    derive_shared,
    from_hex,
    gen_generator,
    gen_secret,
    to_hex,
)
from .wire import (
    ConfirmMismatch,
    FrameError,
    NegotiationError,
    run_initiator,
    run_responder,
    run_tap,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_INFEASIBLE = 4
EXIT_MISMATCH = 5

PUBLIC_FIELDS = ("g", "A", "B", "eve")
FIELD_ORDER = ("g", "secret", "A", "B", "sa", "sb", "eve")


class MismatchError(RuntimeError):
    pass


@dataclass
class TranscriptFile:
    """Labeled text document: ``key = value`` header lines, then ``[field]`` hex blocks."""

    p: int = 256
    w: int = 2
    K: int = DEFAULT_K
    digest: str = "sha512"
    fields: dict = field(default_factory=dict)

    @classmethod
    def from_config(cls, cfg: ProtocolConfig, **fields: bytes) -> "TranscriptFile":
        return cls(cfg.params.p, cfg.params.w, cfg.K, cfg.digest.name, dict(fields))

    def config(self) -> ProtocolConfig:
        return ProtocolConfig(RingParams(self.p, self.w), get_digest(self.digest), self.K)

    def validate(self) -> ProtocolConfig:
        cfg = self.config()
        for name, value in self.fields.items():
            if name == "secret":
                if not value:
                    raise ParamError("secret is empty")
            elif len(value) != self.K:
                raise ParamError(f"field {name} has {len(value)} symbols, expected K={self.K}")
            check_symbols(cfg.params, value, name)
        return cfg

    def require(self, *names: str) -> list[bytes]:
        missing = [n for n in names if n not in self.fields]
        if missing:
            raise ParamError(f"missing field(s): {', '.join(missing)}")
        return [self.fields[n] for n in names]

    def dumps(self) -> str:
        out = io.StringIO()
        out.write(f"p = {self.p}\nw = {self.w}\nK = {self.K}\ndigest = {self.digest}\n")
        ordered = sorted(self.fields, key=lambda n: FIELD_ORDER.index(n))
        for name in ordered:
            out.write(f"\n[{name}]\n{to_hex(self.fields[name])}\n")
        return out.getvalue()

    @classmethod
    def loads(cls, text: str) -> "TranscriptFile":
        header: dict = {}
        fields: dict = {}
        current: Optional[str] = None
        chunks: list = []

        def flush():
            if current is not None:
                fields[current] = from_hex("".join(chunks))

        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                flush()
                current, chunks = line[1:-1].strip(), []
                if current not in FIELD_ORDER:
                    raise ParseError(f"line {lineno}: unknown field [{current}]")
                if current in fields:
                    raise ParseError(f"line {lineno}: duplicate field [{current}]")
            elif current is not None:
                chunks.append(line)
            elif "=" in line:
                key, value = (part.strip() for part in line.split("=", 1))
                if key not in ("p", "w", "K", "digest"):
                    raise ParseError(f"line {lineno}: unknown header key {key!r}")
                header[key] = value
            else:
                raise ParseError(f"line {lineno}: unexpected text {line!r}")
        flush()
        try:
            ints = {k: int(header[k]) for k in ("p", "w", "K") if k in header}
        except ValueError as exc:
            raise ParseError(f"bad header value: {exc}") from None
        return cls(
            ints.get("p", 256), ints.get("w", 2), ints.get("K", DEFAULT_K),
            header.get("digest", "sha512"), fields,
        )

    @classmethod
    def load(cls, path: str) -> "TranscriptFile":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read {path}: {exc}") from None
        return cls.loads(text)

    def save(self, path: str) -> None:
        Path(path).write_text(self.dumps())


def _config_from_args(args) -> ProtocolConfig:
    return ProtocolConfig(RingParams(args.p, args.w), get_digest(args.digest), args.K)


def _rng(args) -> Optional[random.Random]:
    return random.Random(args.seed) if args.seed is not None else None


def _section(out, title: str, s: bytes) -> None:
    out.write(f"\n{title}\n{to_hex(s)}\n")


def cmd_demo(args, out) -> int:
    cfg = _config_from_args(args)
    rng = _rng(args)
    p = cfg.params.p
    g = gen_generator(cfg, rng)
    a = gen_secret(args.N, rng, p)
    b = gen_secret(args.M, rng, p)
    A = derive_public(cfg, g, a)
    B = derive_public(cfg, g, b)
    sa = derive_shared(cfg, B, a)
    sb = derive_shared(cfg, A, b)
    recovered = eve(cfg.params, Transcript(g, A, B))

    out.write(f"parameters: p={p} w={cfg.params.w} K={cfg.K} N={len(a)} M={len(b)} "
              f"digest={cfg.digest.name}\n")
    _section(out, "public generator g", g)
    _section(out, "alice secret a", a)
    _section(out, "bob secret b", b)
    _section(out, "alice public A = W(g, a)", A)
    _section(out, "bob public B = W(g, b)", B)
    _section(out, "alice shared sa = W(B, a)", sa)
    _section(out, "bob shared sb = W(A, b)", sb)
    _section(out, "eve recovered key from (g, A, B)", recovered)
    if not sa == sb == recovered:
        raise MismatchError(f"keys disagree: sa==sb {sa == sb}, eve==sa {recovered == sa}")
    out.write("\nsa == sb == eve: OK\n")
    return EXIT_OK


def cmd_keygen(args, out) -> int:
    rng = _rng(args)
    if args.in_path:
        doc = TranscriptFile.load(args.in_path)
        cfg = doc.validate()
        (g,) = doc.require("g")
    else:
        cfg = _config_from_args(args)
        g = gen_generator(cfg, rng)
    secret = gen_secret(args.N, rng, cfg.params.p)
    TranscriptFile.from_config(cfg, g=g, secret=secret).save(args.out)
    if args.public_out:
        TranscriptFile.from_config(cfg, g=g).save(args.public_out)
    out.write(f"wrote key ({len(secret)}-symbol secret) to {args.out}\n")
    return EXIT_OK


def _load_key(path: str) -> tuple[ProtocolConfig, bytes, bytes]:
    key = TranscriptFile.load(path)
    cfg = key.validate()
    g, secret = key.require("g", "secret")
    return cfg, g, secret


def cmd_pub(args, out) -> int:
    cfg, g, secret = _load_key(args.key)
    if args.in_path:
        doc = TranscriptFile.load(args.in_path)
        if doc.validate() != cfg or doc.require("g")[0] != g:
            raise ParamError("public file does not match the key's parameters and generator")
    else:
        doc = TranscriptFile.from_config(cfg, g=g)
    name = "A" if args.role == "alice" else "B"
    doc.fields[name] = derive_public(cfg, g, secret)
    doc.save(args.out)
    out.write(f"{name}\n{to_hex(doc.fields[name])}\n")
    return EXIT_OK


def cmd_shared(args, out) -> int:
    cfg, g, secret = _load_key(args.key)
    doc = TranscriptFile.load(args.in_path)
    if doc.validate() != cfg or doc.require("g")[0] != g:
        raise ParamError("public file does not match the key's parameters and generator")
    peer, name = ("B", "sa") if args.role == "alice" else ("A", "sb")
    (peer_public,) = doc.require(peer)
    shared = derive_shared(cfg, peer_public, secret)
    if args.out:
        TranscriptFile.from_config(cfg, **{name: shared}).save(args.out)
    out.write(f"{name}\n{to_hex(shared)}\n")
    return EXIT_OK


def cmd_attack(args, out) -> int:
    doc = TranscriptFile.load(args.in_path)
    private = sorted(set(doc.fields) - set(PUBLIC_FIELDS))
    if private:
        raise ParamError(f"attack reads only g, A, B; input carries private field(s) {private}")
    cfg = doc.validate()
    g, A, B = doc.require("g", "A", "B")
    recovered = eve(cfg.params, Transcript(g, A, B))
    if args.out:
        TranscriptFile.from_config(cfg, g=g, A=A, B=B, eve=recovered).save(args.out)
    out.write(f"eve\n{to_hex(recovered)}\n")
    return EXIT_OK


def _address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected host:port, got {text!r}") from None


async def _announce(ready: asyncio.Future, host: str, out) -> None:
    port = await ready
    out.write(f"listening on {host}:{port}\n")
    out.flush()


async def _with_announce(factory, host: str, out):
    ready = asyncio.get_running_loop().create_future()
    announce = asyncio.create_task(_announce(ready, host, out))
    try:
        return await factory(ready)
    finally:
        announce.cancel()


def cmd_serve(args, out) -> int:
    cfg = _config_from_args(args)
    rng = _rng(args)
    secret = gen_secret(args.N, rng, cfg.params.p)
    host, port = args.listen
    res = asyncio.run(_with_announce(
        lambda ready: run_responder(host, port, cfg, secret, rng, ready=ready), host, out
    ))
    out.write(f"shared key (confirmed)\n{to_hex(res.shared_key)}\n")
    return EXIT_OK


def cmd_connect(args, out) -> int:
    cfg = _config_from_args(args)
    rng = _rng(args)
    secret = gen_secret(args.N, rng, cfg.params.p)
    res = asyncio.run(run_initiator(*args.connect, cfg, secret, rng))
    out.write(f"shared key (confirmed)\n{to_hex(res.shared_key)}\n")
    return EXIT_OK


def cmd_tap(args, out) -> int:
    host, port = args.listen
    reports = asyncio.run(_with_announce(
        lambda ready: run_tap(host, port, *args.upstream, sessions=args.sessions, ready=ready),
        host, out,
    ))
    for report in reports:
        out.write(report.summary() + "\n")
    if not all(r.verified for r in reports):
        return EXIT_INFEASIBLE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    params = argparse.ArgumentParser(add_help=False)
    params.add_argument("--p", type=int, default=256, help="alphabet size (even)")
    params.add_argument("--w", type=int, default=2, help="step multiplier (even)")
    params.add_argument("--K", type=int, default=DEFAULT_K, help="public string length")
    params.add_argument("--digest", choices=sorted(DIGESTS), default="sha512")
    params.add_argument("--seed", type=int, default=None, help="seed for reproducible runs")

    parser = argparse.ArgumentParser(prog="stringkex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", parents=[params], help="simulate an exchange and the attack")
    demo.add_argument("--N", type=int, default=DEFAULT_N, help="alice secret length")
    demo.add_argument("--M", type=int, default=DEFAULT_M, help="bob secret length")
    demo.set_defaults(func=cmd_demo)

    kg = sub.add_parser("keygen", parents=[params], help="create a secret key file")
    kg.add_argument("--in", dest="in_path", help="public file supplying params and g")
    kg.add_argument("--out", required=True, help="key file to write")
    kg.add_argument("--public-out", help="also write params and g to this public file")
    kg.add_argument("--N", type=int, default=None, help="secret length (default random 16-256)")
    kg.set_defaults(func=cmd_keygen)

    for name, func, helptext in (
        ("pub", cmd_pub, "derive a public key into the public file"),
        ("shared", cmd_shared, "derive the shared key from the peer's public key"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--key", required=True, help="key file from keygen")
        p.add_argument("--role", choices=("alice", "bob"), required=True)
        p.add_argument("--in", dest="in_path", required=(name == "shared"), help="public file")
        p.add_argument("--out", required=(name == "pub"), help="file to write")
        p.set_defaults(func=func)

    at = sub.add_parser("attack", help="recover the shared key from g, A, B")
    at.add_argument("--in", dest="in_path", required=True, help="public file with g, A, B")
    at.add_argument("--out", help="write the recovered key here")
    at.set_defaults(func=cmd_attack)

    serve = sub.add_parser("serve", parents=[params], help="answer one exchange over TCP")
    serve.add_argument("--listen", type=_address, default=("127.0.0.1", 7600))
    serve.add_argument("--N", type=int, default=None)
    serve.set_defaults(func=cmd_serve)

    conn = sub.add_parser("connect", parents=[params], help="initiate one exchange over TCP")
    conn.add_argument("--connect", type=_address, default=("127.0.0.1", 7600))
    conn.add_argument("--N", type=int, default=None)
    conn.set_defaults(func=cmd_connect)

    tap = sub.add_parser("tap", help="passively relay sessions and recover their keys")
    tap.add_argument("--listen", type=_address, default=("127.0.0.1", 7601))
    tap.add_argument("--upstream", type=_address, default=("127.0.0.1", 7600))
    tap.add_argument("--sessions", type=int, default=1)
    tap.set_defaults(func=cmd_tap)
    return parser


def main(argv: Optional[list] = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (ParseError, FrameError) as exc:
        code, msg = EXIT_PARSE, f"parse error: {exc}"
    except (ParamError, ProtocolStateError, NegotiationError) as exc:
        code, msg = EXIT_VALIDATION, f"validation error: {exc}"
    except AttackInfeasible as exc:
        code, msg = EXIT_INFEASIBLE, f"attack infeasible: {exc}"
    except (MismatchError, ConfirmMismatch) as exc:
        code, msg = EXIT_MISMATCH, f"internal mismatch: {exc}"
    print(msg, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
