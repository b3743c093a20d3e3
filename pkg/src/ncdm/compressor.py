"""Compressor backends, multiset serialization, size caching, and normality checks.

A backend only ever reports the length of its compressed output; decompression
is never needed. Sizes are measured in bytes throughout. All backends must be
deterministic so that cached sizes equal fresh ones.
"""

from __future__ import annotations

import bz2
import hashlib
import math
import random
import shlex
import subprocess
import threading
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .errors import BackendUnavailableError, SeparatorCollisionError
from .multiset import Element, Multiset

SEPARATOR = b"\n"
FRAMING_MODES = ("text", "varint")


class CompressorBackend:
    """Deterministic, size-only view of a real-world compressor."""

    name: str
    kind: str

    def compress_len(self, data: bytes) -> int:
        raise NotImplementedError


class Bz2Backend(CompressorBackend):
    """Block-sorting compressor; level 9 is the stock bzip2 configuration."""

    kind = "bwt-block-family"

    def __init__(self, level: int = 9) -> None:
        if not 1 <= level <= 9:
            raise ValueError(f"bz2 level must be 1..9, got {level}")
        self.level = level
        self.name = f"bz2-{level}"

    def compress_len(self, data: bytes) -> int:
        return len(bz2.compress(data, self.level))


class ZlibBackend(CompressorBackend):
    """Deflate compressor (32 KiB window); long-range redundancy is invisible to it."""

    kind = "deflate-family"

    def __init__(self, level: int = 6) -> None:
        if not 1 <= level <= 9:
            raise ValueError(f"zlib level must be 1..9, got {level}")
        self.level = level
        self.name = f"zlib-{level}"

    def compress_len(self, data: bytes) -> int:
        return len(zlib.compress(data, self.level))


class ExternalBackend(CompressorBackend):
    """Pipes data through an external command and counts the bytes it emits.

    The command must read plaintext from stdin and write the compressed
    stream to stdout.
    """

    kind = "external-command"

    def __init__(self, argv: Sequence[str]) -> None:
        if not argv:
            raise ValueError("external backend needs a non-empty command")
        self.argv = tuple(str(a) for a in argv)
        self.name = "cmd:" + " ".join(self.argv)

    def compress_len(self, data: bytes) -> int:
        try:
            proc = subprocess.run(
                self.argv,
                input=data,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                check=False,
            )
        except FileNotFoundError as exc:
            raise BackendUnavailableError(
                f"compressor command not found: {self.argv[0]!r}"
            ) from exc
        except OSError as exc:
            raise BackendUnavailableError(f"cannot run {self.argv[0]!r}: {exc}") from exc
        if proc.returncode != 0:
            msg = proc.stderr.decode(errors="replace").strip()
            raise BackendUnavailableError(
                f"{self.name} exited with status {proc.returncode}: {msg[:200]}"
            )
        return len(proc.stdout)


def get_backend(spec: str) -> CompressorBackend:
    """Build a backend from a short spec string.

    Accepted forms: ``bz2``/``bzip2`` (optionally ``bz2:LEVEL``), ``zlib`` /
    ``deflate`` (optionally ``zlib:LEVEL``), and ``cmd:COMMAND ARGS...``.
    """
    if spec.startswith("cmd:"):
        return ExternalBackend(shlex.split(spec[4:]))
    name, _, level = spec.partition(":")
    name = name.lower()
    if name in ("bz2", "bzip2"):
        return Bz2Backend(int(level)) if level else Bz2Backend()
    if name in ("zlib", "deflate", "gzip"):
        return ZlibBackend(int(level)) if level else ZlibBackend()
    raise ValueError(f"unknown backend {spec!r} (expected bz2, zlib, or cmd:...)")


def compress_len(backend: CompressorBackend, data: bytes) -> int:
    """Compressed byte length of ``data``; always positive for a sane backend."""
    n = backend.compress_len(data)
    if n <= 0:
        raise BackendUnavailableError(
            f"{backend.name} produced {n} output bytes; a compressed stream "
            "always carries a header"
        )
    return n


def encode_uvarint(n: int) -> bytes:
    """Unsigned LEB128."""
    if n < 0:
        raise ValueError("varint is unsigned")
    out = bytearray()
    while n >= 0x80:
        out.append((n & 0x7F) | 0x80)
        n >>= 7
    out.append(n)
    return bytes(out)


def decode_uvarint(data: bytes, offset: int = 0) -> tuple[int, int]:
    """Decode an unsigned LEB128 value; returns (value, next offset)."""
    result = 0
    shift = 0
    pos = offset
    while True:
        if pos >= len(data):
            raise ValueError("truncated varint")
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7


def serialize_multiset(ms: Multiset, mode: str = "text", separator: bytes = SEPARATOR) -> bytes:
    """Serialize a multiset to the byte string handed to the compressor.

    Elements appear in the multiset's canonical order, so any permutation of
    the same bag yields identical bytes. ``text`` mode joins elements with a
    separator byte and requires that no element contain it; ``varint`` mode
    prefixes each element with its LEB128-encoded length and is safe for
    arbitrary binary content.
    """
    if mode == "text":
        parts = []
        for e in ms:
            if separator in e.data:
                raise SeparatorCollisionError(
                    f"element {e.id!r} contains the separator byte "
                    f"{separator!r}; use varint framing for binary data"
                )
            parts.append(e.data)
        return separator.join(parts)
    if mode == "varint":
        return b"".join(encode_uvarint(len(e.data)) + e.data for e in ms)
    raise ValueError(f"unknown framing mode {mode!r}; expected one of {FRAMING_MODES}")


def deserialize_multiset(data: bytes, mode: str = "text", separator: bytes = SEPARATOR) -> list[bytes]:
    """Recover the element byte strings from a serialized multiset."""
    if mode == "text":
        return data.split(separator) if data else []
    if mode == "varint":
        out = []
        pos = 0
        while pos < len(data):
            length, pos = decode_uvarint(data, pos)
            if pos + length > len(data):
                raise ValueError("truncated element payload")
            out.append(data[pos : pos + length])
            pos += length
        return out
    raise ValueError(f"unknown framing mode {mode!r}")


def content_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class SizeCache:
    """Thread-safe map from content digest to compressed size.

    Safe because backends are deterministic: duplicate inserts carry the same
    value, so last-write-wins never changes an answer. ``job_count`` counts
    distinct digests that were actually compressed, which is the unit the
    performance contracts are written in.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._entries: dict[str, int] = {}
        self.lookups = 0
        self.hits = 0
        self.job_count = 0

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, digest: str) -> int | None:
        with self._lock:
            self.lookups += 1
            size = self._entries.get(digest)
            if size is not None:
                self.hits += 1
            return size

    def put(self, digest: str, size: int) -> None:
        with self._lock:
            if digest not in self._entries:
                self.job_count += 1
            self._entries[digest] = size

    def preload(self, digest: str, size: int) -> None:
        """Insert without counting a compression job (disk snapshots)."""
        with self._lock:
            self._entries[digest] = size

    def save(self, path: str | Path) -> None:
        """Snapshot as ``hex-digest<TAB>size`` lines sorted by digest."""
        lines = [f"{d}\t{s}\n" for d, s in sorted(self._entries.items())]
        Path(path).write_text("".join(lines))

    def load(self, path: str | Path) -> int:
        """Merge a snapshot file; returns the number of records read."""
        count = 0
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            digest, _, size = line.partition("\t")
            self.preload(digest.strip(), int(size))
            count += 1
        return count


def cached_compress_len(backend: CompressorBackend, cache: SizeCache, data: bytes) -> int:
    digest = content_digest(data)
    size = cache.get(digest)
    if size is None:
        size = compress_len(backend, data)
        cache.put(digest, size)
    return size


def default_tolerance(n_bytes: int) -> int:
    """Byte slack allowed in normality checks on inputs totalling ``n_bytes``."""
    return 64 + math.ceil(math.log2(1 + n_bytes))


@dataclass(frozen=True)
class NormalityViolation:
    ids: tuple[str, ...]
    slack: int
    tolerance: int

    def to_dict(self) -> dict:
        return {"ids": list(self.ids), "slack": self.slack, "tolerance": self.tolerance}


@dataclass
class NormalityReport:
    """Measured deviations of a backend from the normal-compressor properties."""

    backend: str
    checks: dict[str, int] = field(default_factory=dict)
    idempotency_violations: list[NormalityViolation] = field(default_factory=list)
    monotonicity_violations: list[NormalityViolation] = field(default_factory=list)
    symmetry_violations: list[NormalityViolation] = field(default_factory=list)
    distributivity_violations: list[NormalityViolation] = field(default_factory=list)

    PROPERTIES = ("idempotency", "monotonicity", "symmetry", "distributivity")

    def violations(self, prop: str) -> list[NormalityViolation]:
        return getattr(self, f"{prop}_violations")

    @property
    def ok(self) -> bool:
        return not any(self.violations(p) for p in self.PROPERTIES)

    def to_dict(self) -> dict:
        return {
            "backend": self.backend,
            "ok": self.ok,
            "checks": dict(self.checks),
            "violations": {
                p: [v.to_dict() for v in self.violations(p)] for p in self.PROPERTIES
            },
        }


def _frame_pair(x: Element, y: Element, mode: str) -> bytes:
    # Deliberately order-preserving: symmetry is a property of the backend,
    # and canonical multiset ordering would mask it.
    if mode == "text":
        for e in (x, y):
            if SEPARATOR in e.data:
                raise SeparatorCollisionError(
                    f"element {e.id!r} contains the separator byte; "
                    "use varint framing"
                )
        return x.data + SEPARATOR + y.data
    return encode_uvarint(len(x.data)) + x.data + encode_uvarint(len(y.data)) + y.data


def normality_report(
    backend: CompressorBackend,
    corpus: Sequence[Element],
    tolerance: int | Callable[[int], int] | None = None,
    max_singletons: int = 50,
    max_pairs: int = 100,
    max_triples: int = 50,
    seed: int = 0,
    mode: str = "text",
) -> NormalityReport:
    """Diagnose how closely a backend honors the normal-compressor properties.

    Checks, on sampled singletons/pairs/triples from the corpus, with G the
    compressed size and xy the framed concatenation in the given order:
    idempotency |G(xx) - G(x)| <= tol, monotonicity G(xy) >= G(x) - tol,
    symmetry |G(xy) - G(yx)| <= tol, and distributivity
    G(xy) + G(z) <= G(xz) + G(yz) + tol. Every recorded violation exceeds
    the tolerance for its input size.
    """
    if not corpus:
        raise ValueError("normality check needs a non-empty corpus")
    if tolerance is None:
        tol_fn: Callable[[int], int] = default_tolerance
    elif callable(tolerance):
        tol_fn = tolerance
    else:
        tol_fn = lambda _n, _t=int(tolerance): _t  # noqa: E731 - constant slack

    rng = random.Random(seed)
    report = NormalityReport(backend=backend.name)
    sizes: dict[str, int] = {}

    def g_single(e: Element) -> int:
        if e.id not in sizes:
            sizes[e.id] = compress_len(backend, e.data)
        return sizes[e.id]

    def g_pair(x: Element, y: Element) -> int:
        return compress_len(backend, _frame_pair(x, y, mode))

    singles = list(corpus)
    if len(singles) > max_singletons:
        singles = rng.sample(singles, max_singletons)
    for x in singles:
        gx = g_single(x)
        gxx = g_pair(x, x)
        tol = tol_fn(2 * len(x.data) + 1)
        slack = abs(gxx - gx)
        if slack > tol:
            report.idempotency_violations.append(NormalityViolation((x.id, x.id), slack, tol))
    report.checks["idempotency"] = len(singles)

    all_pairs = [
        (corpus[i], corpus[j])
        for i in range(len(corpus))
        for j in range(i + 1, len(corpus))
    ]
    pairs = all_pairs if len(all_pairs) <= max_pairs else rng.sample(all_pairs, max_pairs)
    for x, y in pairs:
        gxy = g_pair(x, y)
        gyx = g_pair(y, x)
        tol = tol_fn(len(x.data) + len(y.data) + 1)
        slack = abs(gxy - gyx)
        if slack > tol:
            report.symmetry_violations.append(NormalityViolation((x.id, y.id), slack, tol))
        for first, combined in ((x, gxy), (y, gyx)):
            mono_slack = g_single(first) - combined
            if mono_slack > tol:
                report.monotonicity_violations.append(
                    NormalityViolation((first.id, y.id if first is x else x.id), mono_slack, tol)
                )
    report.checks["symmetry"] = len(pairs)
    report.checks["monotonicity"] = 2 * len(pairs)

    triples = []
    if len(corpus) >= 3:
        n_triples = min(max_triples, len(corpus) * 3)
        for _ in range(n_triples):
            triples.append(tuple(rng.sample(range(len(corpus)), 3)))
    for i, j, k in triples:
        x, y, z = corpus[i], corpus[j], corpus[k]
        tol = tol_fn(len(x.data) + len(y.data) + len(z.data) + 2)
        slack = (g_pair(x, y) + g_single(z)) - (g_pair(x, z) + g_pair(y, z))
        if slack > tol:
            report.distributivity_violations.append(
                NormalityViolation((x.id, y.id, z.id), slack, tol)
            )
    report.checks["distributivity"] = len(triples)

    return report
