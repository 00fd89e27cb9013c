"""Finite symbol strings and reproducible prefix-consistent sequence sources.

A sequence is never materialized as an infinite object: sources hand out
finite prefixes, and for every deterministic source the prefix of length n
is a prefix of the prefix of length m > n.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

SEQ_SCHEMA = "seq/v1"

SOURCE_KINDS = (
    "born_sampler",
    "champernowne",
    "constant",
    "periodic",
    "file",
    "os_entropy",
)


@dataclass(frozen=True)
class SymbolString:
    """Immutable finite string over the alphabet {0, ..., k-1}."""

    alphabet_size: int
    symbols: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.alphabet_size < 2:
            raise ValueError(f"alphabet size must be >= 2, got {self.alphabet_size}")
        if not isinstance(self.symbols, tuple):
            object.__setattr__(self, "symbols", tuple(self.symbols))
        k = self.alphabet_size
        for s in self.symbols:
            if not 0 <= s < k:
                raise ValueError(f"symbol {s} outside alphabet [0, {k})")

    def __len__(self) -> int:
        return len(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    def __iter__(self):
        return iter(self.symbols)

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.symbols, dtype=np.int64)

    def is_prefix_of(self, other: "SymbolString") -> bool:
        return (
            self.alphabet_size == other.alphabet_size
            and len(self) <= len(other)
            and other.symbols[: len(self)] == self.symbols
        )

    def to_text(self) -> str:
        """Digit string for bases <= 10, comma-separated integers beyond."""
        if self.alphabet_size <= 10:
            return "".join(str(s) for s in self.symbols)
        return ",".join(str(s) for s in self.symbols)

    @staticmethod
    def from_text(text: str, alphabet_size: int) -> "SymbolString":
        text = text.strip()
        if not text:
            return SymbolString(alphabet_size, ())
        if alphabet_size <= 10:
            syms = tuple(int(c) for c in text)
        else:
            syms = tuple(int(t) for t in text.split(","))
        return SymbolString(alphabet_size, syms)


def bits(text: str) -> SymbolString:
    """Shorthand for a base-2 SymbolString from a literal like "0110"."""
    return SymbolString.from_text(text, 2)


def champernowne_text(base: int, n: int, start_at_one: bool = False) -> str:
    """First n digits of the base-k concatenation 0,1,2,... (or 1,2,3,...)."""
    if base < 2:
        raise ValueError(f"base must be >= 2, got {base}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    digits = "0123456789abcdefghijklmnopqrstuvwxyz"
    chunks: list[str] = []
    total = 0
    t = 1 if start_at_one else 0
    while total < n:
        if base == 2:
            numeral = format(t, "b")
        elif base == 10:
            numeral = str(t)
        else:
            m, numeral = t, ""
            while True:
                m, r = divmod(m, base)
                numeral = digits[r] + numeral
                if m == 0:
                    break
        chunks.append(numeral)
        total += len(numeral)
        t += 1
    return "".join(chunks)[:n]


def champernowne(base: int, n: int, start_at_one: bool = False) -> SymbolString:
    """First n digits of Champernowne's expansion in the given base."""
    text = champernowne_text(base, n, start_at_one)
    if base <= 10:
        syms = tuple(int(c) for c in text)
    else:
        raise ValueError("champernowne supported for bases 2..10")
    return SymbolString(base, syms)


def champernowne_digit_at(base: int, position: int, start_at_one: bool = False) -> int:
    """Digit at a given position, by positional arithmetic over numeral lengths.

    Independent of the concatenating generator; used as its oracle.
    """
    if position < 0:
        raise ValueError("position must be >= 0")
    t = 1 if start_at_one else 0
    pos = position
    while True:
        numeral_len = 1 if t == 0 else len(_to_base(t, base))
        if pos < numeral_len:
            return int(_to_base(t, base)[pos], 36)
        pos -= numeral_len
        t += 1


def _to_base(t: int, base: int) -> str:
    digits = "0123456789abcdefghijklmnopqrstuvwxyz"
    if t == 0:
        return "0"
    out = ""
    while t:
        t, r = divmod(t, base)
        out = digits[r] + out
    return out


def sample_indices(
    probs: Sequence[float], n: int, seed: int, chunk_size: Optional[int] = None
) -> np.ndarray:
    """n i.i.d. draws from a finite distribution, inverse-CDF over Philox streams.

    Chunked draws use the counter-based key (seed, chunk_index), so the result
    depends only on (probs, n, seed, chunk_size), never on thread count.
    """
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or len(p) == 0:
        raise ValueError("probs must be a non-empty 1-d sequence")
    if np.any(p < -1e-12):
        raise ValueError("probabilities must be non-negative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities must sum to 1, got {p.sum()!r}")
    if n < 0:
        raise ValueError("n must be >= 0")
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    if chunk_size is None:
        chunk_size = n
    out = np.empty(n, dtype=np.int64)
    pos = 0
    chunk = 0
    while pos < n:
        take = min(chunk_size, n - pos)
        gen = np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), chunk]))
        u = gen.random(take)
        out[pos : pos + take] = np.searchsorted(cdf, u, side="right")
        pos += take
        chunk += 1
    return out


class SequenceSource:
    """A stateful cursor over a (conceptually infinite) symbol sequence.

    For a fixed (kind, parameters, seed) the emitted prefixes are
    reproducible bit for bit, except for kind "os_entropy".  Requesting n
    then m > n symbols yields an extension of the first request.  Sources
    are not shareable across threads; use clone() to parallelize.
    """

    def __init__(self, kind: str, alphabet_size: int = 2, seed: int = 0, **parameters):
        if kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {kind!r}; expected one of {SOURCE_KINDS}")
        if alphabet_size < 2:
            raise ValueError("alphabet_size must be >= 2")
        self.kind = kind
        self.alphabet_size = alphabet_size
        self.seed = seed
        self.parameters = dict(parameters)
        self._cache: list[int] = []
        self._validate()

    def _validate(self) -> None:
        p = self.parameters
        if self.kind == "constant":
            sym = p.setdefault("symbol", 0)
            if not 0 <= sym < self.alphabet_size:
                raise ValueError(f"constant symbol {sym} outside alphabet")
        elif self.kind == "periodic":
            pat = p.get("pattern")
            if not pat:
                raise ValueError("periodic source requires a non-empty pattern")
            p["pattern"] = tuple(int(s) for s in pat)
            for s in p["pattern"]:
                if not 0 <= s < self.alphabet_size:
                    raise ValueError(f"pattern symbol {s} outside alphabet")
        elif self.kind == "born_sampler":
            probs = p.setdefault("probs", [0.5, 0.5])
            if len(probs) > self.alphabet_size:
                raise ValueError("more outcomes than alphabet symbols")
        elif self.kind == "champernowne":
            p.setdefault("start_at_one", False)
        elif self.kind == "file":
            if "path" not in p:
                raise ValueError("file source requires path=")

    def clone(self) -> "SequenceSource":
        """Fresh cursor with the same configuration (and seed)."""
        return SequenceSource(self.kind, self.alphabet_size, self.seed, **self.parameters)

    def prefix(self, n: int) -> SymbolString:
        """The first n symbols of the sequence."""
        if n < 0:
            raise ValueError(f"n must be >= 0, got {n}")
        if n > len(self._cache):
            self._extend(n)
        return SymbolString(self.alphabet_size, tuple(self._cache[:n]))

    def _extend(self, n: int) -> None:
        k = self.alphabet_size
        p = self.parameters
        if self.kind == "constant":
            self._cache.extend([p["symbol"]] * (n - len(self._cache)))
        elif self.kind == "periodic":
            pat = p["pattern"]
            self._cache = [pat[i % len(pat)] for i in range(n)]
        elif self.kind == "champernowne":
            text = champernowne_text(k, n, p["start_at_one"])
            self._cache = [int(c, 36) for c in text]
        elif self.kind == "born_sampler":
            draws = sample_indices(p["probs"], n, self.seed, p.get("chunk_size"))
            self._cache = draws.tolist()
        elif self.kind == "file":
            sigma = read_sequence_file(p["path"])
            if sigma.alphabet_size != k:
                raise ValueError(
                    f"file alphabet {sigma.alphabet_size} != source alphabet {k}"
                )
            if n > len(sigma):
                raise ValueError(f"file holds {len(sigma)} symbols, {n} requested")
            self._cache = list(sigma.symbols[:n])
        elif self.kind == "os_entropy":
            self._cache.extend(_os_entropy_symbols(k, n - len(self._cache)))

    def __repr__(self) -> str:
        return f"SequenceSource({self.kind!r}, k={self.alphabet_size}, seed={self.seed})"


def _os_entropy_symbols(k: int, n: int) -> list[int]:
    """Uniform symbols from OS entropy via rejection sampling on bytes."""
    if k > 256:
        raise ValueError("os_entropy supports alphabets up to 256 symbols")
    limit = 256 - (256 % k)
    out: list[int] = []
    try:
        while len(out) < n:
            for b in os.urandom(2 * (n - len(out)) + 8):
                if b < limit:
                    out.append(b % k)
                    if len(out) == n:
                        break
    except (OSError, NotImplementedError) as exc:
        raise OSError(f"OS entropy unavailable: {exc}") from exc
    return out


def truncate(source: SequenceSource, n: int) -> SymbolString:
    """First n symbols of the source; deterministic per the source contract."""
    return source.prefix(n)


def block_frequencies(
    sigma: SymbolString, block_len: int, disjoint: bool = False
) -> dict[str, float]:
    """Relative frequency of each length-l block.

    Overlapping windows by default (the normality convention); disjoint
    blocks on request.  All k^l blocks are keyed when that table is small,
    otherwise only observed blocks appear.
    """
    if block_len < 1:
        raise ValueError(f"block length must be >= 1, got {block_len}")
    if block_len > len(sigma):
        raise ValueError(f"block length {block_len} exceeds string length {len(sigma)}")
    k = sigma.alphabet_size
    counts = _window_counts(sigma.array, k, block_len, disjoint)
    total = counts.sum()
    freqs: dict[str, float] = {}
    if k**block_len <= 65536:
        for code in range(k**block_len):
            freqs[_block_key(code, k, block_len)] = counts[code] / total
    else:
        for code in np.nonzero(counts)[0]:
            freqs[_block_key(int(code), k, block_len)] = counts[code] / total
    return freqs


def _window_counts(arr: np.ndarray, k: int, block_len: int, disjoint: bool) -> np.ndarray:
    """Occurrence counts of every length-l block, encoded base k."""
    n = len(arr)
    codes = np.zeros(n - block_len + 1, dtype=np.int64)
    for j in range(block_len):
        codes = codes * k + arr[j : n - block_len + 1 + j]
    if disjoint:
        codes = codes[::block_len]
    return np.bincount(codes, minlength=k**block_len)


def _block_key(code: int, k: int, block_len: int) -> str:
    syms = []
    for _ in range(block_len):
        code, r = divmod(code, k)
        syms.append(r)
    syms.reverse()
    if k <= 10:
        return "".join(str(s) for s in syms)
    return ",".join(str(s) for s in syms)


def write_sequence_file(path: str, sigma: SymbolString) -> None:
    with open(path, "w") as f:
        f.write(f"{SEQ_SCHEMA} k={sigma.alphabet_size} n={len(sigma)}\n")
        f.write(sigma.to_text())
        f.write("\n")


def read_sequence_file(path: str) -> SymbolString:
    with open(path) as f:
        header = f.readline().strip()
        body = f.read()
    parts = header.split()
    if not parts or parts[0] != SEQ_SCHEMA:
        raise ValueError(f"not a {SEQ_SCHEMA} file: header {header!r}")
    fields = dict(p.split("=", 1) for p in parts[1:])
    k = int(fields["k"])
    n = int(fields["n"])
    text = "".join(body.split()) if k <= 10 else ",".join(body.split())
    sigma = SymbolString.from_text(text, k)
    if len(sigma) != n:
        raise ValueError(f"header says n={n} but file holds {len(sigma)} symbols")
    return sigma
