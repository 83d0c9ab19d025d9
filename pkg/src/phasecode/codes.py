"""Binary phase codes and the shift/correlation primitives everything else builds on.

A phase code is a length-N vector of bipolar symbols (+1/-1) stored as an
int8 numpy array so correlation arithmetic works directly on the symbols.
The aperiodic shift convention is fixed here once and used everywhere:
``shifted(s, i)[n] = s[n + i]`` with zero padding outside [0, N-1], which
makes ``x . shifted(s, i)`` the aperiodic cross-correlation at lag i and
gives the adjoint identity  <x, shifted(s, i)> = <shifted(x, -i), s>.
"""

from __future__ import annotations

import numpy as np

# A PhaseCode is an int8 ndarray of +1/-1 symbols, length >= 2.
PhaseCode = np.ndarray

CODE_DTYPE = np.int8


class ParseError(ValueError):
    """Raised when code text cannot be parsed; carries the offending token index."""

    def __init__(self, message: str, token_index: int | None = None):
        super().__init__(message)
        self.token_index = token_index


def as_code(values) -> PhaseCode:
    """Validate and return a phase code as an int8 array.

    Accepts any sequence of +1/-1 values. Rejects anything that is not
    bipolar or shorter than 2 symbols.
    """
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"phase code must be one-dimensional, got shape {arr.shape}")
    if arr.size < 2:
        raise ValueError(f"phase code needs at least 2 symbols, got {arr.size}")
    code = arr.astype(CODE_DTYPE)
    if not np.all(np.abs(code) == 1) or not np.allclose(arr, code):
        raise ValueError("phase code symbols must all be +1 or -1")
    return code


def code_key(s: np.ndarray) -> bytes:
    """Canonical hashable key for a code (exact symbol sequence)."""
    return np.ascontiguousarray(s, dtype=CODE_DTYPE).tobytes()


def shifted(s: PhaseCode, i: int) -> np.ndarray:
    """Aperiodic shift of ``s`` by lag ``i``: entry n is s[n+i], zero-padded.

    Equivalent to applying the lag-i shift matrix without materializing it.
    """
    n = len(s)
    if abs(i) > n - 1:
        raise ValueError(f"lag {i} out of range for code length {n}")
    out = np.zeros(n, dtype=np.float64)
    if i >= 0:
        out[: n - i] = s[i:]
    else:
        out[-i:] = s[: n + i]
    return out


def cross_correlation(x: np.ndarray, s: PhaseCode, i: int) -> float:
    """Inner product of ``x`` with ``shifted(s, i)`` (aperiodic correlation at lag i)."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) != len(s):
        raise ValueError(f"length mismatch: filter {len(x)} vs code {len(s)}")
    return float(x @ shifted(s, i))


def autocorrelation(s: PhaseCode) -> np.ndarray:
    """Aperiodic autocorrelation r(d) = sum_t s[t]*s[t+d] for d = 0..N-1."""
    s = np.asarray(s, dtype=np.float64)
    n = len(s)
    r = np.empty(n)
    r[0] = s @ s
    for d in range(1, n):
        r[d] = s[: n - d] @ s[d:]
    return r


def random_code(N: int, rng: np.random.Generator) -> PhaseCode:
    """One code with symbols drawn independently and uniformly from {+1, -1}."""
    if N < 2:
        raise ValueError(f"code length must be >= 2, got {N}")
    return (2 * rng.integers(0, 2, size=N, dtype=np.int8) - 1).astype(CODE_DTYPE)


def random_codes(count: int, N: int, rng: np.random.Generator) -> np.ndarray:
    """(count, N) matrix of independent uniform random codes (batch form)."""
    if N < 2:
        raise ValueError(f"code length must be >= 2, got {N}")
    return (2 * rng.integers(0, 2, size=(count, N), dtype=np.int8) - 1).astype(CODE_DTYPE)


def _is_odd_prime(n: int) -> bool:
    if n < 3 or n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def legendre_code(N: int) -> PhaseCode:
    """Legendre sequence of odd prime length N.

    Symbol 0 is +1; symbol n >= 1 is +1 when n is a quadratic residue mod N
    and -1 otherwise.
    """
    if not _is_odd_prime(N):
        raise ValueError(f"Legendre code length must be an odd prime, got {N}")
    residues = {(k * k) % N for k in range(1, N)}
    code = np.empty(N, dtype=CODE_DTYPE)
    code[0] = 1
    for n in range(1, N):
        code[n] = 1 if n in residues else -1
    return code


def parse_code(text: str) -> PhaseCode:
    """Parse a comma- or whitespace-separated list of +1/-1/1 tokens."""
    tokens = text.replace(",", " ").split()
    if not tokens:
        raise ParseError("empty code text")
    symbols = []
    for pos, tok in enumerate(tokens):
        if tok in ("+1", "1"):
            symbols.append(1)
        elif tok == "-1":
            symbols.append(-1)
        else:
            raise ParseError(f"bad token {tok!r} at position {pos}", token_index=pos)
    return as_code(symbols)


def format_code(s: PhaseCode) -> str:
    """Comma-separated "+1"/"-1" text form; inverse of parse_code."""
    return ",".join("+1" if v > 0 else "-1" for v in s)
