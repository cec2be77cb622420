"""Sparse multivariate polynomials with graded reverse lexicographic indexing.

Monomials are exponent tuples.  The coefficient vector of a polynomial of
degree at most ``d`` in ``n`` variables is laid out in the order used by
moment matrices: by total degree first, then within a degree by comparing
exponents from the last variable to the first, smaller first.  For two
variables that gives ``1, x1, x2, x1^2, x1*x2, x2^2, ...``.
"""

from __future__ import annotations

import math
import re
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

DROP_TOL = 1e-14


class BasisSizeError(OverflowError):
    pass


def basis_size(n: int, d: int) -> int:
    """Number of monomials of total degree <= d in n variables."""
    if n < 0 or d < 0:
        raise ValueError("n and d must be nonnegative")
    size = math.comb(d + n, n)
    if size > np.iinfo(np.int64).max:
        raise BasisSizeError(f"basis size C({d + n}, {n}) does not fit in int64")
    return size


def _count_exact(nv: int, deg: int) -> int:
    # monomials of total degree exactly deg in nv variables
    if nv == 0:
        return 1 if deg == 0 else 0
    return math.comb(deg + nv - 1, nv - 1)


def grevlex_key(alpha: Sequence[int]):
    return (sum(alpha), tuple(reversed(alpha)))


def grevlex_rank(alpha: Sequence[int]) -> int:
    """1-based position of ``alpha`` in the graded basis (constant is 1)."""
    alpha = tuple(int(e) for e in alpha)
    if any(e < 0 for e in alpha):
        raise ValueError(f"negative exponent in {alpha}")
    n = len(alpha)
    deg = sum(alpha)
    rank = basis_size(n, deg - 1) if deg > 0 else 0
    rem = deg
    # walk from the last variable; fewer units there means earlier
    for i in range(n - 1, 0, -1):
        for b in range(alpha[i]):
            rank += _count_exact(i, rem - b)
        rem -= alpha[i]
    return rank + 1


def grevlex_unrank(n: int, k: int) -> tuple[int, ...]:
    """Inverse of :func:`grevlex_rank`."""
    if k < 1:
        raise IndexError(f"rank {k} out of range")
    if n == 0:
        if k != 1:
            raise IndexError(f"rank {k} out of range for n=0")
        return ()
    pos = k - 1
    deg = 0
    while True:
        cnt = _count_exact(n, deg)
        if pos < cnt:
            break
        pos -= cnt
        deg += 1
        if deg > 10_000:
            raise IndexError(f"rank {k} out of range")
    alpha = [0] * n
    rem = deg
    for i in range(n - 1, 0, -1):
        b = 0
        while True:
            cnt = _count_exact(i, rem - b)
            if pos < cnt:
                break
            pos -= cnt
            b += 1
        alpha[i] = b
        rem -= b
    alpha[0] = rem
    return tuple(alpha)


class MonomialBasis:
    """All exponents of degree <= d in n variables, in graded order."""

    def __init__(self, n: int, d: int):
        self.n = n
        self.d = d
        size = basis_size(n, d)
        exps = np.zeros((size, n), dtype=np.int64)
        k = 0
        for deg in range(d + 1):
            for alpha in _exponents_of_degree(n, deg):
                exps[k] = alpha
                k += 1
        self.exps = exps
        self.exps.setflags(write=False)
        self._radix = d + 1
        self._codes = self.encode(exps)
        self._order = np.argsort(self._codes)
        self._sorted_codes = self._codes[self._order]
        self.index = {tuple(int(v) for v in row): i for i, row in enumerate(exps)}

    def __len__(self):
        return self.exps.shape[0]

    def encode(self, exps: np.ndarray) -> np.ndarray:
        exps = np.asarray(exps, dtype=np.int64)
        weights = self._radix ** np.arange(self.n, dtype=np.int64)
        return exps @ weights

    def lookup(self, exps: np.ndarray) -> np.ndarray:
        """Vectorised index lookup; exponents must lie in the basis."""
        exps = np.asarray(exps, dtype=np.int64)
        if exps.size and (exps.sum(axis=-1).max() > self.d):
            raise IndexError("exponent exceeds basis degree")
        codes = self.encode(exps)
        pos = np.searchsorted(self._sorted_codes, codes)
        return self._order[pos]

    def degrees(self) -> np.ndarray:
        return self.exps.sum(axis=1)


def _exponents_of_degree(n: int, deg: int):
    if n == 0:
        if deg == 0:
            yield ()
        return
    if n == 1:
        yield (deg,)
        return
    # last exponent ascending, recursively the prefix in the same order
    for last in range(deg + 1):
        for prefix in _exponents_of_degree(n - 1, deg - last):
            yield prefix + (last,)


@lru_cache(maxsize=64)
def monomial_basis(n: int, d: int) -> MonomialBasis:
    return MonomialBasis(n, d)


class Polynomial:
    """Immutable sparse polynomial in ``nvars`` real variables."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[tuple, float] | None = None, *, prune: bool = True):
        self.nvars = int(nvars)
        clean = {}
        if terms:
            for alpha, c in terms.items():
                alpha = tuple(int(e) for e in alpha)
                if len(alpha) != self.nvars:
                    raise ValueError(f"exponent {alpha} does not match nvars={self.nvars}")
                if any(e < 0 for e in alpha):
                    raise ValueError(f"negative exponent in {alpha}")
                c = float(c)
                if c != 0.0:
                    clean[alpha] = clean.get(alpha, 0.0) + c
            if prune and clean:
                big = max(abs(c) for c in clean.values())
                clean = {a: c for a, c in clean.items() if abs(c) > DROP_TOL * big}
        self._terms = clean
        self._hash = None

    # construction helpers
    @classmethod
    def constant(cls, nvars: int, value: float) -> Polynomial:
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, index: int) -> Polynomial:
        if not 0 <= index < nvars:
            raise IndexError(f"variable index {index} out of range for {nvars} variables")
        alpha = [0] * nvars
        alpha[index] = 1
        return cls(nvars, {tuple(alpha): 1.0})

    @classmethod
    def variables(cls, nvars: int) -> list[Polynomial]:
        return [cls.variable(nvars, i) for i in range(nvars)]

    @classmethod
    def from_coeffs(cls, nvars: int, coeffs: Sequence[float], degree: int | None = None) -> Polynomial:
        coeffs = np.asarray(coeffs, dtype=float)
        if degree is None:
            degree = 0
            while basis_size(nvars, degree) < coeffs.size:
                degree += 1
        basis = monomial_basis(nvars, degree)
        if coeffs.size != len(basis):
            raise ValueError(f"expected {len(basis)} coefficients, got {coeffs.size}")
        terms = {tuple(int(v) for v in basis.exps[i]): c for i, c in enumerate(coeffs) if c != 0.0}
        return cls(nvars, terms, prune=False)

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    @property
    def degree(self) -> int:
        if not self._terms:
            return 0
        return max(sum(a) for a in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coeff(self, alpha: Sequence[int]) -> float:
        return self._terms.get(tuple(alpha), 0.0)

    def coeffs(self, degree: int | None = None) -> np.ndarray:
        """Coefficient vector in graded order up to ``degree``."""
        if degree is None:
            degree = self.degree
        if degree < self.degree:
            raise ValueError(f"degree {degree} below polynomial degree {self.degree}")
        basis = monomial_basis(self.nvars, degree)
        out = np.zeros(len(basis))
        for alpha, c in self._terms.items():
            out[basis.index[alpha]] = c
        return out

    def term_arrays(self):
        """(exponents, coefficients) as arrays, graded order."""
        if not self._terms:
            return np.zeros((0, self.nvars), dtype=np.int64), np.zeros(0)
        items = sorted(self._terms.items(), key=lambda t: grevlex_key(t[0]))
        exps = np.array([a for a, _ in items], dtype=np.int64).reshape(len(items), self.nvars)
        cs = np.array([c for _, c in items])
        return exps, cs

    # arithmetic
    def _check(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Polynomial.constant(self.nvars, float(other))
        if not isinstance(other, Polynomial):
            return NotImplemented
        if other.nvars != self.nvars:
            raise ValueError(f"dimension mismatch: {self.nvars} vs {other.nvars} variables")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for a, c in other._terms.items():
            terms[a] = terms.get(a, 0.0) + c
        return Polynomial(self.nvars, _drop_exact_zeros(terms), prune=False)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {a: -c for a, c in self._terms.items()}, prune=False)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s: float) -> Polynomial:
        if s == 0:
            return Polynomial(self.nvars)
        return Polynomial(self.nvars, {a: s * c for a, c in self._terms.items()}, prune=False)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self.scale(float(other))
        other = self._check(other)
        if other is NotImplemented:
            return other
        terms: dict = {}
        for a, ca in self._terms.items():
            for b, cb in other._terms.items():
                key = tuple(x + y for x, y in zip(a, b))
                terms[key] = terms.get(key, 0.0) + ca * cb
        return Polynomial(self.nvars, terms)

    __rmul__ = __mul__

    def __truediv__(self, s):
        if not isinstance(s, (int, float, np.floating, np.integer)):
            return NotImplemented
        return self.scale(1.0 / float(s))

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = Polynomial.constant(self.nvars, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def allclose(self, other: Polynomial, tol: float = 1e-10) -> bool:
        diff = self - other
        return all(abs(c) <= tol for _, c in diff.items())

    # evaluation and calculus
    def __call__(self, *point):
        if len(point) == 1:
            return self.evaluate(point[0])
        return self.evaluate(point)

    def evaluate(self, point) -> float | np.ndarray:
        """Evaluate at one point (shape (nvars,)) or many (shape (k, nvars))."""
        pts = np.asarray(point, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.nvars:
            raise ValueError(f"point has {pts.shape[1]} coordinates, polynomial has {self.nvars} variables")
        out = np.zeros(pts.shape[0])
        if self._terms:
            exps, cs = self.term_arrays()
            maxdeg = exps.max(axis=0)
            powers = [_power_table(pts[:, i], int(maxdeg[i])) for i in range(self.nvars)]
            for alpha, c in zip(exps, cs):
                term = np.full(pts.shape[0], c)
                for i, e in enumerate(alpha):
                    if e:
                        term = term * powers[i][e]
                out += term
        return float(out[0]) if single else out

    def differentiate(self, var_index: int) -> Polynomial:
        if not 0 <= var_index < self.nvars:
            raise IndexError(f"variable index {var_index} out of range")
        terms = {}
        for a, c in self._terms.items():
            e = a[var_index]
            if e:
                b = list(a)
                b[var_index] = e - 1
                terms[tuple(b)] = c * e
        return Polynomial(self.nvars, terms, prune=False)

    def gradient(self) -> list[Polynomial]:
        return [self.differentiate(i) for i in range(self.nvars)]

    def compose(self, subs: Sequence[Polynomial]) -> Polynomial:
        """Replace variable i by ``subs[i]``; all substitutes share one block."""
        if len(subs) != self.nvars:
            raise ValueError(f"need {self.nvars} substitutions, got {len(subs)}")
        if not subs:
            return Polynomial(0, self._terms)
        nv = subs[0].nvars
        if any(s.nvars != nv for s in subs):
            raise ValueError("substitutes must share a common variable block")
        cache: list[dict] = [{0: Polynomial.constant(nv, 1.0)} for _ in subs]

        def power(i, e):
            table = cache[i]
            if e not in table:
                table[e] = power(i, e - 1) * subs[i]
            return table[e]

        terms: dict = {}
        for a, c in self._terms.items():
            term = Polynomial.constant(nv, c)
            for i, e in enumerate(a):
                if e:
                    term = term * power(i, e)
            for b, cb in term._terms.items():
                terms[b] = terms.get(b, 0.0) + cb
        return Polynomial(nv, terms)

    def embed(self, nvars: int, positions: Sequence[int]) -> Polynomial:
        """Re-express in a larger block; variable i moves to ``positions[i]``."""
        if len(positions) != self.nvars:
            raise ValueError("one position per variable required")
        terms = {}
        for a, c in self._terms.items():
            b = [0] * nvars
            for i, e in zip(positions, a):
                b[i] += e
            terms[tuple(b)] = terms.get(tuple(b), 0.0) + c
        return Polynomial(nvars, terms, prune=False)

    def partial_eval(self, indices: Sequence[int], values: Sequence[float]) -> Polynomial:
        """Fix the listed variables to numbers; the result drops them."""
        fixed = dict(zip(indices, (float(v) for v in values)))
        keep = [i for i in range(self.nvars) if i not in fixed]
        terms: dict = {}
        for a, c in self._terms.items():
            val = c
            for i, v in fixed.items():
                if a[i]:
                    val *= v ** a[i]
            key = tuple(a[i] for i in keep)
            terms[key] = terms.get(key, 0.0) + val
        return Polynomial(len(keep), terms)

    def degree_in(self, indices: Iterable[int]) -> int:
        idx = list(indices)
        if not self._terms:
            return 0
        return max(sum(a[i] for i in idx) for a in self._terms)

    # text
    def to_string(self, names: Sequence[str] | None = None, precision: int | None = None) -> str:
        """Readable text; the default shortest round-trip digits re-parse exactly."""
        if names is None:
            names = [f"x{i + 1}" for i in range(self.nvars)]
        if not self._terms:
            return "0"
        exps, cs = self.term_arrays()
        parts = []
        for alpha, c in zip(exps, cs):
            mono = "*".join(
                names[i] if e == 1 else f"{names[i]}^{e}" for i, e in enumerate(alpha) if e
            )
            mag = abs(c)
            if precision is None:
                num = repr(float(mag))
                num = num[:-2] if num.endswith(".0") else num
            else:
                num = f"{mag:.{precision}g}"
            if mono:
                body = mono if mag == 1.0 else f"{num}*{mono}"
            else:
                body = num
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"Polynomial({self.nvars}, {self.to_string()!r})"


def _drop_exact_zeros(terms):
    return {a: c for a, c in terms.items() if c != 0.0}


def _power_table(v, maxdeg):
    table = [np.ones_like(v)]
    for _ in range(maxdeg):
        table.append(table[-1] * v)
    return table


# ---------------------------------------------------------------------------
# text syntax

class PolynomialSyntaxError(ValueError):
    def __init__(self, message: str, offset: int = 0, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(message)


class UnknownIdentifierError(PolynomialSyntaxError):
    def __init__(self, name: str, offset: int = 0, text: str = ""):
        self.name = name
        super().__init__(f"unknown identifier '{name}'", offset, text)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*^()/]))"
)


def _tokenize(text):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            off = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise PolynomialSyntaxError(f"unexpected character {text[off]!r}", off, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, names, env):
        self.text = text
        self.names = {n: i for i, n in enumerate(names)}
        self.nvars = len(names)
        self.env = env or {}
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise PolynomialSyntaxError(msg, tok[2], self.text)

    def parse(self):
        if self.peek()[0] == "end":
            self.error("empty expression")
        p = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return p

    def expr(self):
        sign = 1.0
        if self.peek()[1] in "+-" and self.peek()[0] == "op":
            sign = -1.0 if self.take()[1] == "-" else 1.0
        p = self.term().scale(sign)
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val == "*":
                self.take()
                p = p * self.factor()
            elif kind == "op" and val == "/":
                tok = self.take()
                q = self.factor()
                if q.degree != 0 or q.is_zero():
                    self.error("division only by nonzero constants", tok)
                p = p / q.coeff((0,) * self.nvars)
            elif kind in ("num", "name") or (kind == "op" and val == "("):
                p = p * self.factor()  # implicit product
            else:
                return p

    def factor(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, val, off = self.take()
            if kind != "num" or not re.fullmatch(r"\d+", val):
                raise PolynomialSyntaxError("exponent must be a nonnegative integer", off, self.text)
            base = base ** int(val)
        return base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return Polynomial.constant(self.nvars, float(val))
        if kind == "name":
            if val in self.names:
                return Polynomial.variable(self.nvars, self.names[val])
            if val in self.env:
                return self.env[val]
            raise UnknownIdentifierError(val, off, self.text)
        if kind == "op" and val == "(":
            p = self.expr()
            if self.peek()[1] != ")":
                self.error("expected ')'")
            self.take()
            return p
        if kind == "op" and val == "-":
            return -self.factor()
        raise PolynomialSyntaxError(
            "unexpected end of expression" if kind == "end" else f"unexpected {val!r}", off, self.text
        )


def parse_polynomial(text: str, names: Sequence[str], env: Mapping[str, Polynomial] | None = None) -> Polynomial:
    """Parse ``0.25 - a1^2 - x1^2`` style text over the named variables.

    ``env`` maps extra identifiers to polynomials over the same variables
    (used for named sub-expressions such as a control law ``u``).
    """
    return _Parser(text, list(names), env).parse()
