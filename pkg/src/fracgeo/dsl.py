"""A small prefix language for non-negative test functions.

Example::

    sum(gaussian([0, 0], 0.5, 1),
        affine([[1, 1], [0, 1]], [0.5, 0], ball_indicator([0, 0], 1, 2)))

Primitives are ``gaussian(center, sigma, amplitude)``,
``box_indicator(corner_lo, corner_hi, amplitude)`` and
``ball_indicator(center, radius, amplitude)``; combinators are ``sum``,
``max``, ``affine(matrix[, shift], expr)`` (push-forward, value
``expr(A^{-1}(x - shift))``) and ``scale_arg(r, expr)`` (value ``expr(r x)``).
Amplitudes default to 1.  ``#`` starts a comment; whitespace is ignored.
"""

import math
import re
import warnings
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np
from scipy import stats

from .grid import GridFunction, tree_sum

GAUSSIAN_CUTOFF = 6.0  # in units of sigma


class SpecParseError(ValueError):
    def __init__(self, message, line, col):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class SpecError(ValueError):
    """Semantically invalid expression (bad parameters, dimension clash)."""


# ---------------------------------------------------------------- nodes

class Node:
    dim = None

    def __call__(self, pts):
        raise NotImplementedError

    def support(self):
        """Axis-aligned bounding box (lo, hi) of the support."""
        raise NotImplementedError

    def primitives(self):
        yield self


def _vec(v, name):
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if a.ndim != 1 or not np.all(np.isfinite(a)):
        raise SpecError(f"{name} must be a finite vector")
    return a


def _amp(a):
    a = float(a)
    if not math.isfinite(a) or a < 0:
        raise SpecError("amplitude must be finite and >= 0")
    return a


@dataclass(eq=False)
class Gaussian(Node):
    center: np.ndarray
    sigma: float
    amplitude: float = 1.0

    def __post_init__(self):
        self.center = _vec(self.center, "gaussian center")
        self.sigma = float(self.sigma)
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise SpecError("gaussian sigma must be positive")
        self.amplitude = _amp(self.amplitude)
        self.dim = len(self.center)

    def __call__(self, pts):
        r2 = np.sum((pts - self.center) ** 2, axis=-1) / self.sigma ** 2
        out = self.amplitude * np.exp(-0.5 * r2)
        return np.where(r2 <= GAUSSIAN_CUTOFF ** 2, out, 0.0)

    def support(self):
        w = GAUSSIAN_CUTOFF * self.sigma
        return self.center - w, self.center + w

    def tail_mass(self):
        """Mass discarded by the cutoff."""
        full = self.amplitude * (2 * math.pi * self.sigma ** 2) ** (self.dim / 2)
        return full * stats.chi2.sf(GAUSSIAN_CUTOFF ** 2, self.dim)


@dataclass(eq=False)
class BoxIndicator(Node):
    lo: np.ndarray
    hi: np.ndarray
    amplitude: float = 1.0

    def __post_init__(self):
        self.lo = _vec(self.lo, "box corner")
        self.hi = _vec(self.hi, "box corner")
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise SpecError("box corners must satisfy lo < hi componentwise")
        self.amplitude = _amp(self.amplitude)
        self.dim = len(self.lo)

    def __call__(self, pts):
        inside = np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)
        return np.where(inside, self.amplitude, 0.0)

    def support(self):
        return self.lo.copy(), self.hi.copy()


@dataclass(eq=False)
class BallIndicator(Node):
    center: np.ndarray
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        self.center = _vec(self.center, "ball center")
        self.radius = float(self.radius)
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise SpecError("ball radius must be positive")
        self.amplitude = _amp(self.amplitude)
        self.dim = len(self.center)

    def __call__(self, pts):
        inside = np.sum((pts - self.center) ** 2, axis=-1) <= self.radius ** 2
        return np.where(inside, self.amplitude, 0.0)

    def support(self):
        return self.center - self.radius, self.center + self.radius


@dataclass(eq=False)
class Combine(Node):
    op: str
    children: list

    def __post_init__(self):
        if not self.children:
            raise SpecError(f"{self.op} needs at least one argument")
        dims = {c.dim for c in self.children}
        if len(dims) != 1:
            raise SpecError(f"{self.op}: arguments have different dimensions")
        self.dim = dims.pop()

    def __call__(self, pts):
        vals = [c(pts) for c in self.children]
        if self.op == "sum":
            return np.sum(vals, axis=0)
        return np.max(vals, axis=0)

    def support(self):
        boxes = [c.support() for c in self.children]
        return (np.min([b[0] for b in boxes], axis=0),
                np.max([b[1] for b in boxes], axis=0))

    def primitives(self):
        for c in self.children:
            yield from c.primitives()


@dataclass(eq=False)
class Affine(Node):
    matrix: np.ndarray
    shift: np.ndarray
    child: Node

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        d = self.child.dim
        if a.shape != (d, d) or not np.all(np.isfinite(a)):
            raise SpecError(f"affine matrix must be {d}x{d} and finite")
        if abs(np.linalg.det(a)) < 1e-14:
            raise SpecError("affine matrix must be invertible")
        self.matrix = a
        self.shift = np.zeros(d) if self.shift is None else _vec(self.shift, "shift")
        if self.shift.shape != (d,):
            raise SpecError("affine shift has wrong length")
        self._inv = np.linalg.inv(a)
        self.dim = d

    def __call__(self, pts):
        return self.child((pts - self.shift) @ self._inv.T)

    def support(self):
        lo, hi = self.child.support()
        corners = np.array([np.where(np.array(c) == 0, lo, hi)
                            for c in product((0, 1), repeat=self.dim)])
        img = corners @ self.matrix.T + self.shift
        return img.min(axis=0), img.max(axis=0)

    def primitives(self):
        yield from self.child.primitives()


@dataclass(eq=False)
class ScaleArg(Node):
    r: float
    child: Node

    def __post_init__(self):
        self.r = float(self.r)
        if not (math.isfinite(self.r) and self.r > 0):
            raise SpecError("scale_arg factor must be positive")
        self.dim = self.child.dim

    def __call__(self, pts):
        return self.child(self.r * pts)

    def support(self):
        lo, hi = self.child.support()
        return lo / self.r, hi / self.r

    def primitives(self):
        yield from self.child.primitives()


FunctionSpec = Node


# ---------------------------------------------------------------- parser

_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<punct>[(),\[\]])
""", re.VERBOSE)


def _tokenize(text):
    pos = 0
    line, line_start = 1, 0
    toks = []
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            raise SpecParseError(f"unexpected character {text[pos]!r}",
                                 line, pos - line_start + 1)
        kind = mt.lastgroup
        val = mt.group()
        if kind != "ws":
            toks.append((kind, val, line, pos - line_start + 1))
        for k, ch in enumerate(val):
            if ch == "\n":
                line += 1
                line_start = pos + k + 1
        pos = mt.end()
    toks.append(("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, value=None):
        tok = self.toks[self.i]
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind
            got = tok[1] or "end of input"
            raise SpecParseError(f"expected {want}, found {got!r}", tok[2], tok[3])
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        self.take("eof")
        return node

    def value(self):
        tok = self.peek()
        if tok[0] == "num":
            self.i += 1
            return float(tok[1])
        if tok[1] == "[":
            return self.vector()
        if tok[0] == "name":
            return self.expr()
        raise SpecParseError(f"unexpected {tok[1] or 'end of input'!r}", tok[2], tok[3])

    def vector(self):
        self.take(value="[")
        items = []
        if self.peek()[1] != "]":
            items.append(self.value())
            while self.peek()[1] == ",":
                self.i += 1
                items.append(self.value())
        self.take(value="]")
        if any(isinstance(v, Node) for v in items):
            tok = self.peek()
            raise SpecParseError("expressions are not allowed inside vectors", tok[2], tok[3])
        return items

    def expr(self):
        name_tok = self.take("name")
        self.take(value="(")
        args = []
        if self.peek()[1] != ")":
            args.append(self.value())
            while self.peek()[1] == ",":
                self.i += 1
                args.append(self.value())
        self.take(value=")")
        try:
            return _build(name_tok[1], args)
        except (SpecError, TypeError, ValueError) as exc:
            if isinstance(exc, SpecParseError):
                raise
            raise SpecParseError(f"{name_tok[1]}: {exc}", name_tok[2], name_tok[3]) from None


def _build(name, args):
    nodes = [a for a in args if isinstance(a, Node)]
    plain = [a for a in args if not isinstance(a, Node)]
    if name == "gaussian":
        if nodes or not 2 <= len(plain) <= 3:
            raise SpecError("expected gaussian(center, sigma[, amplitude])")
        return Gaussian(*plain)
    if name == "box_indicator":
        if nodes or not 2 <= len(plain) <= 3:
            raise SpecError("expected box_indicator(lo, hi[, amplitude])")
        return BoxIndicator(*plain)
    if name == "ball_indicator":
        if nodes or not 2 <= len(plain) <= 3:
            raise SpecError("expected ball_indicator(center, radius[, amplitude])")
        return BallIndicator(*plain)
    if name in ("sum", "max"):
        if plain or not nodes:
            raise SpecError(f"{name} takes expressions only")
        return Combine(name, nodes)
    if name == "affine":
        if len(nodes) != 1 or not isinstance(args[-1], Node) or len(plain) not in (1, 2):
            raise SpecError("expected affine(matrix[, shift], expr)")
        shift = plain[1] if len(plain) == 2 else None
        return Affine(plain[0], shift, nodes[0])
    if name == "scale_arg":
        if len(nodes) != 1 or len(plain) != 1 or not isinstance(args[-1], Node):
            raise SpecError("expected scale_arg(r, expr)")
        return ScaleArg(plain[0], nodes[0])
    raise SpecError(f"unknown function {name!r}")


def parse_spec(text) -> Node:
    """Parse one expression; errors carry line and column."""
    return _Parser(text).parse()


def read_spec(path) -> Node:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- sampling

MASS_TOLERANCE = 1e-6


def sample_spec(spec: Node, n, L, m) -> GridFunction:
    """Evaluate spec at the cell centers of the grid on [-L, L]^n."""
    if spec.dim != n:
        raise SpecError(f"expression has dimension {spec.dim}, grid has {n}")
    if not (L > 0 and m > 0):
        raise ValueError("L and m must be positive")
    grid = GridFunction(n, float(L), int(m), np.zeros((int(m),) * n))
    pts = grid.centers().reshape(-1, n)
    vals = np.asarray(spec(pts), dtype=float).reshape(grid.values.shape)
    meta = {"gaussian_tail_mass": sum(
        pr.tail_mass() for pr in spec.primitives() if isinstance(pr, Gaussian))}
    outside = _mass_outside(spec, grid)
    inside = tree_sum(vals) * grid.cell_volume
    meta["truncated_mass"] = outside
    if outside > MASS_TOLERANCE * max(inside + outside, 1e-300):
        meta["truncation_warning"] = True
        warnings.warn(f"function support exceeds the box; mass {outside:.3g} dropped",
                      stacklevel=2)
    return grid.with_values(vals, **meta)


def _mass_outside(spec, grid, max_cells=4_000_000):
    lo, hi = spec.support()
    if np.all(lo >= -grid.L) and np.all(hi <= grid.L):
        return 0.0
    d = grid.spacing
    ext = max(float(np.max(-lo)), float(np.max(hi)), grid.L)
    k = int(np.ceil((ext - grid.L) / d)) + 1
    mm = grid.m + 2 * k
    while mm ** grid.n > max_cells:
        # too fine for a direct count; a coarser lattice suffices for a warning
        d *= 2
        k = int(np.ceil((ext - grid.L) / d)) + 1
        mm = int(round(2 * grid.L / d)) + 2 * k
    Lx = grid.L + k * d
    ax = -Lx + d * (np.arange(mm) + 0.5)
    pts = np.stack(np.meshgrid(*([ax] * grid.n), indexing="ij"), -1).reshape(-1, grid.n)
    outside = np.any(np.abs(pts) > grid.L, axis=1)
    vals = spec(pts[outside])
    return tree_sum(vals) * d ** grid.n
