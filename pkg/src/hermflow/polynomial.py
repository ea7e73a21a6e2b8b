"""Exact multivariate polynomial arithmetic over the rationals.

Representation: a polynomial in `dim` variables is a mapping from
multi-indices (exponent tuples) to nonzero Fraction coefficients. The zero
polynomial has an empty mapping and degree -inf. All arithmetic is exact;
floats never appear in coefficients.

JSON form (term list in graded-lex order, coefficients as strings so
arbitrary precision survives):

    {"dim": 3, "terms": [{"beta": [0,1,0], "num": "1", "den": "2"}, ...]}
"""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

from .multiindex import (
    MultiIndex,
    as_fraction,
    falling_factorial,
    grlex_key,
    mi_add,
    mi_sub,
    unit,
    validate,
)

Terms = Dict[MultiIndex, Fraction]

NEG_INF = float("-inf")


class Polynomial:
    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Terms | None = None):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)
        clean: Terms = {}
        if terms:
            for beta, c in terms.items():
                b = validate(beta)
                if len(b) != self.dim:
                    raise ValueError(f"exponent arity {len(b)} != dim {self.dim}")
                c = as_fraction(c)
                if c != 0:
                    clean[b] = c
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(dim: int) -> "Polynomial":
        return Polynomial(dim, {})

    @staticmethod
    def constant(dim: int, c) -> "Polynomial":
        return Polynomial(dim, {tuple([0] * dim): as_fraction(c)})

    @staticmethod
    def monomial(beta: Sequence[int], c=1) -> "Polynomial":
        b = validate(beta)
        return Polynomial(len(b), {b: as_fraction(c)})

    @staticmethod
    def variable(dim: int, axis: int) -> "Polynomial":
        return Polynomial(dim, {unit(dim, axis): Fraction(1)})

    # -- basic queries ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self):
        """Total degree; -inf for the zero polynomial."""
        if not self.terms:
            return NEG_INF
        return max(sum(b) for b in self.terms)

    def coeff(self, beta: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(beta), Fraction(0))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.dim == other.dim
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        if not self.terms:
            return "Polynomial(0)"
        bits = [f"{c}*y^{b}" for b, c in self.sorted_terms()]
        return "Polynomial(" + " + ".join(bits) + ")"

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "Polynomial"):
        if self.dim != other.dim:
            raise ValueError(f"dim mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        out = dict(self.terms)
        for b, c in other.terms.items():
            s = out.get(b, Fraction(0)) + c
            if s == 0:
                out.pop(b, None)
            else:
                out[b] = s
        p = Polynomial.__new__(Polynomial)
        p.dim, p.terms = self.dim, out
        return p

    def __neg__(self) -> "Polynomial":
        p = Polynomial.__new__(Polynomial)
        p.dim = self.dim
        p.terms = {b: -c for b, c in self.terms.items()}
        return p

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check(other)
        out: Terms = {}
        for b1, c1 in self.terms.items():
            for b2, c2 in other.terms.items():
                b = mi_add(b1, b2)
                s = out.get(b, Fraction(0)) + c1 * c2
                if s == 0:
                    out.pop(b, None)
                else:
                    out[b] = s
        p = Polynomial.__new__(Polynomial)
        p.dim, p.terms = self.dim, out
        return p

    __rmul__ = __mul__

    def scale(self, c) -> "Polynomial":
        c = as_fraction(c)
        p = Polynomial.__new__(Polynomial)
        p.dim = self.dim
        p.terms = {} if c == 0 else {b: c * v for b, v in self.terms.items()}
        return p

    # -- calculus -----------------------------------------------------------

    def derive(self, gamma: Sequence[int]) -> "Polynomial":
        """Exact partial derivative D^gamma."""
        g = validate(gamma)
        if len(g) != self.dim:
            raise ValueError("derivative index arity mismatch")
        out: Terms = {}
        for b, c in self.terms.items():
            ff = falling_factorial(b, g)
            if ff == 0:
                continue
            out[mi_sub(b, g)] = out.get(mi_sub(b, g), Fraction(0)) + c * ff
        return Polynomial(self.dim, {b: c for b, c in out.items() if c != 0})

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, y: Sequence):
        """Exact evaluation at a point; Fractions in give a Fraction out."""
        if len(y) != self.dim:
            raise ValueError("point arity mismatch")
        total = None
        for b, c in self.terms.items():
            v = c
            for yi, bi in zip(y, b):
                if bi:
                    v = v * yi**bi
            total = v if total is None else total + v
        if total is None:
            return Fraction(0) if not any(isinstance(v, float) for v in y) else 0.0
        return total

    def evaluate_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Evaluate on a tensor-product grid given per-axis 1-D sample arrays.

        Returns an ndarray of shape (len(axes[0]), ..., len(axes[-1])).
        Power tables keep the cost at one fused multiply per term and axis.
        """
        if len(axes) != self.dim:
            raise ValueError("axes arity mismatch")
        shape = tuple(len(a) for a in axes)
        out = np.zeros(shape)
        if not self.terms:
            return out
        max_pow = [0] * self.dim
        for b in self.terms:
            for i, bi in enumerate(b):
                max_pow[i] = max(max_pow[i], bi)
        pows = []
        for i, ax in enumerate(axes):
            ax = np.asarray(ax, dtype=float)
            tbl = np.ones((max_pow[i] + 1, len(ax)))
            for p in range(1, max_pow[i] + 1):
                tbl[p] = tbl[p - 1] * ax
            pows.append(tbl)
        for b, c in self.terms.items():
            term = np.full(shape, float(c))
            for i, bi in enumerate(b):
                if bi:
                    sl = [None] * self.dim
                    sl[i] = slice(None)
                    term = term * pows[i][bi][tuple(sl)]
            out += term
        return out

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [
                {
                    "beta": list(b),
                    "num": str(c.numerator),
                    "den": str(c.denominator),
                }
                for b, c in self.sorted_terms()
            ],
        }

    @staticmethod
    def from_json_dict(d: dict) -> "Polynomial":
        terms = {
            tuple(t["beta"]): Fraction(int(t["num"]), int(t["den"]))
            for t in d["terms"]
        }
        return Polynomial(int(d["dim"]), terms)


# -- spec-facing functional API ---------------------------------------------


def poly_arith(a: Polynomial, b, op: str) -> Polynomial:
    """Dispatch arithmetic: op in {add, sub, mul, scale}.

    For op='scale', `b` is a rational scalar.
    """
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "scale":
        return a.scale(b)
    raise ValueError(f"unknown op {op!r}")


def derive(p: Polynomial, gamma: Sequence[int]) -> Polynomial:
    return p.derive(gamma)


def gradient(p: Polynomial) -> Tuple[Polynomial, ...]:
    return tuple(p.derive(unit(p.dim, i)) for i in range(p.dim))


def laplacian(p: Polynomial) -> Polynomial:
    out = Polynomial.zero(p.dim)
    for i in range(p.dim):
        e2 = [0] * p.dim
        e2[i] = 2
        out = out + p.derive(tuple(e2))
    return out


def neg_laplacian_power(p: Polynomial, j: int) -> Polynomial:
    """(-Laplacian)^j applied j times; j >= 0."""
    if j < 0:
        raise ValueError("power must be >= 0")
    out = p
    for _ in range(j):
        out = -laplacian(out)
    return out


def divergence(components: Sequence[Polynomial]) -> Polynomial:
    dim = components[0].dim
    if len(components) != dim:
        raise ValueError("divergence expects dim components of matching dim")
    out = Polynomial.zero(dim)
    for i, p in enumerate(components):
        out = out + p.derive(unit(dim, i))
    return out


def diff_ops(p, which: str, j: int | None = None):
    """Differential operator dispatch per the public contract.

    which in {gradient, laplacian, neg_laplacian_power, divergence}; the
    last expects a sequence of components instead of a single polynomial.
    """
    if which == "gradient":
        return gradient(p)
    if which == "laplacian":
        return laplacian(p)
    if which == "neg_laplacian_power":
        if j is None:
            raise ValueError("neg_laplacian_power needs j")
        return neg_laplacian_power(p, j)
    if which == "divergence":
        return divergence(p)
    raise ValueError(f"unknown operator {which!r}")


def evaluate(p: Polynomial, y: Sequence):
    return p.evaluate(y)


class VectorPolyField:
    """N polynomial components, each in N variables."""

    __slots__ = ("components",)

    def __init__(self, components: Iterable[Polynomial]):
        comps = tuple(components)
        if not comps:
            raise ValueError("empty field")
        dim = comps[0].dim
        if len(comps) != dim or any(p.dim != dim for p in comps):
            raise ValueError("need dim components, each of that dim")
        self.components = comps

    @property
    def dim(self) -> int:
        return len(self.components)

    def divergence(self) -> Polynomial:
        return divergence(self.components)

    def scale(self, c) -> "VectorPolyField":
        return VectorPolyField([p.scale(c) for p in self.components])

    def __add__(self, other: "VectorPolyField") -> "VectorPolyField":
        return VectorPolyField(
            [a + b for a, b in zip(self.components, other.components)]
        )

    def __sub__(self, other: "VectorPolyField") -> "VectorPolyField":
        return VectorPolyField(
            [a - b for a, b in zip(self.components, other.components)]
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, VectorPolyField)
            and self.components == other.components
        )

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        return "VectorPolyField(" + ", ".join(map(repr, self.components)) + ")"

    def to_json_dict(self) -> dict:
        return {"components": [p.to_json_dict() for p in self.components]}

    @staticmethod
    def from_json_dict(d: dict) -> "VectorPolyField":
        return VectorPolyField(
            [Polynomial.from_json_dict(c) for c in d["components"]]
        )


def vector_from_rows(rows: Sequence[Sequence], dim: int = 3) -> VectorPolyField:
    """Build a field from `dim` rows of (coeff, beta) pairs.

    Convenience for catalog entries, e.g. rows=[[(-1,(0,0,1))],[...],[...]].
    """
    comps = []
    for row in rows:
        terms: Terms = {}
        for c, beta in row:
            b = tuple(beta)
            terms[b] = terms.get(b, Fraction(0)) + as_fraction(c)
        comps.append(Polynomial(dim, terms))
    return VectorPolyField(comps)
