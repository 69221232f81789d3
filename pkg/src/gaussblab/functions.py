"""Test functions with exact gradients: linear, quadratic and polynomial."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, SchemaError


@dataclass(frozen=True, eq=False)
class FunctionSpec:
    """A function on R^n with exact value and gradient.

    ``linear``: ``f(x) = <v, x>``; ``quadratic``: ``f(x) = <T x, x> + c``;
    ``polynomial``: ``sum coef * prod x_i^e_i`` over ``terms``.
    """

    kind: str
    dim: int
    v: np.ndarray = None
    T: np.ndarray = None
    c: float = 0.0
    terms: tuple = field(default=())

    @classmethod
    def linear(cls, v):
        v = np.asarray(v, dtype=float).reshape(-1)
        return cls("linear", v.size, v=v)

    @classmethod
    def quadratic(cls, T, c=0.0):
        T = np.asarray(T, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise SchemaError("matrix", "quadratic form needs a square matrix")
        return cls("quadratic", T.shape[0], T=0.5 * (T + T.T), c=float(c))

    @classmethod
    def polynomial(cls, terms, dim=None):
        """``terms``: mapping or iterable of ``(exponents, coef)``."""
        items = terms.items() if isinstance(terms, dict) else terms
        parsed = tuple((tuple(int(e) for e in exps), float(coef)) for exps, coef in items)
        if not parsed and dim is None:
            raise SchemaError("terms", "empty polynomial needs an explicit dim")
        n = dim if dim is not None else len(parsed[0][0])
        for exps, _ in parsed:
            if len(exps) != n or min(exps) < 0:
                raise SchemaError("terms", "exponent tuples must be nonnegative with length dim")
        return cls("polynomial", n, terms=parsed)

    def _check(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise DimensionMismatchError(f"points have dimension {X.shape[1]}, function {self.dim}")
        return X

    def value(self, X):
        X = self._check(X)
        if self.kind == "linear":
            return X @ self.v
        if self.kind == "quadratic":
            return np.einsum("ij,jk,ik->i", X, self.T, X) + self.c
        out = np.zeros(len(X))
        for exps, coef in self.terms:
            out += coef * np.prod(X ** np.array(exps), axis=1)
        return out

    def grad(self, X):
        X = self._check(X)
        if self.kind == "linear":
            return np.broadcast_to(self.v, X.shape).copy()
        if self.kind == "quadratic":
            return 2.0 * X @ self.T
        G = np.zeros_like(X)
        for exps, coef in self.terms:
            e = np.array(exps)
            for i in np.flatnonzero(e):
                ei = e.copy()
                ei[i] -= 1
                G[:, i] += coef * e[i] * np.prod(X ** ei, axis=1)
        return G

    def is_even(self, seed=0, trials=256, rtol=1e-10) -> bool:
        X = np.random.default_rng(seed).standard_normal((trials, self.dim))
        a, b = self.value(X), self.value(-X)
        return bool(np.all(np.abs(a - b) <= rtol * (1.0 + np.abs(a))))

    def to_dict(self):
        if self.kind == "linear":
            return {"type": "linear", "v": self.v.tolist()}
        if self.kind == "quadratic":
            return {"type": "quadratic", "matrix": self.T.tolist(), "c": self.c}
        return {"type": "polynomial", "dim": self.dim,
                "terms": [{"exponents": list(e), "coef": c} for e, c in self.terms]}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("type")
        if kind == "linear":
            return cls.linear(d["v"])
        if kind == "quadratic":
            return cls.quadratic(d["matrix"], d.get("c", 0.0))
        if kind == "polynomial":
            return cls.polynomial([(t["exponents"], t["coef"]) for t in d["terms"]], d.get("dim"))
        raise SchemaError("type", f"unknown function type {kind!r}")
