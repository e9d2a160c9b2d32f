"""Exact dense linear algebra over Q(i) on numpy object arrays."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .exact_series import ONE, QI, ZERO, is_zero_array, qi_zeros


def _first_nonzero(v: np.ndarray) -> int:
    for i, x in enumerate(v):
        if x:
            return i
    return -1


def rref(M: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    A = np.array(M, dtype=object, copy=True)
    if A.ndim != 2:
        raise ValueError("rref expects a matrix")
    rows, cols = A.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        p = next((i for i in range(r, rows) if A[i, c]), None)
        if p is None:
            continue
        if p != r:
            A[[r, p]] = A[[p, r]]
        inv = ONE / A[r, c]
        A[r] = A[r] * inv
        for i in range(rows):
            if i != r and A[i, c]:
                A[i] = A[i] - A[r] * A[i, c]
        pivots.append(c)
        r += 1
    return A, pivots


def rank(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    return len(rref(M)[1])


def nullspace(M: np.ndarray) -> list[np.ndarray]:
    """Basis of {x : M x = 0}."""
    rows, cols = M.shape
    if rows == 0:
        basis = []
        for j in range(cols):
            e = qi_zeros(cols)
            e[j] = ONE
            basis.append(e)
        return basis
    R, piv = rref(M)
    free = [j for j in range(cols) if j not in set(piv)]
    basis = []
    for f in free:
        x = qi_zeros(cols)
        x[f] = ONE
        for i, p in enumerate(piv):
            x[p] = -R[i, f]
        basis.append(x)
    return basis


def solve(M: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """One solution of M x = b, or None when inconsistent."""
    rows, cols = M.shape
    aug = np.empty((rows, cols + 1), dtype=object)
    aug[:, :cols] = M
    aug[:, cols] = b
    R, piv = rref(aug)
    if cols in piv:
        return None
    x = qi_zeros(cols)
    for i, p in enumerate(piv):
        x[p] = R[i, cols]
    return x


class SpanReducer:
    """Incrementally maintained RREF basis of a subspace of Q(i)^n.

    ``reduce`` returns the canonical remainder of a vector modulo the span
    (zero in every pivot coordinate), so two vectors are congruent iff their
    remainders are equal.  With ``track=True`` each basis row remembers how it
    was built from the generators passed to :meth:`add`, which lets
    :meth:`express` write members of the span in terms of those generators.
    """

    def __init__(self, dim: int, vectors: Iterable[np.ndarray] = (), track: bool = False):
        self.dim = dim
        self.track = track
        self._rows: dict[int, np.ndarray] = {}
        self._combo: dict[int, dict[int, QI]] = {}
        self.n_generators = 0
        for v in vectors:
            self.add(v)

    @property
    def rank(self) -> int:
        return len(self._rows)

    def basis(self) -> list[np.ndarray]:
        return [self._rows[p].copy() for p in sorted(self._rows)]

    def pivots(self) -> list[int]:
        return sorted(self._rows)

    def _reduce_with_combo(self, v: np.ndarray):
        v = np.array(v, dtype=object, copy=True)
        combo: dict[int, QI] = {}
        for p in sorted(self._rows):
            c = v[p]
            if c:
                v = v - self._rows[p] * c
                if self.track:
                    for g, a in self._combo[p].items():
                        combo[g] = combo.get(g, ZERO) - a * c
        return v, combo

    def reduce(self, v: np.ndarray) -> np.ndarray:
        if len(v) != self.dim:
            raise ValueError(f"vector of length {len(v)} in ambient dim {self.dim}")
        return self._reduce_with_combo(v)[0]

    def contains(self, v: np.ndarray) -> bool:
        return is_zero_array(self.reduce(v))

    def add(self, v: np.ndarray) -> bool:
        """Add a generator; True if it enlarged the span."""
        g = self.n_generators
        self.n_generators += 1
        w, combo = self._reduce_with_combo(v)
        p = _first_nonzero(w)
        if p < 0:
            return False
        inv = ONE / w[p]
        w = w * inv
        if self.track:
            combo[g] = combo.get(g, ZERO) + ONE
            combo = {k: a * inv for k, a in combo.items() if a}
        for q in list(self._rows):
            c = self._rows[q][p]
            if c:
                self._rows[q] = self._rows[q] - w * c
                if self.track:
                    cq = dict(self._combo[q])
                    for k, a in combo.items():
                        cq[k] = cq.get(k, ZERO) - a * c
                    self._combo[q] = {k: a for k, a in cq.items() if a}
        self._rows[p] = w
        if self.track:
            self._combo[p] = combo
        return True

    def express(self, v: np.ndarray) -> dict[int, QI] | None:
        """Coefficients c_g with v = sum c_g * generator_g, or None."""
        if not self.track:
            raise RuntimeError("reducer built without track=True")
        w = np.array(v, dtype=object, copy=True)
        out: dict[int, QI] = {}
        for p in sorted(self._rows):
            c = w[p]
            if c:
                w = w - self._rows[p] * c
                for g, a in self._combo[p].items():
                    out[g] = out.get(g, ZERO) + a * c
        if not is_zero_array(w):
            return None
        return {g: a for g, a in out.items() if a}


def columns(M: np.ndarray) -> list[np.ndarray]:
    return [M[:, j].copy() for j in range(M.shape[1])]


def stack_columns(vectors: Sequence[np.ndarray], dim: int) -> np.ndarray:
    out = qi_zeros((dim, len(vectors)))
    for j, v in enumerate(vectors):
        out[:, j] = v
    return out


def cohomology(d_in: np.ndarray, d_out: np.ndarray) -> tuple[list[np.ndarray], SpanReducer]:
    """Representatives of ker(d_out)/im(d_in) and a reducer for im(d_in).

    Shapes: d_in is (n, a), d_out is (b, n).
    """
    n = d_out.shape[1]
    boundaries = SpanReducer(n, columns(d_in))
    cycles = nullspace(d_out)
    reps = []
    probe = SpanReducer(n, boundaries.basis())
    for z in cycles:
        if probe.add(z):
            reps.append(z)
    return reps, boundaries
