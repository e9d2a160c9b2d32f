"""Filtered free modules, integrable transversal connections and the
differentials built from them (dPhi, d2Phi, the endomorphism connection and
the second fundamental form).

Conventions
-----------
A :class:`FilteredModule` has an adapted basis ``e_0..e_{r-1}``; basis vector
``e_a`` lives in level ``levels[a]``.  ``F^p`` is spanned by the ``e_a`` with
``levels[a] >= p`` and the graded pieces give the Hodge splitting.  The matrix
entry ``(b, a)`` of an endomorphism sends ``e_a`` to ``e_b`` and has graded
degree ``levels[b] - levels[a]``.

A :class:`Connection` stores ``A_0..A_{s-1}`` with
``nabla_{d/dt_l} x = d_l x + A_l x``.  Variable indices are 0-based.
Coset-valued outputs are evaluated at the fiber ``t = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import MismatchedRing, NotFlat, NotTransversal
from .exact_series import (
    ONE,
    QI,
    SeriesMatrix,
    TruncatedSeries,
    is_zero_array,
    monomials,
    qi_eye,
    qi_zeros,
)
from .linalg import SpanReducer, rref


@dataclass(frozen=True)
class FilteredModule:
    levels: tuple[int, ...]
    s: int
    N: int
    weight: int = 0

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(int(p) for p in self.levels))

    @property
    def rank(self) -> int:
        return len(self.levels)

    def F(self, p: int) -> list[int]:
        """Indices of the basis vectors spanning F^p."""
        return [a for a, q in enumerate(self.levels) if q >= p]

    def graded_piece(self, p: int) -> list[int]:
        return [a for a, q in enumerate(self.levels) if q == p]

    def hodge_numbers(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for p in self.levels:
            out[p] = out.get(p, 0) + 1
        return dict(sorted(out.items(), reverse=True))

    def degree_matrix(self) -> np.ndarray:
        lv = np.array(self.levels, dtype=int)
        return lv[:, None] - lv[None, :]

    def degrees(self) -> list[int]:
        """All graded degrees an endomorphism entry can have, ascending."""
        return sorted(set(self.degree_matrix().flat))

    def block(self, M: np.ndarray, degree: int) -> np.ndarray:
        """The homogeneous component of degree ``degree`` of a Q(i) matrix."""
        mask = self.degree_matrix() == degree
        out = qi_zeros(M.shape)
        out[mask] = M[mask]
        return out

    def block_at_most(self, M: np.ndarray, degree: int) -> np.ndarray:
        mask = self.degree_matrix() <= degree
        out = qi_zeros(M.shape)
        out[mask] = M[mask]
        return out

    def series_block(self, A: SeriesMatrix, degree: int) -> SeriesMatrix:
        return A.map_coefficients(lambda M: self.block(M, degree), shape=A.shape)

    def series_block_at_most(self, A: SeriesMatrix, degree: int) -> SeriesMatrix:
        return A.map_coefficients(lambda M: self.block_at_most(M, degree), shape=A.shape)

    def unit(self, a: int) -> SeriesMatrix:
        e = qi_zeros(self.rank)
        e[a] = ONE
        return SeriesMatrix.constant(self.s, self.N, e)

    def end_module(self) -> "FilteredModule":
        """Endomorphisms, vectorised row-major; entry (b, a) has level p_b - p_a."""
        lv = [pb - pa for pb in self.levels for pa in self.levels]
        return FilteredModule(tuple(lv), self.s, self.N, 0)


@dataclass(frozen=True)
class Certificate:
    """Outcome of a check; ``status`` is ``"ok"`` or ``"fail"``."""

    check: str
    status: str
    details: dict = field(default_factory=dict)
    residual: object = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def __bool__(self):
        return self.ok

    def to_json(self) -> dict:
        out = {"check": self.check, "status": self.status}
        if self.details:
            out["details"] = _jsonable(self.details)
        if self.residual is not None:
            out["residual"] = _jsonable(self.residual)
        return out


def _jsonable(x):
    from .exact_series import LaurentT

    if isinstance(x, (SeriesMatrix, TruncatedSeries, QI)):
        return x.to_json()
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x]
    if isinstance(x, CosetMap):
        return x.to_json()
    if isinstance(x, LaurentT):
        return [[k, _jsonable(v)] for k, v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


TangentVector = Sequence


def coordinate_field(s: int, N: int, l: int) -> list[TruncatedSeries]:
    return [TruncatedSeries.constant(s, N, 1 if k == l else 0) for k in range(s)]


def _as_field(xi, s: int, N: int) -> list[TruncatedSeries]:
    if isinstance(xi, int):
        return coordinate_field(s, N, xi)
    xi = list(xi)
    if len(xi) != s:
        raise MismatchedRing(f"tangent vector has {len(xi)} components, base has s={s}")
    out = []
    for c in xi:
        c = c if isinstance(c, TruncatedSeries) else TruncatedSeries.constant(s, N, c)
        if (c.s, c.N) != (s, N):
            raise MismatchedRing("tangent vector coefficient in a different ring")
        out.append(c)
    return out


@dataclass(frozen=True)
class Connection:
    module: FilteredModule
    mats: tuple[SeriesMatrix, ...]

    def __post_init__(self):
        m = self.module
        mats = tuple(self.mats)
        if len(mats) != m.s:
            raise MismatchedRing(f"expected {m.s} connection matrices, got {len(mats)}")
        for A in mats:
            if (A.s, A.N) != (m.s, m.N):
                raise MismatchedRing("connection matrix over a different ring")
            if A.shape != (m.rank, m.rank):
                raise ValueError(f"connection matrix of shape {A.shape}, rank {m.rank}")
        object.__setattr__(self, "mats", mats)

    @property
    def s(self) -> int:
        return self.module.s

    @property
    def N(self) -> int:
        return self.module.N

    def field(self, xi) -> list[TruncatedSeries]:
        return _as_field(xi, self.s, self.N)

    def matrix(self, xi) -> SeriesMatrix:
        """A_xi = sum_l xi_l A_l."""
        r = self.module.rank
        out = SeriesMatrix.zeros(self.s, self.N, (r, r))
        for f, A in zip(self.field(xi), self.mats):
            if f:
                out = out + A.scale(f)
        return out


def curvature(c: Connection, k: int, l: int) -> SeriesMatrix:
    """d_k A_l - d_l A_k + [A_k, A_l]."""
    Ak, Al = c.mats[k], c.mats[l]
    return Al.partial(k) - Ak.partial(l) + Ak @ Al - Al @ Ak


def check_integrable(c: Connection) -> Certificate:
    """Flatness through total degree N-1.

    Derivatives lose the top degree of a jet, so the curvature of an
    N-jet is only determined below degree N.
    """
    for k in range(c.s):
        for l in range(k + 1, c.s):
            R = curvature(c, k, l).truncate(c.N - 1)
            if not R.is_zero():
                return Certificate("integrable", "fail", {"pair": [k + 1, l + 1]}, R)
    return Certificate("integrable", "ok")


def check_transversal(c: Connection, f: FilteredModule | None = None,
                      at_zero_only: bool = False) -> Certificate:
    """Griffiths transversality: no entry drops the level by two or more."""
    f = f or c.module
    drops = f.degree_matrix() <= -2
    for l, A in enumerate(c.mats):
        jets = {(0,) * c.s: A.at_zero()} if at_zero_only else A.jet()
        for mono, M in sorted(jets.items()):
            bad = np.argwhere(drops & np.vectorize(bool, otypes=[bool])(M))
            if len(bad):
                b, a = (int(x) for x in bad[0])
                return Certificate(
                    "transversal", "fail",
                    {"matrix": l + 1, "entry": [b + 1, a + 1], "monomial": list(mono),
                     "level_drop": f.levels[a] - f.levels[b]},
                )
    return Certificate("transversal", "ok")


def require_flat(c: Connection):
    cert = check_integrable(c)
    if not cert:
        raise NotFlat("connection is not integrable", **cert.details)


def require_transversal(c: Connection, at_zero_only: bool = False):
    cert = check_transversal(c, at_zero_only=at_zero_only)
    if not cert:
        raise NotTransversal("connection violates Griffiths transversality", **cert.details)


def covariant_derivative(c: Connection, xi, x: SeriesMatrix) -> SeriesMatrix:
    """nabla_xi x = sum_l xi_l (d_l x + A_l x)."""
    if (x.s, x.N) != (c.s, c.N):
        raise MismatchedRing("module element over a different ring")
    out = SeriesMatrix.zeros(c.s, c.N, x.shape)
    for l, f in enumerate(c.field(xi)):
        if f:
            out = out + (x.partial(l) + c.mats[l] @ x).scale(f)
    return out


def d_phi(c: Connection, xi, at_zero: bool = True):
    """Degree -1 graded block of A_xi: the first differential of the period map."""
    require_transversal(c)
    B = c.module.series_block(c.matrix(xi), -1)
    return B.at_zero() if at_zero else B


@dataclass(frozen=True)
class CosetMap:
    """A linear map recorded modulo a subspace of its target.

    ``numerator`` has one column per domain basis vector; ``denominator`` is a
    list of target vectors spanning the subspace modded out.  ``domain`` labels
    the columns.
    """

    numerator: np.ndarray
    denominator: tuple = ()
    domain: tuple = ()
    at: str = "t=0"

    def __post_init__(self):
        num = np.asarray(self.numerator, dtype=object)
        if num.ndim == 1:
            num = num.reshape(-1, 1)
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", tuple(np.asarray(v, dtype=object) for v in self.denominator))
        if not self.domain:
            object.__setattr__(self, "domain", tuple(range(num.shape[1])))

    @property
    def target_dim(self) -> int:
        return self.numerator.shape[0]

    def reducer(self) -> SpanReducer:
        return SpanReducer(self.target_dim, self.denominator)

    def reduced(self) -> np.ndarray:
        """Canonical numerator: every column reduced modulo the denominator."""
        red = self.reducer()
        out = qi_zeros(self.numerator.shape)
        for j in range(self.numerator.shape[1]):
            out[:, j] = red.reduce(self.numerator[:, j])
        return out

    def denominator_basis(self) -> list[np.ndarray]:
        return self.reducer().basis()

    def is_zero(self) -> bool:
        return is_zero_array(self.reduced())

    def same_denominator(self, other: "CosetMap") -> bool:
        a, b = self.reducer(), other.reducer()
        return a.rank == b.rank and all(a.contains(v) for v in b.basis())

    def equals(self, other: "CosetMap") -> bool:
        if self.numerator.shape != other.numerator.shape:
            return False
        if not self.same_denominator(other):
            return False
        return np.array_equal(self.reduced(), other.reduced())

    def __eq__(self, other):
        if not isinstance(other, CosetMap):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    def with_numerator(self, numerator: np.ndarray) -> "CosetMap":
        return CosetMap(numerator, self.denominator, self.domain, self.at)

    def __sub__(self, other: "CosetMap") -> "CosetMap":
        den = tuple(self.denominator) + tuple(other.denominator)
        return CosetMap(self.numerator - other.numerator, den, self.domain, self.at)

    def to_json(self) -> dict:
        return {
            "at": self.at,
            "domain": [d if isinstance(d, (int, str)) else list(d) for d in self.domain],
            "numerator": [[v.to_json() for v in row] for row in self.numerator],
            "denominator": [[v.to_json() for v in b] for b in self.denominator_basis()],
            "reduced": [[v.to_json() for v in row] for row in self.reduced()],
            "is_zero": self.is_zero(),
        }


def _f_span_fiber(c: Connection, idx: Sequence[int]) -> list[np.ndarray]:
    """Fiber at 0 of F + span{nabla_eta(F)} for F spanned by e_a, a in idx.

    Applies nabla_{d/dt_l} to f * e_a for every monomial f of degree <= N.
    """
    m = c.module
    vecs = []
    for a in idx:
        e = qi_zeros(m.rank)
        e[a] = ONE
        vecs.append(e)
    for a in idx:
        ea = m.unit(a)
        for mono in monomials(c.s, c.N):
            f = TruncatedSeries.monomial(c.s, c.N, mono)
            fe = ea.scale(f)
            for l in range(c.s):
                vecs.append(covariant_derivative(c, l, fe).at_zero())
    return vecs


def d2_phi(c: Connection, zeta, xi, p: int) -> CosetMap:
    """nabla_zeta nabla_xi on F^p, modulo F^p + span{nabla_eta(F^p)}, at t = 0."""
    require_flat(c)
    require_transversal(c)
    m = c.module
    idx = m.F(p)
    num = qi_zeros((m.rank, len(idx)))
    for j, a in enumerate(idx):
        y = covariant_derivative(c, zeta, covariant_derivative(c, xi, m.unit(a)))
        num[:, j] = y.at_zero()
    return CosetMap(num, tuple(_f_span_fiber(c, idx)), tuple(idx))


def ad(A: np.ndarray) -> np.ndarray:
    """Matrix of B -> [A, B] on row-major vectorised endomorphisms."""
    r = A.shape[0]
    eye = qi_eye(r)
    return np.kron(A, eye) - np.kron(eye, A.T)


def end_connection(c: Connection) -> Connection:
    """The induced connection d_l B + [A_l, B] on End, as an r^2-rank connection."""
    em = c.module.end_module()
    mats = tuple(A.map_coefficients(ad) for A in c.mats)
    return Connection(em, mats)


def end_covariant_derivative(c: Connection, zeta, B: SeriesMatrix) -> SeriesMatrix:
    """nabla_zeta B = sum_l zeta_l (d_l B + [A_l, B])."""
    out = SeriesMatrix.zeros(c.s, c.N, B.shape)
    for l, f in enumerate(c.field(zeta)):
        if f:
            A = c.mats[l]
            out = out + (B.partial(l) + A @ B - B @ A).scale(f)
    return out


def _vec(M: np.ndarray) -> np.ndarray:
    return M.reshape(-1).copy()


def dphi_span(c: Connection) -> list[np.ndarray]:
    """Homogeneous components of dPhi(d/dt_l)|_0, l = 1..s, vectorised."""
    m = c.module
    out = []
    for A in c.mats:
        low = m.block_at_most(A.at_zero(), -1)
        for d in m.degrees():
            if d <= -1:
                blk = m.block(low, d)
                if not is_zero_array(blk):
                    out.append(_vec(blk))
    return out


def second_fundamental_form(c: Connection, zeta, xi, degree: int = -2) -> CosetMap:
    """II(zeta, xi): the degree-``degree`` block of nabla_zeta(dPhi(xi)) at 0,
    modulo the span of the homogeneous components of dPhi(d/dt_l)|_0.

    ``dPhi(xi)`` is taken as the filtration-lowering part of A_xi.  The default
    degree -2 is the part compared with d2_psi_bar - d_psi_bar o d_psi_bar;
    degree -1 gives the induced class on Gr.
    """
    require_flat(c)
    require_transversal(c, at_zero_only=True)
    m = c.module
    low = m.series_block_at_most(c.matrix(xi), -1)
    D = end_covariant_derivative(c, zeta, low).at_zero()
    num = _vec(m.block(D, degree))
    return CosetMap(num, tuple(dphi_span(c)), ("II",))


def endomorphism_coset(c: Connection, M: np.ndarray) -> CosetMap:
    """A Q(i) endomorphism as a coset modulo im(dPhi) (same denominator as II)."""
    return CosetMap(_vec(M), tuple(dphi_span(c)), ("II",))


def lemma3_shift_check(c: Connection, zeta, xi) -> Certificate:
    """nabla_zeta(dPhi(xi)) lowers the filtration by at most one.

    The components of degree <= -2 must vanish through degree N-1 in t; on
    success the certificate carries the induced degree -1 class at 0.
    """
    require_flat(c)
    m = c.module
    low = m.series_block(c.matrix(xi), -1)
    D = end_covariant_derivative(c, zeta, low).truncate(c.N - 1)
    bad = m.series_block_at_most(D, -2)
    if not bad.is_zero():
        return Certificate("lemma3_shift", "fail", {}, bad)
    cls = CosetMap(_vec(m.block(D.at_zero(), -1)), tuple(dphi_span(c)), ("E",))
    return Certificate("lemma3_shift", "ok", {"class_deg_minus1": cls})


def series_inverse(g: SeriesMatrix) -> SeriesMatrix:
    """Inverse of a square series matrix with invertible constant term."""
    n = g.shape[0]
    g0 = g.at_zero()
    aug = np.concatenate([g0, qi_eye(n)], axis=1)
    R, piv = rref(aug)
    if piv[:n] != list(range(n)) or len(piv) < n or piv[n - 1] != n - 1:
        raise ValueError("constant term of gauge is singular")
    g0inv = SeriesMatrix.constant(g.s, g.N, R[:, n:])
    X = SeriesMatrix.identity(g.s, g.N, n) - g0inv @ g  # nilpotent mod m^(N+1)
    out = SeriesMatrix.identity(g.s, g.N, n)
    term = SeriesMatrix.identity(g.s, g.N, n)
    for _ in range(g.N):
        term = term @ X
        out = out + term
    return out @ g0inv


def gauge_transform(c: Connection, g: SeriesMatrix) -> Connection:
    """Connection in the frame x = g x': A'_l = g^-1 d_l g + g^-1 A_l g."""
    gi = series_inverse(g)
    mats = tuple(gi @ g.partial(l) + gi @ A @ g for l, A in enumerate(c.mats))
    return Connection(c.module, mats)
