"""The Laurent extension H (x) C[T, T^-1] with filtration
F^k_ar = span{x T^j : x in F^p, j <= p - k}, its termwise connection and the
Archimedean period-map differentials.

Elements are :class:`LaurentT` values whose coefficients are module vectors,
either 1-D Q(i) arrays (fiber at t = 0) or :class:`SeriesMatrix` vectors.
Only a finite window of T-exponents is ever needed; the connection never
changes exponents, so every computation splits exponent by exponent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MismatchedRing, NotHomogeneous
from .exact_series import ONE, LaurentT, SeriesMatrix, TruncatedSeries, is_zero_array, monomials, qi_zeros
from .filtered_connection import (
    Certificate,
    Connection,
    CosetMap,
    FilteredModule,
    _vec,
    covariant_derivative,
    dphi_span,
    d2_phi,
    require_flat,
    require_transversal,
    second_fundamental_form,
)


@dataclass(frozen=True)
class ArModule:
    base: FilteredModule
    window: tuple[int, int] | None = None

    def __post_init__(self):
        if self.window is None:
            lv = self.base.levels
            object.__setattr__(self, "window", (min(lv) - 2, max(lv)))
        lo, hi = self.window
        if lo > hi:
            raise ValueError("empty T-window")

    def widened(self, extra: int) -> "ArModule":
        lo, hi = self.window
        return ArModule(self.base, (lo - extra, hi + extra))

    @property
    def exponents(self) -> range:
        lo, hi = self.window
        return range(lo, hi + 1)

    def coords(self) -> list[tuple[int, int]]:
        """Window coordinates (a, j), grouped by exponent j."""
        return [(a, j) for j in self.exponents for a in range(self.base.rank)]

    @property
    def dim(self) -> int:
        return self.base.rank * len(self.exponents)

    def index(self, a: int, j: int) -> int:
        lo, hi = self.window
        if not lo <= j <= hi:
            raise ValueError(f"exponent {j} outside window {self.window}")
        return (j - lo) * self.base.rank + a

    def level(self, a: int, j: int) -> int:
        """Largest k with e_a T^j in F^k_ar."""
        return self.base.levels[a] - j

    def F_coords(self, k: int) -> list[tuple[int, int]]:
        return [(a, j) for a, j in self.coords() if self.level(a, j) >= k]

    def H_ar_basis(self) -> list[tuple[int, int]]:
        return self.F_coords(0)

    def in_filtration(self, y: LaurentT, k: int) -> bool:
        for j, v in y:
            v = _fiber_or_series(v)
            for a in range(self.base.rank):
                if _nonzero_component(v, a) and self.level(a, j) < k:
                    return False
        return True

    def to_window(self, y: LaurentT) -> np.ndarray:
        out = qi_zeros(self.dim)
        for j, v in y:
            v = _at_zero(v)
            for a in range(self.base.rank):
                if v[a]:
                    out[self.index(a, j)] = v[a]
        return out

    def from_window(self, w: np.ndarray) -> LaurentT:
        r = self.base.rank
        terms = {}
        for j in self.exponents:
            i = self.index(0, j)
            v = np.array(w[i:i + r], dtype=object)
            if not is_zero_array(v):
                terms[j] = v
        return LaurentT(terms)

    def unit(self, a: int, j: int, series: bool = False) -> LaurentT:
        e = self.base.unit(a) if series else _unit_vec(self.base.rank, a)
        return LaurentT({j: e})


def _unit_vec(r: int, a: int) -> np.ndarray:
    e = qi_zeros(r)
    e[a] = ONE
    return e


def _at_zero(v) -> np.ndarray:
    return v.at_zero() if isinstance(v, SeriesMatrix) else np.asarray(v, dtype=object)


def _fiber_or_series(v):
    return v if isinstance(v, SeriesMatrix) else np.asarray(v, dtype=object)


def _nonzero_component(v, a: int) -> bool:
    if isinstance(v, SeriesMatrix):
        return not v.entry(a).is_zero()
    return bool(v[a])


def _to_series(c: Connection, v) -> SeriesMatrix:
    if isinstance(v, SeriesMatrix):
        if (v.s, v.N) != (c.s, c.N):
            raise MismatchedRing("Laurent coefficient over a different ring")
        return v
    return SeriesMatrix.constant(c.s, c.N, np.asarray(v, dtype=object))


def nabla_ar(c: Connection, xi, y: LaurentT) -> LaurentT:
    """Termwise covariant derivative; T-exponents are unchanged."""
    return LaurentT({j: covariant_derivative(c, xi, _to_series(c, v)) for j, v in y})


def insert_T(module: FilteredModule, x: np.ndarray, k: int) -> LaurentT:
    """Inverse of drop_T: sum_a x_a e_a T^(p_a - k), a class in Gr^k."""
    terms: dict[int, np.ndarray] = {}
    for a, p in enumerate(module.levels):
        if x[a]:
            j = p - k
            terms.setdefault(j, qi_zeros(module.rank))[a] = x[a]
    return LaurentT(terms)


def drop_T(module: FilteredModule, y: LaurentT, k: int, project: bool = False) -> np.ndarray:
    """Erase T-powers from a class in Gr^k.

    With ``project=True`` components lying in F^(k+1) are discarded first
    (they vanish in Gr^k); components outside F^k always raise.
    """
    out = qi_zeros(module.rank)
    for j, v in y:
        v = _at_zero(v)
        for a, p in enumerate(module.levels):
            if not v[a]:
                continue
            lev = p - j
            if lev == k:
                out[a] = out[a] + v[a]
            elif lev > k and project:
                continue
            else:
                raise NotHomogeneous(
                    f"component e_{a + 1} T^{j} has filtration level {lev}, not {k}",
                    component=[a + 1, j], level=lev, expected=k,
                )
    return out


def d_psi(c: Connection, xi, am: ArModule | None = None) -> CosetMap:
    """y -> nabla_xi y mod F^0_ar on the window basis of H_ar, at t = 0."""
    require_transversal(c, at_zero_only=True)
    am = am or ArModule(c.module)
    basis = am.H_ar_basis()
    num = qi_zeros((am.dim, len(basis)))
    for col, (a, j) in enumerate(basis):
        num[:, col] = am.to_window(nabla_ar(c, xi, am.unit(a, j)))
    den = [_coord_vec(am, a, j) for a, j in am.F_coords(0)]
    return CosetMap(num, tuple(den), tuple(basis))


def _coord_vec(am: ArModule, a: int, j: int) -> np.ndarray:
    e = qi_zeros(am.dim)
    e[am.index(a, j)] = ONE
    return e


def d_psi_bar(c: Connection, xi) -> np.ndarray:
    """drop_T . d_psi . insert_T(0), read off in Gr^-1."""
    require_transversal(c, at_zero_only=True)
    m = c.module
    out = qi_zeros((m.rank, m.rank))
    for a in range(m.rank):
        y = nabla_ar(c, xi, insert_T(m, _unit_vec(m.rank, a), 0))
        out[:, a] = drop_T(m, _mod_F(m, y, 0), -1, project=False)
    return out


def _mod_F(m: FilteredModule, y: LaurentT, k: int) -> LaurentT:
    """Representative of y mod F^k_ar with every F^k component removed."""
    terms = {}
    for j, v in y:
        v = _at_zero(v).copy()
        for a, p in enumerate(m.levels):
            if p - j >= k:
                v[a] = v[a] * 0
        terms[j] = v
    return LaurentT(terms)


def d2_psi(c: Connection, zeta, xi, am: ArModule | None = None) -> CosetMap:
    """nabla_zeta nabla_xi on the window basis of H_ar, modulo
    F^0_ar + span{nabla_eta(H_ar)} at t = 0."""
    require_flat(c)
    require_transversal(c, at_zero_only=True)
    am = am or ArModule(c.module)
    basis = am.H_ar_basis()
    num = qi_zeros((am.dim, len(basis)))
    for col, (a, j) in enumerate(basis):
        y = nabla_ar(c, zeta, nabla_ar(c, xi, am.unit(a, j)))
        num[:, col] = am.to_window(y)
    den = [_coord_vec(am, a, j) for a, j in am.F_coords(0)]
    for a, j in basis:
        ea = c.module.unit(a)
        for mono in monomials(c.s, c.N):
            fe = ea.scale(TruncatedSeries.monomial(c.s, c.N, mono))
            for l in range(c.s):
                den.append(am.to_window(nabla_ar(c, l, LaurentT({j: fe}))))
    return CosetMap(num, tuple(den), tuple(basis))


def second_derivative_lift(c: Connection, zeta, xi) -> np.ndarray:
    """nabla_zeta nabla_xi (e_a T^(p_a)) at 0 with all T-powers dropped.

    The ungraded endomorphism whose degree -2 block is d2_psi_bar.
    """
    m = c.module
    out = qi_zeros((m.rank, m.rank))
    for a in range(m.rank):
        y = nabla_ar(c, zeta, nabla_ar(c, xi, insert_T(m, _unit_vec(m.rank, a), 0)))
        for _, v in y:
            out[:, a] = out[:, a] + _at_zero(v)
    return out


def d2_psi_bar(c: Connection, zeta, xi, graded: bool = True) -> np.ndarray:
    """Degree -2 block of nabla_zeta nabla_xi at t = 0, read off in Gr^-2.

    ``graded=False`` returns the full lift (all T-powers dropped).
    """
    require_flat(c)
    require_transversal(c, at_zero_only=True)
    m = c.module
    if not graded:
        return second_derivative_lift(c, zeta, xi)
    out = qi_zeros((m.rank, m.rank))
    for a in range(m.rank):
        y = nabla_ar(c, zeta, nabla_ar(c, xi, insert_T(m, _unit_vec(m.rank, a), 0)))
        y = _keep_level(m, y, -2)
        out[:, a] = drop_T(m, y, -2)
    return out


def _keep_level(m: FilteredModule, y: LaurentT, k: int) -> LaurentT:
    terms = {}
    for j, v in y:
        v = _at_zero(v)
        w = qi_zeros(m.rank)
        for a, p in enumerate(m.levels):
            if p - j == k:
                w[a] = v[a]
        terms[j] = w
    return LaurentT(terms)


def lemma2_check(c: Connection, zeta, xi) -> Certificate:
    """d_psi_bar = d_phi at 0, d2_psi_bar(F^p) lands in F^(p-2), and d2_phi
    factors through the lift of d2_psi_bar for every level p."""
    from .filtered_connection import d_phi

    m = c.module
    for v in (xi, zeta):
        if not np.array_equal(d_psi_bar(c, v), d_phi(c, v)):
            return Certificate("lemma2", "fail", {"part": "a"})
    lift = second_derivative_lift(c, zeta, xi)
    deg = m.degree_matrix()
    if any(lift[b, a] for b, a in zip(*np.nonzero(deg <= -3))):
        return Certificate("lemma2", "fail", {"part": "b", "reason": "containment"})
    if not np.array_equal(m.block(lift, -2), d2_psi_bar(c, zeta, xi)):
        return Certificate("lemma2", "fail", {"part": "b", "reason": "graded block"})
    for p in sorted(set(m.levels)):
        lhs = d2_phi(c, zeta, xi, p)
        rhs = lhs.with_numerator(lift[:, list(lhs.domain)])
        if not lhs.equals(rhs):
            return Certificate("lemma2", "fail", {"part": "b", "level": p})
    return Certificate("lemma2", "ok")


def proposition1_check(c: Connection, zeta, xi) -> Certificate:
    """II(zeta, xi) == d2_psi_bar(zeta, xi) - d_psi_bar(zeta) d_psi_bar(xi)
    modulo the homogeneous components of dPhi(d/dt_l) at 0."""
    require_flat(c)
    require_transversal(c, at_zero_only=True)
    lhs = second_fundamental_form(c, zeta, xi)
    rhs_mat = d2_psi_bar(c, zeta, xi) - d_psi_bar(c, zeta) @ d_psi_bar(c, xi)
    rhs = CosetMap(_vec(rhs_mat), tuple(dphi_span(c)), ("II",))
    details = {"II": lhs, "rhs": rhs}
    return Certificate("proposition1", "ok" if lhs.equals(rhs) else "fail", details)


def window_stability_check(c: Connection, zeta, xi, extra: int = 2) -> Certificate:
    """Widening the T-window leaves every d2_psi class unchanged."""
    small = ArModule(c.module)
    big = small.widened(extra)
    cs, cb = d2_psi(c, zeta, xi, small), d2_psi(c, zeta, xi, big)
    rs, rb = cs.reduced(), cb.reduced()
    big_cols = {d: k for k, d in enumerate(cb.domain)}
    for k, (a, j) in enumerate(cs.domain):
        emb = qi_zeros(big.dim)
        for i, (b, jj) in enumerate(small.coords()):
            emb[big.index(b, jj)] = rs[i, k]
        if not np.array_equal(emb, rb[:, big_cols[(a, j)]]):
            return Certificate("window_stability", "fail", {"element": [a + 1, j]})
    return Certificate("window_stability", "ok")
