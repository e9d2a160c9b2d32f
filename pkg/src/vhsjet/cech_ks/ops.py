"""Cup-type operations on Čech cochains, the Lie derivative of a total
cochain, the Gauss-Manin connection and the deformation equation.

Sign conventions (all checked by the self-consistency tests):

* contraction with a Čech a-cochain of fields, ``C_alpha``, sends the
  C^q(Omega^p) piece of a total cochain to C^(a+q)(Omega^(p-1)) with sign
  (-1)^(q+1): ``(C_alpha w)_Q = (-1)^(q+1) alpha_front _| rho(w_back)``;
* the cup-bracket ``mu(alpha (x) beta)_Q = [alpha_front, rho(beta_back)]``;
* the deformation equation reads ``delta(d_k theta_l) = -mu(theta_k (x) theta_l)``;
* Gauss-Manin: ``nabla_l w = d_l w + C_{theta_l} w``.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegreeMismatch, NotCocycle
from ..exact_series import SeriesMatrix, TruncatedSeries, monomials, qi_zeros
from ..filtered_connection import Certificate
from .model import CechModel, Family, KSForm

# -- series helpers --------------------------------------------------------------


def as_series(v, s: int, N: int) -> SeriesMatrix:
    if isinstance(v, SeriesMatrix):
        return v
    return SeriesMatrix.constant(s, N, np.asarray(v, dtype=object))


def _bilinear(T: np.ndarray, u: SeriesMatrix, v: SeriesMatrix) -> SeriesMatrix:
    """out[a] = sum T[a, i, b] u[i] v[b], multiplied as series."""
    s, N = u.s, u.N
    jet: dict = {}
    for m1, a in u.jet().items():
        d1 = sum(m1)
        Ta = np.einsum("aib,i->ab", T, a)
        for m2, b in v.jet().items():
            if d1 + sum(m2) > N:
                continue
            m = tuple(x + y for x, y in zip(m1, m2))
            w = Ta @ b
            jet[m] = jet[m] + w if m in jet else w
    return SeriesMatrix(s, N, (T.shape[0],), jet)


def _lie_apply(model: CechModel, Q, sh, u: SeriesMatrix, v: SeriesMatrix) -> SeriesMatrix:
    mats = model.lie_matrices(Q, sh)
    n = model.rank(Q, sh)
    if not mats:
        return SeriesMatrix.zeros(u.s, u.N, (n,))
    T = np.stack(mats, axis=1) if mats else qi_zeros((n, 0, n))
    return _bilinear(T, u, v)


def _slice(v: SeriesMatrix, sl: slice, n: int) -> SeriesMatrix:
    return v.map_coefficients(lambda a: a[sl], shape=(n,))


def _place(parts: list[tuple[slice, SeriesMatrix]], dim: int, s: int, N: int) -> SeriesMatrix:
    jet: dict = {}
    for sl, v in parts:
        for m, a in v.jet().items():
            out = jet.setdefault(m, qi_zeros(dim))
            out[sl] = out[sl] + a
    return SeriesMatrix(s, N, (dim,), jet)


def cup(family: Family, kind: str, alpha, a: int, omega, q: int, sh) -> SeriesMatrix:
    """Cup product of an a-cochain of fields with a q-cochain of ``sh``.

    ``kind`` is ``"iota"`` (contraction, sh a form degree >= 1),
    ``"bracket"`` (sh = "T") or ``"lie"`` (Lie derivative on sh).  No sign is
    applied here.
    """
    m = family.model
    s, N = family.s, family.N
    alpha, omega = as_series(alpha, s, N), as_series(omega, s, N)
    out_sh = sh - 1 if kind == "iota" else sh
    dim = m.dim(a + q, out_sh)
    parts = []
    for Q in m.of_dim(a + q):
        front, back = Q[:a + 1], Q[a:]
        rq = m.rank(Q, out_sh)
        if rq == 0:
            continue
        af = family.restrict(Q, front, "T") @ _slice(alpha, m.block(a, "T", front), m.rank(front, "T"))
        wb = family.restrict(Q, back, sh) @ _slice(omega, m.block(q, sh, back), m.rank(back, sh))
        if kind == "iota":
            val = _bilinear(m.iota_tensor(Q, sh), af, wb)
        elif kind == "bracket":
            val = _bilinear(m.bracket_tensor(Q), af, wb)
        elif kind == "lie":
            val = _lie_apply(m, Q, sh, af, wb)
        else:
            raise ValueError(f"unknown cup kind {kind!r}")
        parts.append((m.block(a + q, out_sh, Q), val))
    return _place(parts, dim, s, N)


def split_total(model: CechModel, n: int, w: SeriesMatrix) -> dict:
    """Pieces {(q, p): C^q(Omega^p) cochain} of a total cochain of degree n."""
    if w.shape != (model.total_dim(n),):
        raise DegreeMismatch(f"cochain of length {w.shape[0]} is not of total degree {n}",
                             expected=model.total_dim(n))
    return {(q, p): _slice(w, slice(off, off + size), size)
            for q, p, off, size in model.total_layout(n)}


def join_total(model: CechModel, n: int, pieces: dict, s: int, N: int) -> SeriesMatrix:
    parts = []
    for (q, p), v in pieces.items():
        sl = model.total_piece(n, q, p)
        if sl.stop == sl.start:
            if not v.is_zero():
                raise DegreeMismatch(f"piece C^{q}(Omega^{p}) lies outside the Čech window")
            continue
        parts.append((sl, v))
    return _place(parts, model.total_dim(n), s, N)


def contract_total(family: Family, alpha, a: int, w, n: int) -> SeriesMatrix:
    """C_alpha on a total cochain of degree n; result has degree n + a - 1."""
    m = family.model
    w = as_series(w, family.s, family.N)
    out = {}
    for (q, p), piece in split_total(m, n, w).items():
        if p == 0 or piece.is_zero() or a + q > 3:
            continue
        val = cup(family, "iota", alpha, a, piece, q, p)
        out[(a + q, p - 1)] = val.scale(1 if q % 2 else -1)
    return join_total(m, n + a - 1, out, family.s, family.N)


def lie_cup_total(family: Family, alpha, a: int, w, n: int) -> SeriesMatrix:
    """Cup with the Lie derivative along an a-cochain of fields (no sign)."""
    m = family.model
    w = as_series(w, family.s, family.N)
    out = {}
    for (q, p), piece in split_total(m, n, w).items():
        if piece.is_zero() or a + q > 3:
            continue
        out[(a + q, p)] = cup(family, "lie", alpha, a, piece, q, p)
    return join_total(m, n + a, out, family.s, family.N)


def cup_bracket(family: Family, alpha, a: int, beta, b: int) -> SeriesMatrix:
    """mu(alpha (x) beta) in C^(a+b)(Theta)."""
    return cup(family, "bracket", alpha, a, beta, b, "T")


def lie_derivative(model: CechModel, v, w, n: int, family: Family | None = None) -> SeriesMatrix:
    """Lie derivative of a total cochain along a 0-cochain of fields:
    D(i_v w) + i_v(D w) with i_v the contraction of sign (-1)^q.

    When delta v = 0 this is the componentwise Cartan Lie derivative.
    """
    fam = family or model.fiber
    s, N = fam.s, fam.N
    v = as_series(v, s, N)
    if v.shape != (model.dim(0, "T"),):
        raise DegreeMismatch("vector field must be a Čech 0-cochain")
    w = as_series(w, s, N)
    split_total(model, n, w)
    iv = contract_total(fam, v, 0, w, n).scale(-1)
    out = fam.total_d(n - 1) @ iv if n >= 1 else SeriesMatrix.zeros(s, N, (model.total_dim(n),))
    Dw = fam.total_d(n) @ w
    out = out + contract_total(fam, v, 0, Dw, n + 1).scale(-1)
    return out


def deformation_eq_check(family: Family) -> Certificate:
    """delta(d_k theta_l) + mu(theta_k (x) theta_l) = 0 through degree N - 1."""
    ks = family.ks
    dT = family.delta(1, "T")
    for k in range(ks.s):
        for l in range(ks.s):
            lhs = dT @ ks.theta[l].partial(k)
            rhs = cup_bracket(family, ks.theta[k], 1, ks.theta[l], 1)
            R = (lhs + rhs).truncate(ks.N - 1)
            if not R.is_zero():
                return Certificate("deformation_equation", "fail", {"pair": [k + 1, l + 1]}, R)
    lead = [dT.at_zero() @ ks.leading(l) for l in range(ks.s)]
    for l, r in enumerate(lead):
        if any(r):
            return Certificate("deformation_equation", "fail",
                               {"leading_not_cocycle": l + 1}, r)
    return Certificate("deformation_equation", "ok")


def require_cocycle(family: Family, w: SeriesMatrix, n: int, order: int | None = None):
    r = family.total_d(n) @ w
    if order is not None:
        r = r.truncate(order)
    if not r.is_zero():
        raise NotCocycle(f"cochain is not closed under the total differential (degree {n})")


def gauss_manin(family: Family, l: int, w, n: int | None = None) -> SeriesMatrix:
    """nabla_l w = d_l w + C_{theta_l} w; valid through degree N - 1."""
    m = family.model
    n = m.weight if n is None else n
    w = as_series(w, family.s, family.N)
    require_cocycle(family, w, n)
    return w.partial(l) + contract_total(family, family.ks.theta[l], 1, w, n)


def ksform_from_jets(model: CechModel, s: int, N: int, coeffs: list[dict]) -> KSForm:
    n = model.dim(1, "T")
    th = []
    for c in coeffs:
        th.append(SeriesMatrix(s, N, (n,), {tuple(m): np.asarray(v, dtype=object) for m, v in c.items()}))
    return KSForm(s, N, tuple(th))


def potential_ksform(model: CechModel, s: int, N: int, potential: dict) -> KSForm:
    """theta_l = d_l Phi for a C^1(Theta)-valued polynomial Phi (monomial -> cochain)."""
    n = model.dim(1, "T")
    Phi = SeriesMatrix(s, N + 1, (n,), {tuple(m): np.asarray(v, dtype=object) for m, v in potential.items()})
    th = tuple(SeriesMatrix(s, N, (n,), Phi.partial(l).jet()) for l in range(s))
    return KSForm(s, N, th)


def contraction_identity_check(model: CechModel, alpha, a: int, w, n: int) -> Certificate:
    """[D, C_alpha] = C_{delta alpha} + (-1)^(a+1) (Lie_alpha cup) on a degree-n cochain.

    The graded commutator uses the degree a - 1 of C_alpha.
    """
    fam = model.fiber
    w = np.asarray(w, dtype=object)
    alpha = np.asarray(alpha, dtype=object)
    out_dim = model.total_dim(n + a)
    Cw = contract_total(fam, alpha, a, w, n).at_zero()
    lhs = model.total_d(n + a - 1) @ Cw if n + a - 1 >= 0 else qi_zeros(out_dim)
    sign = 1 if a % 2 else -1
    lhs = lhs - contract_total(fam, alpha, a, model.total_d(n) @ w, n + 1).at_zero() * sign
    rhs = lie_cup_total(fam, alpha, a, w, n).at_zero() * (1 if a % 2 else -1)
    if model.dim(a + 1, "T"):
        rhs = rhs + contract_total(fam, model.delta(a, "T") @ alpha, a + 1, w, n).at_zero()
    if np.array_equal(lhs, rhs):
        return Certificate("contraction_identity", "ok")
    return Certificate("contraction_identity", "fail", {"a": a, "degree": n}, lhs - rhs)
