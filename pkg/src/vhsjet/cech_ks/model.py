"""Finite Čech models: a nerve with finite free modules of forms and relative
vector fields on each simplex, and constant structure maps at the central
fiber.

Sheaves are named by form degree ``0..dim_X`` and ``"T"`` for vector fields.
A simplex ``Q = (i0, ..., iq)`` is always written in the chart of ``i0``, so
the only restriction maps that change chart are those dropping ``i0``.  The
one-parameter-per-variable deformation of those maps is produced from a
Kodaira-Spencer form by :class:`Family`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from ..errors import DeformationEqFailed, MismatchedRing, ModelInvalid
from ..exact_series import QI, SeriesMatrix, is_zero_array, monomials, qi_zeros
from ..filtered_connection import Certificate

Simplex = tuple


def faces(Q: Simplex) -> list[tuple[int, Simplex]]:
    """Codimension-one faces (j, Q minus its j-th vertex)."""
    return [(j, Q[:j] + Q[j + 1:]) for j in range(len(Q))]


class CechModel:
    def __init__(self, name: str, dim_X: int, weight: int, simplices, ranks: dict,
                 restrictions: dict, d: dict, iota: dict, bracket: dict, meta: dict | None = None):
        self.name = name
        self.dim_X = int(dim_X)
        self.weight = int(weight)
        simp = sorted({tuple(sorted(Q)) for Q in simplices}, key=lambda Q: (len(Q), Q))
        if any(len(Q) > 4 for Q in simp):
            raise ModelInvalid("nerve simplices are limited to dimension 3")
        self.simplices: tuple[Simplex, ...] = tuple(simp)
        self.ranks = {(tuple(Q), sh): int(r) for (Q, sh), r in ranks.items()}
        self.restrictions = {(tuple(Q), j, sh): np.asarray(M, dtype=object)
                             for (Q, j, sh), M in restrictions.items()}
        self.d = {(tuple(Q), p): np.asarray(M, dtype=object) for (Q, p), M in d.items()}
        self.iota = {(tuple(Q), p): np.asarray(M, dtype=object) for (Q, p), M in iota.items()}
        self.bracket = {tuple(Q): np.asarray(M, dtype=object) for Q, M in bracket.items()}
        self.meta = dict(meta or {})
        self._check_shapes()

    # -- bookkeeping -------------------------------------------------------

    @property
    def sheaves(self) -> list:
        return list(range(self.dim_X + 1)) + ["T"]

    def rank(self, Q: Simplex, sh) -> int:
        return self.ranks.get((Q, sh), 0)

    def of_dim(self, q: int) -> list[Simplex]:
        return [Q for Q in self.simplices if len(Q) == q + 1]

    @property
    def max_dim(self) -> int:
        return max(len(Q) for Q in self.simplices) - 1

    @cached_property
    def _layout(self) -> dict:
        out = {}
        for sh in self.sheaves:
            for q in range(4):
                off, blocks = 0, {}
                for Q in self.of_dim(q):
                    r = self.rank(Q, sh)
                    blocks[Q] = (off, r)
                    off += r
                out[(q, sh)] = (off, blocks)
        return out

    def dim(self, q: int, sh) -> int:
        if q < 0 or q > 3:
            return 0
        return self._layout[(q, sh)][0]

    def block(self, q: int, sh, Q: Simplex) -> slice:
        off, r = self._layout[(q, sh)][1][Q]
        return slice(off, off + r)

    def total_layout(self, n: int) -> list[tuple[int, int, int, int]]:
        """Pieces (q, p, offset, size) of total degree n = q + p."""
        out, off = [], 0
        for p in range(self.dim_X + 1):
            q = n - p
            if 0 <= q <= 3:
                size = self.dim(q, p)
                out.append((q, p, off, size))
                off += size
        return out

    def total_dim(self, n: int) -> int:
        return sum(size for *_, size in self.total_layout(n))

    def total_piece(self, n: int, q: int, p: int) -> slice:
        for qq, pp, off, size in self.total_layout(n):
            if (qq, pp) == (q, p):
                return slice(off, off + size)
        return slice(0, 0)

    def _check_shapes(self):
        for (Q, j, sh), M in self.restrictions.items():
            F = faces(Q)[j][1]
            if M.shape != (self.rank(Q, sh), self.rank(F, sh)):
                raise ModelInvalid(f"restriction {Q}<-{F} on sheaf {sh} has shape {M.shape}",
                                   simplex=list(Q))
        for Q in self.simplices:
            if len(Q) == 1:
                continue
            for j, F in faces(Q):
                for sh in self.sheaves:
                    if (Q, j, sh) not in self.restrictions and (self.rank(Q, sh) or self.rank(F, sh)):
                        raise ModelInvalid(f"missing restriction {Q}<-{F} on sheaf {sh}",
                                           simplex=list(Q))
                if F not in self.simplices:
                    raise ModelInvalid(f"face {F} of {Q} is not in the nerve", simplex=list(Q))

    # -- structure maps at the fiber ----------------------------------------

    def rho(self, Q: Simplex, j: int, sh) -> np.ndarray:
        M = self.restrictions.get((Q, j, sh))
        if M is None:
            return qi_zeros((self.rank(Q, sh), self.rank(faces(Q)[j][1], sh)))
        return M

    def d_map(self, Q: Simplex, p: int) -> np.ndarray:
        M = self.d.get((Q, p))
        if M is None:
            return qi_zeros((self.rank(Q, p + 1), self.rank(Q, p)))
        return M

    def iota_tensor(self, Q: Simplex, p: int) -> np.ndarray:
        """Shape (rank Omega^(p-1), rank Theta, rank Omega^p)."""
        M = self.iota.get((Q, p))
        if M is None:
            return qi_zeros((self.rank(Q, p - 1), self.rank(Q, "T"), self.rank(Q, p)))
        return M

    def bracket_tensor(self, Q: Simplex) -> np.ndarray:
        M = self.bracket.get(Q)
        r = self.rank(Q, "T")
        return M if M is not None else qi_zeros((r, r, r))

    def lie_matrices(self, Q: Simplex, sh) -> list[np.ndarray]:
        """Lie derivative along each basis field of Theta(Q), acting on sh(Q).

        On forms this is the Cartan formula i_v d + d i_v, on fields the bracket.
        """
        return self._lie[(Q, sh)]

    @cached_property
    def _lie(self) -> dict:
        out = {}
        for Q in self.simplices:
            rT = self.rank(Q, "T")
            B = self.bracket_tensor(Q)
            out[(Q, "T")] = [np.array(B[:, i, :]) for i in range(rT)]
            for p in range(self.dim_X + 1):
                mats = []
                for i in range(rT):
                    n = self.rank(Q, p)
                    L = qi_zeros((n, n))
                    if p + 1 <= self.dim_X:
                        L = L + self.iota_tensor(Q, p + 1)[:, i, :] @ self.d_map(Q, p)
                    if p >= 1:
                        L = L + self.d_map(Q, p - 1) @ self.iota_tensor(Q, p)[:, i, :]
                    mats.append(L)
                out[(Q, p)] = mats
            for sh in self.sheaves:
                out.setdefault((Q, sh), [])
        return out

    def lie_of(self, Q: Simplex, sh, v: np.ndarray) -> np.ndarray:
        n = self.rank(Q, sh)
        out = qi_zeros((n, n))
        for c, L in zip(v, self.lie_matrices(Q, sh)):
            if c:
                out = out + L * c
        return out

    # -- Čech complexes at t = 0 ----------------------------------------------

    @cached_property
    def fiber(self) -> "Family":
        """The undeformed family (s = 1, N = 0): structure maps at t = 0."""
        return Family.trivial(self)

    def delta(self, q: int, sh) -> np.ndarray:
        """Čech differential C^q(sh) -> C^(q+1)(sh) at the fiber."""
        return self.fiber.delta(q, sh).at_zero()

    def total_d(self, n: int) -> np.ndarray:
        return self.fiber.total_d(n).at_zero()

    def to_json(self) -> dict:
        from .io import model_to_json
        return model_to_json(self)


def _mono_minus(m, l):
    e = list(m)
    e[l] -= 1
    return tuple(e)


@dataclass(frozen=True)
class KSForm:
    """theta(t) dt: for each variable a Čech 1-cochain of vector fields over R_S."""

    s: int
    N: int
    theta: tuple[SeriesMatrix, ...]

    def __post_init__(self):
        th = tuple(self.theta)
        if len(th) != self.s:
            raise MismatchedRing(f"KS form has {len(th)} components, s={self.s}")
        for v in th:
            if (v.s, v.N) != (self.s, self.N):
                raise MismatchedRing("KS form component over a different ring")
        object.__setattr__(self, "theta", th)

    @classmethod
    def from_coefficients(cls, s: int, N: int, coeffs: list[dict]) -> "KSForm":
        """``coeffs[l]`` maps monomials to constant cochain vectors."""
        dim = len(next(iter(coeffs[0].values()))) if coeffs and coeffs[0] else 0
        th = []
        for c in coeffs:
            n = len(next(iter(c.values()))) if c else dim
            th.append(SeriesMatrix(s, N, (n,), {tuple(m): v for m, v in c.items()}))
        return cls(s, N, tuple(th))

    @classmethod
    def zero(cls, model: CechModel, s: int, N: int) -> "KSForm":
        n = model.dim(1, "T")
        return cls(s, N, tuple(SeriesMatrix.zeros(s, N, (n,)) for _ in range(s)))

    def leading(self, l: int) -> np.ndarray:
        return self.theta[l].at_zero()

    def second(self, k: int, l: int) -> np.ndarray:
        """theta_l^(k): the coefficient of t_k in theta_l (= d_k theta_l at 0)."""
        e = [0] * self.s
        e[k] = 1
        return self.theta[l].coefficient(tuple(e))

    def change_order(self, N: int) -> "KSForm":
        return KSForm(self.s, N, tuple(v.change_order(N) for v in self.theta))

    def to_json(self) -> dict:
        from .io import ksform_to_json
        return ksform_to_json(self)


class Family:
    """The deformed restriction maps rho(t) of a model along a KS form.

    The chart-changing maps satisfy d_l rho_{Q<-Q\\i0} = Lie_{tau_l} rho with
    tau_l the component of theta_l on the edge (i0, i1), restricted to Q;
    they are integrated order by order and the equations for every l are
    checked afterwards.
    """

    def __init__(self, model: CechModel, ks: KSForm):
        self.model = model
        self.ks = ks
        self.s, self.N = ks.s, ks.N
        if any(v.shape != (model.dim(1, "T"),) for v in ks.theta):
            raise MismatchedRing("KS form does not live on C^1(Theta) of this model")
        self._rho: dict = {}
        self._integrate()
        self._check_functorial()

    @classmethod
    def trivial(cls, model: CechModel, s: int = 1, N: int = 0) -> "Family":
        return cls(model, KSForm.zero(model, s, N))

    def edge_field(self, l: int, Q: Simplex) -> SeriesMatrix:
        """theta_l on the edge (i0, i1) restricted to Q (chart of i0)."""
        m = self.model
        edge = Q[:2]
        v = self.ks.theta[l]
        sl = m.block(1, "T", edge)
        out = v.map_coefficients(lambda a: a[sl], shape=(m.rank(edge, "T"),))
        cur = edge
        while len(cur) < len(Q):
            nxt = Q[:len(cur) + 1]
            R = m.rho(nxt, len(nxt) - 1, "T")
            out = out.map_coefficients(lambda a, R=R: R @ a, shape=(m.rank(nxt, "T"),))
            cur = nxt
        return out

    def _integrate(self):
        m, s, N = self.model, self.s, self.N
        for (Q, j, sh), R0 in m.restrictions.items():
            if j != 0:
                self._rho[(Q, j, sh)] = SeriesMatrix.constant(s, N, R0)
                continue
            taus = [self.edge_field(l, Q) for l in range(s)]
            coeff = {(0,) * s: R0}
            for mono in monomials(s, N)[1:]:
                l = next(i for i, e in enumerate(mono) if e)
                coeff[mono] = self._lie_step(Q, sh, taus[l], coeff, _mono_minus(mono, l)) * (QI(1) / QI(mono[l]))
            rho = SeriesMatrix(s, N, R0.shape, coeff)
            for l in range(s):
                lhs = rho.partial(l).truncate(N - 1)
                rhs_c = {mm: self._lie_step(Q, sh, taus[l], coeff, mm) for mm in monomials(s, N - 1)}
                rhs = SeriesMatrix(s, N, R0.shape, rhs_c).truncate(N - 1)
                if not (lhs - rhs).is_zero():
                    raise DeformationEqFailed(
                        "chart changes cannot be integrated consistently along this KS form",
                        simplex=list(Q), variable=l + 1)
            self._rho[(Q, j, sh)] = rho

    def _lie_step(self, Q, sh, tau: SeriesMatrix, coeff: dict, target) -> np.ndarray:
        """Coefficient of t^target in Lie_tau(t) rho(t)."""
        m = self.model
        shape = next(iter(coeff.values())).shape
        out = qi_zeros(shape)
        for m1, v in tau.jet().items():
            m2 = tuple(a - b for a, b in zip(target, m1))
            if min(m2) < 0 or m2 not in coeff:
                continue
            out = out + m.lie_of(Q, sh, v) @ coeff[m2]
        return out

    def _check_functorial(self):
        """Deformed restrictions must still compose independently of the path."""
        m = self.model
        for Q in m.simplices:
            if len(Q) < 3:
                continue
            for sh in m.sheaves:
                for a, b in combinations(range(len(Q)), 2):
                    F1, F2 = Q[:a] + Q[a + 1:], Q[:b] + Q[b + 1:]
                    p1 = self.rho(Q, a, sh) @ self.rho(F1, b - 1, sh)
                    p2 = self.rho(Q, b, sh) @ self.rho(F2, a, sh)
                    if not (p1 - p2).is_zero():
                        raise DeformationEqFailed(
                            "deformed restrictions do not compose consistently",
                            simplex=list(Q), sheaf=str(sh))

    def rho(self, Q: Simplex, j: int, sh) -> SeriesMatrix:
        got = self._rho.get((Q, j, sh))
        if got is None:
            return SeriesMatrix.constant(self.s, self.N, self.model.rho(Q, j, sh))
        return got

    def restrict(self, Q: Simplex, G: Simplex, sh) -> SeriesMatrix:
        """Composite restriction sh(G) -> sh(Q) for a face G of Q.

        Vertices of Q not in G are removed from the back first, then from the
        front, so the path is canonical.
        """
        if G == Q:
            return SeriesMatrix.identity(self.s, self.N, self.model.rank(Q, sh))
        # drop the last vertex of Q not in G, or the first one if none at the back
        missing = [i for i, v in enumerate(Q) if v not in G]
        j = missing[-1]
        F = Q[:j] + Q[j + 1:]
        return self.rho(Q, j, sh) @ self.restrict(F, G, sh)

    @cached_property
    def _delta_cache(self) -> dict:
        return {}

    def delta(self, q: int, sh) -> SeriesMatrix:
        key = (q, sh)
        if key in self._delta_cache:
            return self._delta_cache[key]
        m = self.model
        rows, cols = m.dim(q + 1, sh), m.dim(q, sh)
        jet: dict = {}
        for Q in m.of_dim(q + 1):
            rs = m.block(q + 1, sh, Q)
            for j, F in faces(Q):
                if m.rank(Q, sh) == 0 or m.rank(F, sh) == 0:
                    continue
                cs = m.block(q, sh, F)
                sign = 1 if j % 2 == 0 else -1
                for mono, R in self.rho(Q, j, sh).jet().items():
                    M = jet.setdefault(mono, qi_zeros((rows, cols)))
                    M[rs, cs] = M[rs, cs] + R * sign
        out = SeriesMatrix(self.s, self.N, (rows, cols), jet)
        self._delta_cache[key] = out
        return out

    def d_block(self, q: int, p: int) -> np.ndarray:
        """Exterior derivative C^q(Omega^p) -> C^q(Omega^(p+1)), block diagonal."""
        m = self.model
        out = qi_zeros((m.dim(q, p + 1), m.dim(q, p)))
        for Q in m.of_dim(q):
            if m.rank(Q, p) and m.rank(Q, p + 1):
                out[m.block(q, p + 1, Q), m.block(q, p, Q)] = m.d_map(Q, p)
        return out

    def total_d(self, n: int) -> SeriesMatrix:
        """D = delta + (-1)^q d on total degree n."""
        m = self.model
        src, dst = m.total_layout(n), m.total_layout(n + 1)
        rows, cols = m.total_dim(n + 1), m.total_dim(n)
        jet: dict = {}
        for q, p, off, size in src:
            if size == 0:
                continue
            cs = slice(off, off + size)
            if q + 1 <= 3:
                rs = m.total_piece(n + 1, q + 1, p)
                if rs.stop > rs.start:
                    for mono, D in self.delta(q, p).jet().items():
                        M = jet.setdefault(mono, qi_zeros((rows, cols)))
                        M[rs, cs] = M[rs, cs] + D
            if p + 1 <= m.dim_X:
                rs = m.total_piece(n + 1, q, p + 1)
                if rs.stop > rs.start:
                    M = jet.setdefault((0,) * self.s, qi_zeros((rows, cols)))
                    M[rs, cs] = M[rs, cs] + self.d_block(q, p) * (1 if q % 2 == 0 else -1)
        return SeriesMatrix(self.s, self.N, (rows, cols), jet)


# -- validation ----------------------------------------------------------------


def _fail(name, Q=None, **extra):
    out = {"identity": name}
    if Q is not None:
        out["simplex"] = list(Q)
    out.update(extra)
    return out


def validate_model(model: CechModel, level: str = "strict") -> Certificate:
    """Check every structural identity exactly; failures name the simplex."""
    m = model
    failures = []
    for Q in m.simplices:
        for p in range(m.dim_X - 1):
            if not is_zero_array(m.d_map(Q, p + 1) @ m.d_map(Q, p)):
                failures.append(_fail("d^2=0", Q, degree=p))
        for j, F in faces(Q):
            for p in range(m.dim_X):
                lhs = m.d_map(Q, p) @ m.rho(Q, j, p)
                rhs = m.rho(Q, j, p + 1) @ m.d_map(F, p)
                if not np.array_equal(lhs, rhs):
                    failures.append(_fail("rho commutes with d", Q, face=j, degree=p))
            RT = m.rho(Q, j, "T")
            for p in range(1, m.dim_X + 1):
                iq, iF = m.iota_tensor(Q, p), m.iota_tensor(F, p)
                lhs = np.einsum("aib,ij,bc->ajc", iq, RT, m.rho(Q, j, p))
                rhs = np.einsum("ab,bjc->ajc", m.rho(Q, j, p - 1), iF)
                if not np.array_equal(lhs, rhs):
                    failures.append(_fail("rho commutes with contraction", Q, face=j, degree=p))
            BQ, BF = m.bracket_tensor(Q), m.bracket_tensor(F)
            lhs = np.einsum("aij,ib,jc->abc", BQ, RT, RT)
            rhs = np.einsum("ab,bjc->ajc", RT, BF)
            if not np.array_equal(lhs, rhs):
                failures.append(_fail("rho commutes with bracket", Q, face=j))
        if len(Q) >= 3:
            for sh in m.sheaves:
                if not _faces_commute(m, Q, sh):
                    failures.append(_fail("restrictions compose consistently", Q, sheaf=str(sh)))
    for sh in m.sheaves:
        for q in range(3):
            if m.dim(q + 2, sh) and not is_zero_array(m.delta(q + 1, sh) @ m.delta(q, sh)):
                failures.append(_fail("delta^2=0", sheaf=str(sh), degree=q))
    for n in range(m.dim_X + 2):
        if m.total_dim(n + 2) and not is_zero_array(m.total_d(n + 1) @ m.total_d(n)):
            failures.append(_fail("D^2=0", degree=n))
    for Q in m.simplices:
        B = m.bracket_tensor(Q)
        if not np.array_equal(B, -np.transpose(B, (0, 2, 1))):
            failures.append(_fail("bracket antisymmetric", Q))
        for p in range(m.dim_X + 1):
            for i, L in enumerate(m.lie_matrices(Q, p)):
                if p + 1 <= m.dim_X and not np.array_equal(
                        m.d_map(Q, p) @ L, m.lie_matrices(Q, p + 1)[i] @ m.d_map(Q, p)):
                    failures.append(_fail("Cartan: Lie commutes with d", Q, degree=p, field=i))
    if level == "extended":
        failures.extend(_extended(m))
    if failures:
        return Certificate("validate_model", "fail", {"failures": failures})
    return Certificate("validate_model", "ok", {"level": level})


def _faces_commute(m: CechModel, Q: Simplex, sh) -> bool:
    """rho_{Q<-F} rho_{F<-G} is independent of the intermediate face F."""
    for a, b in combinations(range(len(Q)), 2):
        G = tuple(v for i, v in enumerate(Q) if i not in (a, b))
        F1, F2 = Q[:a] + Q[a + 1:], Q[:b] + Q[b + 1:]
        p1 = m.rho(Q, a, sh) @ m.rho(F1, b - 1, sh)
        p2 = m.rho(Q, b, sh) @ m.rho(F2, a, sh)
        if not np.array_equal(p1, p2):
            return False
    return True


def _extended(m: CechModel) -> list:
    out = []
    for Q in m.simplices:
        B = m.bracket_tensor(Q)
        rT = m.rank(Q, "T")
        for p in range(1, m.dim_X + 1):
            I = m.iota_tensor(Q, p)
            Lp, Lq = m.lie_matrices(Q, p), m.lie_matrices(Q, p - 1)
            for u in range(rT):
                for v in range(rT):
                    iuv = np.einsum("k,akb->ab", B[:, u, v], I)
                    rhs = Lq[u] @ I[:, v, :] - I[:, v, :] @ Lp[u]
                    if not np.array_equal(iuv, rhs):
                        out.append(_fail("i_[u,v] = [L_u, i_v]", Q, degree=p, fields=[u, v]))
                        break
                else:
                    continue
                break
    return out
