"""From a Čech model with a KS form to an abstract filtered flat connection,
plus the cochain-level checks that compare the two descriptions."""

from __future__ import annotations

import numpy as np

from ..errors import DegreeMismatch, DeformationOrderTooLow, NotCocycle, RankJump
from ..exact_series import ONE, SeriesMatrix, is_zero_array, monomials, qi_zeros
from ..filtered_connection import Certificate, Connection, CosetMap, FilteredModule
from ..linalg import SpanReducer, cohomology, nullspace, solve, stack_columns
from .model import CechModel, Family, KSForm
from .ops import as_series, contract_total, gauss_manin, split_total


def _mono_sub(m, k):
    out = tuple(a - b for a, b in zip(m, k))
    return out if min(out) >= 0 else None


def filtration_columns(model: CechModel, n: int, p: int) -> list[int]:
    """Coordinates of the degree-n total cochains lying in sigma^{>= p}."""
    out = []
    for q, pp, off, size in model.total_layout(n):
        if pp >= p:
            out.extend(range(off, off + size))
    return out


def _restricted(model: CechModel, n: int, p: int, v: np.ndarray) -> np.ndarray:
    out = qi_zeros(model.total_dim(n))
    out[filtration_columns(model, n, p)] = v
    return out


def adapted_basis(model: CechModel, n: int | None = None) -> tuple[list[np.ndarray], list[int]]:
    """Cocycles representing a basis of H^n at t = 0, adapted to the stupid filtration.

    Vectors are chosen in sigma^{>=p} for p from the top form degree down,
    independent modulo boundaries and earlier choices.
    """
    n = model.weight if n is None else n
    D_out = model.total_d(n)
    D_in = model.total_d(n - 1) if n >= 1 else qi_zeros((model.total_dim(n), 0))
    dim = model.total_dim(n)
    red = SpanReducer(dim, [D_in[:, j] for j in range(D_in.shape[1])])
    reps, levels = [], []
    for p in range(min(n, model.dim_X), -1, -1):
        cols = filtration_columns(model, n, p)
        if not cols:
            continue
        sub = D_out[:, cols] if D_out.shape[0] else qi_zeros((0, len(cols)))
        for z in (nullspace(sub) if sub.shape[0] else _std(len(cols))):
            v = _restricted(model, n, p, z)
            if red.add(v):
                reps.append(v)
                levels.append(p)
    return reps, levels


def _std(n):
    out = []
    for j in range(n):
        e = qi_zeros(n)
        e[j] = ONE
        out.append(e)
    return out


def lift_cocycle(family: Family, z0: np.ndarray, n: int, p: int) -> SeriesMatrix:
    """Extend a fiber cocycle in sigma^{>=p} to a closed cochain over R_S through order N."""
    m = family.model
    s, N = family.s, family.N
    D = family.total_d(n)
    Dj = D.jet()
    cols = filtration_columns(m, n, p)
    D0 = D.at_zero()[:, cols]
    jet = {(0,) * s: z0}
    for mono in monomials(s, N):
        if sum(mono) == 0:
            continue
        rhs = qi_zeros(D.shape[0])
        for k, Dk in Dj.items():
            if sum(k) == 0:
                continue
            rest = _mono_sub(mono, k)
            if rest is not None and rest in jet:
                rhs = rhs - Dk @ jet[rest]
        if not any(rhs):
            continue
        x = solve(D0, rhs)
        if x is None:
            raise RankJump("a fiber cohomology class does not extend over the base",
                           monomial=list(mono), level=p)
        jet[mono] = _restricted(m, n, p, x)
    return SeriesMatrix(s, N, (m.total_dim(n),), jet)


def check_basis(model: CechModel, reps, levels, n: int):
    """A supplied basis must consist of cocycles in sigma^{>=p} independent modulo boundaries
    and span H^n."""
    auto, _ = adapted_basis(model, n)
    if len(reps) != len(auto):
        raise RankJump("supplied basis has the wrong size", expected=len(auto), got=len(reps))
    D_in = model.total_d(n - 1) if n >= 1 else qi_zeros((model.total_dim(n), 0))
    red = SpanReducer(model.total_dim(n), [D_in[:, j] for j in range(D_in.shape[1])])
    allowed = None
    for z, p in zip(reps, levels):
        if any(model.total_d(n) @ z):
            raise NotCocycle("supplied basis vector is not closed")
        allowed = set(filtration_columns(model, n, p))
        if any(z[i] for i in range(len(z)) if i not in allowed):
            raise NotCocycle(f"supplied basis vector leaves sigma^>={p}")
        if not red.add(z):
            raise RankJump("supplied basis is dependent modulo boundaries")


def realize_vhs(model: CechModel, ks: KSForm, n: int | None = None,
                basis: tuple[list, list] | None = None) -> tuple[FilteredModule, Connection]:
    """Adapted basis of H^n with Hodge levels and the Gauss-Manin matrices.

    ``basis`` = (cocycles, levels) replaces the automatic choice.  The
    matrices are exact through degree N - 1, so the connection lives over
    truncation order N - 1.
    """
    n = model.weight if n is None else n
    if ks.N < 1:
        raise DeformationOrderTooLow("realizing the connection needs truncation order N >= 1")
    family = Family(model, ks)
    s, N = ks.s, ks.N
    if basis is None:
        reps, levels = adapted_basis(model, n)
    else:
        reps, levels = list(basis[0]), [int(p) for p in basis[1]]
        check_basis(model, reps, levels, n)
    r = len(reps)
    lifts = [lift_cocycle(family, z, n, p) for z, p in zip(reps, levels)]
    D = family.total_d(n - 1) if n >= 1 else None
    D0 = D.at_zero() if D is not None else qi_zeros((model.total_dim(n), 0))
    Dj = D.jet() if D is not None else {}
    nb = D0.shape[1]
    big = stack_columns(reps, model.total_dim(n))
    big = np.concatenate([big, D0], axis=1) if nb else big
    order = N - 1
    mats = []
    for l in range(s):
        A: dict = {}
        beta: dict = {}
        for a in range(r):
            g = gauss_manin(family, l, lifts[a], n)
            gj = g.jet()
            for mono in monomials(s, order):
                rhs = gj.get(mono, qi_zeros(model.total_dim(n))).copy()
                for k in monomials(s, order):
                    if sum(k) == 0:
                        continue
                    rest = _mono_sub(mono, k)
                    if rest is None:
                        continue
                    if (rest, a) in A:
                        for b in range(r):
                            zb = lifts[b].jet().get(k)
                            if zb is not None and A[(rest, a)][b]:
                                rhs = rhs - zb * A[(rest, a)][b]
                    if (rest, a) in beta and k in Dj:
                        rhs = rhs - Dj[k] @ beta[(rest, a)]
                x = solve(big, rhs)
                if x is None:
                    raise RankJump("Gauss-Manin image is not a combination of the lifted basis",
                                   monomial=list(mono), column=a + 1)
                A[(mono, a)] = x[:r]
                beta[(mono, a)] = x[r:]
        jet = {}
        for mono in monomials(s, order):
            M = qi_zeros((r, r))
            for a in range(r):
                M[:, a] = A[(mono, a)]
            if not is_zero_array(M):
                jet[mono] = M
        mats.append(SeriesMatrix(s, order, (r, r), jet))
    module = FilteredModule(tuple(levels), s, order, n)
    return module, Connection(module, tuple(mats))


# -- Griffiths: degree -1 block against contraction with kappa1 ---------------------------


def graded_cohomology(model: CechModel, n: int, p: int):
    """Čech cohomology H^(n-p)(Omega^p) at t = 0: representatives and boundary reducer."""
    q = n - p
    dim = model.dim(q, p) if 0 <= q <= 3 else 0
    d_in = model.delta(q - 1, p) if q >= 1 and dim else qi_zeros((dim, 0))
    d_out = model.delta(q, p) if q + 1 <= 3 and model.dim(q + 1, p) else qi_zeros((0, dim))
    return cohomology(d_in, d_out)


def griffiths_check(model: CechModel, ks: KSForm, l: int, n: int | None = None) -> Certificate:
    """Degree -1 block of the realized connection versus cup-contraction with theta_l(0).

    The right side is computed on Čech cohomology of each Omega^p from the
    leading components of the adapted basis, independently of the lifting.
    """
    from ..filtered_connection import require_transversal

    n = model.weight if n is None else n
    module, conn = realize_vhs(model, ks, n)
    require_transversal(conn, at_zero_only=True)
    reps, levels = adapted_basis(model, n)
    A0 = conn.mats[l].at_zero()
    th = ks.leading(l)
    fam = model.fiber
    for p in sorted(set(levels)):
        src = [a for a, q in enumerate(levels) if q == p]
        tgt = [b for b, q in enumerate(levels) if q == p - 1]
        if not tgt:
            continue
        qdeg = n - p
        _, red = graded_cohomology(model, n, p - 1)
        # leading components in C^(n-p+1)(Omega^(p-1))
        sl = model.total_piece(n, qdeg + 1, p - 1)
        lead = {b: reps[b][sl] for b in tgt}
        for a in src:
            w = contract_total(fam, th, 1, reps[a], n).at_zero()
            lhs = w[sl] - sum((lead[b] * A0[b, a] for b in tgt), qi_zeros(sl.stop - sl.start))
            if not red.contains(lhs):
                return Certificate("griffiths", "fail", {"field": l + 1, "column": a + 1, "level": p},
                                   lhs)
    return Certificate("griffiths", "ok")


# -- the cochain formula for the second derivative of the Archimedean period map ------


def _check_order(ks: KSForm):
    if ks.N < 2:
        raise DeformationOrderTooLow("the cochain formula needs theta through order 2 (N >= 2)",
                                     N=ks.N)


class BoldSpace:
    """Weight-n total cochains times T^j, indexed by level p - j in {-2, -1}.

    At a fixed level the bold differential is the ordinary total differential,
    so each level is a copy of C^n_tot and F^0_ar is everything at level >= 0.
    """

    levels = (-2, -1)

    def __init__(self, model: CechModel, n: int):
        self.model, self.n = model, n
        self.size = model.total_dim(n)
        self.dim = 2 * self.size

    def slot(self, level: int) -> slice:
        k = self.levels.index(level)
        return slice(k * self.size, (k + 1) * self.size)

    def place(self, level: int, v: np.ndarray) -> np.ndarray:
        out = qi_zeros(self.dim)
        if level in self.levels:
            out[self.slot(level)] = v
        return out


def _theta_term(model, ks, k, l):
    return ks.second(k, l)


def same_edge_term(model: CechModel, ze: np.ndarray, xi: np.ndarray, z: np.ndarray,
                   n: int) -> np.ndarray:
    """xi_e _| (zeta_e _| d z_back) on each simplex Q with e = Q[:2], back = Q[1:].

    This is the part of the bold Lie derivative that raises the power of T,
    with both fields taken on the same edge.  Total degree stays n.
    """
    fam = model.fiber
    out = qi_zeros(model.total_dim(n))
    for q, p, off, size in model.total_layout(n):
        if p == 0 or q + 1 > model.max_dim:
            continue
        sl = model.total_piece(n, q + 1, p - 1)
        for Q in model.of_dim(q + 1):
            e, back = Q[:2], Q[1:]
            R = fam.restrict(Q, e, "T").at_zero()
            u = R @ ze[model.block(1, "T", e)]
            v = R @ xi[model.block(1, "T", e)]
            w = fam.restrict(Q, back, p).at_zero() @ z[off:off + size][model.block(q, p, back)]
            dw = model.d_map(Q, p) @ w
            if not any(dw):
                continue
            inner = np.einsum("aib,i,b->a", model.iota_tensor(Q, p + 1), u, dw)
            val = np.einsum("aib,i,b->a", model.iota_tensor(Q, p), v, inner)
            blk = model.block(q + 1, p - 1, Q)
            out[sl.start + blk.start:sl.start + blk.stop] += val
    return out


def d2_psi_cochain(model: CechModel, ks: KSForm, k: int, l: int, n: int | None = None,
                   pairs: list | None = None, theta: np.ndarray | None = None,
                   check_closed: bool = True) -> CosetMap:
    """The three-term cochain image on the adapted basis, modulo
    F^0_ar + span{nabla_eta(H_ar)} at t = 0.

    Source e_a T^j with level L = p_a - j in {0, 1} maps to
        C_zeta C_xi z_a                      at level L - 2
      - xi _| (zeta _| d z_a), same edge     at level L - 2 (one more power of T)
      + C_theta z_a                          at level L - 1
    with zeta = theta_k(0), xi = theta_l(0), theta = d_k theta_l at 0.
    ``pairs``/``theta`` replace the representative: pairs are (c, 1, zeta, 1, xi);
    pairs with a zero factor are dropped.  Raises NotCocycle when the image is
    not closed below level 0 (it then defines no class) unless ``check_closed``
    is off.
    """
    _check_order(ks)
    n = model.weight if n is None else n
    fam = model.fiber
    reps, levels = adapted_basis(model, n)
    Dn = model.total_d(n)
    for z in reps:
        if any(Dn @ z):
            raise NotCocycle("basis representative is not closed")
    if pairs is None:
        pairs = [(ONE, 1, ks.leading(k), 1, ks.leading(l))]
    if theta is None:
        theta = _theta_term(model, ks, k, l)
    pairs = [pr for pr in pairs if pr[0] and any(pr[2]) and any(pr[4])]
    for _, da, _, db, _ in pairs:
        if (da, db) != (1, 1):
            raise DegreeMismatch("representative pairs must be products of Čech 1-cochains")
    bold = BoldSpace(model, n)
    domain = [(a, p - L) for L in (1, 0) for a, p in enumerate(levels)]
    num = qi_zeros((bold.dim, len(domain)))
    for col, (a, j) in enumerate(domain):
        L = levels[a] - j
        z = reps[a]
        y = qi_zeros(bold.dim)
        for c, _, ze, _, xi in pairs:
            inner = contract_total(fam, xi, 1, z, n).at_zero()
            t1 = contract_total(fam, ze, 1, inner, n).at_zero()
            t2 = same_edge_term(model, ze, xi, z, n)
            y = y + bold.place(L - 2, (t1 - t2) * c)
        y = y + bold.place(L - 1, contract_total(fam, theta, 1, z, n).at_zero())
        num[:, col] = y
        for lev in bold.levels if check_closed else ():
            if any(Dn @ y[bold.slot(lev)]):
                raise NotCocycle("cochain image is not closed below level 0",
                                 source=[a + 1, j], level=lev)
    den = []
    Dp = model.total_d(n - 1) if n >= 1 else qi_zeros((bold.size, 0))
    for lev in bold.levels:
        for j in range(Dp.shape[1]):
            den.append(bold.place(lev, Dp[:, j]))
    for z in reps:
        for eta in range(ks.s):
            # nabla_eta of z_b at level 0 lands at level -1 through the contraction
            den.append(bold.place(-1, contract_total(fam, ks.leading(eta), 1, z, n).at_zero()))
    return CosetMap(num, tuple(den), tuple(domain))


def cochain_vs_abstract(model: CechModel, ks: KSForm, k: int, l: int,
                        n: int | None = None) -> Certificate:
    """Compare d2_psi_cochain with archimedean.d2_psi of the realized connection.

    The abstract coset (window coordinates (a, j)) is pushed into the bold
    space by e_b T^j -> z_b at level p_b - j; both cosets are then compared
    inside the bold space.
    """
    from ..archimedean import ArModule, d2_psi

    n = model.weight if n is None else n
    cochain = d2_psi_cochain(model, ks, k, l, n)
    module, conn = realize_vhs(model, ks, n)
    am = ArModule(module)
    abstract = d2_psi(conn, k, l, am)
    reps, levels = adapted_basis(model, n)
    bold = BoldSpace(model, n)
    coords = am.coords()

    def push(v):
        out = qi_zeros(bold.dim)
        for (b, j), x in zip(coords, v):
            if x:
                out = out + bold.place(levels[b] - j, reps[b] * x)
        return out

    a_cols = {lab: abstract.numerator[:, i] for i, lab in enumerate(abstract.domain)}
    num = qi_zeros((bold.dim, len(cochain.domain)))
    for col, lab in enumerate(cochain.domain):
        num[:, col] = push(a_cols[lab])
    den = list(cochain.denominator) + [push(v) for v in abstract.denominator]
    pushed = CosetMap(num, tuple(den), cochain.domain)
    widened = CosetMap(cochain.numerator, tuple(den), cochain.domain)
    if pushed.equals(widened):
        return Certificate("cochain_vs_abstract", "ok")
    return Certificate("cochain_vs_abstract", "fail", {"pair": [k + 1, l + 1]},
                       (pushed - widened).reduced())


def theta_term_level(model: CechModel, ks: KSForm, k: int, l: int, n: int | None = None,
                     samples: list | None = None) -> Certificate:
    """The theta-contraction term lies in F^-1_ar.

    On the adapted basis the theta-only image must vanish at level -2.  For
    each extra total cochain in ``samples`` every piece w in C^q(Omega^p) is
    taken as w T^j with j <= p (so in F^0_ar); its contraction must land at
    level >= -1.
    """
    n = model.weight if n is None else n
    cm = d2_psi_cochain(model, ks, k, l, n, pairs=[], check_closed=False)
    bold = BoldSpace(model, n)
    lower = cm.numerator[bold.slot(-2), :]
    if not is_zero_array(lower):
        return Certificate("theta_term_level", "fail", {"pair": [k + 1, l + 1]}, lower)
    theta = _theta_term(model, ks, k, l)
    fam = model.fiber
    for i, w in enumerate(samples or []):
        for q, p, off, size in model.total_layout(n):
            piece = qi_zeros(model.total_dim(n))
            piece[off:off + size] = w[off:off + size]
            img = contract_total(fam, theta, 1, piece, n).at_zero()
            if not any(img):
                continue
            for j in range(p - 1, p + 1):
                if (p - 1) - j < -1:
                    return Certificate("theta_term_level", "fail",
                                       {"sample": i, "piece": [q, p], "power": j})
    return Certificate("theta_term_level", "ok")
