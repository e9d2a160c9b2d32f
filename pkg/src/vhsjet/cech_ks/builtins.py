"""Built-in Čech models.

``abelian_model``: constant forms Lambda^p(C^g) and constant vector fields
C^g on every simplex of a simplicial complex, with d = 0, zero brackets and
identity restrictions.  Its cohomology is Lambda^p(C^g) (x) H^q(complex).

``annulus_model``: an elliptic curve C*/q^Z covered by two annuli whose
intersection has two components V_a, V_b.  Functions, 1-forms (dw/w basis)
and vector fields (w d/dw basis) are Laurent polynomials with exponents in
[-D, D]; products are truncated to that window.  On V_b the second chart is
w1 = q w0.  The family multiplies q by exp(f(t)), f(t) = t + a t^2.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from ..exact_series import ONE, QI, SeriesMatrix, qi_eye, qi_zeros
from .model import CechModel, KSForm, faces

SEVEN_VERTEX_TORUS = tuple(
    sorted({tuple(sorted((i % 7, (i + 1) % 7, (i + 3) % 7))) for i in range(7)}
           | {tuple(sorted((i % 7, (i + 2) % 7, (i + 3) % 7))) for i in range(7)})
)


def closure(top: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    out = set()
    for T in top:
        T = tuple(sorted(T))
        for k in range(1, len(T) + 1):
            out.update(combinations(T, k))
    return sorted(out, key=lambda Q: (len(Q), Q))


def exterior_basis(g: int, p: int) -> list[tuple[int, ...]]:
    return list(combinations(range(g), p))


def contraction_tensor(g: int, p: int) -> np.ndarray:
    """i_{e_i}(e_S) = sum_k (-1)^k [s_k = i] e_{S - s_k}; shape (C(g,p-1), g, C(g,p))."""
    src, dst = exterior_basis(g, p), exterior_basis(g, p - 1)
    idx = {S: n for n, S in enumerate(dst)}
    out = qi_zeros((len(dst), g, len(src)))
    for b, S in enumerate(src):
        for k, i in enumerate(S):
            out[idx[S[:k] + S[k + 1:]], i, b] = QI(-1 if k % 2 else 1)
    return out


def abelian_model(nerve: str = "torus", g: int = 2, weight: int | None = None) -> CechModel:
    tops = {
        "point": [(0,)],
        "circle": [(0, 1), (0, 2), (1, 2)],
        "torus": list(SEVEN_VERTEX_TORUS),
    }
    if nerve not in tops:
        raise ValueError(f"unknown nerve {nerve!r}; choose from {sorted(tops)}")
    simp = closure(tops[nerve])
    if weight is None:
        weight = {"point": 0, "circle": 1, "torus": 2}[nerve]
    sheaves = list(range(g + 1)) + ["T"]
    rk = {p: len(exterior_basis(g, p)) for p in range(g + 1)}
    rk["T"] = g
    ranks = {(Q, sh): rk[sh] for Q in simp for sh in sheaves}
    restr = {(Q, j, sh): qi_eye(rk[sh]) for Q in simp if len(Q) > 1
             for j, _ in faces(Q) for sh in sheaves}
    iota = {(Q, p): contraction_tensor(g, p) for Q in simp for p in range(1, g + 1)}
    return CechModel(f"abelian-{nerve}-g{g}", g, weight, simp, ranks, restr, {}, iota, {},
                     meta={"builtin": "abelian", "nerve": nerve, "g": g,
                           "global_vector_fields": True})


def _window(D: int) -> list[int]:
    return list(range(-D, D + 1))


def annulus_model(D: int = 3, q=2) -> CechModel:
    if D < 1:
        raise ValueError("window half-width D must be >= 1")
    q = QI.coerce(q)
    ns = _window(D)
    n = len(ns)
    V, E = [(0,), (1,)], (0, 1)
    simp = V + [E]
    ranks = {}
    for sh in (0, 1, "T"):
        for v in V:
            ranks[(v, sh)] = n
        ranks[(E, sh)] = 2 * n
    stack = np.concatenate([qi_eye(n), qi_eye(n)], axis=0)
    scale = qi_zeros((n, n))
    for k, e in enumerate(ns):
        scale[k, k] = q ** e if e >= 0 else ONE / q ** (-e)
    change = np.concatenate([qi_eye(n), scale], axis=0)
    restr = {}
    for sh in (0, 1, "T"):
        restr[(E, 1, sh)] = stack      # face (0,): same chart
        restr[(E, 0, sh)] = change     # face (1,): chart w1 = q w0 on V_b
    dloc = qi_zeros((n, n))
    for k, e in enumerate(ns):
        dloc[k, k] = QI(e)
    iloc = qi_zeros((n, n, n))          # (w^a w d/dw) contracted with (w^b dw/w) = w^(a+b)
    bloc = qi_zeros((n, n, n))          # [w^a w d/dw, w^b w d/dw] = (b - a) w^(a+b) w d/dw
    for ia, a in enumerate(ns):
        for ib, b in enumerate(ns):
            if -D <= a + b <= D:
                iloc[ns.index(a + b), ia, ib] = ONE
                if b != a:
                    bloc[ns.index(a + b), ia, ib] = QI(b - a)
    d, iota, br = {}, {}, {}
    for Q in V:
        d[(Q, 0)], iota[(Q, 1)], br[Q] = dloc, iloc, bloc
    d[(E, 0)] = _blockdiag(dloc, dloc)
    iota[(E, 1)] = _blockdiag3(iloc, iloc)
    br[E] = _blockdiag3(bloc, bloc)
    return CechModel(f"annulus-D{D}", 1, 1, simp, ranks, restr, d, iota, br,
                     meta={"builtin": "annulus", "D": D, "q": q.to_json(),
                           "global_vector_fields": True})


def _blockdiag(A, B):
    out = qi_zeros((A.shape[0] + B.shape[0], A.shape[1] + B.shape[1]))
    out[:A.shape[0], :A.shape[1]] = A
    out[A.shape[0]:, A.shape[1]:] = B
    return out


def _blockdiag3(A, B):
    a, b = A.shape[0], B.shape[0]
    out = qi_zeros((a + b, a + b, a + b))
    out[:a, :a, :a] = A
    out[a:, a:, a:] = B
    return out


def annulus_generator(model: CechModel) -> np.ndarray:
    """The C^1(Theta) cochain equal to w d/dw on V_b and 0 on V_a."""
    D = model.meta["D"]
    n = 2 * D + 1
    v = qi_zeros(model.dim(1, "T"))
    v[n + D] = ONE
    return v


def annulus_ksform(model: CechModel, N: int = 3, a=1) -> KSForm:
    """theta(t) = f'(t) (w d/dw on V_b), f(t) = t + a t^2."""
    a = QI.coerce(a)
    g = annulus_generator(model)
    jet = {(0,): g}
    if N >= 1:
        jet[(1,)] = g * (a * 2)
    return KSForm(1, N, (SeriesMatrix(1, N, g.shape, jet),))


def annulus_basis(model: CechModel) -> tuple[list[np.ndarray], list[int]]:
    """The fixture basis of H^1: (dw/w, dw/w) in C^0(Omega^1), level 1, and
    the constant 1 on V_b in C^1(Omega^0), level 0."""
    D = model.meta["D"]
    n = 2 * D + 1
    z1 = qi_zeros(model.total_dim(1))
    z0 = qi_zeros(model.total_dim(1))
    sl1 = model.total_piece(1, 0, 1)
    z1[sl1.start + D] = ONE
    z1[sl1.start + n + D] = ONE
    sl0 = model.total_piece(1, 1, 0)
    z0[sl0.start + n + D] = ONE
    return [z1, z0], [1, 0]


def annulus_expected_connection(N: int, a=1) -> SeriesMatrix:
    """Hand-derived connection in the basis (dw/w, [1 on V_b]): [[0, 0], [-(1 + 2 a t), 0]].

    Gauss-Manin of dw/w is minus the contraction with f'(t) w d/dw on V_b;
    the second class is parallel because there are no Čech 2-cochains.
    """
    a = QI.coerce(a)
    low = {(0,): -ONE}
    if N >= 1:
        low[(1,)] = -(a * 2)
    jet = {}
    for m, v in low.items():
        M = qi_zeros((2, 2))
        M[1, 0] = v
        jet[m] = M
    return SeriesMatrix(1, N, (2, 2), jet)


def point_model() -> CechModel:
    """One vertex, de Rham complex of a point."""
    return CechModel("point", 0, 0, [(0,)], {((0,), 0): 1, ((0,), "T"): 0}, {}, {}, {}, {},
                     meta={"builtin": "point", "global_vector_fields": False})


BUILTINS = {
    "point": point_model,
    "abelian-circle": lambda: abelian_model("circle", 1),
    "abelian-torus": lambda: abelian_model("torus", 2),
    "annulus": annulus_model,
}
