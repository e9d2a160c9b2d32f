"""Kodaira-Spencer classes at the central fiber.

H^1 of the two-term complex Theta (x) Theta -> Theta (restrict to the
diagonal, then bracket) is computed through a homotopy retract of the Čech
complex of Theta onto its cohomology.  With (i, p, h) on C(Theta) and the
tensor homotopy H = h (x) 1 + ip (x) h, the map

    (x, y) -> (P x, y + mu H x)

is a quasi-isomorphism from the cone onto the reduced cone whose first term
is H (x) H.  There a cocycle (u, y) is a boundary iff u = 0 and
y lies in delta C^0 + mu I((H (x) H)^1).

Elements of C(Theta) (x) C(Theta) are lists of pairs (coef, a, alpha, b, beta).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DeformationEqFailed, NotCocycle
from ..exact_series import ONE, QI, is_zero_array, qi_zeros
from ..filtered_connection import Certificate
from ..linalg import SpanReducer, cohomology, nullspace, solve, stack_columns
from .model import CechModel, Family, KSForm
from .ops import cup_bracket, deformation_eq_check


class Retract:
    """Splitting C^q = B^q + H^q + L^q of a cochain complex at the fiber."""

    def __init__(self, deltas: dict, dims: dict):
        self.dims = dims
        self.deltas = deltas
        top = max(dims)
        self.H: dict = {}
        self.L: dict = {}
        self.S_inv: dict = {}
        self.nb: dict = {}
        for q in range(top + 1):
            n = dims[q]
            d_in = deltas.get(q - 1, qi_zeros((n, 0)))
            d_out = deltas.get(q, qi_zeros((0, n)))
            reps, _ = cohomology(d_in, d_out)
            Z = SpanReducer(n, nullspace(d_out) if d_out.shape[0] else _std(n))
            L = []
            for e in _std(n):
                if Z.add(e):
                    L.append(e)
            self.H[q], self.L[q] = reps, L
        for q in range(top + 1):
            n = dims[q]
            prev = self.L.get(q - 1, [])
            B = [deltas[q - 1] @ l for l in prev] if prev else []
            self.nb[q] = len(B)
            basis = B + self.H[q] + self.L[q]
            if len(basis) != n:
                raise RuntimeError("cochain splitting does not span")
            S = stack_columns(basis, n)
            aug = np.concatenate([S, _eye(n)], axis=1) if n else S
            from ..linalg import rref
            R, piv = rref(aug) if n else (aug, [])
            self.S_inv[q] = R[:, n:] if n else qi_zeros((0, 0))

    def hdim(self, q: int) -> int:
        return len(self.H.get(q, []))

    def coords(self, q: int, x: np.ndarray) -> np.ndarray:
        return self.S_inv[q] @ x if self.dims[q] else qi_zeros(0)

    def p(self, q: int, x: np.ndarray) -> np.ndarray:
        c = self.coords(q, x)
        nb = self.nb[q]
        return c[nb:nb + self.hdim(q)]

    def i(self, q: int, u: np.ndarray) -> np.ndarray:
        out = qi_zeros(self.dims[q])
        for c, h in zip(u, self.H[q]):
            if c:
                out = out + h * c
        return out

    def h(self, q: int, x: np.ndarray) -> np.ndarray:
        """Homotopy C^q -> C^(q-1)."""
        if q == 0:
            return qi_zeros(0)
        c = self.coords(q, x)
        out = qi_zeros(self.dims[q - 1])
        for cj, l in zip(c[:self.nb[q]], self.L[q - 1]):
            if cj:
                out = out + l * cj
        return out

    def ip(self, q: int, x: np.ndarray) -> np.ndarray:
        return self.i(q, self.p(q, x))


def _std(n):
    out = []
    for j in range(n):
        e = qi_zeros(n)
        e[j] = ONE
        out.append(e)
    return out


def _eye(n):
    from ..exact_series import qi_eye
    return qi_eye(n)


def theta_retract(model: CechModel) -> Retract:
    return _retract_cache(model)


def _retract_cache(model: CechModel) -> Retract:
    r = model.__dict__.get("_theta_retract")
    if r is None:
        dims = {q: model.dim(q, "T") for q in range(4)}
        deltas = {q: model.delta(q, "T") for q in range(3)}
        r = Retract(deltas, dims)
        model.__dict__["_theta_retract"] = r
    return r


# -- tensors of cochains --------------------------------------------------------

Pair = tuple  # (coef, a, alpha, b, beta)


def tensor_matrix(model: CechModel, x: list[Pair], a: int, b: int) -> np.ndarray:
    """Bidegree-(a, b) part of a tensor as a dim(a) x dim(b) matrix."""
    out = qi_zeros((model.dim(a, "T"), model.dim(b, "T")))
    for c, aa, al, bb, be in x:
        if (aa, bb) == (a, b):
            out = out + np.outer(al, be) * c
    return out


def tensor_d(model: CechModel, x: list[Pair]) -> list[Pair]:
    """D(alpha (x) beta) = delta alpha (x) beta + (-1)^a alpha (x) delta beta."""
    out = []
    for c, a, al, b, be in x:
        if a + 1 <= 3 and model.dim(a + 1, "T"):
            out.append((c, a + 1, model.delta(a, "T") @ al, b, be))
        if b + 1 <= 3 and model.dim(b + 1, "T"):
            out.append((c * (-1) ** a, a, al, b + 1, model.delta(b, "T") @ be))
    return out


def tensor_h(model: CechModel, x: list[Pair]) -> list[Pair]:
    """H = h (x) 1 + ip (x) h with the Koszul sign (-1)^a on the second term."""
    R = theta_retract(model)
    out = []
    for c, a, al, b, be in x:
        if a >= 1:
            out.append((c, a - 1, R.h(a, al), b, be))
        if b >= 1:
            out.append((c * (-1) ** a, a, R.ip(a, al), b - 1, R.h(b, be)))
    return out


def tensor_p(model: CechModel, x: list[Pair], total: int) -> dict:
    """P x as {(a, b): hdim(a) x hdim(b) coordinate matrix} in total degree ``total``."""
    R = theta_retract(model)
    out = {}
    for a in range(total + 1):
        b = total - a
        if a > 3 or b > 3:
            continue
        out[(a, b)] = qi_zeros((R.hdim(a), R.hdim(b)))
    for c, a, al, b, be in x:
        if a + b == total and (a, b) in out:
            out[(a, b)] = out[(a, b)] + np.outer(R.p(a, al), R.p(b, be)) * c
    return out


def tensor_mu(model: CechModel, x: list[Pair], degree: int) -> np.ndarray:
    fam = model.fiber
    out = qi_zeros(model.dim(degree, "T"))
    for c, a, al, b, be in x:
        if a + b != degree:
            continue
        out = out + cup_bracket(fam, al, a, be, b).at_zero() * c
    return out


# -- classes -------------------------------------------------------------------------


def _delta_T(model: CechModel, q: int) -> np.ndarray:
    n = model.dim(q, "T")
    if q + 1 > 3 or not model.dim(q + 1, "T"):
        return qi_zeros((0, n))
    return model.delta(q, "T")


def kappa1(model: CechModel, ks: KSForm, l: int) -> dict:
    """Class of theta_l at t = 0 in H^1(Theta): coordinates and representative."""
    th = ks.leading(l)
    return {"coords": h1_coords(model, th), "representative": th}


def h1_coords(model: CechModel, th: np.ndarray, q: int = 1) -> np.ndarray:
    r = _delta_T(model, q) @ th
    if any(r):
        raise NotCocycle(f"Čech {q}-cochain of vector fields is not delta-closed")
    return theta_retract(model).p(q, th)


def obstruction(model: CechModel, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Class in H^2(Theta) of the symmetrized cup-bracket of two 1-cocycles."""
    h1_coords(model, a)
    h1_coords(model, b)
    fam = model.fiber
    half = QI(1) / QI(2)
    c = (cup_bracket(fam, a, 1, b, 1).at_zero() + cup_bracket(fam, b, 1, a, 1).at_zero()) * half
    return theta_retract(model).p(2, c) if model.dim(2, "T") else qi_zeros(0)


@dataclass
class KSecondClass:
    """A representative (sum of pairs, theta) of a class in H^1 of the cone."""

    model: CechModel
    pairs: list = field(default_factory=list)
    theta: np.ndarray | None = None

    def __post_init__(self):
        if self.theta is None:
            self.theta = qi_zeros(self.model.dim(1, "T"))

    def residual(self) -> dict:
        """Cocycle residuals: D(pairs) as matrices and delta theta + mu(pairs)."""
        m = self.model
        Dx = tensor_d(m, self.pairs)
        mats = {(a, 3 - a): tensor_matrix(m, Dx, a, 3 - a) for a in range(4)}
        y = _delta_T(m, 1) @ self.theta
        if m.dim(2, "T"):
            y = y + tensor_mu(m, self.pairs, 2)
        return {"tensor": mats, "theta": y}

    def is_cocycle(self) -> bool:
        r = self.residual()
        return all(is_zero_array(M) for M in r["tensor"].values()) and is_zero_array(r["theta"])

    def require_cocycle(self):
        if not self.is_cocycle():
            raise NotCocycle("pair is not a cocycle of the two-term complex")

    def reduced(self) -> tuple[dict, np.ndarray]:
        """Image (P x, y + mu H x) in the reduced cone."""
        m = self.model
        u = tensor_p(m, self.pairs, 2)
        hx = tensor_h(m, self.pairs)
        y = self.theta + tensor_mu(m, hx, 1)
        return u, y

    def boundary_span(self) -> SpanReducer:
        return _boundary_span(self.model)

    def class_data(self) -> dict:
        """Canonical class: P x coordinates and the reduced second component."""
        self.require_cocycle()
        u, y = self.reduced()
        return {"tensor": u, "theta": self.boundary_span().reduce(y)}

    def __add__(self, other: "KSecondClass") -> "KSecondClass":
        return KSecondClass(self.model, list(self.pairs) + list(other.pairs), self.theta + other.theta)

    def scaled(self, c) -> "KSecondClass":
        c = QI.coerce(c)
        return KSecondClass(self.model, [(k * c, a, al, b, be) for k, a, al, b, be in self.pairs],
                            self.theta * c)

    def to_json(self) -> dict:
        return {
            "pairs": [{"coef": k.to_json(), "degrees": [a, b],
                       "left": [v.to_json() for v in al], "right": [v.to_json() for v in be]}
                      for k, a, al, b, be in self.pairs],
            "theta": [v.to_json() for v in self.theta],
        }


def _boundary_span(model: CechModel) -> SpanReducer:
    """delta C^0(Theta) + mu I((H (x) H)^1) inside C^1(Theta)."""
    cached = model.__dict__.get("_kt_boundaries")
    if cached is not None:
        return cached
    R = theta_retract(model)
    n1 = model.dim(1, "T")
    gens = []
    if model.dim(0, "T"):
        d0 = model.delta(0, "T")
        gens.extend(d0[:, j] for j in range(d0.shape[1]))
    for a, b in ((0, 1), (1, 0)):
        for ha in R.H.get(a, []):
            for hb in R.H.get(b, []):
                gens.append(tensor_mu(model, [(ONE, a, ha, b, hb)], 1))
    red = SpanReducer(n1, gens)
    model.__dict__["_kt_boundaries"] = red
    return red


def classes_equal(c1: KSecondClass, c2: KSecondClass) -> bool:
    a, b = c1.class_data(), c2.class_data()
    return all(np.array_equal(a["tensor"][k], b["tensor"][k]) for k in a["tensor"]) and \
        np.array_equal(a["theta"], b["theta"])


def kappa2_tilde(family: Family, k: int, l: int) -> KSecondClass:
    """(theta_k (x) theta_l, d_k theta_l) at t = 0; requires the deformation equation."""
    if family.ks.N < 1:
        raise DeformationEqFailed("second-order data needs truncation order N >= 1")
    cert = deformation_eq_check(family)
    if not cert:
        raise DeformationEqFailed("KS form violates the deformation equation", **cert.details)
    ks = family.ks
    c = KSecondClass(family.model, [(ONE, 1, ks.leading(k), 1, ks.leading(l))], ks.second(k, l))
    c.require_cocycle()
    return c


def in_image_kappa1(c: KSecondClass, ks: KSForm | None = None) -> Certificate:
    """Whether the class of ``c`` comes from H^1(Theta) (second component).

    With ``ks`` the image is restricted to span{kappa1(d/dt_l)}.
    """
    c.require_cocycle()
    u, y = c.reduced()
    if any(not is_zero_array(M) for M in u.values()):
        return Certificate("in_image_kappa1", "fail", {"reason": "tensor component survives"})
    if ks is not None:
        red = SpanReducer(len(y), c.boundary_span().basis())
        for l in range(ks.s):
            red.add(ks.leading(l))
        if not red.contains(y):
            return Certificate("in_image_kappa1", "fail",
                               {"reason": "second component outside span of kappa1"})
    return Certificate("in_image_kappa1", "ok")


def projection_to_h1h1(c: KSecondClass) -> np.ndarray:
    """The (H^1 (x) H^1) coordinates of the class."""
    return c.reduced()[0][(1, 1)]


def kappa1_image_kernel_dim(model: CechModel) -> int:
    """Dimension of the kernel of H^1(Theta) -> H^1 of the cone."""
    R = theta_retract(model)
    if not R.hdim(1):
        return 0
    red = SpanReducer(R.hdim(1))
    for a, b in ((0, 1), (1, 0)):
        for ha in R.H.get(a, []):
            for hb in R.H.get(b, []):
                red.add(R.p(1, tensor_mu(model, [(ONE, a, ha, b, hb)], 1)))
    return red.rank


def boundary_of(model: CechModel, pairs: list[Pair], y0: np.ndarray) -> KSecondClass:
    """D(x', y') = (-D x', delta y' + mu x') for x' of total degree 1, y' in C^0."""
    Dx = [(-c, a, al, b, be) for c, a, al, b, be in tensor_d(model, pairs)]
    y = model.delta(0, "T") @ y0 + tensor_mu(model, pairs, 1)
    return KSecondClass(model, Dx, y)


# -- the cone as one matrix (small models; used as an independent check) ---------------


def mu_tensor(model: CechModel, a: int, b: int) -> np.ndarray:
    """mu on basis pairs at t = 0: shape (dim C^(a+b), dim C^a, dim C^b)."""
    fam = model.fiber
    out = qi_zeros((model.dim(a + b, "T"), model.dim(a, "T"), model.dim(b, "T")))
    for Q in model.of_dim(a + b):
        front, back = Q[:a + 1], Q[a:]
        rf = fam.restrict(Q, front, "T").at_zero()
        rb = fam.restrict(Q, back, "T").at_zero()
        blk = np.einsum("xij,iI,jJ->xIJ", model.bracket_tensor(Q), rf, rb)
        out[model.block(a + b, "T", Q), model.block(a, "T", front), model.block(b, "T", back)] = blk
    return out


def cone_layout(model: CechModel, n: int) -> list:
    """Blocks of the cone in degree n: ((a, b), offset, size) then ("T", offset, size)."""
    out, off = [], 0
    for a in range(n + 2):
        b = n + 1 - a
        if a > 3 or b > 3:
            continue
        size = model.dim(a, "T") * model.dim(b, "T")
        out.append(((a, b), off, size))
        off += size
    size = model.dim(n, "T") if 0 <= n <= 3 else 0
    out.append(("T", off, size))
    return out


def cone_dim(model: CechModel, n: int) -> int:
    _, off, size = cone_layout(model, n)[-1]
    return off + size


def cone_vector(model: CechModel, pairs: list, theta: np.ndarray, n: int) -> np.ndarray:
    v = qi_zeros(cone_dim(model, n))
    for key, off, size in cone_layout(model, n):
        if key == "T":
            if size:
                v[off:off + size] = theta
        elif size:
            v[off:off + size] = tensor_matrix(model, pairs, *key).reshape(-1)
    return v


def cone_differential(model: CechModel, n: int) -> np.ndarray:
    """D(x, y) = (-D x, delta y + mu x) from degree n to n + 1 as one matrix."""
    src, dst = cone_layout(model, n), cone_layout(model, n + 1)
    pos = {key: (off, size) for key, off, size in dst}
    M = qi_zeros((cone_dim(model, n + 1), cone_dim(model, n)))
    for key, off, size in src:
        if not size:
            continue
        if key == "T":
            if n + 1 <= 3 and model.dim(n + 1, "T"):
                o2, s2 = pos["T"]
                M[o2:o2 + s2, off:off + size] = model.delta(n, "T")
            continue
        a, b = key
        da, db = model.dim(a, "T"), model.dim(b, "T")
        if (a + 1, b) in pos and pos[(a + 1, b)][1]:
            o2, _ = pos[(a + 1, b)]
            blk = -np.kron(model.delta(a, "T"), _eye(db))
            M[o2:o2 + blk.shape[0], off:off + size] += blk
        if (a, b + 1) in pos and pos[(a, b + 1)][1]:
            o2, _ = pos[(a, b + 1)]
            blk = -np.kron(_eye(da), model.delta(b, "T")) * (-1) ** a
            M[o2:o2 + blk.shape[0], off:off + size] += blk
        if a + b == n + 1 and n + 1 <= 3 and model.dim(n + 1, "T"):
            o2, s2 = pos["T"]
            M[o2:o2 + s2, off:off + size] += mu_tensor(model, a, b).reshape(s2, -1)
    return M


def cone_cohomology_class(c: KSecondClass) -> np.ndarray:
    """Canonical remainder of the cone vector of ``c`` modulo the image of D."""
    m = c.model
    c.require_cocycle()
    D0 = cone_differential(m, 0)
    red = SpanReducer(cone_dim(m, 1), [D0[:, j] for j in range(D0.shape[1])])
    return red.reduce(cone_vector(m, c.pairs, c.theta, 1))


__all__ = [
    "KSecondClass", "Retract", "boundary_of", "classes_equal", "cone_cohomology_class",
    "cone_differential", "cone_dim", "cone_layout", "cone_vector", "mu_tensor", "h1_coords", "in_image_kappa1",
    "kappa1", "kappa1_image_kernel_dim", "kappa2_tilde", "obstruction", "projection_to_h1h1",
    "solve", "tensor_d", "tensor_h", "tensor_matrix", "tensor_p", "theta_retract",
]
