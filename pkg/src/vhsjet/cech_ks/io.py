"""JSON forms of Čech models, KS forms and connections, and ModelFile parsing.

Matrices and tensors are stored sparsely as ``{"shape": [...], "entries":
[[i, j, ..., value]]}`` with values as Gaussian rational literals
``[re_num, re_den, im_num, im_den]``.  Sheaves are form degrees (integers)
or ``"T"`` for vector fields.
"""

from __future__ import annotations

import json
from itertools import product

import numpy as np

from ..errors import ParseError, SchemaError
from ..exact_series import QI, SeriesMatrix, qi_zeros
from ..filtered_connection import Connection, FilteredModule

FORMAT_VERSION = 1


def sparse_to_json(M) -> dict:
    M = np.asarray(M, dtype=object)
    entries = [[*map(int, idx), M[idx].to_json()] for idx in product(*map(range, M.shape)) if M[idx]]
    return {"shape": list(M.shape), "entries": entries}


def sparse_from_json(obj, where: str = "") -> np.ndarray:
    try:
        shape = tuple(int(x) for x in obj["shape"])
        out = qi_zeros(shape)
        for e in obj["entries"]:
            idx = tuple(int(i) for i in e[:-1])
            if len(idx) != len(shape) or any(not 0 <= i < n for i, n in zip(idx, shape)):
                raise SchemaError(f"{where}: entry index {list(idx)} outside shape {list(shape)}")
            out[idx] = QI.from_json(e[-1])
        return out
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: bad sparse array ({exc})") from exc


def _sheaf_json(sh):
    return sh if sh == "T" else int(sh)


def _sheaf_from(x, where):
    if x == "T":
        return "T"
    if isinstance(x, int) and x >= 0:
        return x
    raise SchemaError(f"{where}: sheaf must be a form degree or \"T\"")


def _label(sh) -> str:
    return "Theta" if sh == "T" else f"Omega^{sh}"


def model_to_json(model) -> dict:
    simp = list(model.simplices)
    return {
        "name": model.name,
        "dim_X": model.dim_X,
        "weight": model.weight,
        "simplices": [list(Q) for Q in simp],
        "ranks": [{"simplex": list(Q), "sheaf": _sheaf_json(sh), "rank": r}
                  for (Q, sh), r in sorted(model.ranks.items(), key=lambda kv: _key(kv[0]))],
        "restrictions": [
            {"simplex": list(Q), "face": j, "sheaf": _sheaf_json(sh),
             "domain": f"{_label(sh)}({list(Q[:j] + Q[j + 1:])})", "codomain": f"{_label(sh)}({list(Q)})",
             "matrix": sparse_to_json(M)}
            for (Q, j, sh), M in sorted(model.restrictions.items(), key=lambda kv: _key(kv[0]))],
        "d": [{"simplex": list(Q), "p": p, "domain": _label(p), "codomain": _label(p + 1),
               "matrix": sparse_to_json(M)}
              for (Q, p), M in sorted(model.d.items(), key=lambda kv: _key(kv[0]))],
        "iota": [{"simplex": list(Q), "p": p, "matrix": sparse_to_json(M)}
                 for (Q, p), M in sorted(model.iota.items(), key=lambda kv: _key(kv[0]))],
        "bracket": [{"simplex": list(Q), "matrix": sparse_to_json(M)}
                    for Q, M in sorted(model.bracket.items(), key=lambda kv: _key(kv[0]))],
        "meta": model.meta,
    }


def _key(k):
    if isinstance(k, tuple) and k and isinstance(k[0], tuple):
        return (len(k[0]), k[0]) + tuple(str(x) for x in k[1:])
    return (len(k), k)


MODEL_FIELDS = {"name", "dim_X", "weight", "simplices", "ranks", "restrictions", "d", "iota",
                "bracket", "meta"}


def model_from_json(obj: dict, strict: bool = True, warnings: list | None = None):
    from .model import CechModel

    _fields(obj, MODEL_FIELDS, "payload", strict, warnings)
    try:
        simp = [tuple(int(v) for v in Q) for Q in obj["simplices"]]
        ranks = {(tuple(e["simplex"]), _sheaf_from(e["sheaf"], "ranks")): int(e["rank"])
                 for e in obj["ranks"]}
        restr = {(tuple(e["simplex"]), int(e["face"]), _sheaf_from(e["sheaf"], "restrictions")):
                 sparse_from_json(e["matrix"], "restrictions") for e in obj.get("restrictions", [])}
        d = {(tuple(e["simplex"]), int(e["p"])): sparse_from_json(e["matrix"], "d")
             for e in obj.get("d", [])}
        iota = {(tuple(e["simplex"]), int(e["p"])): sparse_from_json(e["matrix"], "iota")
                for e in obj.get("iota", [])}
        br = {tuple(e["simplex"]): sparse_from_json(e["matrix"], "bracket")
              for e in obj.get("bracket", [])}
        return CechModel(str(obj["name"]), int(obj["dim_X"]), int(obj["weight"]), simp, ranks,
                         restr, d, iota, br, meta=obj.get("meta", {}))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"payload: missing or malformed field ({exc})") from exc


def ksform_to_json(ks) -> dict:
    return {"s": ks.s, "N": ks.N, "length": int(ks.theta[0].shape[0]) if ks.theta else 0,
            "theta": [[{"monomial": list(m), "entries": [[i, x.to_json()] for i, x in enumerate(a) if x]}
                       for m, a in sorted(v.jet().items())] for v in ks.theta]}


def ksform_from_json(obj: dict, model=None):
    from .model import KSForm

    try:
        s, N, n = int(obj["s"]), int(obj["N"]), int(obj["length"])
        if model is not None and n != model.dim(1, "T"):
            raise SchemaError(f"ksform: cochains of length {n}, model needs {model.dim(1, 'T')}")
        th = []
        for comp in obj["theta"]:
            jet = {}
            for term in comp:
                v = qi_zeros(n)
                for i, x in term["entries"]:
                    v[int(i)] = QI.from_json(x)
                m = tuple(int(e) for e in term["monomial"])
                if len(m) != s or sum(m) > N:
                    raise SchemaError(f"ksform: monomial {list(m)} outside the ring")
                jet[m] = v
            th.append(SeriesMatrix(s, N, (n,), jet))
        return KSForm(s, N, tuple(th))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"ksform: malformed ({exc})") from exc


def connection_to_json(c: Connection) -> dict:
    return {"levels": list(c.module.levels), "weight": c.module.weight,
            "matrices": [A.to_json() for A in c.mats]}


def connection_from_json(obj: dict, s: int, N: int, strict: bool = True,
                         warnings: list | None = None) -> Connection:
    _fields(obj, {"levels", "weight", "matrices"}, "payload", strict, warnings)
    try:
        module = FilteredModule(tuple(int(p) for p in obj["levels"]), s, N, int(obj.get("weight", 0)))
        mats = tuple(SeriesMatrix.from_json(s, N, M) for M in obj["matrices"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"payload: malformed connection ({exc})") from exc
    try:
        return Connection(module, mats)
    except ValueError as exc:
        raise SchemaError(f"payload: {exc}") from exc


def _fields(obj, allowed: set, where: str, strict: bool, warnings: list | None):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        if strict:
            raise SchemaError(f"{where}: unknown field(s) {extra}")
        if warnings is not None:
            warnings.append(f"{where}: ignoring unknown field(s) {extra}")


FILE_FIELDS = {"format_version", "kind", "s", "N", "payload", "ksform", "description", "expectations"}


def parse_model_file(text: str, strict: bool = True) -> dict:
    """Parse a ModelFile document.

    Returns {"kind", "s", "N", "object", "ksform", "expectations", "warnings"}.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    warnings: list = []
    _fields(obj, FILE_FIELDS, "file", strict, warnings)
    if obj.get("format_version") != FORMAT_VERSION:
        raise SchemaError(f"unsupported format_version {obj.get('format_version')!r}",
                          expected=FORMAT_VERSION)
    kind = obj.get("kind")
    if kind not in ("connection", "cech"):
        raise SchemaError(f"kind must be \"connection\" or \"cech\", got {kind!r}")
    try:
        s, N = int(obj["s"]), int(obj["N"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError("ring parameters s and N are required integers") from exc
    if s < 1 or N < 0:
        raise SchemaError("need s >= 1 and N >= 0")
    if "payload" not in obj:
        raise SchemaError("missing payload")
    expect = obj.get("expectations", {})
    if not isinstance(expect, dict) or not all(isinstance(v, int) for v in expect.values()):
        raise SchemaError("expectations must map names to integers")
    out = {"kind": kind, "s": s, "N": N, "ksform": None, "expectations": expect,
           "warnings": warnings}
    if kind == "connection":
        out["object"] = connection_from_json(obj["payload"], s, N, strict, warnings)
    else:
        model = model_from_json(obj["payload"], strict, warnings)
        out["object"] = model
        if obj.get("ksform") is not None:
            ks = ksform_from_json(obj["ksform"], model)
            if (ks.s, ks.N) != (s, N):
                raise SchemaError("ksform ring differs from the file's (s, N)")
            out["ksform"] = ks
    return out


def model_file(kind: str, s: int, N: int, payload: dict, ksform: dict | None = None,
               description: str | None = None) -> dict:
    out = {"format_version": FORMAT_VERSION, "kind": kind, "s": s, "N": N, "payload": payload}
    if ksform is not None:
        out["ksform"] = ksform
    if description:
        out["description"] = description
    return out


def dumps(obj) -> str:
    """Stable serialization used for every file and report."""
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n"
