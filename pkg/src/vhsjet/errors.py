"""Exception hierarchy.

Every error carries a machine-readable ``kind`` (used by the CLI as
``error.kind``) and a distinct process exit code.
"""

from __future__ import annotations


class VhsError(Exception):
    kind = "Error"
    exit_code = 10

    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.details = details

    def to_json(self) -> dict:
        out = {"kind": self.kind, "message": str(self)}
        if self.details:
            out["details"] = self.details
        return out


class MismatchedRing(VhsError):
    kind = "MismatchedRing"
    exit_code = 11


class NotFlat(VhsError):
    kind = "NotFlat"
    exit_code = 12


class NotTransversal(VhsError):
    kind = "NotTransversal"
    exit_code = 13


class NotHomogeneous(VhsError):
    kind = "NotHomogeneous"
    exit_code = 14


class NotCocycle(VhsError):
    kind = "NotCocycle"
    exit_code = 15


class DeformationEqFailed(VhsError):
    kind = "DeformationEqFailed"
    exit_code = 16


class DeformationOrderTooLow(VhsError):
    kind = "DeformationOrderTooLow"
    exit_code = 17


class RankJump(VhsError):
    kind = "RankJump"
    exit_code = 18


class DegreeMismatch(VhsError):
    kind = "DegreeMismatch"
    exit_code = 19


class SpecInfeasible(VhsError):
    kind = "SpecInfeasible"
    exit_code = 20


class ModelInvalid(VhsError):
    kind = "ModelInvalid"
    exit_code = 21


class ParseError(VhsError):
    kind = "ParseError"
    exit_code = 2


class SchemaError(VhsError):
    kind = "SchemaError"
    exit_code = 3
