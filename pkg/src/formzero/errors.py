"""Exception and warning types shared across the toolkit."""

from __future__ import annotations


class FormzeroError(Exception):
    """Base class for every error raised by the toolkit."""

    def details(self) -> dict:
        return {}


# -- formation construction ------------------------------------------------

class FormationError(FormzeroError, ValueError):
    pass


class DuplicateNodeId(FormationError):
    pass


class DuplicateEdge(FormationError):
    pass


class UnknownNodeId(FormationError):
    pass


class SelfLoop(FormationError):
    pass


class NonFinitePosition(FormationError):
    pass


class CoincidentAllNodes(FormationError):
    pass


class ZeroInertia(FormationError):
    pass


class DegenerateSpan(UserWarning):
    """All nodes collinear. Analysis continues but the kernel may be larger."""


# -- numerical classification ---------------------------------------------

class ThresholdAmbiguity(FormzeroError):
    def __init__(self, message: str, eigenvalues=(), threshold: float = 0.0):
        super().__init__(message)
        self.eigenvalues = tuple(float(v) for v in eigenvalues)
        self.threshold = float(threshold)

    def details(self) -> dict:
        return {"eigenvalues": list(self.eigenvalues), "threshold": self.threshold}


class NoPivotFound(FormzeroError):
    pass


class SchurUnavailable(FormzeroError):
    """M = I + n*Psi_zz is numerically singular; carries the partial result."""

    def __init__(self, message: str, coupling=None):
        super().__init__(message)
        self.coupling = coupling


class RouteDisagreement(FormzeroError):
    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result

    def details(self) -> dict:
        if self.result is None:
            return {}
        return {
            "det_direct": self.result.det_direct,
            "det_sylvester": self.result.det_sylvester,
            "det_schur": self.result.det_schur,
        }


# -- geometry ---------------------------------------------------------------

class CentroidActuator(FormzeroError):
    pass


class CentroidNodeSkipped(UserWarning):
    pass


class EmptyIntersection(FormzeroError):
    """Never expected: the centroid always lies in the polygon."""


# -- dynamics / experiments -------------------------------------------------

class Divergence(FormzeroError):
    def __init__(self, message: str, time: float = float("nan")):
        super().__init__(message)
        self.time = time

    def details(self) -> dict:
        return {"time": self.time}


class NotFlexibleGraph(FormzeroError):
    pass


# -- file input -------------------------------------------------------------

class ParseError(FormzeroError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column

    def details(self) -> dict:
        return {"line": self.line, "column": self.column}


class SchemaViolation(FormzeroError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)

    def details(self) -> dict:
        return {"violations": self.violations}
