"""Exception hierarchy shared by all modules."""


class SmplpError(Exception):
    """Base class for every error raised by the engine."""


class ProgramSyntaxError(SmplpError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class GroundingError(SmplpError):
    pass


class GuardExceeded(SmplpError):
    """A desk-scale safety limit (atoms, branch atoms, models) was hit."""


class UnknownAtomError(SmplpError):
    pass


class ImpossibleEvidenceError(SmplpError):
    pass


class InconsistentProgramError(SmplpError):
    pass


class LearningError(SmplpError):
    pass


class GraphError(SmplpError):
    pass
