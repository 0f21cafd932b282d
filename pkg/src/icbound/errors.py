"""Exception hierarchy. Every error carries a short machine code used in CSV error rows."""


class ICBError(Exception):
    code = "error"


class BadMagic(ICBError):
    code = "bad_magic"


class Truncated(ICBError):
    code = "truncated"


class DimMismatch(ICBError, ValueError):
    code = "dim_mismatch"


class ParseError(ICBError, ValueError):
    code = "parse_error"

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class MissingLabelColumn(ICBError, KeyError):
    code = "missing_label_column"

    def __str__(self):
        return str(self.args[0]) if self.args else "missing label column"


class InsufficientSamples(ICBError, ValueError):
    code = "insufficient_samples"

    def __init__(self, message, class_id=None):
        super().__init__(message)
        self.class_id = class_id


class NumericalDomain(ICBError, FloatingPointError):
    code = "numerical_domain"


class EigFailure(ICBError, ArithmeticError):
    code = "eig_failure"


class SingularKernel(ICBError, ArithmeticError):
    code = "singular_kernel"


class NonPositiveVariance(ICBError, ValueError):
    code = "nonpositive_variance"


class EmptyInput(ICBError, ValueError):
    code = "empty_input"


class DegenerateInput(ICBError, ValueError):
    code = "degenerate_input"


class ConfigError(ICBError, ValueError):
    code = "config_error"
