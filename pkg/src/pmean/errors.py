"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: input problems exit 2, numerical
policy violations (strict mode) exit 3.
"""


class InputError(ValueError):
    """Malformed or inconsistent user-supplied input."""


class FormatError(InputError):
    """A file does not follow its documented grammar."""


class DimensionError(InputError):
    """Vector or matrix dimensions do not line up."""


class NumericalPolicyError(ArithmeticError):
    """An undefined real power was hit while the policy demands an error."""
