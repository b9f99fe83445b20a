"""Errors raised by the Galerkin library."""


class InvalidArgument(ValueError):
    """Error to indicate an argument violates an operation's precondition."""
