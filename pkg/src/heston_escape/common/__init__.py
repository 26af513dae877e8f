"""
Common functionality shared by the escape-problem evaluators.
"""
from .errors import ConvergenceError, EscapeError, ParameterDomainError

__all__ = ['ConvergenceError', 'EscapeError', 'ParameterDomainError']
