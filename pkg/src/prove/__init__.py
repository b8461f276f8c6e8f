"""Verification-filtered answer aggregation for math word problems.

Samples several reasoning paths per problem, translates each into a small
Python program, executes the programs under resource limits, keeps only the
candidates whose program output agrees with their stated answer, and majority
votes the survivors.
"""

from prove.answers import AnswerValue, equivalent, normalize
from prove.errors import (
    BackendError,
    DataError,
    LaunchError,
    ProveError,
)

__all__ = [
    "AnswerValue",
    "BackendError",
    "DataError",
    "LaunchError",
    "ProveError",
    "equivalent",
    "normalize",
]

__version__ = "0.1.0"
