"""Pairwise potentials U(cos sigma) with sign-definite derivative."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

ATTRACTIVE = "attractive"
REPULSIVE = "repulsive"

# sin(sigma) below this is treated as a collision
SIN_GUARD = 1e-8


@dataclass(frozen=True)
class PotentialModel:
    """A potential as a pair of scalar functions of cos(sigma).

    ``u`` and ``u_prime`` accept floats or numpy arrays.  The sign tag
    records whether ``u_prime`` is positive (attractive) or negative
    (repulsive) on all of (-1, 1).
    """

    u: Callable
    u_prime: Callable
    force_sign: str
    name: str = "custom"

    def __post_init__(self):
        if self.force_sign not in (ATTRACTIVE, REPULSIVE):
            raise ValueError(f"force_sign must be {ATTRACTIVE!r} or {REPULSIVE!r}")

    @property
    def attractive(self) -> bool:
        return self.force_sign == ATTRACTIVE

    def kernel(self, theta):
        """U'(cos theta) for an extended meridian angle theta."""
        return self.u_prime(np.cos(theta))


def _guard(c):
    c = np.asarray(c, dtype=float)
    s2 = 1.0 - c * c
    if np.any(~(s2 >= SIN_GUARD**2)):
        raise DomainError("cos(sigma) too close to +-1 (collision or antipodal pair)")
    return c, s2


def _cot_u(c):
    c, s2 = _guard(c)
    out = c / np.sqrt(s2)
    return float(out) if out.ndim == 0 else out


def _cot_u_prime(c):
    _, s2 = _guard(c)
    out = s2**-1.5
    return float(out) if out.ndim == 0 else out


def cotangent() -> PotentialModel:
    """U = cot(sigma), written as cos/sqrt(1 - cos^2); U' = 1/sin^3."""
    return PotentialModel(_cot_u, _cot_u_prime, ATTRACTIVE, "cotangent")


def negate(p: PotentialModel) -> PotentialModel:
    flipped = REPULSIVE if p.attractive else ATTRACTIVE
    if p.name.endswith("-repulsive"):
        name = p.name[: -len("-repulsive")]
    else:
        name = p.name + "-repulsive"
    u, up = p.u, p.u_prime
    return PotentialModel(lambda c: -u(c), lambda c: -up(c), flipped, name)


POTENTIALS = {
    "cotangent": cotangent,
    "cotangent-repulsive": lambda: negate(cotangent()),
}


def by_name(name: str) -> PotentialModel:
    try:
        return POTENTIALS[name]()
    except KeyError:
        raise ValueError(
            f"unknown potential {name!r}; choose from {', '.join(sorted(POTENTIALS))}"
        ) from None
