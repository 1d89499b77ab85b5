"""Binary-action model: information lost through pooling at the top.

Types eta in {0, 1} with P(eta = 1) = pi; actions x in {0, 1}. Type 1 always plays
x = 1; type 0 has payoff y - c*x. The designer's welfare is -E[(y - eta)^2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class BinaryParams:
    pi: float
    c: float

    def __post_init__(self):
        for name in ("pi", "c"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValidationError(f"{name} must be a finite real number, got {v!r}")
        if not 0 < self.pi < 1:
            raise ValidationError(f"pi must lie in (0, 1), got {self.pi}")
        if not 0 < self.c < self.pi:
            raise ValidationError(f"c must lie in (0, pi), got c={self.c}, pi={self.pi}")


@dataclass(frozen=True)
class BinaryPolicy:
    y0: float
    y1: float
    # Carried explicitly so a gap built as y0 + c compares equal to c;
    # y1 - y0 can be off by an ulp and flip the agent's tie-break.
    delta: float | None = None

    def __post_init__(self):
        gap = self.y1 - self.y0
        if self.delta is None:
            object.__setattr__(self, "delta", gap)
        elif abs(self.delta - gap) > 4 * math.ulp(max(abs(self.y0), abs(self.y1), 1.0)):
            raise ValidationError(f"delta={self.delta} inconsistent with y1 - y0 = {gap}")
        if self.delta < 0:
            raise ValidationError(f"policies must have y1 >= y0, got y0={self.y0}, y1={self.y1}")

    @classmethod
    def from_gap(cls, y0: float, delta: float) -> "BinaryPolicy":
        return cls(y0, y0 + delta, delta)

    def allocation(self, x: int) -> float:
        return self.y1 if x == 1 else self.y0


def binary_agent_best_response(params: BinaryParams, policy: BinaryPolicy, eta: int) -> int:
    # indifferent type 0 (delta == c) separates
    if eta == 1:
        return 1
    if eta != 0:
        raise ValidationError(f"eta must be 0 or 1, got {eta!r}")
    return 1 if policy.delta > params.c else 0


def binary_welfare(params: BinaryParams, policy: BinaryPolicy) -> float:
    """-E[(y - eta)^2] by enumerating the two types."""
    total = 0.0
    for eta, weight in ((1, params.pi), (0, 1 - params.pi)):
        y = policy.allocation(binary_agent_best_response(params, policy, eta))
        total -= weight * (y - eta) ** 2
    return total


def binary_naive(params: BinaryParams):
    return BinaryPolicy(0.0, 1.0), -(1 - params.pi)


def binary_fixed_point(params: BinaryParams):
    """Both types pool on x = 1; the off-path allocation at x = 0 is set to 0."""
    return BinaryPolicy(0.0, params.pi), -params.pi * (1 - params.pi)


def binary_commitment(params: BinaryParams):
    pi, c = params.pi, params.c
    return BinaryPolicy.from_gap(pi * (1 - c), c), -((1 - c) ** 2) * (1 - pi) * pi


def binary_welfare_at_delta(params: BinaryParams, delta: float) -> float:
    """Best welfare over policies with gap ``delta``.

    Flat at -pi(1-pi) for every delta > c: only the level of y1 matters once
    both types pool. For delta <= c types separate and the best level gives
    -(1 - delta)^2 pi (1 - pi).
    """
    if delta < 0:
        raise ValidationError("delta must be nonnegative")
    pi = params.pi
    if delta > params.c:
        return -pi * (1 - pi)
    return -((1 - delta) ** 2) * pi * (1 - pi)


def binary_report(params: BinaryParams) -> dict:
    naive, w_n = binary_naive(params)
    fp, w_fp = binary_fixed_point(params)
    star, w_star = binary_commitment(params)
    policies = {"naive": (naive, w_n), "fixed_point": (fp, w_fp), "commitment": (star, w_star)}
    enumerated = {name: binary_welfare(params, pol) for name, (pol, _) in policies.items()}
    return {
        "pi": params.pi,
        "c": params.c,
        "policies": {
            name: {"y0": pol.y0, "y1": pol.y1, "delta": pol.delta, "welfare": w,
                   "welfare_enumerated": enumerated[name]}
            for name, (pol, w) in policies.items()
        },
        "flattening_ordered": star.delta < fp.delta < naive.delta,
        "welfare_ordered": w_n < w_fp < w_star,
    }
