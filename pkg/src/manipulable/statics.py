"""Comparative statics of the optimal and fixed-point slopes in (k, rho)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError, ValidationError
from .model import ModelParams, normalized_loss, validate_k_rho
from .roots import refine_root
from .solvers import fixed_points_k, optimal_beta

OUTPUTS = ("beta_star", "beta_fp", "ratio", "losses")
MONOTONE_SLACK = 1e-10


@dataclass(frozen=True)
class SweepSpec:
    k_grid: tuple
    rho_grid: tuple
    outputs: tuple = OUTPUTS

    def __post_init__(self):
        object.__setattr__(self, "k_grid", tuple(float(k) for k in self.k_grid))
        object.__setattr__(self, "rho_grid", tuple(float(r) for r in self.rho_grid))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        for name, grid in (("k_grid", self.k_grid), ("rho_grid", self.rho_grid)):
            if not grid:
                raise ValidationError(f"{name} must be nonempty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValidationError(f"{name} must be strictly increasing")
        if any(not (math.isfinite(k) and k > 0) for k in self.k_grid):
            raise ValidationError("k values must be positive")
        if any(not -1 < r < 1 for r in self.rho_grid):
            raise ValidationError("rho values must lie in (-1, 1)")
        unknown = set(self.outputs) - set(OUTPUTS)
        if unknown:
            raise ValidationError(f"unknown sweep outputs: {sorted(unknown)}")


@dataclass(frozen=True)
class SweepRow:
    k: float
    rho: float
    beta_star: float | None = None
    beta_fp_list: tuple = ()
    ratio: float | None = None
    loss_star: float | None = None
    loss_fp: float | None = None
    error: str | None = None


def sweep_row(k, rho, outputs=OUTPUTS) -> SweepRow:
    try:
        b_star = optimal_beta(k, rho)
        fps = tuple(fixed_points_k(k, rho))
    except (SolverError, ValidationError) as exc:
        return SweepRow(k=k, rho=rho, error=f"{type(exc).__name__}: {exc}")
    positive = [b for b in fps if b > 0]
    b_fp = positive[0] if positive else None
    want = set(outputs)
    return SweepRow(
        k=k,
        rho=rho,
        beta_star=b_star if "beta_star" in want else None,
        beta_fp_list=fps if "beta_fp" in want else (),
        ratio=b_star / b_fp if ("ratio" in want and b_fp) else None,
        loss_star=normalized_loss(k, rho, b_star) if "losses" in want else None,
        loss_fp=normalized_loss(k, rho, b_fp) if ("losses" in want and b_fp) else None,
    )


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """One row per (k, rho), k-major. Failed cells carry an error string instead of aborting."""
    return [sweep_row(k, rho, spec.outputs) for k in spec.k_grid for rho in spec.rho_grid]


def _monotone_cubic_root(a3, k):
    # unique root of a3 k^2 b^3 + b - 1 on (0, 1); the cubic is increasing
    c = a3 * k * k
    return refine_root(lambda b: (c * b * b + 1) * b - 1, lambda b: 3 * c * b * b + 1, 0.0, 1.0)


def rho_zero_fixed_point(k: float) -> float:
    """Root of k^2 b^3 + b - 1 = 0."""
    validate_k_rho(k, 0.0)
    return _monotone_cubic_root(1.0, k)


def rho_zero_optimal(k: float) -> float:
    """Root of 2 k^2 b^3 + b - 1 = 0."""
    validate_k_rho(k, 0.0)
    return _monotone_cubic_root(2.0, k)


@dataclass
class SignCheckReport:
    violations: list = field(default_factory=list)
    argmax_k: dict = field(default_factory=dict)  # rho < 0 -> k with the largest beta* on the grid
    sign_changes: dict = field(default_factory=dict)  # rho < 0 -> sign changes of k-differences

    @property
    def ok(self) -> bool:
        return not self.violations


def _signs(values, slack=MONOTONE_SLACK):
    d = np.diff(values)
    return np.where(d > slack, 1, np.where(d < -slack, -1, 0))


def check_sign_pattern(k_grid, rho_grid) -> SignCheckReport:
    """Check the sign pattern of beta* in rho and in k, and of beta*/beta_fp in k at rho=0.

    * along rho: increasing if k > 3/4, decreasing if k < 3/4, flat at k = 3/4;
    * along k: decreasing for rho >= 0, single-peaked for rho < 0;
    * along k at rho = 0: beta*/beta_fp decreasing.
    """
    spec = SweepSpec(k_grid, rho_grid)
    ks, rhos = np.array(spec.k_grid), np.array(spec.rho_grid)
    table = np.array([[optimal_beta(k, r) for r in rhos] for k in ks])
    report = SignCheckReport()

    for i, k in enumerate(ks):
        row = table[i]
        if len(rhos) < 2:
            break
        if k == 0.75:
            spread = row.max() - row.min()
            if spread > 1e-9:
                report.violations.append({"check": "flat_in_rho", "k": k, "spread": float(spread)})
            continue
        expected = 1 if k > 0.75 else -1
        s = _signs(row)
        for j in np.nonzero(s != expected)[0]:
            report.violations.append({
                "check": "increasing_in_rho" if expected > 0 else "decreasing_in_rho",
                "k": float(k), "rho": (float(rhos[j]), float(rhos[j + 1])),
                "beta_star": (float(row[j]), float(row[j + 1])),
            })

    if len(ks) >= 2:
        for j, rho in enumerate(rhos):
            col = table[:, j]
            s = _signs(col)
            if rho >= 0:
                for i in np.nonzero(s != -1)[0]:
                    report.violations.append({
                        "check": "decreasing_in_k", "rho": float(rho),
                        "k": (float(ks[i]), float(ks[i + 1])),
                        "beta_star": (float(col[i]), float(col[i + 1])),
                    })
            else:
                nz = s[s != 0]
                changes = int(np.count_nonzero(np.diff(nz)))
                report.sign_changes[float(rho)] = changes
                report.argmax_k[float(rho)] = float(ks[int(np.argmax(col))])
                # quasi-concave: any rise must come before any fall
                if changes > 1 or (changes == 1 and nz[0] < 0):
                    report.violations.append({
                        "check": "quasi_concave_in_k", "rho": float(rho),
                        "sign_changes": changes,
                    })

        ratio = np.array([rho_zero_optimal(k) / rho_zero_fixed_point(k) for k in ks])
        s = _signs(ratio)
        for i in np.nonzero(s != -1)[0]:
            report.violations.append({
                "check": "ratio_decreasing_in_k", "rho": 0.0,
                "k": (float(ks[i]), float(ks[i + 1])),
                "ratio": (float(ratio[i]), float(ratio[i + 1])),
            })
    return report


def commitment_gain(k: float, rho: float) -> dict:
    """Losses relative to the best constant rule (whose normalized loss is 1)."""
    fps = fixed_points_k(k, rho)
    b_star = optimal_beta(k, rho)
    return {
        "fixed_points": fps,
        "fixed_point_ratios": [normalized_loss(k, rho, b) for b in fps],
        "optimal_ratio": normalized_loss(k, rho, b_star),
    }


# name used by the public interface
check_prop2_signs = check_sign_pattern
