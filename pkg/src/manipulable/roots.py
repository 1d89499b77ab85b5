"""Real roots of scalar cubics by bracketing.

Each cubic is split at its critical points into monotone pieces. A monotone
piece holds at most one root, so any sign change brackets exactly one root and
a safeguarded Newton step (falling back to bisection) pins it down. Roots that
sit exactly on a critical point (tangencies) are picked up by checking the
cubic's value there.
"""

from __future__ import annotations

import math

from .errors import SolverError

DEDUP_TOL = 1e-8


def refine_root(f, df, lo, hi, xtol=1e-12, max_iter=200):
    """Root of ``f`` in [lo, hi], where f(lo) and f(hi) differ in sign.

    Newton steps are taken when they stay inside the current bracket and
    shrink it fast enough; otherwise the bracket is bisected.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise SolverError(f"no sign change on [{lo}, {hi}]")
    if flo > 0:
        lo, hi = hi, lo  # keep f(lo) < 0 < f(hi)
    x = 0.5 * (lo + hi)
    step_old = abs(hi - lo)
    for _ in range(max_iter):
        fx, dfx = f(x), df(x)
        if fx == 0.0:
            return x
        # shrink the bracket before choosing the next step
        if fx < 0:
            lo = x
        else:
            hi = x
        newton_ok = dfx != 0.0 and ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) < 0.0
        if newton_ok and abs(2.0 * fx) <= abs(step_old * dfx):
            step = fx / dfx
            x_new = x - step
        else:
            step = x - 0.5 * (lo + hi)
            x_new = 0.5 * (lo + hi)
        step_old = abs(step)
        if x_new == x or abs(step) <= xtol * max(1.0, abs(x_new)):
            return x_new
        x = x_new
    return x


def _quadratic_real_roots(a, b, c):
    if a == 0.0:
        return [] if b == 0.0 else [-c / b]
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    # numerically stable form: avoid subtracting nearly equal numbers
    q = -0.5 * (b + math.copysign(sq, b))
    if q == 0.0:
        return [0.0, 0.0]
    return sorted([q / a, c / q])


def _expand_to_sign_change(f, start, direction, target_sign):
    step = 1.0
    x = start + direction * step
    for _ in range(2000):
        fx = f(x)
        if fx == 0.0 or (fx > 0) == (target_sign > 0):
            return x
        step *= 2.0
        x = start + direction * step
    raise SolverError("failed to bracket a cubic root")


def cubic_real_roots(c3, c2, c1, c0, xtol=1e-12, dedup=DEDUP_TOL):
    """All real roots of c3*x^3 + c2*x^2 + c1*x + c0, ascending, deduplicated."""
    if c3 == 0.0:
        return _quadratic_real_roots(c2, c1, c0)
    if c3 < 0:
        c3, c2, c1, c0 = -c3, -c2, -c1, -c0

    def f(x):
        return ((c3 * x + c2) * x + c1) * x + c0

    def df(x):
        return (3 * c3 * x + 2 * c2) * x + c1

    knots = sorted(set(_quadratic_real_roots(3 * c3, 2 * c2, c1)))
    if not knots:
        x0 = -c2 / (3 * c3)
        f0 = f(x0)
        if f0 == 0.0:
            return [x0]
        if f0 > 0:
            lo = _expand_to_sign_change(f, x0, -1.0, -1.0)
            return [refine_root(f, df, lo, x0, xtol)]
        hi = _expand_to_sign_change(f, x0, 1.0, 1.0)
        return [refine_root(f, df, x0, hi, xtol)]

    # c3 > 0, so the left knot is a local max and the right one a local min.
    # Values within rounding of zero count as tangencies (double roots).
    def rounding_bound(x):
        ax = abs(x)
        return 64 * 2.2e-16 * (((abs(c3) * ax + abs(c2)) * ax + abs(c1)) * ax + abs(c0))

    p_left, p_right = knots[0], knots[-1]
    f_left, f_right = f(p_left), f(p_right)
    if abs(f_left) <= rounding_bound(p_left):
        f_left = 0.0
    if abs(f_right) <= rounding_bound(p_right):
        f_right = 0.0

    roots = [p for p, v in ((p_left, f_left), (p_right, f_right)) if v == 0.0]
    if f_left > 0:
        lo = _expand_to_sign_change(f, p_left, -1.0, -1.0)
        roots.append(refine_root(f, df, lo, p_left, xtol))
        if f_right < 0:
            roots.append(refine_root(f, df, p_left, p_right, xtol))
    if f_right < 0:
        hi = _expand_to_sign_change(f, p_right, 1.0, 1.0)
        roots.append(refine_root(f, df, p_right, hi, xtol))

    roots.sort()
    out = []
    for r in roots:
        if not out or abs(r - out[-1]) > dedup:
            out.append(r)
    return out
