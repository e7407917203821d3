"""Critical lengths of the KdV interval and critical sizes of the ZK rectangle.

The KdV set is ``{2 pi / sqrt(3) * sqrt(k^2 + k l + l^2) : k, l >= 1}``; a
rectangle (L, B) is ZK-critical when some positive integers k, l, n solve

    (2 pi / (L sqrt 3))^2 (k^2 + k l + l^2) + (pi n / B)^2 = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_TOL = 1e-9
KDV_SCALE = 2.0 * math.pi / math.sqrt(3.0)


@dataclass(frozen=True)
class CriticalResult:
    is_critical: bool
    best_triple: tuple[int, ...]
    residual: float


def kdv_length(k: int, l: int) -> float:
    return KDV_SCALE * math.sqrt(k * k + k * l + l * l)


def kdv_critical_lengths(max_value: float) -> list[tuple[float, int, int]]:
    """Sorted elements of the KdV critical set up to ``max_value``, each with a
    canonical witness k <= l (the smallest k among equal lengths)."""
    if max_value <= 0:
        raise ValueError(f"max_value must be positive, got {max_value!r}")
    out: list[tuple[float, int, int]] = []
    k = 1
    while kdv_length(k, k) <= max_value:
        l = k
        while (length := kdv_length(k, l)) <= max_value:
            out.append((length, k, l))
            l += 1
        k += 1
    out.sort()
    deduped: list[tuple[float, int, int]] = []
    for item in out:
        if deduped and abs(item[0] - deduped[-1][0]) <= 1e-12 * max(1.0, item[0]):
            continue
        deduped.append(item)
    return deduped


def kdv_is_critical(L: float, tol: float = DEFAULT_TOL) -> CriticalResult:
    if L <= 0:
        raise ValueError(f"L must be positive, got {L!r}")
    # some element lies in [L, L + 2 pi] (the multiples 2 pi m), so this bound
    # brackets the nearest element from both sides
    best = (math.inf, (1, 1))
    for length, k, l in kdv_critical_lengths(L + 2.0 * math.pi):
        dev = abs(length - L)
        if dev < best[0]:
            best = (dev, (k, l))
    residual, triple = best
    return CriticalResult(residual <= tol, triple, residual)


def zk_lhs(L: float, B: float, k: int, l: int, n: int) -> float:
    return (2.0 * math.pi / (L * math.sqrt(3.0))) ** 2 * (k * k + k * l + l * l) + (math.pi * n / B) ** 2


def zk_is_critical(L: float, B: float, k_max: int = 64, n_max: int = 64, tol: float = DEFAULT_TOL, prune: bool = True) -> CriticalResult:
    """Closest approach of the ZK critical condition over 1 <= k <= l <= k_max,
    1 <= n <= n_max. The residual is min |LHS - 1|.

    With ``prune`` the scan uses that the left-hand side increases in k, l and
    n: n is solved for directly and the l loop stops once even n = 1 overshoots
    by more than the best residual found.
    """
    if L <= 0 or B <= 0:
        raise ValueError("L and B must be positive")
    if k_max < 1 or n_max < 1:
        raise ValueError("k_max and n_max must be >= 1")
    best_res, best = math.inf, (1, 1, 1)

    def consider(k, l, n):
        nonlocal best_res, best
        res = abs(zk_lhs(L, B, k, l, n) - 1.0)
        if res < best_res:
            best_res, best = res, (k, l, n)

    if not prune:
        for k in range(1, k_max + 1):
            for l in range(k, k_max + 1):
                for n in range(1, n_max + 1):
                    consider(k, l, n)
        return CriticalResult(best_res <= tol, best, best_res)

    y_unit = (math.pi / B) ** 2
    for k in range(1, k_max + 1):
        if zk_lhs(L, B, k, k, 1) - 1.0 > best_res:
            break
        for l in range(k, k_max + 1):
            a = zk_lhs(L, B, k, l, 0)
            if a + y_unit - 1.0 > best_res:
                break
            n_star = math.sqrt(max(1.0 - a, 0.0) / y_unit)
            for n in {math.floor(n_star), math.ceil(n_star)}:
                consider(k, l, min(max(int(n), 1), n_max))
    return CriticalResult(best_res <= tol, best, best_res)
