"""Log-space evaluation of the iteration's analytic constants.

Every quantity that involves factorials or the tower ``n**(n**8/kappa)`` is
kept as a natural logarithm: for any realistic input the plain values
overflow IEEE doubles by thousands of orders of magnitude.  The CLI reports
the logs; `PaperParams.lambda_underflows` records when the implied step
size is below the smallest positive normal double, in which case the solver
refuses to iterate in analytic ("paper") mode.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

LN_MIN_NORMAL = math.log(sys.float_info.min)

_CEIL_GUARD = 1e-12  # relative slack so exact integers survive float division


def _ceil_guarded(x: float) -> int:
    return math.ceil(x - abs(x) * _CEIL_GUARD)


@dataclass(frozen=True)
class PaperParams:
    """Analytic constants for one (dimension, tolerance) pair.

    `ln_lambda` and `domain_bound` are two signs of the same sum:
    ``ln_lambda = -2 (ln_smear_coeff + ln_range_coeff)`` and
    ``domain_bound = +2 (ln_smear_coeff + ln_range_coeff)``.
    """

    n: int
    kappa: float
    smear_order: int
    ln_smear_coeff: float
    ln_range_coeff: float
    ln_lambda: float
    contraction: float
    domain_bound: float
    n_steps: int
    lambda_underflows: bool

    def __post_init__(self):
        total = 2.0 * (self.ln_smear_coeff + self.ln_range_coeff)
        if not math.isclose(self.ln_lambda, -total, rel_tol=1e-12, abs_tol=1e-9):
            raise ValueError("ln_lambda must equal -2(ln_smear_coeff + ln_range_coeff)")
        if not math.isclose(self.domain_bound, total, rel_tol=1e-12, abs_tol=1e-9):
            raise ValueError("domain_bound must equal 2(ln_smear_coeff + ln_range_coeff)")
        if not 0.0 < self.contraction < 1.0:
            raise ValueError(f"contraction {self.contraction!r} outside (0, 1)")


def worst_case_smear_order(n: int, kappa: float) -> int:
    """Smearing order for the smallest eigenvalue tolerated after smoothing,
    ``ceil(n^7 / kappa)``."""
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa!r}")
    return _ceil_guarded(n**7 / kappa)


def ln_smear_coeff(smear_order: int, n: int) -> float:
    """Log of the smeared-density normalization coefficient
    ``((K+1)n)! / (K (Kn)! n!)`` for smearing order ``K``."""
    if smear_order < 1:
        raise ValueError("smear_order must be >= 1")
    k = smear_order
    return (
        math.lgamma((k + 1) * n + 1)
        - math.log(k)
        - math.lgamma(k * n + 1)
        - math.lgamma(n + 1)
    )


def ln_range_coeff(n: int, kappa: float) -> float:
    """Log of the density-range bound factor ``2 n^14 n^(n^8/kappa) / kappa^2``."""
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa!r}")
    return math.log(2.0) + 14.0 * math.log(n) + (n**8 / kappa) * math.log(n) - 2.0 * math.log(kappa)


def ln_range_coeff_at(n: int, p0: float, smear_order: int) -> float:
    """Range bound factor evaluated at an actual smallest eigenvalue ``p0``
    instead of the worst-case smoothing floor: ``2 n^(Kn) / (n p0)^2``."""
    if p0 <= 0.0:
        raise ValueError("p0 must be positive")
    return math.log(2.0) + smear_order * n * math.log(n) - 2.0 * math.log(n * p0)


def contraction_constant(n: int) -> float:
    """Per-step distance shrink factor ``(1 - 1/(n(n+1)))^2``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return (1.0 - 1.0 / (n * (n + 1))) ** 2


def generic_steps(kappa: float, diameter: float, c: float) -> int:
    """Iterations sufficient to shrink an initial distance `diameter` below
    `kappa` under a contraction factor `c`: ``ceil((ln k - ln D)/ln c)``."""
    if not 0.0 < c < 1.0:
        raise ValueError(f"contraction factor must lie in (0, 1), got {c!r}")
    if diameter <= 0.0:
        raise ValueError("diameter must be positive")
    if kappa <= 0.0:
        raise ValueError("kappa must be positive")
    if kappa >= diameter:
        return 0
    return _ceil_guarded((math.log(kappa) - math.log(diameter)) / math.log(c))


def sufficient_steps(n: int, kappa: float, ln_sc: float, ln_rc: float) -> int:
    """Step count ``2n(n+1)(ln(4 S) + ln(1/kappa))`` with S the combined log
    coefficient ``ln_sc + ln_rc``."""
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa!r}")
    total = ln_sc + ln_rc
    if total <= 0.0:
        raise ValueError("combined log coefficient must be positive")
    return _ceil_guarded(2.0 * n * (n + 1) * (math.log(4.0 * total) + math.log(1.0 / kappa)))


def paper_params(n: int, kappa: float) -> PaperParams:
    """Assemble every analytic constant for one (n, kappa) pair."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa!r}")
    k = worst_case_smear_order(n, kappa)
    ln_sc = ln_smear_coeff(k, n)
    ln_rc = ln_range_coeff(n, kappa)
    total = 2.0 * (ln_sc + ln_rc)
    return PaperParams(
        n=n,
        kappa=float(kappa),
        smear_order=k,
        ln_smear_coeff=ln_sc,
        ln_range_coeff=ln_rc,
        ln_lambda=-total,
        contraction=contraction_constant(n),
        domain_bound=total,
        n_steps=sufficient_steps(n, kappa, ln_sc, ln_rc),
        lambda_underflows=(-total < LN_MIN_NORMAL),
    )
