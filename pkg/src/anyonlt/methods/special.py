from __future__ import annotations

import math

from anyonlt.errors import InvalidInputError

# Power series for the Bessel functions needed by the radial and medium-box bounds.
# Arguments stay below ~20 here, where the alternating J series loses at most a few digits.

_REL = 1e-17
_MAX_TERMS = 400


def _series(log_term, sign, start: int = 0) -> float:
    terms = []
    peak = 0.0
    for m in range(start, _MAX_TERMS):
        lt = log_term(m)
        if lt is None:
            continue
        t = sign(m) * math.exp(lt)
        terms.append(t)
        peak = max(peak, abs(t))
        if m > 20 and abs(t) <= _REL * peak:
            break
    return math.fsum(terms)


def bessel_j(nu: float, x: float) -> float:
    if nu < 0 or x < 0:
        raise InvalidInputError("bessel_j needs nu >= 0 and x >= 0")
    if x == 0.0:
        return 1.0 if nu == 0 else 0.0
    lx = math.log(x / 2.0)
    return _series(
        lambda m: (2 * m + nu) * lx - math.lgamma(m + 1) - math.lgamma(m + nu + 1),
        lambda m: -1.0 if m % 2 else 1.0,
    )


def bessel_jprime(nu: float, x: float) -> float:
    """d/dx J_nu(x) = Σ (−1)^m (2m+ν) (x/2)^{2m+ν−1} / (2 m! Γ(m+ν+1))."""
    if nu < 0 or x <= 0:
        raise InvalidInputError("bessel_jprime needs nu >= 0 and x > 0")
    lx = math.log(x / 2.0)

    def log_term(m: int):
        k = 2 * m + nu
        if k == 0:
            return None
        return math.log(k) - math.log(2.0) + (k - 1) * lx - math.lgamma(m + 1) - math.lgamma(m + nu + 1)

    return _series(log_term, lambda m: -1.0 if m % 2 else 1.0)


def bessel_i(nu: float, x: float) -> float:
    """Modified Bessel I_nu(x); all terms positive, so the tail is bounded by the last term."""
    if nu < 0 or x < 0:
        raise InvalidInputError("bessel_i needs nu >= 0 and x >= 0")
    if x == 0.0:
        return 1.0 if nu == 0 else 0.0
    lx = math.log(x / 2.0)
    return _series(
        lambda m: (2 * m + nu) * lx - math.lgamma(m + 1) - math.lgamma(m + nu + 1),
        lambda m: 1.0,
    )
