"""Number-of-false-alarms core: binomial tails and significance scores.

Under the naive model, cell occupancy in the discrete 3D space is i.i.d.
Bernoulli(p), so the probability of seeing at least kappa points in a box of
nu cells is the binomial upper tail.  The NFA of a box is eta times that
tail, where eta counts the placements of a same-sized box in the space.  The
significance S = -ln(NFA) is approximated through the Hoeffding bound

    S(kappa, nu, p) ~ nu * KL(kappa/nu || p) - ln(eta),

valid when kappa/nu > p; since the bound overestimates the tail, the
approximate significance never exceeds the exact one.  All logarithms are
natural (significances are in nats).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class NfaContext:
    """Dimensions of the discrete space and its Bernoulli parameter."""

    space_dims: tuple[int, int, int]  # (width, height, bins)
    p: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ValueError(f"p must be in (0, 1), got {self.p}")


@dataclass(frozen=True)
class Significance:
    value: float  # -ln(NFA), in nats
    kappa: int
    nu: int
    eta: int


def eta_for_box(
    space_dims: tuple[int, int, int], box_dims: tuple[int, int, int]
) -> int:
    """Number of placements of a same-sized box in the discrete space."""
    big_w, big_h, big_b = space_dims
    w, h, zlen = box_dims
    if not (1 <= w <= big_w and 1 <= h <= big_h and 1 <= zlen <= big_b):
        raise ValueError(f"box {box_dims} does not fit in space {space_dims}")
    return (big_w - w + 1) * (big_h - h + 1) * (big_b - zlen + 1)


def _check_domain(kappa: int, nu: int, p: float, eta: int) -> None:
    if nu < 1:
        raise ValueError(f"nu must be >= 1, got {nu}")
    if not (0 <= kappa <= nu):
        raise ValueError(f"kappa must be in [0, nu={nu}], got {kappa}")
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must be in (0, 1), got {p}")
    if eta < 1:
        raise ValueError(f"eta must be >= 1, got {eta}")


def log_binomial_tail(kappa: int, nu: int, p: float) -> float:
    """ln P(Bin(nu, p) >= kappa), summed in log space.

    The first term is evaluated with lgamma; successive terms follow the
    ratio recurrence, and the sum factors out the largest term, so the
    result stays accurate far below double underflow.
    """
    _check_domain(kappa, nu, p, 1)
    if kappa == 0:
        return 0.0
    log_p = math.log(p)
    log_q = math.log1p(-p)
    lt = (
        math.lgamma(nu + 1)
        - math.lgamma(kappa + 1)
        - math.lgamma(nu - kappa + 1)
        + kappa * log_p
        + (nu - kappa) * log_q
    )
    log_terms = [lt]
    step = log_p - log_q
    for i in range(kappa, nu):
        lt += math.log((nu - i) / (i + 1)) + step
        log_terms.append(lt)
    m = max(log_terms)
    total = m + math.log(math.fsum(math.exp(t - m) for t in log_terms))
    return min(total, 0.0)  # the tail is a probability


def exact_nfa(kappa: int, nu: int, p: float, eta: int) -> float:
    """eta * P(Bin(nu, p) >= kappa).

    Exact up to floating rounding (<= ~1e-12 relative for nu <= 1000); may
    underflow to 0.0 when the NFA itself is below ~1e-308, in which case
    :func:`significance_exact` still gives the finite -ln value.
    """
    _check_domain(kappa, nu, p, eta)
    return eta * math.exp(log_binomial_tail(kappa, nu, p))


def significance_exact(kappa: int, nu: int, p: float, eta: int) -> float:
    """-ln(exact NFA), evaluated in log space (no underflow)."""
    _check_domain(kappa, nu, p, eta)
    return -(math.log(eta) + log_binomial_tail(kappa, nu, p))


def significance_hoeffding(kappa: int, nu: int, p: float, eta: int) -> float:
    """Hoeffding-approximated significance nu*KL(kappa/nu || p) - ln(eta).

    Requires kappa/nu > p; the r = 1 endpoint uses the 0*ln(0) = 0
    convention.  Raises ValueError when the density condition fails (the
    caller is expected to skip such boxes).
    """
    _check_domain(kappa, nu, p, eta)
    r = kappa / nu
    if r <= p:
        raise ValueError(f"kappa/nu = {r} must exceed p = {p}")
    kl = r * math.log(r / p)
    if kappa < nu:
        kl += (1.0 - r) * math.log((1.0 - r) / (1.0 - p))
    return nu * kl - math.log(eta)
