"""Adaptive quadrature used as an independent check on closed forms.

The engine is QUADPACK through :func:`scipy.integrate.quad`; what lives here
is the problem-specific part: splitting off the algebraic endpoint
singularity, choosing a finite cut-off from an analytic tail bound, and
laying out breakpoints for sharply peaked radial profiles.
"""

import math

import numpy as np
from scipy import integrate

from .errors import DomainError

__all__ = ["beta_integral_quad", "tail_cutoff", "radial_integral"]

_TAIL_FRACTION = 1e-13


def tail_cutoff(P, Q, head, fraction=_TAIL_FRACTION):
    """Smallest T >= 1 whose analytic tail bound is below ``fraction * head``.

    For t >= 1, ``t^Q <= max(1, 2^-Q) (1+t)^Q`` so that
    ``int_T^inf (1+t)^-P t^Q dt <= max(1, 2^-Q) (1+T)^(Q-P+1) / (P-Q-1)``.
    """
    d = P - Q - 1.0
    scale = max(1.0, 2.0 ** (-Q)) / d
    # (1+T)^(-d) * scale <= fraction * head
    log1T = (math.log(scale) - math.log(fraction * head)) / d
    return max(1.0, math.expm1(max(log1T, 0.0)))


def beta_integral_quad(P, Q, epsabs=0.0, epsrel=1e-13):
    """Quadrature value of ``int_0^inf (1+t)^(-P) t^Q dt``.

    Returns ``(value, T)`` where ``T`` is the cut-off used for the tail.
    On [0, 1] the ``t^Q`` factor is passed as an algebraic weight; on [1, T]
    the variable ``u = ln(1+t)`` keeps the range short even for slowly
    decaying integrands.
    """
    if not (Q > -1.0 and P > Q + 1.0):
        raise DomainError(f"integral diverges for P={P}, Q={Q}", "P-Q-1" if Q > -1 else "Q+1")
    head, _ = integrate.quad(
        lambda t: (1.0 + t) ** (-P), 0.0, 1.0, weight="alg", wvar=(Q, 0.0),
        epsabs=epsabs, epsrel=epsrel, limit=200,
    )
    T = tail_cutoff(P, Q, head)
    U = math.log1p(T)

    def g(u):
        # (1+t)^(1-P) t^Q with t = e^u - 1, evaluated in logs
        return math.exp(u * (1.0 - P) + Q * (u + math.log(-math.expm1(-u))))

    breaks = [math.log(2.0)]
    while breaks[-1] * 2.0 < U:
        breaks.append(breaks[-1] * 2.0)
    breaks.append(U)
    tail = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        val, _ = integrate.quad(g, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=200)
        tail += val
    return head + tail, T


def radial_integral(func, radius, scale, epsrel=1e-12):
    """``int_0^radius func(r) dr`` for integrands peaked at ``r ~ scale``.

    Breakpoints at ``scale * 10^k`` keep QUADPACK from missing the peak when
    ``scale`` is many decades below ``radius``.
    """
    edges = [0.0]
    s = min(scale, radius)
    while s < radius:
        edges.append(s)
        s *= 10.0
    edges.append(radius)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        val, _ = integrate.quad(func, lo, hi, epsabs=0.0, epsrel=epsrel, limit=400)
        total += val
    return total

