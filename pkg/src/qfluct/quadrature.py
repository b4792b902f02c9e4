"""Iterated Gauss-Legendre quadrature over the ordered time simplex.

The perturbative propagator terms reduce, channel by channel, to integrals

    I(theta; t) = int_0^t dt1 e^{-i th1 t1} int_0^{t1} dt2 e^{-i th2 t2} ...

The iterated integrals are evaluated spectrally: function values on the
Gauss-Legendre grid are projected on Legendre polynomials (exact for the
interpolant, the product rule being exact up to degree 2q-1), the expansion
is antidifferentiated term by term, and the primitive is read back at the
nodes.  One such pass per nesting level replaces the naive q^k nested rule,
and the whole recursion is vectorized over channels.  Nodes are doubled
until the outermost value is stable.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

from .errors import NumericalError

__all__ = ["ordered_phase_integral"]


@lru_cache(maxsize=16)
def _operators(q: int):
    """Gauss-Legendre nodes on [-1, 1] plus the two antiderivative maps:
    values at nodes -> primitive (vanishing at -1) at nodes / at +1."""
    nodes, weights = legendre.leggauss(q)
    vander = legendre.legvander(nodes, q - 1)          # P_l(x_i)
    norms = (2.0 * np.arange(q) + 1.0) / 2.0
    coef_from_values = norms[:, None] * (vander * weights[:, None]).T

    int_map = np.zeros((q + 1, q))
    for l in range(q):
        e = np.zeros(q)
        e[l] = 1.0
        int_map[:, l] = legendre.legint(e, lbnd=-1.0)

    at_nodes = legendre.legvander(nodes, q) @ int_map @ coef_from_values
    at_end = legendre.legvander(np.array([1.0]), q) @ int_map @ coef_from_values
    return nodes, at_nodes, at_end[0]


def _pass(thetas: np.ndarray, t: float, q: int) -> np.ndarray:
    depth, channels = thetas.shape
    nodes, at_nodes, at_end = _operators(q)
    times = 0.5 * t * (nodes + 1.0)
    half = 0.5 * t

    inner = np.ones((q, channels), dtype=complex)
    for j in range(depth - 1, 0, -1):
        integrand = np.exp(-1j * np.outer(times, thetas[j])) * inner
        inner = half * (at_nodes @ integrand)
    integrand = np.exp(-1j * np.outer(times, thetas[0])) * inner
    return half * (at_end @ integrand)


def ordered_phase_integral(thetas, t: float, tol: float = 1e-10,
                           q_start: int = 32, q_max: int = 4096) -> np.ndarray:
    """Ordered-simplex integral of ``prod_j exp(-i theta_j t_j)`` over
    ``t >= t_1 >= t_2 >= ... >= t_k >= 0``, vectorized over the columns of
    ``thetas`` (shape ``(k, channels)``).

    Raises ``NumericalError`` if node doubling never stabilizes to ``tol``.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    depth, channels = thetas.shape
    if depth == 0:
        raise ValueError("need at least one nesting level")
    if channels == 0:
        return np.zeros(0, dtype=complex)
    if t == 0.0:
        return np.zeros(channels, dtype=complex)

    # start high enough to resolve the fastest phase
    q = max(q_start, int(1.2 * np.max(np.abs(thetas)) * abs(t) / 2.0) + 8)
    previous = _pass(thetas, t, q)
    while q <= q_max:
        q *= 2
        current = _pass(thetas, t, q)
        scale = max(1.0, float(np.max(np.abs(current))))
        if float(np.max(np.abs(current - previous))) <= tol * scale:
            return current
        previous = current
    raise NumericalError(
        f"simplex quadrature did not stabilize to {tol} below {q_max} nodes"
    )
