"""Two superconducting layers coupled by Cooper-pair tunneling, resolved in
the doubled (thermal) representation, and its convergence to the relative
circle dynamics.

The doubled two-layer Hilbert space splits into invariant blocks labeled by
both layers' spin sectors and the frozen commutant magnetic labels
``(s_L, sz_L0, s_R, sz_R0)``.  Inside a block the free part and the charging
term are diagonal on the grid of system labels ``(a, b)`` while tunneling
hops ``(a, b) -> (a+1, b-1)``, so the block further decomposes into
tridiagonal chains of fixed ``a + b`` (total charge is conserved).  Matrix
elements of the propagator between charge-transfer states are therefore
exact sums over blocks of small tridiagonal eigenproblems; nothing global is
ever materialized.

Energy scales: hopping enters as ``lambda / N^2`` (tunneling is a surface
effect), and the large-N coupling of the relative phase is
``E_J = 2 lambda c_L c_R`` with ``c = Delta`` per layer.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .circle import ChargeBasisTruncation, CircuitParams, propagator
from .correlators import FluctuationWord, _flat_table, correlation_finite_n
from .errors import NormalPhaseError, ParameterError, ParityError, TruncationError
from .gap import josephson_energy, solve_gap
from .quadrature import ordered_phase_integral
from .sectors import ModelParams, ladder_coefficient

__all__ = [
    "JunctionParams",
    "JunctionBlock",
    "TransitionElement",
    "layer_gaps",
    "build_blocks",
    "evolution_element",
    "circle_element",
    "meso_compare",
    "MesoCompareRow",
    "dyson_junction",
    "dyson_junction_defect",
    "two_layer_correlator",
]


@dataclass(frozen=True)
class JunctionParams:
    """Junction parameters: the two layers (their beta is overridden by the
    common junction temperature), tunneling coupling, charging energy and
    offset charge."""

    left: ModelParams
    right: ModelParams
    lam: float
    e_c: float
    n_g: float
    beta: float

    def __post_init__(self):
        if self.beta <= 0 or not math.isfinite(self.beta):
            raise ParameterError(f"beta must be positive and finite, got {self.beta}")
        if self.e_c < 0:
            raise ParameterError("e_c must be non-negative")

    def layer_params(self):
        return (replace(self.left, beta=self.beta),
                replace(self.right, beta=self.beta))


def layer_gaps(params: JunctionParams):
    """Solve both layers' gap equations at the common temperature; both must
    be superconducting for any fluctuation dynamics to exist."""
    pl, pr = params.layer_params()
    gl = solve_gap(pl.epsilon, pl.t_c, pl.beta)
    gr = solve_gap(pr.epsilon, pr.t_c, pr.beta)
    if gl.delta <= 0 or gr.delta <= 0:
        raise NormalPhaseError(
            f"both layers must be superconducting (Delta_L={gl.delta}, "
            f"Delta_R={gr.delta})"
        )
    return gl, gr


def _resolve_gaps(params: JunctionParams, gaps):
    if gaps is None:
        return layer_gaps(params)
    gl, gr = gaps
    if gl.delta <= 0 or gr.delta <= 0:
        raise NormalPhaseError("supplied gap solutions are not superconducting")
    return gl, gr


def _eta(layer: ModelParams, n_spins: int, s: float, a):
    a = np.asarray(a, dtype=float)
    return (-2.0 * layer.epsilon * a
            - (2.0 * layer.t_c / n_spins) * (s * (s + 1.0) - a * (a - 1.0)))


def _sector_entries(layer: ModelParams, n_spins: int):
    s, sz, log_w = _flat_table(layer, n_spins)
    return list(zip(s.tolist(), sz.tolist(), log_w.tolist()))


@dataclass(frozen=True)
class JunctionBlock:
    """One invariant block: spin sectors, commutant labels, total log weight
    ``log[d(s_L) d(s_R) rho_L rho_R]`` and the block Hamiltonian on the
    ``(a, b)`` grid (``a`` outer, ``b`` inner, both ascending)."""

    s_l: float
    sz_l0: float
    s_r: float
    sz_r0: float
    log_weight: float
    hamiltonian: np.ndarray


@dataclass(frozen=True)
class TransitionElement:
    source: tuple
    target: tuple
    t: float
    value: complex


def build_blocks(params: JunctionParams, n_spins: int, gaps=None):
    """Materialize every block Hamiltonian (meant for small N; the count
    grows like N^4).  Diagonal: layer spectra relative to the commutant
    labels plus the charging term; off-diagonal: the tunneling ladder
    products scaled by lambda / N^2."""
    if n_spins % 2 != 0:
        raise ParityError(f"n_spins must be even, got {n_spins}")
    _resolve_gaps(params, gaps)
    pl, pr = params.layer_params()

    blocks = []
    for s_l, sz_l0, logw_l in _sector_entries(pl, n_spins):
        for s_r, sz_r0, logw_r in _sector_entries(pr, n_spins):
            a_vals = np.arange(-s_l, s_l + 1)
            b_vals = np.arange(-s_r, s_r + 1)
            na, nb = len(a_vals), len(b_vals)
            dim = na * nb
            h = np.zeros((dim, dim))

            eta_l = _eta(pl, n_spins, s_l, a_vals) - _eta(pl, n_spins, s_l, sz_l0)
            eta_r = _eta(pr, n_spins, s_r, b_vals) - _eta(pr, n_spins, s_r, sz_r0)
            rel = 0.5 * ((a_vals[:, None] - sz_l0) - (b_vals[None, :] - sz_r0))
            diag = (eta_l[:, None] + eta_r[None, :]
                    + params.e_c * (rel - params.n_g) ** 2)
            h[np.arange(dim), np.arange(dim)] = diag.reshape(-1)

            hop = params.lam / n_spins**2
            for ia, a in enumerate(a_vals[:-1]):
                lp = ladder_coefficient(s_l, a, 1)
                for ib, b in enumerate(b_vals[1:], start=1):
                    lm = ladder_coefficient(s_r, b, -1)
                    row = (ia + 1) * nb + (ib - 1)   # (a+1, b-1)
                    col = ia * nb + ib               # (a, b)
                    h[row, col] += hop * lp * lm
                    h[col, row] += hop * lp * lm

            blocks.append(JunctionBlock(
                s_l=s_l, sz_l0=sz_l0, s_r=s_r, sz_r0=sz_r0,
                log_weight=logw_l + logw_r, hamiltonian=h,
            ))
    return blocks


def _chain(params, pl, pr, n_spins, s_l, sz_l0, s_r, sz_r0, charge):
    """Tridiagonal chain of fixed total system charge ``a + b = charge``
    inside one block: returns (a_lo, diagonal, hopping)."""
    a_lo = max(-s_l, charge - s_r)
    a_hi = min(s_l, charge + s_r)
    a_vals = np.arange(a_lo, a_hi + 1)
    b_vals = charge - a_vals
    eta_l = _eta(pl, n_spins, s_l, a_vals) - float(_eta(pl, n_spins, s_l, sz_l0))
    eta_r = _eta(pr, n_spins, s_r, b_vals) - float(_eta(pr, n_spins, s_r, sz_r0))
    rel = 0.5 * ((a_vals - sz_l0) - (b_vals - sz_r0))
    diag = eta_l + eta_r + params.e_c * (rel - params.n_g) ** 2
    hop = np.array([
        params.lam / n_spins**2
        * ladder_coefficient(s_l, a_vals[j], 1)
        * ladder_coefficient(s_r, b_vals[j], -1)
        for j in range(len(a_vals) - 1)
    ])
    return a_lo, diag, hop


def _element_terms(params: JunctionParams, n_spins, source, target, gaps):
    """Common per-block data for propagator and perturbative elements:
    yields (s_l, sz_l0, s_r, sz_r0, a0, b0, a1, b1, coeff) with coeff the
    weight times ladder amplitudes and normalizations."""
    gl, gr = _resolve_gaps(params, gaps)
    pl, pr = params.layer_params()
    n_l, n_r = source
    n_lp, n_rp = target
    log_norm = ((abs(n_l) + abs(n_lp)) * math.log(gl.c * n_spins)
                + (abs(n_r) + abs(n_rp)) * math.log(gr.c * n_spins))

    for s_l, sz_l0, logw_l in _sector_entries(pl, n_spins):
        lk_l = ladder_coefficient(s_l, sz_l0, n_l)
        lb_l = ladder_coefficient(s_l, sz_l0, n_lp)
        if lk_l == 0.0 or lb_l == 0.0:
            continue
        for s_r, sz_r0, logw_r in _sector_entries(pr, n_spins):
            lk_r = ladder_coefficient(s_r, sz_r0, n_r)
            lb_r = ladder_coefficient(s_r, sz_r0, n_rp)
            if lk_r == 0.0 or lb_r == 0.0:
                continue
            coeff = (math.exp(logw_l + logw_r - log_norm)
                     * lk_l * lk_r * lb_l * lb_r)
            yield (s_l, sz_l0, s_r, sz_r0,
                   sz_l0 + n_l, sz_r0 + n_r, sz_l0 + n_lp, sz_r0 + n_rp, coeff)


def evolution_element(params: JunctionParams, n_spins: int, source, target,
                      t: float, gaps=None) -> TransitionElement:
    """Exact propagator matrix element between charge-transfer states,
    ``<target| exp(-i t H) |source>`` with the full block Hamiltonian.

    Total charge is conserved exactly: elements with
    ``n_L + n_R != n_L' + n_R'`` vanish identically and are returned as 0
    without touching the blocks.
    """
    if n_spins % 2 != 0:
        raise ParityError(f"n_spins must be even, got {n_spins}")
    source = (int(source[0]), int(source[1]))
    target = (int(target[0]), int(target[1]))
    if sum(source) != sum(target):
        return TransitionElement(source, target, t, 0j)

    pl, pr = params.layer_params()
    total = 0j
    for (s_l, sz_l0, s_r, sz_r0, a0, b0, a1, b1, coeff) in _element_terms(
            params, n_spins, source, target, gaps):
        a_lo, diag, hop = _chain(params, pl, pr, n_spins,
                                 s_l, sz_l0, s_r, sz_r0, a0 + b0)
        if hop.size:
            evals, vecs = eigh_tridiagonal(diag, hop)
        else:
            evals, vecs = diag, np.ones((1, 1))
        i0 = int(round(a0 - a_lo))
        i1 = int(round(a1 - a_lo))
        prop = complex((vecs[i1] * np.exp(-1j * t * evals)) @ vecs[i0])
        total += coeff * prop
    return TransitionElement(source, target, t, total)


def circle_element(params: JunctionParams, source, target, t: float,
                   gaps=None, n_max: int = 24) -> complex:
    """Large-N prediction for a charge-transfer element: the relative
    coordinate lives on an integer or half-integer charge grid selected by
    the parity of the conserved total charge, with Josephson coupling
    ``2 lambda c_L c_R``.  The truncation is doubled once and must agree to
    1e-12."""
    if sum(source) != sum(target):
        return 0j
    gl, gr = _resolve_gaps(params, gaps)
    offset = 0.0 if sum(source) % 2 == 0 else 0.5
    n_in = (source[0] - source[1]) / 2.0
    n_out = (target[0] - target[1]) / 2.0
    circuit = CircuitParams(
        e_c=params.e_c, e_j=josephson_energy(params.lam, gl.delta, gr.delta),
        n_g=params.n_g, charge_offset=offset,
    )

    def one(n_max_):
        trunc = ChargeBasisTruncation(n_max_, offset)
        u = propagator(circuit, trunc, t)
        return complex(u[trunc.index_of(n_out), trunc.index_of(n_in)])

    small, big = one(n_max), one(2 * n_max)
    if abs(small - big) > 1e-12:
        raise TruncationError(
            f"circle comparator not converged at n_max={n_max}: "
            f"doubling moved the element by {abs(small - big):.3e}"
        )
    return big


@dataclass(frozen=True)
class MesoCompareRow:
    source: tuple
    target: tuple
    circle_value: complex
    n_values: tuple
    finite_values: tuple
    abs_errors: tuple
    non_increasing_after_first: bool
    final_over_initial: float


def meso_compare(params: JunctionParams, n_list, elements, t: float,
                 gaps=None) -> list:
    """Tabulate |finite-N - circle| for each requested element over a list
    of sizes, with a monotone-trend statistic per element."""
    gaps = _resolve_gaps(params, gaps)
    rows = []
    for source, target in elements:
        circle_value = circle_element(params, source, target, t, gaps=gaps)
        finite = [evolution_element(params, n, source, target, t, gaps=gaps).value
                  for n in n_list]
        errors = [abs(v - circle_value) for v in finite]
        tail = errors[1:]
        non_increasing = all(tail[i + 1] <= tail[i] * (1 + 1e-12)
                             for i in range(len(tail) - 1))
        ratio = errors[-1] / errors[0] if errors and errors[0] > 0 else 0.0
        rows.append(MesoCompareRow(
            source=tuple(source), target=tuple(target), circle_value=circle_value,
            n_values=tuple(int(n) for n in n_list), finite_values=tuple(finite),
            abs_errors=tuple(errors), non_increasing_after_first=non_increasing,
            final_over_initial=ratio,
        ))
    return rows


def dyson_junction(params: JunctionParams, n_spins: int, t: float, order: int,
                   elements, gaps=None, tol: float = 1e-10) -> dict:
    """Elements of the order-K time-ordered perturbative propagator
    ``D_K(t) U_0(t)``, tunneling as the perturbation.

    Inside each block a hop string of length k contributes a chain path
    whose time integrand is a product of pure phases (free spectral gaps
    plus the linear charging increments), integrated over the ordered
    simplex; strings are batched across blocks into single quadrature
    calls.
    """
    if order < 0:
        raise ParameterError("order must be >= 0")
    if n_spins % 2 != 0:
        raise ParityError(f"n_spins must be even, got {n_spins}")
    gaps = _resolve_gaps(params, gaps)
    pl, pr = params.layer_params()

    results = {}
    for source, target in elements:
        source = (int(source[0]), int(source[1]))
        target = (int(target[0]), int(target[1]))
        key = (source, target)
        if sum(source) != sum(target):
            results[key] = 0j
            continue

        terms = list(_element_terms(params, n_spins, source, target, gaps))
        if not terms:
            results[key] = 0j
            continue

        # free + charging phase of U_0 on the starting labels
        u0 = np.empty(len(terms), dtype=complex)
        start_delta = None
        for i, (s_l, sz_l0, s_r, sz_r0, a0, b0, a1, b1, coeff) in enumerate(terms):
            e_free = (float(_eta(pl, n_spins, s_l, a0) - _eta(pl, n_spins, s_l, sz_l0))
                      + float(_eta(pr, n_spins, s_r, b0) - _eta(pr, n_spins, s_r, sz_r0)))
            p0 = 0.5 * ((a0 - sz_l0) - (b0 - sz_r0))
            u0[i] = cmath.exp(-1j * t * (e_free + params.e_c * (p0 - params.n_g) ** 2))
            start_delta = a1 - a0  # equal for all blocks by construction

        coeffs = np.array([term[8] for term in terms])
        total = complex(np.sum(coeffs * u0)) if start_delta == 0 else 0j

        for k in range(1, order + 1):
            if (k - start_delta) % 2 or abs(start_delta) > k:
                continue
            for bits in range(2**k):
                gammas = [1 if (bits >> j) & 1 else -1 for j in range(k)]
                if sum(gammas) != start_delta:
                    continue
                amp = np.zeros(len(terms))
                thetas = np.zeros((k, len(terms)))
                for i, (s_l, sz_l0, s_r, sz_r0, a0, b0, a1, b1, coeff) in enumerate(terms):
                    a, b = float(a0), float(b0)
                    path_amp = 1.0
                    for j, g in enumerate(gammas):
                        if g > 0:
                            step = (ladder_coefficient(s_l, a, 1)
                                    * ladder_coefficient(s_r, b, -1))
                        else:
                            step = (ladder_coefficient(s_l, a, -1)
                                    * ladder_coefficient(s_r, b, 1))
                        if step == 0.0:
                            path_amp = 0.0
                            break
                        path_amp *= step
                        a_new, b_new = a + g, b - g
                        d_free = (float(_eta(pl, n_spins, s_l, a_new)
                                        - _eta(pl, n_spins, s_l, a))
                                  + float(_eta(pr, n_spins, s_r, b_new)
                                          - _eta(pr, n_spins, s_r, b)))
                        p_before = 0.5 * ((a - sz_l0) - (b - sz_r0))
                        thetas[j, i] = d_free + params.e_c * (
                            1.0 + 2.0 * g * (p_before - params.n_g))
                        a, b = a_new, b_new
                    amp[i] = path_amp
                alive = amp != 0.0
                if not np.any(alive):
                    continue
                integrals = ordered_phase_integral(thetas[:, alive], t, tol=tol)
                prefactor = (-1j * params.lam / n_spins**2) ** k
                total += prefactor * complex(
                    np.sum(coeffs[alive] * amp[alive] * u0[alive] * integrals))
        results[key] = total
    return results


def dyson_junction_defect(params: JunctionParams, n_spins: int, t: float,
                          order: int, elements, gaps=None, tol: float = 1e-10):
    """Per-element deviation |exact - D_K U_0| together with the factorial
    bound (2 lambda)^{K+1} t^{K+1} / (K+1)! that holds uniformly in N."""
    gaps = _resolve_gaps(params, gaps)
    approx = dyson_junction(params, n_spins, t, order, elements, gaps=gaps, tol=tol)
    deviations = {}
    for source, target in elements:
        key = (tuple(source), tuple(target))
        exact = evolution_element(params, n_spins, source, target, t, gaps=gaps).value
        deviations[key] = abs(exact - approx[key])
    bound = ((2.0 * abs(params.lam)) ** (order + 1) * abs(t) ** (order + 1)
             / math.factorial(order + 1))
    return deviations, bound


def two_layer_correlator(params: JunctionParams, n_spins: int,
                         left_word: FluctuationWord, right_word: FluctuationWord,
                         gaps=None) -> complex:
    """Joint thermal expectation of a left-layer word times a right-layer
    word.  The thermal state carries no correlations between the layers, so
    this factorizes exactly into the product of single-layer values."""
    gl, gr = _resolve_gaps(params, gaps)
    pl, pr = params.layer_params()
    return (correlation_finite_n(pl, n_spins, left_word, gl)
            * correlation_finite_n(pr, n_spins, right_word, gr))
