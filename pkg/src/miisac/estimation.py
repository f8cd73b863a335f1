"""Matched filter, negative log-likelihood, and maximum-likelihood estimation.

The MLE runs multi-start Nelder-Mead simplex search in log-parameter
space (log r, log sigma), which enforces positivity by construction and
puts meters and S/m on comparable scales. A quadratic barrier keeps the
simplex inside the configured search box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .physics import MU0, DomainError, LinkConfig, Theta, channel_constant

# Barrier weight for log-space excursions outside the search box; large
# relative to any NLL value reachable at the box edge.
_BARRIER = 1e12

# Log-space margin within which a solution counts as a boundary hit
_BOUNDARY_EPS = 1e-6


class DegeneratePilotError(ValueError):
    """Pilot block carries zero energy; matched filter undefined."""


@dataclass(frozen=True)
class PilotBlock:
    """One block of known pilot symbols and the corresponding observations."""

    symbols: tuple[complex, ...]
    received: tuple[complex, ...]

    def __post_init__(self):
        if len(self.symbols) != len(self.received) or len(self.symbols) < 1:
            raise ValueError("symbols and received must be equal-length, nonempty")


@dataclass(frozen=True)
class MleConfig:
    """Search box, multi-start grid density, and convergence knobs for the MLE."""

    r_bounds: tuple[float, float] = (0.5, 100.0)
    sigma_bounds: tuple[float, float] = (1e-4, 1.0)
    starts_per_axis: int = 4
    simplex_tol: float = 1e-10    # log-space simplex diameter
    max_iters: int = 2000         # per start

    def __post_init__(self):
        for lo, hi in (self.r_bounds, self.sigma_bounds):
            if not (0 < lo < hi):
                raise ValueError(f"bounds must satisfy 0 < lo < hi, got ({lo}, {hi})")
        if self.starts_per_axis < 1:
            raise ValueError("starts_per_axis must be >= 1")
        if self.simplex_tol <= 0:
            raise ValueError("simplex_tol must be positive")


@dataclass(frozen=True)
class MleEstimate:
    """Result of one MLE solve."""

    theta_hat: Theta
    nll_value: float
    converged: bool
    starts_used: int
    iterations_total: int
    on_boundary: bool = False


def matched_filter(block: PilotBlock) -> complex:
    """Pilot-weighted channel estimate sum(y * conj(x)) / sum(|x|^2)."""
    energy = sum(abs(x) ** 2 for x in block.symbols)
    if energy <= 0:
        raise DegeneratePilotError("pilot block has zero energy")
    num = sum(y * x.conjugate() for x, y in zip(block.symbols, block.received))
    return num / energy


def constant_pilots(cfg: LinkConfig) -> tuple[complex, ...]:
    """Unit-modulus constant pilots at the configured per-symbol power."""
    amp = math.sqrt(cfg.p_tx)
    return (complex(amp, 0.0),) * cfg.pilots_l


def nll(theta: Theta, h_mf: complex, cfg: LinkConfig) -> float:
    """Exact Gaussian negative log-likelihood (up to additive constant):

    L * P_tx * |h_mf - h(theta)|^2 / (N0 * B)

    i.e. the squared residual normalized by the matched-filter noise
    variance. Zero iff h(theta) = h_mf.
    """
    return _make_nll(h_mf, cfg)(theta.r, theta.sigma_m)


def _make_nll(h_mf: complex, cfg: LinkConfig) -> Callable[[float, float], float]:
    """Closure over precomputed constants; hot path for the optimizer."""
    c = channel_constant(cfg)
    k = math.pi * cfg.f0 * MU0
    inv_var = cfg.pilots_l * cfg.p_tx / (cfg.noise_psd * cfg.bandwidth_b)
    hr, hi = h_mf.real, h_mf.imag

    def f(r: float, sigma: float) -> float:
        ar = math.sqrt(k * sigma) * r
        amp = c / (r * r * r) * math.exp(-ar)
        dre = amp * math.cos(ar) - hr
        dim = -amp * math.sin(ar) - hi
        return inv_var * (dre * dre + dim * dim)

    return f


def _nelder_mead(
    f: Callable[[Sequence[float]], float],
    x0: Sequence[float],
    step: float,
    tol: float,
    max_iters: int,
) -> tuple[list[float], float, int, bool]:
    """Standard Nelder-Mead (reflect 1, expand 2, contract 0.5, shrink 0.5).

    Terminates when the simplex diameter (max vertex distance from the
    best vertex) drops below tol, or after max_iters iterations.
    Returns (best point, best value, iterations, converged).
    """
    n = len(x0)
    simplex = [list(x0)]
    for i in range(n):
        v = list(x0)
        v[i] += step
        simplex.append(v)
    values = [f(v) for v in simplex]

    iters = 0
    converged = False
    while iters < max_iters:
        order = sorted(range(n + 1), key=lambda i: values[i])
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]

        diam = max(
            math.sqrt(sum((simplex[i][d] - simplex[0][d]) ** 2 for d in range(n)))
            for i in range(1, n + 1)
        )
        if diam < tol:
            converged = True
            break
        iters += 1

        centroid = [sum(simplex[i][d] for i in range(n)) / n for d in range(n)]
        worst = simplex[n]
        refl = [centroid[d] + (centroid[d] - worst[d]) for d in range(n)]
        f_refl = f(refl)

        if values[0] <= f_refl < values[n - 1]:
            simplex[n], values[n] = refl, f_refl
        elif f_refl < values[0]:
            exp = [centroid[d] + 2.0 * (centroid[d] - worst[d]) for d in range(n)]
            f_exp = f(exp)
            if f_exp < f_refl:
                simplex[n], values[n] = exp, f_exp
            else:
                simplex[n], values[n] = refl, f_refl
        else:
            if f_refl < values[n]:
                cont = [centroid[d] + 0.5 * (refl[d] - centroid[d]) for d in range(n)]
            else:
                cont = [centroid[d] + 0.5 * (worst[d] - centroid[d]) for d in range(n)]
            f_cont = f(cont)
            if f_cont < min(f_refl, values[n]):
                simplex[n], values[n] = cont, f_cont
            else:
                for i in range(1, n + 1):
                    simplex[i] = [
                        simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d])
                        for d in range(n)
                    ]
                    values[i] = f(simplex[i])

    best = min(range(n + 1), key=lambda i: values[i])
    return simplex[best], values[best], iters, converged


def _boxed(obj: Callable[..., float], lo: list[float], hi: list[float]):
    """Wrap an objective with a quadratic barrier outside [lo, hi] (log-space)."""

    def f(u: Sequence[float]) -> float:
        pen = 0.0
        v = list(u)
        for d in range(len(u)):
            if u[d] < lo[d]:
                pen += (lo[d] - u[d]) ** 2
                v[d] = lo[d]
            elif u[d] > hi[d]:
                pen += (u[d] - hi[d]) ** 2
                v[d] = hi[d]
        return obj(*[math.exp(x) for x in v]) + _BARRIER * pen

    return f


def _start_grid(lo: float, hi: float, n: int) -> list[float]:
    """n log-space start coordinates at interior cell midpoints of [lo, hi]."""
    return [lo + (hi - lo) * (i + 0.5) / n for i in range(n)]


def _run_starts(f, starts, step, tol, max_iters):
    """Run Nelder-Mead from every start; lowest value wins, first-visited on ties."""
    best = None
    iters_total = 0
    for x0 in starts:
        x, val, it, conv = _nelder_mead(f, x0, step, tol, max_iters)
        iters_total += it
        if best is None or val < best[1] - 1e-12:
            best = (x, val, conv)
    return best[0], best[1], best[2], iters_total


def mle_joint(h_mf: complex, cfg: LinkConfig, mle_cfg: MleConfig | None = None) -> MleEstimate:
    """Joint ML estimate of (r, sigma_m) by multi-start Nelder-Mead in log-space."""
    mle_cfg = mle_cfg or MleConfig()
    lo = [math.log(mle_cfg.r_bounds[0]), math.log(mle_cfg.sigma_bounds[0])]
    hi = [math.log(mle_cfg.r_bounds[1]), math.log(mle_cfg.sigma_bounds[1])]
    f = _boxed(_make_nll(h_mf, cfg), lo, hi)

    n = mle_cfg.starts_per_axis
    starts = [[ur, us] for ur in _start_grid(lo[0], hi[0], n) for us in _start_grid(lo[1], hi[1], n)]
    step = min((hi[0] - lo[0]), (hi[1] - lo[1])) / (2.0 * n)

    u, val, conv, iters = _run_starts(f, starts, step, mle_cfg.simplex_tol, mle_cfg.max_iters)
    u = [min(max(u[d], lo[d]), hi[d]) for d in range(2)]
    on_boundary = any(
        u[d] - lo[d] < _BOUNDARY_EPS or hi[d] - u[d] < _BOUNDARY_EPS for d in range(2)
    )
    return MleEstimate(
        theta_hat=Theta(r=math.exp(u[0]), sigma_m=math.exp(u[1])),
        nll_value=val,
        converged=conv,
        starts_used=len(starts),
        iterations_total=iters,
        on_boundary=on_boundary,
    )


def mle_conditional(
    h_mf: complex,
    sigma_known: float,
    cfg: LinkConfig,
    mle_cfg: MleConfig | None = None,
) -> MleEstimate:
    """Range-only ML estimate with the conductivity pinned at a known value."""
    if sigma_known <= 0:
        raise DomainError(f"sigma_known must be positive, got {sigma_known}")
    mle_cfg = mle_cfg or MleConfig()
    lo = [math.log(mle_cfg.r_bounds[0])]
    hi = [math.log(mle_cfg.r_bounds[1])]
    base = _make_nll(h_mf, cfg)
    f = _boxed(lambda r: base(r, sigma_known), lo, hi)

    n = mle_cfg.starts_per_axis
    starts = [[ur] for ur in _start_grid(lo[0], hi[0], n)]
    step = (hi[0] - lo[0]) / (2.0 * n)

    u, val, conv, iters = _run_starts(f, starts, step, mle_cfg.simplex_tol, mle_cfg.max_iters)
    ur = min(max(u[0], lo[0]), hi[0])
    on_boundary = ur - lo[0] < _BOUNDARY_EPS or hi[0] - ur < _BOUNDARY_EPS
    return MleEstimate(
        theta_hat=Theta(r=math.exp(ur), sigma_m=sigma_known),
        nll_value=val,
        converged=conv,
        starts_used=len(starts),
        iterations_total=iters,
        on_boundary=on_boundary,
    )
