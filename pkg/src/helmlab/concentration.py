"""Concentration experiments: peak tracking, limit comparisons, level tables.

As the wavenumber k grows (eps = 1/k shrinks), the rescaled coefficient
Q(eps * x) flattens toward its peak value and the computed ground state
should converge to the constant-coefficient limit profile, with its peak
parked at a maximum of Q. The routines here measure exactly that: where
the profile peaks, how far it is from the limit profile, and how the
ground-state level is pinched between the two constant-coefficient
levels built from max Q and the background value of Q.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientQ, sample_Q
from .dual import GroundState, limit_ground_state, solve_ground_state
from .errors import ZeroFieldError
from .grid import RealField, TorusGrid, lq_norm
from .params import Exponents
from .resolvent import ResolventSpec, auto_delta


def locate_peak(field: RealField) -> tuple[float, ...]:
    """Coordinates of the maximum of |field|, refined below the grid scale.

    Starts from the first-occurrence argmax node and refines along each
    axis with a three-point parabola through the periodic neighbors; the
    refinement is clamped to half a cell so a noisy neighbor cannot
    throw the estimate into the next cell.
    """
    grid = field.grid
    mags = np.abs(field.values)
    top = float(np.max(mags))
    if top <= 0.0:
        raise ZeroFieldError("cannot locate the peak of an identically zero field")
    node = np.unravel_index(int(np.argmax(mags)), grid.shape)
    coords = []
    n = grid.points_per_axis
    for axis, i in enumerate(node):
        take = list(node)
        take[axis] = (i - 1) % n
        left = float(mags[tuple(take)])
        take[axis] = (i + 1) % n
        right = float(mags[tuple(take)])
        center = float(mags[node])
        curvature = left - 2.0 * center + right
        if curvature < 0.0:
            offset = float(np.clip(0.5 * (left - right) / curvature, -0.5, 0.5))
        else:
            offset = 0.0
        coords.append(float(grid.coordinate_axis[i]) + offset * grid.spacing)
    return tuple(coords)


def profile_distance(field: RealField, reference: RealField, norm_exponent: float = 2.0) -> float:
    """Relative L^q distance after aligning the profiles by translation.

    The field is rolled so its argmax node lands on the reference's
    argmax node, then over all extra shifts of up to two cells per axis
    the smallest ||field_shifted - reference||_q / ||reference||_q is
    returned. Cell-level alignment is all a translation on the grid can
    do; the two-cell search absorbs argmax jitter between nearby nodes.
    """
    if field.grid != reference.grid:
        raise ValueError("fields live on different grids")
    ref_norm = lq_norm(reference, norm_exponent)
    if ref_norm <= 0.0:
        raise ZeroFieldError("reference profile is identically zero")
    grid = field.grid
    f_node = np.unravel_index(int(np.argmax(np.abs(field.values))), grid.shape)
    r_node = np.unravel_index(int(np.argmax(np.abs(reference.values))), grid.shape)
    base = tuple(int(r - f) for r, f in zip(r_node, f_node))
    best = np.inf
    axes = tuple(range(grid.dim))
    for extra in itertools.product(range(-2, 3), repeat=grid.dim):
        shift = tuple(b + e for b, e in zip(base, extra))
        moved = np.roll(field.values, shift, axis=axes)
        dist = lq_norm(RealField(grid, moved - reference.values), norm_exponent)
        if dist < best:
            best = dist
    return float(best / ref_norm)


def reconstruct_profile(gs: GroundState, Qfield: RealField, spec: ResolventSpec) -> RealField:
    """Rescaled profile R(Q^(1/p) v) recovered from the dual field of a solve.

    Recomputes the reconstruction from scratch; on a converged state it
    reproduces `gs.u_rescaled` and, pointwise, sgn(v)|v|^(p'-1) equals
    Q^(1/p) times this profile up to the solver tolerance.
    """
    from .grid import apply_multiplier_values

    v = gs.v
    weighted = RealField(v.grid, Qfield.values ** (1.0 / gs.exps.p) * v.values)
    return apply_multiplier_values(weighted, spec.symbol_values(v.grid))


@dataclass(frozen=True)
class SweepRecord:
    """One wavenumber step of a concentration sweep."""

    k: float
    eps: float
    level: float
    peak_rescaled: tuple[float, ...]
    peak_physical: tuple[float, ...]
    profile_distance: float
    iterations: int
    converged: bool
    state: GroundState | None


def single_bubble_fraction(gs: GroundState, center: tuple[float, ...] | None = None) -> float:
    """Fraction of the dual p'-mass within a quarter box width of the peak."""
    grid = gs.v.grid
    pd = gs.exps.p_dual
    weight = np.abs(gs.v.values) ** pd
    total = float(np.sum(weight))
    if total <= 0.0:
        raise ZeroFieldError("ground state has zero dual mass")
    d2 = grid.periodic_distance2(gs.peak if center is None else center)
    near = float(np.sum(np.where(d2 <= (0.25 * grid.half_width) ** 2, weight, 0.0)))
    return near / total


def single_bubble_check(record: SweepRecord, gs: GroundState | None = None, fraction: float = 0.9) -> bool:
    """Whether the record's dual mass sits in one bubble around its peak.

    True when at least `fraction` of the p'-mass of v lies within
    0.25 * half_width of the recorded peak; a second bubble of
    comparable mass elsewhere pulls the fraction below any strict
    threshold. `gs` defaults to the state stored on the record.
    """
    if gs is None:
        gs = record.state
    if gs is None:
        raise ValueError("record carries no ground state and none was passed")
    return single_bubble_fraction(gs, center=record.peak_rescaled) >= fraction


def _sweep_step(
    Q: CoefficientQ,
    k: float,
    exps: Exponents,
    grid: TorusGrid,
    spec: ResolventSpec,
    tol: float,
    max_iter: int,
    limit: GroundState,
    previous: GroundState | None,
) -> SweepRecord:
    step_exps = exps.with_k(float(k))
    eps = step_exps.eps
    Qfield = sample_Q(Q, grid, eps)
    init = None
    if previous is not None:
        init = previous.v
        spread = float(np.max(Qfield.values) - np.min(Qfield.values))
        if spread > 1e-12 * max(float(np.max(Qfield.values)), 1.0):
            # re-center the previous bubble onto the new coefficient maximum;
            # a (near-)constant coefficient has no meaningful argmax, so the
            # bubble stays wherever the last solve left it
            q_node = np.unravel_index(int(np.argmax(Qfield.values)), grid.shape)
            p_node = np.unravel_index(int(np.argmax(np.abs(previous.u_rescaled.values))), grid.shape)
            shift = tuple(int(q - p) for q, p in zip(q_node, p_node))
            init = RealField(grid, np.roll(previous.v.values, shift, axis=range(grid.dim)))
    gs = solve_ground_state(Qfield, step_exps, spec, init=init, tol=tol, max_iter=max_iter)
    dist = profile_distance(gs.u_rescaled, limit.u_rescaled, exps.p)
    return SweepRecord(
        k=float(k),
        eps=eps,
        level=gs.level,
        peak_rescaled=gs.peak,
        peak_physical=tuple(eps * c for c in gs.peak),
        profile_distance=dist,
        iterations=gs.iterations,
        converged=gs.converged,
        state=gs,
    )


def run_sweep(
    Q: CoefficientQ,
    ks,
    exps: Exponents,
    grid: TorusGrid,
    spec: ResolventSpec | None = None,
    tol: float = 1e-6,
    max_iter: int = 500,
    warm_start: bool = True,
    parallel: bool = False,
    limit: GroundState | None = None,
) -> list[SweepRecord]:
    """Solve along increasing wavenumbers and compare against the limit profile.

    Each step solves with the coefficient sampled at eps = 1/k, measures
    the profile distance to the constant-coefficient state at the peak
    value of Q, and reports the peak in both frames. With warm starts
    (the default) the previous dual field, rolled onto the new
    coefficient maximum, seeds the next solve, which cuts the iteration
    count several-fold once the bubble has formed. `parallel=True`
    instead runs the steps cold-started and concurrently (fan-out width
    from the TOOL_THREADS environment variable, default the core count)
    and merges the records in k-order. A step that stagnates is recorded
    with converged=False and the sweep moves on.
    """
    ks = [float(k) for k in ks]
    if not ks:
        raise ValueError("need at least one wavenumber")
    if spec is None:
        spec = ResolventSpec(s=exps.s, delta=auto_delta(grid, exps.s))
    if limit is None:
        limit = limit_ground_state(Q.sup_value, grid, exps, spec, tol=tol, max_iter=max_iter)

    if parallel:
        import os
        from concurrent.futures import ThreadPoolExecutor

        width = int(os.environ.get("TOOL_THREADS", os.cpu_count() or 1))
        with ThreadPoolExecutor(max_workers=max(1, min(width, len(ks)))) as pool:
            return list(
                pool.map(
                    lambda k: _sweep_step(Q, k, exps, grid, spec, tol, max_iter, limit, None), ks
                )
            )

    records: list[SweepRecord] = []
    previous: GroundState | None = None
    for k in ks:
        record = _sweep_step(
            Q, k, exps, grid, spec, tol, max_iter, limit, previous if warm_start else None
        )
        records.append(record)
        if record.converged:
            previous = record.state
    return records


@dataclass(frozen=True)
class LevelRow:
    """Ground-state level at one eps, with its gaps to the limit levels."""

    eps: float
    level: float
    gap_low: float
    gap_high: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class LevelTable:
    """Levels of the concentrating family pinched between the two limits.

    `peak_level` is the constant-coefficient level at max Q, the floor
    the family descends to; `background_level` is the level at the
    background value of Q, strictly above it whenever the bump helps.
    Rows report c_eps with gap_low = c_eps - peak_level (should shrink
    to zero from above) and gap_high = background_level - c_eps (should
    become positive once eps resolves the bump).
    """

    peak_level: float
    background_level: float
    rows: tuple[LevelRow, ...]
    peak_converged: bool = True
    background_converged: bool = True


def level_table(
    Q: CoefficientQ,
    eps_list,
    exps: Exponents,
    grid: TorusGrid,
    spec: ResolventSpec | None = None,
    tol: float = 1e-6,
    max_iter: int = 500,
    warm_start: bool = True,
) -> LevelTable:
    """Ground-state levels for a family of eps against both constant limits."""
    if spec is None:
        spec = ResolventSpec(s=exps.s, delta=auto_delta(grid, exps.s))
    if Q.background_value <= 0:
        raise ValueError("background value must be positive to define the background limit level")
    peak_gs = limit_ground_state(Q.sup_value, grid, exps, spec, tol=tol, max_iter=max_iter)
    background_gs = limit_ground_state(Q.background_value, grid, exps, spec, tol=tol, max_iter=max_iter)

    rows: list[LevelRow] = []
    previous: GroundState | None = None
    for eps in eps_list:
        step_exps = exps.with_k(1.0 / float(eps))
        Qfield = sample_Q(Q, grid, step_exps.eps)
        init = previous.v if (warm_start and previous is not None) else None
        gs = solve_ground_state(Qfield, step_exps, spec, init=init, tol=tol, max_iter=max_iter)
        rows.append(
            LevelRow(
                eps=float(eps),
                level=gs.level,
                gap_low=gs.level - peak_gs.level,
                gap_high=background_gs.level - gs.level,
                iterations=gs.iterations,
                converged=gs.converged,
            )
        )
        if gs.converged:
            previous = gs
    return LevelTable(
        peak_level=peak_gs.level,
        background_level=background_gs.level,
        rows=tuple(rows),
        peak_converged=peak_gs.converged,
        background_converged=background_gs.converged,
    )
