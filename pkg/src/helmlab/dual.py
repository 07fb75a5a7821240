"""Dual variational functional and the ground-state solver.

Ground states of (-Delta)^s u - u = Q(x) |u|^(p-2) u are found through
the substitution v = Q^(1/p') |u|^(p-2) u, which turns the problem into
critical points of the dual functional

    J(v) = (1/p') * int |v|^p'  -  (1/2) * int (Q^(1/p) v) R (Q^(1/p) v),

with R the real limiting-absorption resolvent of (-Delta)^s - 1 and
p' = p/(p-1). J is well defined for any v, but a mountain-pass geometry
only exists where the quadratic term

    B(v) = int (Q^(1/p) v) R (Q^(1/p) v)

is positive. On that cone each ray meets the Nehari manifold
{J'(v) v = 0} exactly once, at t_v = (A(v)/B(v))^(1/(2-p')) with
A(v) = int |v|^p', and there

    J(t_v v) = (1/p' - 1/2) * ||t_v v||_{p'}^{p'}.

The ground-state level is the infimum of J over the Nehari manifold,
and minimizers satisfy the Euler-Lagrange fixed-point relation

    |v|^(p'-2) v = Q^(1/p) R (Q^(1/p) v),

from which the rescaled profile is recovered as u = R (Q^(1/p) v).

The solver iterates the fixed-point map projected back onto the Nehari
manifold. The bare iteration is not a contraction here: on the standard
test grids it settles into a two-cycle whose energies blow up, and its
very first candidate can leave the positive cone. The loop therefore
only accepts steps that do not raise the Nehari level, and recovers
speed with Anderson extrapolation over a short history. Per iteration
it costs a single resolvent application, because the projected iterate
t * c reuses R(Q^(1/p) c) computed during the projection of c.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConeExitError, IndefiniteFormError, ZeroFieldError
from .grid import RealField, TorusGrid, apply_multiplier_values
from .params import Exponents
from .resolvent import ResolventSpec, exp_smoothstep

_NEAR_CONSTANT_TOL = 1e-12


def _signed_power(values: np.ndarray, exponent: float) -> np.ndarray:
    return np.sign(values) * np.abs(values) ** exponent


def _root_values(Qfield: RealField, p: float) -> np.ndarray:
    return Qfield.values ** (1.0 / p)


def quad_form(v: RealField, Qfield: RealField, exps: Exponents, spec: ResolventSpec) -> float:
    """Quadratic part B(v) of the dual functional."""
    weighted = _root_values(Qfield, exps.p) * v.values
    resolved = apply_multiplier_values(RealField(v.grid, weighted), spec.symbol_values(v.grid))
    return v.grid.cell_volume * float(np.sum(weighted * resolved.values))


def dual_energy(v: RealField, Qfield: RealField, exps: Exponents, spec: ResolventSpec) -> float:
    """J(v), defined for any v (not only on the Nehari manifold)."""
    pd = exps.p_dual
    a = v.grid.cell_volume * float(np.sum(np.abs(v.values) ** pd))
    return a / pd - 0.5 * quad_form(v, Qfield, exps, spec)


def dual_gradient(v: RealField, Qfield: RealField, exps: Exponents, spec: ResolventSpec) -> RealField:
    """Gradient density of J at v against the quadrature inner product.

    J(v + t w) has derivative <grad, w> at t = 0 for every direction w.
    """
    root = _root_values(Qfield, exps.p)
    weighted = RealField(v.grid, root * v.values)
    resolved = apply_multiplier_values(weighted, spec.symbol_values(v.grid))
    return RealField(v.grid, _signed_power(v.values, exps.p_dual - 1.0) - root * resolved.values)


def nehari_scale(v: RealField, Qfield: RealField, exps: Exponents, spec: ResolventSpec) -> float:
    """The unique t > 0 with t*v on the Nehari manifold.

    Requires a nonzero field with positive quadratic form.
    """
    pd = exps.p_dual
    a = v.grid.cell_volume * float(np.sum(np.abs(v.values) ** pd))
    if a <= 0.0:
        raise ZeroFieldError("cannot project the zero field onto the Nehari manifold")
    b = quad_form(v, Qfield, exps, spec)
    if b <= 0.0:
        raise IndefiniteFormError(
            f"quadratic form is {b:.6g} <= 0; the ray through this field misses the Nehari manifold"
        )
    return (a / b) ** (1.0 / (2.0 - pd))


def nehari_project(v: RealField, Qfield: RealField, exps: Exponents, spec: ResolventSpec) -> "DualState":
    """Scale a field onto the Nehari manifold and report its diagnostics."""
    scaled = nehari_scale(v, Qfield, exps, spec) * v
    return diagnose(scaled, Qfield, exps, spec)


@dataclass(frozen=True)
class DualState:
    """A field together with its dual-functional diagnostics.

    `nehari_residual` is the derivative pairing J'(v)[v] = A(v) - B(v);
    it vanishes exactly on the Nehari manifold.
    """

    v: RealField
    energy: float
    quad_form: float
    nehari_residual: float
    gradient_norm: float

    @property
    def p_dual_mass(self) -> float:
        """A(v) = int |v|^p', recovered as (A - B) + B."""
        return self.nehari_residual + self.quad_form

    @property
    def on_nehari(self) -> bool:
        return abs(self.nehari_residual) <= 1e-8 * abs(self.p_dual_mass)


def diagnose(v: RealField, Qfield: RealField, exps: Exponents, spec: ResolventSpec) -> DualState:
    """Evaluate the dual functional, Nehari defect and gradient size at a field."""
    grid = v.grid
    pd = exps.p_dual
    root = _root_values(Qfield, exps.p)
    weighted = RealField(grid, root * v.values)
    resolved = apply_multiplier_values(weighted, spec.symbol_values(grid))
    b = grid.cell_volume * float(np.sum(weighted.values * resolved.values))
    a = grid.cell_volume * float(np.sum(np.abs(v.values) ** pd))
    energy = a / pd - 0.5 * b
    grad = _signed_power(v.values, pd - 1.0) - root * resolved.values
    # measured in L^p, the dual pairing partner of the L^{p'} variable
    gnorm = (grid.cell_volume * float(np.sum(np.abs(grad) ** exps.p))) ** (1.0 / exps.p)
    return DualState(v=v, energy=energy, quad_form=b, nehari_residual=a - b, gradient_norm=gnorm)


@dataclass(frozen=True)
class GroundState:
    """Result of a ground-state solve.

    `u_rescaled` is the recovered profile R(Q^(1/p) v) in rescaled
    coordinates; multiplying by `scale_factor` and evaluating at X/eps
    gives the physical-frame solution. `peak` is the location of
    max |u_rescaled| with sub-cell refinement. `fixed_point_residual` is
    the normalized defect ||sgn(v)|v|^(p'-1) - Q^(1/p) R(Q^(1/p) v)||_p
    / ||v||_{p'}^{p'-1} at exit.
    """

    state: DualState
    u_rescaled: RealField
    scale_factor: float
    peak: tuple[float, ...]
    exps: Exponents
    iterations: int
    converged: bool
    fixed_point_residual: float

    @property
    def v(self) -> RealField:
        return self.state.v

    @property
    def level(self) -> float:
        return self.state.energy

    @property
    def residual(self) -> float:
        return self.fixed_point_residual


def default_initial_guess(
    Qfield: RealField,
    exps: Exponents,
    spec: ResolventSpec,
    center: tuple[float, ...] | None = None,
) -> RealField:
    """Unit-width Gaussian at the coefficient maximum, filtered into the cone.

    The raw Gaussian concentrates too much spectral mass inside the unit
    sphere, where the resolvent symbol is negative; its quadratic form
    comes out negative on every standard grid, so it cannot be projected
    onto the Nehari manifold. Keeping only the modes where the symbol is
    positive makes the quadratic form strictly positive by construction.
    An explicit `center` overrides the default placement (used to seed
    one solve per maximum for multi-peak coefficients); otherwise the
    bump sits at the coefficient argmax, or at the origin node for a
    (near-)constant coefficient where the argmax tie-break is arbitrary.
    """
    grid = Qfield.grid
    if center is None:
        values = Qfield.values
        spread = float(np.max(values) - np.min(values))
        if spread <= _NEAR_CONSTANT_TOL * max(abs(float(np.max(values))), 1.0):
            node = grid.origin_index
        else:
            node = np.unravel_index(int(np.argmax(values)), grid.shape)
        center = tuple(float(grid.coordinate_axis[i]) for i in node)
    gauss = np.exp(-grid.periodic_distance2(center) / 2.0)
    positive_part = np.maximum(spec.symbol_values(grid), 0.0)
    return apply_multiplier_values(RealField(grid, gauss), positive_part)


def random_initial_guess(
    grid: TorusGrid, spec: ResolventSpec, seed: int, envelope_width: float = 4.0
) -> RealField:
    """Seeded Gaussian-enveloped noise, filtered into the admissible cone.

    White noise times exp(-|x|^2 / (2 width^2)), keeping only the
    spectral modes where the resolvent symbol is positive so the
    quadratic form of the result is strictly positive. Two different
    seeds give genuinely independent starting points for cross-checking
    that the solver lands on the same level.
    """
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(grid.shape)
    envelope = np.exp(-grid.radius**2 / (2.0 * envelope_width**2))
    positive_part = np.maximum(spec.symbol_values(grid), 0.0)
    return apply_multiplier_values(RealField(grid, noise * envelope), positive_part)


def dihedral_average(field: RealField) -> RealField:
    """Average of a field over axis permutations and reflections.

    Reflection along an axis is flip plus a one-cell roll so the node at
    coordinate -L stays fixed and the origin node maps to itself. For
    problems whose minimizer has the full symmetry, averaging a random
    start strips the neutral translation modes that otherwise drift for
    hundreds of iterations before the solver settles.
    """
    values = field.values
    dim = values.ndim
    import itertools

    total = np.zeros_like(values)
    count = 0
    for perm in itertools.permutations(range(dim)):
        base = np.transpose(values, perm)
        for signs in itertools.product((1, -1), repeat=dim):
            piece = base
            for axis, sign in enumerate(signs):
                if sign < 0:
                    piece = np.roll(np.flip(piece, axis=axis), 1, axis=axis)
            total = total + piece
            count += 1
    return RealField(field.grid, total / count)


def solve_ground_state(
    Qfield: RealField,
    exps: Exponents,
    spec: ResolventSpec,
    init: RealField | None = None,
    tol: float = 1e-6,
    max_iter: int = 500,
    anderson_memory: int = 5,
) -> GroundState:
    """Minimize the dual functional over the Nehari manifold.

    Safeguarded fixed-point iteration: each step proposes the projected
    Euler-Lagrange candidate, tries an Anderson-extrapolated combination
    of recent iterates first, falls back to the plain candidate when it
    does not raise the level, then to a line search mixing toward the
    candidate, and finally to projected gradient descent. If no fallback
    can lower the level the best iterate seen is returned with
    `converged=False`; if the iteration cannot even stay where the
    quadratic form is positive a `ConeExitError` is raised.
    """
    grid = Qfield.grid
    if init is not None and init.grid != grid:
        raise ValueError("initial guess lives on a different grid than the coefficient")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")

    p, pd = exps.p, exps.p_dual
    hd = grid.cell_volume
    root = _root_values(Qfield, p)
    symbol = spec.symbol_values(grid)

    def resolve(a: np.ndarray) -> np.ndarray:
        return apply_multiplier_values(RealField(grid, a), symbol).values

    def project(c: np.ndarray):
        """Nehari-project raw values; returns (t*c, R(Q^(1/p) t*c), level) or None."""
        rw = resolve(root * c)
        b = hd * float(np.sum(root * c * rw))
        if b <= 0.0:
            return None
        a = hd * float(np.sum(np.abs(c) ** pd))
        t = (a / b) ** (1.0 / (2.0 - pd))
        return t * c, t * rw, (1.0 / pd - 0.5) * t**pd * a

    if init is None:
        init = default_initial_guess(Qfield, exps, spec)
    if not np.any(init.values):
        raise ZeroFieldError("initial guess is identically zero")
    start = project(init.values)
    if start is None:
        raise IndefiniteFormError(
            "initial guess has nonpositive quadratic form and cannot be projected; "
            "filter it through the positive part of the resolvent symbol first"
        )
    v, rw_v, energy = start

    hist_v: list[np.ndarray] = []
    hist_r: list[np.ndarray] = []
    best = None
    iterations = max_iter
    res = np.inf
    converged = False
    for it in range(max_iter):
        w = root * rw_v
        grad = _signed_power(v, pd - 1.0) - w
        res_num = (hd * float(np.sum(np.abs(grad) ** p))) ** (1.0 / p)
        res_den = (hd * float(np.sum(np.abs(v) ** pd))) ** ((pd - 1.0) / pd)
        res = res_num / res_den
        if best is None or energy < best[2]:
            best = (v, rw_v, energy, res, it)
        if res <= tol:
            converged = True
            iterations = it
            break

        cand = _signed_power(w, p - 1.0)
        projected_cand = project(cand)
        stepped = False
        found_positive = projected_cand is not None

        if projected_cand is not None:
            hist_v.append(v.ravel().copy())
            hist_r.append((projected_cand[0] - v).ravel())
            if len(hist_v) > anderson_memory:
                hist_v.pop(0)
                hist_r.pop(0)
            if len(hist_v) >= 2:
                residual_matrix = np.stack(hist_r, axis=1)
                increments = residual_matrix[:, 1:] - residual_matrix[:, :-1]
                try:
                    theta, *_ = np.linalg.lstsq(increments, residual_matrix[:, -1], rcond=None)
                except np.linalg.LinAlgError:
                    theta = None
                if theta is not None:
                    weights = np.zeros(residual_matrix.shape[1])
                    weights[-1] = 1.0
                    weights[:-1] -= theta
                    weights[1:] += theta
                    mixed = sum(
                        wgt * (hv + hr) for wgt, hv, hr in zip(weights, hist_v, hist_r)
                    ).reshape(grid.shape)
                    trial = project(mixed)
                    if trial is not None:
                        found_positive = True
                        # slack shrinks with the residual, so late extrapolations
                        # cannot wander back up in level
                        if trial[2] <= energy + min(0.5, res * res) * abs(energy):
                            v, rw_v, energy = trial
                            stepped = True
            if not stepped and projected_cand[2] <= energy + 1e-12 * abs(energy):
                v, rw_v, energy = projected_cand
                stepped = True

        if not stepped:
            cand_norm = (hd * float(np.sum(np.abs(cand) ** pd))) ** (1.0 / pd)
            if cand_norm > 0.0:
                v_norm = (hd * float(np.sum(np.abs(v) ** pd))) ** (1.0 / pd)
                matched = (v_norm / cand_norm) * cand
                gamma = 0.5
                for _ in range(11):
                    trial = project(v + gamma * (matched - v))
                    if trial is not None:
                        found_positive = True
                        if trial[2] <= energy + 1e-12 * abs(energy):
                            v, rw_v, energy = trial
                            stepped = True
                            break
                    gamma *= 0.5

        if not stepped:
            alpha = 1.0
            for _ in range(40):
                trial = project(v - alpha * grad)
                if trial is not None:
                    found_positive = True
                    if trial[2] < energy:
                        v, rw_v, energy = trial
                        stepped = True
                        break
                alpha *= 0.5
            if not stepped:
                if not found_positive:
                    raise ConeExitError(
                        "no trial step keeps the quadratic form positive; "
                        "the iterate sits at the boundary of the admissible cone"
                    )
                iterations = it
                break  # stagnant: nothing lowers the level

    if not converged and best is not None:
        v, rw_v, energy, res, _ = best

    return _package(
        grid, v, rw_v, energy, res, iterations, converged, Qfield, exps, spec
    )


def _package(grid, v, rw_v, energy, res, iterations, converged, Qfield, exps, spec) -> GroundState:
    from .concentration import locate_peak  # deferred: concentration imports this module

    u = RealField(grid, rw_v)
    peak_node = np.unravel_index(int(np.argmax(np.abs(u.values))), grid.shape)
    if u.values[peak_node] < 0.0:
        # J is even, so fix the sign so the profile is positive at its peak
        v = -v
        u = RealField(grid, -u.values)
    peak = locate_peak(u)
    state = diagnose(RealField(grid, v), Qfield, exps, spec)
    return GroundState(
        state=state,
        u_rescaled=u,
        scale_factor=exps.scale_factor,
        peak=peak,
        exps=exps,
        iterations=iterations,
        converged=converged,
        fixed_point_residual=res,
    )


def limit_ground_state(
    value: float,
    grid: TorusGrid,
    exps: Exponents,
    spec: ResolventSpec,
    tol: float = 1e-6,
    max_iter: int = 500,
) -> GroundState:
    """Ground state for a constant coefficient, centered at the origin.

    Constant coefficients make the problem translation invariant on the
    torus, so the returned state is rolled to put the profile peak on
    the origin node; comparisons against concentrating states then need
    no alignment step.
    """
    if value <= 0:
        raise ValueError("constant coefficient must be positive")
    Qfield = RealField(grid, np.full(grid.shape, float(value)))
    gs = solve_ground_state(Qfield, exps, spec, tol=tol, max_iter=max_iter)
    peak_node = np.unravel_index(int(np.argmax(np.abs(gs.u_rescaled.values))), grid.shape)
    shift = tuple(int(o - i) for o, i in zip(grid.origin_index, peak_node))
    if any(shift):
        # exact on the torus: rolling commutes with the constant-Q functional
        v = RealField(grid, np.roll(gs.v.values, shift, axis=range(grid.dim)))
        u = RealField(grid, np.roll(gs.u_rescaled.values, shift, axis=range(grid.dim)))
        from .concentration import locate_peak

        state = diagnose(v, Qfield, exps, spec)
        gs = GroundState(
            state=state,
            u_rescaled=u,
            scale_factor=gs.scale_factor,
            peak=locate_peak(u),
            exps=gs.exps,
            iterations=gs.iterations,
            converged=gs.converged,
            fixed_point_residual=gs.fixed_point_residual,
        )
    return gs


def cutoff_projection(
    limit_profile: RealField,
    concentration_point: tuple[float, ...],
    Qfield: RealField,
    exps: Exponents,
    spec: ResolventSpec,
    eta=None,
) -> tuple[RealField, float, float]:
    """Nehari data of a cutoff-localized copy of the limit profile.

    Builds phi(x) = eta(|eps*x - y|) * w0(x - y/eps) from the limit
    dual profile w0 and the physical concentration point y, with eta a
    smooth radial cutoff equal to 1 on [0, 1] and 0 outside [0, 2]
    (overridable). Returns (phi, t, level) where t is the Nehari scale
    of phi and level = J(t * phi). As eps -> 0 the cutoff stops biting,
    t drifts to 1 and the level to the limit ground-state level: the
    comparison argument pinning concentration at coefficient maxima,
    made quantitative on the grid.
    """
    grid = limit_profile.grid
    if Qfield.grid != grid:
        raise ValueError("coefficient and limit profile live on different grids")
    eps = exps.eps
    rescaled_center = tuple(c / eps for c in concentration_point)
    node = grid.nearest_index(rescaled_center)
    shift = tuple(int(i - o) for i, o in zip(node, grid.origin_index))
    moved = np.roll(limit_profile.values, shift, axis=range(grid.dim)) if any(shift) else limit_profile.values
    rho = eps * np.sqrt(grid.periodic_distance2(rescaled_center))
    if eta is None:
        window = exp_smoothstep(rho - 1.0)
    else:
        window = np.asarray(eta(rho), dtype=float)
    phi = RealField(grid, window * moved)
    t = nehari_scale(phi, Qfield, exps, spec)
    level = dual_energy(t * phi, Qfield, exps, spec)
    return phi, t, level
