"""Resolvent multiplier, kernel extraction and decay diagnostics."""
import numpy as np
import pytest

from helmlab import (
    BandCutoff,
    InsufficientDataError,
    RealField,
    ResolventSpec,
    SingularModeError,
    SupportOverlapError,
    auto_delta,
    band_decompose,
    build_grid,
    compact_bump,
    disjoint_interaction,
    exp_smoothstep,
    extract_kernel,
    fit_decay_exponent,
    forward_transform,
    inner_product,
    lq_norm,
    radial_envelope,
    real_resolvent,
)


def symbol(mu, delta):
    # reference arithmetic for a single mode, written out independently
    if delta == 0.0:
        return 1.0 / (mu - 1.0)
    return (mu - 1.0) / ((mu - 1.0) ** 2 + delta**2)


# ---------------------------------------------------------------- symbol


def test_single_mode_principal_value():
    grid = build_grid(1, 16.0, 64)
    xi = np.pi * 10 / 16.0  # off the unit sphere
    f = RealField(grid, np.cos(xi * grid.coordinate_axis))
    out = real_resolvent(f, ResolventSpec(s=1.0, delta=0.0))
    assert np.allclose(out.values, symbol(xi * xi, 0.0) * f.values, atol=1e-12)


def test_single_mode_with_absorption():
    grid = build_grid(1, 16.0, 64)
    xi = np.pi * 3 / 16.0  # inside the sphere: negative symbol
    f = RealField(grid, np.sin(xi * grid.coordinate_axis))
    out = real_resolvent(f, ResolventSpec(s=1.0, delta=0.3))
    factor = symbol(xi * xi, 0.3)
    assert factor < 0
    assert np.allclose(out.values, factor * f.values, atol=1e-12)


def test_fractional_order_enters_through_mu():
    grid = build_grid(1, 16.0, 64)
    xi = np.pi * 8 / 16.0
    f = RealField(grid, np.cos(xi * grid.coordinate_axis))
    s = 0.8
    out = real_resolvent(f, ResolventSpec(s=s, delta=0.1))
    assert np.allclose(out.values, symbol(xi ** (2 * s), 0.1) * f.values, atol=1e-12)


def test_principal_value_requires_off_sphere_grid():
    # with L = 4*pi the wavenumber xi = 1 is exactly on the grid
    grid = build_grid(1, 4.0 * np.pi, 32)
    assert np.any(np.abs(grid.frequency_norm - 1.0) < 1e-14)
    with pytest.raises(SingularModeError):
        ResolventSpec(s=1.0, delta=0.0).symbol_values(grid)


def test_on_sphere_mode_is_annihilated_with_absorption():
    grid = build_grid(1, 4.0 * np.pi, 32)
    f = RealField(grid, np.cos(grid.coordinate_axis))  # xi = 1, mu = 1
    out = real_resolvent(f, ResolventSpec(s=1.0, delta=0.1))
    assert np.max(np.abs(out.values)) <= 1e-12


def test_symbol_sign_and_bound():
    grid = build_grid(2, 16.0, 64)
    delta = 0.2
    values = ResolventSpec(s=1.0, delta=delta).symbol_values(grid)
    mu = grid.frequency_norm**2
    assert np.all(values[mu < 1.0] < 0.0)
    assert np.all(values[mu > 1.0] > 0.0)
    assert np.max(np.abs(values)) <= 1.0 / (2.0 * delta) * (1.0 + 1e-12)


def test_absorption_converges_at_second_order():
    # for a fixed off-sphere mode the output differs from the delta = 0
    # limit by O(delta^2): successive difference ratios approach 1/4
    grid = build_grid(1, 16.0, 64)
    xi = np.pi * 10 / 16.0
    f = RealField(grid, np.cos(xi * grid.coordinate_axis))
    norm2 = inner_product(f, f)

    def amplitude(delta):
        out = real_resolvent(f, ResolventSpec(s=1.0, delta=delta))
        return inner_product(out, f) / norm2

    deltas = [0.4, 0.2, 0.1, 0.05]
    amps = [amplitude(d) for d in deltas]
    diffs = [a - b for a, b in zip(amps, amps[1:])]
    for d1, d2 in zip(diffs, diffs[1:]):
        assert d2 / d1 == pytest.approx(0.25, rel=0.2)


def test_resolvent_is_self_adjoint():
    grid = build_grid(2, 16.0, 32)
    spec = ResolventSpec(s=1.0, delta=auto_delta(grid, 1.0))
    gen = np.random.default_rng(42)
    for _ in range(20):
        u = RealField(grid, gen.standard_normal(grid.shape))
        v = RealField(grid, gen.standard_normal(grid.shape))
        lhs = inner_product(u, real_resolvent(v, spec))
        rhs = inner_product(real_resolvent(u, spec), v)
        assert abs(lhs - rhs) <= 1e-10 * lq_norm(u, 2) * lq_norm(v, 2)


def test_resolvent_linearity():
    grid = build_grid(2, 16.0, 32)
    spec = ResolventSpec(s=1.0, delta=0.2)
    gen = np.random.default_rng(7)
    f = RealField(grid, gen.standard_normal(grid.shape))
    g = RealField(grid, gen.standard_normal(grid.shape))
    lhs = real_resolvent(2.0 * f - 3.0 * g, spec)
    rhs = 2.0 * real_resolvent(f, spec) - 3.0 * real_resolvent(g, spec)
    assert np.max(np.abs(lhs.values - rhs.values)) <= 1e-12 * np.max(np.abs(lhs.values))


def test_spec_validation():
    with pytest.raises(ValueError):
        ResolventSpec(s=0.0, delta=0.1)
    with pytest.raises(ValueError):
        ResolventSpec(s=1.0, delta=-0.1)


def test_auto_delta_frozen_values():
    # four times the median gap of |xi|^(2s) values near the unit sphere
    assert auto_delta(build_grid(2, 16.0, 128), 1.0) == pytest.approx(0.30842513753404255, rel=1e-12)
    assert auto_delta(build_grid(3, 32.0, 64), 1.0) == pytest.approx(0.038553142191755096, rel=1e-12)


def test_auto_delta_shrinks_with_box_size():
    # wavenumber spacing on the torus is pi/L: only a bigger box refines
    # the sphere neighborhood, adding points does not
    small = auto_delta(build_grid(2, 16.0, 128), 1.0)
    large = auto_delta(build_grid(2, 32.0, 128), 1.0)
    assert large < small
    assert auto_delta(build_grid(2, 16.0, 64), 1.0) == pytest.approx(small, rel=1e-12)


# ---------------------------------------------------------------- kernel


def test_kernel_requires_absorption():
    grid = build_grid(1, 16.0, 64)
    with pytest.raises(ValueError):
        extract_kernel(ResolventSpec(s=1.0, delta=0.0), grid)


def test_kernel_is_even():
    grid = build_grid(2, 16.0, 32)
    k = extract_kernel(ResolventSpec(s=1.0, delta=0.2), grid).values
    # x -> -x is a flip plus a one-cell roll (the -L node has no mirror)
    mirrored = k
    for axis in range(2):
        mirrored = np.roll(np.flip(mirrored, axis=axis), 1, axis=axis)
    assert np.allclose(k, mirrored, atol=1e-12 * np.max(np.abs(k)))


def test_kernel_reproduces_resolvent_by_convolution():
    grid = build_grid(1, 16.0, 32)
    spec = ResolventSpec(s=1.0, delta=0.3)
    kernel = extract_kernel(spec, grid).values
    f = np.random.default_rng(3).standard_normal(32)
    direct = real_resolvent(RealField(grid, f), spec).values
    n = 32
    origin = n // 2
    conv = np.zeros(n)
    for i in range(n):
        # quadrature circular convolution against the kernel
        conv[i] = grid.spacing * sum(
            kernel[(origin + i - j) % n] * f[j] for j in range(n)
        )
    assert np.allclose(direct, conv, atol=1e-10 * np.max(np.abs(direct)))


def test_unit_symbol_kernel_is_discrete_delta():
    class UnitSymbol(ResolventSpec):
        def symbol_values(self, grid):
            return np.ones(grid.shape)

    grid = build_grid(2, 16.0, 16)
    kernel = extract_kernel(UnitSymbol(s=1.0, delta=0.1), grid)
    expected = np.zeros(grid.shape)
    expected[grid.origin_index] = 1.0 / grid.cell_volume
    assert np.allclose(kernel.values, expected, atol=1e-10)


# ---------------------------------------------------------------- band split


def test_smoothstep_endpoints_and_monotonicity():
    t = np.linspace(-0.5, 1.5, 201)
    y = exp_smoothstep(t)
    assert np.all(y[t <= 0.0] == 1.0)
    assert np.all(y[t >= 1.0] == 0.0)
    assert exp_smoothstep(np.array([0.5]))[0] == pytest.approx(0.5)
    assert np.all(np.diff(y) <= 1e-15)


def test_band_cutoff_plateau_and_support():
    cut = BandCutoff()
    r = np.array([0.9, 1.0, 1.1, 1.3, 0.7, 2.0])
    vals = cut.values(r)
    assert vals[0] == 1.0 and vals[1] == 1.0 and vals[2] == 1.0  # inside plateau 1/6
    assert vals[3] == 0.0 and vals[4] == 0.0 and vals[5] == 0.0  # beyond support 1/4
    with pytest.raises(ValueError):
        BandCutoff(plateau_halfwidth=0.3, support_halfwidth=0.2)


def test_band_split_adds_back_to_kernel():
    grid = build_grid(2, 16.0, 32)
    bundle = band_decompose(extract_kernel(ResolventSpec(s=1.0, delta=0.2), grid))
    total = bundle.band.values + bundle.remainder.values
    assert np.allclose(total, bundle.kernel.values, atol=1e-13 * np.max(np.abs(bundle.kernel.values)))
    # short aliases point at the same parts
    assert bundle.K is bundle.kernel
    assert bundle.K1 is bundle.band
    assert bundle.K2 is bundle.remainder


def test_band_part_is_spectrally_confined():
    grid = build_grid(2, 16.0, 32)
    bundle = band_decompose(extract_kernel(ResolventSpec(s=1.0, delta=0.2), grid))
    spectrum = forward_transform(bundle.band).coeffs
    full = forward_transform(bundle.kernel).coeffs
    off_band = np.abs(grid.frequency_norm - 1.0) >= 0.25
    plateau = np.abs(grid.frequency_norm - 1.0) <= 1.0 / 6.0
    scale = np.max(np.abs(full))
    assert np.max(np.abs(spectrum[off_band])) <= 1e-13 * scale
    assert np.allclose(spectrum[plateau], full[plateau], atol=1e-12 * scale)


def test_band_split_with_trivial_profile():
    grid = build_grid(1, 16.0, 64)
    kernel = extract_kernel(ResolventSpec(s=1.0, delta=0.2), grid)
    bundle = band_decompose(kernel, BandCutoff(profile=lambda r: np.ones_like(r)))
    assert np.allclose(bundle.band.values, kernel.values, atol=1e-13)
    assert np.max(np.abs(bundle.remainder.values)) <= 1e-13 * np.max(np.abs(kernel.values))


# ---------------------------------------------------------------- envelopes


def test_radial_envelope_constant_field():
    grid = build_grid(2, 16.0, 64)
    env = radial_envelope(RealField(grid, np.ones(grid.shape)), 8)
    centers = [c for c, _ in env]
    assert centers == pytest.approx([(i + 0.5) * 2.0 for i in range(8)])
    assert all(v == 1.0 for _, v in env)


def test_radial_envelope_ignores_origin_node():
    grid = build_grid(2, 16.0, 64)
    values = np.zeros(grid.shape)
    values[grid.origin_index] = 7.0
    env = radial_envelope(RealField(grid, values), 8)
    assert all(v == 0.0 for _, v in env)


def test_radial_envelope_shell_count_floor():
    grid = build_grid(2, 16.0, 16)
    with pytest.raises(ValueError):
        radial_envelope(RealField.zeros(grid), 3)


def test_fit_recovers_exact_power_law():
    envelope = [(r, 5.0 * r**-2.0) for r in np.linspace(1.0, 20.0, 15)]
    assert fit_decay_exponent(envelope, (1.0, 20.0)) == pytest.approx(-2.0, abs=1e-12)
    envelope = [(r, 0.3 * r**-0.5) for r in np.linspace(2.0, 30.0, 12)]
    assert fit_decay_exponent(envelope, (2.0, 30.0)) == pytest.approx(-0.5, abs=1e-12)


def test_fit_uses_only_window_points():
    inside = [(r, r**-3.0) for r in np.linspace(4.0, 10.0, 8)]
    outside = [(0.5, 99.0), (40.0, 99.0)]
    assert fit_decay_exponent(inside + outside, (4.0, 10.0)) == pytest.approx(-3.0, abs=1e-12)


def test_fit_requires_five_positive_points():
    envelope = [(1.0, 1.0), (2.0, 0.5), (3.0, 0.0), (4.0, 0.25), (5.0, 0.0)]
    with pytest.raises(InsufficientDataError):
        fit_decay_exponent(envelope, (1.0, 5.0))
    with pytest.raises(ValueError):
        fit_decay_exponent(envelope, (5.0, 1.0))


def test_grid_sampled_power_law_fit():
    grid = build_grid(2, 16.0, 128)
    r = grid.radius
    values = np.zeros(grid.shape)
    np.divide(1.0, (1.0 + r) ** 2, out=values)
    env = radial_envelope(RealField(grid, values), 16)
    slope = fit_decay_exponent(env, (4.0, 16.0))
    # (1+r)^-2 is not exactly r^-2 at these radii; stay loose
    assert slope == pytest.approx(-2.0, abs=0.15)


# ---------------------------------------------------------------- disjoint supports


def test_compact_bump_support_is_exact():
    grid = build_grid(2, 32.0, 64)
    bump = compact_bump(grid, (0.0, 0.0), 2.0)
    outside = grid.radius >= 2.0
    assert np.all(bump.values[outside] == 0.0)
    assert bump.values[grid.origin_index] == pytest.approx(np.exp(-1.0))
    with pytest.raises(ValueError):
        compact_bump(grid, (0.0, 0.0), 0.0)


def test_disjoint_interaction_matches_direct_pairing():
    grid = build_grid(2, 32.0, 64)
    spec = ResolventSpec(s=1.0, delta=0.1)
    u = compact_bump(grid, (0.0, 0.0), 2.0)
    v = compact_bump(grid, (8.0, 0.0), 2.0)
    got = disjoint_interaction(u, v, spec, inner_radius=2.0, gap=4.0)
    want = abs(inner_product(u, real_resolvent(v, spec)))
    assert got == pytest.approx(want, rel=1e-14)
    assert got > 0.0


def test_disjoint_interaction_rejects_overlap():
    grid = build_grid(2, 32.0, 64)
    spec = ResolventSpec(s=1.0, delta=0.1)
    u = compact_bump(grid, (0.0, 0.0), 2.0)
    near = compact_bump(grid, (3.0, 0.0), 2.0)  # leaks inside radius 2 + gap
    with pytest.raises(SupportOverlapError):
        disjoint_interaction(u, near, spec, inner_radius=2.0, gap=4.0)
    wide = compact_bump(grid, (0.0, 0.0), 5.0)  # u escapes its own ball
    far = compact_bump(grid, (12.0, 0.0), 2.0)
    with pytest.raises(SupportOverlapError):
        disjoint_interaction(wide, far, spec, inner_radius=2.0, gap=4.0)


def test_disjoint_interaction_gap_floor():
    grid = build_grid(2, 32.0, 64)
    u = compact_bump(grid, (0.0, 0.0), 2.0)
    v = compact_bump(grid, (8.0, 0.0), 2.0)
    with pytest.raises(ValueError):
        disjoint_interaction(u, v, ResolventSpec(s=1.0, delta=0.1), inner_radius=2.0, gap=0.5)
