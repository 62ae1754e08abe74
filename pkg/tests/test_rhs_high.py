import numpy as np
import pytest

from esdgpos.scheme import physics
from esdgpos.scheme.mesh import BoundaryTag, uniform_interval, uniform_quad, uniform_tri
from esdgpos.scheme.rhs_high import entropy_rate_high, high_residual, ldg_gradients
from esdgpos.scheme.rhs_low import low_residual
from esdgpos.scheme.sbp import reference_ops
from esdgpos.scheme.settings import SchemeConfig
from esdgpos.scheme.viscous import entropy_rate, viscous_aux


def _constant(mesh, gas):
    shape = (mesh.K, mesh.Np)
    vel = np.stack([np.full(shape, 0.7), np.full(shape, -0.2)][:mesh.dim])
    return physics.prim_to_cons(np.full(shape, 1.3), vel, np.full(shape, 0.8), gas)


def test_free_stream_preservation(periodic_mesh, gas, viscous_gas):
    for g in (gas, viscous_gas):
        u = _constant(periodic_mesh, g)
        res = high_residual(u, 0.0, periodic_mesh, g)
        assert np.abs(res.r).max() < 1e-12


def test_residual_is_conservative(periodic_mesh, gas, make_smooth):
    u = make_smooth(periodic_mesh, gas)
    r = high_residual(u, 0.0, periodic_mesh, gas).r
    assert np.allclose(r.sum(axis=(1, 2)), 0, atol=1e-12)


def _noisy(u, rng):
    # positive rescaling keeps every node admissible but opens interface jumps
    return u * (1 + 0.05 * rng.uniform(-1, 1, size=u.shape[1:]))


def test_entropy_conservative_without_interface_dissipation(periodic_mesh, gas, make_smooth, rng):
    u = _noisy(make_smooth(periodic_mesh, gas, amplitude=0.4), rng)
    er = entropy_rate_high(u, 0.0, periodic_mesh, gas, dissipation=False)
    assert abs(er.rate) <= 1e-10 * er.scale


def test_entropy_stable_with_dissipation(periodic_mesh, gas, make_smooth, rng):
    u = _noisy(make_smooth(periodic_mesh, gas, amplitude=0.4), rng)
    er = entropy_rate_high(u, 0.0, periodic_mesh, gas)
    assert er.excess <= 1e-10 * er.scale
    assert er.rate < 0


def test_viscous_entropy_rate_bounded_by_dissipation(periodic_mesh, viscous_gas, make_smooth, rng):
    u = _noisy(make_smooth(periodic_mesh, viscous_gas, amplitude=0.4), rng)
    er = entropy_rate_high(u, 0.0, periodic_mesh, viscous_gas)
    assert er.dissipation > 0
    assert er.excess <= 1e-10 * er.scale


def _blend_rates(mesh, gas, u):
    config = SchemeConfig(limiter='elementwise')
    aux = viscous_aux(u, 0.0, mesh, gas)
    rL = low_residual(u, 0.0, mesh, gas, aux=aux, config=config).r
    rH = high_residual(u, 0.0, mesh, gas, aux=aux, config=config).r
    return [entropy_rate((1 - l) * rL + l * rH, aux, mesh) for l in (0.0, 0.5, 1.0)]


def test_elementwise_blend_is_entropy_stable(periodic_mesh, gas, make_smooth, rng):
    u = _noisy(make_smooth(periodic_mesh, gas, amplitude=0.4), rng)
    for er in _blend_rates(periodic_mesh, gas, u):
        assert er.excess <= 1e-10 * er.scale


def test_viscous_elementwise_blend_is_entropy_stable(periodic_quad, viscous_gas, make_smooth, rng):
    u = _noisy(make_smooth(periodic_quad, viscous_gas, amplitude=0.4), rng)
    for er in _blend_rates(periodic_quad, viscous_gas, u):
        assert er.dissipation > 0
        assert er.excess <= 1e-10 * er.scale


@pytest.mark.parametrize('elem,N', [('interval', 3), ('quad', 3), ('tri', 3)])
def test_ldg_gradients_exact_for_polynomials(elem, N):
    ops = reference_ops(elem, N)
    if elem == 'interval':
        mesh = uniform_interval(3, 0.0, 1.5, ops, bc={'left': BoundaryTag.outflow(), 'right': BoundaryTag.outflow()})
    else:
        bc = {side: BoundaryTag.outflow() for side in ('left', 'right', 'bottom', 'top')}
        build = uniform_quad if elem == 'quad' else uniform_tri
        mesh = build(2, 2, ((0.0, 1.0), (0.0, 2.0)), ops, bc=bc)
    x = mesh.x
    v = np.stack([x[0] ** 2, 1.0 + x[-1], x[0] * x[-1]])
    theta = ldg_gradients(v, mesh.face_values(v), mesh)
    assert np.allclose(theta[0, 0], 2 * x[0], atol=1e-10)
    assert np.allclose(theta[-1, 1], 1.0, atol=1e-10)
    if mesh.dim == 2:
        assert np.allclose(theta[0, 2], x[1], atol=1e-10)
        assert np.allclose(theta[1, 2], x[0], atol=1e-10)
        assert np.allclose(theta[1, 0], 0, atol=1e-10)


def test_convex_mode_shares_the_low_order_interface_flux(periodic_quad, gas, make_smooth):
    u = make_smooth(periodic_quad, gas)
    config = SchemeConfig(limiter='convex')
    aux = viscous_aux(u, 0.0, periodic_quad, gas)
    high = high_residual(u, 0.0, periodic_quad, gas, aux=aux, config=config, pairs='union', keep_pairs=True)
    low = low_residual(u, 0.0, periodic_quad, gas, aux=aux, config=config, pairs='union', keep_pairs=True)
    scatter = periodic_quad.pair_scatter('union')
    diff = (low.pair_flux - high.pair_flux) @ scatter
    assert np.allclose(low.r - high.r, diff, atol=1e-12)


def test_pair_flux_reassembles_volume_term(periodic_interval, gas, make_smooth):
    u = make_smooth(periodic_interval, gas)
    res = high_residual(u, 0.0, periodic_interval, gas, keep_pairs=True)
    aux = viscous_aux(u, 0.0, periodic_interval, gas)
    scatter = periodic_interval.pair_scatter('high')
    face = res.r - res.pair_flux @ scatter
    # interface contributions live on face nodes only
    interior = np.setdiff1d(np.arange(periodic_interval.Np), periodic_interval.refops.face_node)
    assert np.allclose(face[:, :, interior], 0, atol=1e-12)
    assert aux.uM.shape == (3, periodic_interval.K, 2)


def test_chunking_does_not_change_the_residual(periodic_tri, gas, make_smooth):
    u = make_smooth(periodic_tri, gas)
    full = high_residual(u, 0.0, periodic_tri, gas, config=SchemeConfig(chunk_size=4096)).r
    chunked = high_residual(u, 0.0, periodic_tri, gas, config=SchemeConfig(chunk_size=1)).r
    assert np.allclose(full, chunked, atol=1e-13)


def test_wall_riemann_flux_at_rest_is_pressure(gas):
    ops = reference_ops('interval', 2)
    bc = {'left': BoundaryTag.wall(), 'right': BoundaryTag.wall()}
    mesh = uniform_interval(3, 0.0, 1.0, ops, bc=bc)
    u = _constant(mesh, gas)
    u[1] = 0.0
    for wall_riemann in (False, True):
        res = high_residual(u, 0.0, mesh, gas, config=SchemeConfig(wall_riemann=wall_riemann))
        assert np.abs(res.r).max() < 1e-12
