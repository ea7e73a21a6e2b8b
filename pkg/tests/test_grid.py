from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from hermflow.errors import ValidationError
from hermflow.grid import (
    GridSpec,
    GridVectorField,
    convection,
    convection_poly,
    dump_grid,
    load_grid,
    pair_fields,
    project,
    sample,
    spectral_divergence,
    synth_duals,
    synth_weighted,
    to_grid,
    to_spectral,
)
from hermflow.kernel import gaussian_kernel, kernel_values
from hermflow.moments import moment_of_poly
from hermflow.polynomial import Polynomial, VectorPolyField
from hermflow.solenoidal import DualFrame, fixture_basis

SPEC = GridSpec(10.0, 48)


@pytest.fixture(scope="module")
def basis_l2():
    return fixture_basis(1, 2)


def test_grid_spec_validation_and_geometry():
    with pytest.raises(ValidationError):
        GridSpec(8.0, 33)
    with pytest.raises(ValidationError):
        GridSpec(8.0, 8)
    with pytest.raises(ValidationError):
        GridSpec(0.0, 32)
    with pytest.raises(ValidationError):
        GridSpec(float("inf"), 32)
    spec = GridSpec(8.0, 32)
    ax = spec.axes()
    assert spec.h == 0.5
    # cell-centered: first node at -L + h/2, symmetric about 0
    assert ax[0] == -8.0 + 0.25 and ax[-1] == 8.0 - 0.25
    assert np.allclose(np.diff(ax), spec.h)
    assert np.max(np.abs(ax + ax[::-1])) == 0.0
    assert spec.to_json_dict() == {"L": 8.0, "n": 32, "dealias": True}


def test_spectral_roundtrip_is_identity():
    rng = np.random.default_rng(0)
    f = rng.standard_normal((SPEC.n,) * 3)
    back = to_grid(SPEC, to_spectral(SPEC, f)).real
    assert np.max(np.abs(back - f)) <= 1e-13


def test_sample_agrees_with_spectral_synthesis_m1(basis_l2):
    v = basis_l2.fields[3]
    a = sample(v, "kernel-F", SPEC)
    b = synth_weighted(v, SPEC, 1)
    assert np.max(np.abs(a.data - b.data)) <= 1e-11


def test_sample_with_table_m2():
    tab = kernel_values(2, radii=np.arange(0.0, 36.0 + 1e-9, 0.02))
    w = fixture_basis(2, 2).fields[0]
    a = sample(w, "kernel-F", SPEC, table=tab, m=2)
    b = synth_weighted(w, SPEC, 2)
    # gap is periodization of the stretched-exponential tail, not roundoff
    assert np.max(np.abs(a.data - b.data)) <= 2e-3
    short = kernel_values(2, radii=np.arange(0.0, 8.0 + 1e-9, 0.05))
    with pytest.raises(ValidationError):
        sample(w, "kernel-F", SPEC, table=short, m=2)
    with pytest.raises(ValidationError):
        sample(w, "kernel-F", SPEC, m=2)
    with pytest.raises(ValidationError):
        sample(w, "turbulent", SPEC)


def test_projector_idempotent_and_divergence_free(basis_l2):
    u = synth_weighted(basis_l2.fields[3], SPEC, 1)
    pu = project(u)
    ppu = project(pu)
    assert np.max(np.abs(ppu.data - pu.data)) / np.max(np.abs(pu.data)) <= 1e-13
    dv = spectral_divergence(pu)
    assert np.sqrt(SPEC.h**3 * np.sum(dv**2)) / pu.norm() <= 1e-13


def test_projector_annihilates_gradients():
    # grad(p F) = (grad p - p y / 2) F for the Gaussian kernel
    p = Polynomial.monomial((1, 1, 0))
    comps = []
    for i in range(3):
        e = [0, 0, 0]
        e[i] = 1
        yi = Polynomial.monomial(tuple(e))
        comps.append(p.derive(tuple(e)) - (yi * p).scale(Fraction(1, 2)))
    g = synth_weighted(VectorPolyField(comps), SPEC, 1)
    assert project(g).norm() / g.norm() <= 1e-13


def test_projector_self_adjoint_on_lattice():
    rng = np.random.default_rng(1)
    a = GridVectorField(SPEC, rng.standard_normal((3,) + (SPEC.n,) * 3))
    b = GridVectorField(SPEC, rng.standard_normal((3,) + (SPEC.n,) * 3))
    lhs = pair_fields(project(a), b)
    rhs = pair_fields(a, project(b))
    assert abs(lhs - rhs) / (a.norm() * b.norm()) <= 1e-14


def test_pair_fields_matches_exact_moments(basis_l2):
    v = basis_l2.fields[3]
    got = pair_fields(synth_weighted(v, SPEC, 1), sample(v, "none", SPEC))
    want = float(sum(moment_of_poly(vc * vc, 1) for vc in v.components))
    assert want == 8.0
    assert abs(got - want) / abs(want) <= 1e-8
    with pytest.raises(ValidationError):
        pair_fields(
            GridVectorField(SPEC, np.zeros((3,) + (SPEC.n,) * 3)),
            GridVectorField(GridSpec(10.0, 32), np.zeros((3, 32, 32, 32))),
        )


def test_convection_poly_rotation_closed_form():
    R = VectorPolyField(
        [
            Polynomial.zero(3),
            Polynomial.monomial((0, 0, 1), Fraction(-1)),
            Polynomial.monomial((0, 1, 0)),
        ]
    )
    c = convection_poly(R)
    assert c.components[0].is_zero()
    assert c.components[1].terms == {(0, 1, 0): Fraction(-1)}
    assert c.components[2].terms == {(0, 0, 1): Fraction(-1)}
    # symbolic path: polynomial-sourced unweighted samples differentiate exactly
    got = convection(sample(R, "none", SPEC))
    want = sample(c, "none", SPEC)
    assert np.array_equal(got.data, want.data)


def test_convection_pseudo_spectral_matches_closed_form(basis_l2):
    # (vF . grad)(vF) = F^2 [ (v.grad)v - (v.y) v / 2 ] for the Gaussian kernel
    v = basis_l2.fields[3]
    u = synth_weighted(v, SPEC, 1)
    u = GridVectorField(SPEC, u.data, poly=None, weight="kernel-F")
    got = convection(u)
    conv = convection_poly(v)
    ydot = Polynomial.zero(3)
    for i in range(3):
        e = [0, 0, 0]
        e[i] = 1
        ydot = ydot + Polynomial.monomial(tuple(e)) * v.components[i]
    q = VectorPolyField(
        [
            conv.components[i] - (ydot * v.components[i]).scale(Fraction(1, 2))
            for i in range(3)
        ]
    )
    ax = SPEC.axes()
    rsq = (
        (ax**2)[:, None, None] + (ax**2)[None, :, None] + (ax**2)[None, None, :]
    )
    want = sample(q, "none", SPEC).data * gaussian_kernel(np.sqrt(rsq)) ** 2
    assert np.max(np.abs(got.data - want)) <= 1e-11


def test_synth_duals_pair_to_gram_rows():
    basis = fixture_basis(1, 1)
    frame = DualFrame(basis)
    duals = synth_duals(frame, SPEC)
    for j, W in enumerate(duals):
        for i in range(basis.count):
            got = pair_fields(sample(basis.fields[i], "none", SPEC), W)
            assert abs(got - float(basis.gram[j][i])) <= 1e-8


def test_grid_field_shape_validation():
    with pytest.raises(ValidationError):
        GridVectorField(SPEC, np.zeros((3, 4, 4, 4)))


def test_dump_load_roundtrip(tmp_path, basis_l2):
    u = synth_weighted(basis_l2.fields[0], GridSpec(8.0, 16), 1)
    base = str(tmp_path / "field")
    dump_grid(u, base)
    back = load_grid(base)
    assert back.spec == u.spec
    assert back.weight == "kernel-F"
    assert np.array_equal(back.data, u.data)
