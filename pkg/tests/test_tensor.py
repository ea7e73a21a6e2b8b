from __future__ import annotations

import json

import numpy as np
import pytest

from hermflow.errors import ValidationError
from hermflow.grid import GridSpec, interaction_tensor
from hermflow.solenoidal import composite_basis, fixture_basis

EPS = np.zeros((3, 3, 3))
for (i, j, k), s in {
    (0, 1, 2): 1,
    (1, 2, 0): 1,
    (2, 0, 1): 1,
    (0, 2, 1): -1,
    (2, 1, 0): -1,
    (1, 0, 2): -1,
}.items():
    EPS[i, j, k] = s


@pytest.fixture(scope="module")
def tensor_k1():
    cb = composite_basis(1, 1)
    return interaction_tensor(cb, cb, cb, GridSpec(8.0, 64), refine=False)


def _closed_form():
    # constant block couples to nothing; the rotation block closes on
    # itself with structure constants eps/2
    want = np.zeros((4, 4, 4))
    want[1:, 1:, 1:] = 0.5 * EPS
    return want


def test_k1_tensor_matches_epsilon_closed_form(tensor_k1):
    assert tensor_k1.labels_a == [(0, 0), (1, 0), (1, 1), (1, 2)]
    assert tensor_k1.labels_a == tensor_k1.labels_g == tensor_k1.labels_b
    assert np.max(np.abs(tensor_k1.values - _closed_form())) <= 1e-5
    assert tensor_k1.entry(1, 2, 3) == pytest.approx(0.5, abs=1e-5)
    assert tensor_k1.entry(2, 1, 3) == pytest.approx(-0.5, abs=1e-5)


def test_rotation_self_interaction_vanishes(tensor_k1):
    self_max = max(
        float(np.max(np.abs(tensor_k1.values[a, a, :]))) for a in (1, 2, 3)
    )
    assert self_max <= 1e-8


def test_unrefined_tensor_reports_no_error(tensor_k1):
    assert tensor_k1.refined == {}
    assert tensor_k1.max_error() == 0.0
    assert tensor_k1.flagged() == []


def test_refinement_doubles_box_and_flags_nothing_at_k1():
    cb = composite_basis(1, 1)
    T = interaction_tensor(cb, cb, cb, GridSpec(6.0, 24), refine=True)
    assert T.refined == {"L": 12.0, "n": 48}
    assert T.flagged(1e-3) == []
    # the doubled box removes the periodization bias almost completely
    assert np.max(np.abs(T.values - _closed_form())) <= 1e-12
    assert T.max_error() <= 2e-3


def test_worker_count_does_not_change_values():
    cb = composite_basis(1, 1)
    spec = GridSpec(6.0, 24)
    a = interaction_tensor(cb, cb, cb, spec, refine=False, workers=1)
    b = interaction_tensor(cb, cb, cb, spec, refine=False, workers=3)
    assert np.array_equal(a.values, b.values)


def test_mismatched_operator_parameters_raise():
    cb1 = composite_basis(1, 1)
    b2 = fixture_basis(2, 1)
    with pytest.raises(ValidationError):
        interaction_tensor(cb1, cb1, b2, GridSpec(6.0, 24), refine=False)


def test_json_artifact_roundtrip(tmp_path, tensor_k1):
    from hermflow.cli import _load_tensor

    path = tmp_path / "tensor.json"
    path.write_text(json.dumps(tensor_k1.to_json_dict()))
    back = _load_tensor(str(path))
    assert back.labels_a == tensor_k1.labels_a
    assert back.labels_b == tensor_k1.labels_b
    assert np.array_equal(back.values, tensor_k1.values)
    assert back.spec == tensor_k1.spec
    with pytest.raises(ValidationError):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        _load_tensor(str(bad))
