import numpy as np
import pytest

from conftest import toy_model
from survmix.serialize import (load_model, model_from_dict, model_to_dict,
                               save_model)


def test_round_trip_preserves_model(tmp_path):
    m = toy_model(K=2, M=2, layer_sizes=(3,), scale=0.5, seed=0)
    p = tmp_path / "m.json"
    save_model(m, p)
    back = load_model(p)
    assert np.array_equal(back.params.to_vector(), m.params.to_vector())
    assert back.config == m.config
    for k in range(2):
        assert np.array_equal(back.baselines.knots[k], m.baselines.knots[k])
        assert np.array_equal(back.baselines.values[k], m.baselines.values[k])
    assert np.array_equal(back.standardization.mean, m.standardization.mean)


def test_serialization_byte_deterministic(tmp_path):
    m = toy_model(K=2, M=2, scale=0.5, seed=1)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_model(m, a)
    save_model(m, b)
    assert a.read_bytes() == b.read_bytes()


def test_rejects_wrong_format_and_version():
    m = toy_model()
    doc = model_to_dict(m)
    bad = dict(doc, format="something-else")
    with pytest.raises(ValueError, match="not a"):
        model_from_dict(bad)
    bad = dict(doc, version=99)
    with pytest.raises(ValueError, match="version"):
        model_from_dict(bad)
