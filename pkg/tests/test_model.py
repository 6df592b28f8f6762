import numpy as np
import pytest

from slidedict.model import dump_model, load_model, parse_model, save_model
from slidedict.scoring import classify_offline


def test_round_trip_bytes_and_content(tmp_path, small_model):
    path = tmp_path / "m.sldm"
    save_model(small_model, path)
    again = load_model(path, online_lengths=small_model.spec.online_lengths)
    assert dump_model(again) == path.read_bytes()
    np.testing.assert_array_equal(again.dictionary.atoms, small_model.dictionary.atoms)
    assert again.classes == small_model.classes
    assert again.spec == small_model.spec and again.lam == small_model.lam
    assert [s.name for s in again.train] == [s.name for s in small_model.train]


def test_reloaded_model_classifies_identically(small_data, small_model):
    again = parse_model(dump_model(small_model), online_lengths=small_model.spec.online_lengths)
    for seq in small_data[1][:3]:
        a = classify_offline(seq, small_model)
        b = classify_offline(seq, again)
        assert a[0] == b[0]
        np.testing.assert_array_equal(a[1].as_array(), b[1].as_array())


def test_corrupt_containers(small_model):
    data = dump_model(small_model)
    with pytest.raises(ValueError, match="version"):
        parse_model(b"\x07" + data[1:])
    with pytest.raises(ValueError, match="magic"):
        parse_model(data[:1] + b"XXXX" + data[5:])
    with pytest.raises(ValueError, match="truncated"):
        parse_model(data[:-5])
    with pytest.raises(ValueError, match="trailing"):
        parse_model(data + b"\0")
