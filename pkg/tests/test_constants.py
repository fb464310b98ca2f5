import json

import pytest

from decaylab import constants


def test_frozen_file_layout():
    doc = constants.load()
    assert doc["version"] == constants.version()
    assert doc["seed"] == constants.SEED
    assert doc["slack"] == constants.SLACK
    assert set(doc["grids"]) >= {"leibniz", "oscillatory", "solver"}
    for name, entry in doc["constants"].items():
        assert entry["value"] > 0, name


def test_within_uses_slack():
    v = constants.get("e_sin_max_ratio")
    assert constants.within("e_sin_max_ratio", v * 1.09)
    assert not constants.within("e_sin_max_ratio", v * 1.11)
    with pytest.raises(KeyError):
        constants.get("no_such_constant")


@pytest.mark.parametrize("measure", [constants._e_sin, constants._kernel, constants._duhamel])
def test_measurements_reproduce_frozen_values(measure):
    for name, value in measure().items():
        assert value == pytest.approx(constants.get(name), rel=1e-12), name


def test_regenerate_writes_elsewhere(tmp_path, monkeypatch):
    monkeypatch.setattr(constants, "MEASUREMENTS", (constants._e_sin,))
    target = tmp_path / "c.json"
    doc = constants.regenerate(target, version_tag="test")
    on_disk = json.loads(target.read_text())
    assert on_disk == json.loads(json.dumps(doc))
    assert set(on_disk["constants"]) == {"e_sin_max_ratio"}
    # the packaged file is untouched
    assert constants.version() != "test"
