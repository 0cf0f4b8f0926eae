import json

import pytest
import yaml

from wormreg.cli import main
from wormreg.config import DEFAULTS, ConfigError, load_config, shipped_config_text


def test_shipped_config_matches_defaults():
    assert yaml.safe_load(shipped_config_text()) == DEFAULTS


def test_overrides_and_digest():
    a = load_config(None, ["worm.phi.M=0.3"])
    b = load_config(None, ["worm.phi.M=0.3"])
    assert a.worm.phi.M == 0.3 and a.digest() == b.digest()
    assert a.digest() != load_config(None).digest()


@pytest.mark.parametrize("bad", ["worm.phi.X=1", "worm=3", "nokey", "worm.delta=abc"])
def test_bad_overrides(bad):
    with pytest.raises(ConfigError):
        load_config(None, [bad])


def test_missing_required_field(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("worm: {r_flat: 0.5, delta: 0.5, phi: {M: 0.5}}\node: {a: 1, r: 1}\n")
    with pytest.raises(ConfigError, match="worm.phi.sigma"):
        load_config(p)


def test_env_var_default(tmp_path, monkeypatch):
    p = tmp_path / "c.json"
    cfg = json.loads(json.dumps(DEFAULTS))
    cfg["worm"]["delta"] = 0.4
    p.write_text(json.dumps(cfg))
    monkeypatch.setenv("WORMREG_CONFIG", str(p))
    assert load_config().worm.delta == 0.4


def test_invalid_geometry_value_is_config_error():
    with pytest.raises(ConfigError):
        load_config(None, ["worm.phi.M=1.5"])


def test_exit_codes(tmp_path):
    out = str(tmp_path / "o")
    assert main(["geometry-check", "--out", out]) == 0
    assert main(["geometry-check", "--out", out, "--set", "worm.phi.M=-0.5"]) == 1
    assert main(["geometry-check", "--out", out, "--set", "worm.nope=1"]) == 2
    assert main(["geometry-check", "--out", out, "--config", str(tmp_path / "missing.yaml")]) == 2
    assert main(["exceptional", "--out", out, "--s-min", "-1"]) == 2
    assert main(["bogus-verb"]) == 2


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    import wormreg.cli as cli
    from wormreg.shooting import ShootingError

    def boom(*a, **k):
        raise ShootingError("step budget exhausted")

    monkeypatch.setattr(cli, "locate_zeros", boom)
    assert main(["spectrum", "--box", "0.5", "2", "-1", "1", "--out", str(tmp_path)]) == 3


def test_outputs_written(tmp_path):
    out = tmp_path / "o"
    assert main(["exceptional", "--s-max", "4", "--out", str(out)]) == 0
    rows = (out / "exceptional.csv").read_text().splitlines()
    assert rows[0] == "s,re_zeta,im_zeta,residual" and len(rows) == 3
    doc = json.loads((out / "exceptional.json").read_text())
    assert doc["strip"]["im_zeta_max"] == 1.0 and len(doc["config_sha256"]) == 64
    assert main(["mellin-selftest", "--out", str(out)]) == 0
    assert (out / "mellin.csv").read_text().startswith("gamma,re,im\n")
