import copy
import json
from pathlib import Path

import pytest

from conftest import EXAMPLE_F
from uniqcert.config import load_config, parse_config
from uniqcert.errors import ConfigError
from uniqcert.expr import parse

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def base(**overrides):
    raw = {
        "schema": 1,
        "domain": {"dimension": 3, "lower": [1, 1, 1], "upper": [2, 2, 2], "nodes": [5, 5, 5]},
        "nonlinearity": {"f": EXAMPLE_F, "u_range": [-50, 50]},
    }
    raw.update(overrides)
    return raw


def errors_of(raw):
    with pytest.raises(ConfigError) as info:
        parse_config(raw)
    return info.value.errors


def test_shipped_example_is_valid():
    cfg = load_config(CONFIGS / "example_paper.json")
    assert cfg.f == parse("(1 - 1/(x^2+y^2+z^2))*(10*u - 1)")
    assert cfg.domain.lower == (1.0, 1.0, 1.0) and cfg.domain.upper == (2.0, 2.0, 2.0)
    assert cfg.b3 == pytest.approx(55 / 6, rel=1e-15)
    assert cfg.growth.asserted
    assert (cfg.probe_starts, cfg.probe_seed, cfg.probe_amplitude) == (10, 42, 50.0)


@pytest.mark.parametrize("name", ["example_paper.json", "example_paper_c40.json", "manufactured_1d.json"])
def test_all_shipped_configs_load(name):
    load_config(CONFIGS / name)


def test_box_containing_origin_is_singular():
    raw = base(domain={"dimension": 3, "lower": [-1, -1, -1], "upper": [1, 1, 1], "nodes": [5, 5, 5]})
    errs = errors_of(raw)
    assert any("singular" in e for e in errs)


def test_box_touching_origin_is_singular():
    raw = base(domain={"dimension": 3, "lower": [0, 0, 0], "upper": [1, 1, 1], "nodes": [4, 4, 4]})
    assert any("singular" in e for e in errors_of(raw))


@pytest.mark.parametrize(
    "f, lower, upper",
    [("u/(x - 0.3)", 0, 1), ("log(x - 0.123456789) + u", 0, 1), ("sqrt(x - 0.7)*u", 0, 1), ("u*(x - 0.31)^-2", 0, 1)],
)
def test_singularity_between_sample_points(f, lower, upper):
    raw = {"schema": 1, "domain": {"dimension": 1, "lower": [lower], "upper": [upper], "nodes": [9]},
           "nonlinearity": {"f": f}}
    assert errors_of(raw)


def test_dimension_mismatch():
    raw = base(domain={"dimension": 2, "lower": [1, 1, 1], "upper": [2, 2], "nodes": [5, 5]})
    errs = errors_of(raw)
    assert any("domain.lower has 3 entries but dimension is 2" in e for e in errs)


def test_all_errors_reported():
    raw = base(schema=2, certificate={"margin": 2}, probe={"starts": 1, "amplitude": -1})
    raw["nonlinearity"]["u_range"] = [5, 5]
    raw["solver"] = {"tol": 3, "bogus": 1}
    errs = errors_of(raw)
    for needle in ("schema", "margin", "probe.starts", "probe.amplitude", "u_range", "bogus"):
        assert any(needle in e for e in errs), needle


@pytest.mark.parametrize(
    "mutate, needle",
    [
        (lambda r: r["nonlinearity"].update(f="t*u"), "unknown identifier"),
        (lambda r: r["nonlinearity"].update(f="u +"), "nonlinearity.f"),
        (lambda r: r.update(rhs="u*x"), "rhs"),
        (lambda r: r["nonlinearity"].update(a1="1"), "together"),
        (lambda r: r["nonlinearity"].update(a1="1", b1="x", route="poincare"), "constant b1"),
        (lambda r: r["nonlinearity"].update(route="magic"), "route"),
        (lambda r: r["nonlinearity"].update(b3="1/0"), "b3"),
        (lambda r: r["nonlinearity"].update(u_samples=1), "u_samples"),
        (lambda r: r["nonlinearity"].update(embedding_sample=[10**6]), "embedding_sample"),
        (lambda r: r.update(study={"levels": [[3, 3]]}), "study.levels"),
        (lambda r: r["domain"].update(nodes=[5, 0, 5]), "nodes"),
    ],
)
def test_specific_errors(mutate, needle):
    raw = base()
    mutate(raw)
    assert any(needle in e for e in errors_of(raw))


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(p)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_digest_tracks_content():
    a = parse_config(base())
    b = parse_config(copy.deepcopy(base()))
    assert a.digest == b.digest and len(a.digest) == 64
    assert a.with_seed(7).digest != a.digest
    assert a.with_seed(7).probe_seed == 7
    assert a.with_domain([3, 3, 3]).domain.counts == (3, 3, 3)


def test_rhs_and_problem_build():
    raw = base(rhs="x + y*z")
    problem = parse_config(raw).build()
    c = problem.domain.coordinates
    assert problem.y.values == pytest.approx(c[:, 0] + c[:, 1] * c[:, 2])
    const = parse_config(base(rhs=2.5)).build()
    assert set(const.y.values) == {2.5}


def test_defaults():
    raw = json.loads(json.dumps(base()))
    cfg = parse_config(raw)
    assert cfg.rhs is None and cfg.margin == 1e-9 and cfg.solver.tol == 1e-10
    assert cfg.embedding_sample is None and cfg.growth.route == "auto"
