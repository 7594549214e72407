import json

import numpy as np
import pytest

from multitgdr.controllers.meta import fit_meta_path, pool_coefficients
from multitgdr.controllers.solver import fit_path
from multitgdr.errors import IncompatibleModelError, ParseError, SchemaVersionError
from multitgdr.utils.model_store import (
    coefficients_of,
    fit_mode,
    load_model,
    pooled_of,
    predictive_coefficients,
    save_model,
    to_model_file,
)


@pytest.fixture
def fitted(three_class, quick_config):
    return fit_path(three_class, quick_config).final.coefficients


class TestModelFile:
    def test_modes(self, fitted, three_studies, quick_config, two_class):
        assert fit_mode(fitted) == "multi"
        assert fit_mode(fit_path(two_class, quick_config).final.coefficients) == "tgdr"
        assert fit_mode(fit_meta_path(three_studies, quick_config).final.coefficients) == "meta"

    def test_names_come_from_the_data(self, fitted, three_class, quick_config):
        model = to_model_file(fitted, three_class, quick_config)
        assert model.classes == ["c1", "c2", "c3"]
        assert model.reference_class == "c3"
        assert model.studies == ["pooled"]
        assert model.schema_version == 1

    def test_round_trip_is_byte_identical(self, tmp_path, fitted, three_class, quick_config):
        first = tmp_path / "a.json"
        second = tmp_path / "b.json"
        save_model(str(first), to_model_file(fitted, three_class, quick_config))
        loaded = load_model(str(first))
        save_model(str(second), loaded)
        assert first.read_bytes() == second.read_bytes()

        coefficients = coefficients_of(loaded)
        np.testing.assert_array_equal(coefficients.betas, fitted.betas)
        np.testing.assert_array_equal(coefficients.intercepts, fitted.intercepts)
        np.testing.assert_array_equal(coefficients.standardization.mean, fitted.standardization.mean)

    def test_pooled_round_trip(self, tmp_path, three_studies, quick_config):
        coefficients = fit_meta_path(three_studies, quick_config).final.coefficients
        pooled = pool_coefficients(coefficients, three_studies)
        path = str(tmp_path / "pooled.json")
        save_model(path, to_model_file(coefficients, three_studies, quick_config, pooled=pooled))

        loaded = load_model(path)
        assert loaded.mode == "pooled"
        assert loaded.studies == ["s1", "s2", "s3"]
        np.testing.assert_array_equal(pooled_of(loaded).mu, pooled.mu)
        np.testing.assert_array_equal(predictive_coefficients(loaded).betas[0], pooled.mu)
        assert coefficients_of(loaded).n_studies == 3

    def test_pooled_of_needs_a_pooled_file(self, fitted, three_class, quick_config):
        with pytest.raises(IncompatibleModelError):
            pooled_of(to_model_file(fitted, three_class, quick_config))


class TestLoadErrors:
    def test_schema_mismatch(self, tmp_path, fitted, three_class, quick_config):
        path = tmp_path / "model.json"
        document = json.loads(to_model_file(fitted, three_class, quick_config).model_dump_json())
        document["schema_version"] = 2
        path.write_text(json.dumps(document))
        with pytest.raises(SchemaVersionError):
            load_model(str(path))

    def test_missing_schema_version(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("{}")
        with pytest.raises(SchemaVersionError):
            load_model(str(path))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("{not json")
        with pytest.raises(ParseError):
            load_model(str(path))

    def test_malformed_document(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"schema_version": 1, "mode": "multi"}))
        with pytest.raises(ParseError, match="malformed"):
            load_model(str(path))
