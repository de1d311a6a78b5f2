import json
import os
import tempfile
import unittest

import numpy as np
from scipy.optimize import least_squares

from hanzo.srmrtools.config import NORMALIZED, ORIGINAL
from hanzo.srmrtools.errors import (
    DimensionMismatchError,
    InvalidTargetError,
    ModelFormatError,
    SingularDesignError,
)
from hanzo.srmrtools.mapping import (
    DRR,
    GLM_LOG,
    LINEAR,
    RT60,
    MappingModel,
    fit_glm_log,
    fit_linear,
    fit_mapping,
    kind_for_target,
    load_model,
    predict,
    save_model,
)
from hanzo.srmrtools.metrics import NSRMR, OSRMR, SRMR_K_VECTOR, SrmrFeatures


class GlmTest(unittest.TestCase):
    def test_exact_exponential_is_recovered(self):
        x = np.linspace(1.0, 5.0, 20)
        y = np.exp(0.3 - 0.4 * x)
        model = fit_glm_log(x, y)
        self.assertEqual(model.kind, GLM_LOG)
        np.testing.assert_allclose(model.coefficients, [0.3, -0.4], atol=1e-6)

    def test_noisy_fit_matches_direct_minimisation(self):
        rng = np.random.default_rng(40)
        x = rng.uniform(1.0, 8.0, size=(60, 2))
        y = np.exp(0.5 - 0.2 * x[:, 0] + 0.05 * x[:, 1]) + rng.normal(0, 0.03, 60)
        y = np.abs(y) + 1e-3
        model = fit_glm_log(x, y)
        design = np.hstack([np.ones((60, 1)), x])
        ref = least_squares(
            lambda b: y - np.exp(design @ b),
            np.zeros(3),
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
        )
        self.assertLessEqual(model.deviance, 2 * ref.cost * (1 + 1e-6))
        np.testing.assert_allclose(model.coefficients, ref.x, atol=1e-4)

    def test_deviance_never_rises(self):
        rng = np.random.default_rng(41)
        x = rng.uniform(2.0, 10.0, 80)
        y = np.exp(1.0 - 0.3 * x) * rng.uniform(0.7, 1.3, 80)
        model = fit_glm_log(x, y)
        self.assertGreaterEqual(len(model.history), 1)
        self.assertTrue(np.all(np.diff(model.history) <= 0))
        self.assertEqual(model.deviance, model.history[-1])
        self.assertEqual(model.n_train, 80)

    def test_targets_must_be_positive(self):
        with self.assertRaises(InvalidTargetError):
            fit_glm_log([1.0, 2.0, 3.0], [0.5, 0.0, 0.2])


class LinearTest(unittest.TestCase):
    def test_exact_line(self):
        x = np.arange(10.0)
        model = fit_linear(x, 2.0 + 3.0 * x, variant=NSRMR)
        self.assertEqual(model.kind, LINEAR)
        np.testing.assert_allclose(model.coefficients, [2.0, 3.0], atol=1e-10)
        self.assertLess(model.deviance, 1e-18)

    def test_singular_designs(self):
        with self.assertRaises(SingularDesignError):
            fit_linear(np.full(10, 4.0), np.arange(10.0))
        with self.assertRaises(SingularDesignError):
            fit_linear([[1.0, 2.0], [2.0, 1.0]], [1.0, 2.0])
        x = np.arange(10.0)
        with self.assertRaises(SingularDesignError):
            fit_linear(np.stack([x, 2 * x], axis=1), x)

    def test_shape_and_value_checks(self):
        with self.assertRaises(DimensionMismatchError):
            fit_linear(np.arange(5.0), np.arange(6.0))
        with self.assertRaises(InvalidTargetError):
            fit_linear(np.arange(5.0), [1.0, 2.0, np.inf, 3.0, 4.0])

    def test_kinds_by_target(self):
        self.assertEqual(kind_for_target(RT60), GLM_LOG)
        self.assertEqual(kind_for_target(DRR), LINEAR)
        with self.assertRaises(InvalidTargetError):
            kind_for_target("t30")
        x = np.arange(1.0, 6.0)
        self.assertEqual(fit_mapping(x, -x, DRR).kind, LINEAR)


class PredictTest(unittest.TestCase):
    def test_scalar_model(self):
        model = MappingModel(GLM_LOG, [0.1, -0.2], NSRMR)
        self.assertIsInstance(predict(model, 2.0), float)
        self.assertAlmostEqual(predict(model, 2.0), np.exp(-0.3))
        out = predict(model, np.array([1.0, 2.0]))
        np.testing.assert_allclose(out, np.exp([-0.1, -0.3]))
        feature = SrmrFeatures(NSRMR, (2.0,), NORMALIZED)
        self.assertAlmostEqual(predict(model, feature), np.exp(-0.3))
        with self.assertRaises(DimensionMismatchError):
            predict(model, SrmrFeatures(OSRMR, (2.0,), ORIGINAL))

    def test_vector_model(self):
        model = MappingModel(LINEAR, [1.0, 1.0, 2.0, 3.0, 4.0], SRMR_K_VECTOR)
        self.assertEqual(predict(model, [1.0, 1.0, 1.0, 1.0]), 11.0)
        np.testing.assert_allclose(predict(model, np.ones((3, 4))), [11.0] * 3)
        with self.assertRaises(DimensionMismatchError):
            predict(model, [1.0, 2.0])

    def test_model_validation(self):
        with self.assertRaises(ModelFormatError):
            MappingModel("CUBIC", [1.0, 2.0])
        with self.assertRaises(ModelFormatError):
            MappingModel(LINEAR, [1.0])
        with self.assertRaises(ModelFormatError):
            MappingModel(LINEAR, [1.0, 2.0], "srmr-q")
        with self.assertRaises(DimensionMismatchError):
            MappingModel(LINEAR, [1.0, 2.0, 3.0], NSRMR)


class ModelFileTest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self._tmp.name, "model.json")

    def tearDown(self):
        self._tmp.cleanup()

    def _edit(self, fn):
        with open(self.path) as fh:
            doc = json.load(fh)
        fn(doc)
        with open(self.path, "w") as fh:
            json.dump(doc, fh)

    def test_saved_model_loads_exactly(self):
        model = MappingModel(GLM_LOG, [0.1 / 3, -2.0 / 7], NSRMR, None, 12, 0.25)
        save_model(model, self.path)
        back = load_model(self.path)
        self.assertTrue(np.array_equal(back.coefficients, model.coefficients))
        self.assertEqual((back.kind, back.variant, back.n_train), (GLM_LOG, NSRMR, 12))

    def test_tampered_coefficients_fail_self_test(self):
        save_model(MappingModel(LINEAR, [1.0, 2.0], NSRMR), self.path)
        self._edit(lambda doc: doc.__setitem__("coeffs", [(1.5).hex(), (2.0).hex()]))
        with self.assertRaises(ModelFormatError):
            load_model(self.path)

    def test_bad_files(self):
        save_model(MappingModel(LINEAR, [1.0, 2.0]), self.path)
        self._edit(lambda doc: doc.__setitem__("version", 99))
        with self.assertRaises(ModelFormatError):
            load_model(self.path)
        with open(self.path, "w") as fh:
            fh.write("{not json")
        with self.assertRaises(ModelFormatError):
            load_model(self.path)
        with self.assertRaises(ModelFormatError):
            load_model(os.path.join(self._tmp.name, "missing.json"))


if __name__ == "__main__":
    unittest.main()
