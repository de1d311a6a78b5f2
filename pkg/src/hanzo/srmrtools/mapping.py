"""Feature to room-parameter mappings.

DRR is mapped with ordinary least squares. RT60 is mapped with a
normal-family GLM with log link, y ~ exp(b0 + b.x), fitted by
iteratively reweighted least squares.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from hanzo.srmrtools.errors import (
    DimensionMismatchError,
    InvalidTargetError,
    ModelFormatError,
    NoConvergenceError,
    SingularDesignError,
)
from hanzo.srmrtools.metrics import VARIANTS, SrmrFeatures

log = logging.getLogger(__name__)

LINEAR = "LINEAR"
GLM_LOG = "GLM_LOG"
KINDS = (LINEAR, GLM_LOG)

RT60 = "rt60"
DRR = "drr"
TARGETS = (RT60, DRR)

MODEL_VERSION = 1

MAX_ITERATIONS = 100
TOLERANCE = 1e-8  # relative deviance change
MAX_HALVINGS = 30
MAX_INCREASES = 3
RANK_TOLERANCE = 1e-10
EXACT_FIT = 1e-24  # deviance relative to sum(y**2) treated as zero


@dataclass(frozen=True, eq=False)
class MappingModel:
    """Intercept-first coefficients of a trained mapping.

    ``history`` holds the deviance after each accepted IRLS step and is
    not saved.
    """

    kind: str
    coefficients: np.ndarray
    variant: str | None = None
    k: int | None = None
    n_train: int = 0
    deviance: float = 0.0
    history: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelFormatError(f"unknown model kind {self.kind!r}")
        coeffs = np.asarray(self.coefficients, dtype=np.float64).ravel()
        if coeffs.size < 2 or not np.all(np.isfinite(coeffs)):
            raise ModelFormatError("coefficients must be finite, intercept plus weights")
        if self.variant is not None:
            registered = VARIANTS.get(self.variant)
            if registered is None:
                raise ModelFormatError(f"unknown feature variant {self.variant!r}")
            if registered.dimension != coeffs.size - 1:
                raise DimensionMismatchError(
                    f"{self.variant} has {registered.dimension} features, "
                    f"model has {coeffs.size - 1} weights"
                )
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def intercept(self) -> float:
        return float(self.coefficients[0])

    @property
    def weights(self) -> np.ndarray:
        return self.coefficients[1:]

    @property
    def dimension(self) -> int:
        return self.coefficients.size - 1


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, np.newaxis]
    if x.ndim != 2:
        raise DimensionMismatchError(f"features must be (samples, dims), got shape {x.shape}")
    return x


def _design(x, y):
    x = _as_matrix(x)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] != y.size:
        raise DimensionMismatchError(f"{x.shape[0]} feature rows for {y.size} targets")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidTargetError("features and targets must be finite")
    if y.size < x.shape[1] + 1:
        raise SingularDesignError(f"{y.size} samples cannot fit {x.shape[1] + 1} coefficients")
    return np.hstack([np.ones((y.size, 1)), x]), y


def _least_squares(design, y, weights=None) -> np.ndarray:
    """(Weighted) least squares through a QR factorisation."""
    if weights is not None:
        root = np.sqrt(weights)
        design = design * root[:, np.newaxis]
        y = y * root
    q, r = np.linalg.qr(design)
    diag = np.abs(np.diag(r))
    if diag.min() <= RANK_TOLERANCE * max(diag.max(), np.finfo(float).tiny):
        raise SingularDesignError("design matrix is rank deficient")
    return solve_triangular(r, q.T @ y)


def fit_linear(x, y, variant=None, k=None) -> MappingModel:
    """Ordinary least squares, y ~ b0 + b.x."""
    design, y = _design(x, y)
    beta = _least_squares(design, y)
    residual = y - design @ beta
    deviance = float(residual @ residual)
    return MappingModel(LINEAR, beta, variant, k, y.size, deviance, (deviance,))


def _glm_deviance(design, y, beta) -> float:
    with np.errstate(over="ignore"):
        r = y - np.exp(design @ beta)
    return float(r @ r) if np.all(np.isfinite(r)) else np.inf


def fit_glm_log(x, y, variant=None, k=None) -> MappingModel:
    """Normal-family GLM with log link, fitted by IRLS.

    Starts from least squares on log(y). Each step solves the weighted
    problem with weights mu**2 and working response eta + (y - mu) / mu,
    halving the step while the deviance would rise.

    Raises:
        InvalidTargetError: a non-positive target
        NoConvergenceError: the deviance rose for three steps in a row
    """
    design, y = _design(x, y)
    if np.any(y <= 0):
        raise InvalidTargetError("log-link targets must be positive")

    beta = _least_squares(design, np.log(y))
    dev = _glm_deviance(design, y, beta)
    history = [dev]
    exact = EXACT_FIT * float(y @ y)
    increases = 0

    for iteration in range(MAX_ITERATIONS):
        if dev <= exact:
            break
        eta = design @ beta
        mu = np.exp(eta)
        proposal = _least_squares(design, eta + (y - mu) / mu, mu**2)

        step = proposal - beta
        candidate, new_dev = proposal, _glm_deviance(design, y, proposal)
        halvings = 0
        while new_dev > dev and halvings < MAX_HALVINGS:
            halvings += 1
            candidate = beta + step / 2.0**halvings
            new_dev = _glm_deviance(design, y, candidate)
        if halvings:
            log.debug("IRLS iteration %d: %d step halvings", iteration, halvings)

        if new_dev > dev:
            if not np.isfinite(new_dev) or new_dev - dev > TOLERANCE * dev + exact:
                increases += 1
                log.info("IRLS iteration %d: deviance rose to %g", iteration, new_dev)
                if increases >= MAX_INCREASES:
                    raise NoConvergenceError(
                        f"deviance increased for {MAX_INCREASES} consecutive iterations"
                    )
                beta, dev = candidate, new_dev
                history.append(dev)
                continue
            break  # stalled at rounding level

        increases = 0
        change = dev - new_dev
        beta, dev = candidate, new_dev
        history.append(dev)
        if change <= TOLERANCE * dev:
            break

    return MappingModel(GLM_LOG, beta, variant, k, y.size, dev, tuple(history))


def kind_for_target(target: str) -> str:
    if target == RT60:
        return GLM_LOG
    if target == DRR:
        return LINEAR
    raise InvalidTargetError(f"unknown target {target!r}, expected one of {TARGETS}")


def fit_mapping(x, y, target: str, variant=None, k=None) -> MappingModel:
    if kind_for_target(target) == GLM_LOG:
        return fit_glm_log(x, y, variant, k)
    return fit_linear(x, y, variant, k)


def predict(model: MappingModel, x):
    """Apply the mapping to one feature vector, or a (samples, dims) matrix.

    A scalar-variant model also takes a plain number or a 1-D array of
    samples.
    """
    if isinstance(x, SrmrFeatures):
        if model.variant is not None and x.variant != model.variant:
            raise DimensionMismatchError(f"model is for {model.variant}, features are {x.variant}")
        x = x.as_array()
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 0 or (x.ndim == 1 and model.dimension > 1)
    rows = x.reshape(1, -1) if single else _as_matrix(x)
    if rows.shape[1] != model.dimension:
        raise DimensionMismatchError(
            f"model takes {model.dimension} features, got {rows.shape[1]}"
        )
    eta = model.intercept + rows @ model.weights
    out = np.exp(eta) if model.kind == GLM_LOG else eta
    return float(out[0]) if single else out


def _self_test_input(model: MappingModel) -> list[float]:
    return [1.0] * model.dimension


def _self_test_prediction(model: MappingModel, x) -> float:
    return float(np.ravel(predict(model, x))[0])


def save_model(model: MappingModel, path) -> None:
    """Write the model as JSON with hex-float coefficients and a self-test prediction."""
    x = _self_test_input(model)
    doc = {
        "version": MODEL_VERSION,
        "kind": model.kind,
        "variant": model.variant,
        "k": model.k,
        "coeffs": [float(c).hex() for c in model.coefficients],
        "n_train": model.n_train,
        "deviance": float(model.deviance),
        "self_test": {"x": x, "prediction": _self_test_prediction(model, x).hex()},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path) -> MappingModel:
    """Read a model saved by save_model.

    Raises:
        ModelFormatError: unreadable file, wrong version or kind, or a
            self-test prediction that does not reproduce
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"cannot read model {path}: {e}") from e
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: model must be a JSON object")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"{path}: model version {doc.get('version')!r} is not supported")
    try:
        coeffs = [float.fromhex(c) for c in doc["coeffs"]]
        model = MappingModel(
            kind=doc["kind"],
            coefficients=coeffs,
            variant=doc.get("variant"),
            k=doc.get("k"),
            n_train=int(doc.get("n_train", 0)),
            deviance=float(doc.get("deviance", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"{path}: malformed model: {e}") from e

    self_test = doc.get("self_test")
    if self_test is not None:
        try:
            expected = float.fromhex(self_test["prediction"])
            got = _self_test_prediction(model, self_test["x"])
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"{path}: malformed self-test: {e}") from e
        if not np.isclose(got, expected, rtol=1e-12, atol=0.0):
            raise ModelFormatError(f"{path}: self-test predicts {got!r}, file says {expected!r}")
    return model
