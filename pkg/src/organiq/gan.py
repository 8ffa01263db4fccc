"""OrganiQ training: three passes per iteration, Baseline mode, ablations and inference.

OrganiQ places generator and discriminator on one circuit. Every iteration
runs three passes:

    A  real:      regularize -> StatePrep -> injection -> discriminator   (label 1)
    B  fake:      noise -> angle embedding -> generator -> discriminator  (label 0)
    C  generator: same circuit as B, label 1, only generator weights move

Pass A and B update the discriminator with the summed gradient, pass C the
generator. The discriminator output <Z> on qubit 0 is mapped to [0, 1] and
scored with binary cross-entropy.

Baseline (and the ``no_combined`` ablation) measure the generator classically
and re-embed the readout into a separate discriminator circuit. The shift rule
does not cross that measurement, so the generator gradient there is a
central difference of the composed loss.
"""
from __future__ import annotations

import enum
import logging
import time
from collections.abc import Callable
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import numpy.typing as npt

from analysis.linalg import FrechetStats, mean_covariance
from analysis.metrics import Pixels, extract_features, frechet_distance
from analysis.pca import MinMaxScaler, PcaModel, minmax_apply, minmax_fit, minmax_invert, pca_fit, pca_inverse, pca_transform
from handling_errors import ConfigurationError, InsufficientDataError, NumericError
from organiq.encode import deregularize, plain_normalize, regularize, sample_noise, z_to_unit
from qsim.circuit import (
    INJECTION_LAYERS,
    Bank,
    CircuitSegment,
    ParameterBank,
    StatePrep,
    angle_embedding,
    entangler_block,
    injection_block,
    invert,
    run,
)
from qsim.grad import ExpectationZ, GradientVector, central_difference, param_shift_gradient
from qsim.statevector import marginal_probabilities, zero_state

logger = logging.getLogger(__name__)

BCE_EPSILON = 1e-7
DISCRIMINATOR_QUBIT = 0
FINITE_DIFF_STEP = 1e-3
# Generated images are scored against at most this many training images
FRECHET_REFERENCE_LIMIT = 500
# Independent stream for evaluation noise so evaluation never shifts training draws
EVAL_STREAM = 1


class Mode(enum.Enum):
    ORGANIQ = "organiq"
    BASELINE = "baseline"


@dataclass(frozen=True)
class Ablations:
    no_combined: bool = False
    no_regularization: bool = False
    no_injection: bool = False

    def any(self) -> bool:
        return self.no_combined or self.no_regularization or self.no_injection


@dataclass(frozen=True)
class TrainConfig:
    n_qubits: int = 5
    n_layers: int = 3
    n_embed: int = 3
    iterations: int = 500
    batch_size: int = 20
    lr_g: float = 0.05
    lr_d: float = 0.05
    seed: int = 0
    mode: Mode = Mode.ORGANIQ
    ablations: Ablations = field(default_factory=Ablations)
    eval_every: int = 25
    eval_count: int = 50
    dataset_class: int = 0
    injection_layers: int = INJECTION_LAYERS

    def validate(self) -> TrainConfig:
        problems = []
        if not 1 <= self.n_embed <= self.n_qubits:
            problems.append(f"n_embed={self.n_embed} must be in [1, n_qubits={self.n_qubits}]")
        for name in ("n_qubits", "n_layers", "batch_size", "eval_every", "injection_layers"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if self.seed < 0:
            problems.append("seed must be >= 0")
        if self.iterations < 0:
            problems.append("iterations must be >= 0")
        if self.eval_count < 2:
            problems.append("eval_count must be >= 2")
        if not (self.lr_g > 0 and self.lr_d > 0):
            problems.append("learning rates must be positive")
        if not 0 <= self.dataset_class <= 9:
            problems.append("dataset_class must be in 0-9")
        if problems:
            raise ConfigurationError("Invalid training configuration: " + "; ".join(problems))
        return self

    @property
    def n_params(self) -> int:
        return self.n_layers * self.n_qubits

    @property
    def n_features(self) -> int:
        return 2 ** self.n_embed - 1

    @property
    def combined(self) -> bool:
        return self.mode is Mode.ORGANIQ and not self.ablations.no_combined

    @property
    def uses_regularization(self) -> bool:
        return self.mode is Mode.ORGANIQ and not self.ablations.no_regularization

    @property
    def uses_injection(self) -> bool:
        return self.mode is Mode.ORGANIQ and not self.ablations.no_injection

    def to_dict(self) -> dict:
        data = asdict(self)
        data["mode"] = self.mode.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> TrainConfig:
        data = dict(data)
        data["mode"] = Mode(data["mode"])
        data["ablations"] = Ablations(**data.get("ablations", {}))
        return cls(**data)


@dataclass(frozen=True, eq=False)
class GanModel:
    config: TrainConfig
    gen_params: ParameterBank
    disc_params: ParameterBank
    injection: CircuitSegment | None
    pca: PcaModel
    scaler: MinMaxScaler
    # mean norm of the [0, 1] training features; rescales plain-normalized decodes
    feature_norm: float = 1.0

    def banks(self) -> dict[Bank, ParameterBank]:
        return {Bank.GENERATOR: self.gen_params, Bank.DISCRIMINATOR: self.disc_params}

    @property
    def generator(self) -> CircuitSegment:
        return entangler_block(self.config.n_qubits, self.config.n_layers, Bank.GENERATOR)

    @property
    def discriminator(self) -> CircuitSegment:
        return entangler_block(self.config.n_qubits, self.config.n_layers, Bank.DISCRIMINATOR)


@dataclass
class LossRecord:
    iteration: int
    loss_real: float
    loss_fake: float
    loss_disc: float
    loss_gen: float
    val_frechet: float | None = None


# ---------------------------------------------------------------------------
# losses and updates
# ---------------------------------------------------------------------------

def bce(prediction: npt.ArrayLike, label: int) -> npt.NDArray[np.float64] | float:
    """-[y ln d + (1 - y) ln(1 - d)] with d clamped to [1e-7, 1 - 1e-7]."""
    if label not in (0, 1):
        raise ConfigurationError(f"BCE label must be 0 or 1, got {label}")
    d = np.clip(np.asarray(prediction, dtype=np.float64), BCE_EPSILON, 1.0 - BCE_EPSILON)
    loss = -np.log(d) if label == 1 else -np.log(1.0 - d)
    return float(loss) if loss.ndim == 0 else loss


def bce_derivative(prediction: npt.ArrayLike, label: int) -> npt.NDArray[np.float64]:
    """d bce / d prediction, evaluated at the clamped prediction."""
    d = np.clip(np.asarray(prediction, dtype=np.float64), BCE_EPSILON, 1.0 - BCE_EPSILON)
    return -1.0 / d if label == 1 else 1.0 / (1.0 - d)


def sgd_update(bank: ParameterBank, grad: GradientVector, lr: float) -> ParameterBank:
    """theta <- theta - lr * g (no momentum, no weight decay)."""
    if grad.bank is not bank.bank:
        raise ConfigurationError(f"Gradient for {grad.bank.value} applied to {bank.bank.value} bank")
    if grad.values.shape != bank.values.shape:
        raise ConfigurationError(f"Gradient length {grad.values.shape} does not match bank {bank.values.shape}")
    return ParameterBank(bank.bank, bank.values - lr * grad.values)


# ---------------------------------------------------------------------------
# preprocessing and embeddings
# ---------------------------------------------------------------------------

def preprocess(model: GanModel, images: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Pixels -> PCA scores -> [0, 1] features."""
    return minmax_apply(model.scaler, pca_transform(model.pca, images))


def embed_real(model: GanModel, unit_features: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """State-preparation amplitudes for real samples under the model's mode."""
    config = model.config
    if config.uses_regularization:
        return regularize(unit_features, config.n_embed).amplitudes
    return plain_normalize(unit_features, 2 ** config.n_embed)


def _reembed_generated(model: GanModel, probs: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Classically measured generator output, prepared again for the discriminator."""
    config = model.config
    if config.uses_regularization:
        return regularize(deregularize(probs, config.n_embed), config.n_embed).amplitudes
    return plain_normalize(np.sqrt(probs), 2 ** config.n_embed)


def decode_probs(model: GanModel, probs: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Measured embedding-register probabilities -> [0, 1] features."""
    config = model.config
    if config.uses_regularization:
        return deregularize(probs, config.n_embed)
    amplitudes = np.sqrt(np.clip(probs, 0.0, None))[..., : config.n_features]
    if config.mode is Mode.ORGANIQ:
        amplitudes = amplitudes * model.feature_norm
    return np.clip(amplitudes, 0.0, 1.0)


# ---------------------------------------------------------------------------
# circuits
# ---------------------------------------------------------------------------

def _prep_segment(model: GanModel, amplitudes: npt.NDArray[np.float64]) -> CircuitSegment:
    return CircuitSegment(model.config.n_qubits, (StatePrep(np.asarray(amplitudes, dtype=np.complex128)),))


def _injection_segments(model: GanModel) -> list[CircuitSegment]:
    return [model.injection] if model.injection is not None else []


def _prepared_pipeline(model: GanModel, amplitudes: npt.NDArray[np.float64]) -> list[CircuitSegment]:
    return [_prep_segment(model, amplitudes), *_injection_segments(model), model.discriminator]


def _generator_pipeline(model: GanModel, noise: npt.NDArray[np.float64]) -> list[CircuitSegment]:
    return [angle_embedding(noise, model.config.n_qubits), model.generator]


def _measure_generator(model: GanModel, noise: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    state = run(_generator_pipeline(model, noise), model.banks(), zero_state(model.config.n_qubits))
    return marginal_probabilities(state, model.config.n_embed)


def _discriminate(model: GanModel, pipeline: list[CircuitSegment]) -> npt.NDArray[np.float64]:
    state = run(pipeline, model.banks(), zero_state(model.config.n_qubits))
    return np.asarray(z_to_unit(ExpectationZ(DISCRIMINATOR_QUBIT).evaluate(state)))


def _loss_and_shift_gradient(
    model: GanModel,
    pipeline: list[CircuitSegment],
    label: int,
    active_bank: Bank,
    max_workers: int | None,
) -> tuple[float, GradientVector]:
    """Mean BCE over the batch and its exact gradient through d = (<Z> + 1) / 2."""
    d = _discriminate(model, pipeline)
    dz = param_shift_gradient(
        pipeline,
        model.banks(),
        active_bank,
        ExpectationZ(DISCRIMINATOR_QUBIT),
        initial=zero_state(model.config.n_qubits),
        max_workers=max_workers,
    ).values
    per_sample = (bce_derivative(d, label) * 0.5)[..., None] * dz
    return float(np.mean(bce(d, label))), GradientVector(active_bank, per_sample.reshape(-1, dz.shape[-1]).mean(axis=0))


# ---------------------------------------------------------------------------
# the three passes
# ---------------------------------------------------------------------------

def pass_real(model: GanModel, unit_features: npt.ArrayLike, max_workers: int | None = None) -> tuple[float, GradientVector]:
    """Discriminator on real samples (label 1); ``unit_features`` are preprocessed rows."""
    pipeline = _prepared_pipeline(model, embed_real(model, np.atleast_2d(unit_features)))
    return _loss_and_shift_gradient(model, pipeline, 1, Bank.DISCRIMINATOR, max_workers)


def _fake_pipeline(model: GanModel, noise: npt.NDArray[np.float64]) -> list[CircuitSegment]:
    if model.config.combined:
        return [*_generator_pipeline(model, noise), model.discriminator]
    return _prepared_pipeline(model, _reembed_generated(model, _measure_generator(model, noise)))


def pass_fake(model: GanModel, noise: npt.ArrayLike, max_workers: int | None = None) -> tuple[float, GradientVector]:
    """Discriminator on generated samples (label 0); generator weights stay frozen."""
    pipeline = _fake_pipeline(model, np.atleast_2d(noise))
    return _loss_and_shift_gradient(model, pipeline, 0, Bank.DISCRIMINATOR, max_workers)


def pass_generator(model: GanModel, noise: npt.ArrayLike, max_workers: int | None = None) -> tuple[float, GradientVector]:
    """Generator step: non-saturating loss bce(d, 1) on generated samples."""
    noise = np.atleast_2d(noise)
    if model.config.combined:
        return _loss_and_shift_gradient(model, _fake_pipeline(model, noise), 1, Bank.GENERATOR, max_workers)

    def composed_loss(values: npt.NDArray[np.float64]) -> float:
        candidate = replace(model, gen_params=ParameterBank(Bank.GENERATOR, values))
        return float(np.mean(bce(_discriminate(candidate, _fake_pipeline(candidate, noise)), 1)))

    loss = composed_loss(model.gen_params.values)
    grad = central_difference(composed_loss, model.gen_params.values, FINITE_DIFF_STEP, max_workers)
    return loss, GradientVector(Bank.GENERATOR, grad)


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------

def generate_batch(model: GanModel, noise: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Images (count x 784) for an explicit noise batch."""
    noise = np.atleast_2d(noise)
    pipeline = _generator_pipeline(model, noise)
    # the generator only learned the injected phases when it fed the discriminator directly
    if model.injection is not None and model.config.combined:
        pipeline.append(invert(model.injection))
    state = run(pipeline, model.banks(), zero_state(model.config.n_qubits))
    probs = marginal_probabilities(state, model.config.n_embed)
    scores = minmax_invert(model.scaler, decode_probs(model, probs))
    return pca_inverse(model.pca, scores)


def infer(model: GanModel, count: int, rng: np.random.Generator) -> npt.NDArray[np.float64]:
    if count < 1:
        raise ConfigurationError(f"count must be >= 1, got {count}")
    return generate_batch(model, sample_noise(count, model.config.n_qubits, rng))


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

def initial_model(config: TrainConfig, class_images: npt.ArrayLike, rng: np.random.Generator) -> GanModel:
    """Fit PCA and scaler on the class images and draw the starting weights."""
    images = np.asarray(class_images, dtype=np.float64)
    pca = pca_fit(images, config.n_features)
    scores = pca_transform(pca, images)
    scaler = minmax_fit(scores)
    unit = minmax_apply(scaler, scores)
    gen = ParameterBank(Bank.GENERATOR, rng.uniform(0.0, np.pi, config.n_params))
    disc = ParameterBank(Bank.DISCRIMINATOR, rng.uniform(0.0, np.pi, config.n_params))
    injection = injection_block(config.n_qubits, config.injection_layers, rng) if config.uses_injection else None
    feature_norm = float(np.mean(np.linalg.norm(unit, axis=1)))
    return GanModel(config, gen, disc, injection, pca, scaler, feature_norm)


def _check_finite(iteration: int, **losses: float) -> None:
    for name, value in losses.items():
        if not np.isfinite(value):
            raise NumericError(f"Non-finite {name} ({value}) at iteration {iteration}")


def evaluate(model: GanModel, reference: FrechetStats, iteration: int) -> float:
    """Pixel-feature Fréchet distance of freshly generated images to the reference set."""
    rng = np.random.default_rng([model.config.seed, EVAL_STREAM, iteration])
    generated = infer(model, model.config.eval_count, rng)
    return frechet_distance(mean_covariance(extract_features(generated, Pixels())), reference)


def train(
    config: TrainConfig,
    class_images: npt.ArrayLike,
    max_workers: int | None = None,
    return_metrics: bool = False,
    on_record: Callable[[LossRecord], None] | None = None,
) -> tuple[GanModel, list[LossRecord]] | tuple[GanModel, list[LossRecord], dict]:
    """Train on the images of one class and return the best evaluated model with the loss history.

    Args:
        config: Hyper-parameters, mode and ablations.
        class_images: N x 784 pixels in [0, 1].
        max_workers: Thread cap for shifted circuit evaluations.
        return_metrics: If True, also return a dict of timings for benchmarking.
        on_record: Called with every LossRecord as soon as it is complete.
    """
    config.validate()
    images = np.asarray(class_images, dtype=np.float64)
    if images.ndim != 2 or len(images) < max(config.batch_size, config.n_features + 1):
        raise InsufficientDataError(
            f"Need at least {max(config.batch_size, config.n_features + 1)} images, got {len(images)}"
        )

    start_total = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    model = initial_model(config, images, rng)
    unit = preprocess(model, images)
    fit_time = time.perf_counter() - start_total
    logger.info(
        "Training %s (ablations %s) on %d images, %d iterations",
        config.mode.value, asdict(config.ablations), len(images), config.iterations,
    )

    reference = mean_covariance(extract_features(images[:FRECHET_REFERENCE_LIMIT], Pixels()))
    history: list[LossRecord] = []
    best_model, best_score = model, np.inf
    eval_time = 0.0
    order, cursor = rng.permutation(len(images)), 0

    start_loop = time.perf_counter()
    for iteration in range(1, config.iterations + 1):
        if cursor + config.batch_size > len(images):
            order, cursor = rng.permutation(len(images)), 0
        batch = unit[order[cursor : cursor + config.batch_size]]
        cursor += config.batch_size

        noise = sample_noise(config.batch_size, config.n_qubits, rng)
        loss_real, grad_real = pass_real(model, batch, max_workers)
        loss_fake, grad_fake = pass_fake(model, noise, max_workers)
        disc_grad = GradientVector(Bank.DISCRIMINATOR, grad_real.values + grad_fake.values)
        model = replace(model, disc_params=sgd_update(model.disc_params, disc_grad, config.lr_d))

        noise = sample_noise(config.batch_size, config.n_qubits, rng)
        loss_gen, grad_gen = pass_generator(model, noise, max_workers)
        model = replace(model, gen_params=sgd_update(model.gen_params, grad_gen, config.lr_g))

        _check_finite(iteration, loss_real=loss_real, loss_fake=loss_fake, loss_gen=loss_gen)
        record = LossRecord(iteration, loss_real, loss_fake, loss_real + loss_fake, loss_gen)
        logger.debug(
            "iter %d: L_R=%.5f L_F=%.5f L_D=%.5f L_G=%.5f",
            iteration, loss_real, loss_fake, record.loss_disc, loss_gen,
            extra={"iteration": iteration, "loss_real": loss_real, "loss_fake": loss_fake, "loss_gen": loss_gen},
        )

        if iteration % config.eval_every == 0 or iteration == config.iterations:
            start_eval = time.perf_counter()
            record.val_frechet = evaluate(model, reference, iteration)
            eval_time += time.perf_counter() - start_eval
            logger.info(
                "iter %d: validation Fréchet %.4f", iteration, record.val_frechet,
                extra={"iteration": iteration, "loss_gen": loss_gen, "val_frechet": record.val_frechet},
            )
            if record.val_frechet < best_score:
                best_model, best_score = model, record.val_frechet

        history.append(record)
        if on_record is not None:
            on_record(record)

    loop_time = time.perf_counter() - start_loop
    if return_metrics:
        metrics = {
            "fit_time": fit_time,
            "train_time": loop_time,
            "eval_time": eval_time,
            "time_per_iteration": loop_time / config.iterations if config.iterations else 0.0,
            "total_time": time.perf_counter() - start_total,
            "best_frechet": None if np.isinf(best_score) else float(best_score),
        }
        return best_model, history, metrics
    return best_model, history


def train_baseline(
    config: TrainConfig,
    class_images: npt.ArrayLike,
    max_workers: int | None = None,
    return_metrics: bool = False,
    on_record: Callable[[LossRecord], None] | None = None,
) -> tuple[GanModel, list[LossRecord]] | tuple[GanModel, list[LossRecord], dict]:
    """Baseline: separate circuits, classical hand-off, no regularization and no injection."""
    baseline = replace(config, mode=Mode.BASELINE, ablations=Ablations())
    return train(baseline, class_images, max_workers, return_metrics, on_record)
