import csv
import json
import os
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from handling_errors import ConfigurationError, InsufficientDataError
from mnist import filter_class, read_idx_pair
import organiq.gan
from organiq.gan import (
    Ablations,
    GanModel,
    Mode,
    TrainConfig,
    bce,
    decode_probs,
    embed_real,
    generate_batch,
    infer,
    initial_model,
    pass_fake,
    pass_generator,
    pass_real,
    preprocess,
    sgd_update,
    train,
    train_baseline,
    _discriminate,
    _fake_pipeline,
    _generator_pipeline,
    _prepared_pipeline,
)
from organiq.encode import sample_noise
from organiq.model_io import model_to_dict
from qsim.circuit import Bank, CircuitSegment, ParameterBank, injection_block, invert, run
from qsim.grad import GradientVector, central_difference
from qsim.statevector import zero_state

SMOKE = TrainConfig(iterations=10, batch_size=8, eval_every=5, eval_count=10)


@pytest.fixture
def model(class_images, rng):
    return initial_model(TrainConfig(), class_images, rng)


def with_bank(model: GanModel, bank: Bank, values) -> GanModel:
    params = ParameterBank(bank, values)
    if bank is Bank.GENERATOR:
        return replace(model, gen_params=params)
    return replace(model, disc_params=params)


def assert_matches_finite_differences(model, bank, pass_fn, inputs, tol=1e-5):
    loss, grad = pass_fn(model, inputs)
    current = model.gen_params if bank is Bank.GENERATOR else model.disc_params
    approx = central_difference(lambda v: pass_fn(with_bank(model, bank, v), inputs)[0], current.values, 1e-3)
    assert grad.bank is bank
    assert loss >= 0.0
    np.testing.assert_allclose(grad.values, approx, atol=tol)


def record_passes(monkeypatch) -> list:
    """Wrap the three passes so each call logs (name, gen bank, disc bank, gradient)."""
    calls = []

    def recording(name, pass_fn):
        def wrapped(model, inputs, max_workers=None):
            loss, grad = pass_fn(model, inputs, max_workers)
            calls.append((name, model.gen_params.values.copy(), model.disc_params.values.copy(), grad.values.copy()))
            return loss, grad
        return wrapped

    for name in ("pass_real", "pass_fake", "pass_generator"):
        monkeypatch.setattr(organiq.gan, name, recording(name, getattr(organiq.gan, name)))
    return calls


def assert_steps_freeze_banks(calls: list, config: TrainConfig) -> None:
    assert [c[0] for c in calls] == ["pass_real", "pass_fake", "pass_generator"] * config.iterations
    steps = [calls[i : i + 3] for i in range(0, len(calls), 3)]
    for i, (real, fake, gen) in enumerate(steps):
        np.testing.assert_array_equal(real[1], fake[1])
        np.testing.assert_array_equal(real[1], gen[1])
        np.testing.assert_array_equal(real[2], fake[2])
        np.testing.assert_array_equal(gen[2], real[2] - config.lr_d * (real[3] + fake[3]))
        if i + 1 < len(steps):
            following = steps[i + 1][0]
            np.testing.assert_array_equal(following[2], gen[2])
            np.testing.assert_array_equal(following[1], gen[1] - config.lr_g * gen[3])


class TestLosses:
    def test_bce_values(self):
        assert bce(0.5, 1) == pytest.approx(np.log(2))
        assert bce(0.25, 0) == pytest.approx(-np.log(0.75))
        assert bce(0.0, 1) == pytest.approx(-np.log(1e-7))
        assert bce(1.0, 0) == pytest.approx(-np.log(1e-7))
        with pytest.raises(ConfigurationError):
            bce(0.5, 2)

    def test_sgd_update(self):
        bank = ParameterBank(Bank.DISCRIMINATOR, [1.0, 2.0])
        updated = sgd_update(bank, GradientVector(Bank.DISCRIMINATOR, np.array([10.0, -10.0])), 0.05)
        np.testing.assert_allclose(updated.values, [0.5, 2.5])
        with pytest.raises(ConfigurationError):
            sgd_update(bank, GradientVector(Bank.GENERATOR, np.zeros(2)), 0.05)


class TestConfig:
    def test_reference_defaults(self):
        config = TrainConfig()
        assert (config.n_qubits, config.n_layers, config.n_embed) == (5, 3, 3)
        assert (config.iterations, config.batch_size, config.lr_g, config.lr_d) == (500, 20, 0.05, 0.05)
        assert config.n_features == 7
        assert config.n_params == 15
        assert config.combined and config.uses_regularization and config.uses_injection

    def test_ablation_switches(self):
        config = TrainConfig(ablations=Ablations(no_combined=True, no_injection=True))
        assert not config.combined and not config.uses_injection and config.uses_regularization
        baseline = TrainConfig(mode=Mode.BASELINE)
        assert not (baseline.combined or baseline.uses_regularization or baseline.uses_injection)

    def test_dict_round_trip(self):
        config = TrainConfig(seed=9, mode=Mode.BASELINE, ablations=Ablations(no_regularization=True))
        assert TrainConfig.from_dict(json.loads(json.dumps(config.to_dict()))) == config

    @pytest.mark.parametrize(
        "changes",
        [{"n_embed": 6}, {"batch_size": 0}, {"iterations": -1}, {"lr_g": 0.0}, {"dataset_class": 10}, {"eval_count": 1}],
    )
    def test_invalid(self, changes):
        with pytest.raises(ConfigurationError):
            replace(TrainConfig(), **changes).validate()


class TestModelSetup:
    def test_initial_banks_and_injection(self, model):
        assert len(model.gen_params) == len(model.disc_params) == 15
        assert np.all((model.gen_params.values >= 0) & (model.gen_params.values < np.pi))
        assert len(model.injection.constant_angles()) == 10
        assert model.pca.components.shape == (7, 784)

    def test_no_injection_without_the_block(self, class_images, rng):
        assert initial_model(TrainConfig(ablations=Ablations(no_injection=True)), class_images, rng).injection is None
        assert initial_model(TrainConfig(mode=Mode.BASELINE), class_images, rng).injection is None

    def test_preprocessed_features_decode_exactly(self, model, class_images):
        unit = preprocess(model, class_images[:5])
        assert unit.shape == (5, 7)
        assert unit.min() >= 0.0 and unit.max() <= 1.0
        amplitudes = embed_real(model, unit)
        np.testing.assert_allclose(decode_probs(model, amplitudes ** 2), unit, atol=1e-12)

    def test_plain_embedding_without_regularization(self, class_images, rng):
        model = initial_model(TrainConfig(ablations=Ablations(no_regularization=True)), class_images, rng)
        amplitudes = embed_real(model, preprocess(model, class_images[:3]))
        np.testing.assert_allclose(np.linalg.norm(amplitudes, axis=-1), 1.0, atol=1e-12)


class TestPasses:
    def test_real_pass_gradient(self, model, class_images):
        batch = preprocess(model, class_images[:6])
        assert_matches_finite_differences(model, Bank.DISCRIMINATOR, pass_real, batch)

    def test_identical_batch_matches_single_sample(self, model, class_images):
        single = preprocess(model, class_images[:1])
        loss_one, grad_one = pass_real(model, single)
        loss_many, grad_many = pass_real(model, np.repeat(single, 4, axis=0))
        assert loss_many == pytest.approx(loss_one, abs=1e-12)
        np.testing.assert_allclose(grad_many.values, grad_one.values, atol=1e-12)

    def test_fake_pass_gradient(self, model, rng):
        noise = sample_noise(6, 5, rng)
        assert_matches_finite_differences(model, Bank.DISCRIMINATOR, pass_fake, noise)

    def test_generator_pass_gradient(self, model, rng):
        noise = sample_noise(6, 5, rng)
        assert_matches_finite_differences(model, Bank.GENERATOR, pass_generator, noise)

    def test_generator_pass_without_combined_circuit(self, class_images, rng):
        model = initial_model(TrainConfig(ablations=Ablations(no_combined=True)), class_images, rng)
        noise = sample_noise(4, 5, rng)
        assert_matches_finite_differences(model, Bank.GENERATOR, pass_generator, noise, tol=1e-4)

    def test_baseline_fake_pass_gradient(self, class_images, rng):
        model = initial_model(TrainConfig(mode=Mode.BASELINE), class_images, rng)
        assert_matches_finite_differences(model, Bank.DISCRIMINATOR, pass_fake, sample_noise(4, 5, rng))

    @pytest.mark.parametrize("ablations", [Ablations(no_injection=True), Ablations(no_regularization=True)])
    def test_real_pass_gradient_under_ablations(self, class_images, rng, ablations):
        model = initial_model(TrainConfig(ablations=ablations), class_images, rng)
        assert_matches_finite_differences(model, Bank.DISCRIMINATOR, pass_real, preprocess(model, class_images[:5]))

    def test_injection_changes_the_real_pass(self, model, class_images):
        batch = preprocess(model, class_images[:4])
        with_injection, _ = pass_real(model, batch)
        without, _ = pass_real(replace(model, injection=None), batch)
        assert with_injection != pytest.approx(without, abs=1e-9)

    def test_random_configurations_match_finite_differences(self, class_images):
        rng = np.random.default_rng(2024)
        fitted = {}
        for _ in range(100):
            n_qubits = int(rng.integers(1, 6))
            n_embed = int(rng.integers(1, min(3, n_qubits) + 1))
            ablations = Ablations(*(bool(flag) for flag in rng.integers(0, 2, 3)))
            config = TrainConfig(n_qubits=n_qubits, n_layers=int(rng.integers(1, 4)), n_embed=n_embed, ablations=ablations)
            if n_embed not in fitted:
                fitted[n_embed] = initial_model(replace(config, ablations=Ablations()), class_images, rng)
            base = fitted[n_embed]
            model = GanModel(
                config,
                ParameterBank(Bank.GENERATOR, rng.uniform(0.0, np.pi, config.n_params)),
                ParameterBank(Bank.DISCRIMINATOR, rng.uniform(0.0, np.pi, config.n_params)),
                injection_block(n_qubits, config.injection_layers, rng) if config.uses_injection else None,
                base.pca,
                base.scaler,
                base.feature_norm,
            )
            batch = preprocess(model, class_images[:3])
            noise = sample_noise(3, n_qubits, rng)

            def loss_of(bank, pipeline_of, label):
                def loss(values):
                    candidate = with_bank(model, bank, values)
                    return float(np.mean(bce(_discriminate(candidate, pipeline_of(candidate)), label)))
                return loss

            checks = [
                (pass_real, batch, Bank.DISCRIMINATOR, lambda m: _prepared_pipeline(m, embed_real(m, batch)), 1),
                (pass_fake, noise, Bank.DISCRIMINATOR, lambda m: _fake_pipeline(m, noise), 0),
            ]
            if config.combined:
                checks.append((pass_generator, noise, Bank.GENERATOR, lambda m: _fake_pipeline(m, noise), 1))
            for pass_fn, inputs, bank, pipeline_of, label in checks:
                loss, grad = pass_fn(model, inputs)
                current = model.gen_params if bank is Bank.GENERATOR else model.disc_params
                approx = central_difference(loss_of(bank, pipeline_of, label), current.values, 1e-3)
                assert loss == pytest.approx(loss_of(bank, pipeline_of, label)(current.values), abs=1e-12)
                np.testing.assert_allclose(grad.values, approx, atol=1e-5, err_msg=f"{pass_fn.__name__} {config}")


class TestInference:
    def test_generated_images_are_pixels(self, model, rng):
        images = infer(model, 7, rng)
        assert images.shape == (7, 784)
        assert images.min() >= 0.0 and images.max() <= 1.0

    def test_same_noise_same_images(self, model, rng):
        noise = sample_noise(3, 5, rng)
        np.testing.assert_array_equal(generate_batch(model, noise), generate_batch(model, noise))

    def test_inverse_injection_restores_the_generator_state(self, model, rng):
        noise = sample_noise(6, 5, rng)
        pipeline = _generator_pipeline(model, noise)
        plain = run(pipeline, model.banks(), zero_state(5))
        round_trip = run([*pipeline, model.injection, invert(model.injection)], model.banks(), zero_state(5))
        np.testing.assert_allclose(round_trip.amplitudes, plain.amplitudes, atol=1e-12)

    def test_injection_and_its_inverse_cancel_at_inference(self, model, rng):
        cancelling = CircuitSegment(5, model.injection.gates + invert(model.injection).gates)
        noise = sample_noise(8, 5, rng)
        np.testing.assert_allclose(
            generate_batch(replace(model, injection=cancelling), noise),
            generate_batch(replace(model, injection=None), noise),
            atol=1e-10,
        )

    def test_count_must_be_positive(self, model, rng):
        with pytest.raises(ConfigurationError):
            infer(model, 0, rng)


class TestTraining:
    def test_smoke_run(self, class_images):
        seen = []
        best, history, metrics = train(SMOKE, class_images, return_metrics=True, on_record=seen.append)
        assert len(history) == 10 and seen == history
        assert [r.iteration for r in history if r.val_frechet is not None] == [5, 10]
        for r in history:
            assert np.isfinite([r.loss_real, r.loss_fake, r.loss_disc, r.loss_gen]).all()
            assert r.loss_disc == pytest.approx(r.loss_real + r.loss_fake)
        assert metrics["best_frechet"] == min(r.val_frechet for r in history if r.val_frechet is not None)
        assert metrics["time_per_iteration"] > 0
        assert np.var(infer(best, 20, np.random.default_rng(0)), axis=0).mean() > 1e-6

    def test_same_seed_same_model(self, class_images):
        first, history_a = train(replace(SMOKE, iterations=4), class_images)
        second, history_b = train(replace(SMOKE, iterations=4), class_images)
        assert json.dumps(model_to_dict(first)) == json.dumps(model_to_dict(second))
        assert history_a == history_b

    def test_seed_changes_the_run(self, class_images):
        first, _ = train(replace(SMOKE, iterations=2), class_images)
        second, _ = train(replace(SMOKE, iterations=2, seed=1), class_images)
        assert not np.array_equal(first.gen_params.values, second.gen_params.values)

    def test_zero_iterations_returns_initial_model(self, class_images):
        config = replace(SMOKE, iterations=0)
        model, history = train(config, class_images)
        assert history == []
        expected = initial_model(config, class_images, np.random.default_rng(config.seed))
        np.testing.assert_array_equal(model.gen_params.values, expected.gen_params.values)

    @pytest.mark.parametrize(
        "ablations",
        [Ablations(no_combined=True), Ablations(no_regularization=True), Ablations(no_injection=True)],
    )
    def test_ablations_train(self, class_images, ablations):
        _, history = train(replace(SMOKE, iterations=3, eval_every=3, ablations=ablations), class_images)
        assert all(np.isfinite(r.loss_gen) for r in history)
        assert history[-1].val_frechet is not None

    def test_baseline_ignores_ablations(self, class_images):
        config = replace(SMOKE, iterations=3, ablations=Ablations(no_injection=True))
        model, history = train_baseline(config, class_images)
        assert model.config.mode is Mode.BASELINE
        assert model.config.ablations == Ablations()
        assert model.injection is None
        assert len(history) == 3

    def test_threads_do_not_change_results(self, class_images):
        serial, _ = train(replace(SMOKE, iterations=2), class_images)
        threaded, _ = train(replace(SMOKE, iterations=2), class_images, max_workers=4)
        np.testing.assert_array_equal(serial.disc_params.values, threaded.disc_params.values)

    def test_each_step_freezes_the_other_bank(self, class_images, monkeypatch):
        calls = record_passes(monkeypatch)
        config = replace(SMOKE, iterations=4)
        train(config, class_images)
        assert_steps_freeze_banks(calls, config)

    def test_too_few_images(self, class_images):
        with pytest.raises(InsufficientDataError):
            train(SMOKE, class_images[:5])


@pytest.mark.slow
@pytest.mark.parametrize(
    "ablations",
    [Ablations(no_combined=True), Ablations(no_regularization=True), Ablations(no_injection=True)],
)
def test_ablation_smoke_config(class_images, ablations):
    config = TrainConfig(iterations=50, ablations=ablations)
    _, history = train(config, class_images)
    assert len(history) == 50
    assert all(np.isfinite([r.loss_real, r.loss_fake, r.loss_gen]).all() for r in history)


MNIST_DIR = os.environ.get("ORGANIQ_MNIST_DIR")
# Wall-clock cap for one reference-configuration run
RUN_SECONDS = 15 * 60

ABLATION_RUNS = {
    "organiq": TrainConfig(),
    "baseline": TrainConfig(mode=Mode.BASELINE),
    "no_combined": TrainConfig(ablations=Ablations(no_combined=True)),
    "no_regularization": TrainConfig(ablations=Ablations(no_regularization=True)),
    "no_injection": TrainConfig(ablations=Ablations(no_injection=True)),
}


def mnist_class(class_id: int) -> np.ndarray:
    data = Path(MNIST_DIR)
    pair = read_idx_pair(data / "train-images-idx3-ubyte", data / "train-labels-idx1-ubyte")
    return filter_class(pair, class_id).images[:500]


def timed_run(config: TrainConfig, images: np.ndarray):
    start = time.perf_counter()
    model, history = train(config, images)
    elapsed = time.perf_counter() - start
    assert elapsed < RUN_SECONDS, f"{config.mode.value} seed {config.seed} took {elapsed:.0f}s"
    assert all(np.isfinite([r.loss_real, r.loss_fake, r.loss_gen]).all() for r in history)
    return model, history


def best_score(history) -> float:
    return min(r.val_frechet for r in history if r.val_frechet is not None)


@pytest.mark.slow
@pytest.mark.skipif(MNIST_DIR is None, reason="set ORGANIQ_MNIST_DIR to the MNIST IDX files")
def test_reference_runs_on_mnist_class_zero(monkeypatch):
    images = mnist_class(0)
    calls = record_passes(monkeypatch)
    scores = {}
    for mode in Mode:
        scores[mode] = []
        for seed in range(3):
            config = TrainConfig(seed=seed, mode=mode)
            calls.clear()
            model, history = timed_run(config, images)
            assert_steps_freeze_banks(calls, config)
            generated = infer(model, 100, np.random.default_rng(seed))
            assert np.var(generated, axis=0).mean() > 1e-4
            scores[mode].append(best_score(history))
    assert np.median(scores[Mode.ORGANIQ]) <= np.median(scores[Mode.BASELINE])


@pytest.mark.slow
@pytest.mark.skipif(MNIST_DIR is None, reason="set ORGANIQ_MNIST_DIR to the MNIST IDX files")
def test_ablation_table_on_mnist_class_zero(tmp_path, capsys):
    """Best validation Fréchet per run mode; written to ORGANIQ_REPORT_DIR (or tmp) as ablations.csv."""
    images = mnist_class(0)
    rows = []
    for name, config in ABLATION_RUNS.items():
        _, history = timed_run(config, images)
        rows.append((name, best_score(history)))

    report_dir = Path(os.environ.get("ORGANIQ_REPORT_DIR", tmp_path))
    report_dir.mkdir(parents=True, exist_ok=True)
    with open(report_dir / "ablations.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["mode", "best_frechet"])
        writer.writerows((name, f"{score:.6f}") for name, score in rows)
    with capsys.disabled():
        print("\nmode               best_frechet")
        for name, score in rows:
            print(f"{name:<18} {score:12.4f}")

    assert [name for name, _ in rows] == list(ABLATION_RUNS)
    assert all(np.isfinite(score) and score >= 0.0 for _, score in rows)
