"""Model file (versioned JSON) and loss-history CSV."""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np

from analysis.pca import MinMaxScaler, PcaModel
from handling_errors import ModelFileError
from organiq.gan import GanModel, LossRecord, TrainConfig
from qsim.circuit import Bank, ParameterBank, injection_from_angles

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
HISTORY_HEADER = ["iteration", "loss_real", "loss_fake", "loss_disc", "loss_gen", "val_frechet"]


def model_to_dict(model: GanModel) -> dict:
    injection_angles = model.injection.constant_angles() if model.injection is not None else []
    return {
        "format_version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "gen_params": model.gen_params.values.tolist(),
        "disc_params": model.disc_params.values.tolist(),
        "injection_angles": injection_angles,
        "pca_mean": model.pca.mean.tolist(),
        "pca_components": model.pca.components.tolist(),
        "scaler_lo": model.scaler.lo.tolist(),
        "scaler_hi": model.scaler.hi.tolist(),
        "feature_norm": model.feature_norm,
        "train_seed": model.config.seed,
    }


def model_from_dict(data: dict) -> GanModel:
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFileError(f"Unsupported model format version {version!r} (expected {FORMAT_VERSION})")
    try:
        config = TrainConfig.from_dict(data["config"]).validate()
        gen = ParameterBank(Bank.GENERATOR, data["gen_params"])
        disc = ParameterBank(Bank.DISCRIMINATOR, data["disc_params"])
        angles = data["injection_angles"]
        injection = injection_from_angles(config.n_qubits, angles) if angles else None
        pca = PcaModel(np.asarray(data["pca_mean"], dtype=np.float64), np.asarray(data["pca_components"], dtype=np.float64))
        scaler = MinMaxScaler(np.asarray(data["scaler_lo"], dtype=np.float64), np.asarray(data["scaler_hi"], dtype=np.float64))
        feature_norm = float(data["feature_norm"])
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFileError(f"Malformed model file: {e}") from e

    problems = []
    if len(gen) != config.n_params or len(disc) != config.n_params:
        problems.append(f"banks must hold {config.n_params} parameters")
    if pca.components.ndim != 2 or pca.components.shape != (config.n_features, len(pca.mean)):
        problems.append(f"pca_components must be {config.n_features} x {len(pca.mean)}")
    if scaler.lo.shape != (config.n_features,) or scaler.hi.shape != (config.n_features,):
        problems.append(f"scaler bounds must have {config.n_features} entries")
    if (injection is not None) != config.uses_injection:
        problems.append("injection angles do not match the configured mode")
    if problems:
        raise ModelFileError("Inconsistent model file: " + "; ".join(problems))
    return GanModel(config, gen, disc, injection, pca, scaler, feature_norm)


def save_model(model: GanModel, path: str | Path) -> None:
    """Write the model as sorted-key JSON; identical models give identical bytes."""
    text = json.dumps(model_to_dict(model), sort_keys=True, indent=1, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")
    logger.debug("Model written to %s", path)


def load_model(path: str | Path) -> GanModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ModelFileError(f"{path}: not a model file ({e})") from e
    if not isinstance(data, dict):
        raise ModelFileError(f"{path}: not a model file")
    return model_from_dict(data)


def _cell(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_history(records: list[LossRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(HISTORY_HEADER)
        for r in records:
            writer.writerow([r.iteration, _cell(r.loss_real), _cell(r.loss_fake), _cell(r.loss_disc), _cell(r.loss_gen), _cell(r.val_frechet)])


def read_history(path: str | Path) -> list[LossRecord]:
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != HISTORY_HEADER:
            raise ModelFileError(f"{path}: unexpected history header {reader.fieldnames}")
        return [
            LossRecord(
                int(row["iteration"]),
                float(row["loss_real"]),
                float(row["loss_fake"]),
                float(row["loss_disc"]),
                float(row["loss_gen"]),
                float(row["val_frechet"]) if row["val_frechet"] else None,
            )
            for row in reader
        ]
