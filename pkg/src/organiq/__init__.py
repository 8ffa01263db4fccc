"""OrganiQ: fully-quantum GAN training, inference and model files."""
from .encode import regularize, deregularize, plain_normalize, sample_noise, z_to_unit
from .gan import (
    Mode,
    Ablations,
    TrainConfig,
    GanModel,
    LossRecord,
    bce,
    sgd_update,
    pass_real,
    pass_fake,
    pass_generator,
    train,
    train_baseline,
    infer,
)
from .model_io import save_model, load_model, write_history, read_history

__all__ = [
    'regularize', 'deregularize', 'plain_normalize', 'sample_noise', 'z_to_unit',
    'Mode', 'Ablations', 'TrainConfig', 'GanModel', 'LossRecord', 'bce', 'sgd_update',
    'pass_real', 'pass_fake', 'pass_generator', 'train', 'train_baseline', 'infer',
    'save_model', 'load_model', 'write_history', 'read_history',
]
