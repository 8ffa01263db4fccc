"""Dataset ingestion (IDX) and image emission (PGM)."""
from .idx import ImageSet, read_idx_images, read_idx_labels, read_idx_pair, filter_class, write_idx
from .pgm import write_pgm, read_pgm, read_pgm_dir

__all__ = [
    'ImageSet', 'read_idx_images', 'read_idx_labels', 'read_idx_pair', 'filter_class', 'write_idx',
    'write_pgm', 'read_pgm', 'read_pgm_dir',
]
