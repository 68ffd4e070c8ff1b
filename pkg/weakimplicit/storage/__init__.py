"""Storage utilities: parameter archives, results CSV, PNG images."""

from weakimplicit.storage.images import (
    label_map_to_rgb,
    read_image,
    read_label_map,
    write_image,
    write_label_map,
    write_strip,
)
from weakimplicit.storage.params import load_params, save_params
from weakimplicit.storage.results import read_records, write_records

__all__ = [
    'label_map_to_rgb',
    'read_image',
    'read_label_map',
    'write_image',
    'write_label_map',
    'write_strip',
    'load_params',
    'save_params',
    'read_records',
    'write_records',
]
