"""MAT-to-TSG1 dataset converter."""

from . import cli, convert, mapping
from .convert import convert_directory, convert_file, write_tsg
from .mapping import ConversionMap

__version__ = "0.1.0"

__all__ = [
    "ConversionMap",
    "cli",
    "convert",
    "convert_directory",
    "convert_file",
    "mapping",
    "write_tsg",
]
