"""Import modules."""
from .artifacts import Artifacts
from .pathvalidator import ValidFile, is_creatable_dir
from .quantity_units import to_si, validate_quantity
from .seeds import derive_seed
