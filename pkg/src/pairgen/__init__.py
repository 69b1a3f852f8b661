"""Import the public API methods."""
from .initializer import get_device, init_torch
