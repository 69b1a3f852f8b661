"""Validate filesystem paths given on the command line."""
import argparse
import os
import os.path


def is_creatable_dir(path: str) -> bool:
    """Check whether a directory exists and is writable, or could be created.

    Args:
        path (str): The directory to check.

    Returns:
        bool: `True` if the directory is writable or creatable; `False` otherwise.
    """
    if not path:
        return False
    path = os.path.abspath(path)
    while not os.path.exists(path):
        parent = os.path.dirname(path)
        if parent == path:
            return False
        path = parent
    return os.path.isdir(path) and os.access(path, os.W_OK)


class ValidFile(argparse.Action):
    """Argparse action to require existing files."""

    def __init__(*args, **kwargs):
        """Class constructor."""
        argparse.Action.__init__(*args, **kwargs)

    def __call__(self, parser, namespace, values, option_string=None):
        if isinstance(values, (list, tuple)):
            for v in values:
                if not os.path.exists(v):
                    raise ValueError(f"Value is not an existing path [value={v}]")
            setattr(namespace, self.dest, list(values))
        elif os.path.exists(values):
            setattr(namespace, self.dest, values)
        else:
            raise ValueError(f"Value is not an existing path [value={values}]")
