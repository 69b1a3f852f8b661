"""
Locate versioned artifact directories under a run's output directory.
"""

import logging
import os
import os.path
import re
import shutil

from ..errors import ArtifactMissingError

_VERSION = re.compile(r"^v(\d{3,})$")


class Artifacts:
    """Versioned artifact directories, `<root>/<kind>/vNNN`.

    A version directory is written once and never modified; re-running a stage
    creates the next version.
    """

    def __init__(self, root: str):
        """Class constructor.

        Args:
            root (str): The run output directory.
        """
        self.root = root

    def versions(self, kind: str) -> list[str]:
        """List the existing versions of an artifact kind, oldest first.

        Args:
            kind (str): Artifact kind, e.g. "data" or "checkpoints/step1".

        Returns:
            list[str]: Absolute paths of the version directories.
        """
        base = os.path.join(self.root, kind)
        if not os.path.isdir(base):
            return []
        found = []
        for name in os.listdir(base):
            m = _VERSION.match(name)
            if m and os.path.isdir(os.path.join(base, name)):
                found.append((int(m.group(1)), os.path.join(base, name)))
        return [path for _, path in sorted(found)]

    def latest(self, kind: str) -> str | None:
        """The most recent version of an artifact kind.

        Args:
            kind (str): Artifact kind.

        Returns:
            str|None: The newest version directory, or None if there is none.
        """
        versions = self.versions(kind)
        return versions[-1] if versions else None

    def require(self, kind: str) -> str:
        """The most recent version of an artifact kind, which must exist.

        Args:
            kind (str): Artifact kind.

        Raises:
            ArtifactMissingError: When no version exists.

        Returns:
            str: The newest version directory.
        """
        path = self.latest(kind)
        if path is None:
            raise ArtifactMissingError(
                f"missing artifact '{kind}' under {self.root}; run the producing "
                "command first"
            )
        return path

    def new_version(self, kind: str) -> str:
        """Create the next version directory of an artifact kind.

        Args:
            kind (str): Artifact kind.

        Returns:
            str: The newly created, empty directory.
        """
        versions = self.versions(kind)
        number = 1
        if versions:
            number = int(_VERSION.match(os.path.basename(versions[-1])).group(1)) + 1
        path = os.path.join(self.root, kind, f"v{number:03d}")
        os.makedirs(path)
        logging.getLogger(__name__).debug("created artifact directory %s", path)
        return path

    def clear(self, kind: str = None, ignore_errors: bool = False):
        """Remove artifacts.

        Args:
            kind (str, optional): Remove only this kind. Defaults to None, which
            removes everything under the root.
            ignore_errors (bool, optional): Passed directly to shutil.rmtree.
            Defaults to False.
        """
        path = self.root if kind is None else os.path.join(self.root, kind)
        shutil.rmtree(path, ignore_errors=ignore_errors)
