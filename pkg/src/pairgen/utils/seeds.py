"""Seed derivation shared by every stage."""
import hashlib


def derive_seed(seed: int, stage: str) -> int:
    """Derive a stage seed from the global seed.

    The stage seed is the first four bytes (big-endian) of
    SHA-256("<stage>:<seed>"), so a stage can be re-run on its own and still see the
    same random stream.

    Args:
        seed (int): The global seed.
        stage (str): Stage name, e.g. "synth" or "train-diff".

    Returns:
        int: A non-negative 32-bit seed.
    """
    digest = hashlib.sha256(f"{stage}:{int(seed)}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")
