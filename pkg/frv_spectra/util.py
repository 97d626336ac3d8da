import hashlib
from datetime import timedelta
from pathlib import Path
from typing import List

from .errors import InputError


def format_elapsed(seconds: float) -> str:
    """
    Format an elapsed wall time into a human-readable string.

    Args:
        seconds (float): Elapsed time in seconds.

    Returns:
        str: e.g. "1 minute, 3 seconds" or "250 milliseconds".
    """
    delta = timedelta(seconds=seconds)

    result = []
    if hours := delta.days * 24 + delta.seconds // 3600:
        result.append(f"{hours} hour{'s' if hours > 1 else ''}")
    if minutes := (delta.seconds % 3600) // 60:
        result.append(f"{minutes} minute{'s' if minutes > 1 else ''}")
    if secs := delta.seconds % 60:
        result.append(f"{secs} second{'s' if secs > 1 else ''}")
    elif milliseconds := delta.microseconds // 1000:
        result.append(f"{milliseconds} millisecond{'s' if milliseconds > 1 else ''}")
    elif microseconds := delta.microseconds:
        result.append(f"{microseconds} microsecond{'s' if microseconds > 1 else ''}")

    return ", ".join(result) or "0 seconds"


def sha256_file(path: str | Path) -> str:
    """
    Hash a file's contents.

    Args:
        path (str | Path): File to hash.

    Returns:
        str: Hex digest of the SHA-256 of the file.
    """
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def parse_float_list(text: str | None) -> List[float]:
    """
    Parse a comma-separated list of floats as given on the command line.

    Args:
        text (str | None): e.g. "1,0.3". None or "" yields an empty list.

    Returns:
        List[float]: The parsed values.

    Raises:
        InputError: If an entry is not a number.
    """
    if not text:
        return []
    values = []
    for item in text.split(","):
        try:
            values.append(float(item))
        except ValueError:
            raise InputError(f"Not a number: {item!r} in {text!r}") from None
    return values
