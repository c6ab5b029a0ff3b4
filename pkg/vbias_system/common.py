import sys
import warnings
from typing import Any, Optional, Sequence

import numpy as np
import orjson

# Global flag to control logging output
_QUIET_MODE = False

def set_quiet_mode(quiet: bool = True):
    """Enable or disable quiet mode globally."""
    global _QUIET_MODE
    _QUIET_MODE = quiet

def log(msg: str):
    """Simple, unified logging function. Respects global quiet mode."""
    if not _QUIET_MODE:
        print(f"[LOG] {msg}", file=sys.stderr, flush=True)


def dumps(obj: Any) -> bytes:
    """Serializes an object to a formatted JSON byte string."""
    return orjson.dumps(
        obj,
        option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY,
    )


def root_entropy(seed: Optional[int]) -> int:
    """Resolves a user seed into the entropy all substreams are keyed on.

    `None` draws fresh OS entropy once, so every substream of a single run
    still shares one root.
    """
    return np.random.SeedSequence(seed).entropy


def substream(entropy: int, *key: int) -> np.random.Generator:
    """Counter-based generator keyed by (entropy, key...).

    The same key always yields the same stream, regardless of which worker
    thread asks for it or in which order.
    """
    seq = np.random.SeedSequence(entropy, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def as_name_tuple(names: Optional[Sequence[str]]) -> tuple:
    """Normalises a covariate list given as None, a string or a sequence."""
    if names is None:
        return ()
    if isinstance(names, str):
        return tuple(n.strip() for n in names.split(",") if n.strip())
    return tuple(names)


def warn_and_record(notes: list, category: type, message: str) -> None:
    """Emits a warning and keeps its text for the result metadata."""
    warnings.warn(message, category, stacklevel=3)
    notes.append(f"{category.__name__}: {message}")
