"""Seeded train/test splits of random instances."""

from __future__ import annotations

from ._rng import child_seed
from .core import Instance, generate_instance

SCALES = ((6, 6), (10, 10), (15, 10))


def parse_scale(text: str | tuple[int, int]) -> tuple[int, int]:
    if isinstance(text, tuple):
        return text
    j, _, m = text.lower().partition("x")
    return int(j), int(m)


def scale_str(scale: tuple[int, int]) -> str:
    return f"{scale[0]}x{scale[1]}"


def instance_seed(seed: int, scale: tuple[int, int], split: str, index: int) -> int:
    return child_seed(seed, scale[0], scale[1], split, index)


def make_split(scale: tuple[int, int] | str, count: int, split: str, seed: int = 0) -> list[Instance]:
    """``count`` instances named ``{J}x{M}-{split}-{i:03d}``.

    Each instance's seed depends only on (seed, scale, split, index), so a
    shorter split is a prefix of a longer one.
    """
    scale = parse_scale(scale)
    return [
        generate_instance(scale[0], scale[1], instance_seed(seed, scale, split, i),
                          id=f"{scale_str(scale)}-{split}-{i:03d}")
        for i in range(count)
    ]
