"""Python interface to the bsprtl partitioning compiler and BSP executor."""

from ._core import (
    BsprtlError,
    Design,
    Partition,
    __version__,
    estimate,
    gen_bench,
    partition,
    partition_from_json,
    partition_to_json,
    simulate,
    simulate_reference,
    sweep,
)

__all__ = [
    "BsprtlError",
    "Design",
    "Partition",
    "__version__",
    "estimate",
    "gen_bench",
    "partition",
    "partition_from_json",
    "partition_to_json",
    "simulate",
    "simulate_reference",
    "sweep",
]
