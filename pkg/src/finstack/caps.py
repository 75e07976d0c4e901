"""Enumeration caps.

Every exhaustive search in the library is bounded by a `Caps` value; crossing
a bound raises `CapExceeded` instead of hanging.  The defaults match the CLI
flags `--max-homset`, `--max-sieves-per-object`, `--max-descent`,
`--max-closure`.
"""

from dataclasses import dataclass


class CapExceeded(RuntimeError):
    """An enumeration grew past its configured cap."""


@dataclass(frozen=True)
class Caps:
    max_homset: int = 64
    max_sieves_per_object: int = 65536
    max_descent: int = 100_000
    max_closure: int = 10_000


DEFAULT = Caps()


def check(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise CapExceeded(f"{what}: {n} exceeds cap {cap}")
