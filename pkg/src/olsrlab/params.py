"""Search space over the eight tunable protocol parameters.

Optimizers work on raw real vectors; :func:`decode_params` clamps each
component into its tuning range and rounds the willingness dimension to
the nearest integer, so any finite vector decodes to a valid
:class:`~olsrlab.olsr.OlsrConfig`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .olsr import OlsrConfig


@dataclass(frozen=True)
class Dimension:
    name: str
    lower: float
    upper: float
    integer: bool = False

    @property
    def span(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class ParamSpace:
    dimensions: tuple[Dimension, ...]

    def __len__(self) -> int:
        return len(self.dimensions)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.dimensions)

    @property
    def lower(self) -> tuple[float, ...]:
        return tuple(d.lower for d in self.dimensions)

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(d.upper for d in self.dimensions)

    def clamp(self, raw) -> tuple[float, ...]:
        return tuple(
            min(max(float(v), d.lower), d.upper)
            for v, d in zip(raw, self.dimensions, strict=True)
        )

    def sample(self, rng) -> tuple[float, ...]:
        """One uniform point; works with random.Random and numpy generators."""
        return tuple(rng.uniform(d.lower, d.upper) for d in self.dimensions)


def default_param_space() -> ParamSpace:
    interval = (1.0, 30.0)
    hold = (3.0, 100.0)
    return ParamSpace(
        (
            Dimension("hello_interval", *interval),
            Dimension("refresh_interval", *interval),
            Dimension("tc_interval", *interval),
            Dimension("willingness", 0.0, 7.0, integer=True),
            Dimension("neighb_hold_time", *hold),
            Dimension("top_hold_time", *hold),
            Dimension("mid_hold_time", *hold),
            Dimension("dup_hold_time", *hold),
        )
    )


def decode_params(raw, space: ParamSpace | None = None) -> OlsrConfig:
    """Clamp-and-round a raw vector into a validated OlsrConfig."""
    if space is None:
        space = default_param_space()
    values = list(raw)
    if len(values) != len(space):
        raise ValueError(f"expected {len(space)} parameters, got {len(values)}")
    for name, v in zip(space.names, values, strict=True):
        if not math.isfinite(float(v)):
            raise ValueError(f"{name} is not finite: {v!r}")
    fields = {}
    for dim, v in zip(space.dimensions, values, strict=True):
        v = min(max(float(v), dim.lower), dim.upper)
        if dim.integer:
            # round half up, then clamp again in case of .5 at the edge
            v = int(min(max(math.floor(v + 0.5), dim.lower), dim.upper))
        fields[dim.name] = v
    return OlsrConfig(**fields).validate()


def config_to_vector(config: OlsrConfig) -> tuple[float, ...]:
    return config.as_vector()
