"""Reference protocol configurations shipped with the package.

``rfc3626`` is the protocol's standard timing.  The ``gomez-*`` entries
are expert hand-tunings from the ad hoc networking literature that scale
the standard intervals by 1/4, 1/2, and 2.  The scaled-down pair sits at
or below the edges of the tuning ranges the optimizer searches (gomez-1
is outright outside them), so both carry a validation waiver and are
simulated verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass

from .olsr import OlsrConfig


@dataclass(frozen=True)
class NamedConfig:
    label: str
    config: OlsrConfig
    waiver: bool = False  # True: skip tuning-range validation when simulating

    def __post_init__(self):
        if not self.waiver:
            self.config.validate()


def named_configs() -> dict[str, NamedConfig]:
    entries = [
        NamedConfig("rfc3626", OlsrConfig()),
        NamedConfig("gomez-1", OlsrConfig(
            hello_interval=0.50, refresh_interval=0.50, tc_interval=1.25,
            willingness=3, neighb_hold_time=1.50, top_hold_time=3.75,
            mid_hold_time=3.75, dup_hold_time=30.0), waiver=True),
        NamedConfig("gomez-2", OlsrConfig(
            hello_interval=1.0, refresh_interval=1.0, tc_interval=2.5,
            willingness=3, neighb_hold_time=3.0, top_hold_time=7.5,
            mid_hold_time=7.5, dup_hold_time=30.0), waiver=True),
        NamedConfig("gomez-3", OlsrConfig(
            hello_interval=4.0, refresh_interval=4.0, tc_interval=10.0,
            willingness=3, neighb_hold_time=12.0, top_hold_time=20.0,
            mid_hold_time=20.0, dup_hold_time=30.0)),
    ]
    return {e.label: e for e in entries}
