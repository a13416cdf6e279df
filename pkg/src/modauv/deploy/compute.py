from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

from .link import LinkMode, LinkState


class Site(enum.Enum):
    ONBOARD = "ONBOARD"
    OFFBOARD = "OFFBOARD"


@dataclass(frozen=True)
class ComputeSite:
    active: Site = Site.ONBOARD
    onboard_period_ms: float = 500.0
    offboard_period_ms: float = 50.0
    since_us: float = 0.0
    switches: int = 0

    @property
    def period_ms(self) -> float:
        return self.offboard_period_ms if self.active is Site.OFFBOARD else self.onboard_period_ms


def compute_site(cs: ComputeSite, link: LinkState, now_us: float,
                 last_response_us: Optional[float], loss_timeout_ms: float = 200.0,
                 recovery_hold_ms: float = 2000.0) -> ComputeSite:
    """Pick where detection runs this tick.

    Offboard requires a tethered, live link. While offboard, silence longer
    than ``loss_timeout_ms`` (measured from the later of the last response
    and the switch) falls back onboard. Going back offboard after a failure
    requires the link to have been up for ``recovery_hold_ms``.
    """
    def to(site):
        if site is cs.active:
            return cs
        return replace(cs, active=site, since_us=now_us, switches=cs.switches + 1)

    if link.mode is LinkMode.UNTETHERED or not link.up:
        return to(Site.ONBOARD)
    if cs.active is Site.OFFBOARD:
        heard = cs.since_us if last_response_us is None else max(last_response_us, cs.since_us)
        if now_us - heard > loss_timeout_ms * 1000.0:
            return to(Site.ONBOARD)
        return cs
    if cs.switches == 0:
        return to(Site.OFFBOARD)
    up_since = link.up_since if link.up_since is not None else 0.0
    if now_us - max(up_since, cs.since_us) >= recovery_hold_ms * 1000.0:
        return to(Site.OFFBOARD)
    return cs
