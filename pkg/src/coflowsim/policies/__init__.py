"""Scheduling policies, selectable by name."""

from ..core import ConfigError, SimConfig
from .base import Policy, grant_in_order
from .baselines import AaloPolicy, UncoordinatedTCP
from .offline import OFFLINE, FixedOrderPolicy, OfflinePolicy
from .queues import (ContentionRecord, assign_queue, compute_contention, contention_all,
                     dynamics_estimate, requeue_on_dynamics, residence_time, set_deadline,
                     total_bytes_queue)
from .saath import SaathPolicy, ablation

POLICY_NAMES = ("saath", "aalo", "scf", "srtf", "sebf", "lwtf", "uc-tcp", "saath-an", "saath-an-pf")


def make_policy(name: str, config: SimConfig | None = None) -> Policy:
    config = config or SimConfig()
    kw = dict(contention_scope=config.contention_scope, requeue=config.requeue)
    if name == "saath":
        return SaathPolicy("saath", **kw)
    if name in ("saath-an", "saath-an-pf"):
        return ablation(name, **kw)
    if name == "aalo":
        return AaloPolicy()
    if name == "uc-tcp":
        return UncoordinatedTCP()
    if name in OFFLINE:
        return OfflinePolicy(name)
    raise ConfigError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}")


__all__ = [
    "POLICY_NAMES", "make_policy", "Policy", "SaathPolicy", "AaloPolicy", "UncoordinatedTCP",
    "OfflinePolicy", "FixedOrderPolicy", "grant_in_order", "assign_queue", "total_bytes_queue",
    "set_deadline", "residence_time", "compute_contention", "contention_all", "ContentionRecord",
    "requeue_on_dynamics", "dynamics_estimate",
]
