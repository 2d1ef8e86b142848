"""
Policy Interface
================

The stepping contract shared by COF, its ablations and the baselines:
one arm per timestep, chosen by `select_arm`, followed by `observe`.
"""

from enum import Enum
from typing import Optional, Protocol, runtime_checkable


class Algorithm(str, Enum):
    """Algorithm names accepted by experiment configs and the CLI."""
    COF = "cof"
    COF_NO_EXCLUSIVE = "cof_no_exclusive"
    COF_NO_COMBINE = "cof_no_combine"
    ETC_CS = "etc_cs"
    UCB_CS = "ucb_cs"
    TS_CS = "ts_cs"
    PE_CS_STYLE = "pe_cs_style"

    @property
    def is_cof(self) -> bool:
        return self in COF_VARIANTS


COF_VARIANTS = frozenset({Algorithm.COF, Algorithm.COF_NO_EXCLUSIVE, Algorithm.COF_NO_COMBINE})


@runtime_checkable
class Policy(Protocol):
    """One-sample-per-timestep bandit policy."""

    name: str

    @property
    def committed(self) -> Optional[int]:
        """Arm played for the rest of the horizon, once the policy has settled on it."""
        ...

    def select_arm(self, t: int, horizon: int) -> int:
        ...

    def observe(self, arm: int, reward: int) -> None:
        ...

