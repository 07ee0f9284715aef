"""Robot navigation policies: observation in, velocity command out."""

from __future__ import annotations

from dataclasses import dataclass, field

from groupnav.geom import Vec2
from groupnav.orca import NEIGHBOR_DIST, TAU, orca_velocity, preferred_velocity
from groupnav.sim import WorldObservation
from groupnav.social_force import SFParams, sf_velocity


@dataclass
class OrcaPolicy:
    """The robot runs ORCA against every visible human, assuming reciprocity."""

    dt: float = 0.25
    tau: float = TAU
    neighbor_dist: float = NEIGHBOR_DIST
    name: str = "orca"

    def __call__(self, obs: WorldObservation) -> Vec2:
        robot = obs.robot
        v_pref = preferred_velocity(robot.position, obs.goal, robot.pref_speed)
        return orca_velocity(
            robot, obs.visible_humans, v_pref, self.tau, self.dt, robot.pref_speed, self.neighbor_dist
        )


@dataclass
class SocialForcePolicy:
    dt: float = 0.25
    params: SFParams = field(default_factory=SFParams)
    name: str = "sf"

    def __call__(self, obs: WorldObservation) -> Vec2:
        robot = obs.robot
        return sf_velocity(robot, obs.visible_humans, obs.goal, self.params, self.dt, robot.pref_speed)


def stationary_policy(obs: WorldObservation) -> Vec2:
    return Vec2(0.0, 0.0)
