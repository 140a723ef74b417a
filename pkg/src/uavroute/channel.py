"""Air-to-ground link model: LOS probability, average gain, and SINR rate.

All functions broadcast over numpy arrays of user positions. Angles passed
to :func:`los_probability` are in degrees; the beamwidth is in radians.

Coverage uses the elevation form ``theta >= 90 deg - beamwidth / 2`` (users
inside the cone below the UAV). The compact "theta >= beamwidth / 2" variant
of the gain formula would shrink the footprint to ~16 m at Table-I values,
contradicting the requirement that one cone covers a whole region, so it is
not used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .scenario import PhysicsParams


class Interferer(NamedTuple):
    x: float
    y: float
    power: float


@dataclass(frozen=True)
class LinkGeometry:
    """Distance and elevation between a UAV at altitude ``H`` and a ground user."""

    distance: np.ndarray
    elevation_deg: np.ndarray

    @classmethod
    def between(cls, uav_xy, user_xy, altitude: float) -> "LinkGeometry":
        ux, uy = uav_xy
        dx = np.asarray(user_xy[0], dtype=float) - ux
        dy = np.asarray(user_xy[1], dtype=float) - uy
        d = np.sqrt(dx * dx + dy * dy + altitude * altitude)
        return cls(d, elevation_deg(d, altitude))


def elevation_deg(distance, altitude):
    ratio = np.minimum(altitude / np.asarray(distance, dtype=float), 1.0)
    return np.degrees(np.arcsin(ratio))


def cone_threshold_deg(beamwidth: float) -> float:
    return 90.0 - math.degrees(beamwidth) / 2.0


def los_probability(theta_deg, psi: float, zeta: float):
    return 1.0 / (1.0 + psi * np.exp(-zeta * (np.asarray(theta_deg, dtype=float) - psi)))


def nlos_probability(theta_deg, psi: float, zeta: float):
    return 1.0 - los_probability(theta_deg, psi, zeta)


def gain_from_geometry(distance, theta_deg, beamwidth: float, phys: PhysicsParams):
    p_los = los_probability(theta_deg, phys.psi, phys.zeta)
    excess = phys.eta_los * p_los + phys.eta_nlos * (1.0 - p_los)
    g = (phys.k0 * np.asarray(distance, dtype=float)) ** (-phys.path_loss_exponent) / excess
    return np.where(np.asarray(theta_deg) >= cone_threshold_deg(beamwidth), g, 0.0)


def channel_gain(uav_xy, user_xy, altitude: float, beamwidth: float, phys: PhysicsParams):
    """Average linear gain; zero for users outside the coverage cone."""
    geom = LinkGeometry.between(uav_xy, user_xy, altitude)
    return gain_from_geometry(geom.distance, geom.elevation_deg, beamwidth, phys)


def user_rate(
    gain,
    power: float,
    user_xy,
    interferers: Sequence[Interferer],
    altitude: float,
    beamwidth: float,
    phys: PhysicsParams,
):
    """Rate in nats/s/Hz of users at ``user_xy`` served with ``gain`` at ``power``.

    Each interferer's gain toward the user comes from its own position and
    cone; moving UAVs do not transmit and should not be listed.
    """
    noise = phys.noise_w
    interference = 0.0
    for itf in interferers:
        interference = interference + itf.power * channel_gain(
            (itf.x, itf.y), user_xy, altitude, beamwidth, phys
        )
    return np.log1p(power * np.asarray(gain) / (interference + noise))
