"""Regions, slots, fleet and physical parameters of a planning scenario.

Regions and slots are 1-based everywhere in the public API, matching the
``a(l, t) = l + L (t - 1)`` task numbering. Arrays indexed by region or slot
are 0-based internally (``array[l - 1, t - 1]``).

Configuration files are TOML with ``[topology]``, ``[fleet]``, ``[physics]``,
``[economics]``, ``[horizon]``, ``[demand]`` and optional ``[solver]``
sections. Logarithmic entries (``*_dbm``, ``*_db``) are converted to linear
watts / ratios at load time; all downstream math is linear.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SPEED_OF_LIGHT = 299_792_458.0

# Table I of the reference system model.
TABLE_I = {
    "power_dbm": 26.0,
    "altitude_m": 90.0,
    "beamwidth_rad": 2.7854,
    "carrier_hz": 2e9,
    "noise_dbm": -96.0,
    "path_loss_exponent": 2.0,
    "eta_los_db": 3.0,
    "eta_nlos_db": 23.0,
    "psi": 11.95,
    "zeta": 0.14,
    "rotor": (580.65, 790.67, 0.01),
    "tip_speed_mps": 200.0,
    "induced_velocity_mps": 7.2,
}

# Not given by the model; exposed as config fields. With beta = 1 a task is
# worth ~6e8 against a ~0.8 hover charge, so costs would never matter; 1e-8
# brings a Table-I task to ~6.5, a few hover charges.
DEFAULT_BETA = 1e-8
DEFAULT_BANDWIDTH_HZ = 1e6
DEFAULT_SLOT_S = 60.0
DEFAULT_GAMMA = 1e-5
DEFAULT_STATE_CAP = 1_000_000


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def kmh_to_mps(kmh):
    return np.asarray(kmh, dtype=float) / 3.6


def task_index(l: int, t: int, L: int, T: int | None = None) -> int:
    """Map region ``l`` and slot ``t`` (both 1-based) to task index ``l + L(t-1)``."""
    if not 1 <= l <= L:
        raise ValueError(f"region {l} outside 1..{L}")
    if t < 1 or (T is not None and t > T):
        raise ValueError(f"slot {t} outside 1..{T if T is not None else 'T'}")
    return l + L * (t - 1)


def task_region_slot(k: int, L: int) -> tuple[int, int]:
    """Inverse of :func:`task_index`."""
    if k < 1:
        raise ValueError(f"task index {k} must be >= 1")
    return (k - 1) % L + 1, (k - 1) // L + 1


@dataclass(frozen=True)
class RegionTopology:
    side_length: float
    centers: np.ndarray
    layout_kind: str = "hexagonal"

    def __post_init__(self):
        centers = np.array(self.centers, dtype=float).reshape(-1, 2)
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        if self.layout_kind not in ("hexagonal", "explicit"):
            raise ConfigError("topology.layout", f"unknown layout {self.layout_kind!r}")
        if not self.side_length > 0:
            raise ConfigError("topology.side_length_m", "must be > 0")
        if len(centers) < 1:
            raise ConfigError("topology.centers", "at least one region is required")
        if len(centers) > 1:
            gaps = _pairwise_distances(centers)
            np.fill_diagonal(gaps, np.inf)
            if gaps.min() <= 1e-9 * self.side_length:
                i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
                raise ConfigError(
                    "topology.centers", f"regions {i + 1} and {j + 1} share a center"
                )

    @property
    def region_count(self) -> int:
        return len(self.centers)

    @property
    def region_area(self) -> float:
        return 1.5 * math.sqrt(3.0) * self.side_length**2

    def distances(self) -> np.ndarray:
        """Center-to-center distance matrix (meters)."""
        return _pairwise_distances(self.centers)

    def neighbors(self, l: int, tol: float = 1e-6) -> list[int]:
        d = self.distances()[l - 1]
        spacing = math.sqrt(3.0) * self.side_length
        return [j + 1 for j in np.flatnonzero(np.abs(d - spacing) <= tol * spacing)]


def _pairwise_distances(points):
    diff = points[:, None, :] - points[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def _axial_to_xy(q, r, R):
    # flat-top hexagons: a vertex lies on the +x axis of every region
    return 1.5 * R * q, math.sqrt(3.0) * R * (r + q / 2.0)


def _centered_hex_rings(L):
    n = 0
    while 3 * n * (n + 1) + 1 < L:
        n += 1
    return n


def _ring_cells(L):
    """First ``L`` axial cells of the ring-by-ring spiral around the origin."""
    axial = [(0, 0)]
    directions = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)]
    for radius in range(1, _centered_hex_rings(L) + 1):
        q, r = -radius, radius  # start on the ring, walk its six sides
        for dq, dr in directions:
            for _ in range(radius):
                axial.append((q, r))
                q, r = q + dq, r + dr
    return axial[:L]


def build_hex_topology(L: int, R: float) -> RegionTopology:
    """Seamless flat-top hexagonal tiling with side ``R``.

    Perfect squares (4, 9, 16, 36, ...) are laid out as an n-by-n rhombus
    numbered row-major. Any other count takes the first ``L`` cells of a
    ring-by-ring spiral around the origin, so centered hexagonal numbers
    (7, 19, 37, ...) give full rings. Adjacent centers are ``sqrt(3) * R``
    apart.
    """
    if R <= 0:
        raise ConfigError("topology.side_length_m", "must be > 0")
    if L < 1:
        raise ConfigError("topology.regions", f"need at least one region, got {L}")
    n = math.isqrt(L)
    if n * n == L and L > 1:
        axial = [(col, row) for row in range(n) for col in range(n)]
    else:
        axial = _ring_cells(L)
    centers = [_axial_to_xy(q, r, R) for q, r in axial]
    return RegionTopology(side_length=R, centers=np.array(centers), layout_kind="hexagonal")


@dataclass(frozen=True)
class Fleet:
    speeds: np.ndarray  # m/s per UAV
    powers: np.ndarray  # watts per UAV
    altitude: float
    beamwidth: float  # radians
    sources: tuple[int, ...]
    destinations: tuple[int, ...]

    def __post_init__(self):
        speeds = np.array(self.speeds, dtype=float).reshape(-1)
        powers = np.array(self.powers, dtype=float).reshape(-1)
        speeds.setflags(write=False)
        powers.setflags(write=False)
        object.__setattr__(self, "speeds", speeds)
        object.__setattr__(self, "powers", powers)
        object.__setattr__(self, "sources", tuple(int(s) for s in self.sources))
        object.__setattr__(self, "destinations", tuple(int(s) for s in self.destinations))
        M = len(speeds)
        if M < 1:
            raise ConfigError("fleet.count", "at least one UAV is required")
        for name, values in (("power", powers), ("sources", self.sources),
                             ("destinations", self.destinations)):
            if len(values) != M:
                raise ConfigError(f"fleet.{name}", f"expected {M} entries, got {len(values)}")
        if np.any(speeds <= 0):
            raise ConfigError("fleet.speed", "every UAV speed must be > 0")
        if np.any(powers <= 0):
            raise ConfigError("fleet.power", "every transmit power must be > 0")
        if not self.altitude > 0:
            raise ConfigError("fleet.altitude_m", "must be > 0")
        if not 0 < self.beamwidth < math.pi:
            raise ConfigError("fleet.beamwidth_rad", "must lie in (0, pi)")

    @property
    def uav_count(self) -> int:
        return len(self.speeds)

    @property
    def coverage_radius(self) -> float:
        return self.altitude * math.tan(self.beamwidth / 2.0)


@dataclass(frozen=True)
class PhysicsParams:
    carrier_hz: float = TABLE_I["carrier_hz"]
    noise_w: float = float(dbm_to_watts(TABLE_I["noise_dbm"]))
    path_loss_exponent: float = TABLE_I["path_loss_exponent"]
    eta_los: float = float(db_to_linear(TABLE_I["eta_los_db"]))
    eta_nlos: float = float(db_to_linear(TABLE_I["eta_nlos_db"]))
    psi: float = TABLE_I["psi"]
    zeta: float = TABLE_I["zeta"]
    rotor: tuple[float, float, float] = TABLE_I["rotor"]
    tip_speed: float = TABLE_I["tip_speed_mps"]
    induced_velocity: float = TABLE_I["induced_velocity_mps"]
    slot_s: float = DEFAULT_SLOT_S
    beta: float = DEFAULT_BETA
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ
    gamma_move: float = DEFAULT_GAMMA
    gamma_hover: float = DEFAULT_GAMMA

    def __post_init__(self):
        object.__setattr__(self, "rotor", tuple(float(x) for x in self.rotor))
        positive = ("carrier_hz", "noise_w", "path_loss_exponent", "psi", "zeta",
                    "tip_speed", "induced_velocity", "slot_s", "beta", "bandwidth_hz")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"physics.{name}", "must be > 0")
        if len(self.rotor) != 3 or min(self.rotor) <= 0:
            raise ConfigError("physics.rotor", "needs three positive coefficients")
        if not self.eta_nlos > self.eta_los > 1:
            raise ConfigError(
                "physics.eta", "excess losses must satisfy eta_nlos > eta_los > 1"
            )
        if self.gamma_move < 0 or self.gamma_hover < 0:
            raise ConfigError("economics.gamma", "cost weights must be >= 0")

    @property
    def k0(self) -> float:
        return 4.0 * math.pi * self.carrier_hz / SPEED_OF_LIGHT


@dataclass(frozen=True)
class DemandConfig:
    """Initial user counts and mobility transitions; compartment ``L`` is outside."""

    initial_counts: np.ndarray
    transition: np.ndarray  # (L+1, L+1); diagonal ignored
    outside_initial: float = 0.0

    def __post_init__(self):
        counts = np.array(self.initial_counts, dtype=float).reshape(-1)
        trans = np.array(self.transition, dtype=float)
        counts.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "initial_counts", counts)
        object.__setattr__(self, "transition", trans)
        object.__setattr__(self, "outside_initial", float(self.outside_initial))


@dataclass(frozen=True)
class Options:
    legacy_crs_cost: bool = False
    literal_virtual_edge: bool = False
    state_cap: int = DEFAULT_STATE_CAP


@dataclass(frozen=True)
class Scenario:
    topology: RegionTopology
    fleet: Fleet
    physics: PhysicsParams
    horizon: int
    demand: DemandConfig
    options: Options = field(default_factory=Options)
    control_station: int = 1

    def __post_init__(self):
        L = self.topology.region_count
        if L < 2:
            raise ConfigError("topology.regions", "a scenario needs L > 1 regions")
        if self.horizon < 1:
            raise ConfigError("horizon.slots", "must be >= 1")
        for name in ("sources", "destinations"):
            for r in getattr(self.fleet, name):
                if not 1 <= r <= L:
                    raise ConfigError(f"fleet.{name}", f"region {r} outside 1..{L}")
        if not 1 <= self.control_station <= L:
            raise ConfigError("fleet.control_station", f"region outside 1..{L}")
        # the cone must at least cover one whole region (2R/sqrt(3) >= circumradius R)
        need = 2.0 * self.topology.side_length / math.sqrt(3.0)
        if self.fleet.coverage_radius < need:
            raise ConfigError(
                "fleet.beamwidth_rad",
                f"coverage radius {self.fleet.coverage_radius:.1f} m is below "
                f"2R/sqrt(3) = {need:.1f} m",
            )
        d = self.demand
        if d.initial_counts.shape != (L,):
            raise ConfigError("demand.initial_counts", f"expected {L} entries")
        if d.transition.shape != (L + 1, L + 1):
            raise ConfigError("demand.transition", f"expected shape ({L + 1}, {L + 1})")

    @property
    def L(self) -> int:
        return self.topology.region_count

    @property
    def T(self) -> int:
        return self.horizon

    @property
    def M(self) -> int:
        return self.fleet.uav_count

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def with_fleet(self, **changes) -> "Scenario":
        return dataclasses.replace(self, fleet=dataclasses.replace(self.fleet, **changes))

    def with_physics(self, **changes) -> "Scenario":
        return dataclasses.replace(self, physics=dataclasses.replace(self.physics, **changes))


def static_demand(L: int, count: float = 100.0) -> DemandConfig:
    return DemandConfig(np.full(L, float(count)), np.zeros((L + 1, L + 1)))


def make_scenario(
    L: int = 9,
    M: int = 2,
    T: int = 20,
    *,
    R: float = 150.0,
    speed_kmh: float | Sequence[float] = 70.0,
    power_dbm: float | Sequence[float] = TABLE_I["power_dbm"],
    sources: Sequence[int] | None = None,
    destinations: Sequence[int] | None = None,
    demand: DemandConfig | None = None,
    physics: PhysicsParams | None = None,
    options: Options | None = None,
    control_station: int | None = None,
) -> Scenario:
    """Table-I scenario on a built-in hexagonal layout."""
    topo = build_hex_topology(L, R)
    station = control_station or (3 if L >= 3 else 1)
    speeds = np.broadcast_to(kmh_to_mps(speed_kmh), (M,))
    powers = np.broadcast_to(dbm_to_watts(power_dbm), (M,))
    fleet = Fleet(
        speeds=speeds,
        powers=powers,
        altitude=TABLE_I["altitude_m"],
        beamwidth=TABLE_I["beamwidth_rad"],
        sources=tuple(sources) if sources is not None else (station,) * M,
        destinations=tuple(destinations) if destinations is not None else (station,) * M,
    )
    return Scenario(
        topology=topo,
        fleet=fleet,
        physics=physics or PhysicsParams(),
        horizon=T,
        demand=demand if demand is not None else static_demand(L),
        options=options or Options(),
        control_station=station,
    )


# --- config loading --------------------------------------------------------

_SECTIONS = {"topology", "fleet", "physics", "economics", "horizon", "demand", "solver"}


def load_scenario(source: str | Path | Mapping[str, Any]) -> Scenario:
    """Parse and validate a scenario from TOML text, a TOML path, or a dict."""
    if isinstance(source, Mapping):
        doc = dict(source)
    else:
        text = source
        if isinstance(source, Path) or (
            isinstance(source, str) and "\n" not in source and source.endswith(".toml")
        ):
            text = Path(source).read_text()
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("<file>", f"invalid TOML: {exc}") from None
    unknown = set(doc) - _SECTIONS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    for required in ("topology", "fleet", "horizon"):
        if required not in doc:
            raise ConfigError(required, "section is required")
    topo = _parse_topology(doc["topology"])
    L = topo.region_count
    horizon = doc["horizon"]
    T = _num(horizon, "horizon", "slots", kind=int)
    slot_s = _num(horizon, "horizon", "slot_s", default=DEFAULT_SLOT_S)
    fleet, station = _parse_fleet(doc["fleet"], L)
    physics, options = _parse_physics(
        doc.get("physics", {}), doc.get("economics", {}), doc.get("solver", {}), slot_s
    )
    demand = _parse_demand(doc.get("demand"), L)
    return Scenario(
        topology=topo,
        fleet=fleet,
        physics=physics,
        horizon=T,
        demand=demand,
        options=options,
        control_station=station,
    )


def _num(section, sname, key, default=None, kind=float):
    if key not in section:
        if default is None:
            raise ConfigError(f"{sname}.{key}", "missing required field")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{sname}.{key}", f"expected a number, got {value!r}")
    if kind is int and value != int(value):
        raise ConfigError(f"{sname}.{key}", f"expected an integer, got {value!r}")
    return kind(value)


def _one_of(section, sname, keys, default=None):
    present = [k for k in keys if k in section]
    if len(present) > 1:
        raise ConfigError(f"{sname}.{present[1]}", f"conflicts with {sname}.{present[0]}")
    if not present:
        if default is None:
            raise ConfigError(f"{sname}.{keys[0]}", "missing required field")
        return keys[0], default
    return present[0], section[present[0]]


def _parse_topology(sec):
    layout = sec.get("layout", "hexagonal")
    R = _num(sec, "topology", "side_length_m", default=150.0)
    if layout == "explicit":
        if "centers" not in sec:
            raise ConfigError("topology.centers", "required for layout = \"explicit\"")
        centers = np.asarray(sec["centers"], dtype=float)
        if centers.ndim != 2 or centers.shape[1] != 2:
            raise ConfigError("topology.centers", "expected a list of [x, y] pairs")
        if "regions" in sec and sec["regions"] != len(centers):
            raise ConfigError("topology.regions", "does not match number of centers")
        return RegionTopology(side_length=R, centers=centers, layout_kind="explicit")
    if layout != "hexagonal":
        raise ConfigError("topology.layout", f"unknown layout {layout!r}")
    L = _num(sec, "topology", "regions", kind=int)
    if L < 1:
        raise ConfigError("topology.regions", "must be >= 1")
    return build_hex_topology(L, R)


def _per_uav(value, M, field_name):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        return np.full(M, arr[0])
    if arr.size != M:
        raise ConfigError(field_name, f"expected 1 or {M} values, got {arr.size}")
    return arr


def _parse_fleet(sec, L):
    M = _num(sec, "fleet", "count", kind=int)
    if M < 1:
        raise ConfigError("fleet.count", "must be >= 1")
    key, raw = _one_of(sec, "fleet", ("speed_kmh", "speed_mps"))
    speeds = _per_uav(raw, M, f"fleet.{key}")
    if key == "speed_kmh":
        speeds = kmh_to_mps(speeds)
    key, raw = _one_of(sec, "fleet", ("power_dbm", "power_w"), default=TABLE_I["power_dbm"])
    powers = _per_uav(raw, M, f"fleet.{key}")
    if key == "power_dbm":
        powers = dbm_to_watts(powers)
    station = int(sec.get("control_station", 3 if L >= 3 else 1))
    sources = sec.get("sources", [station] * M)
    destinations = sec.get("destinations", sources)
    fleet = Fleet(
        speeds=speeds,
        powers=powers,
        altitude=_num(sec, "fleet", "altitude_m", default=TABLE_I["altitude_m"]),
        beamwidth=_num(sec, "fleet", "beamwidth_rad", default=TABLE_I["beamwidth_rad"]),
        sources=tuple(sources),
        destinations=tuple(destinations),
    )
    return fleet, station


def _parse_physics(phys, econ, solver, slot_s):
    _, noise = _one_of(phys, "physics", ("noise_dbm", "noise_w"), default=TABLE_I["noise_dbm"])
    noise_w = float(dbm_to_watts(noise)) if "noise_w" not in phys else float(noise)
    eta = []
    for name in ("eta_los", "eta_nlos"):
        key, val = _one_of(phys, "physics", (f"{name}_db", name), default=TABLE_I[f"{name}_db"])
        eta.append(float(db_to_linear(val)) if key.endswith("_db") else float(val))
    rotor = phys.get("rotor", TABLE_I["rotor"])
    if not isinstance(rotor, (list, tuple)) or len(rotor) != 3:
        raise ConfigError("physics.rotor", "expected [Lambda0, Lambda1, Lambda2]")
    physics = PhysicsParams(
        carrier_hz=_num(phys, "physics", "carrier_hz", default=TABLE_I["carrier_hz"]),
        noise_w=noise_w,
        path_loss_exponent=_num(phys, "physics", "path_loss_exponent",
                                default=TABLE_I["path_loss_exponent"]),
        eta_los=eta[0],
        eta_nlos=eta[1],
        psi=_num(phys, "physics", "psi", default=TABLE_I["psi"]),
        zeta=_num(phys, "physics", "zeta", default=TABLE_I["zeta"]),
        rotor=tuple(rotor),
        tip_speed=_num(phys, "physics", "tip_speed_mps", default=TABLE_I["tip_speed_mps"]),
        induced_velocity=_num(phys, "physics", "induced_velocity_mps",
                              default=TABLE_I["induced_velocity_mps"]),
        slot_s=slot_s,
        beta=_num(econ, "economics", "beta", default=DEFAULT_BETA),
        bandwidth_hz=_num(econ, "economics", "bandwidth_hz", default=DEFAULT_BANDWIDTH_HZ),
        gamma_move=_num(econ, "economics", "gamma_move", default=DEFAULT_GAMMA),
        gamma_hover=_num(econ, "economics", "gamma_hover", default=DEFAULT_GAMMA),
    )
    options = Options(
        legacy_crs_cost=bool(econ.get("legacy_crs_cost", False)),
        literal_virtual_edge=bool(econ.get("literal_virtual_edge", False)),
        state_cap=int(solver.get("state_cap", DEFAULT_STATE_CAP)),
    )
    return physics, options


def _parse_demand(sec, L):
    if sec is None:
        return static_demand(L)
    counts = np.asarray(sec.get("initial_counts", [100.0] * L), dtype=float)
    if counts.shape != (L,):
        raise ConfigError("demand.initial_counts", f"expected {L} entries, got {counts.size}")
    if np.any(counts < 0):
        raise ConfigError("demand.initial_counts", "counts must be >= 0")
    full = np.zeros((L + 1, L + 1))
    if "transition" in sec:
        p = np.asarray(sec["transition"], dtype=float)
        if p.ndim != 2 or p.shape[0] not in (L, L + 1) or p.shape[1] not in (L, L + 1):
            raise ConfigError(
                "demand.transition", "expected an L x L, L x (L+1) or (L+1) x (L+1) matrix"
            )
        full[: p.shape[0], : p.shape[1]] = p
    if "outside_row" in sec:
        row = np.asarray(sec["outside_row"], dtype=float)
        if row.shape != (L + 1,):
            raise ConfigError("demand.outside_row", f"expected {L + 1} entries")
        full[L] = row
    np.fill_diagonal(full, 0.0)
    if np.any(full < 0) or np.any(full > 1):
        raise ConfigError("demand.transition", "probabilities must lie in [0, 1]")
    rows = full.sum(axis=1)
    if np.any(rows > 1 + 1e-12):
        bad = int(np.argmax(rows))
        raise ConfigError(
            "demand.transition", f"row {bad + 1} leaves with total probability {rows[bad]:.6g} > 1"
        )
    outside = _num(sec, "demand", "outside_initial", default=0.0)
    if outside < 0:
        raise ConfigError("demand.outside_initial", "must be >= 0")
    return DemandConfig(counts, full, outside)
