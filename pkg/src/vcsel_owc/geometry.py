"""Vector helpers, transmitter-array layout, receiver orientation and
random-waypoint mobility.

Coordinates are metres in a room frame with ``z`` pointing up.  The access
point (AP) hangs from the ceiling at ``ap_height`` and user equipment (UE)
moves on the horizontal plane ``z = ue_height``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

UP = np.array([0.0, 0.0, 1.0])
DOWN = np.array([0.0, 0.0, -1.0])


def normalize(v):
    """Return ``v / |v|`` along the last axis; zero vectors raise."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        raise ValueError("cannot normalize a zero-length vector")
    return v / n


@dataclass(frozen=True)
class BeamArrayLayout:
    """Positions and aiming of every transmitter in a square VCSEL array.

    Beams are stored row-major: index ``row * n_side + col`` where ``col``
    grows with ``x`` and ``row`` grows towards ``-y`` (reading order when
    looking down on the floor plan).  ``p_tx``, ``p_cell`` and ``n_tx`` are
    ``(n_beam, 3)`` arrays.
    """

    n_side: int
    d_cell: float
    d_beam: float
    ap_center: np.ndarray
    ue_plane_height: float
    p_tx: np.ndarray
    p_cell: np.ndarray
    n_tx: np.ndarray

    @property
    def n_beam(self) -> int:
        return self.n_side * self.n_side

    @property
    def h(self) -> float:
        """Vertical AP-to-UE-plane distance."""
        return float(self.ap_center[2] - self.ue_plane_height)

    @property
    def footprint(self) -> tuple[float, float, float, float]:
        """``(xmin, xmax, ymin, ymax)`` of the union of all cells."""
        half = 0.5 * self.n_side * self.d_cell
        cx, cy = self.ap_center[0], self.ap_center[1]
        return (cx - half, cx + half, cy - half, cy + half)

    @property
    def central_index(self) -> int | None:
        """Index of the beam pointing straight down, if the array has one."""
        if self.n_side % 2 == 0:
            return None
        mid = self.n_side // 2
        return mid * self.n_side + mid

    def cell_of(self, xy) -> np.ndarray:
        """Index of the square cell containing each point (``-1`` if outside)."""
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        xmin, _, _, ymax = self.footprint
        col = np.floor((xy[:, 0] - xmin) / self.d_cell).astype(int)
        row = np.floor((ymax - xy[:, 1]) / self.d_cell).astype(int)
        inside = (col >= 0) & (col < self.n_side) & (row >= 0) & (row < self.n_side)
        return np.where(inside, row * self.n_side + col, -1)


def _grid_offsets(n_side: int, pitch: float) -> np.ndarray:
    k = np.arange(n_side) - 0.5 * (n_side - 1)
    col, row = np.meshgrid(k, k, indexing="xy")
    # rows run towards -y
    return np.stack([col.ravel() * pitch, -row.ravel() * pitch], axis=1)


def build_grid_array(n_side: int, d_cell: float, ap_height: float,
                     ue_height: float, d_beam: float,
                     ap_xy: tuple[float, float] = (0.0, 0.0)) -> BeamArrayLayout:
    """Lay out ``n_side**2`` beams on a ``d_beam`` grid, each aimed at the
    centre of its ``d_cell`` square cell on the UE plane."""
    if int(n_side) != n_side or n_side < 1:
        raise ValueError(f"n_side must be a positive integer, got {n_side!r}")
    if d_cell <= 0 or d_beam <= 0:
        raise ValueError("d_cell and d_beam must be positive")
    if ap_height <= ue_height:
        raise ValueError("ap_height must exceed ue_height")
    n_side = int(n_side)
    ap_center = np.array([ap_xy[0], ap_xy[1], ap_height], dtype=float)

    cell_xy = _grid_offsets(n_side, d_cell) + ap_center[:2]
    tx_xy = _grid_offsets(n_side, d_beam) + ap_center[:2]
    n = n_side * n_side
    p_cell = np.column_stack([cell_xy, np.full(n, float(ue_height))])
    p_tx = np.column_stack([tx_xy, np.full(n, float(ap_height))])
    n_tx = normalize(p_cell - p_tx)
    for a in (p_cell, p_tx, n_tx):
        a.setflags(write=False)
    ap_center.setflags(write=False)
    return BeamArrayLayout(n_side, float(d_cell), float(d_beam), ap_center,
                           float(ue_height), p_tx, p_cell, n_tx)


def angles(p_tx, n_tx, p_ue, n_ue):
    """Distance, radiance angle ``phi`` at the transmitter and incidence angle
    ``psi`` at the receiver.

    All arguments broadcast over leading axes, so one UE against every beam
    (``p_tx`` of shape ``(N, 3)``) works without a loop.

    Returns
    -------
    d, phi, psi : ndarray
        Metres and radians; ``phi, psi`` lie in ``[0, pi]``.
    """
    dvec = np.asarray(p_ue, dtype=float) - np.asarray(p_tx, dtype=float)
    d = np.linalg.norm(dvec, axis=-1)
    if np.any(d == 0.0):
        raise ValueError("transmitter and receiver coincide")
    dhat = dvec / d[..., None]
    cos_phi = np.clip(np.sum(np.asarray(n_tx) * dhat, axis=-1), -1.0, 1.0)
    cos_psi = np.clip(np.sum(np.asarray(n_ue) * -dhat, axis=-1), -1.0, 1.0)
    return d, np.arccos(cos_phi), np.arccos(cos_psi)


# --------------------------------------------------------------------------
# receiver orientation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OrientationModel:
    """Receiver-normal distribution.

    ``kind`` is ``"fixed"`` (normal straight up), ``"m1"`` (polar tilt from
    vertical ~ N(mean_elev, std_elev), re-drawn until inside [0, 90) deg) or
    ``"m2"`` (tilt uniform on [0, max_elev]).  Azimuth is uniform for m1/m2.
    Angles are in degrees.
    """

    kind: str = "fixed"
    mean_elev: float = 41.0
    std_elev: float = 7.7
    max_elev: float = 45.0

    def __post_init__(self):
        if self.kind not in ("fixed", "m1", "m2"):
            raise ValueError(f"unknown orientation model {self.kind!r}")
        if self.std_elev < 0 or not 0 <= self.max_elev < 90:
            raise ValueError("invalid orientation model parameters")


def sample_elevations(model: OrientationModel, rng: np.random.Generator,
                      size: int) -> np.ndarray:
    """Tilt of the receiver normal from vertical, degrees."""
    if model.kind == "fixed":
        return np.zeros(size)
    if model.kind == "m2":
        return rng.uniform(0.0, model.max_elev, size)
    out = rng.normal(model.mean_elev, model.std_elev, size)
    bad = (out < 0.0) | (out >= 90.0)
    while np.any(bad):
        out[bad] = rng.normal(model.mean_elev, model.std_elev, int(bad.sum()))
        bad = (out < 0.0) | (out >= 90.0)
    return out


def sample_orientations(model: OrientationModel, rng: np.random.Generator,
                        size: int) -> np.ndarray:
    """``(size, 3)`` unit receiver normals."""
    if model.kind == "fixed":
        return np.tile(UP, (size, 1))
    theta = np.radians(sample_elevations(model, rng, size))
    az = rng.uniform(0.0, 2.0 * np.pi, size)
    s = np.sin(theta)
    return np.column_stack([s * np.cos(az), s * np.sin(az), np.cos(theta)])


def sample_orientation(model: OrientationModel, rng: np.random.Generator) -> np.ndarray:
    return sample_orientations(model, rng, 1)[0]


# --------------------------------------------------------------------------
# mobility
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MobilityParams:
    speed: float = 1.0
    bounds: tuple[float, float, float, float] = (-0.5, 0.5, -0.5, 0.5)
    pause_time: float = 0.0

    def __post_init__(self):
        xmin, xmax, ymin, ymax = self.bounds
        if self.speed < 0 or self.pause_time < 0:
            raise ValueError("speed and pause_time must be non-negative")
        if not (xmax > xmin and ymax > ymin):
            raise ValueError(f"degenerate bounds {self.bounds}")


@dataclass(frozen=True)
class UeState:
    """Kinematic and receiver state of one user.

    ``position`` is 3-D; ``waypoint`` is the 2-D target on the UE plane.
    ``tag`` is an opaque identity (the LCD modulation code on the CCR).
    """

    position: np.ndarray
    normal: np.ndarray = field(default_factory=lambda: UP.copy())
    waypoint: np.ndarray | None = None
    pause_left: float = 0.0
    tag: int = 0


def uniform_point(bounds, rng: np.random.Generator) -> np.ndarray:
    xmin, xmax, ymin, ymax = bounds
    return np.array([rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)])


def random_waypoint_step(state: UeState, mobility: MobilityParams, dt: float,
                         rng: np.random.Generator) -> UeState:
    """Advance one user by ``dt`` seconds of random-waypoint motion.

    The user walks at constant speed to its waypoint, rests ``pause_time``,
    then draws the next waypoint uniformly in ``bounds``.  Several arrivals
    inside one step are handled exactly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    pos = np.array(state.position[:2], dtype=float)
    wp = None if state.waypoint is None else np.array(state.waypoint, dtype=float)
    pause = float(state.pause_left)
    t = float(dt)
    v = mobility.speed
    if v == 0.0:
        return state
    while t > 0.0:
        if pause > 0.0:
            used = min(pause, t)
            pause -= used
            t -= used
            continue
        if wp is None:
            wp = uniform_point(mobility.bounds, rng)
        gap = wp - pos
        dist = math.hypot(gap[0], gap[1])
        reach = v * t
        if reach < dist:
            pos = pos + gap * (reach / dist)
            t = 0.0
        else:
            pos = wp
            t -= dist / v
            wp = None
            pause = mobility.pause_time
    new_pos = np.array([pos[0], pos[1], state.position[2]])
    return replace(state, position=new_pos, waypoint=wp, pause_left=pause)


def mean_rectangle_distance(a: float, b: float) -> float:
    """Mean distance between two independent uniform points in an a x b box."""
    d = math.hypot(a, b)
    return ((a**3 / b**2 + b**3 / a**2 + d * (3 - a**2 / b**2 - b**2 / a**2)) / 15
            + (b**2 / a * math.log((a + d) / b) + a**2 / b * math.log((b + d) / a)) / 6)


def stationary_waypoint_state(mobility: MobilityParams, z: float,
                              rng: np.random.Generator, tag: int = 0) -> UeState:
    """Draw a user state from the stationary random-waypoint distribution.

    Legs are picked with probability proportional to their length (rejection
    against the box diagonal) and the user is placed uniformly along the leg,
    so no warm-up transient depends on the speed.
    """
    xmin, xmax, ymin, ymax = mobility.bounds
    a, b = xmax - xmin, ymax - ymin
    if mobility.pause_time > 0 and mobility.speed > 0:
        move_time = mean_rectangle_distance(a, b) / mobility.speed
        if rng.uniform() < mobility.pause_time / (mobility.pause_time + move_time):
            p = uniform_point(mobility.bounds, rng)
            return UeState(np.array([p[0], p[1], z]), waypoint=None,
                           pause_left=rng.uniform(0.0, mobility.pause_time), tag=tag)
    diag = math.hypot(a, b)
    while True:
        p = uniform_point(mobility.bounds, rng)
        q = uniform_point(mobility.bounds, rng)
        if rng.uniform() * diag <= math.hypot(*(q - p)):
            break
    u = rng.uniform()
    pos = p + u * (q - p)
    return UeState(np.array([pos[0], pos[1], z]), waypoint=q, tag=tag)


# --------------------------------------------------------------------------
# many users at once
# --------------------------------------------------------------------------

def stationary_waypoint_batch(mobility: MobilityParams, n: int, rng: np.random.Generator):
    """Vectorised :func:`stationary_waypoint_state` for ``n`` users.

    Returns ``(xy, waypoints, pause_left)``; a user that is pausing has a NaN
    waypoint.
    """
    xmin, xmax, ymin, ymax = mobility.bounds
    a, b = xmax - xmin, ymax - ymin
    lo, span = np.array([xmin, ymin]), np.array([a, b])
    diag = math.hypot(a, b)
    p = np.empty((n, 2))
    q = np.empty((n, 2))
    todo = np.arange(n)
    while todo.size:
        pp = lo + rng.uniform(size=(todo.size, 2)) * span
        qq = lo + rng.uniform(size=(todo.size, 2)) * span
        ok = rng.uniform(size=todo.size) * diag <= np.hypot(*(qq - pp).T)
        p[todo[ok]], q[todo[ok]] = pp[ok], qq[ok]
        todo = todo[~ok]
    xy = p + rng.uniform(size=(n, 1)) * (q - p)
    pause = np.zeros(n)
    if mobility.pause_time > 0 and mobility.speed > 0:
        move_time = mean_rectangle_distance(a, b) / mobility.speed
        paused = rng.uniform(size=n) < mobility.pause_time / (mobility.pause_time + move_time)
        xy[paused] = lo + rng.uniform(size=(int(paused.sum()), 2)) * span
        q[paused] = np.nan
        pause[paused] = rng.uniform(0.0, mobility.pause_time, int(paused.sum()))
    return xy, q, pause


def random_waypoint_advance(xy, waypoints, pause_left, mobility: MobilityParams, dt: float,
                            rng: np.random.Generator):
    """Vectorised :func:`random_waypoint_step`; NaN waypoints mean "draw one"."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    xy = np.array(xy, dtype=float)
    wp = np.array(waypoints, dtype=float)
    pause = np.array(pause_left, dtype=float)
    v = mobility.speed
    if v == 0.0:
        return xy, wp, pause
    xmin, xmax, ymin, ymax = mobility.bounds
    t = np.full(len(xy), float(dt))
    while True:
        used = np.minimum(pause, t)
        pause -= used
        t -= used
        act = t > 0
        if not act.any():
            break
        fresh = act & np.isnan(wp[:, 0])
        if fresh.any():
            k = int(fresh.sum())
            wp[fresh] = np.column_stack([rng.uniform(xmin, xmax, k), rng.uniform(ymin, ymax, k)])
        gap = wp - xy
        dist = np.hypot(gap[:, 0], gap[:, 1])
        reach = v * t
        short = act & (reach < dist)
        xy[short] += gap[short] * (reach[short] / dist[short])[:, None]
        t[short] = 0.0
        arrive = act & ~short
        xy[arrive] = wp[arrive]
        t[arrive] -= dist[arrive] / v
        wp[arrive] = np.nan
        pause[arrive] = mobility.pause_time
    return xy, wp, pause
