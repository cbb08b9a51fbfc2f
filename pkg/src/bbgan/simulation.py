"""Deterministic bouncing-ball physics and rasterization.

Balls of equal mass and equal radius move inside the unit box with elastic
wall and ball-ball collisions, energy-conserving by construction.  All
randomness flows through a single integer seed, and every clip index maps
to its own independent random stream, so datasets can be generated in any
order or degree of parallelism without changing a byte.

Coordinate conventions: positions live in [0, 1]^2, velocities are in box
units per step.  When rasterized, pixel (row, col) has its center at
x = (col + 0.5) / width, y = (row + 0.5) / height, so row 0 is the y ~ 0
edge of the box.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Physics constants used throughout the experiments.  The clip length of 30
# frames with speed 0.05 gives several wall bounces per clip.
DEFAULT_RADIUS = 0.12
DEFAULT_SPEED = 0.05
DEFAULT_DT = 1.0
DEFAULT_HEIGHT = 32
DEFAULT_WIDTH = 32

PLACEMENT_MAX_TRIES = 1000


class BallPlacementError(RuntimeError):
    """Raised when non-overlapping initial positions cannot be sampled."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot of the ball world.

    positions and velocities are (n_balls, 2) float64 arrays; radius is
    shared by all balls.  Instances are never mutated: `step` returns a
    fresh state.
    """

    positions: np.ndarray
    velocities: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen(self.positions))
        object.__setattr__(self, "velocities", _frozen(self.velocities))

    @property
    def n_balls(self) -> int:
        return self.positions.shape[0]

    @property
    def kinetic_energy(self) -> float:
        """Sum of squared speeds (unit masses, no 1/2 factor)."""
        return float(np.sum(self.velocities ** 2))


def init_world(
    rng_seed: int,
    n_balls: int,
    radius: float = DEFAULT_RADIUS,
    speed: float = DEFAULT_SPEED,
    max_tries: int = PLACEMENT_MAX_TRIES,
) -> WorldState:
    """Sample a world with non-overlapping balls and fixed-speed velocities.

    Positions are drawn uniformly over the reachable box [radius, 1-radius]^2
    and the whole set is rejected until all pairwise center distances exceed
    2 * radius.  Velocity directions are uniform on the circle with every
    speed equal to `speed`.  The same seed always yields the same state.
    """
    if n_balls < 1:
        raise ValueError(f"n_balls must be >= 1, got {n_balls}")
    if radius <= 0 or radius >= 0.5:
        raise ValueError(f"radius must lie in (0, 0.5), got {radius}")
    rng = np.random.default_rng(rng_seed)
    lo, hi = radius, 1.0 - radius
    for _ in range(max_tries):
        positions = rng.uniform(lo, hi, size=(n_balls, 2))
        if _pairwise_ok(positions, radius):
            theta = rng.uniform(0.0, 2.0 * np.pi, size=n_balls)
            velocities = speed * np.stack([np.cos(theta), np.sin(theta)], axis=1)
            return WorldState(positions, velocities, radius)
    raise BallPlacementError(
        f"cannot place {n_balls} balls of radius {radius} without overlap "
        f"after {max_tries} tries"
    )


def _pairwise_ok(positions: np.ndarray, radius: float) -> bool:
    n = positions.shape[0]
    for i in range(n - 1):
        d = positions[i + 1:] - positions[i]
        if np.any(np.sum(d * d, axis=1) <= (2.0 * radius) ** 2):
            return False
    return True


def step(world: WorldState, dt: float = DEFAULT_DT) -> WorldState:
    """Advance one time step with elastic wall and ball-ball collisions.

    Order of resolution: advance positions, reflect wall penetration (with
    position clamp), resolve each overlapping pair once by exchanging
    normal velocity components and separating centers, then clamp into the
    box.  Velocity updates are pure reflections and component swaps, so
    kinetic energy is conserved to rounding error.
    """
    pos = world.positions + world.velocities * dt
    vel = world.velocities.copy()
    r = world.radius
    lo, hi = r, 1.0 - r

    for axis in range(2):
        under = pos[:, axis] < lo
        pos[under, axis] = 2.0 * lo - pos[under, axis]
        vel[under, axis] = -vel[under, axis]
        over = pos[:, axis] > hi
        pos[over, axis] = 2.0 * hi - pos[over, axis]
        vel[over, axis] = -vel[over, axis]

    n = pos.shape[0]
    for i in range(n - 1):
        for j in range(i + 1, n):
            d = pos[j] - pos[i]
            dist_sq = float(d @ d)
            if dist_sq >= (2.0 * r) ** 2 or dist_sq == 0.0:
                continue
            dist = np.sqrt(dist_sq)
            normal = d / dist
            # Equal masses: colliding balls exchange their normal velocity
            # components, but only when approaching, to avoid re-collision
            # jitter while they separate.
            closing = float((vel[i] - vel[j]) @ normal)
            if closing > 0.0:
                vel[i] = vel[i] - closing * normal
                vel[j] = vel[j] + closing * normal
            overlap = 2.0 * r - dist
            pos[i] = pos[i] - 0.5 * overlap * normal
            pos[j] = pos[j] + 0.5 * overlap * normal

    np.clip(pos, lo, hi, out=pos)
    return WorldState(pos, vel, r)


@lru_cache(maxsize=8)
def _pixel_centers(height: int, width: int):
    xs = (np.arange(width, dtype=np.float64) + 0.5) / width
    ys = (np.arange(height, dtype=np.float64) + 0.5) / height
    gx, gy = np.meshgrid(xs, ys)
    gx.setflags(write=False)
    gy.setflags(write=False)
    return gx, gy


def render(
    world: WorldState,
    height: int = DEFAULT_HEIGHT,
    width: int = DEFAULT_WIDTH,
) -> np.ndarray:
    """Rasterize to a binary (height, width) float64 frame.

    A pixel is 1.0 exactly when its center lies inside (or on) some ball's
    disk; overlapping balls saturate at 1.0.
    """
    gx, gy = _pixel_centers(height, width)
    mask = np.zeros((height, width), dtype=bool)
    r_sq = world.radius ** 2
    for cx, cy in world.positions:
        mask |= (gx - cx) ** 2 + (gy - cy) ** 2 <= r_sq
    return mask.astype(np.float64)


def clip_seed(base_seed: int, clip_index: int) -> int:
    """Stable mixing of (base_seed, clip_index) into one per-clip seed."""
    ss = np.random.SeedSequence([int(base_seed), int(clip_index)])
    return int(ss.generate_state(1, np.uint64)[0])


def generate_clip(
    base_seed: int,
    clip_index: int,
    n_balls: int,
    n_frames: int,
    radius: float = DEFAULT_RADIUS,
    speed: float = DEFAULT_SPEED,
    dt: float = DEFAULT_DT,
    height: int = DEFAULT_HEIGHT,
    width: int = DEFAULT_WIDTH,
) -> np.ndarray:
    """Simulate and rasterize one clip as an (n_frames, height, width) array.

    The world is seeded from (base_seed, clip_index) only, so clips can be
    produced in any order, or concurrently, with identical results.
    """
    if n_frames < 1:
        raise ValueError(f"n_frames must be >= 1, got {n_frames}")
    world = init_world(clip_seed(base_seed, clip_index), n_balls, radius, speed)
    frames = np.empty((n_frames, height, width), dtype=np.float64)
    frames[0] = render(world, height, width)
    for i in range(1, n_frames):
        world = step(world, dt)
        frames[i] = render(world, height, width)
    return frames
