//! Planar node placement, mobility, and relative-motion geometry.
//!
//! Nodes live in a square arena centered at the origin. Headings are absolute
//! angles in `(-pi, pi]`; all distances are meters and speeds meters/second.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::Real;

/// Meters per mile-per-hour, for config-time speed conversion.
pub const MPH_TO_MPS: Real = 0.447_04;

/// Point in the simulation plane, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: Real,
    pub y: Real,
}

impl Position {
    pub const ORIGIN: Position = Position { x: 0.0, y: 0.0 };

    pub fn new(x: Real, y: Real) -> Self {
        Position { x, y }
    }
}

/// Euclidean distance between two positions.
pub fn distance(a: Position, b: Position) -> Real {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Compass bearing of the ray `from -> to`, in `(-pi, pi]`.
pub fn bearing(from: Position, to: Position) -> Real {
    wrap_angle((to.y - from.y).atan2(to.x - from.x))
}

/// Normalize an angle to `(-pi, pi]`.
pub fn wrap_angle(angle: Real) -> Real {
    let mut wrapped = angle.rem_euclid(std::f64::consts::TAU);
    if wrapped > std::f64::consts::PI {
        wrapped -= std::f64::consts::TAU;
    }
    wrapped
}

/// Constant-velocity motion: speed in m/s along an absolute heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub speed: Real,
    pub heading: Real,
}

impl Trajectory {
    /// Velocity components (m/s).
    pub fn velocity(&self) -> (Real, Real) {
        (self.speed * self.heading.cos(), self.speed * self.heading.sin())
    }
}

/// Whether a node offers content or requests it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Transmitter,
    Requester,
}

/// One device in the arena.
#[derive(Debug, Clone)]
pub struct Node {
    pub id: usize,
    pub role: Role,
    pub position: Position,
    pub trajectory: Trajectory,
}

/// Motion of a receiver relative to its transmitter, reduced to the two
/// quantities beam drift depends on: relative speed and the unsigned angle
/// between the relative velocity and the receiver's boresight ray (receiver
/// toward transmitter).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeMotion {
    pub speed: Real,
    pub angle: Real,
}

/// Relative motion of `receiver` with respect to `transmitter`.
///
/// Zero relative velocity yields `(0, 0)`: a co-moving pair never drifts.
pub fn relative_motion(receiver: &Node, transmitter: &Node) -> RelativeMotion {
    let (rvx, rvy) = receiver.trajectory.velocity();
    let (tvx, tvy) = transmitter.trajectory.velocity();
    let (dvx, dvy) = (rvx - tvx, rvy - tvy);
    let speed = dvx.hypot(dvy);
    if speed == 0.0 {
        return RelativeMotion { speed: 0.0, angle: 0.0 };
    }
    let d = distance(receiver.position, transmitter.position);
    if d == 0.0 {
        return RelativeMotion { speed, angle: 0.0 };
    }
    // Unit vector receiver -> transmitter.
    let (ux, uy) = (
        (transmitter.position.x - receiver.position.x) / d,
        (transmitter.position.y - receiver.position.y) / d,
    );
    let cos_angle = ((dvx * ux + dvy * uy) / speed).clamp(-1.0, 1.0);
    RelativeMotion { speed, angle: cos_angle.acos() }
}

/// Square deployment region centered at the origin.
#[derive(Debug, Clone, Copy)]
pub struct Arena {
    pub side: Real,
}

impl Arena {
    pub fn area(&self) -> Real {
        self.side * self.side
    }

    pub fn contains(&self, p: Position) -> bool {
        let half = self.side / 2.0;
        p.x.abs() <= half && p.y.abs() <= half
    }
}

/// Speed range for freshly placed nodes, m/s.
#[derive(Debug, Clone, Copy)]
pub struct SpeedRange {
    pub min: Real,
    pub max: Real,
}

/// Scatter nodes uniformly over the arena with a Poisson-distributed count.
///
/// `density_per_km2` is nodes per square kilometer; each node is a transmitter
/// with probability `transmitter_fraction`, else a requester. Headings are
/// uniform in `(-pi, pi]`, speeds uniform over `speeds`. Zero density or zero
/// area gives an empty vector.
pub fn place_uniform<R: Rng>(
    arena: Arena,
    density_per_km2: Real,
    transmitter_fraction: Real,
    speeds: SpeedRange,
    rng: &mut R,
) -> Vec<Node> {
    let mean_count = density_per_km2 * arena.area() / 1e6;
    let count = if mean_count > 0.0 {
        Poisson::new(mean_count).expect("positive mean").sample(rng) as usize
    } else {
        0
    };
    let half = arena.side / 2.0;
    (0..count)
        .map(|id| {
            let position = Position::new(rng.gen_range(-half..=half), rng.gen_range(-half..=half));
            let role = if rng.gen_bool(transmitter_fraction) {
                Role::Transmitter
            } else {
                Role::Requester
            };
            Node { id, role, position, trajectory: random_trajectory(speeds, rng) }
        })
        .collect()
}

/// Uniform heading in `(-pi, pi]` and speed uniform over the range.
pub fn random_trajectory<R: Rng>(speeds: SpeedRange, rng: &mut R) -> Trajectory {
    // pi - U[0, 2pi) lands exactly in (-pi, pi].
    let heading = std::f64::consts::PI - rng.gen::<Real>() * std::f64::consts::TAU;
    let speed = if speeds.max > speeds.min {
        rng.gen_range(speeds.min..=speeds.max)
    } else {
        speeds.min
    };
    Trajectory { speed, heading }
}
