//! Bloch-sphere directions, the seeded random source, and the sign
//! convention shared by every model.

use std::f64::consts::PI;
use std::ops::Neg;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accepted deviation of |v|² from 1 for a constructed unit vector.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// A direction on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 3]", try_from = "[f64; 3]")]
pub struct UnitVector {
    x: f64,
    y: f64,
    z: f64,
}

impl UnitVector {
    pub const X: UnitVector = UnitVector { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: UnitVector = UnitVector { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: UnitVector = UnitVector { x: 0.0, y: 0.0, z: 1.0 };

    /// Accepts components whose squared norm is 1 within [`UNIT_TOLERANCE`].
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n2 = x * x + y * y + z * z;
        if !n2.is_finite() || (n2 - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Domain(format!(
                "({x}, {y}, {z}) is not a unit vector (|v|² = {n2})"
            )));
        }
        Ok(UnitVector { x, y, z })
    }

    /// Rescales any non-zero finite vector onto the sphere.
    pub fn normalized(v: [f64; 3]) -> Option<Self> {
        let n = dot3(v, v).sqrt();
        if !n.is_finite() || n == 0.0 {
            return None;
        }
        Some(UnitVector {
            x: v[0] / n,
            y: v[1] / n,
            z: v[2] / n,
        })
    }

    /// Direction at polar angle `theta` from +z inside the x–z plane.
    pub fn in_xz_plane(theta: f64) -> Self {
        UnitVector {
            x: theta.sin(),
            y: 0.0,
            z: theta.cos(),
        }
    }

    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let s = theta.sin();
        UnitVector {
            x: s * phi.cos(),
            y: s * phi.sin(),
            z: theta.cos(),
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn x(self) -> f64 {
        self.x
    }

    pub fn y(self) -> f64 {
        self.y
    }

    pub fn z(self) -> f64 {
        self.z
    }

    pub fn dot(self, other: UnitVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn dot_raw(self, v: [f64; 3]) -> f64 {
        dot3(self.to_array(), v)
    }
}

impl Neg for UnitVector {
    type Output = UnitVector;

    fn neg(self) -> UnitVector {
        UnitVector {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

impl From<UnitVector> for [f64; 3] {
    fn from(v: UnitVector) -> [f64; 3] {
        v.to_array()
    }
}

impl TryFrom<[f64; 3]> for UnitVector {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        UnitVector::new(v[0], v[1], v[2])
    }
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Sign with the tie broken towards +1.
#[inline]
pub fn sign(value: f64) -> i8 {
    if value >= 0.0 {
        1
    } else {
        -1
    }
}

/// +1 if v·w ≥ 0, otherwise −1.
#[inline]
pub fn sgn_dot(v: UnitVector, w: UnitVector) -> i8 {
    sign(v.dot(w))
}

/// Angle in [0, π] between two directions.
pub fn angle_between(v: UnitVector, w: UnitVector) -> f64 {
    v.dot(w).clamp(-1.0, 1.0).acos()
}

/// Seeded ChaCha8 stream. Every stream is identified by `(seed, stream)`;
/// sub-streams for parallel chunks are derived deterministically from both.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RandomSource { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent stream number `index` below this one. Depends only on
    /// `(seed, stream, index)`, never on how much of this stream was consumed.
    pub fn substream(&self, index: u64) -> RandomSource {
        RandomSource::with_stream(splitmix64(self.seed ^ splitmix64(self.stream)), index)
    }

    /// Uniform draw on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Rotation-invariant draw: z uniform on [−1, 1], azimuth uniform on [0, 2π).
pub fn sample_uniform_sphere(r: &mut RandomSource) -> UnitVector {
    let z = 2.0 * r.uniform() - 1.0;
    let phi = 2.0 * PI * r.uniform();
    let rho = (1.0 - z * z).max(0.0).sqrt();
    UnitVector {
        x: rho * phi.cos(),
        y: rho * phi.sin(),
        z,
    }
}

/// `n` quasi-uniformly spread directions (Fibonacci lattice).
pub fn spread_directions(n: usize) -> Vec<UnitVector> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            UnitVector {
                x: rho * phi.cos(),
                y: rho * phi.sin(),
                z,
            }
        })
        .collect()
}
