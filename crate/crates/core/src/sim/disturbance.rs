use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub const A_RANGE: f64 = 3.5;
pub const B_RANGE: f64 = 2.4;

/// `a + b cos(2π (t - t_s)/(t_f - t_s))` on the support.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Channel {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Z,
    Y,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::Z, Axis::Y];

    pub fn index(self) -> usize {
        match self {
            Axis::Z => 0,
            Axis::Y => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::Z => "z",
            Axis::Y => "y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelRef {
    /// 0-based node index.
    Node(usize),
    /// 0-based edge index in the network's edge order.
    Edge(usize),
}

/// Node and edge disturbances, each with a `[z, y]` pair of channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub t_s: f64,
    pub t_f: f64,
    pub node: Vec<[Channel; 2]>,
    pub edge: Vec<[Channel; 2]>,
}

impl DisturbanceSpec {
    pub fn zero(n: usize, m: usize) -> Self {
        Self { t_s: 0.0, t_f: 1.0, node: vec![[Channel::default(); 2]; n], edge: vec![[Channel::default(); 2]; m] }
    }

    /// Independent draws `a ∈ [-3.5, 3.5]`, `b ∈ [-2.4, 2.4]` for every
    /// node, edge and axis, nodes first.
    pub fn sample(n: usize, m: usize, t_s: f64, t_f: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut draw = || Channel { a: rng.gen_range(-A_RANGE..=A_RANGE), b: rng.gen_range(-B_RANGE..=B_RANGE) };
        let node = (0..n).map(|_| [draw(), draw()]).collect();
        let edge = (0..m).map(|_| [draw(), draw()]).collect();
        let spec = Self { t_s, t_f, node, edge };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_s < self.t_f) || !self.t_s.is_finite() || !self.t_f.is_finite() {
            return Err(CoreError::InvalidSimulation(format!(
                "disturbance support [{}, {}] needs t_s < t_f",
                self.t_s, self.t_f
            )));
        }
        let all = self.node.iter().chain(&self.edge).flatten();
        if all.clone().any(|c| !c.a.is_finite() || !c.b.is_finite()) {
            return Err(CoreError::InvalidSimulation("non-finite disturbance amplitude".into()));
        }
        Ok(())
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.t_s <= t && t <= self.t_f
    }

    /// The smooth profile of a channel, ignoring the support.
    pub(crate) fn profile(&self, c: &Channel, t: f64) -> f64 {
        c.a + c.b * (2.0 * std::f64::consts::PI * (t - self.t_s) / (self.t_f - self.t_s)).cos()
    }

    pub fn value(&self, channel: ChannelRef, axis: Axis, t: f64) -> f64 {
        let c = match channel {
            ChannelRef::Node(i) => &self.node[i][axis.index()],
            ChannelRef::Edge(l) => &self.edge[l][axis.index()],
        };
        disturbance_value(c, self.t_s, self.t_f, t)
    }
}

/// `a + b cos(2π (t - t_s)/(t_f - t_s))` for `t ∈ [t_s, t_f]`, else 0.
pub fn disturbance_value(c: &Channel, t_s: f64, t_f: f64, t: f64) -> f64 {
    if t < t_s || t > t_f {
        return 0.0;
    }
    c.a + c.b * (2.0 * std::f64::consts::PI * (t - t_s) / (t_f - t_s)).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn profile_values() {
        let c = Channel { a: 1.5, b: -0.7 };
        assert_eq!(disturbance_value(&c, 2.0, 3.0, 2.0), 0.8);
        assert!((disturbance_value(&c, 2.0, 3.0, 2.5) - 2.2).abs() < 1e-15);
        assert_eq!(disturbance_value(&c, 2.0, 3.0, 3.001), 0.0);
        assert_eq!(disturbance_value(&c, 2.0, 3.0, 1.999), 0.0);
    }

    #[test]
    fn sampling_is_bounded_and_seeded() {
        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        let a = DisturbanceSpec::sample(10, 15, 2.0, 3.0, &mut r1).unwrap();
        let b = DisturbanceSpec::sample(10, 15, 2.0, 3.0, &mut r2).unwrap();
        assert_eq!(a, b);
        for c in a.node.iter().chain(&a.edge).flatten() {
            assert!(c.a.abs() <= A_RANGE && c.b.abs() <= B_RANGE);
        }
        assert!(DisturbanceSpec::sample(2, 1, 3.0, 3.0, &mut r1).is_err());
    }
}
