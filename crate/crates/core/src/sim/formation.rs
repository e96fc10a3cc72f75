use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Target offsets `(p_z, p_y)` per node and the fast/slow split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationSpec {
    pub offsets: Vec<[f64; 2]>,
    /// 1-based ids of the fast nodes; every other node is slow.
    pub fast: Vec<usize>,
}

/// Point at arc length `s` along the border of the square of half-side
/// `h`, starting at `(h, h)` and running counter-clockwise.
fn perimeter_point(h: f64, s: f64) -> [f64; 2] {
    let side = 2.0 * h;
    let s = s.rem_euclid(4.0 * side);
    let (k, r) = ((s / side).floor() as usize, s % side);
    match k {
        0 => [h - r, h],
        1 => [-h, h - r],
        2 => [-h + r, -h],
        _ => [h, -h + r],
    }
}

fn spread(h: f64, count: usize) -> Vec<[f64; 2]> {
    let step = 8.0 * h / count.max(1) as f64;
    (0..count).map(|k| perimeter_point(h, k as f64 * step)).collect()
}

impl FormationSpec {
    pub fn zero(n: usize) -> Self {
        Self { offsets: vec![[0.0; 2]; n], fast: Vec::new() }
    }

    /// Slow nodes evenly on the square of half-side 1, fast nodes on the
    /// square of half-side 2, each set in ascending id order.
    pub fn squares(n: usize, fast: &[usize]) -> Result<Self> {
        let mut spec = Self { offsets: vec![[0.0; 2]; n], fast: fast.to_vec() };
        spec.validate(n)?;
        let (fast_ids, slow_ids): (Vec<usize>, Vec<usize>) = (1..=n).partition(|i| fast.contains(i));
        for (ids, h) in [(slow_ids, 1.0), (fast_ids, 2.0)] {
            for (id, p) in ids.iter().zip(spread(h, ids.len())) {
                spec.offsets[id - 1] = p;
            }
        }
        Ok(spec)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.offsets.len() != n {
            return Err(CoreError::InvalidSimulation(format!(
                "formation has {} offsets for {n} nodes",
                self.offsets.len()
            )));
        }
        let mut seen = vec![false; n];
        for &id in &self.fast {
            if id == 0 || id > n || seen[id - 1] {
                return Err(CoreError::InvalidSimulation(format!("bad or repeated fast node id {id}")));
            }
            seen[id - 1] = true;
        }
        if self.offsets.iter().flatten().any(|x| !x.is_finite()) {
            return Err(CoreError::InvalidSimulation("non-finite formation offset".into()));
        }
        Ok(())
    }

    pub fn is_fast(&self, id: usize) -> bool {
        self.fast.contains(&id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squares_place_nodes_on_borders() {
        let f = FormationSpec::squares(10, &[1, 2, 3, 4, 5]).unwrap();
        for (i, p) in f.offsets.iter().enumerate() {
            let h = if i < 5 { 2.0 } else { 1.0 };
            let inf_norm = p[0].abs().max(p[1].abs());
            assert!((inf_norm - h).abs() < 1e-12, "node {} at {p:?}", i + 1);
        }
        assert_eq!(f.offsets[0], [2.0, 2.0]);
        assert_eq!(f.offsets[5], [1.0, 1.0]);
        // distinct positions
        for a in 0..10 {
            for b in a + 1..10 {
                assert_ne!(f.offsets[a], f.offsets[b]);
            }
        }
    }

    #[test]
    fn partition_checked() {
        assert!(FormationSpec::squares(4, &[1, 1]).is_err());
        assert!(FormationSpec::squares(4, &[5]).is_err());
        assert!(FormationSpec::squares(4, &[]).is_ok());
    }

    #[test]
    fn perimeter_walk() {
        assert_eq!(perimeter_point(1.0, 0.0), [1.0, 1.0]);
        assert_eq!(perimeter_point(1.0, 2.0), [-1.0, 1.0]);
        assert_eq!(perimeter_point(1.0, 5.0), [0.0, -1.0]);
        assert_eq!(perimeter_point(1.0, 8.0), [1.0, 1.0]);
    }
}
