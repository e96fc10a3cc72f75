#![allow(dead_code)]

use edgehinf_core::{fixtures, NetworkSpec};
use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex<f64>;

/// `σ̄(Dᵀ (jωE + D W Dᵀ)⁻¹ [σ_w E^{1/2}, -σ_v D W^{1/2}])`, built from the
/// node-level dynamics with no reference to a spanning tree. The agreement
/// mode is invisible through `Dᵀ`, so any `ω > 0` is well posed.
pub fn node_level_gain(net: &NetworkSpec, omega: f64) -> f64 {
    let (n, m) = (net.n(), net.m());
    let d = net.incidence();
    let w = net.weights();
    let eps = net.epsilons();
    let mut lw = DMatrix::<f64>::zeros(n, n);
    for l in 0..m {
        for i in 0..n {
            for j in 0..n {
                lw[(i, j)] += d[(i, l)] * w[l] * d[(j, l)];
            }
        }
    }
    let mut k = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = C64::new(lw[(i, j)], if i == j { omega * eps[i] } else { 0.0 });
        }
    }
    let mut b = DMatrix::<C64>::zeros(n, n + m);
    for i in 0..n {
        b[(i, i)] = C64::new(net.sigma_w() * eps[i].sqrt(), 0.0);
        for l in 0..m {
            b[(i, n + l)] = C64::new(-net.sigma_v() * d[(i, l)] * w[l].sqrt(), 0.0);
        }
    }
    let sol = k.lu().solve(&b).expect("jωE + L_w is invertible for ω > 0");
    let dt = d.transpose().map(|x| C64::new(x, 0.0));
    (dt * sol).singular_values().max()
}

/// The seeded suite of 200 connected graphs, `n ≤ 8`,
/// `eps, w ∈ [0.1, 10]`.
pub fn random_suite() -> Vec<NetworkSpec> {
    (0..200u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let n = rng.gen_range(2..=8);
            fixtures::random_network(&mut rng, n, 0.35, (0.1, 10.0), (0.1, 10.0))
        })
        .collect()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
