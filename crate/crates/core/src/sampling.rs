//! Deterministic sample sets of momentum points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jet::NVARS;
use crate::opcalc::MomentumPoint;

pub const DEFAULT_SEED: u64 = 0x5EED;
pub const DEFAULT_POINTS: usize = 50;

/// Half-width of the random momentum box.
pub const P_RANGE: f64 = 3.0;
/// Half-width of the random time interval.
pub const T_RANGE: f64 = 5.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `p = 0` and `1.5 e_A` for every axis, all at `t = 0`.
pub fn deterministic_points() -> Vec<MomentumPoint> {
    let mut pts = vec![MomentumPoint::at_rest()];
    for a in 0..NVARS {
        let mut p = [0.0; NVARS];
        p[a] = 1.5;
        pts.push(MomentumPoint::new(p, 0.0));
    }
    pts
}

/// The deterministic points followed by `n` random points with components in
/// `[-3, 3]` and `t` in `[-5, 5]`.
pub fn momentum_points(n: usize, seed: u64) -> Vec<MomentumPoint> {
    let mut r = rng(seed);
    let mut pts = deterministic_points();
    pts.extend((0..n).map(|_| {
        let p = std::array::from_fn(|_| r.random_range(-P_RANGE..=P_RANGE));
        MomentumPoint::new(p, r.random_range(-T_RANGE..=T_RANGE))
    }));
    pts
}

/// Points for the velocity bound: `p = 0`, axis points at `100 m` on the
/// internal axes, and `n` random directions with magnitudes log-uniform in
/// `[0.01 m, 100 m]`.
pub fn velocity_points(n: usize, m: f64, seed: u64) -> Vec<MomentumPoint> {
    let mut r = rng(seed);
    let mut pts = vec![MomentumPoint::at_rest()];
    for a in 3..NVARS {
        let mut p = [0.0; NVARS];
        p[a] = 100.0 * m;
        pts.push(MomentumPoint::new(p, 0.0));
    }
    pts.extend((0..n).map(|_| {
        let dir: [f64; NVARS] = std::array::from_fn(|_| r.random_range(-1.0..=1.0));
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        let mag = m * 10f64.powf(r.random_range(-2.0..=2.0));
        MomentumPoint::new(dir.map(|x| x * mag / norm), 0.0)
    }));
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_sets_are_reproducible_and_bounded() {
        let a = momentum_points(20, DEFAULT_SEED);
        let b = momentum_points(20, DEFAULT_SEED);
        assert_eq!(a, b);
        assert_eq!(a.len(), 27);
        assert_eq!(a[0], MomentumPoint::at_rest());
        assert!(a.iter().all(|q| q.p.iter().all(|x| x.abs() <= P_RANGE) && q.t.abs() <= T_RANGE));
        assert_ne!(a, momentum_points(20, DEFAULT_SEED + 1));
        let v = velocity_points(30, 2.0, DEFAULT_SEED);
        let max = v.iter().map(|q| q.p.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
        assert!((max - 200.0).abs() < 1e-9);
    }
}
