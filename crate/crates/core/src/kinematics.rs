//! Two-body kinematics: invariant mass, total energy, the `K → K'` map and
//! the unequal-mass dispersion relation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_masses(m1: f64, m2: f64) -> Result<()> {
    if m1.is_finite() && m2.is_finite() && m1 > 0.0 && m2 > 0.0 {
        Ok(())
    } else {
        Err(Error::Params(format!("masses must be positive and finite (m1 = {m1}, m2 = {m2})")))
    }
}

fn norm_sq(v: &[f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// `M = (m1² + K²)^{1/2} + (m2² + K²)^{1/2}`
pub fn invariant_mass(k: &[f64; 3], m1: f64, m2: f64) -> Result<f64> {
    check_masses(m1, m2)?;
    let k2 = norm_sq(k);
    Ok((m1 * m1 + k2).sqrt() + (m2 * m2 + k2).sqrt())
}

/// `E = (P² + M²)^{1/2}`
pub fn total_energy(p: &[f64; 3], k: &[f64; 3], m1: f64, m2: f64) -> Result<f64> {
    let m = invariant_mass(k, m1, m2)?;
    Ok((norm_sq(p) + m * m).sqrt())
}

/// `K'² = -m1m2 + (m1m2/(m1+m2)²)(√(m1²+K²) + √(m2²+K²))²`, evaluated as
/// `(m1m2/(m1+m2)²)(s1 + s2 - m1 - m2)(s1 + s2 + m1 + m2)` with
/// `s_i - m_i = K²/(s_i + m_i)` so that small `K` keeps full relative precision.
pub fn kprime_sq(k: &[f64; 3], m1: f64, m2: f64) -> Result<f64> {
    check_masses(m1, m2)?;
    Ok(kprime_sq_from_k2(norm_sq(k), m1, m2))
}

fn kprime_sq_from_k2(k2: f64, m1: f64, m2: f64) -> f64 {
    let s1 = (m1 * m1 + k2).sqrt();
    let s2 = (m2 * m2 + k2).sqrt();
    let excess = k2 / (s1 + m1) + k2 / (s2 + m2);
    let total = m1 + m2;
    m1 * m2 / (total * total) * excess * (s1 + s2 + total)
}

/// `K'²` as a function of `K²` directly; same rearranged form as [`kprime_sq`].
pub fn kprime_sq_of_k2(k2: f64, m1: f64, m2: f64) -> Result<f64> {
    check_masses(m1, m2)?;
    if !(k2 >= 0.0) {
        return Err(Error::domain("K²", k2));
    }
    Ok(kprime_sq_from_k2(k2, m1, m2))
}

/// `M = ((m1+m2)/√(m1m2)) (m1m2 + K'²)^{1/2}`
pub fn mass_from_kprime(kprime_sq: f64, m1: f64, m2: f64) -> Result<f64> {
    check_masses(m1, m2)?;
    if !(kprime_sq >= 0.0) {
        return Err(Error::domain("K'²", kprime_sq));
    }
    let prod = m1 * m2;
    Ok((m1 + m2) * ((prod + kprime_sq) / prod).sqrt())
}

/// `E² = P² + ((m1+m2)²/(m1m2)) K'² + (m1+m2)²`
pub fn dispersion_unequal(p: &[f64; 3], kprime_sq: f64, m1: f64, m2: f64) -> Result<f64> {
    check_masses(m1, m2)?;
    if !(kprime_sq >= 0.0) {
        return Err(Error::domain("K'²", kprime_sq));
    }
    let total = m1 + m2;
    Ok(norm_sq(p) + total * total / (m1 * m2) * kprime_sq + total * total)
}

/// All derived quantities for one `(m1, m2, P, K)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicSample {
    pub m1: f64,
    pub m2: f64,
    pub p: [f64; 3],
    pub k: [f64; 3],
    pub mass: f64,
    pub energy: f64,
    pub kprime_sq: f64,
    pub mass_via_kprime: f64,
    pub energy_sq_via_kprime: f64,
}

impl KinematicSample {
    pub fn new(m1: f64, m2: f64, p: [f64; 3], k: [f64; 3]) -> Result<Self> {
        let kp = kprime_sq(&k, m1, m2)?;
        Ok(Self {
            m1,
            m2,
            p,
            k,
            mass: invariant_mass(&k, m1, m2)?,
            energy: total_energy(&p, &k, m1, m2)?,
            kprime_sq: kp,
            mass_via_kprime: mass_from_kprime(kp, m1, m2)?,
            energy_sq_via_kprime: dispersion_unequal(&p, kp, m1, m2)?,
        })
    }

    /// `|M(K'²(K)) - M(K)| / M`
    pub fn mass_roundtrip_error(&self) -> f64 {
        (self.mass_via_kprime - self.mass).abs() / self.mass
    }

    /// `|E²_{K'} - E²| / E²`
    pub fn energy_roundtrip_error(&self) -> f64 {
        let e2 = self.energy * self.energy;
        (self.energy_sq_via_kprime - e2).abs() / e2
    }
}
