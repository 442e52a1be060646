//! File formats: matrix dumps, CSV tables and the mass map.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::clifford::{gamma16, gamma8, spin_tensors, GammaSet};
use crate::error::{Error, Result};
use crate::evolve::Evolution;
use crate::kinematics::{invariant_mass, kprime_sq, mass_from_kprime};
use crate::observables::VelocitySpectrum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixSet {
    Gamma8,
    Gamma16,
    Spin,
}

impl std::str::FromStr for MatrixSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma8" => Ok(Self::Gamma8),
            "gamma16" => Ok(Self::Gamma16),
            "spin" => Ok(Self::Spin),
            _ => Err(Error::Config(format!("unknown matrix set '{s}' (gamma8, gamma16, spin)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelledMatrix {
    pub label: String,
    /// Row-major `[re, im]` pairs.
    pub rows: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub set: MatrixSet,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metric: Vec<f64>,
    pub matrices: Vec<LabelledMatrix>,
}

fn gamma_dump(set: MatrixSet, g: &GammaSet) -> MatrixDump {
    MatrixDump {
        set,
        dim: g.dim(),
        metric: g.metric().to_vec(),
        matrices: g
            .gammas()
            .iter()
            .enumerate()
            .map(|(mu, m)| LabelledMatrix {
                label: format!("Gamma{mu}"),
                rows: m.to_rows(),
            })
            .collect(),
    }
}

/// All matrices of a set; spin tensors are listed for `a < b`, 1-based labels.
pub fn matrix_dump(set: MatrixSet) -> MatrixDump {
    match set {
        MatrixSet::Gamma8 => gamma_dump(set, &gamma8()),
        MatrixSet::Gamma16 => gamma_dump(set, &gamma16()),
        MatrixSet::Spin => {
            let st = spin_tensors(&gamma8());
            let mut matrices = Vec::new();
            for name in ["S1", "S2", "S"] {
                for a in 0..3 {
                    for b in a + 1..3 {
                        let m = match name {
                            "S1" => st.s1(a, b),
                            "S2" => st.s2(a, b),
                            _ => st.s(a, b),
                        };
                        matrices.push(LabelledMatrix {
                            label: format!("{name}_{}{}", a + 1, b + 1),
                            rows: m.to_rows(),
                        });
                    }
                }
            }
            matrices.push(LabelledMatrix {
                label: "Casimir".into(),
                rows: st.casimir().to_rows(),
            });
            MatrixDump {
                set,
                dim: 8,
                metric: Vec::new(),
                matrices,
            }
        }
    }
}

/// Columns `p1..p6, eig1..eig8`, the ascending eigenvalues of `V_4² + V_5² + V_6²`.
pub fn write_velocity_csv<W: Write>(out: W, spectra: &[VelocitySpectrum]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = (1..=6).map(|i| format!("p{i}")).chain((1..=8).map(|i| format!("eig{i}"))).collect();
    w.write_record(&header)?;
    for s in spectra {
        let row: Vec<String> = s.point.p.iter().chain(&s.v2).map(|x| format!("{x:e}")).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t, norm, energy, pos_fraction, centroid_x1..x6`.
pub fn write_snapshots_csv<W: Write>(out: W, ev: &Evolution) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = ["t", "norm", "energy", "pos_fraction"]
        .into_iter()
        .map(String::from)
        .chain((1..=6).map(|i| format!("centroid_x{i}")))
        .collect();
    w.write_record(&header)?;
    for s in &ev.snapshots {
        let row: Vec<String> = [s.t, s.norm, s.energy, s.pos_fraction]
            .iter()
            .chain(&s.centroid)
            .map(|x| format!("{x:e}"))
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `a:b:n`, `n` evenly spaced values from `a` to `b` inclusive.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("grid '{s}' is not of the form a:b:n"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(bad());
    };
    let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassMapRow {
    pub k2: f64,
    pub kprime_sq: f64,
    pub mass_direct: f64,
    pub mass_via_kprime: f64,
    pub relerr: f64,
}

/// One row per `|K|` in `ks`.
pub fn mass_map(m1: f64, m2: f64, ks: &[f64]) -> Result<Vec<MassMapRow>> {
    ks.iter()
        .map(|&k| {
            let kv = [0.0, 0.0, k];
            let kp = kprime_sq(&kv, m1, m2)?;
            let direct = invariant_mass(&kv, m1, m2)?;
            let via = mass_from_kprime(kp, m1, m2)?;
            Ok(MassMapRow {
                k2: k * k,
                kprime_sq: kp,
                mass_direct: direct,
                mass_via_kprime: via,
                relerr: (via - direct).abs() / direct,
            })
        })
        .collect()
}

/// Columns `K², K′², M_direct, M_via_K′², relerr`.
pub fn write_mass_map_csv<W: Write>(out: W, rows: &[MassMapRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["K2", "Kprime2", "M_direct", "M_via_Kprime", "relerr"])?;
    for r in rows {
        w.write_record([r.k2, r.kprime_sq, r.mass_direct, r.mass_via_kprime, r.relerr].map(|x| format!("{x:e}")))?;
    }
    w.flush()?;
    Ok(())
}
