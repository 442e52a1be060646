//! Interaction Hamiltonians at frozen radius and minimal coupling to an
//! external field on a grid.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clifford::{gamma16, gamma8, GammaSet};
use crate::error::{Error, Result};
use crate::evolve::grid::{GridSpec, SpectralTransform, COMPONENTS};
use crate::exec::Exec;
use crate::generators::{FreeHamiltonian, TwoBodyParams};
use crate::jet::NVARS;
use crate::linalg::{ComplexMatrix, C64};

/// Smallest radius accepted by any evaluation involving `1/r`.
pub const R_MIN: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub power: i32,
}

/// Serialisable potentials: `V ≡ 0`, `V = e⁴/r²`, or `V = Σ c_n rⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialConfig {
    Zero,
    InverseSquare { e2: f64 },
    PowerSum { terms: Vec<PowerTerm> },
}

/// `V(r)` with `r = |x_{4..6}|`, valid for `r ≥ r_min`.
#[derive(Clone)]
pub struct PotentialSpec {
    label: String,
    v: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub r_min: f64,
    /// The coupling when the potential is `e⁴/r²`.
    pub inverse_square_e2: Option<f64>,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("label", &self.label)
            .field("r_min", &self.r_min)
            .finish_non_exhaustive()
    }
}

impl PotentialSpec {
    pub fn general(label: impl Into<String>, v: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            v: Arc::new(v),
            r_min: R_MIN,
            inverse_square_e2: None,
        }
    }

    pub fn zero() -> Self {
        Self::general("zero", |_| 0.0)
    }

    /// `V(r) = e⁴/r²`
    pub fn inverse_square(e2: f64) -> Self {
        Self {
            inverse_square_e2: Some(e2),
            ..Self::general(format!("inverse-square(e2={e2})"), move |r| e2 * e2 / (r * r))
        }
    }

    pub fn from_config(c: &PotentialConfig) -> Result<Self> {
        Ok(match c {
            PotentialConfig::Zero => Self::zero(),
            PotentialConfig::InverseSquare { e2 } => {
                if !e2.is_finite() {
                    return Err(Error::Config("e2 must be finite".into()));
                }
                Self::inverse_square(*e2)
            }
            PotentialConfig::PowerSum { terms } => {
                if terms.iter().any(|t| !t.coeff.is_finite()) {
                    return Err(Error::Config("power-sum coefficients must be finite".into()));
                }
                let terms = terms.clone();
                Self::general("power-sum", move |r| terms.iter().map(|t| t.coeff * r.powi(t.power)).sum())
            }
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r >= self.r_min) {
            return Err(Error::domain("r", r));
        }
        Ok((self.v)(r))
    }
}

/// A Hamiltonian matrix at fixed radius:
/// `Σ_A λ_A Γ_0Γ_A p_A + μ Γ_0 + c Γ_0Γ_7`, the last term only on the 16×16 set.
#[derive(Clone, Debug)]
pub struct FrozenHamiltonian {
    gammas: GammaSet,
    free: FreeHamiltonian,
    /// `μ`, the coefficient of `Γ_0`.
    pub mass_term: f64,
    /// `c = e²/r`, the coefficient of `Γ_0Γ_7`.
    pub coulomb: f64,
}

impl FrozenHamiltonian {
    pub fn dim(&self) -> usize {
        self.gammas.dim()
    }

    pub fn matrix(&self, p: &[f64; NVARS]) -> ComplexMatrix {
        let g = &self.gammas;
        let mut h = g.gamma(0).scale_re(self.mass_term);
        for (a, pa) in p.iter().enumerate() {
            h = &h + &g.alpha(a + 1).scale_re(self.free.coeff(a) * pa);
        }
        if self.coulomb != 0.0 {
            h = &h + &g.alpha(7).scale_re(self.coulomb);
        }
        h
    }

    /// The scalar `H²` must equal: `λ_A² p_A² + μ² + c²`.
    pub fn energy_sq(&self, p: &[f64; NVARS]) -> f64 {
        let kin: f64 = p.iter().enumerate().map(|(a, x)| (self.free.coeff(a) * x).powi(2)).sum();
        kin + self.mass_term * self.mass_term + self.coulomb * self.coulomb
    }

    /// `‖H² - E² I‖_max`
    pub fn square_residual(&self, p: &[f64; NVARS]) -> f64 {
        let h = self.matrix(p);
        (&h * &h).dist(&ComplexMatrix::identity(self.dim()).scale_re(self.energy_sq(p)))
    }
}

/// `H = Γ_0Γ_A p_A + Γ_0 {m² + V(r)}^{1/2}` at frozen `r`.
pub fn hamiltonian_v(params: &TwoBodyParams, pot: &PotentialSpec, r: f64) -> Result<FrozenHamiltonian> {
    let free = params.free();
    let radicand = free.mass * free.mass + pot.value(r)?;
    if !(radicand >= 0.0) {
        return Err(Error::domain("r", r));
    }
    Ok(FrozenHamiltonian {
        gammas: gamma8(),
        free,
        mass_term: radicand.sqrt(),
        coulomb: 0.0,
    })
}

/// `H = Γ_0Γ_A p_A + (e²/r) Γ_0Γ_7 + Γ_0 m` on the 16×16 set; the mass term
/// uses the 16×16 `Γ_0`.
pub fn hamiltonian_coulomb16(params: &TwoBodyParams, r: f64) -> Result<FrozenHamiltonian> {
    if !(r.is_finite() && r >= R_MIN) {
        return Err(Error::domain("r", r));
    }
    let free = params.free();
    Ok(FrozenHamiltonian {
        gammas: gamma16(),
        free,
        mass_term: free.mass,
        coulomb: params.e2 / r,
    })
}

/// Shape of one field component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldProfile {
    Constant {
        value: f64,
    },
    /// `amplitude · cos(wavenumber · x_along - omega · t + phase)`
    Cosine {
        amplitude: f64,
        wavenumber: f64,
        along: usize,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        omega: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldComponent {
    /// 1-based index `A` of `A_A`.
    pub axis: usize,
    #[serde(flatten)]
    pub profile: FieldProfile,
}

/// External potentials `A_A(t, x)`; `A_1..3` may depend on `x_1..3` only and
/// `A_4..6` on `x_4..6` only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub charge: f64,
    #[serde(default)]
    pub components: Vec<FieldComponent>,
}

impl FieldSpec {
    pub fn none() -> Self {
        Self {
            charge: 0.0,
            components: Vec::new(),
        }
    }

    pub fn constant(charge: f64, a: [f64; NVARS]) -> Self {
        Self {
            charge,
            components: a
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| FieldComponent {
                    axis: i + 1,
                    profile: FieldProfile::Constant { value: *v },
                })
                .collect(),
        }
    }

    pub fn validated(self) -> Result<Self> {
        if !self.charge.is_finite() {
            return Err(Error::Config("field charge must be finite".into()));
        }
        for c in &self.components {
            if !(1..=NVARS).contains(&c.axis) {
                return Err(Error::Config(format!("field axis {} outside 1..=6", c.axis)));
            }
            match c.profile {
                FieldProfile::Constant { value } if !value.is_finite() => {
                    return Err(Error::Config("field values must be finite".into()));
                }
                FieldProfile::Cosine {
                    amplitude,
                    wavenumber,
                    along,
                    phase,
                    omega,
                } => {
                    if ![amplitude, wavenumber, phase, omega].iter().all(|v| v.is_finite()) {
                        return Err(Error::Config("field parameters must be finite".into()));
                    }
                    if !(1..=NVARS).contains(&along) || (along <= 3) != (c.axis <= 3) {
                        return Err(Error::Config(format!(
                            "A_{} may only depend on coordinates of its own particle group, not x_{along}",
                            c.axis
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(self)
    }

    /// `A_A(t, x)` for all six components.
    pub fn potential(&self, t: f64, x: &[f64; NVARS]) -> [f64; NVARS] {
        let mut a = [0.0; NVARS];
        for c in &self.components {
            a[c.axis - 1] += match c.profile {
                FieldProfile::Constant { value } => value,
                FieldProfile::Cosine {
                    amplitude,
                    wavenumber,
                    along,
                    phase,
                    omega,
                } => amplitude * (wavenumber * x[along - 1] - omega * t + phase).cos(),
            };
        }
        a
    }

    /// The vector `A` when the field is the same at every point and time.
    pub fn uniform_static(&self) -> Option<[f64; NVARS]> {
        let mut a = [0.0; NVARS];
        for c in &self.components {
            match c.profile {
                FieldProfile::Constant { value } => a[c.axis - 1] += value,
                FieldProfile::Cosine {
                    amplitude,
                    wavenumber,
                    phase,
                    omega,
                    ..
                } if wavenumber == 0.0 && omega == 0.0 => a[c.axis - 1] += amplitude * phase.cos(),
                FieldProfile::Cosine { amplitude, .. } if amplitude == 0.0 => {}
                FieldProfile::Cosine { .. } => return None,
            }
        }
        Some(a)
    }

    /// Fails if any component varies along a coordinate the grid does not sample.
    pub fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        for c in &self.components {
            if let FieldProfile::Cosine {
                along, wavenumber, amplitude, ..
            } = c.profile
            {
                if wavenumber != 0.0 && amplitude != 0.0 && !grid.active_axes.contains(&along) {
                    return Err(Error::Grid(format!("field A_{} is sampled off-grid along inactive axis {along}", c.axis)));
                }
            }
        }
        Ok(())
    }
}

/// Minimal coupling `p_A → p_A - e A_A` applied to a site-major field on a
/// grid: momentum terms act spectrally, the field terms pointwise.
#[derive(Clone)]
pub struct MinimalCoupling {
    pub free: FreeHamiltonian,
    pub fields: FieldSpec,
    gammas: GammaSet,
    fft: SpectralTransform,
}

impl MinimalCoupling {
    pub fn new(free: FreeHamiltonian, fields: FieldSpec, grid: &GridSpec) -> Result<Self> {
        let fields = fields.validated()?;
        fields.check_grid(grid)?;
        Ok(Self {
            free,
            fields,
            gammas: gamma8(),
            fft: SpectralTransform::new(grid),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.fft.spec()
    }

    pub fn transform(&self) -> &SpectralTransform {
        &self.fft
    }

    /// Free `H(k)`.
    pub fn kinetic(&self, k: &[f64; NVARS]) -> ComplexMatrix {
        self.free.matrix(&self.gammas, k)
    }

    /// `-e Σ_A λ_A Γ_0Γ_A A_A(t, x)`
    pub fn field_term(&self, t: f64, x: &[f64; NVARS]) -> ComplexMatrix {
        let a = self.fields.potential(t, x);
        let mut w = ComplexMatrix::zeros(8);
        for (i, ai) in a.iter().enumerate() {
            if *ai != 0.0 {
                w = &w + &self.gammas.alpha(i + 1).scale_re(-self.fields.charge * self.free.coeff(i) * ai);
            }
        }
        w
    }

    /// `ψ ↦ Hψ` at time `t`.
    pub fn apply(&self, psi: &[C64], t: f64, exec: Exec) -> Vec<C64> {
        let grid = self.grid();
        let mut spectral = psi.to_vec();
        self.fft.forward(&mut spectral, exec);
        exec.for_each_chunk(&mut spectral, COMPONENTS, |site, spinor| {
            let out = self.kinetic(&grid.momentum(site)).mul_vec(spinor);
            spinor.copy_from_slice(&out);
        });
        self.fft.inverse(&mut spectral, exec);
        if self.fields.components.is_empty() {
            return spectral;
        }
        exec.for_each_chunk(&mut spectral, COMPONENTS, |site, spinor| {
            let start = site * COMPONENTS;
            let w = self.field_term(t, &grid.position(site)).mul_vec(&psi[start..start + COMPONENTS]);
            for (o, v) in spinor.iter_mut().zip(w) {
                *o += v;
            }
        });
        spectral
    }
}

/// Input of a point spectrum: a potential and optionally a uniform field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Total mass (equal-mass convention).
    #[serde(default = "unit_mass")]
    pub m: f64,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub fields: Option<FieldSpec>,
}

fn unit_mass() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coulomb16Spectrum {
    pub e2: f64,
    pub eigenvalues: Vec<f64>,
    pub square_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub potential: String,
    pub r: f64,
    pub p: [f64; NVARS],
    /// `p² + m² + V(r)`
    pub energy_sq: f64,
    /// Ascending eigenvalues of the frozen-radius square-root Hamiltonian.
    pub eigenvalues: Vec<f64>,
    pub square_residual: f64,
    /// The linear 16×16 form, for inverse-square potentials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coulomb16: Option<Coulomb16Spectrum>,
    /// Eigenvalues at `p - eA` when a uniform field is configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupled_eigenvalues: Option<Vec<f64>>,
}

fn sorted_eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
    let mut ev = h.hermitian_eigenvalues();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Spectra at frozen `r` and momentum `p`.
pub fn spectrum(cfg: &SpectrumConfig, r: f64, p: [f64; NVARS]) -> Result<SpectrumReport> {
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("momentum components must be finite".into()));
    }
    let pot = PotentialSpec::from_config(&cfg.potential)?;
    let params = TwoBodyParams::equal(cfg.m)?;
    let h = hamiltonian_v(&params, &pot, r)?;
    let coulomb16 = match pot.inverse_square_e2 {
        Some(e2) => {
            let c = hamiltonian_coulomb16(&params.with_coupling(e2), r)?;
            Some(Coulomb16Spectrum {
                e2,
                eigenvalues: sorted_eigenvalues(&c.matrix(&p)),
                square_residual: c.square_residual(&p),
            })
        }
        None => None,
    };
    let coupled_eigenvalues = match &cfg.fields {
        None => None,
        Some(f) => {
            let f = f.clone().validated()?;
            let a = f
                .uniform_static()
                .ok_or_else(|| Error::Config("a point spectrum needs a uniform static field".into()))?;
            let shifted: [f64; NVARS] = std::array::from_fn(|i| p[i] - f.charge * a[i]);
            Some(sorted_eigenvalues(&h.matrix(&shifted)))
        }
    };
    Ok(SpectrumReport {
        potential: pot.label().to_string(),
        r,
        p,
        energy_sq: h.energy_sq(&p),
        eigenvalues: sorted_eigenvalues(&h.matrix(&p)),
        square_residual: h.square_residual(&p),
        coulomb16,
        coupled_eigenvalues,
    })
}
