//! Position operators, the positive-energy projector and the relative
//! velocity operator with its subluminality bound.

use serde::{Deserialize, Serialize};

use crate::clifford::{gamma8, spin_tensors};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::generators::{adjoint_fn, foldy_u, gamma_dot, hamiltonian_free, EnergyJets, FoldyNormalization, MassMode, TwoBodyParams};
use crate::jet::{JetMatrix, NVARS};
use crate::linalg::{ComplexMatrix, C64, I};
use crate::opcalc::{commutator_at, conjugate, DiffOp, MomentumPoint};

fn check_axis(what: &'static str, index: usize, hi: usize) -> Result<usize> {
    if (1..=hi).contains(&index) {
        Ok(index - 1)
    } else {
        Err(Error::IndexOutOfRange { what, index, lo: 1, hi })
    }
}

/// Matrix part of the printed position operator `X_A - x_A` (0-based axis).
fn position_matrix(axis: usize, m: f64, q: &MomentumPoint, k: usize) -> Result<JetMatrix> {
    let g = gamma8();
    let st = spin_tensors(&g);
    let s = EnergyJets::new(m, q, k)?;
    let id = ComplexMatrix::identity(8);
    let gp = gamma_dot(&g, &s.x, 0);
    let gq = gamma_dot(&g, &s.x, 3);
    let m_plus_gq = &JetMatrix::constant(&id.scale_re(m), k) + &gq;
    let e2 = &s.e * &s.e;
    let mm2 = &s.mass * &s.mass;
    let a = axis % 3;
    let spin_sum = |spin: &dyn Fn(usize) -> ComplexMatrix, offset: usize| {
        (0..3)
            .filter(|&b| b != a)
            .fold(JetMatrix::zeros(8, k), |acc, b| &acc + &JetMatrix::from_scalar(&s.x[b + offset], &spin(b)))
    };
    if axis < 3 {
        // S1_ab p_b / (E(E+M)) + i(Γ_a/(2E) - p_a Γ_c p_c / (2E²(E+M))) (m + Γ_{c+3}p_{c+3}) / M
        let e_em = &s.e * &(&s.e + &s.mass);
        let orbital = spin_sum(&|b| st.s1(a, b).clone(), 0).scale_jet(&e_em.recip("E(E+M)")?);
        let first = JetMatrix::from_scalar(&s.e.scale(2.0).recip("2E")?, g.gamma(a + 1));
        let second = gp.scale_jet(&(&s.x[a] * &(&e2 * &(&s.e + &s.mass)).scale(2.0).recip("2E²(E+M)")?));
        let bracket = (&first - &second).scale(I);
        Ok(&orbital + &(&bracket * &m_plus_gq).scale_jet(&s.mass.recip("M")?))
    } else {
        // S2_ab p_{b+3} / (M(M+m)) + iΓ_{a+3}/(2M) - i p_{a+3} Γ_{c+3}p_{c+3} / (2M²(M+m))
        //   - i p_{a+3} Γ_c p_c (m + Γ_{c+3}p_{c+3}) / (2E²M²)
        let m_mm = &s.mass * &s.mass.add_const(m);
        let internal = spin_sum(&|b| st.s2_shifted(a + 3, b + 3).clone(), 3).scale_jet(&m_mm.recip("M(M+m)")?);
        let t1 = JetMatrix::from_scalar(&s.mass.scale(2.0).recip("2M")?, g.gamma(a + 4));
        let t2 = gq.scale_jet(&(&s.x[a + 3] * &(&mm2 * &s.mass.add_const(m)).scale(2.0).recip("2M²(M+m)")?));
        let t3 = (&gp * &m_plus_gq).scale_jet(&(&s.x[a + 3] * &(&e2 * &mm2).scale(2.0).recip("2E²M²")?));
        Ok(&internal + &(&(&t1 - &t2) - &t3).scale(I))
    }
}

/// `X_A` as printed: `x_A` plus a matrix function of momentum. `axis` is 1..=6.
pub fn position_x(axis: usize, params: &TwoBodyParams) -> Result<DiffOp> {
    params.require(MassMode::Equal)?;
    let axis = check_axis("position", axis, NVARS)?;
    let m = params.m;
    DiffOp::position(axis, 8).add(&DiffOp::multiplication(8, move |q, k| position_matrix(axis, m, q, k)))
}

/// `U† x_A U` built by the conjugation engine, independent of the printed form.
pub fn position_conjugated(axis: usize, params: &TwoBodyParams) -> Result<DiffOp> {
    let axis = check_axis("position", axis, NVARS)?;
    let u = foldy_u(params, FoldyNormalization::Unitary)?;
    conjugate(adjoint_fn(u), &DiffOp::position(axis, 8))
}

/// `P+ = (I + H/E)/2` for an order-0 `h` with `H² = E² I`.
pub fn positive_projector(h: &DiffOp, q: &MomentumPoint) -> Result<ComplexMatrix> {
    if h.order() != 0 {
        return Err(Error::Params("positive projector needs a multiplication operator".into()));
    }
    let hv = h.eval_jets(q, 0)?.a().value();
    let e2 = (&hv * &hv).trace().re / hv.dim() as f64;
    if !(e2 > 0.0) {
        return Err(Error::domain("E", e2.max(0.0).sqrt()));
    }
    let square_residual = (&hv * &hv).dist(&ComplexMatrix::identity(hv.dim()).scale_re(e2));
    if square_residual > 1e-10 * e2.max(1.0) {
        return Err(Error::Params(format!("H² is not scalar (residual {square_residual:e})")));
    }
    let e = e2.sqrt();
    Ok((&ComplexMatrix::identity(hv.dim()) + &hv.scale_re(1.0 / e)).scale_re(0.5))
}

/// `V_{a+3} = -i[X_{a+3}, H]` at `q` for the free Hamiltonian, `a` in 1..=3.
pub fn velocity(a: usize, params: &TwoBodyParams, q: &MomentumPoint) -> Result<ComplexMatrix> {
    let a = check_axis("velocity", a, 3)?;
    let x = position_x(a + 4, params)?;
    let h = hamiltonian_free(params)?;
    Ok(commutator_at(&x, &h, q, 0)?.a().value().scale(-I))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocitySpectrum {
    pub point: MomentumPoint,
    /// Ascending eigenvalues of `V_4`, `V_5`, `V_6`.
    pub components: [Vec<f64>; 3],
    /// Ascending eigenvalues of `V_4² + V_5² + V_6²`.
    pub v2: Vec<f64>,
    /// `tr(P+ V_{a+3} P+)/4`
    pub positive_expectation: [f64; 3],
    /// Largest of `‖V - V†‖`.
    pub hermiticity_residual: f64,
}

pub fn velocity_spectrum(params: &TwoBodyParams, q: &MomentumPoint) -> Result<VelocitySpectrum> {
    let v: Vec<ComplexMatrix> = (1..=3).map(|a| velocity(a, params, q)).collect::<Result<_>>()?;
    let proj = positive_projector(&hamiltonian_free(params)?, q)?;
    let v2 = v.iter().fold(ComplexMatrix::zeros(8), |acc, va| &acc + &(va * va));
    let expect = |va: &ComplexMatrix| (&(&proj * va) * &proj).trace().re / 4.0;
    Ok(VelocitySpectrum {
        point: *q,
        components: std::array::from_fn(|a| v[a].hermitian_eigenvalues()),
        v2: v2.hermitian_eigenvalues(),
        positive_expectation: std::array::from_fn(|a| expect(&v[a])),
        hermiticity_residual: v.iter().map(ComplexMatrix::hermiticity_residual).fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubluminalEntry {
    pub point: MomentumPoint,
    pub max_v2: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubluminalReport {
    pub entries: Vec<SubluminalEntry>,
    pub pass: bool,
    pub min_margin: f64,
}

/// Largest eigenvalue of `V²` per point; passes iff every one is below 1.
pub fn subluminal_check(params: &TwoBodyParams, points: &[MomentumPoint], exec: Exec) -> Result<SubluminalReport> {
    let rows = exec.map(points, |q| -> Result<SubluminalEntry> {
        let s = velocity_spectrum(params, q)?;
        let max_v2 = s.v2.last().copied().unwrap_or(0.0);
        Ok(SubluminalEntry {
            point: *q,
            max_v2,
            margin: 1.0 - max_v2,
            pass: max_v2 < 1.0,
        })
    });
    let entries: Vec<SubluminalEntry> = rows.into_iter().collect::<Result<_>>()?;
    Ok(SubluminalReport {
        pass: entries.iter().all(|e| e.pass),
        min_margin: entries.iter().map(|e| e.margin).fold(f64::INFINITY, f64::min),
        entries,
    })
}

/// `∂E/∂p_A` for the free equal-mass energy, from the jet engine.
pub fn energy_gradient(params: &TwoBodyParams, q: &MomentumPoint) -> Result<[f64; NVARS]> {
    let s = EnergyJets::new(params.m, q, 1)?;
    Ok(std::array::from_fn(|a| s.e.partial(a)))
}

/// `C64` helper for tests and reports: the expected `iδ_AB`.
pub fn canonical_bracket(a: usize, b: usize) -> C64 {
    if a == b {
        I
    } else {
        C64::new(0.0, 0.0)
    }
}
