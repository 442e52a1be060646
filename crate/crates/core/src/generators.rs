//! Free Hamiltonians, the Poincaré generator sets in the original and the
//! canonical (block-diagonal) representation, and the momentum-dependent
//! unitary connecting them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clifford::{gamma8, spin_tensors, GammaSet, SpinTensorSet};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::jet::{sum_sq, Jet, JetMatrix, NVARS};
use crate::linalg::{ComplexMatrix, C64};
use crate::opcalc::{conjugate, op_equal_at, DiffOp, MatrixFn, MomentumPoint, ResidualReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassMode {
    Equal,
    Unequal,
}

/// Masses and coupling of the two-particle system.
///
/// In equal-mass mode `m` is the **total** mass: each particle carries
/// `m/2`, and the internal momentum `p_{a+3}` is twice the relative momentum
/// `K_a`. Unequal-mass mode uses `m1`, `m2` directly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoBodyParams {
    pub mode: MassMode,
    pub m: f64,
    pub m1: f64,
    pub m2: f64,
    #[serde(default)]
    pub e2: f64,
}

impl TwoBodyParams {
    pub fn equal(m: f64) -> Result<Self> {
        Self {
            mode: MassMode::Equal,
            m,
            m1: m / 2.0,
            m2: m / 2.0,
            e2: 0.0,
        }
        .validated()
    }

    pub fn unequal(m1: f64, m2: f64) -> Result<Self> {
        Self {
            mode: MassMode::Unequal,
            m: m1 + m2,
            m1,
            m2,
            e2: 0.0,
        }
        .validated()
    }

    pub fn with_coupling(mut self, e2: f64) -> Self {
        self.e2 = e2;
        self
    }

    pub fn validated(self) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(self.m) && ok(self.m1) && ok(self.m2)) {
            return Err(Error::Params(format!(
                "masses must be positive and finite (m = {}, m1 = {}, m2 = {})",
                self.m, self.m1, self.m2
            )));
        }
        if !self.e2.is_finite() {
            return Err(Error::Params("coupling e2 must be finite".into()));
        }
        if self.mode == MassMode::Equal && (self.m1 != self.m2 || (self.m1 + self.m2 - self.m).abs() > 1e-15 * self.m) {
            return Err(Error::Params("equal-mass mode requires m1 = m2 = m/2".into()));
        }
        Ok(self)
    }

    pub(crate) fn require(&self, mode: MassMode) -> Result<()> {
        if self.mode != mode {
            return Err(Error::Params(format!("operation requires {mode:?} mass mode")));
        }
        Ok(())
    }

    /// Total rest mass `m1 + m2`.
    pub fn total_mass(&self) -> f64 {
        match self.mode {
            MassMode::Equal => self.m,
            MassMode::Unequal => self.m1 + self.m2,
        }
    }

    /// Free Hamiltonian coefficients for this mass mode.
    pub fn free(&self) -> FreeHamiltonian {
        match self.mode {
            MassMode::Equal => FreeHamiltonian {
                internal_scale: 1.0,
                mass: self.m,
            },
            MassMode::Unequal => FreeHamiltonian {
                internal_scale: (self.m1 + self.m2) / (self.m1 * self.m2).sqrt(),
                mass: self.m1 + self.m2,
            },
        }
    }
}

/// `H(p) = Γ_0Γ_a p_a + λ Γ_0Γ_{a+3} p_{a+3} + μ Γ_0` with `λ = internal_scale`
/// and `μ = mass`; `H² = E(p)² I` with `E² = p_a² + λ² p_{a+3}² + μ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeHamiltonian {
    pub internal_scale: f64,
    pub mass: f64,
}

impl FreeHamiltonian {
    /// Coefficient of `Γ_0Γ_A p_A`: 1 for the centre-of-mass axes, `λ` for the internal ones.
    pub fn coeff(&self, var: usize) -> f64 {
        if var < 3 {
            1.0
        } else {
            self.internal_scale
        }
    }

    pub fn matrix(&self, g: &GammaSet, p: &[f64; NVARS]) -> ComplexMatrix {
        let mut h = g.gamma(0).scale_re(self.mass);
        for (a, pa) in p.iter().enumerate() {
            h = &h + &g.alpha(a + 1).scale_re(self.coeff(a) * pa);
        }
        h
    }

    pub fn jet(&self, g: &GammaSet, x: &[Jet; NVARS]) -> JetMatrix {
        let k = x[0].order();
        let mut h = JetMatrix::constant(&g.gamma(0).scale_re(self.mass), k);
        for a in 0..NVARS {
            h = &h + &JetMatrix::from_scalar(&x[a].scale(self.coeff(a)), &g.alpha(a + 1));
        }
        h
    }

    pub fn energy(&self, p: &[f64; NVARS]) -> f64 {
        let s: f64 = p.iter().enumerate().map(|(a, x)| (self.coeff(a) * x).powi(2)).sum();
        (s + self.mass * self.mass).sqrt()
    }

    pub fn energy_gradient(&self, p: &[f64; NVARS]) -> [f64; NVARS] {
        let e = self.energy(p);
        std::array::from_fn(|a| self.coeff(a).powi(2) * p[a] / e)
    }
}

/// `E = (p_A p_A + m²)^{1/2}` and `M = (m² + p_{a+3}²)^{1/2}` as jets.
#[derive(Clone, Debug)]
pub struct EnergyJets {
    pub x: [Jet; NVARS],
    pub e: Jet,
    pub mass: Jet,
}

impl EnergyJets {
    pub fn new(m: f64, q: &MomentumPoint, order: usize) -> Result<Self> {
        let x = q.coordinates(order);
        let e = sum_sq(&x, order).add_const(m * m).sqrt("E")?;
        let mass = sum_sq(&x[3..], order).add_const(m * m).sqrt("M")?;
        Ok(Self { x, e, mass })
    }
}

/// `Σ_c Γ_{c+offset} p_{c+offset}` over three consecutive axes.
pub(crate) fn gamma_dot(g: &GammaSet, x: &[Jet; NVARS], offset: usize) -> JetMatrix {
    let k = x[0].order();
    (0..3).fold(JetMatrix::zeros(g.dim(), k), |acc, c| {
        &acc + &JetMatrix::from_scalar(&x[c + offset], g.gamma(c + offset + 1))
    })
}

/// `H = Γ_0Γ_A p_A + Γ_0 m`.
pub fn hamiltonian_free(params: &TwoBodyParams) -> Result<DiffOp> {
    params.require(MassMode::Equal)?;
    Ok(free_op(params.free()))
}

/// `H' = Γ_0Γ_a p_a + ((m1+m2)/√(m1m2)) Γ_0Γ_{a+3} p_{a+3} + (m1+m2) Γ_0`
/// with `p_{a+3}` the rescaled relative momentum `K'_a`.
pub fn hamiltonian_unequal(params: &TwoBodyParams) -> Result<DiffOp> {
    params.require(MassMode::Unequal)?;
    Ok(free_op(params.free()))
}

fn free_op(h: FreeHamiltonian) -> DiffOp {
    let g = gamma8();
    DiffOp::multiplication(8, move |q, k| Ok(h.jet(&g, &q.coordinates(k))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldyNormalization {
    /// `2{ME(E+M)(M+m)}^{1/2}`, the norm of the numerator.
    #[default]
    Unitary,
    /// `2{ME(E+m)(M+m)}^{1/2}`, as originally printed; unitary only when
    /// `p_{a+3} = 0`.
    AsPrinted,
}

/// `U(p) = (E + M + Γ_c p_c)(M + m + Γ_{c+3} p_{c+3}) / N(p)`, which maps the
/// free Hamiltonian to `Γ_0 E`.
pub fn foldy_u(params: &TwoBodyParams, norm: FoldyNormalization) -> Result<MatrixFn> {
    params.require(MassMode::Equal)?;
    let g = gamma8();
    let m = params.m;
    Ok(Arc::new(move |q, k| {
        let s = EnergyJets::new(m, q, k)?;
        let id = ComplexMatrix::identity(8);
        let e_plus_m_int = &s.e + &s.mass;
        let left = &JetMatrix::from_scalar(&e_plus_m_int, &id) + &gamma_dot(&g, &s.x, 0);
        let right = &JetMatrix::from_scalar(&s.mass.add_const(m), &id) + &gamma_dot(&g, &s.x, 3);
        let second = match norm {
            FoldyNormalization::Unitary => e_plus_m_int,
            FoldyNormalization::AsPrinted => s.e.add_const(m),
        };
        let denom = (&(&(&s.mass * &s.e) * &second) * &s.mass.add_const(m)).sqrt("ME(E+M)(M+m)")?;
        let inv = denom.scale(2.0).recip("normalisation of U")?;
        Ok((&left * &right).scale_jet(&inv))
    }))
}

/// `U†`
pub fn adjoint_fn(u: MatrixFn) -> MatrixFn {
    Arc::new(move |q, k| Ok(u(q, k)?.adjoint()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Raw,
    Canonical,
}

/// The ten generators, in the fixed order used by reports and tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Generator {
    P0,
    P(usize),
    J(usize, usize),
    K(usize),
}

impl Generator {
    pub const COUNT: usize = 10;

    pub fn all() -> [Generator; 10] {
        use Generator::*;
        [P0, P(0), P(1), P(2), J(0, 1), J(0, 2), J(1, 2), K(0), K(1), K(2)]
    }

    pub fn index(self) -> usize {
        Self::all().iter().position(|g| *g == self).expect("canonical generator label")
    }

    /// Report label, 1-based: `P0`, `P1`, `J12`, `K3`, ...
    pub fn label(self) -> String {
        match self {
            Generator::P0 => "P0".into(),
            Generator::P(a) => format!("P{}", a + 1),
            Generator::J(a, b) => format!("J{}{}", a + 1, b + 1),
            Generator::K(a) => format!("K{}", a + 1),
        }
    }
}

/// `P_0`, `P_a`, `J_ab` and `K_a = J_0a` on the eight-component space.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    pub kind: GeneratorKind,
    pub params: TwoBodyParams,
    pub p0: DiffOp,
    pub p: [DiffOp; 3],
    /// `J_12`, `J_13`, `J_23`
    j: [DiffOp; 3],
    pub k: [DiffOp; 3],
}

fn j_slot(a: usize, b: usize) -> usize {
    match (a.min(b), a.max(b)) {
        (0, 1) => 0,
        (0, 2) => 1,
        (1, 2) => 2,
        _ => unreachable!("J index pair must be distinct and < 3"),
    }
}

impl GeneratorSet {
    /// `J_ab` for `a != b` (0-based), antisymmetric in its labels.
    pub fn j(&self, a: usize, b: usize) -> DiffOp {
        assert_ne!(a, b, "J_aa vanishes");
        let op = self.j[j_slot(a, b)].clone();
        if a < b {
            op
        } else {
            op.scale(C64::new(-1.0, 0.0))
        }
    }

    pub fn get(&self, g: Generator) -> DiffOp {
        match g {
            Generator::P0 => self.p0.clone(),
            Generator::P(a) => self.p[a].clone(),
            Generator::J(a, b) => self.j(a, b),
            Generator::K(a) => self.k[a].clone(),
        }
    }

    pub fn all(&self) -> Vec<(Generator, DiffOp)> {
        Generator::all().into_iter().map(|g| (g, self.get(g))).collect()
    }
}

fn spin_op(m: &ComplexMatrix) -> DiffOp {
    DiffOp::constant(m.clone())
}

/// `x_a p_b - x_b p_a` on the axes `a + offset`, `b + offset`.
fn orbital(a: usize, b: usize, offset: usize) -> Result<DiffOp> {
    let x = |i| DiffOp::position(i + offset, 8);
    let p = |i| DiffOp::momentum(i + offset, 8);
    x(a).compose(&p(b))?.sub(&x(b).compose(&p(a))?)
}

fn rotations(st: &SpinTensorSet) -> Result<[DiffOp; 3]> {
    let build = |a, b| -> Result<DiffOp> {
        orbital(a, b, 0)?.add(&orbital(a, b, 3)?)?.add(&spin_op(st.s(a, b)))
    };
    Ok([build(0, 1)?, build(0, 2)?, build(1, 2)?])
}

/// `t p_a`
fn time_momentum(a: usize) -> DiffOp {
    DiffOp::multiplication(8, move |q, k| Ok(JetMatrix::scalar(&Jet::variable(a, q.p[a], k).scale(q.t), 8)))
}

/// `-½ (x_a h + h x_a)`
fn symmetrised_position(a: usize, h: &DiffOp) -> Result<DiffOp> {
    let x = DiffOp::position(a, 8);
    Ok(x.compose(h)?.add(&h.compose(&x)?)?.scale(C64::new(-0.5, 0.0)))
}

/// `Σ_b (m_ab + spin_ab) p_b`
fn internal_angular_momentum(a: usize, spin: impl Fn(usize, usize) -> ComplexMatrix) -> Result<DiffOp> {
    let mut acc = DiffOp::zero(8);
    for b in (0..3).filter(|&b| b != a) {
        let jab = orbital(a, b, 3)?.add(&DiffOp::constant(spin(a, b)))?;
        acc = acc.add(&jab.compose(&DiffOp::momentum(b, 8))?)?;
    }
    Ok(acc)
}

/// Generators with `P_0 = H`, `J_ab = M_ab + m_ab + S_ab` and
/// `J_0a = t p_a - ½(x_a H + H x_a) - (H/√H²)(S^(2)_ab + m_ab) p_b / (√H² + M)`,
/// where `√H²` is the scalar `E(p)`.
pub fn generators_raw(params: &TwoBodyParams) -> Result<GeneratorSet> {
    params.require(MassMode::Equal)?;
    let g = gamma8();
    let st = spin_tensors(&g);
    let h = hamiltonian_free(params)?;
    let m = params.m;
    let prefactor = {
        let g = g.clone();
        let hf = params.free();
        DiffOp::multiplication(8, move |q, k| {
            let s = EnergyJets::new(m, q, k)?;
            let w = (&s.e * &(&s.e + &s.mass)).recip("E(E+M)")?;
            Ok(hf.jet(&g, &s.x).scale_jet(&w))
        })
    };
    let k = std::array::from_fn(|a| -> Result<DiffOp> {
        let tail = prefactor.compose(&internal_angular_momentum(a, |a, b| st.s2(a, b).clone())?)?;
        time_momentum(a)
            .add(&symmetrised_position(a, &h)?)?
            .sub(&tail)
    });
    let [k0, k1, k2] = k;
    Ok(GeneratorSet {
        kind: GeneratorKind::Raw,
        params: *params,
        p0: h,
        p: std::array::from_fn(|a| DiffOp::momentum(a, 8)),
        j: rotations(&st)?,
        k: [k0?, k1?, k2?],
    })
}

/// `Γ_0 E` as an operator.
pub fn canonical_energy(params: &TwoBodyParams) -> Result<DiffOp> {
    params.require(MassMode::Equal)?;
    let g0 = gamma8().gamma(0).clone();
    let m = params.m;
    Ok(DiffOp::multiplication(8, move |q, k| {
        Ok(JetMatrix::from_scalar(&EnergyJets::new(m, q, k)?.e, &g0))
    }))
}

/// Canonical generators: `P_0 = Γ_0 E`, `P_a = p_a`, the same `J_ab`, and
/// `J_0a = t p_a - ½(x_a P_0 + P_0 x_a) - Γ_0 (m_ab + S_ab) p_b / (E + M)`.
pub fn generators_canonical(params: &TwoBodyParams) -> Result<GeneratorSet> {
    params.require(MassMode::Equal)?;
    let g = gamma8();
    let st = spin_tensors(&g);
    let p0 = canonical_energy(params)?;
    let m = params.m;
    let g0 = g.gamma(0).clone();
    let prefactor = DiffOp::multiplication(8, move |q, k| {
        let s = EnergyJets::new(m, q, k)?;
        Ok(JetMatrix::from_scalar(&(&s.e + &s.mass).recip("E+M")?, &g0))
    });
    let k = std::array::from_fn(|a| -> Result<DiffOp> {
        let tail = prefactor.compose(&internal_angular_momentum(a, |a, b| st.s(a, b).clone())?)?;
        time_momentum(a)
            .add(&symmetrised_position(a, &p0)?)?
            .sub(&tail)
    });
    let [k0, k1, k2] = k;
    Ok(GeneratorSet {
        kind: GeneratorKind::Canonical,
        params: *params,
        p0,
        p: std::array::from_fn(|a| DiffOp::momentum(a, 8)),
        j: rotations(&st)?,
        k: [k0?, k1?, k2?],
    })
}

/// Residuals of `U G_raw U†` against `G_canonical` for every generator, one
/// relation per generator (`equiv:P0`, ...). Never fails on a mismatch; the
/// residuals are the result.
pub fn equivalence_check(
    raw: &GeneratorSet,
    canonical: &GeneratorSet,
    u: MatrixFn,
    points: &[MomentumPoint],
    tol: f64,
    exec: Exec,
) -> Result<ResidualReport> {
    if raw.params != canonical.params {
        return Err(Error::Params("equivalence check needs both sets over the same parameters".into()));
    }
    let mut report = ResidualReport::default();
    for g in Generator::all() {
        let conj = conjugate(u.clone(), &raw.get(g))?;
        report.extend(op_equal_at(&format!("equiv:{}", g.label()), &conj, &canonical.get(g), points, tol, exec)?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcalc::commutator_at;

    fn params() -> TwoBodyParams {
        TwoBodyParams::equal(1.3).unwrap()
    }

    fn pt(p: [f64; 6], t: f64) -> MomentumPoint {
        MomentumPoint::new(p, t)
    }

    const SAMPLE: [[f64; 6]; 4] = [
        [0.3, -1.1, 0.8, 2.1, -0.4, 1.7],
        [-2.5, 0.2, 1.4, -0.9, 2.8, 0.0],
        [1.0, 1.0, -1.0, 0.5, 0.5, -2.5],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    ];

    #[test]
    fn params_validation() {
        assert!(TwoBodyParams::equal(0.0).is_err());
        assert!(TwoBodyParams::equal(f64::NAN).is_err());
        assert!(TwoBodyParams::unequal(1.0, -2.0).is_err());
        let p = TwoBodyParams::equal(2.0).unwrap();
        assert_eq!((p.m1, p.m2), (1.0, 1.0));
        assert_eq!(p.free().internal_scale, 1.0);
        assert!(hamiltonian_unequal(&p).is_err());
        let u = TwoBodyParams::unequal(1.0, 1.0).unwrap();
        assert!((u.free().internal_scale - 2.0).abs() < 1e-15);
        assert!(hamiltonian_free(&u).is_err());
    }

    #[test]
    fn free_hamiltonian_at_rest_and_pythagorean() {
        let h = hamiltonian_free(&params()).unwrap();
        let v = h.eval_jets(&MomentumPoint::at_rest(), 0).unwrap().a().value();
        let ev = v.hermitian_eigenvalues();
        for (i, e) in ev.iter().enumerate() {
            let want = if i < 4 { -1.3 } else { 1.3 };
            assert!((e - want).abs() < 1e-14);
        }
        // m = 0 is outside the positive-mass contract, so build the matrix directly
        let g = gamma8();
        let hm = FreeHamiltonian {
            internal_scale: 1.0,
            mass: 0.0,
        }
        .matrix(&g, &[3.0, 0.0, 0.0, 4.0, 0.0, 0.0]);
        for (i, e) in hm.hermitian_eigenvalues().iter().enumerate() {
            let want = if i < 4 { -5.0 } else { 5.0 };
            assert!((e - want).abs() < 1e-14);
        }
    }

    #[test]
    fn hamiltonian_squares_to_energy() {
        let prm = params();
        let h = hamiltonian_free(&prm).unwrap();
        for p in SAMPLE {
            let v = h.eval_jets(&pt(p, 0.0), 0).unwrap().a().value();
            assert!(v.hermiticity_residual() < 1e-15);
            let e2 = p.iter().map(|x| x * x).sum::<f64>() + prm.m * prm.m;
            assert!((&v * &v).dist(&ComplexMatrix::identity(8).scale_re(e2)) < 1e-12);
        }
    }

    #[test]
    fn unequal_hamiltonian_reduces_to_equal() {
        let m = 1.7;
        let u = hamiltonian_unequal(&TwoBodyParams::unequal(m / 2.0, m / 2.0).unwrap()).unwrap();
        let e = hamiltonian_free(&TwoBodyParams::equal(m).unwrap()).unwrap();
        for p in SAMPLE {
            // p_{a+3} of the equal-mass form is 2K while the unequal form takes K' = K
            let mut half = p;
            for x in &mut half[3..] {
                *x *= 0.5;
            }
            let hu = u.eval_jets(&pt(half, 0.0), 0).unwrap().a().value();
            let he = e.eval_jets(&pt(p, 0.0), 0).unwrap().a().value();
            assert!(hu.dist(&he) < 1e-14);
        }
        let h0 = hamiltonian_unequal(&TwoBodyParams::unequal(0.4, 2.1).unwrap())
            .unwrap()
            .eval_jets(&MomentumPoint::at_rest(), 0)
            .unwrap()
            .a()
            .value();
        for (i, e) in h0.hermitian_eigenvalues().iter().enumerate() {
            assert!((e.abs() - 2.5).abs() < 1e-14 && (e.signum() > 0.0) == (i >= 4));
        }
    }

    #[test]
    fn foldy_u_at_rest_is_identity() {
        let u = foldy_u(&params(), FoldyNormalization::Unitary).unwrap();
        let v = u(&MomentumPoint::at_rest(), 0).unwrap().value();
        assert!(v.dist(&ComplexMatrix::identity(8)) <= 1e-14);
    }

    #[test]
    fn foldy_u_is_unitary_and_diagonalises() {
        let prm = params();
        let u = foldy_u(&prm, FoldyNormalization::Unitary).unwrap();
        let printed = foldy_u(&prm, FoldyNormalization::AsPrinted).unwrap();
        let g = gamma8();
        for p in SAMPLE {
            let q = pt(p, 0.0);
            let uv = u(&q, 0).unwrap().value();
            assert!(uv.unitarity_residual() < 1e-12);
            let h = prm.free().matrix(&g, &p);
            let e = prm.free().energy(&p);
            let diag = &(&uv * &h) * &uv.adjoint();
            assert!(diag.dist(&g.gamma(0).scale_re(e)) < 1e-10);
            // the printed normalisation fails only off the p_{a+3} = 0 plane
            let pv = printed(&q, 0).unwrap().value();
            if p[3..].iter().any(|x| *x != 0.0) {
                assert!(pv.unitarity_residual() > 1e-3);
            } else {
                assert!(pv.unitarity_residual() < 1e-12);
            }
        }
    }

    #[test]
    fn foldy_u_jets_match_finite_differences() {
        let u = foldy_u(&params(), FoldyNormalization::Unitary).unwrap();
        let q = pt(SAMPLE[0], 0.0);
        let j = u(&q, 1).unwrap();
        let h = 1e-6;
        for var in 0..6 {
            let (mut a, mut b) = (q, q);
            a.p[var] += h;
            b.p[var] -= h;
            let fd = (&u(&a, 0).unwrap().value() - &u(&b, 0).unwrap().value()).scale_re(0.5 / h);
            assert!(fd.dist(&j.partial(var)) < 1e-8);
        }
    }

    #[test]
    fn rotation_generator_structure() {
        let set = generators_canonical(&params()).unwrap();
        let q = pt(SAMPLE[0], 0.0);
        let c = set.j(0, 1).evaluate(&q).unwrap();
        let id = ComplexMatrix::identity(8);
        // M_12 = i p_2 ∂_1 - i p_1 ∂_2
        assert!(c.b(0).unwrap().value().dist(&id.scale(C64::new(0.0, q.p[1]))) < 1e-15);
        assert!(c.b(1).unwrap().value().dist(&id.scale(C64::new(0.0, -q.p[0]))) < 1e-15);
        // m_12 acts on axes 4, 5
        assert!(c.b(3).unwrap().value().dist(&id.scale(C64::new(0.0, q.p[4]))) < 1e-15);
        let st = spin_tensors(&gamma8());
        assert!(c.a().value().dist(st.s(0, 1)) < 1e-15);
        // anti-Hermitian derivative coefficients, Hermitian spin part
        for v in 0..6 {
            assert!(c.b(v).unwrap().value().antihermiticity_residual() < 1e-15);
        }
        assert!(c.a().value().hermiticity_residual() < 1e-15);
        let minus = set.j(1, 0).evaluate(&q).unwrap();
        assert_eq!(minus.add(&c).grade_norms(), [0.0; 3]);
    }

    #[test]
    fn rotation_matches_direct_differentiation_of_test_function() {
        // (J_12 ψ)(p) for ψ = p_1 p_2^2 e_0 against the hand-differentiated value
        let set = generators_raw(&params()).unwrap();
        let q = pt(SAMPLE[1], 0.0);
        let c = set.j(0, 1).eval_jets(&q, 0).unwrap();
        let [p1, p2] = [q.p[0], q.p[1]];
        let psi = p1 * p2 * p2;
        let d1 = p2 * p2;
        let d2 = 2.0 * p1 * p2;
        let got: C64 = c.a().value().get(0, 0) * psi
            + c.b(0).unwrap().value().get(0, 0) * d1
            + c.b(1).unwrap().value().get(0, 0) * d2;
        let want = C64::new(0.0, p2 * d1 - p1 * d2) + st_entry() * psi;
        assert!((got - want).norm() < 1e-13);
    }

    fn st_entry() -> C64 {
        spin_tensors(&gamma8()).s(0, 1).get(0, 0)
    }

    #[test]
    fn raw_boost_at_rest() {
        let set = generators_raw(&params()).unwrap();
        let c = set.k[0].eval_jets(&MomentumPoint::at_rest(), 0).unwrap();
        let g = gamma8();
        let want = g.alpha(1).scale(C64::new(0.0, -0.5));
        assert!(c.a().value().dist(&want) < 1e-15);
    }

    #[test]
    fn translations_commute() {
        let set = generators_canonical(&params()).unwrap();
        let q = pt(SAMPLE[2], 1.5);
        for a in 0..3 {
            assert_eq!(commutator_at(&set.p0, &set.p[a], &q, 0).unwrap().grade_norms(), [0.0; 3]);
            for b in 0..3 {
                assert_eq!(commutator_at(&set.p[a], &set.p[b], &q, 0).unwrap().grade_norms(), [0.0; 3]);
            }
        }
        let raw = generators_raw(&params()).unwrap();
        for a in 0..3 {
            assert_eq!(commutator_at(&raw.p0, &raw.p[a], &q, 0).unwrap().grade_norms(), [0.0; 3]);
        }
    }

    #[test]
    fn generator_labels_are_stable() {
        let labels: Vec<String> = Generator::all().iter().map(|g| g.label()).collect();
        assert_eq!(labels, ["P0", "P1", "P2", "P3", "J12", "J13", "J23", "K1", "K2", "K3"]);
        for (i, g) in Generator::all().iter().enumerate() {
            assert_eq!(g.index(), i);
        }
    }
}
