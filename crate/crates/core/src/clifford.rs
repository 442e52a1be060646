//! Constant matrices: Pauli blocks, the 4×4 `s_a` and `τ_a`, the 8×8 gamma
//! set of signature (1,6), its 16×16 extension of signature (1,7), and the
//! spin tensors built from them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{levi_civita, ComplexMatrix, C64, I, ONE, ZERO};

const H: C64 = C64::new(0.5, 0.0);
const MH: C64 = C64::new(-0.5, 0.0);
const IH: C64 = C64::new(0.0, 0.5);
const MIH: C64 = C64::new(0.0, -0.5);

fn check_index(what: &'static str, a: usize) -> Result<usize> {
    if (1..=3).contains(&a) {
        Ok(a)
    } else {
        Err(Error::IndexOutOfRange {
            what,
            index: a,
            lo: 1,
            hi: 3,
        })
    }
}

/// Pauli matrix `σ_a`, `a ∈ {1, 2, 3}`.
pub fn pauli(a: usize) -> Result<ComplexMatrix> {
    Ok(match check_index("pauli", a)? {
        1 => ComplexMatrix::from_row_major(&[ZERO, ONE, ONE, ZERO]),
        2 => ComplexMatrix::from_row_major(&[ZERO, -I, I, ZERO]),
        _ => ComplexMatrix::from_row_major(&[ONE, ZERO, ZERO, -ONE]),
    })
}

/// The 4×4 matrix `s_a`.
#[rustfmt::skip]
pub fn spin_s(a: usize) -> Result<ComplexMatrix> {
    Ok(ComplexMatrix::from_row_major(&match check_index("spin_s", a)? {
        1 => [ZERO, H, ZERO, ZERO,
              H, ZERO, ZERO, ZERO,
              ZERO, ZERO, ZERO, MIH,
              ZERO, ZERO, IH, ZERO],
        2 => [ZERO, ZERO, H, ZERO,
              ZERO, ZERO, ZERO, IH,
              H, ZERO, ZERO, ZERO,
              ZERO, MIH, ZERO, ZERO],
        _ => [ZERO, ZERO, ZERO, H,
              ZERO, ZERO, MIH, ZERO,
              ZERO, IH, ZERO, ZERO,
              H, ZERO, ZERO, ZERO],
    }))
}

/// The 4×4 matrix `τ_a`.
#[rustfmt::skip]
pub fn spin_tau(a: usize) -> Result<ComplexMatrix> {
    Ok(ComplexMatrix::from_row_major(&match check_index("spin_tau", a)? {
        1 => [ZERO, MH, ZERO, ZERO,
              MH, ZERO, ZERO, ZERO,
              ZERO, ZERO, ZERO, MIH,
              ZERO, ZERO, IH, ZERO],
        2 => [ZERO, ZERO, MH, ZERO,
              ZERO, ZERO, ZERO, IH,
              MH, ZERO, ZERO, ZERO,
              ZERO, MIH, ZERO, ZERO],
        _ => [ZERO, ZERO, ZERO, MH,
              ZERO, ZERO, MIH, ZERO,
              ZERO, IH, ZERO, ZERO,
              MH, ZERO, ZERO, ZERO],
    }))
}

/// An ordered set of mutually anticommuting matrices with a diagonal metric.
#[derive(Clone, Debug)]
pub struct GammaSet {
    dim: usize,
    gammas: Vec<ComplexMatrix>,
    metric: Vec<f64>,
}

impl GammaSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of generators (7 for the 8×8 set, 8 for the 16×16 set).
    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// `Γ_mu`, 0-based like the physics labels (`Γ_0` is the time-like one).
    pub fn gamma(&self, mu: usize) -> &ComplexMatrix {
        &self.gammas[mu]
    }

    pub fn gammas(&self) -> &[ComplexMatrix] {
        &self.gammas
    }

    pub fn metric(&self) -> &[f64] {
        &self.metric
    }

    pub fn identity(&self) -> ComplexMatrix {
        ComplexMatrix::identity(self.dim)
    }

    /// `Γ_0 Γ_A`, A = 1..6 (or 7).
    pub fn alpha(&self, a: usize) -> ComplexMatrix {
        &self.gammas[0] * &self.gammas[a]
    }

    /// Largest `‖{Γ_μ, Γ_ν} − 2 g_μν I‖_max` over all pairs.
    pub fn clifford_residual(&self) -> f64 {
        let id = self.identity();
        let mut worst: f64 = 0.0;
        for mu in 0..self.len() {
            for nu in mu..self.len() {
                let g = if mu == nu { 2.0 * self.metric[mu] } else { 0.0 };
                let r = self.gammas[mu]
                    .anticommutator(&self.gammas[nu])
                    .dist(&id.scale_re(g));
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Largest departure of `Γ_0` from Hermiticity and of `Γ_A` from
    /// anti-Hermiticity.
    pub fn hermiticity_residual(&self) -> f64 {
        self.gammas
            .iter()
            .enumerate()
            .map(|(mu, g)| {
                if mu == 0 {
                    g.hermiticity_residual()
                } else {
                    g.antihermiticity_residual()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `Γ_0 = σ_3 ⊗ 1`, `Γ_a = 2iσ_2 ⊗ s_a`, `Γ_{a+3} = 2iσ_1 ⊗ τ_a`.
pub fn gamma8() -> GammaSet {
    let two_i = C64::new(0.0, 2.0);
    let sigma = |a| pauli(a).expect("valid index");
    let mut gammas = vec![sigma(3).kron(&ComplexMatrix::identity(4))];
    for a in 1..=3 {
        gammas.push(sigma(2).scale(two_i).kron(&spin_s(a).expect("valid index")));
    }
    for a in 1..=3 {
        gammas.push(sigma(1).scale(two_i).kron(&spin_tau(a).expect("valid index")));
    }
    GammaSet {
        dim: 8,
        gammas,
        metric: std::iter::once(1.0).chain(std::iter::repeat_n(-1.0, 6)).collect(),
    }
}

/// Doubling of the 8×8 set: `Γ_μ^(16) = σ_3 ⊗ Γ_μ` for μ = 0..6 and
/// `Γ_7^(16) = iσ_2 ⊗ 1_8`, which anticommutes with every `σ_3` block and
/// squares to `−1`.
pub fn gamma16() -> GammaSet {
    let base = gamma8();
    let s3 = pauli(3).expect("valid index");
    let mut gammas: Vec<_> = base.gammas.iter().map(|g| s3.kron(g)).collect();
    gammas.push(
        pauli(2)
            .expect("valid index")
            .scale(I)
            .kron(&ComplexMatrix::identity(8)),
    );
    GammaSet {
        dim: 16,
        gammas,
        metric: std::iter::once(1.0).chain(std::iter::repeat_n(-1.0, 7)).collect(),
    }
}

/// The spin tensors `S^(1)_ab`, `S^(2)_ab` and their sum, indexed 0-based.
#[derive(Clone, Debug)]
pub struct SpinTensorSet {
    s1: [[ComplexMatrix; 3]; 3],
    s2: [[ComplexMatrix; 3]; 3],
    s: [[ComplexMatrix; 3]; 3],
}

impl SpinTensorSet {
    pub fn s1(&self, a: usize, b: usize) -> &ComplexMatrix {
        &self.s1[a][b]
    }

    pub fn s2(&self, a: usize, b: usize) -> &ComplexMatrix {
        &self.s2[a][b]
    }

    /// `S^(2)_{a+3,b+3}`: the internal-space tensor carries the shifted labels
    /// of the relative coordinates but is the same matrix as `S^(2)_ab`.
    pub fn s2_shifted(&self, a3: usize, b3: usize) -> &ComplexMatrix {
        assert!((3..6).contains(&a3) && (3..6).contains(&b3));
        &self.s2[a3 - 3][b3 - 3]
    }

    pub fn s(&self, a: usize, b: usize) -> &ComplexMatrix {
        &self.s[a][b]
    }

    /// `S_c = ½ ε_cab S_ab`
    pub fn axial(&self, c: usize) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(8);
        for a in 0..3 {
            for b in 0..3 {
                let e = levi_civita(c, a, b);
                if e != 0.0 {
                    out = &out + &self.s[a][b].scale_re(0.5 * e);
                }
            }
        }
        out
    }

    /// Total spin Casimir `Σ_c S_c²`.
    pub fn casimir(&self) -> ComplexMatrix {
        (0..3).fold(ComplexMatrix::zeros(8), |acc, c| {
            let sc = self.axial(c);
            &acc + &(&sc * &sc)
        })
    }
}

pub fn spin_tensors(g: &GammaSet) -> SpinTensorSet {
    assert_eq!(g.dim(), 8, "spin tensors are defined for the 8×8 set");
    let quarter_i = C64::new(0.0, 0.25);
    let build = |off: usize| {
        std::array::from_fn(|a| {
            std::array::from_fn(|b| g.gamma(a + 1 + off).commutator(g.gamma(b + 1 + off)).scale(quarter_i))
        })
    };
    let s1: [[ComplexMatrix; 3]; 3] = build(0);
    let s2: [[ComplexMatrix; 3]; 3] = build(3);
    let s = std::array::from_fn(|a| std::array::from_fn(|b| &s1[a][b] + &s2[a][b]));
    SpinTensorSet { s1, s2, s }
}

/// Structure constants `f_abc` measured from `[u_a, u_b] = f_abc u_c` by
/// projecting onto the `u_c` (Hilbert–Schmidt), together with the projection
/// residual.
#[derive(Clone, Debug, Serialize)]
pub struct StructureConstants {
    /// `f[a][b][c]`, 0-based.
    pub f: [[[[f64; 2]; 3]; 3]; 3],
    pub residual: f64,
}

impl StructureConstants {
    pub fn get(&self, a: usize, b: usize, c: usize) -> C64 {
        let [re, im] = self.f[a][b][c];
        C64::new(re, im)
    }

    /// Largest deviation from `i ε_abc`.
    pub fn deviation_from_su2(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    worst = worst.max((self.get(a, b, c) - I * levi_civita(a, b, c)).norm());
                }
            }
        }
        worst
    }
}

pub fn measure_structure_constants(u: &[ComplexMatrix; 3]) -> StructureConstants {
    let mut f = [[[[0.0; 2]; 3]; 3]; 3];
    let mut residual: f64 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            let comm = u[a].commutator(&u[b]);
            let mut rebuilt = ComplexMatrix::zeros(u[0].dim());
            for c in 0..3 {
                let num = (&u[c].adjoint() * &comm).trace();
                let den = (&u[c].adjoint() * &u[c]).trace();
                let coef = num / den;
                f[a][b][c] = [coef.re, coef.im];
                rebuilt = &rebuilt + &u[c].scale(coef);
            }
            residual = residual.max(rebuilt.dist(&comm));
        }
    }
    StructureConstants { f, residual }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(f: fn(usize) -> Result<ComplexMatrix>) -> [ComplexMatrix; 3] {
        std::array::from_fn(|a| f(a + 1).unwrap())
    }

    #[test]
    fn pauli_examples() {
        assert_eq!(pauli(3).unwrap(), ComplexMatrix::from_diagonal(&[ONE, -ONE]));
        let s1 = pauli(1).unwrap();
        assert!((&s1 * &s1).approx_eq(&ComplexMatrix::identity(2), 0.0));
        // direct 2×2 product: σ1σ2 = iσ3
        let comm = s1.commutator(&pauli(2).unwrap());
        assert!(comm.approx_eq(&pauli(3).unwrap().scale(C64::new(0.0, 2.0)), 0.0));
        assert!(matches!(pauli(0), Err(Error::IndexOutOfRange { index: 0, .. })));
        assert!(pauli(4).is_err());
        assert!(spin_s(7).is_err());
        assert!(spin_tau(0).is_err());
    }

    #[test]
    fn printed_entries() {
        // rows/cols 1-based in the printed display: (1,2)
        assert_eq!(spin_s(1).unwrap().get(0, 1), H);
        assert_eq!(spin_tau(1).unwrap().get(0, 1), MH);
        assert_eq!(spin_s(3).unwrap().get(1, 2), MIH);
        assert_eq!(spin_tau(2).unwrap().get(1, 3), IH);
    }

    #[test]
    fn s_and_tau_square_to_quarter_and_commute() {
        let quarter = ComplexMatrix::identity(4).scale_re(0.25);
        for a in 1..=3 {
            let s = spin_s(a).unwrap();
            let t = spin_tau(a).unwrap();
            assert!((&s * &s).approx_eq(&quarter, 1e-15));
            assert!((&t * &t).approx_eq(&quarter, 1e-15));
            for b in 1..=3 {
                assert_eq!(s.commutator(&spin_tau(b).unwrap()).max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn su2_structure_constants_measured() {
        for set in [triple(spin_s), triple(spin_tau)] {
            let sc = measure_structure_constants(&set);
            assert!(sc.residual < 1e-15);
            assert!(sc.deviation_from_su2() < 1e-15);
        }
    }

    #[test]
    fn gamma8_layout_and_algebra() {
        let g = gamma8();
        assert_eq!(g.len(), 7);
        let id4 = ComplexMatrix::identity(4);
        let g0 = ComplexMatrix::from_fn(8, |r, c| {
            if r != c {
                ZERO
            } else if r < 4 {
                ONE
            } else {
                -ONE
            }
        });
        assert_eq!(g.gamma(0), &g0);
        assert!(g.gamma(0).approx_eq(&pauli(3).unwrap().kron(&id4), 0.0));
        assert!(g.clifford_residual() <= 1e-13);
        assert!(g.hermiticity_residual() <= 1e-15);
        let g1 = g.gamma(1);
        assert!((g1 * g1).approx_eq(&ComplexMatrix::identity(8).scale_re(-1.0), 1e-15));
        for a in 1..=6 {
            assert!(g.alpha(a).hermiticity_residual() < 1e-15);
        }
    }

    #[test]
    fn gamma16_algebra() {
        let g = gamma16();
        assert_eq!(g.len(), 8);
        assert!(g.clifford_residual() <= 1e-12);
        assert!(g.hermiticity_residual() <= 1e-15);
        let id = ComplexMatrix::identity(16);
        assert!((g.gamma(0) * g.gamma(0)).approx_eq(&id, 0.0));
        assert!((g.gamma(7) * g.gamma(7)).approx_eq(&id.scale_re(-1.0), 0.0));
        for a in 1..=6 {
            assert_eq!(g.gamma(7).anticommutator(g.gamma(a)).max_abs(), 0.0);
        }
    }

    #[test]
    fn spin_tensor_properties() {
        let st = spin_tensors(&gamma8());
        for a in 0..3 {
            assert_eq!(st.s(a, a).max_abs(), 0.0);
            for b in 0..3 {
                assert!((st.s1(a, b) + st.s1(b, a)).max_abs() < 1e-15);
                assert!((st.s2(a, b) + st.s2(b, a)).max_abs() < 1e-15);
                assert!((st.s1(a, b) + st.s2(a, b)).approx_eq(st.s(a, b), 0.0));
                assert_eq!(st.s2_shifted(a + 3, b + 3), st.s2(a, b));
                for c in 0..3 {
                    for d in 0..3 {
                        assert!(st.s1(a, b).commutator(st.s2(c, d)).max_abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn casimir_spectrum_is_singlet_plus_triplet() {
        let ev = spin_tensors(&gamma8()).casimir().hermitian_eigenvalues();
        let want = [0.0, 0.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0];
        for (e, w) in ev.iter().zip(want) {
            assert!((e - w).abs() < 1e-10, "{ev:?}");
        }
    }
}
