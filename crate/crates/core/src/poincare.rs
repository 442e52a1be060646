//! Measured Poincaré structure constants and the closure checks built on them.
//!
//! The table is fitted on a scalar model (orbital `M_ab`, `p_a`, a scalar
//! energy and the matching boosts) by applying operators to polynomial test
//! functions, without the operator-composition engine.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::generators::{Generator, GeneratorSet};
use crate::jet::{sum_sq, Jet, JetMatrix, NVARS};
use crate::linalg::{ComplexMatrix, C64, I, ZERO};
use crate::opcalc::{compose_coefficients, grade_entries, Coefficients, DiffOp, MomentumPoint, ResidualEntry, ResidualReport};
use crate::sampling::{rng, P_RANGE, T_RANGE};

const N: usize = Generator::COUNT;
const MODEL_MASS: f64 = 1.0;
const FIT_POINTS: usize = 12;
const FIT_FUNCTIONS: usize = 4;
/// Largest distance of a fitted coefficient from a Gaussian integer that is
/// still accepted as that integer.
pub const ROUNDING_TOL: f64 = 1e-8;

/// `[G_A, G_B] = Σ_C f[A][B][C] G_C` over the ten generators in
/// [`Generator::all`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureTable {
    pub labels: Vec<String>,
    /// `f[A][B][C]` as `[re, im]`.
    pub f: Vec<Vec<Vec<[f64; 2]>>>,
    /// Largest distance of a raw fitted coefficient from its rounded value.
    pub rounding_residual: f64,
    /// Largest residual of the rounded table on the fit samples.
    pub fit_residual: f64,
}

impl StructureTable {
    pub fn get(&self, a: usize, b: usize, c: usize) -> C64 {
        let [re, im] = self.f[a][b][c];
        C64::new(re, im)
    }

    /// Non-zero terms of `[G_A, G_B]`.
    pub fn bracket(&self, a: Generator, b: Generator) -> Vec<(Generator, C64)> {
        Generator::all()
            .into_iter()
            .enumerate()
            .map(|(c, g)| (g, self.get(a.index(), b.index(), c)))
            .filter(|(_, v)| *v != ZERO)
            .collect()
    }

    /// `[A,B] = Σ c G` rendered as text, e.g. `[K1,P0] = -i P1`.
    pub fn describe(&self, a: Generator, b: Generator) -> String {
        let terms = self.bracket(a, b);
        if terms.is_empty() {
            return format!("[{},{}] = 0", a.label(), b.label());
        }
        let rhs: Vec<String> = terms.iter().map(|(g, c)| format!("{} {}", fmt_gaussian(*c), g.label())).collect();
        format!("[{},{}] = {}", a.label(), b.label(), rhs.join(" + "))
    }

    /// Largest violation of `f[A][B][C] = -f[B][A][C]`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for a in 0..N {
            for b in 0..N {
                for c in 0..N {
                    r = r.max((self.get(a, b, c) + self.get(b, a, c)).norm());
                }
            }
        }
        r
    }

    /// Largest violation of the Jacobi identity on the table itself.
    pub fn jacobi_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for a in 0..N {
            for b in 0..N {
                for c in 0..N {
                    for e in 0..N {
                        let s: C64 = (0..N)
                            .map(|d| {
                                self.get(b, c, d) * self.get(a, d, e)
                                    + self.get(c, a, d) * self.get(b, d, e)
                                    + self.get(a, b, d) * self.get(c, d, e)
                            })
                            .sum();
                        r = r.max(s.norm());
                    }
                }
            }
        }
        r
    }
}

fn fmt_gaussian(c: C64) -> String {
    match (c.re, c.im) {
        (re, im) if im == 0.0 => format!("{re}"),
        (re, im) if re == 0.0 && im == 1.0 => "i".into(),
        (re, im) if re == 0.0 && im == -1.0 => "-i".into(),
        (re, im) if re == 0.0 => format!("{im}i"),
        (re, im) => format!("({re}{im:+}i)"),
    }
}

fn scalar(j: &Jet) -> JetMatrix {
    JetMatrix::scalar(j, 1)
}

fn model_energy(x: &[Jet; NVARS], k: usize) -> Result<Jet> {
    sum_sq(&x[..3], k).add_const(MODEL_MASS * MODEL_MASS).sqrt("E")
}

/// Scalar model generators in [`Generator::all`] order: `P_0 = E`, `p_a`,
/// `M_ab = i p_b ∂_a - i p_a ∂_b` and
/// `K_a = t p_a - ½{x_a, E} = t p_a - (i/2)∂_aE - iE ∂_a`, written out by hand.
pub fn scalar_model() -> Vec<DiffOp> {
    let zero = |k| JetMatrix::zeros(1, k);
    Generator::all()
        .into_iter()
        .map(|g| match g {
            Generator::P0 => DiffOp::multiplication(1, |q, k| Ok(scalar(&model_energy(&q.coordinates(k), k)?))),
            Generator::P(a) => DiffOp::momentum(a, 1),
            Generator::J(a, b) => DiffOp::first_order(1, move |q, k| {
                let x = q.coordinates(k);
                let mut bs: [JetMatrix; NVARS] = std::array::from_fn(|_| zero(k));
                bs[a] = scalar(&x[b]).scale(I);
                bs[b] = scalar(&x[a]).scale(-I);
                Ok((zero(k), bs))
            }),
            Generator::K(a) => DiffOp::first_order(1, move |q, k| {
                // E is needed one order deeper for its gradient
                let x = q.coordinates(k + 1);
                let e = model_energy(&x, k + 1)?;
                let a0 = &scalar(&x[a].truncate(k).scale(q.t)) - &scalar(&e.derivative(a)).scale(I * 0.5);
                let mut bs: [JetMatrix; NVARS] = std::array::from_fn(|_| zero(k));
                bs[a] = scalar(&e.truncate(k)).scale(-I);
                Ok((a0, bs))
            }),
        })
        .collect()
}

/// `(L f)(p) = A f + Σ B_A ∂_A f`; `f` must carry one more order than `c`.
fn apply(c: &Coefficients, f: &JetMatrix) -> JetMatrix {
    let mut out = c.a() * f;
    if c.b(0).is_some() {
        for v in 0..NVARS {
            out = &out + &(c.b(v).expect("first-order coefficient") * &f.derivative(v));
        }
    }
    out
}

/// A random complex cubic in `p_1..p_3`, as a jet of the given order.
fn test_function(q: &MomentumPoint, coeffs: &[C64], k: usize) -> JetMatrix {
    let x = q.coordinates(k);
    let mut monos = vec![Jet::constant(1.0, k)];
    for a in 0..3 {
        monos.push(x[a].clone());
        for b in a..3 {
            monos.push(&x[a] * &x[b]);
            for c in b..3 {
                monos.push(&(&x[a] * &x[b]) * &x[c]);
            }
        }
    }
    monos.iter().zip(coeffs).fold(JetMatrix::zeros(1, k), |acc, (m, c)| {
        &acc + &JetMatrix::from_scalar(m, &ComplexMatrix::identity(1)).scale(*c)
    })
}

const CUBIC_TERMS: usize = 20;

/// Fits the structure constants of the scalar model by least squares on
/// `[G_A, G_B] f = G_A(G_B f) - G_B(G_A f)` and rounds them to Gaussian integers.
pub fn measure_structure_table(seed: u64) -> Result<StructureTable> {
    let model = scalar_model();
    let mut r = rng(seed ^ 0x5CA1A);
    let mut samples = Vec::new();
    for _ in 0..FIT_POINTS {
        let mut p = [0.0; NVARS];
        for x in p.iter_mut().take(3) {
            *x = r.random_range(-P_RANGE..=P_RANGE);
        }
        let q = MomentumPoint::new(p, r.random_range(-T_RANGE..=T_RANGE));
        for _ in 0..FIT_FUNCTIONS {
            let c: Vec<C64> = (0..CUBIC_TERMS).map(|_| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
            samples.push((q, c));
        }
    }
    let rows = samples.len();
    // G_C f at jet order 1 (for the outer application) per sample and generator
    let mut single: Vec<Vec<JetMatrix>> = Vec::with_capacity(rows);
    let mut design = DMatrix::<C64>::zeros(rows, N);
    for (i, (q, c)) in samples.iter().enumerate() {
        let f = test_function(q, c, 2);
        let row: Vec<JetMatrix> = model
            .iter()
            .map(|g| Ok(apply(&g.eval_jets(q, 1)?, &f)))
            .collect::<Result<_>>()?;
        for (col, gf) in row.iter().enumerate() {
            design[(i, col)] = gf.value().get(0, 0);
        }
        single.push(row);
    }
    let svd = design.clone().svd(true, true);
    let mut f = vec![vec![vec![[0.0; 2]; N]; N]; N];
    let (mut rounding, mut fit) = (0.0f64, 0.0f64);
    for a in 0..N {
        for b in 0..N {
            let mut y = DVector::<C64>::zeros(rows);
            for (i, (q, _)) in samples.iter().enumerate() {
                let ga = model[a].eval_jets(q, 0)?;
                let gb = model[b].eval_jets(q, 0)?;
                let v = &apply(&ga, &single[i][b]) - &apply(&gb, &single[i][a]);
                y[i] = v.value().get(0, 0);
            }
            let sol = svd
                .solve(&y, 1e-12)
                .map_err(|e| Error::Params(format!("structure-constant fit failed: {e}")))?;
            let rounded = sol.map(|z| C64::new(z.re.round(), z.im.round()));
            rounding = rounding.max((&sol - &rounded).iter().fold(0.0, |m, z| m.max(z.norm())));
            fit = fit.max((&design * &rounded - &y).iter().fold(0.0, |m, z| m.max(z.norm())));
            for c in 0..N {
                f[a][b][c] = [rounded[c].re + 0.0, rounded[c].im + 0.0];
            }
        }
    }
    Ok(StructureTable {
        labels: Generator::all().iter().map(|g| g.label()).collect(),
        f,
        rounding_residual: rounding,
        fit_residual: fit,
    })
}

/// Every unordered pair of distinct generators, 45 in total.
pub fn generator_pairs() -> Vec<(Generator, Generator)> {
    let all = Generator::all();
    let mut out = Vec::with_capacity(N * (N - 1) / 2);
    for i in 0..N {
        for j in i + 1..N {
            out.push((all[i], all[j]));
        }
    }
    out
}

fn combination(table_row: &[[f64; 2]], gens: &[Coefficients]) -> Coefficients {
    let mut acc = gens[0].scale(ZERO);
    for (c, g) in gens.iter().enumerate() {
        let [re, im] = table_row[c];
        if re != 0.0 || im != 0.0 {
            acc = acc.add(&g.scale(C64::new(re, im)));
        }
    }
    acc
}

fn bracket(g1: &Coefficients, g2: &Coefficients) -> Result<Coefficients> {
    Ok(compose_coefficients(g1, g2)?.sub(&compose_coefficients(g2, g1)?).truncate(0))
}

fn evaluate_all(set: &GeneratorSet, q: &MomentumPoint) -> Result<Vec<Coefficients>> {
    Generator::all().into_iter().map(|g| set.get(g).eval_jets(q, 1)).collect()
}

/// Residuals per grade of `[G_A, G_B] - Σ f G_C` for each pair at one point.
fn pair_residuals(table: &StructureTable, gens: &[Coefficients]) -> Result<Vec<[f64; 3]>> {
    let base: Vec<Coefficients> = gens.iter().map(|g| g.truncate(0)).collect();
    generator_pairs()
        .into_iter()
        .map(|(a, b)| {
            let lhs = bracket(&gens[a.index()], &gens[b.index()])?;
            let rhs = combination(&table.f[a.index()][b.index()], &base);
            Ok(lhs.grade_residuals(&rhs))
        })
        .collect()
}

/// Closure of all 45 brackets against the table. Orders 0 and 1 are held to
/// `tol`, the order-2 coefficient (which must vanish) to `tol / 10`.
///
/// For points with `t != 0` an extra `t-independence` entry compares the
/// residuals with those at the same momentum and `t = 0`.
pub fn closure_check(set: &GeneratorSet, table: &StructureTable, points: &[MomentumPoint], tol: f64, exec: Exec) -> Result<ResidualReport> {
    let pairs = generator_pairs();
    let per_point = exec.map(points, |q| -> Result<Vec<ResidualEntry>> {
        let res = pair_residuals(table, &evaluate_all(set, q)?)?;
        let mut out = Vec::new();
        for ((a, b), r) in pairs.iter().zip(&res) {
            let rel = format!("[{},{}]", a.label(), b.label());
            let mut rows = grade_entries(&rel, q, *r, 2, tol);
            rows[2].tol = tol * 0.1;
            rows[2].pass = r[2] <= rows[2].tol;
            out.extend(rows);
        }
        if q.t != 0.0 {
            let at_zero = pair_residuals(table, &evaluate_all(set, &MomentumPoint::new(q.p, 0.0))?)?;
            let drift = res
                .iter()
                .zip(&at_zero)
                .flat_map(|(x, y)| (0..3).map(move |o| (x[o] - y[o]).abs()))
                .fold(0.0, f64::max);
            out.push(ResidualEntry {
                relation: "t-independence".into(),
                point: *q,
                order: 0,
                residual: drift,
                tol: 1e-12,
                pass: drift < 1e-12,
            });
        }
        Ok(out)
    });
    let mut report = ResidualReport::default();
    for rows in per_point {
        report.entries.extend(rows?);
    }
    report.sort();
    Ok(report)
}

/// `[A,[B,C]] + [B,[C,A]] + [C,[A,B]]` over all 120 triples, with each inner
/// bracket replaced by its closed form from the table. One entry per point
/// holding the largest grade norm.
pub fn jacobi_check(set: &GeneratorSet, table: &StructureTable, points: &[MomentumPoint], tol: f64, exec: Exec) -> Result<ResidualReport> {
    let rows = exec.map(points, |q| -> Result<ResidualEntry> {
        let gens = evaluate_all(set, q)?;
        let mut worst: f64 = 0.0;
        for a in 0..N {
            for b in a + 1..N {
                for c in b + 1..N {
                    let inner = |x: usize, y: usize| combination(&table.f[x][y], &gens);
                    let sum = bracket(&gens[a], &inner(b, c))?
                        .add(&bracket(&gens[b], &inner(c, a))?)
                        .add(&bracket(&gens[c], &inner(a, b))?);
                    worst = sum.grade_norms().into_iter().fold(worst, f64::max);
                }
            }
        }
        Ok(ResidualEntry {
            relation: "jacobi".into(),
            point: *q,
            order: 0,
            residual: worst,
            tol,
            pass: worst <= tol,
        })
    });
    let mut report = ResidualReport::default();
    for r in rows {
        report.entries.push(r?);
    }
    Ok(report)
}
