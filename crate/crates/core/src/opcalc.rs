//! Momentum-representation operator calculus.
//!
//! An operator of order at most two is written
//!
//! ```text
//! L = A(p) + Σ_A B_A(p) ∂_A + Σ_{A,C} K_AC(p) ∂_A ∂_C,    K_AC = K_CA,
//! ```
//!
//! with matrix-valued coefficients, and position acts as `x_A = +i ∂/∂p_A`
//! so that `[x_A, p_B] = i δ_AB`. Operators are closures returning their
//! coefficients as [`JetMatrix`] values of a requested Taylor order; composition
//! asks its right operand for as many extra orders as the left operand
//! differentiates, so derivatives stay exact through nested brackets.
//!
//! Operator identities are checked pointwise on sampled momenta.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::jet::{Jet, JetMatrix, NVARS};
use crate::linalg::{ComplexMatrix, C64, I};

/// Tolerance of the lazy unitarity check in [`conjugate`].
pub const UNITARITY_TOL: f64 = 1e-10;

/// A sample momentum `p_1..p_6` and the time parameter that the boost
/// generators depend on explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumPoint {
    pub p: [f64; NVARS],
    pub t: f64,
}

impl MomentumPoint {
    pub fn new(p: [f64; NVARS], t: f64) -> Self {
        Self { p, t }
    }

    pub fn at_rest() -> Self {
        Self::new([0.0; NVARS], 0.0)
    }

    pub fn coordinates(&self, order: usize) -> [Jet; NVARS] {
        Jet::coordinates(&self.p, order)
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().all(|x| x.is_finite()) && self.t.is_finite()
    }
}

fn pair(a: usize, c: usize) -> usize {
    a * NVARS + c
}

/// The graded coefficients of an operator at one momentum point.
#[derive(Clone, Debug)]
pub struct Coefficients {
    order: usize,
    a: JetMatrix,
    b: Vec<JetMatrix>,
    /// Full symmetric 6×6 table, row-major.
    k: Vec<JetMatrix>,
}

impl Coefficients {
    fn zeros(dim: usize, order: usize, jet_order: usize) -> Self {
        let z = JetMatrix::zeros(dim, jet_order);
        Self {
            order,
            a: z.clone(),
            b: if order >= 1 { vec![z.clone(); NVARS] } else { Vec::new() },
            k: if order >= 2 { vec![z; NVARS * NVARS] } else { Vec::new() },
        }
    }

    pub fn from_order0(a: JetMatrix) -> Self {
        Self {
            order: 0,
            a,
            b: Vec::new(),
            k: Vec::new(),
        }
    }

    /// Operator order (0, 1 or 2) of the structure, not of the values.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn jet_order(&self) -> usize {
        self.a.order()
    }

    pub fn a(&self) -> &JetMatrix {
        &self.a
    }

    pub fn b(&self, var: usize) -> Option<&JetMatrix> {
        self.b.get(var)
    }

    /// Symmetrised second-order coefficient `K_AC`.
    pub fn k(&self, a: usize, c: usize) -> Option<&JetMatrix> {
        self.k.get(pair(a, c))
    }

    fn with_order(mut self, order: usize) -> Self {
        let dim = self.dim();
        let jo = self.jet_order();
        if order >= 1 && self.b.is_empty() {
            self.b = vec![JetMatrix::zeros(dim, jo); NVARS];
        }
        if order >= 2 && self.k.is_empty() {
            self.k = vec![JetMatrix::zeros(dim, jo); NVARS * NVARS];
        }
        self.order = self.order.max(order);
        self
    }

    pub fn truncate(&self, jet_order: usize) -> Self {
        Self {
            order: self.order,
            a: self.a.truncate(jet_order),
            b: self.b.iter().map(|j| j.truncate(jet_order)).collect(),
            k: self.k.iter().map(|j| j.truncate(jet_order)).collect(),
        }
    }

    fn map(&self, f: impl Fn(&JetMatrix) -> JetMatrix) -> Self {
        Self {
            order: self.order,
            a: f(&self.a),
            b: self.b.iter().map(&f).collect(),
            k: self.k.iter().map(&f).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(&JetMatrix, &JetMatrix) -> JetMatrix) -> Self {
        let order = self.order.max(other.order);
        let l = self.clone().with_order(order);
        let r = other.clone().with_order(order);
        Self {
            order,
            a: f(&l.a, &r.a),
            b: l.b.iter().zip(&r.b).map(|(x, y)| f(x, y)).collect(),
            k: l.k.iter().zip(&r.k).map(|(x, y)| f(x, y)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |x, y| x - y)
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|j| j.scale(s))
    }

    /// Max-norm of the value blocks per grade: `[order 0, order 1, order 2]`.
    /// Missing grades count as zero.
    pub fn grade_norms(&self) -> [f64; 3] {
        let norm = |v: &[JetMatrix]| v.iter().map(JetMatrix::value_max_abs).fold(0.0, f64::max);
        [self.a.value_max_abs(), norm(&self.b), norm(&self.k)]
    }

    /// Per-grade value residual against another coefficient set.
    pub fn grade_residuals(&self, other: &Self) -> [f64; 3] {
        self.sub(other).grade_norms()
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.iter().all(JetMatrix::is_finite) && self.k.iter().all(JetMatrix::is_finite)
    }
}

/// Operator product `L1 ∘ L2` from coefficient sets. `g2` must carry `g1.order()`
/// more Taylor orders than the wanted result; the result is truncated to the
/// lowest order available.
pub fn compose_coefficients(g1: &Coefficients, g2: &Coefficients) -> Result<Coefficients> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch {
            left: g1.dim(),
            right: g2.dim(),
        });
    }
    let order = g1.order + g2.order;
    if order > 2 {
        return Err(Error::OrderExceeded { order });
    }
    let jet_order = g1.jet_order().min(g2.jet_order().saturating_sub(g1.order));
    if g2.jet_order() < g1.order {
        return Err(Error::JetOrderExceeded {
            requested: g1.order,
            max: g2.jet_order(),
        });
    }
    let mut out = Coefficients::zeros(g1.dim(), order, jet_order);

    // A1 ∘ L2
    out.a = &out.a + &(&g1.a * &g2.a);
    for d in 0..g2.b.len() {
        out.b[d] = &out.b[d] + &(&g1.a * &g2.b[d]);
    }
    for i in 0..g2.k.len() {
        out.k[i] = &out.k[i] + &(&g1.a * &g2.k[i]);
    }

    if g1.order >= 1 {
        for s in 0..NVARS {
            let b1 = &g1.b[s];
            // B1_s ∂_s (A2 ψ + B2_d ∂_d ψ)
            out.a = &out.a + &(b1 * &g2.a.derivative(s));
            out.b[s] = &out.b[s] + &(b1 * &g2.a);
            for d in 0..g2.b.len() {
                out.b[d] = &out.b[d] + &(b1 * &g2.b[d].derivative(s));
            }
        }
        // B1_s B2_d ∂_s ∂_d, symmetrised
        if g2.order >= 1 {
            for s in 0..NVARS {
                for d in s..NVARS {
                    let mut t = &g1.b[s] * &g2.b[d];
                    if s != d {
                        t = &t + &(&g1.b[d] * &g2.b[s]);
                        t = t.scale(C64::new(0.5, 0.0));
                    }
                    out.k[pair(s, d)] = &out.k[pair(s, d)] + &t;
                    if s != d {
                        out.k[pair(d, s)] = out.k[pair(s, d)].clone();
                    }
                }
            }
        }
    }

    if g1.order == 2 {
        // K1_sd ∂_s ∂_d (A2 ψ), g2 has order 0 here
        let da: Vec<JetMatrix> = (0..NVARS).map(|v| g2.a.derivative(v)).collect();
        for s in 0..NVARS {
            for d in 0..NVARS {
                let k1 = &g1.k[pair(s, d)];
                out.a = &out.a + &(k1 * &da[d].derivative(s));
                out.b[s] = &out.b[s] + &(k1 * &da[d]).scale(C64::new(2.0, 0.0));
                out.k[pair(s, d)] = &out.k[pair(s, d)] + &(k1 * &g2.a);
            }
        }
    }
    Ok(out.truncate(jet_order))
}

type EvalFn = dyn Fn(&MomentumPoint, usize) -> Result<Coefficients> + Send + Sync;

/// Matrix-valued function of momentum evaluated as a jet of the given order.
pub type MatrixFn = Arc<dyn Fn(&MomentumPoint, usize) -> Result<JetMatrix> + Send + Sync>;

/// A differential operator in momentum representation, order ≤ 2.
#[derive(Clone)]
pub struct DiffOp {
    dim: usize,
    order: usize,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffOp")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .finish_non_exhaustive()
    }
}

impl DiffOp {
    fn from_eval(dim: usize, order: usize, eval: impl Fn(&MomentumPoint, usize) -> Result<Coefficients> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            order,
            eval: Arc::new(eval),
        }
    }

    /// Multiplication by a matrix function of momentum.
    pub fn multiplication(
        dim: usize,
        f: impl Fn(&MomentumPoint, usize) -> Result<JetMatrix> + Send + Sync + 'static,
    ) -> Self {
        Self::from_eval(dim, 0, move |q, k| {
            let a = f(q, k)?;
            debug_assert_eq!(a.dim(), dim);
            Ok(Coefficients::from_order0(a))
        })
    }

    pub fn from_matrix_fn(dim: usize, f: MatrixFn) -> Self {
        Self::multiplication(dim, move |q, k| f(q, k))
    }

    pub fn constant(m: ComplexMatrix) -> Self {
        let dim = m.dim();
        Self::multiplication(dim, move |_, k| Ok(JetMatrix::constant(&m, k)))
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(ComplexMatrix::identity(dim))
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(ComplexMatrix::zeros(dim))
    }

    /// Multiplication by `p_var` (0-based).
    pub fn momentum(var: usize, dim: usize) -> Self {
        assert!(var < NVARS);
        Self::multiplication(dim, move |q, k| Ok(JetMatrix::scalar(&Jet::variable(var, q.p[var], k), dim)))
    }

    /// Position `x_var = i ∂/∂p_var` (0-based).
    pub fn position(var: usize, dim: usize) -> Self {
        assert!(var < NVARS);
        Self::from_eval(dim, 1, move |_, k| {
            let mut c = Coefficients::zeros(dim, 1, k);
            c.b[var] = JetMatrix::identity(dim, k).scale(I);
            Ok(c)
        })
    }

    /// First-order operator `Σ_A B_A(p) ∂_A` plus `A(p)` from explicit functions.
    pub fn first_order(
        dim: usize,
        f: impl Fn(&MomentumPoint, usize) -> Result<(JetMatrix, [JetMatrix; NVARS])> + Send + Sync + 'static,
    ) -> Self {
        Self::from_eval(dim, 1, move |q, k| {
            let (a, b) = f(q, k)?;
            Ok(Coefficients {
                order: 1,
                a,
                b: b.into_iter().collect(),
                k: Vec::new(),
            })
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficients at `q` as jets of the given Taylor order.
    pub fn eval_jets(&self, q: &MomentumPoint, jet_order: usize) -> Result<Coefficients> {
        crate::jet::check_order(jet_order)?;
        (self.eval)(q, jet_order)
    }

    /// Coefficient values and their six first partials at `q`.
    pub fn evaluate(&self, q: &MomentumPoint) -> Result<Coefficients> {
        self.eval_jets(q, 1)
    }

    fn check_dim(&self, other: &DiffOp) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &DiffOp) -> Result<DiffOp> {
        self.check_dim(other)?;
        let (l, r) = (self.clone(), other.clone());
        Ok(Self::from_eval(self.dim, self.order.max(other.order), move |q, k| {
            Ok(l.eval_jets(q, k)?.add(&r.eval_jets(q, k)?))
        }))
    }

    pub fn sub(&self, other: &DiffOp) -> Result<DiffOp> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> DiffOp {
        let l = self.clone();
        Self::from_eval(self.dim, self.order, move |q, k| Ok(l.eval_jets(q, k)?.scale(s)))
    }

    pub fn sum<'a>(dim: usize, ops: impl IntoIterator<Item = &'a DiffOp>) -> Result<DiffOp> {
        ops.into_iter().try_fold(DiffOp::zero(dim), |acc, op| acc.add(op))
    }

    /// Operator product `self ∘ other`.
    pub fn compose(&self, other: &DiffOp) -> Result<DiffOp> {
        self.check_dim(other)?;
        let order = self.order + other.order;
        if order > 2 {
            return Err(Error::OrderExceeded { order });
        }
        let (l, r) = (self.clone(), other.clone());
        let lift = self.order;
        Ok(Self::from_eval(self.dim, order, move |q, k| {
            let g1 = l.eval_jets(q, k)?;
            let g2 = r.eval_jets(q, k + lift)?;
            compose_coefficients(&g1, &g2)
        }))
    }

    /// Closed-form commutator `[self, other]` as an operator.
    pub fn commutator(&self, other: &DiffOp) -> Result<DiffOp> {
        self.check_dim(other)?;
        let order = self.order + other.order;
        if order > 2 {
            return Err(Error::OrderExceeded { order });
        }
        let (l, r) = (self.clone(), other.clone());
        Ok(Self::from_eval(self.dim, order, move |q, k| commutator_coefficients(&l, &r, q, k)))
    }
}

fn commutator_coefficients(l1: &DiffOp, l2: &DiffOp, q: &MomentumPoint, jet_order: usize) -> Result<Coefficients> {
    let lift = l1.order.max(l2.order);
    let g1 = l1.eval_jets(q, jet_order + lift)?;
    let g2 = l2.eval_jets(q, jet_order + lift)?;
    let forward = compose_coefficients(&g1, &g2)?;
    let backward = compose_coefficients(&g2, &g1)?;
    Ok(forward.sub(&backward).truncate(jet_order))
}

/// Coefficients of `[l1, l2]` at `q`, each with its six first partials.
pub fn commutator(l1: &DiffOp, l2: &DiffOp, q: &MomentumPoint) -> Result<Coefficients> {
    commutator_at(l1, l2, q, 1)
}

/// Coefficients of `[l1, l2]` at `q` with the requested Taylor order.
pub fn commutator_at(l1: &DiffOp, l2: &DiffOp, q: &MomentumPoint, jet_order: usize) -> Result<Coefficients> {
    l1.check_dim(l2)?;
    let order = l1.order + l2.order;
    if order > 2 {
        return Err(Error::OrderExceeded { order });
    }
    commutator_coefficients(l1, l2, q, jet_order)
}

/// Multiplication by `u(p)` with a unitarity check at every evaluation point.
pub fn unitary_op(dim: usize, u: MatrixFn) -> DiffOp {
    DiffOp::multiplication(dim, move |q, k| {
        let j = u(q, k)?;
        let residual = j.value().unitarity_residual();
        if residual > UNITARITY_TOL {
            return Err(Error::NonUnitary {
                residual,
                tol: UNITARITY_TOL,
            });
        }
        Ok(j)
    })
}

/// `U L U†`, including the `U B_C (∂_C U†)` terms the derivative part of `L`
/// picks up from `U†`.
pub fn conjugate(u: MatrixFn, l: &DiffOp) -> Result<DiffOp> {
    let dim = l.dim();
    let u_op = unitary_op(dim, u.clone());
    let u_dag = DiffOp::multiplication(dim, move |q, k| Ok(u(q, k)?.adjoint()));
    u_op.compose(l)?.compose(&u_dag)
}

/// One row of a residual report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub relation: String,
    pub point: MomentumPoint,
    pub order: usize,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub entries: Vec<ResidualEntry>,
}

impl ResidualReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }

    pub fn extend(&mut self, other: ResidualReport) {
        self.entries.extend(other.entries);
    }

    /// Sort by relation name, then by the position of the point in the input.
    pub fn sort(&mut self) {
        self.entries.sort_by(|a, b| a.relation.cmp(&b.relation));
    }
}

/// Builds per-grade entries for one point from coefficient residuals.
pub fn grade_entries(relation: &str, q: &MomentumPoint, residuals: [f64; 3], orders: usize, tol: f64) -> Vec<ResidualEntry> {
    (0..=orders)
        .map(|order| ResidualEntry {
            relation: relation.to_string(),
            point: *q,
            order,
            residual: residuals[order],
            tol,
            pass: residuals[order] <= tol,
        })
        .collect()
}

/// Pointwise comparison of two operators, one entry per point and grade.
pub fn op_equal_at(relation: &str, l1: &DiffOp, l2: &DiffOp, points: &[MomentumPoint], tol: f64, exec: Exec) -> Result<ResidualReport> {
    l1.check_dim(l2)?;
    let orders = l1.order.max(l2.order);
    let rows = exec.map(points, |q| -> Result<Vec<ResidualEntry>> {
        let r = l1.eval_jets(q, 0)?.grade_residuals(&l2.eval_jets(q, 0)?);
        Ok(grade_entries(relation, q, r, orders, tol))
    });
    let mut report = ResidualReport::default();
    for r in rows {
        report.entries.extend(r?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::sum_sq;

    const DIM: usize = 2;

    fn q(p: [f64; 6]) -> MomentumPoint {
        MomentumPoint::new(p, 0.0)
    }

    fn energy(m: f64) -> DiffOp {
        DiffOp::multiplication(DIM, move |q, k| {
            let x = q.coordinates(k);
            let e = sum_sq(&x, k).add_const(m * m).sqrt("E")?;
            Ok(JetMatrix::scalar(&e, DIM))
        })
    }

    #[test]
    fn evaluate_momentum_and_energy() {
        let p1 = DiffOp::momentum(0, DIM);
        let c = p1.evaluate(&q([0.3, 1.0, 2.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(c.a().value().approx_eq(&ComplexMatrix::identity(DIM).scale_re(0.3), 0.0));
        assert!(c.a().partial(0).approx_eq(&ComplexMatrix::identity(DIM), 0.0));
        for v in 1..6 {
            assert_eq!(c.a().partial(v).max_abs(), 0.0);
        }

        let pt = q([3.0, 0.0, 0.0, 4.0, 0.0, 0.0]);
        let e = energy(0.0).evaluate(&pt).unwrap();
        assert!(e.a().value().approx_eq(&ComplexMatrix::identity(DIM).scale_re(5.0), 1e-15));
        // central difference oracle, step 1e-6
        let h = 1e-6;
        let f = |x: f64| (x * x + 16.0f64).sqrt();
        let fd = (f(3.0 + h) - f(3.0 - h)) / (2.0 * h);
        assert!((e.a().partial(0).get(0, 0).re - fd).abs() < 1e-8);
        assert!((e.a().partial(0).get(0, 0).re - 0.6).abs() < 1e-15);
    }

    #[test]
    fn singular_point_is_a_domain_error() {
        let err = energy(0.0).evaluate(&MomentumPoint::at_rest()).unwrap_err();
        assert!(matches!(err, Error::Domain { factor: "E", .. }));
    }

    #[test]
    fn canonical_commutation() {
        let pt = q([0.4, -1.2, 0.7, 2.0, 0.1, -0.3]);
        let x1 = DiffOp::position(0, DIM);
        let p1 = DiffOp::momentum(0, DIM);
        let c = commutator(&x1, &p1, &pt).unwrap();
        assert!(c.a().value().approx_eq(&ComplexMatrix::identity(DIM).scale(I), 0.0));
        assert_eq!(c.grade_norms()[1], 0.0);

        // compose-based form and [x1, p1^2] = 2 i p1
        let p1sq = p1.compose(&p1).unwrap();
        let lhs = x1.compose(&p1sq).unwrap().sub(&p1sq.compose(&x1).unwrap()).unwrap();
        let c = lhs.eval_jets(&pt, 0).unwrap();
        assert!(c.a().value().approx_eq(&ComplexMatrix::identity(DIM).scale(I * 0.8), 1e-15));
        assert_eq!(c.grade_norms()[1], 0.0);

        let x4 = DiffOp::position(3, DIM);
        let c = commutator(&x1, &x4, &pt).unwrap();
        assert_eq!(c.grade_norms(), [0.0; 3]);

        let p2 = DiffOp::momentum(1, DIM);
        assert_eq!(commutator(&p1, &p2, &pt).unwrap().grade_norms(), [0.0; 3]);
    }

    #[test]
    fn order_cap_is_enforced() {
        let x1 = DiffOp::position(0, DIM);
        let x1x1 = x1.compose(&x1).unwrap();
        assert_eq!(x1x1.order(), 2);
        assert!(matches!(x1x1.compose(&x1), Err(Error::OrderExceeded { order: 3 })));
        assert!(matches!(x1.commutator(&x1x1), Err(Error::OrderExceeded { .. })));
    }

    #[test]
    fn second_order_left_factor_differentiates_twice() {
        // ∂_1∂_1 ∘ f(p) with f = p1^3: order-0 part 6 p1, order-1 part 2·3p1^2, order-2 part f
        let x1 = DiffOp::position(0, DIM);
        let d2 = x1.compose(&x1).unwrap().scale(C64::new(-1.0, 0.0));
        let f = DiffOp::multiplication(DIM, |q, k| {
            let x = q.coordinates(k);
            Ok(JetMatrix::scalar(&(&(&x[0] * &x[0]) * &x[0]), DIM))
        });
        let pt = q([1.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let c = d2.compose(&f).unwrap().evaluate(&pt).unwrap();
        let id = ComplexMatrix::identity(DIM);
        assert!(c.a().value().approx_eq(&id.scale_re(9.0), 1e-14));
        assert!(c.a().partial(0).approx_eq(&id.scale_re(6.0), 1e-14));
        assert!(c.b(0).unwrap().value().approx_eq(&id.scale_re(6.0 * 2.25), 1e-14));
        assert!(c.k(0, 0).unwrap().value().approx_eq(&id.scale_re(3.375), 1e-14));
    }

    #[test]
    fn antisymmetry_is_exact() {
        let x1 = DiffOp::position(0, DIM);
        let x2 = DiffOp::position(1, DIM);
        let e = energy(1.0);
        let l1 = x1.compose(&e).unwrap();
        let l2 = e.compose(&x2).unwrap().add(&DiffOp::momentum(2, DIM)).unwrap();
        let pt = q([0.2, 0.9, -0.4, 1.0, 0.0, 2.0]);
        let a = commutator(&l1, &l2, &pt).unwrap();
        let b = commutator(&l2, &l1, &pt).unwrap();
        let s = a.add(&b);
        assert_eq!(s.grade_norms(), [0.0; 3]);
        assert_eq!(s.a().max_abs(), 0.0);
    }

    #[test]
    fn conjugate_by_identity_and_by_phase() {
        let x1 = DiffOp::position(0, DIM);
        let pts = [q([0.1, 0.2, 0.3, 0.4, 0.5, 0.6]), MomentumPoint::at_rest()];
        let id: MatrixFn = Arc::new(|_, k| Ok(JetMatrix::identity(DIM, k)));
        let c = conjugate(id, &x1).unwrap();
        assert!(op_equal_at("id", &c, &x1, &pts, 0.0, Exec::Sequential).unwrap().pass());

        // U = exp(i p1 p2 σ3): U x1 U† = x1 + i U ∂_1 U† = x1 + p2 σ3
        let s3 = crate::clifford::pauli(3).unwrap();
        let s3u = s3.clone();
        let u: MatrixFn = Arc::new(move |q, k| {
            let x = q.coordinates(k);
            let phase = &x[0] * &x[1];
            // exp(i θ σ3) expanded around the point value of θ
            let theta = phase.value();
            let mut out = JetMatrix::zeros(DIM, k);
            let mut power = JetMatrix::identity(DIM, k);
            let gen = JetMatrix::from_scalar(&(&phase - &Jet::constant(theta, k)), &s3u).scale(I);
            let mut fact = 1.0;
            for n in 0..=k {
                if n > 0 {
                    power = &power * &gen;
                    fact *= n as f64;
                }
                out = &out + &power.scale(C64::new(1.0 / fact, 0.0));
            }
            let base = ComplexMatrix::from_diagonal(&[C64::from_polar(1.0, theta), C64::from_polar(1.0, -theta)]);
            Ok(&JetMatrix::constant(&base, k) * &out)
        });
        let c = conjugate(u.clone(), &x1).unwrap();
        let want = x1
            .add(&DiffOp::multiplication(DIM, move |q, k| {
                Ok(JetMatrix::from_scalar(&Jet::variable(1, q.p[1], k), &s3))
            }))
            .unwrap();
        let r = op_equal_at("phase", &c, &want, &pts, 1e-13, Exec::Sequential).unwrap();
        assert!(r.pass(), "{:?}", r.max_residual());

        // finite-difference oracle on U for the order-0 part: i U (∂_1 U†)
        let pt = pts[0];
        let h = 1e-6;
        let (mut pp, mut pm) = (pt, pt);
        pp.p[0] += h;
        pm.p[0] -= h;
        let dudag = (&u(&pp, 0).unwrap().value().adjoint() - &u(&pm, 0).unwrap().value().adjoint()).scale_re(0.5 / h);
        let fd = (&u(&pt, 0).unwrap().value() * &dudag).scale(I);
        assert!(fd.dist(&c.eval_jets(&pt, 0).unwrap().a().value()) < 1e-8);
    }

    #[test]
    fn conjugate_rejects_non_unitary() {
        let u: MatrixFn = Arc::new(|_, k| Ok(JetMatrix::identity(DIM, k).scale(C64::new(1.1, 0.0))));
        let c = conjugate(u, &DiffOp::position(0, DIM)).unwrap();
        assert!(matches!(c.evaluate(&MomentumPoint::at_rest()), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn op_equal_reports_residuals() {
        let l = DiffOp::momentum(0, DIM);
        let pts = [q([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])];
        let r = op_equal_at("same", &l, &l, &pts, 0.0, Exec::Sequential).unwrap();
        assert!(r.pass());
        assert_eq!(r.max_residual(), 0.0);

        let shifted = l.add(&DiffOp::identity(DIM).scale(C64::new(1e-6, 0.0))).unwrap();
        let r = op_equal_at("shifted", &l, &shifted, &pts, 1e-8, Exec::Sequential).unwrap();
        assert!(!r.pass());
        assert!((r.max_residual() - 1e-6).abs() < 1e-15);
        let json = serde_json::to_value(&r.entries[0]).unwrap();
        for key in ["relation", "point", "order", "residual", "tol", "pass"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
