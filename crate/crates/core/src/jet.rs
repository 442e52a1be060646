//! Truncated multivariate Taylor arithmetic in the six momentum components.
//!
//! A jet of order `k` carries every Taylor coefficient of total degree `<= k`
//! at an expansion point, so first-order jets are ordinary forward-mode dual
//! numbers and higher orders let derived operators (whose coefficients
//! already contain one derivative) be differentiated again. Products
//! truncate to the smaller order of the operands and differentiation lowers
//! the order by one.
//!
//! Monomials are stored degree by degree; the degree-one block is laid out as
//! `e_0, .., e_5`, so the first partials of a jet sit at indices `1..=6`.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, ZERO};

pub const NVARS: usize = 6;
pub const MAX_ORDER: usize = 5;

type Mono = [u8; NVARS];

struct Tables {
    monos: Vec<Mono>,
    /// `upto[k]` = number of monomials with degree `<= k`.
    upto: [usize; MAX_ORDER + 1],
    /// `raise[i][a]` = index of `monos[i] + e_a`, if still within `MAX_ORDER`.
    raise: Vec<[Option<u32>; NVARS]>,
    /// For each truncation order, the pairs `(i, j, i + j)`.
    products: Vec<Vec<(u32, u32, u32)>>,
}

fn degree(m: &Mono) -> usize {
    m.iter().map(|&e| e as usize).sum()
}

fn push_monos(out: &mut Vec<Mono>, cur: &mut Mono, var: usize, left: usize) {
    if var == NVARS - 1 {
        cur[var] = left as u8;
        out.push(*cur);
        return;
    }
    for e in (0..=left).rev() {
        cur[var] = e as u8;
        push_monos(out, cur, var + 1, left - e);
    }
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut monos = Vec::new();
        let mut upto = [0; MAX_ORDER + 1];
        for (d, slot) in upto.iter_mut().enumerate() {
            push_monos(&mut monos, &mut [0; NVARS], 0, d);
            *slot = monos.len();
        }
        let index: std::collections::HashMap<Mono, u32> =
            monos.iter().enumerate().map(|(i, m)| (*m, i as u32)).collect();
        let raise = monos
            .iter()
            .map(|m| {
                let mut r = [None; NVARS];
                for (a, slot) in r.iter_mut().enumerate() {
                    let mut up = *m;
                    up[a] += 1;
                    *slot = index.get(&up).copied();
                }
                r
            })
            .collect();
        let products = (0..=MAX_ORDER)
            .map(|k| {
                let mut v = Vec::new();
                for i in 0..upto[k] {
                    let di = degree(&monos[i]);
                    for j in 0..upto[k - di] {
                        let mut s = monos[i];
                        for a in 0..NVARS {
                            s[a] += monos[j][a];
                        }
                        v.push((i as u32, j as u32, index[&s]));
                    }
                }
                v
            })
            .collect();
        Tables {
            monos,
            upto,
            raise,
            products,
        }
    })
}

/// Number of Taylor coefficients carried by a jet of the given order.
pub fn coeff_count(order: usize) -> usize {
    tables().upto[order]
}

pub(crate) fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::JetOrderExceeded {
            requested: order,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

/// Real scalar jet.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; coeff_count(order)];
        c[0] = v;
        Self { order, c }
    }

    /// The coordinate `p_var` expanded at `value`.
    pub fn variable(var: usize, value: f64, order: usize) -> Self {
        let mut j = Self::constant(value, order);
        if order >= 1 {
            j.c[1 + var] = 1.0;
        }
        j
    }

    /// All six coordinates expanded at `p`.
    pub fn coordinates(p: &[f64; NVARS], order: usize) -> [Jet; NVARS] {
        std::array::from_fn(|a| Self::variable(a, p[a], order))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn partial(&self, var: usize) -> f64 {
        assert!(self.order >= 1, "partial of an order-0 jet");
        self.c[1 + var]
    }

    /// Second partial `∂_a ∂_b`.
    pub fn partial2(&self, a: usize, b: usize) -> f64 {
        assert!(self.order >= 2, "second partial of a jet of order < 2");
        let t = tables();
        let i = t.raise[1 + a][b].expect("degree-two monomial") as usize;
        let mult = if a == b { 2.0 } else { 1.0 };
        self.c[i] * mult
    }

    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order);
        Self {
            order,
            c: self.c[..coeff_count(order)].to_vec(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            order: self.order,
            c: self.c.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add_const(&self, s: f64) -> Self {
        let mut r = self.clone();
        r.c[0] += s;
        r
    }

    /// `∂/∂p_var`; the result has one order less.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(self.order >= 1, "derivative of an order-0 jet");
        let t = tables();
        let order = self.order - 1;
        let c = (0..coeff_count(order))
            .map(|i| {
                let up = t.raise[i][var].expect("within table") as usize;
                self.c[up] * (t.monos[i][var] as f64 + 1.0)
            })
            .collect();
        Self { order, c }
    }

    /// Evaluates `f(self)` from the normalised derivatives
    /// `taylor[n] = f^(n)(u0) / n!` at `u0 = self.value()`.
    fn compose(&self, taylor: &[f64]) -> Self {
        debug_assert!(taylor.len() > self.order);
        let mut delta = self.clone();
        delta.c[0] = 0.0;
        let mut out = Self::constant(taylor[0], self.order);
        let mut power = Self::constant(1.0, self.order);
        for coeff in taylor.iter().take(self.order + 1).skip(1) {
            power = &power * &delta;
            for (o, p) in out.c.iter_mut().zip(&power.c) {
                *o += coeff * p;
            }
        }
        out
    }

    pub fn recip(&self, factor: &'static str) -> Result<Self> {
        let u = self.value();
        if u == 0.0 || !u.is_finite() {
            return Err(Error::domain(factor, u));
        }
        let mut taylor = Vec::with_capacity(self.order + 1);
        let mut t = 1.0 / u;
        for _ in 0..=self.order {
            taylor.push(t);
            t *= -1.0 / u;
        }
        Ok(self.compose(&taylor))
    }

    pub fn sqrt(&self, factor: &'static str) -> Result<Self> {
        let u = self.value();
        if u < 0.0 || !u.is_finite() || (u == 0.0 && self.order > 0) {
            return Err(Error::domain(factor, u));
        }
        // binomial series of (u0 + d)^(1/2)
        let mut taylor = Vec::with_capacity(self.order + 1);
        let mut coeff = u.sqrt();
        for n in 0..=self.order {
            taylor.push(coeff);
            coeff *= (0.5 - n as f64) / ((n + 1) as f64 * u);
        }
        Ok(self.compose(&taylor))
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let n = coeff_count(order);
        Jet {
            order,
            c: (0..n).map(|i| self.c[i] + rhs.c[i]).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let n = coeff_count(order);
        Jet {
            order,
            c: (0..n).map(|i| self.c[i] - rhs.c[i]).collect(),
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut c = vec![0.0; coeff_count(order)];
        for &(i, j, r) in &tables().products[order] {
            c[r as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        Jet { order, c }
    }
}

/// Sum of squares of a slice of jets.
pub fn sum_sq(xs: &[Jet], order: usize) -> Jet {
    xs.iter()
        .fold(Jet::constant(0.0, order), |acc, x| &acc + &(x * x))
}

/// A complex square matrix together with its Taylor coefficients in the six
/// momentum components: value, the six partials and, for higher orders, the
/// higher derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct JetMatrix {
    dim: usize,
    order: usize,
    data: Vec<C64>,
}

impl JetMatrix {
    pub fn zeros(dim: usize, order: usize) -> Self {
        Self {
            dim,
            order,
            data: vec![ZERO; coeff_count(order) * dim * dim],
        }
    }

    pub fn constant(m: &ComplexMatrix, order: usize) -> Self {
        let mut j = Self::zeros(m.dim(), order);
        j.set_block(0, m);
        j
    }

    pub fn identity(dim: usize, order: usize) -> Self {
        Self::constant(&ComplexMatrix::identity(dim), order)
    }

    /// `s(p) · m` for a scalar jet `s` and a constant matrix `m`.
    pub fn from_scalar(s: &Jet, m: &ComplexMatrix) -> Self {
        let dim = m.dim();
        let mut j = Self::zeros(dim, s.order);
        let n2 = dim * dim;
        for (k, &sk) in s.c.iter().enumerate() {
            if sk == 0.0 {
                continue;
            }
            for r in 0..dim {
                for c in 0..dim {
                    j.data[k * n2 + r * dim + c] = m.get(r, c) * sk;
                }
            }
        }
        j
    }

    /// `s(p) · I`
    pub fn scalar(s: &Jet, dim: usize) -> Self {
        Self::from_scalar(s, &ComplexMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn block(&self, k: usize) -> &[C64] {
        let n2 = self.dim * self.dim;
        &self.data[k * n2..(k + 1) * n2]
    }

    fn set_block(&mut self, k: usize, m: &ComplexMatrix) {
        let d = self.dim;
        for r in 0..d {
            for c in 0..d {
                self.data[k * d * d + r * d + c] = m.get(r, c);
            }
        }
    }

    fn block_matrix(&self, k: usize) -> ComplexMatrix {
        let d = self.dim;
        let b = self.block(k);
        ComplexMatrix::from_fn(d, |r, c| b[r * d + c])
    }

    pub fn value(&self) -> ComplexMatrix {
        self.block_matrix(0)
    }

    /// `∂value/∂p_var`
    pub fn partial(&self, var: usize) -> ComplexMatrix {
        assert!(self.order >= 1, "partial of an order-0 jet");
        self.block_matrix(1 + var)
    }

    pub fn partials(&self) -> [ComplexMatrix; NVARS] {
        std::array::from_fn(|a| self.partial(a))
    }

    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order);
        let n = coeff_count(order) * self.dim * self.dim;
        Self {
            dim: self.dim,
            order,
            data: self.data[..n].to_vec(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            order: self.order,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// Multiplication by a scalar jet.
    pub fn scale_jet(&self, s: &Jet) -> Self {
        let order = self.order.min(s.order);
        let n2 = self.dim * self.dim;
        let mut data = vec![ZERO; coeff_count(order) * n2];
        for &(i, j, r) in &tables().products[order] {
            let si = s.c[i as usize];
            if si == 0.0 {
                continue;
            }
            let (src, dst) = (j as usize * n2, r as usize * n2);
            for e in 0..n2 {
                data[dst + e] += self.data[src + e] * si;
            }
        }
        Self {
            dim: self.dim,
            order,
            data,
        }
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = self.clone();
        for k in 0..coeff_count(self.order) {
            for r in 0..d {
                for c in 0..d {
                    out.data[k * d * d + r * d + c] = self.data[k * d * d + c * d + r].conj();
                }
            }
        }
        out
    }

    pub fn derivative(&self, var: usize) -> Self {
        assert!(self.order >= 1, "derivative of an order-0 jet");
        let t = tables();
        let order = self.order - 1;
        let n2 = self.dim * self.dim;
        let mut data = vec![ZERO; coeff_count(order) * n2];
        for i in 0..coeff_count(order) {
            let up = t.raise[i][var].expect("within table") as usize;
            let f = t.monos[i][var] as f64 + 1.0;
            for e in 0..n2 {
                data[i * n2 + e] = self.data[up * n2 + e] * f;
            }
        }
        Self {
            dim: self.dim,
            order,
            data,
        }
    }

    /// Commutator `AB - BA` in jet arithmetic.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Largest entry modulus over the value block.
    pub fn value_max_abs(&self) -> f64 {
        self.block(0).iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    /// Largest entry modulus over all Taylor blocks.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn zip(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(self.dim, rhs.dim, "jet dimension mismatch");
        let order = self.order.min(rhs.order);
        let n = coeff_count(order) * self.dim * self.dim;
        Self {
            dim: self.dim,
            order,
            data: (0..n).map(|i| f(self.data[i], rhs.data[i])).collect(),
        }
    }
}

impl Add for &JetMatrix {
    type Output = JetMatrix;
    fn add(self, rhs: &JetMatrix) -> JetMatrix {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &JetMatrix {
    type Output = JetMatrix;
    fn sub(self, rhs: &JetMatrix) -> JetMatrix {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Neg for &JetMatrix {
    type Output = JetMatrix;
    fn neg(self) -> JetMatrix {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &JetMatrix {
    type Output = JetMatrix;
    fn mul(self, rhs: &JetMatrix) -> JetMatrix {
        assert_eq!(self.dim, rhs.dim, "jet dimension mismatch");
        let d = self.dim;
        let n2 = d * d;
        let order = self.order.min(rhs.order);
        let n = coeff_count(order);
        let nonzero = |m: &JetMatrix| -> Vec<bool> {
            (0..n)
                .map(|k| m.data[k * n2..(k + 1) * n2].iter().any(|z| *z != ZERO))
                .collect()
        };
        let (lz, rz) = (nonzero(self), nonzero(rhs));
        let mut data = vec![ZERO; n * n2];
        for &(i, j, r) in &tables().products[order] {
            let (i, j, r) = (i as usize, j as usize, r as usize);
            if !lz[i] || !rz[j] {
                continue;
            }
            let a = &self.data[i * n2..(i + 1) * n2];
            let b = &rhs.data[j * n2..(j + 1) * n2];
            let out = &mut data[r * n2..(r + 1) * n2];
            for row in 0..d {
                for k in 0..d {
                    let aik = a[row * d + k];
                    if aik == ZERO {
                        continue;
                    }
                    for col in 0..d {
                        out[row * d + col] += aik * b[k * d + col];
                    }
                }
            }
        }
        JetMatrix {
            dim: d,
            order,
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        assert_eq!(coeff_count(0), 1);
        assert_eq!(coeff_count(1), 7);
        assert_eq!(coeff_count(2), 28);
        assert_eq!(coeff_count(3), 84);
        assert_eq!(coeff_count(MAX_ORDER), 462);
        let t = tables();
        for a in 0..NVARS {
            let mut e = [0u8; NVARS];
            e[a] = 1;
            assert_eq!(t.monos[1 + a], e);
        }
    }

    #[test]
    fn sqrt_of_pythagorean_sum() {
        // E = sqrt(p1^2 + p4^2) at (3, 4): value 5, dE/dp1 = 0.6
        let p = [3.0, 0.0, 0.0, 4.0, 0.0, 0.0];
        let x = Jet::coordinates(&p, 2);
        let e = sum_sq(&x, 2).sqrt("E").unwrap();
        assert!((e.value() - 5.0).abs() < 1e-15);
        assert!((e.partial(0) - 0.6).abs() < 1e-15);
        assert!((e.partial(3) - 0.8).abs() < 1e-15);
        // d2E/dp1^2 = p4^2 / E^3
        assert!((e.partial2(0, 0) - 16.0 / 125.0).abs() < 1e-15);
        assert!((e.partial2(0, 3) + 12.0 / 125.0).abs() < 1e-15);
    }

    #[test]
    fn recip_series_against_closed_form() {
        // 1/(1 + p1 + p2^2) around p1 = 0.5, p2 = 0.25
        let x = Jet::coordinates(&[0.5, 0.25, 0.0, 0.0, 0.0, 0.0], 3);
        let u = &x[0] + &(&x[1] * &x[1]).add_const(1.0);
        let r = u.recip("u").unwrap();
        let u0: f64 = 1.0 + 0.5 + 0.0625;
        assert!((r.value() - 1.0 / u0).abs() < 1e-15);
        assert!((r.partial(0) + 1.0 / (u0 * u0)).abs() < 1e-15);
        assert!((r.partial(1) + 2.0 * 0.25 / (u0 * u0)).abs() < 1e-15);
        assert!((r.partial2(0, 0) - 2.0 / u0.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn domain_errors_name_the_factor() {
        let z = Jet::constant(0.0, 1);
        match z.recip("E+M") {
            Err(Error::Domain { factor, .. }) => assert_eq!(factor, "E+M"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Jet::constant(-1.0, 0).sqrt("radicand").is_err());
    }

    #[test]
    fn derivative_lowers_order() {
        let x = Jet::coordinates(&[1.0, 2.0, 0.0, 0.0, 0.0, 0.0], 3);
        // f = p1^2 p2, df/dp1 = 2 p1 p2
        let f = &(&x[0] * &x[0]) * &x[1];
        let g = f.derivative(0);
        assert_eq!(g.order(), 2);
        assert!((g.value() - 4.0).abs() < 1e-15);
        assert!((g.partial(1) - 2.0).abs() < 1e-15);
        assert!((g.partial(0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn matrix_product_rule_matches_finite_differences() {
        let a = ComplexMatrix::from_row_major(&[
            C64::new(1.0, 0.0),
            C64::new(0.0, 2.0),
            C64::new(-1.0, 0.5),
            C64::new(0.3, 0.0),
        ]);
        let b = ComplexMatrix::from_row_major(&[
            C64::new(0.0, 1.0),
            C64::new(1.5, 0.0),
            C64::new(0.2, 0.0),
            C64::new(-1.0, -1.0),
        ]);
        let build = |p: &[f64; 6], order| {
            let x = Jet::coordinates(p, order);
            let fa = JetMatrix::from_scalar(&(&x[0] * &x[2]), &a);
            let fb = JetMatrix::from_scalar(&sum_sq(&x, order).sqrt("r").unwrap(), &b);
            &(&fa + &JetMatrix::identity(2, order)) * &fb
        };
        let p = [0.7, -0.4, 1.1, 0.2, 0.0, -0.9];
        let j = build(&p, 1);
        let h = 1e-6;
        for var in 0..6 {
            let (mut pp, mut pm) = (p, p);
            pp[var] += h;
            pm[var] -= h;
            let fd = (&build(&pp, 0).value() - &build(&pm, 0).value()).scale_re(0.5 / h);
            assert!(fd.dist(&j.partial(var)) < 1e-8, "var {var}");
        }
    }
}
