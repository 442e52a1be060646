//! Spectral time evolution of the eight-component equation on grids over up
//! to three of the six coordinates.
//!
//! Free and uniform-field evolution uses the exact per-mode exponential;
//! space- or time-dependent fields use Strang splitting.

pub mod grid;

use serde::{Deserialize, Serialize};

use crate::clifford::gamma8;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::generators::{FreeHamiltonian, TwoBodyParams};
use crate::interaction::{FieldSpec, MinimalCoupling};
use crate::jet::NVARS;
use crate::linalg::{ComplexMatrix, C64};

pub use grid::{GridSpec, SpectralTransform, COMPONENTS, MAX_SITES};

/// Mode count up to which per-mode propagators are precomputed by
/// eigendecomposition; larger grids use the closed form `cos(Eτ) - i sin(Eτ) H/E`
/// on the fly.
pub const CACHE_LIMIT: usize = 1 << 16;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentMode {
    /// Each Fourier mode projected onto the positive-energy subspace.
    #[default]
    PositiveEnergy,
    /// The same spinor at every point.
    RawSpinor,
}

/// Gaussian packet `Π_j exp(-(x_j - x0_j)²/(4σ_j²) + i k0_j x_j) u`, one entry
/// per active axis; `σ` is the position spread of `|ψ|²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub center_x: Vec<f64>,
    pub center_p: Vec<f64>,
    pub width: Vec<f64>,
    #[serde(default)]
    pub mode: ComponentMode,
    /// Spinor `u` as `[re, im]` pairs; defaults to the first basis vector.
    #[serde(default)]
    pub spinor: Option<Vec<[f64; 2]>>,
}

impl PacketSpec {
    /// Central momentum as a six-vector.
    pub fn momentum6(&self, grid: &GridSpec) -> [f64; NVARS] {
        let mut k = [0.0; NVARS];
        for j in 0..grid.dims() {
            k[grid.axis_var(j)] = self.center_p[j];
        }
        k
    }

    fn spinor(&self) -> Result<[C64; COMPONENTS]> {
        match &self.spinor {
            None => {
                let mut u = [ZERO; COMPONENTS];
                u[0] = C64::new(1.0, 0.0);
                Ok(u)
            }
            Some(v) if v.len() == COMPONENTS => Ok(std::array::from_fn(|i| C64::new(v[i][0], v[i][1]))),
            Some(v) => Err(Error::Config(format!("spinor needs {COMPONENTS} entries, got {}", v.len()))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GridState {
    pub spec: GridSpec,
    /// Site-major: `psi[site * 8 + component]`.
    pub psi: Vec<C64>,
    pub t: f64,
    pub packet: PacketSpec,
}

impl GridState {
    /// `Σ |ψ|² dV`
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spec.cell_volume()
    }

    fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Grid("state has zero or non-finite norm".into()));
        }
        let s = 1.0 / n.sqrt();
        self.psi.iter_mut().for_each(|z| *z *= s);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.psi.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// `P+(k) = (I + H(k)/E(k))/2`
fn positive_projector(h: &ComplexMatrix) -> ComplexMatrix {
    let e = ((h * h).trace().re / h.dim() as f64).sqrt();
    (&ComplexMatrix::identity(h.dim()) + &h.scale_re(1.0 / e)).scale_re(0.5)
}

fn apply_per_site(data: &mut [C64], exec: Exec, m: impl Fn(usize) -> ComplexMatrix + Sync + Send) {
    exec.for_each_chunk(data, COMPONENTS, |site, spinor| {
        let out = m(site).mul_vec(spinor);
        spinor.copy_from_slice(&out);
    });
}

/// Builds the initial packet. Fails when the packet is narrower than two grid
/// spacings or its centre lies outside the box.
///
/// `shift` is `eA` for a uniform static field, so that the positive-energy
/// projection refers to the coupled Hamiltonian.
pub fn init_gaussian(
    spec: &GridSpec,
    packet: &PacketSpec,
    free: &FreeHamiltonian,
    shift: &[f64; NVARS],
    exec: Exec,
) -> Result<GridState> {
    let d = spec.dims();
    if packet.center_x.len() != d || packet.center_p.len() != d || packet.width.len() != d {
        return Err(Error::Config("packet needs one centre, momentum and width per active axis".into()));
    }
    for j in 0..d {
        if !(packet.width[j] >= 2.0 * spec.spacing(j)) {
            return Err(Error::Grid(format!(
                "under-resolved packet: width {} < 2 grid spacings ({}) on axis {}",
                packet.width[j],
                2.0 * spec.spacing(j),
                spec.active_axes[j]
            )));
        }
        if !(packet.center_x[j].abs() < 0.5 * spec.l[j]) {
            return Err(Error::Grid(format!("packet centre {} outside the box on axis {}", packet.center_x[j], spec.active_axes[j])));
        }
        if !packet.center_p[j].is_finite() {
            return Err(Error::Config("packet momentum must be finite".into()));
        }
    }
    let u = packet.spinor()?;
    let mut psi = vec![ZERO; spec.sites() * COMPONENTS];
    exec.for_each_chunk(&mut psi, COMPONENTS, |site, spinor| {
        let idx = spec.indices(site);
        let mut amp = C64::new(1.0, 0.0);
        for j in 0..d {
            let x = spec.coordinate(j, idx[j]);
            let dx = x - packet.center_x[j];
            amp *= C64::from_polar((-dx * dx / (4.0 * packet.width[j] * packet.width[j])).exp(), packet.center_p[j] * x);
        }
        for (s, uc) in spinor.iter_mut().zip(&u) {
            *s = amp * uc;
        }
    });
    let mut state = GridState {
        spec: spec.clone(),
        psi,
        t: 0.0,
        packet: packet.clone(),
    };
    if packet.mode == ComponentMode::PositiveEnergy {
        project_positive(&mut state, free, shift, exec);
    }
    state.normalize()?;
    Ok(state)
}

/// Projects every Fourier mode with `P+` of `H(k - shift)`.
pub fn project_positive(state: &mut GridState, free: &FreeHamiltonian, shift: &[f64; NVARS], exec: Exec) {
    let g = gamma8();
    let fft = SpectralTransform::new(&state.spec);
    let spec = state.spec.clone();
    fft.forward(&mut state.psi, exec);
    apply_per_site(&mut state.psi, exec, |site| {
        let k = spec.momentum(site);
        positive_projector(&free.matrix(&g, &std::array::from_fn(|a| k[a] - shift[a])))
    });
    fft.inverse(&mut state.psi, exec);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepperKind {
    /// Exact when the field is uniform and static, Strang otherwise.
    #[default]
    Auto,
    Exact,
    Strang,
}

/// Per-mode `exp(-iH(k)τ)`, either tabulated or computed on demand.
#[derive(Clone)]
struct ModePropagator {
    free: FreeHamiltonian,
    shift: [f64; NVARS],
    tau: f64,
    table: Option<Vec<ComplexMatrix>>,
}

impl ModePropagator {
    fn new(spec: &GridSpec, free: FreeHamiltonian, shift: [f64; NVARS], tau: f64, exec: Exec) -> Self {
        let mut p = Self {
            free,
            shift,
            tau,
            table: None,
        };
        if spec.sites() <= CACHE_LIMIT {
            let g = gamma8();
            let table = exec.map_range(spec.sites(), |site| p.hamiltonian(&g, spec, site).exp_hermitian(tau));
            p.table = Some(table);
        }
        p
    }

    fn hamiltonian(&self, g: &crate::clifford::GammaSet, spec: &GridSpec, site: usize) -> ComplexMatrix {
        let k = spec.momentum(site);
        self.free.matrix(g, &std::array::from_fn(|a| k[a] - self.shift[a]))
    }

    fn apply(&self, spec: &GridSpec, data: &mut [C64], exec: Exec) {
        match &self.table {
            Some(t) => apply_per_site(data, exec, |site| t[site].clone()),
            None => {
                let g = gamma8();
                apply_per_site(data, exec, |site| closed_form_exp(&self.hamiltonian(&g, spec, site), self.tau))
            }
        }
    }
}

/// `exp(-iHτ)` for `H² = E² I`: `cos(Eτ) I - i sin(Eτ) H/E`.
pub fn closed_form_exp(h: &ComplexMatrix, tau: f64) -> ComplexMatrix {
    let e2 = (h * h).trace().re / h.dim() as f64;
    let id = ComplexMatrix::identity(h.dim());
    if e2 <= 0.0 {
        return id;
    }
    let e = e2.sqrt();
    &id.scale_re((e * tau).cos()) - &h.scale(C64::new(0.0, (e * tau).sin() / e))
}

/// Advances a [`GridState`] by fixed steps.
#[derive(Clone)]
pub struct Evolver {
    coupling: MinimalCoupling,
    kind: StepperKind,
    dt: f64,
    exec: Exec,
    /// Full step (exact) or half kinetic step (Strang).
    kinetic: ModePropagator,
    steps_taken: usize,
}

impl Evolver {
    pub fn new(coupling: MinimalCoupling, kind: StepperKind, dt: f64, exec: Exec) -> Result<Self> {
        let uniform = coupling.fields.uniform_static();
        let kind = match (kind, uniform) {
            (StepperKind::Auto, Some(_)) => StepperKind::Exact,
            (StepperKind::Auto, None) => StepperKind::Strang,
            (StepperKind::Exact, None) => {
                return Err(Error::Config("the exact stepper needs a uniform static field".into()));
            }
            (k, _) => k,
        };
        let spec = coupling.grid().clone();
        let kinetic = match kind {
            StepperKind::Exact => {
                let a = uniform.unwrap_or([0.0; NVARS]);
                let e = coupling.fields.charge;
                ModePropagator::new(&spec, coupling.free, a.map(|x| e * x), dt, exec)
            }
            _ => ModePropagator::new(&spec, coupling.free, [0.0; NVARS], 0.5 * dt, exec),
        };
        Ok(Self {
            coupling,
            kind,
            dt,
            exec,
            kinetic,
            steps_taken: 0,
        })
    }

    pub fn kind(&self) -> StepperKind {
        self.kind
    }

    pub fn coupling(&self) -> &MinimalCoupling {
        &self.coupling
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn kinetic_step(&self, state: &mut GridState) {
        let fft = self.coupling.transform();
        fft.forward(&mut state.psi, self.exec);
        self.kinetic.apply(&state.spec, &mut state.psi, self.exec);
        fft.inverse(&mut state.psi, self.exec);
    }

    /// `exp(-iW dt)` with `W = -e Σ λ_A Γ_0Γ_A A_A(t, x)`; `W² = w² I` so the
    /// closed form is exact.
    fn field_step(&self, state: &mut GridState, t: f64) {
        let spec = state.spec.clone();
        let dt = self.dt;
        apply_per_site(&mut state.psi, self.exec, |site| {
            closed_form_exp(&self.coupling.field_term(t, &spec.position(site)), dt)
        });
    }

    /// One step; a non-finite result aborts with the step index.
    pub fn step(&mut self, state: &mut GridState) -> Result<()> {
        match self.kind {
            StepperKind::Strang => {
                self.kinetic_step(state);
                self.field_step(state, state.t + 0.5 * self.dt);
                self.kinetic_step(state);
            }
            _ => self.kinetic_step(state),
        }
        self.steps_taken += 1;
        state.t += self.dt;
        if !state.is_finite() {
            return Err(Error::NonFinite { step: self.steps_taken });
        }
        Ok(())
    }
}

/// Observables recorded at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub pos_fraction: f64,
    pub centroid: [f64; NVARS],
}

/// Measures norm, `⟨H⟩`, positive-energy fraction and centroid.
pub fn measure(state: &GridState, coupling: &MinimalCoupling, exec: Exec) -> Snapshot {
    let spec = &state.spec;
    let dv = spec.cell_volume();
    let norm = state.norm();
    let hpsi = coupling.apply(&state.psi, state.t, exec);
    let energy = state.psi.iter().zip(&hpsi).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * dv / norm;
    let shift = coupling
        .fields
        .uniform_static()
        .map(|a| a.map(|x| x * coupling.fields.charge))
        .unwrap_or([0.0; NVARS]);
    let mut projected = state.clone();
    project_positive(&mut projected, &coupling.free, &shift, exec);
    let pos_fraction = projected.norm() / norm;
    let mut centroid = [0.0; NVARS];
    let weights: Vec<[f64; NVARS]> = exec.map_range(spec.sites(), |site| {
        let w: f64 = state.psi[site * COMPONENTS..(site + 1) * COMPONENTS].iter().map(|z| z.norm_sqr()).sum();
        spec.position(site).map(|x| x * w)
    });
    for w in &weights {
        for a in 0..NVARS {
            centroid[a] += w[a];
        }
    }
    Snapshot {
        t: state.t,
        norm,
        energy,
        pos_fraction,
        centroid: centroid.map(|c| c * dv / norm),
    }
}

/// `∇E` at the packet's central kinetic momentum, `k − eA` for a uniform
/// static field. Other fields get the free value.
pub fn group_velocity(state: &GridState, coupling: &MinimalCoupling) -> [f64; NVARS] {
    let mut k = state.packet.momentum6(&state.spec);
    if let Some(a) = coupling.fields.uniform_static() {
        for (kk, aa) in k.iter_mut().zip(a) {
            *kk -= coupling.fields.charge * aa;
        }
    }
    coupling.free.energy_gradient(&k)
}

/// Pre-run check that the packet stays at least four widths away from the
/// periodic boundary, moving at its group velocity.
pub fn wrap_guard(state: &GridState, coupling: &MinimalCoupling, duration: f64) -> Result<()> {
    let spec = &state.spec;
    let v = group_velocity(state, coupling);
    for j in 0..spec.dims() {
        let margin = 4.0 * state.packet.width[j];
        let start = state.packet.center_x[j];
        let end = start + v[spec.axis_var(j)] * duration;
        let half = 0.5 * spec.l[j];
        if start.abs() + margin > half || end.abs() + margin > half {
            return Err(Error::Grid(format!(
                "packet would come within 4 widths of the boundary on axis {} (from {start:.3} to {end:.3}, half-box {half})",
                spec.active_axes[j]
            )));
        }
    }
    Ok(())
}

/// Whether `dt · max E < π` on this grid; recorded, not enforced.
pub fn aliasing_ok(spec: &GridSpec, free: &FreeHamiltonian) -> bool {
    let mut k = [0.0; NVARS];
    for (j, km) in spec.k_max().into_iter().enumerate() {
        k[spec.axis_var(j)] = km;
    }
    spec.dt * free.energy(&k) < std::f64::consts::PI
}

/// Snapshot series plus what the diagnostics need to know about the packet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub active_axes: Vec<usize>,
    pub snapshots: Vec<Snapshot>,
    /// `∇_k E` at the packet's central momentum.
    pub predicted_velocity: [f64; NVARS],
    pub aliasing_ok: bool,
}

/// Steps `state` `steps` times, recording `snapshots` evenly spaced snapshots
/// including the initial and final state.
pub fn run(state: &mut GridState, evolver: &mut Evolver, steps: usize, snapshots: usize) -> Result<Evolution> {
    let free = evolver.coupling().free;
    wrap_guard(state, evolver.coupling(), steps as f64 * evolver.dt())?;
    let snapshots = snapshots.clamp(2, steps + 1);
    let mut marks: Vec<usize> = (0..snapshots).map(|i| (i * steps + (snapshots - 1) / 2) / (snapshots - 1)).collect();
    marks.dedup();
    let exec = evolver.exec;
    let mut out = Vec::with_capacity(marks.len());
    let mut next = marks.iter().peekable();
    for step in 0..=steps {
        if next.peek() == Some(&&step) {
            out.push(measure(state, evolver.coupling(), exec));
            next.next();
        }
        if step < steps {
            evolver.step(state)?;
        }
    }
    Ok(Evolution {
        active_axes: state.spec.active_axes.clone(),
        snapshots: out,
        predicted_velocity: group_velocity(state, evolver.coupling()),
        aliasing_ok: aliasing_ok(&state.spec, &free),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisVelocity {
    pub axis: usize,
    pub fitted: f64,
    pub predicted: f64,
    pub abs_error: f64,
    /// `|fitted - predicted| / |predicted|`, absent when the prediction is 0.
    pub rel_error: Option<f64>,
    /// Largest `|⟨x⟩(t) - ⟨x⟩(0)|`.
    pub max_displacement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub velocities: Vec<AxisVelocity>,
    pub norm_drift: Vec<f64>,
    pub energy_drift: Vec<f64>,
    pub pos_fraction: Vec<f64>,
    pub max_norm_drift: f64,
    pub max_energy_drift: f64,
    pub min_pos_fraction: f64,
}

/// Least-squares slope of `y` against `t`.
fn slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let (mt, my) = (t.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let num: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let den: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
    num / den
}

pub fn diagnose(ev: &Evolution) -> Result<Diagnosis> {
    let s = &ev.snapshots;
    if s.len() < 2 {
        return Err(Error::Grid("diagnosis needs at least two snapshots".into()));
    }
    let t: Vec<f64> = s.iter().map(|x| x.t).collect();
    let velocities = ev
        .active_axes
        .iter()
        .map(|&axis| {
            let y: Vec<f64> = s.iter().map(|x| x.centroid[axis - 1]).collect();
            let fitted = slope(&t, &y);
            let predicted = ev.predicted_velocity[axis - 1];
            let abs_error = (fitted - predicted).abs();
            AxisVelocity {
                axis,
                fitted,
                predicted,
                abs_error,
                rel_error: (predicted != 0.0).then(|| abs_error / predicted.abs()),
                max_displacement: y.iter().map(|v| (v - y[0]).abs()).fold(0.0, f64::max),
            }
        })
        .collect();
    let norm_drift: Vec<f64> = s.iter().map(|x| (x.norm - s[0].norm).abs()).collect();
    let energy_drift: Vec<f64> = s.iter().map(|x| (x.energy - s[0].energy).abs()).collect();
    let pos_fraction: Vec<f64> = s.iter().map(|x| x.pos_fraction).collect();
    Ok(Diagnosis {
        velocities,
        max_norm_drift: norm_drift.iter().copied().fold(0.0, f64::max),
        max_energy_drift: energy_drift.iter().copied().fold(0.0, f64::max),
        min_pos_fraction: pos_fraction.iter().copied().fold(f64::INFINITY, f64::min),
        norm_drift,
        energy_drift,
        pos_fraction,
    })
}

/// Mass settings in a config file: `m` (equal masses, total mass) or `m1` and `m2`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MassConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e2: Option<f64>,
}

impl MassConfig {
    pub fn params(&self) -> Result<TwoBodyParams> {
        let p = match (self.m, self.m1, self.m2) {
            (None, Some(m1), Some(m2)) => TwoBodyParams::unequal(m1, m2),
            (m, None, None) => TwoBodyParams::equal(m.unwrap_or(1.0)),
            _ => Err(Error::Config("give either m, or both m1 and m2".into())),
        }?;
        p.with_coupling(self.e2.unwrap_or(0.0)).validated()
    }
}

/// Everything needed for one evolution run; the grid fields sit at the top level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    #[serde(flatten)]
    pub grid: GridSpec,
    #[serde(flatten)]
    pub mass: MassConfig,
    pub packet: PacketSpec,
    #[serde(default)]
    pub fields: Option<FieldSpec>,
    #[serde(default)]
    pub stepper: StepperKind,
}

impl EvolveConfig {
    /// The free 1-axis packet used by the evolution checks: 256 points over
    /// `L = 400` on axis 4, `σ = 20`, `k0 = 1`, `m = 1`, 1000 steps of 0.3.
    pub fn free_packet() -> Self {
        Self {
            grid: GridSpec::one_axis(4, 256, 400.0, 0.3, 1000).expect("valid grid"),
            mass: MassConfig {
                m: Some(1.0),
                ..Default::default()
            },
            packet: PacketSpec {
                center_x: vec![-100.0],
                center_p: vec![1.0],
                width: vec![20.0],
                mode: ComponentMode::PositiveEnergy,
                spinor: None,
            },
            fields: None,
            stepper: StepperKind::Auto,
        }
    }

    pub fn validated(mut self) -> Result<Self> {
        self.grid = self.grid.validated()?;
        self.mass.params()?;
        Ok(self)
    }

    pub fn build(&self, exec: Exec) -> Result<(GridState, Evolver)> {
        let params = self.mass.params()?;
        let free = params.free();
        let fields = self.fields.clone().unwrap_or_else(FieldSpec::none);
        let shift = fields.uniform_static().map_or([0.0; NVARS], |a| a.map(|x| x * fields.charge));
        let coupling = MinimalCoupling::new(free, fields, &self.grid)?;
        let state = init_gaussian(&self.grid, &self.packet, &free, &shift, exec)?;
        let evolver = Evolver::new(coupling, self.stepper, self.grid.dt, exec)?;
        Ok((state, evolver))
    }

    pub fn run(&self, snapshots: usize, exec: Exec) -> Result<(Evolution, GridState)> {
        let (mut state, mut evolver) = self.build(exec)?;
        let ev = run(&mut state, &mut evolver, self.grid.steps, snapshots)?;
        Ok((ev, state))
    }
}

/// L2 distance `(Σ |a - b|² dV)^{1/2}`.
pub fn l2_distance(a: &GridState, b: &GridState) -> f64 {
    a.psi.iter().zip(&b.psi).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt() * a.spec.cell_volume().sqrt()
}

/// Strang splitting errors at `dt` and `dt/2` against a reference, and their ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrangConvergence {
    pub dt: f64,
    pub duration: f64,
    pub error_dt: f64,
    pub error_half: f64,
    pub ratio: f64,
    /// `exact` for uniform fields, otherwise the refinement factor of the
    /// Strang reference.
    pub reference: String,
}

/// Evolves the config for `duration` with Strang at `dt` and `dt/2`. The
/// reference is the exact stepper for uniform static fields and Strang at
/// `dt/refine` otherwise.
pub fn strang_convergence(cfg: &EvolveConfig, dt: f64, duration: f64, refine: usize, exec: Exec) -> Result<StrangConvergence> {
    let evolve_with = |kind: StepperKind, step: f64| -> Result<GridState> {
        let steps = (duration / step).round() as usize;
        let mut c = cfg.clone();
        c.grid.dt = step;
        c.grid.steps = steps;
        c.stepper = kind;
        let (mut state, mut ev) = c.build(exec)?;
        wrap_guard(&state, ev.coupling(), duration)?;
        for _ in 0..steps {
            ev.step(&mut state)?;
        }
        Ok(state)
    };
    let uniform = cfg.fields.as_ref().map_or(Some([0.0; NVARS]), |f| f.uniform_static());
    let (reference, label) = match uniform {
        Some(_) => (evolve_with(StepperKind::Exact, dt)?, "exact".to_string()),
        None => (evolve_with(StepperKind::Strang, dt / refine as f64)?, format!("strang dt/{refine}")),
    };
    let coarse = evolve_with(StepperKind::Strang, dt)?;
    let fine = evolve_with(StepperKind::Strang, 0.5 * dt)?;
    let (e1, e2) = (l2_distance(&coarse, &reference), l2_distance(&fine, &reference));
    Ok(StrangConvergence {
        dt,
        duration,
        error_dt: e1,
        error_half: e2,
        ratio: e1 / e2,
        reference: label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{FieldComponent, FieldProfile};

    fn small(axis: usize) -> EvolveConfig {
        EvolveConfig {
            grid: GridSpec::one_axis(axis, 128, 200.0, 0.2, 100).unwrap(),
            mass: MassConfig {
                m: Some(1.0),
                ..Default::default()
            },
            packet: PacketSpec {
                center_x: vec![-20.0],
                center_p: vec![0.8],
                width: vec![10.0],
                mode: ComponentMode::PositiveEnergy,
                spinor: None,
            },
            fields: None,
            stepper: StepperKind::Auto,
        }
    }

    #[test]
    fn init_normalised_and_projected() {
        let cfg = small(4);
        let (state, ev) = cfg.build(Exec::default()).unwrap();
        assert!((state.norm() - 1.0).abs() < 1e-13);
        let mut again = state.clone();
        project_positive(&mut again, &ev.coupling().free, &[0.0; NVARS], Exec::default());
        assert!(l2_distance(&again, &state) < 1e-12);
        // raw spinor then projected equals the positive-energy packet after normalisation
        let mut raw_cfg = cfg.clone();
        raw_cfg.packet.mode = ComponentMode::RawSpinor;
        let (mut raw, _) = raw_cfg.build(Exec::default()).unwrap();
        project_positive(&mut raw, &ev.coupling().free, &[0.0; NVARS], Exec::default());
        raw.normalize().unwrap();
        assert!(l2_distance(&raw, &state) < 1e-12);
    }

    #[test]
    fn init_rejects_bad_packets() {
        let mut cfg = small(1);
        cfg.packet.width = vec![2.0];
        assert!(matches!(cfg.build(Exec::default()), Err(Error::Grid(_))));
        cfg.packet.width = vec![10.0];
        cfg.packet.center_x = vec![150.0];
        assert!(cfg.build(Exec::default()).is_err());
    }

    #[test]
    fn plane_wave_phase_is_exact() {
        let cfg = small(4);
        let (mut state, mut ev) = cfg.build(Exec::default()).unwrap();
        let spec = state.spec.clone();
        let free = ev.coupling().free;
        // single positive-energy mode k
        let site_k = 7;
        let k = spec.momentum(site_k);
        let h = free.matrix(&gamma8(), &k);
        let eig = h.hermitian_eigen();
        let u: Vec<C64> = (0..8).map(|r| eig.vectors.get(r, 7)).collect();
        for site in 0..spec.sites() {
            let ph = C64::from_polar(1.0, k[3] * spec.position(site)[3]);
            for c in 0..8 {
                state.psi[site * 8 + c] = u[c] * ph;
            }
        }
        let start = state.psi.clone();
        for _ in 0..50 {
            ev.step(&mut state).unwrap();
        }
        let e = free.energy(&k);
        let phase = C64::from_polar(1.0, -e * state.t);
        let err = state.psi.iter().zip(&start).map(|(a, b)| (a - b * phase).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn per_mode_exponential_is_unitary_and_matches_closed_form() {
        let spec = small(4).grid;
        let free = TwoBodyParams::equal(1.0).unwrap().free();
        let g = gamma8();
        for site in [0, 1, 63, 64, 127] {
            let h = free.matrix(&g, &spec.momentum(site));
            let u = h.exp_hermitian(spec.dt);
            let back = h.exp_hermitian(-spec.dt);
            assert!((&u * &back).dist(&ComplexMatrix::identity(8)) < 1e-12);
            assert!(u.dist(&closed_form_exp(&h, spec.dt)) < 1e-13);
        }
    }

    #[test]
    fn zero_momentum_packet_stays_put() {
        let mut cfg = small(1);
        cfg.packet.center_p = vec![0.0];
        cfg.packet.center_x = vec![0.0];
        let (ev, _) = cfg.run(11, Exec::default()).unwrap();
        let d = diagnose(&ev).unwrap();
        assert!(d.velocities[0].max_displacement < 1e-6, "{:?}", d.velocities);
    }

    #[test]
    fn wrap_guard_triggers() {
        let mut cfg = small(4);
        cfg.grid.steps = 2000;
        assert!(matches!(cfg.run(2, Exec::default()), Err(Error::Grid(_))));
    }

    #[test]
    fn nan_aborts_with_step() {
        let cfg = small(4);
        let (mut state, mut ev) = cfg.build(Exec::default()).unwrap();
        ev.step(&mut state).unwrap();
        state.psi[3] = C64::new(f64::NAN, 0.0);
        assert!(matches!(ev.step(&mut state), Err(Error::NonFinite { step: 2 })));
    }

    #[test]
    fn uniform_field_exact_stepper_conserves() {
        let mut cfg = small(4);
        cfg.fields = Some(FieldSpec::constant(1.0, [0.0, 0.0, 0.0, 0.2, 0.0, 0.0]));
        let (ev, _) = cfg.run(5, Exec::default()).unwrap();
        let d = diagnose(&ev).unwrap();
        assert!(d.max_norm_drift < 1e-12 && d.max_energy_drift < 1e-12, "{d:?}");
        assert!(d.min_pos_fraction > 1.0 - 1e-10);
        // the packet moves at the kinetic momentum k − eA, not k
        let k = cfg.packet.center_p[0] - 0.2;
        let v = k / (k * k + cfg.mass.params().unwrap().free().energy(&[0.0; NVARS]).powi(2)).sqrt();
        assert!((d.velocities[0].predicted - v).abs() < 1e-12, "{d:?}");
        // narrow packet: the centroid follows ⟨∇E⟩, a few 1e-3 off ∇E(k)
        assert!(d.velocities[0].rel_error.unwrap() < 1e-2, "{d:?}");
    }

    #[test]
    fn strang_needs_inhomogeneous_field_for_auto() {
        let mut cfg = small(4);
        cfg.fields = Some(FieldSpec {
            charge: 1.0,
            components: vec![FieldComponent {
                axis: 4,
                profile: FieldProfile::Cosine {
                    amplitude: 0.1,
                    wavenumber: 0.05,
                    along: 4,
                    phase: 0.0,
                    omega: 0.0,
                },
            }],
        });
        let (_, ev) = cfg.build(Exec::default()).unwrap();
        assert_eq!(ev.kind(), StepperKind::Strang);
        cfg.stepper = StepperKind::Exact;
        assert!(cfg.build(Exec::default()).is_err());
    }

    #[test]
    fn policies_agree_bitwise() {
        let cfg = small(4);
        let (a, _) = cfg.run(3, Exec::Sequential).unwrap();
        let (b, _) = cfg.run(3, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = EvolveConfig::free_packet();
        let s = serde_json::to_string(&cfg).unwrap();
        assert!(s.contains("\"active_axes\":[4]") && s.contains("\"L\":[400.0]"));
        let back: EvolveConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
    }
}
