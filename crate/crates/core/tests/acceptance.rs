//! One line per acceptance criterion, each at its pinned tolerance.
//! Exits non-zero when any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use twobody::exec::Exec;
use twobody::report::{Entry, EntryKind, Report};
use twobody::suites::{run_suite, Suite, SuiteConfig};

struct Ledger {
    failed: usize,
}

impl Ledger {
    fn line(&mut self, n: u32, title: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("criterion {n:>2} {:<4} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn timed(suite: Suite, cfg: &SuiteConfig) -> (Report, Duration) {
    let t = Instant::now();
    let (r, _) = run_suite(suite, cfg, Exec::default()).expect("suite runs");
    (r, t.elapsed())
}

fn entry<'a>(r: &'a Report, id: &str) -> &'a Entry {
    r.entries.iter().find(|e| e.id == id).unwrap_or_else(|| panic!("no entry {id}"))
}

fn input_f64(e: &Entry, key: &str) -> f64 {
    e.inputs[key].as_f64().unwrap_or(f64::NAN)
}

/// Worst residual and whether it is within `tol`.
fn within(entries: &[&Entry], tol: f64) -> (f64, bool) {
    let worst = entries.iter().map(|e| e.residual).fold(0.0, f64::max);
    let ok = entries.iter().all(|e| e.residual <= tol) && !entries.is_empty();
    (worst, ok)
}

fn main() -> ExitCode {
    let cfg = SuiteConfig {
        seed: 0x5EED,
        points: 50,
        ..SuiteConfig::default()
    };
    let mut led = Ledger { failed: 0 };

    let (clifford, t) = timed(Suite::Clifford, &cfg);
    let g8 = entry(&clifford, "gamma8-anticommutators").residual;
    let g16 = entry(&clifford, "gamma16-anticommutators").residual;
    led.line(
        1,
        "Clifford closure",
        g8 <= 1e-13 && g16 <= 1e-12 && t < Duration::from_secs(1),
        format!("8x8 {g8:.2e} <= 1e-13, 16x16 {g16:.2e} <= 1e-12, {t:.2?} < 1s"),
    );

    let cas = entry(&clifford, "spin-casimir-spectrum");
    let eig: Vec<f64> = serde_json::from_value(cas.inputs["eigenvalues"].clone()).unwrap_or_default();
    let expected = [0.0, 0.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0];
    let dev = if eig.len() == 8 {
        eig.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    led.line(2, "spin content", dev <= 1e-10, format!("Casimir spectrum {eig:?}, deviation {dev:.2e} <= 1e-10"));

    let (poincare, t) = timed(Suite::Poincare, &cfg);
    let closure: Vec<&Entry> = poincare.entries.iter().filter(|e| e.id.starts_with("canonical:[")).collect();
    let pairs: BTreeSet<&str> = closure.iter().map(|e| e.id.split(':').nth(1).unwrap_or_default()).collect();
    let (low, high): (Vec<&Entry>, Vec<&Entry>) = closure.iter().partition(|e| !e.id.ends_with(":order2"));
    let (w01, ok01) = within(&low, 1e-9);
    let (w2, ok2) = within(&high, 1e-10);
    let points = closure.first().map_or(0.0, |e| input_f64(e, "points"));
    led.line(
        3,
        "Poincare closure",
        pairs.len() == 45 && ok01 && ok2 && points >= 50.0 && t < Duration::from_secs(30),
        format!(
            "{} pairs at {points} points (seed {}), orders 0-1 {w01:.2e} <= 1e-9, order 2 {w2:.2e} <= 1e-10, {t:.2?} < 30s",
            pairs.len(),
            poincare.config.seed
        ),
    );

    let unit = entry(&poincare, "foldy-unitarity");
    let diag = entry(&poincare, "foldy-diagonalises");
    let rest = entry(&poincare, "foldy-identity-at-rest");
    led.line(
        4,
        "Foldy transformation",
        unit.residual <= 1e-12 && diag.residual <= 1e-10 && rest.residual <= 1e-14 && input_f64(unit, "points") >= 100.0,
        format!(
            "unitarity {:.2e} <= 1e-12, UHU'-G0E {:.2e} <= 1e-10 at {} points, U(0)-I {:.2e} <= 1e-14",
            unit.residual,
            diag.residual,
            input_f64(unit, "points"),
            rest.residual
        ),
    );

    let (positions, _) = timed(Suite::Positions, &cfg);
    let xp = entry(&positions, "canonical-pair-xp").residual;
    let xx = entry(&positions, "commuting-positions").residual;
    let printed: Vec<&Entry> = positions.entries.iter().filter(|e| e.id.starts_with("printed-vs-conjugated")).collect();
    let (wp, okp) = within(&printed, 1e-8);
    let documented = positions.entries.iter().any(|e| e.kind == EntryKind::Finding);
    led.line(
        5,
        "position operators",
        xp <= 1e-9 && xx <= 1e-9 && (okp || documented),
        format!("[X,P] {xp:.2e}, [X,X] {xx:.2e} <= 1e-9, printed vs conjugated {wp:.2e} <= 1e-8"),
    );

    let (velocity, _) = timed(Suite::Velocity, &cfg);
    let sub = entry(&velocity, "subluminal");
    let grad = entry(&velocity, "positive-expectation-is-gradient");
    let reach = input_f64(sub, "max_abs_p");
    led.line(
        6,
        "velocity bound",
        sub.residual < 1.0 && grad.residual <= 1e-8 && reach >= 100.0 * cfg.m && input_f64(sub, "points") >= 50.0,
        format!(
            "max eigenvalue of V^2 {:.15} < 1 with |p| up to {reach}, <V> - dE/dp {:.2e} <= 1e-8",
            sub.residual, grad.residual
        ),
    );

    let (kin, _) = timed(Suite::Kinematics, &cfg);
    let mass = entry(&kin, "mass-roundtrip");
    let energy = entry(&kin, "energy-roundtrip");
    let equal = entry(&kin, "equal-mass-kprime");
    led.line(
        7,
        "kinematic round trip",
        mass.residual <= 1e-14 && energy.residual <= 1e-14 && equal.residual <= 1e-14 && input_f64(mass, "samples") >= 1000.0,
        format!(
            "mass {:.2e}, energy {:.2e}, equal-mass K'^2 {:.2e} <= 1e-14 over {} samples",
            mass.residual,
            energy.residual,
            equal.residual,
            input_f64(mass, "samples")
        ),
    );

    let h2 = entry(&kin, "unequal-hamiltonian-square");
    led.line(
        8,
        "unequal-mass Hamiltonian",
        h2.residual <= 1e-12 && input_f64(h2, "points") >= 50.0,
        format!("H'^2 residual {:.2e} <= 1e-12 at {} points", h2.residual, input_f64(h2, "points")),
    );

    let (inter, _) = timed(Suite::Interaction, &cfg);
    let sq = entry(&inter, "frozen-sqrt-square");
    let c16 = entry(&inter, "frozen-coulomb16-square");
    led.line(
        9,
        "interaction identities",
        sq.residual <= 1e-12 && c16.residual <= 1e-12 && input_f64(sq, "points") >= 50.0,
        format!("sqrt form {:.2e}, 16-component form {:.2e} <= 1e-12", sq.residual, c16.residual),
    );

    let (evolve, t) = timed(Suite::Evolve, &cfg);
    let norm = entry(&evolve, "norm-drift").residual;
    let en = entry(&evolve, "energy-drift").residual;
    let pos = entry(&evolve, "positive-fraction").residual;
    let gv = entry(&evolve, "group-velocity-axis4").residual;
    let ratio = input_f64(entry(&evolve, "strang-order"), "ratio");
    let grid = &entry(&evolve, "norm-drift").inputs["grid"];
    let shape = grid["n"] == serde_json::json!([256]) && grid["steps"] == 1000;
    led.line(
        10,
        "evolution",
        norm <= 1e-10 && en <= 1e-10 && pos <= 1e-10 && gv <= 1e-3 && (3.5..=4.5).contains(&ratio) && shape && t < Duration::from_secs(60),
        format!(
            "norm {norm:.2e}, energy {en:.2e} <= 1e-10, 1 - pos fraction {pos:.2e} <= 1e-10, velocity rel err {gv:.2e} <= 1e-3, Strang ratio {ratio:.3} in [3.5, 4.5], {t:.2?} < 60s"
        ),
    );

    let (a, _) = timed(Suite::All, &cfg);
    let (b, _) = timed(Suite::All, &cfg);
    let same = a.to_json_without_timestamp() == b.to_json_without_timestamp();
    led.line(11, "determinism", same, format!("two full runs, {} entries, identical JSON: {same}", a.entries.len()));

    if led.failed == 0 {
        println!("acceptance: all 11 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of 11 criteria fail", led.failed);
        ExitCode::FAILURE
    }
}
