//! Acceptance checks. Each criterion prints one `PASS` or `FAIL` line. The
//! target exits non-zero if a gating criterion fails, except for criteria
//! listed as known red, whose failure is reported with its reason. The
//! stretch probe runs only with `QSEP_STRETCH=1`.

use std::process::Command;
use std::time::Instant;

use qsep::hypotest::{fsep_bounded_with, fsep_relaxed_with, fsep_with, stein_functional_with};
use qsep::measures::{global_robustness_with, power_within_limit, rel_ent_entanglement_with, RelEntropyOptions};
use qsep::protocols::{
    build_distill_map, build_formation_map, check_er_monotonicity, check_lr_monotonicity, compose,
    find_mixing_state, sepp_composition_bound, verify_cptp, verify_sepp, Channel, MeasurePrepareMap, Verdict,
};
use qsep::sep_geometry::is_ppt;
use qsep::states::{isotropic, max_entangled, phi2, random_separable, random_state, werner, IsotropicParams};
use qsep::{DimProfile, HermitianOp, SolveOptions};
use qsep_cli::state_io::StateFile;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn p22() -> DimProfile {
    DimProfile::bipartite(2, 2).unwrap()
}

fn opts(seed: u64) -> SolveOptions {
    SolveOptions::new(1e-6, seed)
}

fn robustness_exactness() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for k in 1..=2 {
        let rho = power_within_limit(&phi2(), k).unwrap();
        let b = global_robustness_with(&rho, &opts(0).generic()).unwrap();
        let target = (1u32 << k) as f64 - 1.0;
        let err = (b.lower - target).abs().max((b.upper - target).abs());
        worst = worst.max(err);
        notes.push(format!("k={k} [{:.8}, {:.8}]", b.lower, b.upper));
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-5 && secs <= 10.0,
        format!("{}; max error {worst:.2e}; {secs:.1}s", notes.join(", ")),
    )
}

fn pure_state_relative_entropy() -> Outcome {
    let t = Instant::now();
    let cases = [(phi2(), 1.0), (max_entangled(3).unwrap(), 3f64.log2())];
    let mut ok = true;
    let mut notes = Vec::new();
    for (rho, target) in &cases {
        let b = rel_ent_entanglement_with(rho, &RelEntropyOptions::new(1e-4, 0).generic()).unwrap();
        ok &= b.contains(*target, 1e-9) && b.width() <= 1e-3;
        notes.push(format!("[{:.6}, {:.6}] vs {target:.6}", b.lower, b.upper));
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(ok && secs <= 60.0, format!("{}; {secs:.1}s", notes.join(", ")))
}

fn isotropic_threshold() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for k in [2usize, 3] {
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            let rho = isotropic(IsotropicParams { k, fidelity: mid }).unwrap();
            if is_ppt(&rho, &[1]).unwrap().0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        ok &= (t - 1.0 / k as f64).abs() <= 1e-6;
        notes.push(format!("K={k}: {t:.9}"));
    }
    outcome(ok, notes.join(", "))
}

fn singlet_fraction_duality() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut anchors: f64 = 0.0;
    for seed in 0..50u64 {
        let rho = random_state(&p22(), 1 + seed as usize % 4, 10_000 + seed).unwrap();
        for k in [2.0, 4.0] {
            let b = fsep_with(&rho, k, &opts(seed)).unwrap();
            worst = worst.max(b.width());
        }
    }
    for k in [2usize, 4] {
        let kf = k as f64;
        let (sep, _) = random_separable(&p22(), 4, k as u64).unwrap();
        let b = fsep_with(&sep, kf, &opts(0)).unwrap();
        anchors = anchors.max((b.lower - 1.0 / kf).abs()).max((b.upper - 1.0 / kf).abs());
        let b = fsep_with(&max_entangled(k).unwrap(), kf, &opts(0)).unwrap();
        anchors = anchors.max((b.lower - 1.0).abs()).max((b.upper - 1.0).abs());
    }
    outcome(
        worst <= 1e-5 && anchors <= 1e-6,
        format!("max endpoint gap {worst:.2e} over 100 solves; anchor error {anchors:.2e}"),
    )
}

fn stein_functional_profile() -> Outcome {
    let at_one = stein_functional_with(&phi2(), 1, 1.0, &opts(0)).unwrap();
    let mut ok = at_one.lower.abs() <= 1e-6 && at_one.upper.abs() <= 1e-6;
    let mut worst_violation: f64 = 0.0;
    let mut crossing = None;
    for n in 1..=3 {
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=20 {
            let y = i as f64 * 0.1;
            let b = stein_functional_with(&phi2(), n, y, &opts(0)).unwrap();
            if let Some((py, pu)) = prev {
                worst_violation = worst_violation.max(b.upper - pu);
                if n == 3 && crossing.is_none() && pu >= 0.5 && b.upper < 0.5 {
                    crossing = Some((py, y));
                }
            }
            prev = Some((y, b.upper));
        }
    }
    ok &= worst_violation <= 1e-7;
    let crossing_ok = matches!(crossing, Some((a, b)) if a >= 0.5 - 1e-12 && b <= 1.5 + 1e-12);
    ok &= crossing_ok;
    outcome(
        ok,
        format!(
            "value at y=1: [{:.2e}, {:.2e}]; worst increase {worst_violation:.2e}; n=3 crosses 1/2 in {crossing:?}",
            at_one.lower, at_one.upper
        ),
    )
}

/// Effect `0 ⪯ A ⪯ I` built from a random state.
fn random_effect(seed: u64) -> HermitianOp {
    let rho = random_state(&p22(), 1 + seed as usize % 3, 20_000 + seed).unwrap();
    let top = 0.6 + 0.4 * ((seed % 5) as f64 / 4.0);
    rho.op().scale(top / rho.op().max_eigenvalue())
}

fn distill_map(seed: u64) -> MeasurePrepareMap {
    let povm = if seed % 2 == 0 {
        max_entangled(2).unwrap().op().clone()
    } else {
        random_effect(seed)
    };
    build_distill_map(&povm, &p22(), 2).unwrap()
}

fn formation_map(seed: u64) -> MeasurePrepareMap {
    let target = if seed % 3 == 0 {
        isotropic(IsotropicParams {
            k: 2,
            fidelity: 0.55 + 0.05 * (seed % 9) as f64,
        })
        .unwrap()
    } else {
        random_state(&p22(), 1 + seed as usize % 3, 30_000 + seed).unwrap()
    };
    let mix = find_mixing_state(&target, 2, &opts(seed)).unwrap();
    build_formation_map(&target, 2, &mix.pi, &mix.mixture).unwrap()
}

fn monotonicity_suite() -> Outcome {
    let (mut violated, mut inconclusive, mut checks, mut not_cptp) = (0, 0, 0, 0);
    let mut worst_margin = f64::INFINITY;
    // ten formation targets, five inputs each
    let formation: Vec<MeasurePrepareMap> = (10..20).map(formation_map).collect();
    for pair in 0..100u64 {
        let map = if pair < 50 {
            distill_map(pair)
        } else {
            formation[(pair as usize - 50) / 5].clone()
        };
        let eps = verify_sepp(&map, &opts(pair)).unwrap().epsilon;
        let channel = Channel::from(map);
        if !verify_cptp(&channel).passed {
            not_cptp += 1;
        }
        let rho = random_state(&p22(), 1 + pair as usize % 4, 40_000 + pair).unwrap();
        let reports = [
            check_lr_monotonicity(&channel, eps, &rho, &opts(pair)).unwrap(),
            check_er_monotonicity(&channel, eps, &rho, &opts(pair)).unwrap(),
        ];
        for r in reports {
            checks += 1;
            worst_margin = worst_margin.min(r.margin);
            match r.verdict {
                Verdict::Holds => {}
                Verdict::Violated => violated += 1,
                Verdict::Inconclusive => inconclusive += 1,
            }
        }
    }
    let rate = inconclusive as f64 / checks as f64;
    outcome(
        violated == 0 && rate <= 0.05 && not_cptp == 0,
        format!(
            "{checks} checks over 100 pairs: {violated} violated, {inconclusive} inconclusive ({:.1}%), {not_cptp} maps failing CPTP, smallest margin {worst_margin:.2e}",
            100.0 * rate
        ),
    )
}

fn formation_certification() -> Outcome {
    let targets = [
        ("phi2", phi2()),
        ("iso(2,0.9)", isotropic(IsotropicParams { k: 2, fidelity: 0.9 }).unwrap()),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, target) in &targets {
        let r = global_robustness_with(target, &opts(0)).unwrap();
        let k = 1usize << ((1.0 + r.upper).log2() - 1e-6).ceil().max(1.0) as u32;
        let mix = find_mixing_state(target, k, &opts(0)).unwrap();
        let map = build_formation_map(target, k, &mix.pi, &mix.mixture).unwrap();
        let eps = verify_sepp(&map, &opts(0)).unwrap().epsilon;
        let limit = 1.0 / (k as f64 - 1.0);
        ok &= eps <= limit + 1e-6;
        notes.push(format!("{name}: K={k} eps {eps:.6} (limit {limit:.6})"));
    }
    outcome(ok, notes.join(", "))
}

fn relaxed_growth_probe() -> Outcome {
    let eps = 0.5;
    let mut min_relaxed = f64::INFINITY;
    for n in 1..=3 {
        let rho_n = power_within_limit(&phi2(), n).unwrap();
        for i in 0..=4 {
            let k = (n as f64 * i as f64 * 0.5).exp2();
            min_relaxed = min_relaxed.min(fsep_relaxed_with(&rho_n, k, eps, &opts(0)).unwrap().lower);
        }
    }
    outcome(
        min_relaxed >= 0.5 - 1e-6,
        format!("smallest relaxed value over n = 1..3, y = 0..2: {min_relaxed:.6}"),
    )
}

/// Checks `bounded ≤ fsep + ε/K` on the same grid, and reports the scaling
/// bound `bounded ≤ (1 + ε)·fsep`, which always holds, alongside it.
fn bounded_variant_probe() -> Outcome {
    let eps = 0.5;
    let mut worst_additive = f64::NEG_INFINITY;
    let mut worst_scaled = f64::NEG_INFINITY;
    let mut witness = String::new();
    for n in 1..=3 {
        let rho_n = power_within_limit(&phi2(), n).unwrap();
        for i in 0..=4 {
            let y = i as f64 * 0.5;
            let k = (n as f64 * y).exp2();
            let bounded = fsep_bounded_with(&rho_n, k, eps, &opts(0)).unwrap();
            let plain = fsep_with(&rho_n, k, &opts(0)).unwrap();
            let excess = bounded.lower - (plain.upper + eps / k);
            if excess > worst_additive {
                worst_additive = excess;
                witness = format!(
                    "n={n} y={y}: bounded {:.6} vs fsep {:.6} + eps/K {:.6}",
                    bounded.lower, plain.upper, eps / k
                );
            }
            worst_scaled = worst_scaled.max(bounded.lower - (1.0 + eps) * plain.upper);
        }
    }
    outcome(
        worst_additive <= 1e-6,
        format!(
            "largest bounded - (fsep + eps/K) {worst_additive:.3e} at {witness}; largest bounded - (1+eps)*fsep {worst_scaled:.2e}"
        ),
    )
}

fn composition_bound() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..20u64 {
        let pick = |s: u64, formation: bool| if formation { formation_map(s) } else { distill_map(s) };
        let first = pick(seed, seed % 4 >= 2);
        let second = pick(seed + 100, seed % 2 == 1);
        let e1 = verify_sepp(&first, &opts(seed)).unwrap().epsilon;
        let e2 = verify_sepp(&second, &opts(seed)).unwrap().epsilon;
        let both = compose(&first, &second).unwrap();
        let e = verify_sepp(&both, &opts(seed)).unwrap().epsilon;
        worst = worst.max(e - sepp_composition_bound(e1, e2));
    }
    outcome(worst <= 1e-6, format!("largest excess over the bound {worst:.2e} on 20 compositions"))
}

fn csv_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("mixed.json");
    let rho = random_state(&p22(), 2, 99).unwrap();
    std::fs::write(&state, serde_json::to_string(&StateFile::from_state(&rho)).unwrap()).unwrap();
    let run = |name: &str| -> Option<Vec<u8>> {
        let csv = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_qsep"))
            .args(["sweep", "--kind", "fsep", "--n", "1", "--y", "0:0.25:1.5", "--seed", "3"])
            .arg("--state")
            .arg(&state)
            .arg("--csv")
            .arg(&csv)
            .output()
            .ok()?;
        if !status.status.success() {
            return None;
        }
        std::fs::read(csv).ok()
    };
    match (run("a.csv"), run("b.csv")) {
        (Some(a), Some(b)) => outcome(a == b, format!("two runs, {} bytes each, identical: {}", a.len(), a == b)),
        _ => outcome(false, "sweep run failed"),
    }
}

fn werner_subadditivity_probe() -> Option<Outcome> {
    if std::env::var("QSEP_STRETCH").ok().as_deref() != Some("1") {
        return None;
    }
    let t = Instant::now();
    let rho = werner(3, 1.0).unwrap();
    let single = rel_ent_entanglement_with(&rho, &RelEntropyOptions::new(1e-4, 0)).unwrap();
    // the pair bracket does not close in budget; only its certified upper end matters here
    let mut pair_opts = RelEntropyOptions::new(1e-3, 0);
    pair_opts.max_iter = 50;
    let pair = rel_ent_entanglement_with(&rho.tensor(&rho).unwrap(), &pair_opts).unwrap();
    let strict = pair.upper + 1e-4 < 2.0 * single.lower;
    let secs = t.elapsed().as_secs_f64();
    Some(outcome(
        strict && secs <= 1800.0,
        format!(
            "single [{:.6}, {:.6}], pair [{:.6}, {:.6}], strict subadditivity certified: {strict}; {secs:.0}s",
            single.lower, single.upper, pair.lower, pair.upper
        ),
    ))
}

fn main() {
    let gating: Vec<(&str, &str, fn() -> Outcome)> = vec![
        ("1", "robustness exactness", robustness_exactness),
        ("2", "pure-state relative entropy", pure_state_relative_entropy),
        ("3", "isotropic separability threshold", isotropic_threshold),
        ("4", "singlet-fraction duality", singlet_fraction_duality),
        ("5", "stein functional", stein_functional_profile),
        ("6", "monotonicity under non-entangling maps", monotonicity_suite),
        ("7", "formation certification", formation_certification),
        ("8a", "relaxed singlet-fraction growth", relaxed_growth_probe),
        ("8b", "bounded singlet-fraction additive bound", bounded_variant_probe),
        ("9", "composition bound", composition_bound),
        ("10", "csv reproducibility", csv_reproducibility),
    ];
    // the additive bound fails at exact closed-form values (phi2 at
    // K = 2^1.5: fsep = 2/K, bounded = 1 > 2/K + 0.5/K), so it cannot pass
    let known_red = ["8b"];
    let mut failed = Vec::new();
    for (label, name, check) in &gating {
        let t = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && known_red.contains(label) { " [known red]" } else { "" };
        println!("{verdict} [{label}] {name}: {} ({:.1}s){note}", o.detail, t.elapsed().as_secs_f64());
        if !o.pass && note.is_empty() {
            failed.push(*label);
        }
    }
    match werner_subadditivity_probe() {
        Some(o) => println!(
            "{} [11] werner subadditivity probe (non-gating): {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        ),
        None => println!("SKIP [11] werner subadditivity probe (non-gating; set QSEP_STRETCH=1)"),
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

