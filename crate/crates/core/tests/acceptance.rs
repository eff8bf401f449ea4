//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{LN_2, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use mgsec::montecarlo::{mc_mutual_information, mc_sop};
use mgsec::{
    db_to_linear, make_rule, Constellation64, McOptions, MixtureGamma64, Precision, RuleKind, SecrecyScenario,
    SecrecyScenario64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn nakagami_scenario(m: usize) -> SecrecyScenario64 {
    SecrecyScenario::new(
        MixtureGamma64::nakagami(2.0, 1.0).unwrap(),
        MixtureGamma64::nakagami(2.0, db_to_linear(0.0)).unwrap(),
        Constellation64::square_qam(m).unwrap(),
    )
}

fn kg_scenario(m: usize) -> SecrecyScenario64 {
    SecrecyScenario::new(
        MixtureGamma64::generalized_k(5.0, 2.0, 1.0).unwrap(),
        MixtureGamma64::generalized_k(2.0, 1.0, db_to_linear(5.0)).unwrap(),
        Constellation64::square_qam(m).unwrap(),
    )
    .with_target_rate(1.0)
}

fn at_db(s: &SecrecyScenario64, db: f64) -> SecrecyScenario64 {
    s.with_main_avg_snr(db_to_linear(db)).unwrap()
}

fn loglog_slope(y_lo: f64, y_hi: f64, db_lo: f64, db_hi: f64) -> f64 {
    (y_hi.ln() - y_lo.ln()) / (db_to_linear(db_hi).ln() - db_to_linear(db_lo).ln())
}

fn mi_quadrature_accuracy() -> Outcome {
    let mut worst_order = 0.0_f64;
    let mut worst_order_at = (0, 0.0);
    let mut mc_ok = true;
    let mut worst_mc = 0.0_f64;
    for m in [4usize, 16, 64] {
        let c = Constellation64::square_qam(m).unwrap();
        for g in [0.1, 1.0, 5.0, 10.0, 50.0] {
            let l20 = c.l_function(g, 20).unwrap();
            let d = (l20 - c.l_function(g, 40).unwrap()).abs();
            if d > worst_order {
                worst_order = d;
                worst_order_at = (m, g);
            }
            let est = mc_mutual_information(&c, g, McOptions::new(10_000_000, SEED)).unwrap();
            let diff = (c.mutual_information(g, 20).unwrap() - est.value).abs();
            let tol = 1e-4_f64.max(3.0 * est.std_error);
            worst_mc = worst_mc.max(diff / tol);
            mc_ok &= diff <= tol;
        }
    }
    outcome(
        worst_order <= 1e-5 && mc_ok,
        format!(
            "max |L20-L40| = {worst_order:.2e} at M={}, g={} (tol 1e-5); max MC diff/tol = {worst_mc:.2}",
            worst_order_at.0, worst_order_at.1
        ),
    )
}

fn asr_self_consistency() -> Outcome {
    let mut worst = 0.0_f64;
    for m in [4usize, 16, 64] {
        let base = nakagami_scenario(m);
        let fine = base.clone().with_precision(Precision { laguerre_order: 60, ..Precision::default() });
        for db in [0.0, 10.0, 20.0, 30.0, 40.0] {
            let a = at_db(&base, db).asr().unwrap().asr;
            let b = at_db(&fine, db).asr().unwrap().asr;
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst <= 1e-7, format!("max |asr(p=30)-asr(p=60)| = {worst:.2e} bits (tol 1e-7)"))
}

fn asr_oracle() -> Outcome {
    let mut worst = 0.0_f64;
    for m in [4usize, 16] {
        let base = nakagami_scenario(m);
        for db in [0.0, 10.0, 20.0, 30.0] {
            let s = at_db(&base, db);
            let asr = s.asr().unwrap().asr;
            let est = mgsec::montecarlo::mc_asr(&s, McOptions::new(1_000_000, SEED)).unwrap();
            worst = worst.max(est.z_score(asr).abs());
        }
    }
    outcome(worst <= 3.0, format!("max |z| = {worst:.2} over 8 points (tol 3)"))
}

fn asr_limit_and_roc() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for m in [4usize, 16] {
        let base = nakagami_scenario(m);
        let grid: Vec<f64> = (0..=8).map(|k| 5.0 * k as f64).collect();
        let i_con: Vec<f64> = grid.iter().map(|&db| at_db(&base, db).asr().unwrap().i_con()).collect();
        let positive_decreasing = i_con.iter().all(|&v| v > 0.0) && i_con.windows(2).all(|w| w[1] < w[0]);
        let slope = loglog_slope(i_con[6], i_con[8], 30.0, 40.0);
        let asy = base.asymptotic_asr().unwrap();
        let rel = (asy.i_con_at(db_to_linear(35.0)) - i_con[7]).abs() / i_con[7];
        pass &= positive_decreasing && (-2.15..=-1.85).contains(&slope) && rel <= 0.10;
        notes.push(format!("M={m}: monotone={positive_decreasing} slope={slope:.4} pred err={:.2}%", 100.0 * rel));
    }
    outcome(pass, notes.join("; "))
}

fn asr_eve_monotonicity() -> Outcome {
    let q = 0.5_f64.sqrt();
    let base = SecrecyScenario::new(
        MixtureGamma64::hoyt(q, db_to_linear(20.0)).unwrap(),
        MixtureGamma64::hoyt(q, 1.0).unwrap(),
        Constellation64::square_qam(4).unwrap(),
    );
    let values: Vec<f64> = [-5.0, 0.0, 5.0, 10.0]
        .iter()
        .map(|&db| base.with_eve_avg_snr(db_to_linear(db)).unwrap().asr().unwrap().asr)
        .collect();
    let pass = values.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
    outcome(pass, format!("asr over eve -5..10 dB = [{}]", shown.join(", ")))
}

fn sop_self_consistency() -> Outcome {
    let mut worst = 0.0_f64;
    for m in [4usize, 16] {
        let base = kg_scenario(m);
        let fine = base.clone().with_precision(Precision { legendre_order: 60, ..Precision::default() });
        for db in [5.0, 15.0, 25.0, 35.0] {
            let a = at_db(&base, db).sop().unwrap().sop;
            let b = at_db(&fine, db).sop().unwrap().sop;
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst <= 1e-6, format!("max |sop(v=30)-sop(v=60)| = {worst:.2e} (tol 1e-6)"))
}

fn sop_oracle() -> Outcome {
    let mut worst = 0.0_f64;
    for m in [4usize, 16] {
        let base = kg_scenario(m);
        for db in [5.0, 15.0, 25.0] {
            let s = at_db(&base, db);
            let sop = s.sop().unwrap().sop;
            let est = mc_sop(&s, McOptions::new(1_000_000, SEED)).unwrap();
            worst = worst.max(est.z_score(sop).abs());
        }
    }
    outcome(worst <= 3.0, format!("max |z| = {worst:.2} over 6 points (tol 3)"))
}

fn sop_limit_and_roc() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for m in [4usize, 16] {
        let base = kg_scenario(m);
        let far = at_db(&base, 50.0).sop().unwrap();
        let gap = (far.sop - far.limit_sop).abs();
        let p30 = at_db(&base, 30.0).sop().unwrap().p_con();
        let p35 = at_db(&base, 35.0).sop().unwrap().p_con();
        let p40 = at_db(&base, 40.0).sop().unwrap().p_con();
        let slope = loglog_slope(p30, p40, 30.0, 40.0);
        let asy = base.asymptotic_sop().unwrap();
        let rel = (asy.p_con_at(db_to_linear(35.0)) - p35).abs() / p35;
        pass &= gap <= 1e-3 && (-2.15..=-1.85).contains(&slope) && rel <= 0.10;
        notes.push(format!("M={m}: |sop(50dB)-limit|={gap:.2e} slope={slope:.4} pred err={:.2}%", 100.0 * rel));
    }
    outcome(pass, notes.join("; "))
}

fn cross_family_sop() -> Outcome {
    let main = MixtureGamma64::kappa_mu(1.0, 2.0, 1.0).unwrap();
    let eves = [
        ("nakagami", MixtureGamma64::nakagami(6.0, 1.0).unwrap()),
        ("generalized_k", MixtureGamma64::generalized_k(3.0, 3.0, 1.0).unwrap()),
        ("kappa_mu", MixtureGamma64::kappa_mu(2.0, 1.0, 1.0).unwrap()),
    ];
    let mut pass = true;
    let mut worst = 0.0_f64;
    for (_, eve) in eves {
        let base = SecrecyScenario::new(main.clone(), eve, Constellation64::square_qam(4).unwrap()).with_target_rate(1.0);
        for db in [10.0, 20.0] {
            let s = at_db(&base, db);
            let sop = s.sop().unwrap().sop;
            pass &= sop.is_finite();
            let est = mc_sop(&s, McOptions::new(1_000_000, SEED)).unwrap();
            worst = worst.max(est.z_score(sop).abs());
        }
    }
    outcome(pass && worst <= 3.0, format!("3 eve families x 2 points finite; max |z| = {worst:.2} (tol 3)"))
}

fn quantile(mix: &MixtureGamma64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while mix.cdf(hi) < p {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mix.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn distribution_layer() -> Outcome {
    let grid = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    };
    let families: [(&str, Vec<MixtureGamma64>); 4] = [
        ("nakagami", grid(0.5, 10.0, 20).iter().map(|&m| MixtureGamma64::nakagami(m, 1.7).unwrap()).collect()),
        ("hoyt", grid(0.05, 0.95, 20).iter().map(|&q| MixtureGamma64::hoyt(q, 2.3).unwrap()).collect()),
        (
            "generalized_k",
            grid(0.6, 8.0, 20)
                .iter()
                .zip(grid(0.5, 6.0, 20).iter().rev())
                .map(|(&k, &m)| MixtureGamma64::generalized_k(k, m, 3.1).unwrap())
                .collect(),
        ),
        (
            "kappa_mu",
            grid(0.1, 6.0, 20)
                .iter()
                .zip(grid(0.5, 4.0, 20))
                .map(|(&k, m)| MixtureGamma64::kappa_mu(k, m, 0.8).unwrap())
                .collect(),
        ),
    ];
    let mut worst_norm = 0.0_f64;
    for (_, mixes) in &families {
        for mix in mixes {
            worst_norm = worst_norm.max((mix.total_mass() - 1.0).abs());
        }
    }
    let samples_per_family = 200_000;
    let mut worst_z = 0.0_f64;
    let checks = [
        MixtureGamma64::nakagami(2.0, 1.0).unwrap(),
        MixtureGamma64::hoyt(SQRT_2 / 2.0, 1.0).unwrap(),
        MixtureGamma64::generalized_k(5.0, 2.0, 1.0).unwrap(),
        MixtureGamma64::kappa_mu(1.0, 2.0, 1.0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for mix in &checks {
        let draws = mix.sample(&mut rng, samples_per_family).unwrap();
        for p in [0.25, 0.5, 0.75] {
            let x = quantile(mix, p);
            let f = mix.cdf(x);
            let emp = draws.iter().filter(|&&g| g <= x).count() as f64 / samples_per_family as f64;
            let se = (f * (1.0 - f) / samples_per_family as f64).sqrt();
            worst_z = worst_z.max((emp - f).abs() / se);
        }
    }
    outcome(
        worst_norm <= 1e-6 && worst_z <= 3.0,
        format!("max |mass-1| = {worst_norm:.2e} over 80 points (tol 1e-6); max ECDF |z| = {worst_z:.2} (tol 3)"),
    )
}

fn derivative_identity() -> Outcome {
    let check = |n: usize| {
        let mut worst = 0.0_f64;
        for m in [4usize, 16] {
            let c = Constellation64::square_qam(m).unwrap();
            for g in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
                let h = 1e-3;
                let fd = (c.mutual_information(g + h, n).unwrap() - c.mutual_information(g - h, n).unwrap()) / (2.0 * h)
                    * LN_2;
                let mmse = c.mmse(g, n).unwrap();
                worst = worst.max((mmse - fd).abs() / fd);
            }
        }
        worst
    };
    let strict = check(256);
    let default = check(20);
    outcome(
        strict <= 1e-4,
        format!("max rel err = {strict:.2e} at n=256 (tol 1e-4); {default:.2e} at n=20 for reference"),
    )
}

fn sdo_agreement() -> Outcome {
    let eve = MixtureGamma64::nakagami(1.0, 1.0).unwrap();
    let cases = [
        ("nakagami m=2", MixtureGamma64::nakagami(2.0, 1.0).unwrap(), 2.0),
        ("generalized_k m=2", MixtureGamma64::generalized_k(5.0, 2.0, 1.0).unwrap(), 2.0),
        ("kappa_mu mu=2", MixtureGamma64::kappa_mu(1.0, 2.0, 1.0).unwrap(), 2.0),
        ("hoyt", MixtureGamma64::hoyt(SQRT_2 / 2.0, 1.0).unwrap(), 1.0),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, main, expected) in cases {
        let s = SecrecyScenario::new(main, eve.clone(), Constellation64::square_qam(4).unwrap()).with_target_rate(1.0);
        let a = s.asymptotic_asr().unwrap().g_d;
        let b = s.asymptotic_sop().unwrap().g_d;
        pass &= a == b && a == expected;
        notes.push(format!("{name}: {a}/{b}"));
    }
    outcome(pass, notes.join("; "))
}

fn main() -> ExitCode {
    // Warm the shared quadrature cache so timings reflect the criteria.
    for kind in [RuleKind::Hermite, RuleKind::Laguerre, RuleKind::Legendre] {
        make_rule::<f64>(kind, 20).unwrap();
    }
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 12] = [
        ("MI quadrature accuracy", mi_quadrature_accuracy),
        ("ASR self-consistency", asr_self_consistency),
        ("ASR oracle equivalence", asr_oracle),
        ("ASR limit and rate of convergence", asr_limit_and_roc),
        ("ASR eavesdropper monotonicity", asr_eve_monotonicity),
        ("SOP self-consistency", sop_self_consistency),
        ("SOP oracle equivalence", sop_oracle),
        ("SOP limit and rate of convergence", sop_limit_and_roc),
        ("cross-family SOP", cross_family_sop),
        ("distribution layer", distribution_layer),
        ("derivative identity", derivative_identity),
        ("SDO agreement", sdo_agreement),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!("[{verdict}] {:>2}. {name}: {} ({:.1}s)", i + 1, out.detail, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
