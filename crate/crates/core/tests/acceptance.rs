//! Acceptance gate. Each test prints one `PASS`/`FAIL` line and asserts it.
//!
//! Run with `cargo test -p hbfsim --test acceptance -- --nocapture --test-threads 1`.

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use hbfsim::beamform::{
    analog_objective_f0, analog_objective_f1, f0_qr_value, gradient_f0, EffectiveChannelSet, ObjectiveForm, Side,
};
use hbfsim::harness::{
    monte_carlo, power_total, Architecture, ExperimentSpec, PowerModel, PsBits, Scheme,
};
use hbfsim::linalg::RMat;
use hbfsim::rng::rng_from_seed;
use hbfsim::solvers::{
    exhaustive_search, pga, pga_tbrs, pga_ts, random_analog, refine, tabu_search, AnalogObjective, Objective,
    ObjectiveKind, SolverKind, SolverParams,
};
use hbfsim::squint::{
    bsr_closed, bsr_exact, eag_ps_approx, eag_ps_exact, eag_sw_exact, SquintParams, SwitchVector,
};
use hbfsim::{generate_channel, SystemConfig};
use rand::Rng;

fn verdict(id: u32, name: &str, pass: bool, elapsed: Duration, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id} [{name}]: {tag} in {:.2}s; {detail}", elapsed.as_secs_f64());
    assert!(pass, "criterion {id} [{name}] failed: {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn link(n: usize, n_rf: usize, k: usize, snr_db: f64) -> SystemConfig {
    SystemConfig { n_tx: n, n_rx: n, n_rf, n_streams: n_rf, n_subcarriers: k, ..SystemConfig::default() }
        .with_snr_db(snr_db)
}

fn precoder_set(cfg: &SystemConfig, seed: u64) -> EffectiveChannelSet {
    let h = generate_channel(cfg, seed).unwrap();
    EffectiveChannelSet::identity_projectors(&h).unwrap()
}

fn precoder_objective<'a>(cfg: &SystemConfig, eff: &'a EffectiveChannelSet) -> AnalogObjective<'a> {
    AnalogObjective {
        eff,
        scale: cfg.power_budget / (cfg.n_streams as f64 * cfg.noise_var),
        n_rf: cfg.n_rf,
        n_streams: cfg.n_streams,
        kind: ObjectiveKind::F0,
        side: Side::Precoder,
    }
}

#[test]
fn criterion_1_bsr_regression() {
    let t = Instant::now();
    let b = 1.0 / 14.0;
    let half = bsr_closed(112, b, 0.5);
    let one = bsr_closed(224, b, 0.5);
    let gaps: Vec<f64> = [100, 128, 256]
        .iter()
        .map(|&k| rel(bsr_exact(&SquintParams::new(112, b, 0.5, k).unwrap()), half))
        .collect();
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    let elapsed = t.elapsed();
    let pass = half == 0.5 && one == 1.0 && worst <= 0.02 && elapsed < Duration::from_secs(1);
    verdict(1, "bsr", pass, elapsed, &format!("closed(112)={half} closed(224)={one} worst exact gap={worst:.3e}"));
}

#[test]
fn criterion_2_eag_bounds() {
    let t = Instant::now();
    let (n, delta) = (256, 0.5);
    // BSR = N b delta / 8, so b = 8 BSR / (N delta).
    let at_bsr = |bsr: f64| eag_ps_approx(n, 8.0 * bsr / (n as f64 * delta), delta);
    let at_one = at_bsr(1.0);
    let at_tenth = at_bsr(0.1);
    let grid: Vec<f64> = (0..=200).map(|i| at_bsr(i as f64 * 0.02)).collect();
    let monotone = grid.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let gaps: Vec<f64> = [5e9, 10e9, 20e9]
        .iter()
        .map(|&bw| {
            let p = SquintParams::from_frequencies(n, 140e9, bw, delta, 128).unwrap();
            rel(eag_ps_approx(n, p.frac_bw, delta), eag_ps_exact(&p))
        })
        .collect();
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    let elapsed = t.elapsed();
    let pass = at_one <= 0.39 && at_tenth >= 0.70 && monotone && worst <= 0.05 && elapsed < Duration::from_secs(30);
    verdict(
        2,
        "eag-ps",
        pass,
        elapsed,
        &format!(
            "approx(bsr=1)={at_one:.4} (<=0.39) approx(bsr=0.1)={at_tenth:.4} (>=0.70) monotone={monotone} \
             exact-vs-approx gaps 5/10/20 GHz={:.4}/{:.4}/{:.4} (<=0.05)",
            gaps[0], gaps[1], gaps[2]
        ),
    );
}

#[test]
fn criterion_3_switch_flatness() {
    let t = Instant::now();
    let n = 128;
    let w = SwitchVector::all_ones(n);
    let values: Vec<f64> = [1e9, 10e9, 20e9]
        .iter()
        .map(|&bw| eag_sw_exact(&w, &SquintParams::from_frequencies(n, 140e9, bw, 0.5, 128).unwrap()).unwrap())
        .collect();
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = (hi - lo) / lo;
    let near_third = values.iter().all(|v| (v - 1.0 / 3.0).abs() <= 0.02);
    let elapsed = t.elapsed();
    let pass = near_third && spread < 0.01 && elapsed < Duration::from_secs(30);
    verdict(
        3,
        "eag-sw",
        pass,
        elapsed,
        &format!(
            "values 1/10/20 GHz={:.5}/{:.5}/{:.5} (target 1/3 +- 0.02) spread={spread:.3e} (<0.01)",
            values[0], values[1], values[2]
        ),
    );
}

#[test]
fn criterion_4_objective_and_gradient() {
    let t = Instant::now();
    let mut worst_form = 0.0f64;
    let mut jensen_ok = true;
    let mut instances = 0;
    for n_rf in [2, 4] {
        let cfg = link(8, n_rf, 16, 10.0);
        let gamma = cfg.power_budget / n_rf as f64;
        for seed in 0..50 {
            let eff = precoder_set(&cfg, 100 + seed);
            let mut rng = rng_from_seed(seed);
            let f = random_analog((8, n_rf), &mut rng).unwrap();
            let qr = analog_objective_f0(&f, &eff, gamma, cfg.noise_var, n_rf, ObjectiveForm::Qr).unwrap();
            let pinv = analog_objective_f0(&f, &eff, gamma, cfg.noise_var, n_rf, ObjectiveForm::Pinv).unwrap();
            let f1 = analog_objective_f1(&f, &eff, gamma, cfg.noise_var, n_rf).unwrap();
            worst_form = worst_form.max(rel(pinv, qr));
            jensen_ok &= f1 >= qr - 1e-9 * qr.abs();
            instances += 1;
        }
    }

    let h = 1e-6;
    let mut worst_grad = 0.0f64;
    let mut points = 0;
    for (n, n_rf) in [(6, 2), (8, 4)] {
        let cfg = link(n, n_rf, 16, 10.0);
        let scale = cfg.power_budget / (n_rf as f64 * cfg.noise_var);
        for seed in 0..20u64 {
            let eff = precoder_set(&cfg, 500 + seed);
            let mut rng = rng_from_seed(900 + seed);
            let f = RMat::from_fn(n, n_rf, |_, _| rng.random_range(0.1..0.9));
            let g = gradient_f0(&f, &eff, scale).unwrap();
            let fd = RMat::from_fn(n, n_rf, |i, j| {
                let mut plus = f.clone();
                let mut minus = f.clone();
                plus[(i, j)] += h;
                minus[(i, j)] -= h;
                (f0_qr_value(&plus, &eff, scale, n_rf) - f0_qr_value(&minus, &eff, scale, n_rf)) / (2.0 * h)
            });
            worst_grad = worst_grad.max((&g - &fd).norm() / g.norm());
            points += 1;
        }
    }
    let elapsed = t.elapsed();
    let pass = worst_form <= 1e-9 && worst_grad <= 1e-5 && jensen_ok && elapsed < Duration::from_secs(30);
    verdict(
        4,
        "objective",
        pass,
        elapsed,
        &format!(
            "{instances} instances: pinv-vs-qr worst={worst_form:.2e} (<=1e-9) f1>=f0={jensen_ok}; \
             {points} points: gradient worst={worst_grad:.2e} (<=1e-5)"
        ),
    );
}

#[test]
fn criterion_5_exhaustive_oracle() {
    let t = Instant::now();
    let cfg = link(8, 2, 16, 10.0);
    let (mut es, mut ts, mut pts, mut tbrs) = (0.0, 0.0, 0.0, 0.0);
    for seed in 0..10u64 {
        let eff = precoder_set(&cfg, seed);
        let obj = precoder_objective(&cfg, &eff);
        let params = SolverParams::default().with_seed(seed);
        let shape = obj.shape();
        es += obj.value(exhaustive_search(&obj, shape).unwrap().entries());
        ts += obj.value(tabu_search(&obj, shape, &params, None).unwrap().0.entries());
        pts += obj.value(pga_ts(&obj, shape, &params).unwrap().0.entries());
        tbrs += obj.value(pga_tbrs(&obj, shape, &params).unwrap().0.entries());
    }
    let (r_ts, r_pts, r_tbrs) = (ts / es, pts / es, tbrs / es);
    let elapsed = t.elapsed();
    let pass = r_ts >= 0.95 && r_pts >= 0.95 && r_tbrs >= 0.92 && elapsed < Duration::from_secs(300);
    verdict(
        5,
        "exhaustive",
        pass,
        elapsed,
        &format!("ratio to optimum: ts={r_ts:.4} (>=0.95) pga-ts={r_pts:.4} (>=0.95) pga-tbrs={r_tbrs:.4} (>=0.92)"),
    );
}

#[test]
fn criterion_6_power_model() {
    let t = Instant::now();
    let cfg = SystemConfig { n_tx: 256, n_rx: 256, n_rf: 4, n_streams: 4, ..SystemConfig::default() };
    let m = PowerModel::default();
    let got = [
        power_total(Architecture::SwHbf, &cfg, &m).unwrap(),
        power_total(Architecture::Dbf, &cfg, &m).unwrap(),
        power_total(Architecture::PsHbf(PsBits::Finite(4)), &cfg, &m).unwrap(),
    ];
    let want = [44.532, 287.744, 116.212];
    let pass = got.iter().zip(want).all(|(g, w)| (g - w).abs() < 5e-4);
    verdict(6, "power", pass, t.elapsed(), &format!("sw/dbf/ps4 = {:.3}/{:.3}/{:.3} W", got[0], got[1], got[2]));
}

#[test]
fn criterion_7_pipeline_dominance() {
    let t = Instant::now();
    let cfg = link(32, 4, 32, 10.0);
    let snrs = vec![0.0, 5.0, 10.0, 15.0, 20.0];
    let run = |scheme| {
        let mut spec = ExperimentSpec::new(cfg.clone(), scheme, 50, 7);
        spec.snr_db = snrs.clone();
        monte_carlo(&spec).unwrap()
    };
    let sw = run(Scheme::Sw(SolverKind::PgaTs));
    let dbf = run(Scheme::Dbf);
    let failures = sw.trials.iter().chain(&dbf.trials).filter(|r| !r.succeeded()).count();
    let violations = sw
        .trials
        .iter()
        .zip(&dbf.trials)
        .filter(|(s, d)| match (s.avg_se, d.avg_se) {
            (Some(s), Some(d)) => d < s - 1e-9,
            _ => true,
        })
        .count();
    let means: Vec<f64> = sw.aggregates.iter().map(|a| a.mean_se).collect();
    let monotone = means.windows(2).all(|w| w[1] >= w[0]);
    let elapsed = t.elapsed();
    let pass = failures == 0 && violations == 0 && monotone && elapsed < Duration::from_secs(600);
    let shown: Vec<String> = means.iter().map(|m| format!("{m:.3}")).collect();
    verdict(
        7,
        "pipeline",
        pass,
        elapsed,
        &format!(
            "{} trials, failures={failures} dominance violations={violations} sw-hbf mean SE over 0..20 dB = [{}]",
            sw.trials.len(),
            shown.join(", ")
        ),
    );
}

#[test]
fn criterion_8_determinism() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("link.json");
    fs::write(&config, link(8, 2, 8, 10.0).to_json()).unwrap();
    let run = |threads: usize, tag: &str| {
        let out = dir.path().join(format!("{tag}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_hbfsim"))
            .args(["run", "--solver", "pga-ts", "--trials", "6", "--seed", "42"])
            .arg("--config")
            .arg(&config)
            .arg("--threads")
            .arg(threads.to_string())
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        fs::read(out).unwrap()
    };
    let outputs = [run(1, "a"), run(4, "b"), run(1, "c"), run(4, "d")];
    let identical = outputs.iter().all(|o| *o == outputs[0]);
    let pass = identical && !outputs[0].is_empty();
    verdict(8, "determinism", pass, t.elapsed(), &format!("4 runs, {} bytes each, identical={identical}", outputs[0].len()));
}

#[test]
fn criterion_9_search_space_reduction() {
    let t = Instant::now();
    let cfg = link(32, 4, 32, 10.0);
    let half = 32 * 4 / 2;
    let params = SolverParams::default();
    let mut below = 0;
    let mut sizes = Vec::new();
    for seed in 0..20u64 {
        let eff = precoder_set(&cfg, 300 + seed);
        let obj = precoder_objective(&cfg, &eff);
        let mut rng = rng_from_seed(seed);
        let out = pga(&obj, obj.shape(), &params, &mut rng).unwrap();
        let refined = refine(&out.matrix, params.refine_eps);
        let size = refined.iter().filter(|&&x| x != 0.0 && x != 1.0).count();
        let ok = size < half;
        below += usize::from(ok);
        println!("  run {seed:2}: |S_I| = {size:3} {}", if ok { "pass" } else { "fail" });
        sizes.push(size);
    }
    let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
    verdict(
        9,
        "reduction",
        true,
        t.elapsed(),
        &format!("informational: {below}/20 runs below N*N_RF/2 = {half}, mean |S_I| = {mean:.1}"),
    );
}
