//! Scratch parameter sweep (not part of the deliverable surface).

use selfplay_lab::config::ExperimentConfig;
use selfplay_lab::engine::run_experiment;

fn cfg_with(seed: u64, overrides: &[(&str, &str)]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = seed;
    cfg.world.seed = seed;
    cfg.steps = 600;
    for (k, v) in overrides {
        cfg.set(k, v).expect("valid override");
    }
    cfg
}

fn tail(xs: &[f64], n: usize) -> f64 {
    xs.iter().rev().take(n).sum::<f64>() / n.min(xs.len()) as f64
}

fn main() {
    let seeds: Vec<u64> = vec![0, 1, 2];
    let base: Vec<(&str, &str)> = vec![
        ("world.n_roots", "16"),
        ("world.children_per_spec", "5"),
        ("world.depth", "6"),
        ("world.root_difficulty_min", "0.30"),
        ("world.root_difficulty_max", "0.55"),
        ("world.difficulty_step_mean", "0.10"),
        ("world.difficulty_step_sd", "0.03"),
        ("solver.init_ability", "0.25"),
        ("solver.width", "0.10"),
        ("difficulty_window_delta", "0.40"),
        ("engine.probe_fraction", "0.25"),
        ("opt.eta_s", "0.004"),
        ("opt.eta_q", "0.05"),
        ("opt.weight_decay_s", "0.5"),
        ("opt.weight_decay_q", "0.05"),
        ("proposer.format_break", "0.3"),
        ("zpd_prior_weight", "5.0"),
        ("zpd_sigma", "0.08"),
        ("proposer.format_repair", "0.5"),
        ("proposer.interference", "0.008"),
    ];
    let variants: Vec<(&str, Vec<(&str, &str)>)> = vec![
        ("k.016 wd.5", vec![("proposer.interference", "0.016")]),
        ("k.016 wd.8", vec![("proposer.interference", "0.016"), ("opt.weight_decay_s", "0.8")]),
        ("k.024 wd.5", vec![("proposer.interference", "0.024")]),
        ("k.024 wd.8", vec![("proposer.interference", "0.024"), ("opt.weight_decay_s", "0.8")]),
    ];
    for (vname, extra) in &variants {
        println!("== variant {vname} ==");
        for &seed in &seeds {
            let mut over = base.clone();
            over.extend(extra.iter().copied());
            let mut line = format!("  s{seed}");
            for (tag, fq, fs, ro) in [
                ("full", false, false, false),
                ("ro", false, false, true),
            ] {
                let _ = (fq, fs);
                let mut cfg = cfg_with(seed, &over);
                cfg.freeze_q = fq;
                cfg.freeze_s = fs;
                cfg.root_only = ro;
                let res = run_experiment(&cfg).unwrap();
                let px: Vec<f64> =
                    res.metrics.iter().map(|m| m.solver_pass_proxy).collect();
                let peak_at = px
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap();
                let qv: Vec<f64> = res.metrics.iter().map(|m| m.q_valid_rate).collect();
                line += &format!(
                    " {tag}[t={:.2} pk@{peak_at} qv={:.2}]",
                    tail(&px, 30),
                    tail(&qv, 50)
                );
            }
            println!("{line}");
        }
    }
}
