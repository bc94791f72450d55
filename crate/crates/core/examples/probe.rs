//! Scratch ablation probe (not part of the deliverable surface).

use selfplay_lab::config::ExperimentConfig;
use selfplay_lab::engine::{detect_collapse, run_experiment, StepMetrics};
use selfplay_lab::seed_pool::ExploitMode;

fn base(seed: u64, steps: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = seed;
    cfg.world.seed = seed;
    cfg.steps = steps;
    for kv in std::env::args().skip(3) {
        let (k, v) = kv.split_once('=').expect("key=value");
        cfg.set(k, v).expect("valid override");
    }
    cfg
}

fn traj(metrics: &[StepMetrics], f: impl Fn(&StepMetrics) -> f64) -> String {
    let n = metrics.len();
    let pts: Vec<String> = (0..=6)
        .map(|i| {
            let hi = ((i + 1) * n / 7).min(n);
            let lo = i * n / 7;
            let mean: f64 =
                metrics[lo..hi].iter().map(&f).sum::<f64>() / (hi - lo).max(1) as f64;
            format!("{mean:.2}")
        })
        .collect();
    pts.join(" ")
}

fn main() {
    let steps: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(600);
    let seeds: u64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(4);
    for seed in 0..seeds {
        println!("== seed {seed} ==");
        for (name, mode, xo) in [
            ("emp-xo  ", ExploitMode::Empirical, 0.5),
            ("emp-noxo", ExploitMode::Empirical, 0.0),
            ("rat-xo  ", ExploitMode::Ratchet, 0.5),
            ("rat-noxo", ExploitMode::Ratchet, 0.0),
        ] {
            let mut cfg = base(seed, steps);
            cfg.set("q_reward_mode", "4p1p").unwrap();
            cfg.ucb.exploit_mode = mode;
            cfg.ucb.crossover_ratio = xo;
            let res = run_experiment(&cfg).unwrap();
            println!(
                "  {name} collapse={:?} qv[{}] ent[{}] rq[{}] d[{}] pool={}",
                detect_collapse(&res.metrics),
                traj(&res.metrics, |m| m.q_valid_rate),
                traj(&res.metrics, |m| m.proposer_entropy),
                traj(&res.metrics, |m| m.reward_mean_q),
                traj(&res.metrics, |m| m.mean_selection_depth),
                res.metrics.last().unwrap().pool_size,
            );
        }
        for (name, fq, fs, ro) in [
            ("full    ", false, false, false),
            ("freeze-q", true, false, false),
            ("freeze-s", false, true, false),
            ("rootonly", false, false, true),
        ] {
            let mut cfg = base(seed, steps);
            cfg.freeze_q = fq;
            cfg.freeze_s = fs;
            cfg.root_only = ro;
            let res = run_experiment(&cfg).unwrap();
            let tail: f64 = res
                .metrics
                .iter()
                .rev()
                .take(20)
                .map(|m| m.solver_pass_proxy)
                .sum::<f64>()
                / 20.0;
            println!(
                "  {name} proxy[{}] tail={tail:.3} ent[{}] gs[{}] adm[{}] qv[{}] pool={}",
                traj(&res.metrics, |m| m.solver_pass_proxy),
                traj(&res.metrics, |m| m.proposer_entropy),
                traj(&res.metrics, |m| m.grad_norm_s),
                traj(&res.metrics, |m| m.new_admissions as f64 * 100.0),
                traj(&res.metrics, |m| m.q_valid_rate),
                res.metrics.last().unwrap().pool_size,
            );
        }
    }
}
