//! Scratch criterion-7 scoreboard (not part of the deliverable surface).

use selfplay_lab::config::ExperimentConfig;
use selfplay_lab::engine::{detect_collapse, run_experiment};
use selfplay_lab::seed_pool::ExploitMode;

fn tail(xs: &[f64], n: usize) -> f64 {
    xs.iter().rev().take(n).sum::<f64>() / n.min(xs.len()) as f64
}

fn main() {
    let n_seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);
    let overrides: Vec<(String, String)> = std::env::args()
        .skip(2)
        .map(|kv| {
            let (k, v) = kv.split_once('=').expect("key=value");
            (k.to_string(), v.to_string())
        })
        .collect();
    let base = |seed: u64| {
        let mut cfg = ExperimentConfig::baseline();
        cfg.seed = seed;
        cfg.world.seed = seed;
        cfg.steps = 600;
        for (k, v) in &overrides {
            cfg.set(k, v).expect("valid override");
        }
        cfg
    };
    let mut wins = [0usize; 6]; // 7a, 7b, 7c(full>fq), 7c(fq>fs), 7d peak, 7d below-full
    for seed in 0..n_seeds {
        let mut onsets = Vec::new();
        for (mode, xo) in [
            (ExploitMode::Empirical, 0.5),
            (ExploitMode::Empirical, 0.0),
            (ExploitMode::Ratchet, 0.5),
            (ExploitMode::Ratchet, 0.0),
        ] {
            let mut cfg = base(seed);
            cfg.set("q_reward_mode", "4p1p").unwrap();
            cfg.ucb.exploit_mode = mode;
            cfg.ucb.crossover_ratio = xo;
            let res = run_experiment(&cfg).unwrap();
            onsets.push(detect_collapse(&res.metrics));
        }
        let a = onsets[0].is_some()
            && onsets[1].is_some()
            && onsets[2].is_none()
            && onsets[3].is_none();
        let b = match (onsets[0], onsets[1]) {
            (Some(x), Some(y)) => x < y,
            (Some(_), None) => true,
            _ => false,
        };
        let mut tails = Vec::new();
        let mut peaks = Vec::new();
        for (fq, fs, ro) in [
            (false, false, false),
            (true, false, false),
            (false, true, false),
            (false, false, true),
        ] {
            let mut cfg = base(seed);
            cfg.freeze_q = fq;
            cfg.freeze_s = fs;
            cfg.root_only = ro;
            let res = run_experiment(&cfg).unwrap();
            let px: Vec<f64> = res.metrics.iter().map(|m| m.solver_pass_proxy).collect();
            let (pk_at, pk) = px
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
                .map(|(i, &v)| (i, v))
                .unwrap();
            tails.push(tail(&px, 30));
            peaks.push((pk_at, pk));
        }
        let c1 = tails[0] > tails[1];
        let c2 = tails[1] > tails[2];
        let d_peak = peaks[3].0 < 570 && peaks[3].1 > tails[3] + 0.02;
        let d_below = tails[3] < tails[0];
        for (i, ok) in [a, b, c1, c2, d_peak, d_below].iter().enumerate() {
            if *ok {
                wins[i] += 1;
            }
        }
        println!(
            "s{seed} a={a} b={b} onsets={onsets:?} full={:.3} fq={:.3} fs={:.3} ro={:.3} ro_pk={:.2}@{} d_pk={d_peak} d_below={d_below}",
            tails[0], tails[1], tails[2], tails[3], peaks[3].1, peaks[3].0
        );
    }
    println!(
        "WINS/{n_seeds}: 7a={} 7b={} 7c_full>fq={} 7c_fq>fs={} 7d_peak={} 7d_below={}",
        wins[0], wins[1], wins[2], wins[3], wins[4], wins[5]
    );
}
