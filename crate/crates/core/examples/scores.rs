//! Scratch selection-score dump (not part of the deliverable surface).

use selfplay_lab::config::ExperimentConfig;
use selfplay_lab::engine::{Engine, EngineEvent};
use selfplay_lab::seed_pool::ExploitMode;

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "empirical".into());
    let mut cfg = ExperimentConfig::default();
    cfg.seed = 0;
    cfg.world.seed = 0;
    for kv in std::env::args().skip(2) {
        let (k, v) = kv.split_once('=').expect("key=value");
        cfg.set(k, v).expect("valid override");
    }
    match mode.as_str() {
        "root_only" => cfg.root_only = true,
        "full" => {}
        m => cfg.ucb.exploit_mode = ExploitMode::from_key(m).unwrap(),
    }
    let mut eng = Engine::new(cfg).unwrap();
    let mut depth_hist = [0usize; 8];
    let mut m_hist = [0usize; 9];
    let (mut rq_acc, mut wq_acc, mut wq_steps) = (0.0f64, 0.0f64, 0usize);
    for step in 0..600 {
        let m = eng.run_iteration().unwrap();
        for ev in &eng.events {
            if let EngineEvent::Verified { passes, .. } = ev {
                m_hist[(*passes).min(8)] += 1;
            }
        }
        rq_acc += m.reward_mean_q;
        if m.w_q > 0.0 {
            wq_acc += m.w_q;
            wq_steps += 1;
        }
        if (step + 1) % 50 == 0 {
            println!(
                "         m-hist(last50)={m_hist:?} rq50={:.4} wq-steps={}/50 wq-mean={:.2}",
                rq_acc / 50.0,
                wq_steps,
                if wq_steps > 0 { wq_acc / wq_steps as f64 } else { 0.0 }
            );
            m_hist = [0; 9];
            rq_acc = 0.0;
            wq_acc = 0.0;
            wq_steps = 0;
        }
        if (step + 1) % 50 == 0 {
            println!(
                "step {:3} qv={:.2} sigma={:.3} gs={:.2} ws={:.2} wq={:.2} abil={:.2} proxy={:.2}",
                step + 1,
                m.q_valid_rate,
                eng.proposer.format_pass_prob(),
                m.grad_norm_s,
                m.w_s,
                m.w_q,
                m.solver_ability,
                m.solver_pass_proxy,
            );
            println!(
                "         rq={:.3} gq={:.3} adm={} pool={}",
                m.reward_mean_q, m.grad_norm_q, m.new_admissions, m.pool_size
            );
        }
        for ev in &eng.events {
            if let EngineEvent::Selected(id) = ev {
                if let Ok(node) = eng.pool.node(*id) {
                    depth_hist[node.depth.min(7)] += 1;
                }
            }
        }
        if [99, 299, 499].contains(&step) {
            let ability = eng.solver.ability;
            println!("== step {} ability={ability:.3} picks-by-depth(last100)={depth_hist:?}", step + 1);
            depth_hist = [0; 8];
            // Per-depth aggregates over the pool.
            for d in 0..4usize {
                let mut n = 0usize;
                let (mut pass, mut sn, mut ex, mut visits, mut ratchet) =
                    (0.0, 0.0, 0.0, 0.0, 0.0);
                for id in eng.pool.node_ids() {
                    let node = eng.pool.node(id).unwrap();
                    if node.depth != d {
                        continue;
                    }
                    let st = eng.pool.stats(id).unwrap();
                    n += 1;
                    pass += node.pass_rate;
                    sn += if st.n > 0.0 { st.s / st.n } else { -1.0 };
                    ex += eng.pool.exploit_value(id, ability).unwrap();
                    visits += st.n;
                    ratchet += st.ratchet;
                }
                if n > 0 {
                    let k = n as f64;
                    println!(
                        "  d{d} n={n} pass={:.2} s/n={:.2} exploit={:.2} visits={:.1} ratchet={:.2}",
                        pass / k,
                        sn / k,
                        ex / k,
                        visits / k,
                        ratchet / k
                    );
                }
            }
        } else if depth_hist.iter().sum::<usize>() > 800 {
            depth_hist = [0; 8];
        }
    }
}
