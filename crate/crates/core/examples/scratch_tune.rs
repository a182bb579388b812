// Temporary tuning harness; not part of the deliverable.
use std::time::Instant;

use mlab::dqn::{evaluate_policy, train_dqn, DqnConfig, Policy};
use mlab::seeding::mix;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("sweep");
    match which {
        "sweep" => sweep(),
        "victims" => victims(),
        "imitate" => imitate_sweep(),
        other => eprintln!("unknown: {other}"),
    }
}

fn imitate_sweep() {
    use mlab::dqfd::{collect_demonstrations, dqfd_train, greedy_agreement, DqfdConfig};
    use mlab::pipeline::{victim_dqn_config, ExperimentConfig};
    use mlab::seeding::derive_seed;
    use rayon::prelude::*;

    let cfg = ExperimentConfig::paper_defaults("unused".into());
    // Train the roster victims exactly as acceptance does.
    let victims: Vec<(String, mlab::Network)> = cfg
        .victims
        .par_iter()
        .map(|v| {
            let (net, _) = mlab::dqn::train_dqn(&victim_dqn_config(&cfg, v)).unwrap();
            (v.id.clone(), net)
        })
        .collect();

    let cell_seed = |id: &str, demos: usize, trend: u64| -> u64 {
        derive_seed(7, &["accept-cell", id, &demos.to_string(), &trend.to_string()])
    };

    // (victim idx, demos, trend, lr, batch, alpha, arch)
    let mut jobs: Vec<(usize, usize, u64, f64, usize, f64, Vec<usize>)> = Vec::new();
    for (lr, batch, alpha, arch) in [
        (1e-3, 64usize, 0.4, vec![4usize, 128, 64, 2]),
        (1e-3, 64, 0.4, vec![4, 128, 128, 2]),
        (1e-3, 64, 0.4, vec![4, 128, 2]),
        (2e-3, 64, 0.4, vec![4, 64, 64, 2]),
        (2e-3, 64, 0.4, vec![4, 128, 64, 2]),
        (1e-3, 64, 0.7, vec![4, 64, 64, 2]),
        (1e-3, 64, 0.7, vec![4, 128, 64, 2]),
        (2e-3, 128, 0.4, vec![4, 128, 64, 2]),
    ] {
        for v in [2usize, 0] {
            jobs.push((v, 5000, 0, lr, batch, alpha, arch.clone()));
        }
    }
    jobs.par_iter().for_each(|(v, demos, trend, lr, batch, alpha, arch)| {
        let (id, net) = &victims[*v];
        let seed = cell_seed(id, *demos, *trend);
        let policy = Policy::Greedy(net.clone());
        let set = collect_demonstrations(&policy, *demos, derive_seed(seed, &["demos"]));
        let (train_set, holdout) = set.split_by_episode(0.2, derive_seed(seed, &["split"]));
        let mut dqfd = DqfdConfig::table_defaults(arch.clone(), derive_seed(seed, &["dqfd"]));
        dqfd.spec.seed = mix(dqfd.seed, 0xD);
        dqfd.learning_rate = *lr;
        dqfd.batch_size = *batch;
        dqfd.alpha = *alpha;
        dqfd.interaction_steps = 0;
        let start = Instant::now();
        let (q, _) = dqfd_train(&train_set, &dqfd).unwrap();
        let agreement = greedy_agreement(&q, holdout.transitions());
        println!(
            "{id} lr {lr} batch {batch} alpha {alpha} arch {arch:?}: agreement {agreement:.3} ({:.0}s)",
            start.elapsed().as_secs_f64()
        );
    });
}

fn base(arch: Vec<usize>, seed: u64) -> DqnConfig {
    let mut cfg = DqnConfig::cartpole(arch, mix(12345, seed));
    cfg.spec.seed = mix(cfg.seed, 0x11);
    cfg
}

fn run(tag: &str, cfg: &DqnConfig) {
    let start = Instant::now();
    let (net, curve) = train_dqn(cfg).unwrap();
    let train_time = start.elapsed().as_secs_f64();
    let stats = evaluate_policy(&Policy::Greedy(net), 100, 999);
    println!(
        "{tag}: mean {:.1} min {:.0} episodes {} train {:.1}s",
        stats.mean,
        stats.min,
        curve.records.len(),
        train_time,
    );
}

fn sweep() {
    use mlab::seeding::derive_seed;
    use rayon::prelude::*;
    // Exact pipeline derivation: master seed 7, stage "train-target", per-
    // victim roster seed.
    let mut jobs = Vec::new();
    for (id, arch) in [
        ("dqn-a", vec![4usize, 64, 64, 2]),
        ("dqn-b", vec![4, 32, 32, 2]),
        ("dqn-c", vec![4, 128, 2]),
    ] {
        for roster_seed in [101u64, 202, 303, 404, 505, 606, 707, 808] {
            jobs.push((id, arch.clone(), roster_seed));
        }
    }
    jobs.par_iter().for_each(|(id, arch, roster_seed)| {
        let stage_seed = derive_seed(7, &["train-target", id]);
        let mut cfg = DqnConfig::cartpole(arch.clone(), mix(stage_seed, *roster_seed));
        cfg.spec.seed = mix(cfg.seed, 0x11);
        let start = Instant::now();
        let (net, curve) = train_dqn(&cfg).unwrap();
        let train_time = start.elapsed().as_secs_f64();
        let stats = evaluate_policy(&Policy::Greedy(net), 100, 999);
        println!(
            "{id} {arch:?} roster {roster_seed}: mean {:.1} min {:.0} episodes {} train {:.1}s",
            stats.mean,
            stats.min,
            curve.records.len(),
            train_time,
        );
    });
}

fn victims() {
    for (arch, seed) in [
        (vec![4usize, 64, 64, 2], 101u64),
        (vec![4, 32, 32, 2], 202),
        (vec![4, 128, 2], 303),
    ] {
        let cfg = base(arch.clone(), seed);
        run(&format!("arch {arch:?} seed {seed}"), &cfg);
    }
}
