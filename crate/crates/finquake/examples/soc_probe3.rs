//! Probe 3: de-discretized comparisons, SF per-run damping, max-size margins.

use finquake::fitstats::{compare_models, fit_power_law};
use finquake::netgen::{build_scale_free, build_small_world, hubs};
use finquake::quake::{run_simulation, Placement, QuakeConfig};
use finquake::rng::{derive_seed, rng_from_seed, uniform_01};
use finquake::series::{synth_series, SynthModel};
use rayon::prelude::*;

fn jitter(sizes: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    sizes.iter().map(|&s| s + uniform_01(&mut rng)).collect()
}

fn main() {
    let t0 = std::time::Instant::now();
    let series = synth_series(SynthModel::Gbm { mu: 0.0, sigma: 0.02 }, 32_000, 1000.0, 99, "gbm").unwrap();

    // SW: jittered comparisons and max margins at 20k and 30k quakes
    for quakes in [20_000usize, 30_000] {
        for (name, placement) in [
            ("rsi-only ", Placement::None),
            ("p_rnd=.05", Placement::UniformFraction(0.05)),
            ("p_rnd=.10", Placement::UniformFraction(0.10)),
        ] {
            let runs: Vec<Vec<f64>> = (0..10u64)
                .into_par_iter()
                .map(|run| {
                    let net = build_small_world(40, 0.02, derive_seed(1000, run)).unwrap();
                    let cfg = QuakeConfig {
                        alpha: 0.84,
                        placement,
                        max_quakes: Some(quakes),
                        max_steps: Some(200_000_000),
                        seed: derive_seed(7, run),
                        ..QuakeConfig::default()
                    };
                    run_simulation(&net, &series, &cfg).unwrap().abs_sizes()
                })
                .collect();
            let maxima: Vec<f64> = runs.iter().map(|s| s.iter().cloned().fold(0.0, f64::max)).collect();
            let over160 = maxima.iter().filter(|&&m| m >= 160.0).count();
            let under80 = maxima.iter().filter(|&&m| m < 80.0).count();
            let sizes: Vec<f64> = runs.into_iter().flatten().collect();
            let jittered = jitter(&sizes, 555);
            print!(
                "SW {name} q={quakes}: >=160 {over160}/10, <80 {under80}/10, cum_max={}",
                sizes.iter().cloned().fold(0.0, f64::max)
            );
            for x_min in [5.0f64, 4.5] {
                let cmp = compare_models(&jittered, x_min).unwrap();
                let fit = fit_power_law(&jittered, x_min).unwrap();
                print!(
                    " | jit x{x_min}: {} llr={:.0} mle={:.2} n={}",
                    cmp.preferred, cmp.log_likelihood_ratio, fit.parameter, fit.n_tail
                );
            }
            println!(" [{:.0?}]", t0.elapsed());
        }
    }

    // SF: per-run damping detail
    for quakes in [3000usize, 10_000] {
        let pairs: Vec<(f64, f64, usize)> = (0..10u64)
            .into_par_iter()
            .map(|run| {
                let net = build_scale_free(1600, 2, derive_seed(2000, run)).unwrap();
                let nhubs = hubs(&net, 50).len();
                let max_of = |placement: Placement| {
                    let cfg = QuakeConfig {
                        alpha: 0.95,
                        placement,
                        max_quakes: Some(quakes),
                        max_steps: Some(200_000_000),
                        seed: derive_seed(8, run),
                        ..QuakeConfig::default()
                    };
                    run_simulation(&net, &series, &cfg)
                        .unwrap()
                        .abs_sizes()
                        .into_iter()
                        .fold(0.0f64, f64::max)
                };
                (max_of(Placement::None), max_of(Placement::HubsAboveDegree(50)), nhubs)
            })
            .collect();
        println!("SF q={quakes} per-run (rsi_max, hub_max, hubs):");
        for (r, h, n) in &pairs {
            println!("   {r:5.0} {h:5.0} {n} reduction={:.0}%", 100.0 * (1.0 - h / r));
        }
        let cum_r = pairs.iter().map(|p| p.0).fold(0.0f64, f64::max);
        let cum_h = pairs.iter().map(|p| p.1).fold(0.0f64, f64::max);
        let mean_r = pairs.iter().map(|p| p.0).sum::<f64>() / 10.0;
        let mean_h = pairs.iter().map(|p| p.1).sum::<f64>() / 10.0;
        println!(
            "   cum: {cum_r} -> {cum_h} ({:.0}%), mean of maxima: {mean_r:.0} -> {mean_h:.0} ({:.0}%) [{:.0?}]",
            100.0 * (1.0 - cum_h / cum_r),
            100.0 * (1.0 - mean_h / mean_r),
            t0.elapsed()
        );
    }
}
