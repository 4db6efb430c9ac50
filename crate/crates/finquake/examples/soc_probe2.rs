//! Calibration probe: quake counts, comparison cutoffs, wealth ordering.

use finquake::fitstats::{compare_models, fit_power_law};
use finquake::netgen::{build_scale_free, build_small_world};
use finquake::quake::{run_simulation, Placement, QuakeConfig};
use finquake::rng::derive_seed;
use finquake::series::{synth_series, SynthModel};
use rayon::prelude::*;

fn main() {
    let t0 = std::time::Instant::now();
    let series = synth_series(SynthModel::Gbm { mu: 0.0, sigma: 0.02 }, 25_100, 1000.0, 99, "gbm").unwrap();

    let quakes = 20_000usize;
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
                    max_steps: Some(100_000_000),
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
        print!("SW {name} q={quakes}: max>=160 in {over160}/10, max<80 in {under80}/10, cum_max={}",
            sizes.iter().cloned().fold(0.0, f64::max));
        for x_min in [1.0, 5.0, 10.0] {
            let cmp = compare_models(&sizes, x_min).unwrap();
            let fit = fit_power_law(&sizes, x_min).unwrap();
            print!(" | x{x_min}: {} llr={:.0} mle={:.2}", cmp.preferred, cmp.log_likelihood_ratio, fit.parameter);
        }
        println!(" [{:.0?}]", t0.elapsed());
    }

    // SF hubs damping at higher quake counts
    for quakes in [3000usize, 20_000] {
        let collect = |placement: Placement| -> Vec<f64> {
            (0..10u64)
                .into_par_iter()
                .map(|run| {
                    let net = build_scale_free(1600, 2, derive_seed(2000, run)).unwrap();
                    let cfg = QuakeConfig {
                        alpha: 0.95,
                        placement,
                        max_quakes: Some(quakes),
                        max_steps: Some(100_000_000),
                        seed: derive_seed(8, run),
                        ..QuakeConfig::default()
                    };
                    run_simulation(&net, &series, &cfg).unwrap().abs_sizes()
                })
                .reduce(Vec::new, |mut a, b| { a.extend(b); a })
        };
        let rsi = collect(Placement::None);
        let hub = collect(Placement::HubsAboveDegree(50));
        let max_rsi = rsi.iter().cloned().fold(0.0, f64::max);
        let max_hub = hub.iter().cloned().fold(0.0, f64::max);
        let fit = fit_power_law(&rsi, 5.0).unwrap();
        println!(
            "SF q={quakes}: rsi_max={max_rsi} hub_max={max_hub} reduction={:.0}% mle={:.2} [{:.0?}]",
            100.0 * (1.0 - max_hub / max_rsi),
            fit.parameter,
            t0.elapsed()
        );
    }

    // wealth ordering vs quake count and master seed
    for quakes in [3000usize, 5000, 8000] {
        for master in [10u64, 11, 12] {
            let per_run: Vec<(Vec<f64>, Vec<bool>)> = (0..10u64)
                .into_par_iter()
                .map(|run| {
                    let net = build_small_world(40, 0.02, derive_seed(4000 + master, run)).unwrap();
                    let cfg = QuakeConfig {
                        alpha: 0.84,
                        placement: Placement::UniformFraction(0.10),
                        max_quakes: Some(quakes),
                        max_steps: Some(100_000_000),
                        seed: derive_seed(master, run),
                        ..QuakeConfig::default()
                    };
                    let out = run_simulation(&net, &series, &cfg).unwrap();
                    (
                        out.ledger.accounts().iter().map(|a| a.capital).collect(),
                        out.random_mask(),
                    )
                })
                .collect();
            let mut all = Vec::new();
            let mut rnd = Vec::new();
            for (caps, mask) in per_run {
                for (c, r) in caps.into_iter().zip(mask) {
                    if r { rnd.push(c); }
                    all.push(c);
                }
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let (all_mean, rnd_mean) = (mean(&all), mean(&rnd));
            let all_min = all.iter().cloned().fold(f64::INFINITY, f64::min);
            let all_max = all.iter().cloned().fold(0.0f64, f64::max);
            let rnd_min = rnd.iter().cloned().fold(f64::INFINITY, f64::min);
            let rnd_max = rnd.iter().cloned().fold(0.0f64, f64::max);
            let tail = fit_power_law(&all, 1000.0).unwrap();
            println!(
                "wealth q={quakes} master={master}: all={all_mean:.0} rnd={rnd_mean:.0} ord_ok={} range_ok={} tail={:.2} n={} [{:.0?}]",
                rnd_mean >= all_mean,
                all_min < rnd_min && rnd_max < all_max,
                tail.parameter,
                tail.n_tail,
                t0.elapsed()
            );
        }
    }
}
