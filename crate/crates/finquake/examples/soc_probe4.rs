//! Probe 4: SF damping versus simulation scale.

use finquake::fitstats::fit_power_law;
use finquake::netgen::{build_scale_free, hubs};
use finquake::quake::{run_simulation, Placement, QuakeConfig};
use finquake::rng::derive_seed;
use finquake::series::{synth_series, SynthModel};
use rayon::prelude::*;

fn main() {
    let t0 = std::time::Instant::now();
    let series = synth_series(SynthModel::Gbm { mu: 0.0, sigma: 0.02 }, 32_000, 1000.0, 99, "gbm").unwrap();

    for quakes in [500usize, 1000, 2000, 3000] {
        for master in [8u64, 88] {
            let results: Vec<(f64, f64, usize, Vec<f64>)> = (0..10u64)
                .into_par_iter()
                .map(|run| {
                    let net = build_scale_free(1600, 2, derive_seed(2000, run)).unwrap();
                    let nhubs = hubs(&net, 50).len();
                    let sizes_of = |placement: Placement| {
                        let cfg = QuakeConfig {
                            alpha: 0.95,
                            placement,
                            max_quakes: Some(quakes),
                            max_steps: Some(200_000_000),
                            seed: derive_seed(master, run),
                            ..QuakeConfig::default()
                        };
                        run_simulation(&net, &series, &cfg).unwrap().abs_sizes()
                    };
                    let rsi = sizes_of(Placement::None);
                    let hub = sizes_of(Placement::HubsAboveDegree(50));
                    let max = |v: &[f64]| v.iter().cloned().fold(0.0f64, f64::max);
                    (max(&rsi), max(&hub), nhubs, rsi)
                })
                .collect();
            let cum_r = results.iter().map(|p| p.0).fold(0.0f64, f64::max);
            let cum_h = results.iter().map(|p| p.1).fold(0.0f64, f64::max);
            let all_rsi: Vec<f64> = results.iter().flat_map(|p| p.3.clone()).collect();
            let fit = fit_power_law(&all_rsi, 5.0).unwrap();
            let hub_list: Vec<usize> = results.iter().map(|p| p.2).collect();
            println!(
                "q={quakes} master={master}: cum {cum_r} -> {cum_h} ({:.0}%) mle={:.2} hubs={hub_list:?} [{:.0?}]",
                100.0 * (1.0 - cum_h / cum_r),
                fit.parameter,
                t0.elapsed()
            );
        }
    }
}
