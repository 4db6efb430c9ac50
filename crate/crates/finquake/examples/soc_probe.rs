//! Scratch probe for the full-scale avalanche regimes.

use finquake::fitstats::{compare_models, fit_power_law};
use finquake::netgen::{build_scale_free, build_small_world};
use finquake::quake::{run_simulation, Placement, QuakeConfig};
use finquake::rng::derive_seed;
use finquake::series::{synth_series, SynthModel};

fn main() {
    let t0 = std::time::Instant::now();
    let series = synth_series(SynthModel::Gbm { mu: 0.0, sigma: 0.02 }, 5000, 1000.0, 99, "gbm").unwrap();

    for (name, placement) in [
        ("rsi-only", Placement::None),
        ("p_rnd=0.05", Placement::UniformFraction(0.05)),
        ("p_rnd=0.10", Placement::UniformFraction(0.10)),
    ] {
        let mut sizes: Vec<f64> = Vec::new();
        let mut maxima = Vec::new();
        let mut steps_total = 0u64;
        for run in 0..10u64 {
            let net = build_small_world(40, 0.02, derive_seed(1000, run)).unwrap();
            let cfg = QuakeConfig {
                alpha: 0.84,
                placement,
                max_quakes: Some(3000),
                max_steps: Some(50_000_000),
                seed: derive_seed(7, run),
                ..QuakeConfig::default()
            };
            let out = run_simulation(&net, &series, &cfg).unwrap();
            steps_total += out.steps;
            let s = out.abs_sizes();
            maxima.push(s.iter().cloned().fold(0.0f64, f64::max));
            sizes.extend(s);
        }
        let max_all = sizes.iter().cloned().fold(0.0f64, f64::max);
        let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
        let fit = fit_power_law(&sizes, 5.0);
        let cmp = compare_models(&sizes, 5.0);
        println!(
            "SW {name}: quakes={} mean_size={mean:.2} max={max_all} per-run maxima={maxima:?}",
            sizes.len()
        );
        println!(
            "   steps_total={steps_total} mle={:?} prefer={:?} llr={:.1} elapsed={:.1?}",
            fit.as_ref().map(|f| f.parameter).ok(),
            cmp.as_ref().map(|c| c.preferred).ok(),
            cmp.as_ref().map(|c| c.log_likelihood_ratio).unwrap_or(f64::NAN),
            t0.elapsed()
        );
    }

    // scale-free, alpha = 0.95
    for (name, placement) in [
        ("sf rsi-only", Placement::None),
        ("sf hubs>50", Placement::HubsAboveDegree(50)),
    ] {
        let mut sizes: Vec<f64> = Vec::new();
        let mut hubcounts = Vec::new();
        for run in 0..10u64 {
            let net = build_scale_free(1600, 2, derive_seed(2000, run)).unwrap();
            hubcounts.push(finquake::netgen::hubs(&net, 50).len());
            let cfg = QuakeConfig {
                alpha: 0.95,
                placement,
                max_quakes: Some(3000),
                max_steps: Some(50_000_000),
                seed: derive_seed(8, run),
                ..QuakeConfig::default()
            };
            let out = run_simulation(&net, &series, &cfg).unwrap();
            sizes.extend(out.abs_sizes());
        }
        let max_all = sizes.iter().cloned().fold(0.0f64, f64::max);
        let fit = fit_power_law(&sizes, 5.0);
        println!(
            "{name}: max={max_all} mle={:?} hubs={hubcounts:?} elapsed={:.1?}",
            fit.as_ref().map(|f| f.parameter).ok(),
            t0.elapsed()
        );
    }

    // alpha sweep + wealth tails
    for alpha in [0.84, 0.40, 0.0] {
        let mut sizes: Vec<f64> = Vec::new();
        let mut capitals: Vec<f64> = Vec::new();
        for run in 0..10u64 {
            let net = build_small_world(40, 0.02, derive_seed(3000, run)).unwrap();
            let cfg = QuakeConfig {
                alpha,
                placement: Placement::None,
                max_quakes: Some(3000),
                max_steps: Some(100_000_000),
                seed: derive_seed(9, run),
                ..QuakeConfig::default()
            };
            let out = run_simulation(&net, &series, &cfg).unwrap();
            sizes.extend(out.abs_sizes());
            capitals.extend(out.ledger.accounts().iter().map(|a| a.capital));
        }
        let max_all = sizes.iter().cloned().fold(0.0f64, f64::max);
        let wealth_cmp = compare_models(&capitals, 1000.0);
        let wealth_fit = fit_power_law(&capitals, 1000.0);
        println!(
            "alpha={alpha}: max={max_all} wealth_mle={:?} wealth_prefer={:?} elapsed={:.1?}",
            wealth_fit.as_ref().map(|f| f.parameter).ok(),
            wealth_cmp.as_ref().map(|c| c.preferred).ok(),
            t0.elapsed()
        );
    }

    // wealth with 10% random traders (criterion 7 shape)
    let mut capitals: Vec<f64> = Vec::new();
    let mut rnd_capitals: Vec<f64> = Vec::new();
    for run in 0..10u64 {
        let net = build_small_world(40, 0.02, derive_seed(4000, run)).unwrap();
        let cfg = QuakeConfig {
            alpha: 0.84,
            placement: Placement::UniformFraction(0.10),
            max_quakes: Some(3000),
            max_steps: Some(50_000_000),
            seed: derive_seed(10, run),
            ..QuakeConfig::default()
        };
        let out = run_simulation(&net, &series, &cfg).unwrap();
        let mask = out.random_mask();
        for (account, is_rnd) in out.ledger.accounts().iter().zip(&mask) {
            capitals.push(account.capital);
            if *is_rnd {
                rnd_capitals.push(account.capital);
            }
        }
    }
    let all_mean = capitals.iter().sum::<f64>() / capitals.len() as f64;
    let rnd_mean = rnd_capitals.iter().sum::<f64>() / rnd_capitals.len() as f64;
    let all_min = capitals.iter().cloned().fold(f64::INFINITY, f64::min);
    let all_max = capitals.iter().cloned().fold(0.0f64, f64::max);
    let rnd_min = rnd_capitals.iter().cloned().fold(f64::INFINITY, f64::min);
    let rnd_max = rnd_capitals.iter().cloned().fold(0.0f64, f64::max);
    let tail_fit = fit_power_law(&capitals, 1000.0);
    println!(
        "wealth p=0.10: all mean={all_mean:.0} range=[{all_min:.1},{all_max:.0}] rnd mean={rnd_mean:.0} range=[{rnd_min:.1},{rnd_max:.0}]"
    );
    println!(
        "   tail mle at 1000: {:?} n_tail={:?} elapsed={:.1?}",
        tail_fit.as_ref().map(|f| f.parameter).ok(),
        tail_fit.as_ref().map(|f| f.n_tail).ok(),
        t0.elapsed()
    );
}
