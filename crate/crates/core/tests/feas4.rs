// Temporary feasibility probe for the multi-parameter ensemble criterion.
// Deleted before release.

use rydnoise::dataset::{generate_multi_param_dataset, Dataset, MultiParamRanges};
use rydnoise::learn::{cross_validate, predict_ensemble, CvProtocol, MlpConfig, ModelKind};
use rydnoise::sim::SimOptions;
use rydnoise::{AtomRegister, PhysicsConfig, PulseSequence};
use std::path::Path;
use std::time::Instant;

fn multi_set() -> Dataset {
    let dir = Path::new("/root/scratch/multi");
    if dir.join("s6.csv").exists() {
        return Dataset::read_files(dir, "s6").unwrap();
    }
    let t0 = Instant::now();
    let d = generate_multi_param_dataset(
        "s6",
        &AtomRegister::builtin("s6").unwrap(),
        &PulseSequence::gaussian_sweep_500ns(),
        2000,
        200,
        &MultiParamRanges::default(),
        20260810 ^ 0x3241,
        &SimOptions::default(),
        &PhysicsConfig::default(),
    )
    .unwrap();
    println!("multi gen: {:?}", t0.elapsed());
    d.write_files(dir, "s6").unwrap();
    d
}

#[test]
#[ignore]
fn multi_probe() {
    let dataset = multi_set();
    let t0 = Instant::now();
    let report = cross_validate(
        &dataset,
        ModelKind::Mlp,
        &MlpConfig::multi_param(),
        20,
        20260810 ^ 0x9,
        CvProtocol::TrainValTest,
    )
    .unwrap();
    println!("cv: {:?}", t0.elapsed());
    println!("labels: {:?}", report.label_names);
    println!("mean mae: {:?}", report.mean_mae);
    println!("std  mae: {:?}", report.std_mae);

    let full = MultiParamRanges::default();
    let shrink = |(lo, hi): (f64, f64)| {
        let w = hi - lo;
        (lo + 0.1 * w, hi - 0.1 * w)
    };
    let eval_ranges = MultiParamRanges {
        sigma_r: shrink(full.sigma_r),
        waist: shrink(full.waist),
        temperature: shrink(full.temperature),
        eps: shrink(full.eps),
        eps_prime: shrink(full.eps_prime),
    };
    let eval = generate_multi_param_dataset(
        "s6",
        &AtomRegister::builtin("s6").unwrap(),
        &PulseSequence::gaussian_sweep_500ns(),
        24,
        200,
        &eval_ranges,
        20260810 ^ 0xE7A1,
        &SimOptions::default(),
        &PhysicsConfig::default(),
    )
    .unwrap();
    let ranges: Vec<f64> = full.as_list().iter().map(|(_, lo, hi)| hi - lo).collect();
    let mut max_rel_std = vec![0.0f64; 5];
    let mut violations = 0;
    let mut margin_min = f64::INFINITY;
    for sample in &eval.samples {
        let stats = predict_ensemble(&report.models, &sample.features).unwrap();
        for j in 0..5 {
            let (mean, std) = stats[j];
            max_rel_std[j] = max_rel_std[j].max(std / ranges[j]);
            let dev = (mean - sample.labels[j]).abs();
            let bound = 3.0 * std + 0.02 * ranges[j];
            margin_min = margin_min.min(bound - dev);
            if dev >= bound {
                violations += 1;
                println!(
                    "  violation {}: pred {mean:.4} ± {std:.4} vs label {:.4} (bound {bound:.4})",
                    report.label_names[j], sample.labels[j]
                );
            }
        }
    }
    println!("max std/range: {max_rel_std:?}");
    println!("violations: {violations}/120, min margin {margin_min:.4}");
}
