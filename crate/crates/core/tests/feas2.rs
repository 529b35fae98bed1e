// Temporary feasibility probe for the scaling-trend criteria. Deleted
// before release.

use rydnoise::dataset::{concatenate, generate_single_param_dataset, Dataset, SingleParamSpec};
use rydnoise::learn::{cross_validate, CvProtocol, MlpConfig, ModelKind};
use rydnoise::sim::SimOptions;
use rydnoise::{AtomRegister, PhysicsConfig, PulseSequence};
use std::path::Path;
use std::time::Instant;

const NAMES: [&str; 5] = ["s2", "s3", "s4a", "s4b", "s5"];

fn desk_sets() -> Vec<(String, Dataset)> {
    let dir = Path::new("/root/scratch/desk");
    if dir.join("s5.csv").exists() {
        return NAMES
            .iter()
            .map(|n| (n.to_string(), Dataset::read_files(dir, n).unwrap()))
            .collect();
    }
    let regs: Vec<(String, AtomRegister)> = NAMES
        .iter()
        .map(|n| (n.to_string(), AtomRegister::builtin(n).unwrap()))
        .collect();
    let pulse = PulseSequence::constant_rabi_660ns();
    let spec = SingleParamSpec {
        n_samples: 2000,
        shots: 200,
        sigma_r_range: (0.0, 0.15),
    };
    let t0 = Instant::now();
    let sets = generate_single_param_dataset(
        &regs,
        &pulse,
        &spec,
        20260810,
        &SimOptions::default(),
        &PhysicsConfig::default(),
    )
    .unwrap();
    println!("generated desk-scale sets in {:?}", t0.elapsed());
    for (id, d) in &sets {
        d.write_files(dir, id).unwrap();
    }
    sets
}

#[test]
#[ignore]
fn trend_probe_desk() {
    let sets = desk_sets();
    let mut cfg_long = MlpConfig::single_param();
    cfg_long.early_stop_patience = 150;
    let cfg_short = MlpConfig::single_param();

    for (id, d) in &sets {
        if id == "s4b" {
            continue;
        }
        let t = Instant::now();
        let mlong =
            cross_validate(d, ModelKind::Mlp, &cfg_long, 20, 7, CvProtocol::TrainVal).unwrap();
        let mshort =
            cross_validate(d, ModelKind::Mlp, &cfg_short, 20, 7, CvProtocol::TrainVal).unwrap();
        let lin =
            cross_validate(d, ModelKind::Linear, &cfg_long, 20, 7, CvProtocol::TrainVal).unwrap();
        println!(
            "{id}: mlp(p150) {:.5} ± {:.5}  mlp(p15) {:.5} ± {:.5}  lin {:.5} ± {:.5}  [{:?}]",
            mlong.mean_mae[0],
            mlong.std_mae[0],
            mshort.mean_mae[0],
            mshort.std_mae[0],
            lin.mean_mae[0],
            lin.std_mae[0],
            t.elapsed()
        );
    }
    let s4a = sets.iter().find(|(id, _)| id == "s4a").unwrap().1.clone();
    let s4b = sets.iter().find(|(id, _)| id == "s4b").unwrap().1.clone();
    let pair = concatenate(&[s4a, s4b]).unwrap();
    let mlp = cross_validate(&pair, ModelKind::Mlp, &cfg_long, 20, 7, CvProtocol::TrainVal).unwrap();
    println!("s4a+s4b: mlp(p150) {:.5} ± {:.5}", mlp.mean_mae[0], mlp.std_mae[0]);
}
