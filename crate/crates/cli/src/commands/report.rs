//! `report`: plot-ready CSV series and text summaries from CV reports and
//! KL logs.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use crate::commands::learncmd::CvReportFile;
use crate::util::{atomic_write, csv_bytes, fmt_f64, write_manifest, Manifest};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// CV report JSON files (from cross-validate), in plot order.
    #[arg(long, num_args = 1..)]
    pub cv: Vec<PathBuf>,
    /// KL log CSV (from rl-train).
    #[arg(long)]
    pub kl: Option<PathBuf>,
    #[arg(long, default_value = "out/report")]
    pub out: PathBuf,
}

pub fn run(args: &ReportArgs) -> Result<()> {
    if args.cv.is_empty() && args.kl.is_none() {
        anyhow::bail!("nothing to report: pass --cv files and/or --kl log");
    }
    let mut outputs = Vec::new();
    let mut summary = String::new();

    if !args.cv.is_empty() {
        let reports: Vec<CvReportFile> = args
            .cv
            .iter()
            .map(|p| {
                let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_slice(&bytes)
                    .with_context(|| format!("parsing {}", p.display()))
            })
            .collect::<Result<_>>()?;
        let first = &reports[0];
        let mut header = vec![
            "name".to_string(),
            "atoms".to_string(),
            "measurements".to_string(),
        ];
        for l in &first.label_names {
            header.push(format!("mae_mean_{l}"));
            header.push(format!("mae_std_{l}"));
        }
        let mut rows = Vec::new();
        for r in &reports {
            if r.label_names != first.label_names {
                anyhow::bail!("CV reports disagree on label columns");
            }
            let mut row = vec![
                r.registers.join("+"),
                r.atoms_total.to_string(),
                r.measurements.to_string(),
            ];
            for j in 0..r.label_names.len() {
                row.push(fmt_f64(r.mean_mae[j]));
                row.push(fmt_f64(r.std_mae[j]));
            }
            rows.push(row);
            summary.push_str(&format!(
                "{} ({} atoms, {} measurements, {}, k={}):\n",
                r.registers.join("+"),
                r.atoms_total,
                r.measurements,
                r.kind,
                r.k
            ));
            for (j, l) in r.label_names.iter().enumerate() {
                summary.push_str(&format!(
                    "  {l:<12} {:.4} ± {:.4}\n",
                    r.mean_mae[j], r.std_mae[j]
                ));
            }
        }
        atomic_write(&args.out.join("scaling_report.csv"), &csv_bytes(&header, &rows)?)?;
        outputs.push("scaling_report.csv".into());
    }

    if let Some(kl_path) = &args.kl {
        let mut rdr = csv::Reader::from_path(kl_path)
            .with_context(|| format!("reading {}", kl_path.display()))?;
        let headers = rdr.headers()?.clone();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| anyhow::anyhow!("{} lacks column '{name}'", kl_path.display()))
        };
        let (c_ep, c_kl, c_base) = (col("episode")?, col("mean_kl")?, col("baseline")?);
        let mut rows = Vec::new();
        let mut kls: Vec<(usize, f64)> = Vec::new();
        let mut baseline = f64::NAN;
        for rec in rdr.records() {
            let rec = rec?;
            let episode: usize = rec[c_ep].parse()?;
            let kl: Option<f64> = rec[c_kl].parse().ok();
            baseline = rec[c_base].parse()?;
            rows.push(vec![
                episode.to_string(),
                rec[c_kl].to_string(),
                fmt_f64(baseline),
            ]);
            if let Some(k) = kl {
                kls.push((episode, k));
            }
        }
        if rows.is_empty() {
            anyhow::bail!("{} holds no episodes", kl_path.display());
        }
        let header = vec!["episode".to_string(), "mean_kl".to_string(), "baseline".to_string()];
        atomic_write(&args.out.join("kl_report.csv"), &csv_bytes(&header, &rows)?)?;
        outputs.push("kl_report.csv".into());
        let tail = kls.len().saturating_sub(100);
        let final_mean = kls[tail..].iter().map(|(_, k)| k).sum::<f64>() / (kls.len() - tail) as f64;
        summary.push_str(&format!(
            "correction loop: {} episodes, final-100 mean KL {:.6} vs uncorrected baseline {:.6} ({})\n",
            rows.len(),
            final_mean,
            baseline,
            if final_mean < baseline { "below" } else { "above" },
        ));
    }

    atomic_write(&args.out.join("summary.txt"), summary.as_bytes())?;
    outputs.push("summary.txt".into());
    write_manifest(
        &args.out,
        &Manifest {
            command: "report".into(),
            seed: 0,
            config: serde_json::json!({
                "cv": args.cv.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
                "kl": args.kl.as_ref().map(|p| p.display().to_string()),
            }),
            outputs,
        },
    )?;
    Ok(())
}
