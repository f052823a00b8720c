//! CSV and plain-text renderings of run, comparison and sweep results.
//!
//! Floats are written with Rust's shortest round-trip formatting, which is
//! locale-independent and identical on every platform.

use std::io::{self, Write};

use crate::simulator::{ComparisonReport, RunReport};
use crate::sweep::{PointStats, SweepRow};

pub const SWEEP_HEADER: [&str; 7] = [
    "axis_value",
    "seed",
    "ebcd_mean_mj",
    "dijkstra_mean_mj",
    "savings_percent",
    "power_capped",
    "unreachable",
];

pub const FRAME_HEADER: [&str; 11] = [
    "algorithm",
    "frame_index",
    "total_energy_mj",
    "e_mr_mj",
    "e_rr_mj",
    "e_rb_mj",
    "slots_used",
    "slots_demanded",
    "bits_served",
    "carried_over_bits",
    "power_capped_links",
];

fn stats_fields(s: &PointStats) -> [String; 5] {
    [
        s.ebcd_mean_mj.to_string(),
        s.dijkstra_mean_mj.to_string(),
        s.savings_percent.to_string(),
        s.power_capped.to_string(),
        s.unreachable.to_string(),
    ]
}

const ERROR_FIELDS: [&str; 5] = ["error"; 5];

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        match row {
            SweepRow::Data { axis_value, seed, stats } => {
                let mut rec = vec![axis_value.to_string(), seed.to_string()];
                rec.extend(stats_fields(stats));
                w.write_record(&rec)?;
            }
            SweepRow::Error { axis_value, seed, .. } => {
                let mut rec = vec![axis_value.to_string(), seed.to_string()];
                rec.extend(ERROR_FIELDS.iter().map(|s| s.to_string()));
                w.write_record(&rec)?;
            }
            SweepRow::Mean { axis_value, stats } => {
                let mut rec = vec![axis_value.to_string(), "mean".to_string()];
                match stats {
                    Some(s) => rec.extend(stats_fields(s)),
                    None => rec.extend(ERROR_FIELDS.iter().map(|s| s.to_string())),
                }
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// One summary row for a comparison: the sweep columns minus `axis_value`.
pub fn write_compare_csv<W: Write>(seed: u64, r: &ComparisonReport, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&SWEEP_HEADER[1..])?;
    let capped = r.ebcd.power_capped_links + r.baseline.power_capped_links;
    w.write_record([
        seed.to_string(),
        r.ebcd.mean_energy_per_frame_mj.to_string(),
        r.baseline.mean_energy_per_frame_mj.to_string(),
        r.savings_percent.to_string(),
        capped.to_string(),
        r.ebcd.unreachable_count.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Per-frame rows of one or more runs.
pub fn write_frames_csv<W: Write>(runs: &[&RunReport], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FRAME_HEADER)?;
    for run in runs {
        for f in &run.frames {
            let e = &f.per_class_energy;
            w.write_record([
                run.algorithm.name().to_string(),
                f.frame_index.to_string(),
                f.total_energy_mj.to_string(),
                e.e_mr_mj.to_string(),
                e.e_rr_mj.to_string(),
                e.e_rb_mj.to_string(),
                f.slots_used.to_string(),
                f.slots_demanded.to_string(),
                f.bits_served.to_string(),
                f.carried_over_bits.to_string(),
                f.power_capped_links.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Human-readable table of per-point mean energies and savings.
pub fn summary_table(label: &str, rows: &[(String, f64, f64, f64)]) -> String {
    let mut s = format!(
        "{:<12} {:>14} {:>14} {:>10}\n",
        label, "ebcd_mJ", "dijkstra_mJ", "savings%"
    );
    for (name, e, d, sav) in rows {
        s.push_str(&format!("{name:<12} {e:>14.6} {d:>14.6} {sav:>10.2}\n"));
    }
    s
}

/// Summary of a sweep's mean rows.
pub fn sweep_summary(axis: &str, rows: &[SweepRow]) -> String {
    let means: Vec<(String, f64, f64, f64)> = rows
        .iter()
        .filter_map(|r| match r {
            SweepRow::Mean { axis_value, stats: Some(s) } => {
                Some((axis_value.to_string(), s.ebcd_mean_mj, s.dijkstra_mean_mj, s.savings_percent))
            }
            _ => None,
        })
        .collect();
    summary_table(axis, &means)
}
