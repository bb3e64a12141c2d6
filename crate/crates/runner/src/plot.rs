//! Whitespace-delimited `.dat` files for external plotting tools.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{RunnerError, RunnerResult};
use crate::results::{ResultRecord, Table};

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".to_string()
    }
}

/// Two columns, or three when `err` is given.
fn pairs(header: &str, x: &[f64], y: &[f64], err: Option<&[f64]>) -> String {
    let mut out = format!("# {header}\n");
    for k in 0..x.len() {
        let _ = match err {
            Some(e) => writeln!(out, "{} {} {}", fmt(x[k]), fmt(y[k]), fmt(e[k])),
            None => writeln!(out, "{} {}", fmt(x[k]), fmt(y[k])),
        };
    }
    out
}

fn column(t: &Table, name: &str) -> RunnerResult<Vec<f64>> {
    t.column(name)
        .ok_or_else(|| RunnerError::Results(format!("table `{}` has no column `{name}`", t.name)))
}

fn table<'a>(record: &'a ResultRecord, name: &str) -> RunnerResult<&'a Table> {
    record
        .table(name)
        .ok_or_else(|| RunnerError::Results(format!("{} record has no `{name}` table", record.experiment)))
}

/// Renders the plot files for `record` as `(file name, contents)` pairs.
pub fn plot_files(record: &ResultRecord) -> RunnerResult<Vec<(String, String)>> {
    if record.tables.iter().all(|t| t.rows.is_empty()) {
        return Err(RunnerError::Results("record has no tabular series".into()));
    }
    let mut files = Vec::new();
    match record.experiment.as_str() {
        "ensemble-vs-micro" => {
            let t = table(record, "samples")?;
            files.push((
                "samples.dat".into(),
                pairs("realization expectation", &column(t, "realization")?, &column(t, "expectation")?, None),
            ));
        }
        "variance-scaling" => {
            let t = table(record, "variance")?;
            let (d, v, e) = (column(t, "dim")?, column(t, "variance")?, column(t, "stderr")?);
            files.push(("variance.dat".into(), pairs("N variance stderr", &d, &v, Some(&e))));
            files.push(("bound.dat".into(), pairs("N bound", &d, &column(t, "bound")?, None)));
            let ln = |xs: &[f64]| xs.iter().map(|x| x.ln()).collect::<Vec<_>>();
            files.push(("loglog.dat".into(), pairs("lnN lnvariance", &ln(&d), &ln(&v), None)));
        }
        "time-average" => {
            let t = table(record, "series")?;
            files.push(("series.dat".into(), pairs("t A_t", &column(t, "t")?, &column(t, "expectation")?, None)));
            let r = table(record, "running_average")?;
            files.push((
                "running_average.dat".into(),
                pairs("T average deviation", &column(r, "t")?, &column(r, "average")?, Some(&column(r, "deviation")?)),
            ));
        }
        "eth-diagnostics" => {
            let t = table(record, "energy_bins")?;
            let e = column(t, "mean_energy")?;
            files.push(("diagonal.dat".into(), pairs("E A(E)", &e, &column(t, "mean_diagonal")?, None)));
            files.push(("canonical.dat".into(), pairs("E canonical", &e, &column(t, "canonical")?, None)));
            let s = table(record, "entropy")?;
            files.push(("entropy.dat".into(), pairs("E S(E)", &column(s, "energy")?, &column(s, "entropy")?, None)));
            let o = table(record, "offdiag_bins")?;
            let (ec, w, ms) = (column(o, "energy_center")?, column(o, "omega_center")?, column(o, "mean_sq")?);
            // one block per energy bin, separated by blank lines
            let mut out = String::from("# omega mean|A_ij|^2\n");
            for k in 0..ec.len() {
                if k == 0 || ec[k] != ec[k - 1] {
                    if k > 0 {
                        out.push_str("\n\n");
                    }
                    let _ = writeln!(out, "# E = {}", fmt(ec[k]));
                }
                let _ = writeln!(out, "{} {}", fmt(w[k]), fmt(ms[k]));
            }
            files.push(("offdiag.dat".into(), out));
        }
        "subsystem-gibbs" => {
            let t = table(record, "trace_distance")?;
            let m = column(t, "m")?;
            files.push((
                "trace_distance.dat".into(),
                pairs("m median mean_stderr", &m, &column(t, "median")?, Some(&column(t, "stderr")?)),
            ));
            files.push(("beta.dat".into(), pairs("m median_beta", &m, &column(t, "median_beta")?, None)));
        }
        other => return Err(RunnerError::Results(format!("unknown experiment `{other}`"))),
    }
    Ok(files)
}

/// Reads `results.json` in `dir` and writes its plot files next to it.
pub fn emit_plot_data(dir: &Path) -> RunnerResult<Vec<PathBuf>> {
    let path = dir.join("results.json");
    let text = std::fs::read_to_string(&path).map_err(|e| RunnerError::io(&path, e))?;
    let record = ResultRecord::from_json(&text)?;
    let mut written = Vec::new();
    for (name, contents) in plot_files(&record)? {
        let p = dir.join(name);
        std::fs::write(&p, contents).map_err(|e| RunnerError::io(&p, e))?;
        written.push(p);
    }
    Ok(written)
}
