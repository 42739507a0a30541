//! Text formats: sweep tables (CSV with a commented header), a JSON
//! metadata sidecar, per-point `p(n)` dumps and density-matrix dumps.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so equal
//! inputs produce byte-identical files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use lasing_core::oracle::{Liouvillian, SteadyStateDensityMatrix};

use crate::error::{Error, Result};
use crate::sweep::{DistributionData, Engine, Row, SweepResult, SweepSpec, SweptVariable};
use crate::VERSION;

pub const COLUMNS: [&str; 12] = [
    "swept_value",
    "n_a",
    "n_sigma",
    "intensity",
    "g2",
    "g3",
    "g4",
    "jump",
    "beta",
    "engine",
    "n_max",
    "converged",
];

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:e}")
    }
}

fn header(w: &mut impl Write, spec: &SweepSpec) -> io::Result<()> {
    let p = &spec.params;
    writeln!(w, "# lasing {VERSION}")?;
    writeln!(w, "# g = {}", num(p.g))?;
    writeln!(w, "# gamma_a = {}", num(p.gamma_a))?;
    writeln!(w, "# gamma_sigma = {}", num(p.gamma_sigma))?;
    writeln!(w, "# pump = {}", num(p.pump))?;
    writeln!(w, "# mode = {}", if spec.universal { "universal" } else { "full" })?;
    let swept = match spec.variable {
        SweptVariable::Pump => "pump",
        SweptVariable::GammaSigma => "gamma_sigma",
    };
    writeln!(w, "# swept = {swept} / gamma_a")?;
    let g = &spec.grid;
    writeln!(w, "# grid = {:?} {} {} {}", g.spacing, num(g.min), num(g.max), g.count)?;
    writeln!(w, "# engine = {}", spec.engine.as_str())?;
    match spec.n_max {
        Some(n) => writeln!(w, "# truncation = fixed {n}")?,
        None => writeln!(w, "# truncation = auto")?,
    }
    writeln!(w, "# tail_tol = {}", num(spec.tail_tol))?;
    writeln!(w, "# ceiling = {}", spec.ceiling)
}

/// Writes the sweep table. Columns past `converged` are `g5…` when higher
/// orders were requested, then the engine discrepancies for `--engine both`.
pub fn write_csv(w: &mut impl Write, result: &SweepResult) -> io::Result<()> {
    let spec = &result.spec;
    header(w, spec)?;
    let mut cols: Vec<String> = COLUMNS.iter().map(|c| c.to_string()).collect();
    cols.extend((5..=spec.max_order).map(|k| format!("g{k}")));
    if spec.engine == Engine::Both {
        cols.push("n_a_rel_diff".into());
        cols.push("g2_abs_diff".into());
    }
    writeln!(w, "{}", cols.join(","))?;
    for row in &result.rows {
        let mut line = row_line(row, spec.max_order);
        if spec.engine == Engine::Both {
            let d = row.discrepancy;
            line.push(',');
            line.push_str(&d.map_or("nan".into(), |d| num(d.n_a_rel)));
            line.push(',');
            line.push_str(&d.map_or("nan".into(), |d| num(d.g2_abs)));
        }
        writeln!(w, "{line}")?;
    }
    for row in result.rows.iter().filter(|r| r.error.is_some()) {
        writeln!(w, "# row {}: {}", row.index, row.error.as_deref().unwrap_or_default())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    spec: &'a SweepSpec,
    columns: Vec<&'static str>,
    rows: Vec<RowMeta<'a>>,
}

#[derive(Serialize)]
struct RowMeta<'a> {
    index: usize,
    swept_value: f64,
    n_max: usize,
    converged: bool,
    precision_bits: Option<usize>,
    residual: Option<f64>,
    max_abs_delta: Option<f64>,
    notes: &'a [String],
    error: Option<&'a str>,
}

pub fn write_sidecar(w: &mut impl Write, result: &SweepResult) -> Result<()> {
    let rows = result
        .rows
        .iter()
        .map(|r| RowMeta {
            index: r.index,
            swept_value: r.swept_value,
            n_max: r.n_max,
            converged: r.converged,
            precision_bits: r.precision_bits,
            residual: r.residual,
            max_abs_delta: r.distribution.as_ref().map(|d| d.max_abs_delta),
            notes: &r.notes,
            error: r.error.as_deref(),
        })
        .collect();
    let sidecar = Sidecar { tool: "lasing", version: VERSION, spec: &result.spec, columns: COLUMNS.to_vec(), rows };
    serde_json::to_writer_pretty(&mut *w, &sidecar)?;
    writeln!(w).map_err(|e| Error::io("sidecar", e))
}

/// `n,p_n,poisson_n,delta_n` table for one parameter point.
pub fn write_distribution(w: &mut impl Write, swept_value: f64, d: &DistributionData) -> io::Result<()> {
    writeln!(w, "# swept_value = {}", num(swept_value))?;
    writeln!(w, "# source = {}", d.source)?;
    writeln!(w, "# max_abs_delta = {}", num(d.max_abs_delta))?;
    writeln!(w, "n,p_n,poisson_n,delta_n")?;
    for (n, ((p, q), delta)) in d.p.iter().zip(&d.poisson).zip(&d.delta).enumerate() {
        writeln!(w, "{n},{},{},{}", num(*p), num(*q), num(*delta))?;
    }
    Ok(())
}

/// Density matrix as `row col re im`, one nonzero element per line, in the
/// emitter-major basis `index = s·(n_max+1) + n` with `g = 0`, `e = 1`.
pub fn write_rho(w: &mut impl Write, rho: &SteadyStateDensityMatrix) -> io::Result<()> {
    writeln!(w, "# lasing {VERSION} density matrix")?;
    writeln!(w, "# n_max = {}", rho.n_max())?;
    writeln!(w, "# dim = {}", rho.dim())?;
    writeln!(w, "# residual = {}", num(rho.residual()))?;
    writeln!(w, "# row col re im")?;
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            let z = rho.entry(i, j);
            if z.re != 0.0 || z.im != 0.0 {
                writeln!(w, "{i} {j} {} {}", num(z.re), num(z.im))?;
            }
        }
    }
    Ok(())
}

/// Liouvillian nonzeros as `row col re im` on column-stacked `vec(ρ)`.
pub fn write_liouvillian(w: &mut impl Write, l: &Liouvillian) -> io::Result<()> {
    writeln!(w, "# lasing {VERSION} Liouvillian")?;
    writeln!(w, "# size = {}", l.size())?;
    writeln!(w, "# row col re im")?;
    for (row, col, v) in l.triplets() {
        writeln!(w, "{row} {col} {} {}", num(v.re), num(v.im))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<io::BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    let f = fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    Ok(io::BufWriter::new(f))
}

/// Writes `<stem>.csv`, `<stem>.json` and, when distributions were
/// requested, `<stem>_pn/point_NNNN.csv`. Returns the paths written.
pub fn write_sweep_files(stem: &Path, result: &SweepResult) -> Result<Vec<PathBuf>> {
    let csv = stem.with_extension("csv");
    let json = stem.with_extension("json");
    let mut written = Vec::new();

    let mut w = create(&csv)?;
    write_csv(&mut w, result).and_then(|_| w.flush()).map_err(|e| Error::io(csv.display().to_string(), e))?;
    written.push(csv);

    let mut w = create(&json)?;
    write_sidecar(&mut w, result)?;
    w.flush().map_err(|e| Error::io(json.display().to_string(), e))?;
    written.push(json);

    if result.spec.distributions {
        let name = stem.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let dir = stem.with_file_name(format!("{name}_pn"));
        for row in &result.rows {
            let Some(d) = &row.distribution else { continue };
            let path = dir.join(format!("point_{:04}.csv", row.index));
            let mut w = create(&path)?;
            write_distribution(&mut w, row.swept_value, d)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// CSV row for a single point, without the header block.
pub fn row_line(row: &Row, max_order: usize) -> String {
    let g = |k| row.g(k).map_or("nan".to_string(), num);
    let mut fields = vec![
        num(row.swept_value),
        num(row.n_a),
        num(row.n_sigma),
        num(row.intensity),
        g(2),
        g(3),
        g(4),
        num(row.jump),
        num(row.beta),
        row.engine.as_str().to_string(),
        row.n_max.to_string(),
        row.converged.to_string(),
    ];
    fields.extend((5..=max_order).map(g));
    fields.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{run_sweep, Grid};
    use lasing_core::SystemParams;

    fn small() -> SweepResult {
        let p = SystemParams::new(1.0, 0.01, 0.01, 0.0).unwrap();
        let mut s = SweepSpec::new(p, SweptVariable::Pump, Grid::log(0.1, 10.0, 3));
        s.distributions = true;
        run_sweep(&s).unwrap()
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &small()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines[0], COLUMNS.join(","));
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 12));
        assert!(lines[1].ends_with(",recurrence,32,true"), "{}", lines[1]);
    }

    #[test]
    fn distribution_dump_layout() {
        let r = small();
        let d = r.rows[0].distribution.as_ref().unwrap();
        let mut buf = Vec::new();
        write_distribution(&mut buf, r.rows[0].swept_value, d).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], "n,p_n,poisson_n,delta_n");
        assert_eq!(body.len(), d.p.len() + 1);
        assert!(body[1].starts_with("0,"));
    }

    #[test]
    fn sidecar_is_json() {
        let mut buf = Vec::new();
        write_sidecar(&mut buf, &small()).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["tool"], "lasing");
        assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    }
}
