//! Timing harness: median-of-repetitions wall clock per (kind, strategy, mesh
//! size), CSV output with a speedup column against `OptV2`, and log-log
//! complexity fits.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use crate::assembly::{assemble, Coefficients, MatrixKind, Strategy, WeightField};
use crate::elements::ElasticParams;
use crate::error::{invalid, Error, Result};
use crate::mesh::{unit_square, Mesh};

/// Header of the CSV table. The last column repeats `median_seconds` at full precision.
pub const CSV_COLUMNS: [&str; 8] =
    ["kind", "strategy", "nq", "nme", "n_df", "median_seconds", "speedup_vs_reference", "median_seconds_full"];

/// One cell of the benchmark table. `seconds` is `None` when the cell was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub kind: MatrixKind,
    pub strategy: Strategy,
    pub nq: usize,
    pub nme: usize,
    pub n_df: usize,
    pub seconds: Option<f64>,
    pub repetitions: usize,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub kinds: Vec<MatrixKind>,
    pub strategies: Vec<Strategy>,
    /// Unit-square subdivisions, strictly ascending.
    pub square_sizes: Vec<usize>,
    pub repetitions: usize,
    /// Longest single assembly allowed per cell; larger cells are skipped.
    pub budget: Duration,
    pub lambda: f64,
    pub mu: f64,
    pub weight: String,
    /// Triangles are put in a seeded random order, as an unstructured mesher
    /// would number them. `None` keeps the row-by-row numbering.
    pub shuffle_seed: Option<u64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            kinds: MatrixKind::ALL.to_vec(),
            strategies: Strategy::ALL.to_vec(),
            square_sizes: vec![32, 64, 128, 256, 512],
            repetitions: 5,
            budget: Duration::from_secs(60),
            lambda: 1.0,
            mu: 1.0,
            weight: "quadratic".into(),
            shuffle_seed: None,
        }
    }
}

impl BenchConfig {
    fn validate(&self) -> Result<()> {
        if self.square_sizes.is_empty() || self.kinds.is_empty() || self.strategies.is_empty() {
            return invalid("benchmark needs at least one kind, strategy and size");
        }
        if self.square_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("sizes must be strictly ascending, got {:?}", self.square_sizes));
        }
        if self.repetitions < 3 {
            return invalid(format!("at least 3 repetitions are required, got {}", self.repetitions));
        }
        Ok(())
    }
}

/// Benchmark mesh: the `n × n` unit square, optionally with shuffled triangles.
pub fn bench_mesh(n: usize, shuffle_seed: Option<u64>) -> Result<Mesh> {
    let m = unit_square(n)?;
    Ok(match shuffle_seed {
        Some(seed) => m.shuffled_triangles(seed),
        None => m,
    })
}

/// Wall-clock seconds of one assembly, result included in the timed region.
pub fn time_assembly(mesh: &Mesh, kind: MatrixKind, strategy: Strategy, coef: &Coefficients) -> Result<f64> {
    let start = Instant::now();
    let m = assemble(mesh, kind, strategy, coef)?;
    let t = start.elapsed().as_secs_f64();
    drop(m);
    Ok(t)
}

/// Median of a nonempty sample (mean of the two middle values for even sizes).
pub fn median(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return invalid("median of an empty sample");
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let h = s.len() / 2;
    Ok(if s.len() % 2 == 1 { s[h] } else { 0.5 * (s[h - 1] + s[h]) })
}

/// Growth exponent used to predict the next cell from the previous one.
fn expected_exponent(strategy: Strategy) -> f64 {
    match strategy {
        Strategy::Classical | Strategy::OptV0 => 2.0,
        Strategy::OptV1 | Strategy::OptV2 => 1.2,
    }
}

/// Runs every cell of `config` sequentially, calling `progress` after each one.
///
/// Per cell: one discarded warm-up run, then `repetitions` timed runs. A cell is
/// skipped without running when the previous size predicts a single run above
/// the budget, or when its warm-up exceeds the budget; all larger sizes of the
/// same (kind, strategy) are then skipped too.
pub fn run_bench(config: &BenchConfig, mut progress: impl FnMut(&BenchRecord)) -> Result<Vec<BenchRecord>> {
    config.validate()?;
    let weight = WeightField::from_name(&config.weight)?;
    let coef = Coefficients { weight: Some(&weight), elastic: Some(ElasticParams::new(config.lambda, config.mu)?) };
    let budget = config.budget.as_secs_f64();

    // last measured (nq, seconds) per pair, or None once it started skipping
    let mut last: HashMap<(MatrixKind, Strategy), Option<(usize, f64)>> = HashMap::new();
    let mut records = Vec::new();
    for &n in &config.square_sizes {
        let mesh = bench_mesh(n, config.shuffle_seed)?;
        for &kind in &config.kinds {
            for &strategy in &config.strategies {
                let prev = last.entry((kind, strategy)).or_insert(Some((0, 0.0)));
                let predicted_over = match *prev {
                    None => true,
                    Some((nq0, t0)) if nq0 > 0 => {
                        t0 * (mesh.nq() as f64 / nq0 as f64).powf(expected_exponent(strategy)) > budget
                    }
                    Some(_) => false,
                };
                let mut seconds = None;
                if !predicted_over && time_assembly(&mesh, kind, strategy, &coef)? <= budget {
                    let runs = (0..config.repetitions)
                        .map(|_| time_assembly(&mesh, kind, strategy, &coef))
                        .collect::<Result<Vec<_>>>()?;
                    seconds = Some(median(&runs)?);
                }
                *prev = seconds.map(|t| (mesh.nq(), t));
                let rec = BenchRecord {
                    kind,
                    strategy,
                    nq: mesh.nq(),
                    nme: mesh.nme(),
                    n_df: kind.n_df(mesh.nq()),
                    seconds,
                    repetitions: config.repetitions,
                };
                progress(&rec);
                records.push(rec);
            }
        }
    }
    Ok(records)
}

/// `t(OptV2) / t` for the same kind and size, when both were measured.
pub fn speedup(records: &[BenchRecord], rec: &BenchRecord) -> Option<f64> {
    let t = rec.seconds?;
    let reference = records
        .iter()
        .find(|r| r.kind == rec.kind && r.nq == rec.nq && r.strategy == Strategy::OptV2)?
        .seconds?;
    Some(reference / t)
}

/// `#`-prefixed header lines describing the machine and build.
pub fn default_metadata() -> Vec<String> {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| s.lines().find(|l| l.starts_with("model name")).map(|l| l.split(':').nth(1).unwrap_or("").trim().to_string()))
        .unwrap_or_else(|| "unknown cpu".into());
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    vec![
        format!("machine: {cpu}, {} {}, {cores} cores available", std::env::consts::OS, std::env::consts::ARCH),
        "threads: 1".into(),
        format!("version: femasm {}", env!("CARGO_PKG_VERSION")),
    ]
}

/// Writes the metadata lines and the table. Output depends only on the arguments.
pub fn write_csv<W: Write>(records: &[BenchRecord], metadata: &[String], out: W) -> Result<()> {
    let mut out = out;
    for line in metadata {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        let (secs, full) = match r.seconds {
            Some(t) => (format!("{t:.3}"), format!("{t:.6e}")),
            None => ("skipped".into(), String::new()),
        };
        let sp = speedup(records, r).map(|s| format!("{s:.2}")).unwrap_or_default();
        w.write_record([
            r.kind.name().to_string(),
            r.strategy.name().to_string(),
            r.nq.to_string(),
            r.nme.to_string(),
            r.n_df.to_string(),
            secs,
            sp,
            full,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(records: &[BenchRecord], metadata: &[String], path: impl AsRef<Path>) -> Result<()> {
    write_csv(records, metadata, BufWriter::new(File::create(path)?))
}

/// Reads a table written by [`write_csv`]. Repetition counts are not stored and read back as 0.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let headers = rd.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| col(name).ok_or_else(|| Error::InvalidArgument(format!("CSV lacks column `{name}`")));
    let (ck, cs, cq, ce, cd, cm) =
        (need("kind")?, need("strategy")?, need("nq")?, need("nme")?, need("n_df")?, need("median_seconds")?);
    let cf = col("median_seconds_full");

    let int = |s: &str| s.parse::<usize>().map_err(|e| Error::InvalidArgument(format!("bad integer `{s}`: {e}")));
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row?;
        let text = cf.map(|c| &row[c]).filter(|s| !s.is_empty()).unwrap_or(&row[cm]);
        let seconds = match text {
            "skipped" | "" => None,
            s => Some(s.parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad time `{s}`: {e}")))?),
        };
        records.push(BenchRecord {
            kind: row[ck].parse()?,
            strategy: row[cs].parse()?,
            nq: int(&row[cq])?,
            nme: int(&row[ce])?,
            n_df: int(&row[cd])?,
            seconds,
            repetitions: 0,
        });
    }
    Ok(records)
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    read_csv(File::open(path)?)
}

/// Least-squares slope of `log(time)` against `log(nq)`.
///
/// Skipped records are ignored; at least 4 measured records spanning 1.5
/// decades in `nq` are required.
pub fn fit_loglog_slope(records: &[BenchRecord]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.seconds.map(|t| (r.nq as f64, t)))
        .filter(|&(_, t)| t > 0.0)
        .map(|(n, t)| (n.ln(), t.ln()))
        .collect();
    if pts.len() < 4 {
        return invalid(format!("slope fit needs at least 4 timed records, got {}", pts.len()));
    }
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let decades = (hi - lo) / std::f64::consts::LN_10;
    if decades < 1.5 {
        return invalid(format!("records span only {decades:.2} decades in nq, at least 1.5 needed"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Slope per (kind, strategy) in first-appearance order; `Err` where the fit is impossible.
pub fn slopes(records: &[BenchRecord]) -> Vec<(MatrixKind, Strategy, Result<f64>)> {
    let mut keys: Vec<(MatrixKind, Strategy)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.kind, r.strategy)) {
            keys.push((r.kind, r.strategy));
        }
    }
    keys.into_iter()
        .map(|(k, s)| {
            let group: Vec<BenchRecord> =
                records.iter().filter(|r| r.kind == k && r.strategy == s).cloned().collect();
            (k, s, fit_loglog_slope(&group))
        })
        .collect()
}
