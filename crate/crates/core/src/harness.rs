//! Monte Carlo sweep over (virtual-cell count, interference distance, CGBR).

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::clustering::{best_bs, build_hierarchy, ClusterHierarchy, VirtualCellPartition};
use crate::config::{PipelineOptions, SweepConfig};
use crate::evaluator::{evaluate_system, RateReport};
use crate::freqalloc::{plan_frequencies, FrequencyPlan};
use crate::intergraph::{build_interference_graph, color_graph, Coloring, InterferenceGraph};
use crate::powalloc::{allocate_powers, CellSolution, PowerAllocation};
use crate::scenario::{generate_realization, NetworkRealization};
use crate::{Error, Result};

/// Everything one pipeline pass produces, kept for inspection and tests.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub partition: VirtualCellPartition,
    pub graph: InterferenceGraph,
    pub coloring: Coloring,
    pub plan: FrequencyPlan,
    pub allocation: PowerAllocation,
    pub cells: Vec<CellSolution>,
    /// Rates with `r_gbr = 0`; use [`RateReport::with_threshold`] for other thresholds.
    pub report: RateReport,
}

/// Runs clustering cut, graph, coloring, frequency plan, power allocation and
/// decoding for one realization at one `(m, gamma_d)`.
///
/// `serving_bs` is the best BS of every user; it depends only on the channel.
pub fn run_pipeline(
    real: &NetworkRealization,
    hierarchy: &ClusterHierarchy,
    serving_bs: &[usize],
    m: usize,
    gamma_d: f64,
    budget: f64,
    options: &PipelineOptions,
) -> Result<PipelineRun> {
    let partition = VirtualCellPartition::from_groups(hierarchy.level(m)?, serving_bs.to_vec())?;
    let counts = partition.users_per_bs();
    let graph = build_interference_graph(&real.bs_positions, &partition, &counts, gamma_d);
    let coloring = color_graph(&graph);
    let plan = plan_frequencies(
        &real.bs_positions,
        &real.user_positions,
        &partition,
        &coloring,
        real.num_bands(),
        gamma_d,
        options.denominator,
    )?;
    let (allocation, cells) = allocate_powers(real, &partition, &plan, budget, &options.solver)?;
    let report = evaluate_system(real, &partition, &allocation, 0.0, gamma_d)?;
    Ok(PipelineRun {
        partition,
        graph,
        coloring,
        plan,
        allocation,
        cells,
        report,
    })
}

/// Per-realization outcome at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSample {
    pub m: usize,
    pub gamma_d: f64,
    /// One count per configured CGBR.
    pub unsatisfied: Vec<usize>,
    pub sum_rate: f64,
}

/// Runs every `(m, gamma_d)` grid point on realization `index`.
pub fn run_realization(config: &SweepConfig, index: u64) -> Result<Vec<GridSample>> {
    let real = generate_realization(&config.scenario, index)?;
    let schedule = config.pipeline.size_schedule(config.scenario.num_bs)?;
    let hierarchy = build_hierarchy(&real.bs_positions, &schedule)?;
    let serving = best_bs(&real, config.pipeline.affiliation);
    let budget = config.scenario.user_power_budget_watts();

    let mut samples = Vec::with_capacity(config.m_values.len() * config.gamma_d_values.len());
    for &m in &config.m_values {
        for &gamma_d in &config.gamma_d_values {
            let run = run_pipeline(&real, &hierarchy, &serving, m, gamma_d, budget, &config.pipeline)
                .map_err(|e| Error::Pipeline {
                    realization: index,
                    m,
                    gamma_d,
                    source: Box::new(e),
                })?;
            samples.push(GridSample {
                m,
                gamma_d,
                unsatisfied: config
                    .cgbr_values
                    .iter()
                    .map(|&r| run.report.count_unsatisfied(r))
                    .collect(),
                sum_rate: run.report.sum_rate,
            });
        }
    }
    Ok(samples)
}

/// Mean and standard error over realizations at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub m: usize,
    pub gamma_d: f64,
    pub cgbr: f64,
    pub mean_unsatisfied: f64,
    pub stderr_unsatisfied: f64,
    pub mean_sum_rate: f64,
    pub stderr_sum_rate: f64,
    pub num_realizations: u64,
}

/// `(mean, standard error)` with the unbiased sample variance; the error is 0 for one sample.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Aggregates per-realization samples (outer index: realization, in order).
pub fn aggregate(config: &SweepConfig, per_realization: &[Vec<GridSample>]) -> Vec<AggregateRow> {
    let n = per_realization.len() as u64;
    let Some(first) = per_realization.first() else {
        return Vec::new();
    };
    let mut rows = Vec::new();
    for (point, sample) in first.iter().enumerate() {
        let sum_rates: Vec<f64> = per_realization.iter().map(|r| r[point].sum_rate).collect();
        let (mean_sum_rate, stderr_sum_rate) = mean_and_stderr(&sum_rates);
        for (ci, &cgbr) in config.cgbr_values.iter().enumerate() {
            let unsat: Vec<f64> = per_realization
                .iter()
                .map(|r| r[point].unsatisfied[ci] as f64)
                .collect();
            let (mean_unsatisfied, stderr_unsatisfied) = mean_and_stderr(&unsat);
            rows.push(AggregateRow {
                m: sample.m,
                gamma_d: sample.gamma_d,
                cgbr,
                mean_unsatisfied,
                stderr_unsatisfied,
                mean_sum_rate,
                stderr_sum_rate,
                num_realizations: n,
            });
        }
    }
    rows
}

/// Runs the whole sweep. Realizations run in parallel on the current rayon
/// pool; results are reduced in realization order, so the output does not
/// depend on the thread count.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<AggregateRow>> {
    config.validate()?;
    let per_realization = (0..config.num_realizations)
        .into_par_iter()
        .map(|i| run_realization(config, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(config, &per_realization))
}

pub const CSV_HEADER: [&str; 8] = [
    "m",
    "gamma_d",
    "cgbr",
    "mean_unsatisfied",
    "stderr_unsatisfied",
    "mean_sum_rate",
    "stderr_sum_rate",
    "n",
];

/// Writes a `# seed=...` comment line, the header and one line per row.
/// Floats use the shortest representation that parses back exactly.
pub fn write_csv<W: Write>(rows: &[AggregateRow], seed: u64, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# seed={seed}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.gamma_d.to_string(),
            r.cgbr.to_string(),
            r.mean_unsatisfied.to_string(),
            r.stderr_unsatisfied.to_string(),
            r.mean_sum_rate.to_string(),
            r.stderr_sum_rate.to_string(),
            r.num_realizations.to_string(),
        ])?;
    }
    w.flush()
}

pub fn emit_csv(rows: &[AggregateRow], seed: u64, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut buf = std::io::BufWriter::new(file);
    write_csv(rows, seed, &mut buf).map_err(io_err)?;
    buf.flush().map_err(io_err)
}

/// Reads rows written by [`write_csv`]. Comment lines are skipped.
pub fn parse_csv(text: &str) -> Result<Vec<AggregateRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::CsvParse(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::CsvParse(format!("unexpected header {:?}", header)));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::CsvParse(e.to_string()))?;
        if record.len() != CSV_HEADER.len() {
            return Err(Error::CsvParse(format!("row {line}: expected {} fields", CSV_HEADER.len())));
        }
        let float = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| Error::CsvParse(format!("row {line}, column {}: {e}", CSV_HEADER[i])))
        };
        let int = |i: usize| -> Result<u64> {
            record[i]
                .parse::<u64>()
                .map_err(|e| Error::CsvParse(format!("row {line}, column {}: {e}", CSV_HEADER[i])))
        };
        rows.push(AggregateRow {
            m: usize::try_from(int(0)?).map_err(|e| Error::CsvParse(e.to_string()))?,
            gamma_d: float(1)?,
            cgbr: float(2)?,
            mean_unsatisfied: float(3)?,
            stderr_unsatisfied: float(4)?,
            mean_sum_rate: float(5)?,
            stderr_sum_rate: float(6)?,
            num_realizations: int(7)?,
        });
    }
    Ok(rows)
}
