//! The two replicated factorial experiments and their result tables.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::SweepError;
use crate::kernel::derive_seed;
use crate::model::{run_replication, DepartmentConfig, RunMetrics, StaffingPlan};
use crate::stats::Welford;
use crate::stochastic::DecisionProb;

/// Staff headcount held constant across the cashier sweep.
pub const CASHIER_SWEEP_HEADCOUNT: u32 = 10;
pub const DEFAULT_REPLICATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    CashierSweep,
    EmpowermentSweep,
}

impl Experiment {
    /// Name used on the command line and in result files.
    pub fn slug(self) -> &'static str {
        match self {
            Experiment::CashierSweep => "cashiers",
            Experiment::EmpowermentSweep => "empowerment",
        }
    }

    pub fn from_slug(s: &str) -> Option<Self> {
        match s {
            "cashiers" => Some(Experiment::CashierSweep),
            "empowerment" => Some(Experiment::EmpowermentSweep),
            _ => None,
        }
    }

    pub fn default_levels(self) -> Vec<f64> {
        match self {
            Experiment::CashierSweep => vec![1.0, 2.0, 3.0, 4.0, 5.0],
            Experiment::EmpowermentSweep => vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDesign {
    pub experiment: Experiment,
    pub levels: Vec<f64>,
    pub replications: usize,
    pub base_seed: u64,
}

impl ExperimentDesign {
    pub fn new(experiment: Experiment, replications: usize, base_seed: u64) -> Self {
        Self {
            experiment,
            levels: experiment.default_levels(),
            replications,
            base_seed,
        }
    }

    pub fn cashier_sweep(replications: usize, base_seed: u64) -> Self {
        Self::new(Experiment::CashierSweep, replications, base_seed)
    }

    pub fn empowerment_sweep(replications: usize, base_seed: u64) -> Self {
        Self::new(Experiment::EmpowermentSweep, replications, base_seed)
    }

    /// Seed of replication `rep` in cell (`department`, level `level_index`).
    pub fn cell_seed(&self, department: &str, level_index: usize, rep: usize) -> u64 {
        derive_seed(
            self.base_seed,
            &[
                self.experiment.slug().as_bytes(),
                department.as_bytes(),
                &(level_index as u64).to_le_bytes(),
                &(rep as u64).to_le_bytes(),
            ],
        )
    }

    fn validate(&self, departments: &[&str]) -> Result<(), SweepError> {
        if self.replications == 0 {
            return Err(SweepError::Design("replications must be at least 1".into()));
        }
        if self.levels.is_empty() {
            return Err(SweepError::Design("no factor levels".into()));
        }
        if departments.is_empty() {
            return Err(SweepError::Design("no departments".into()));
        }
        let mut names = HashSet::new();
        if let Some(d) = departments.iter().find(|d| !names.insert(**d)) {
            return Err(SweepError::Design(format!("department {d} listed twice")));
        }
        let mut seeds = HashSet::new();
        for d in departments {
            for l in 0..self.levels.len() {
                for r in 0..self.replications {
                    if !seeds.insert(self.cell_seed(d, l, r)) {
                        return Err(SweepError::Design(format!(
                            "seed collision at ({d}, level {l}, rep {r}); choose another base seed"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Renders a factor level the way it appears in result files.
pub fn level_label(level: f64) -> String {
    format!("{level}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: Experiment,
    pub department: String,
    pub level: f64,
    pub replication: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub design: ExperimentDesign,
    pub departments: Vec<String>,
    /// Ordered by department, level, replication.
    pub rows: Vec<ResultRow>,
}

pub const ID_COLUMNS: [&str; 5] = ["experiment", "department", "level", "replication", "seed"];

impl ResultTable {
    pub fn header() -> Vec<&'static str> {
        ID_COLUMNS
            .iter()
            .chain(RunMetrics::FIELDS.iter())
            .copied()
            .collect()
    }

    /// Writes the table as CSV with full-precision values.
    pub fn write_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(Self::header())?;
        for row in &self.rows {
            let mut record = vec![
                row.experiment.slug().to_string(),
                row.department.clone(),
                level_label(row.level),
                row.replication.to_string(),
                row.seed.to_string(),
            ];
            for field in RunMetrics::FIELDS {
                let value = row.metrics.get(field).expect("listed field");
                record.push(value.map(|v| format!("{v}")).unwrap_or_default());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    pub fn rows_in_cell<'a>(
        &'a self,
        department: &'a str,
        level: f64,
    ) -> impl Iterator<Item = &'a ResultRow> {
        self.rows
            .iter()
            .filter(move |r| r.department == department && r.level == level)
    }
}

/// Cashier sweep at the default headcount.
pub fn run_cashier_sweep(
    configs: &[DepartmentConfig],
    design: &ExperimentDesign,
) -> Result<ResultTable, SweepError> {
    run_cashier_sweep_with_headcount(configs, design, CASHIER_SWEEP_HEADCOUNT)
}

/// Cashier sweep: `level` cashiers, the rest of `headcount` filled by the
/// one-expert, one-manager rule.
pub fn run_cashier_sweep_with_headcount(
    configs: &[DepartmentConfig],
    design: &ExperimentDesign,
    headcount: u32,
) -> Result<ResultTable, SweepError> {
    if design.experiment != Experiment::CashierSweep {
        return Err(SweepError::Design(format!(
            "{} design passed to the cashier sweep",
            design.experiment
        )));
    }
    let mut plans = Vec::with_capacity(design.levels.len());
    for &level in &design.levels {
        if level < 0.0 || level.fract() != 0.0 {
            return Err(SweepError::Design(format!(
                "cashier level {level} is not a count"
            )));
        }
        let plan = StaffingPlan::with_cashiers(level as u32, headcount).ok_or_else(|| {
            SweepError::Design(format!(
                "{level} cashiers leave no room for an expert and a manager in {headcount} staff"
            ))
        })?;
        plans.push(plan);
    }
    run_sweep(configs, design, |config, level_index| {
        (config.clone(), plans[level_index])
    })
}

/// Empowerment sweep at the fixed 3/5/1/1 staffing.
pub fn run_empowerment_sweep(
    configs: &[DepartmentConfig],
    design: &ExperimentDesign,
) -> Result<ResultTable, SweepError> {
    if design.experiment != Experiment::EmpowermentSweep {
        return Err(SweepError::Design(format!(
            "{} design passed to the empowerment sweep",
            design.experiment
        )));
    }
    let mut probs = Vec::with_capacity(design.levels.len());
    for &level in &design.levels {
        probs.push(
            DecisionProb::new(level)
                .map_err(|e| SweepError::Design(format!("empowerment level {level}: {e}")))?,
        );
    }
    let plan = StaffingPlan::empowerment_baseline();
    run_sweep(configs, design, |config, level_index| {
        let mut config = config.clone();
        config.empowerment.p_empowered = probs[level_index];
        (config, plan)
    })
}

fn run_sweep(
    configs: &[DepartmentConfig],
    design: &ExperimentDesign,
    cell: impl Fn(&DepartmentConfig, usize) -> (DepartmentConfig, StaffingPlan) + Sync,
) -> Result<ResultTable, SweepError> {
    let departments: Vec<&str> = configs.iter().map(|c| c.department.as_str()).collect();
    design.validate(&departments)?;

    let mut cells = Vec::new();
    for config in configs {
        for level_index in 0..design.levels.len() {
            cells.push((config, level_index, cell(config, level_index)));
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..design.replications).map(move |r| (c, r)))
        .collect();
    // collect keeps job order whatever the completion order
    let results: Vec<Result<ResultRow, SweepError>> = jobs
        .par_iter()
        .map(|&(c, rep)| {
            let (base, level_index, (config, plan)) = &cells[c];
            let level = design.levels[*level_index];
            let seed = design.cell_seed(&base.department, *level_index, rep);
            let metrics =
                run_replication(config, plan, seed).map_err(|source| SweepError::Replication {
                    department: base.department.clone(),
                    level: level_label(level),
                    replication: rep,
                    seed,
                    source: Box::new(source),
                })?;
            Ok(ResultRow {
                experiment: design.experiment,
                department: base.department.clone(),
                level,
                replication: rep,
                seed,
                metrics,
            })
        })
        .collect();
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ResultTable {
        design: design.clone(),
        departments: departments.iter().map(|d| d.to_string()).collect(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SummaryError {
    #[error("unknown metric {metric:?}; available: {}", RunMetrics::FIELDS.join(", "))]
    UnknownMetric { metric: String },
    #[error("no replications in cell ({department}, level {level})")]
    EmptyCell { department: String, level: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub department: String,
    pub level: f64,
    pub n: u64,
    /// Absent when the metric is undefined in every replication.
    pub mean: Option<f64>,
    /// Sample standard deviation; absent below two values.
    pub sd: Option<f64>,
}

impl CellSummary {
    /// "mean / sd" at 2 d.p., or 4 d.p. for utilizations.
    pub fn display(&self, metric: &str) -> String {
        let digits = if metric.ends_with("_utilization") {
            4
        } else {
            2
        };
        let fmt = |v: Option<f64>| match v {
            Some(v) => format!("{v:.digits$}"),
            None => "n/a".to_string(),
        };
        format!("{} / {}", fmt(self.mean), fmt(self.sd))
    }
}

/// Per-cell running summary of one metric, fed row by row.
#[derive(Debug, Clone)]
pub struct SummaryAccumulator {
    metric: String,
    departments: Vec<String>,
    levels: Vec<f64>,
    cells: Vec<(u64, Welford)>,
}

impl SummaryAccumulator {
    pub fn new(departments: &[String], levels: &[f64], metric: &str) -> Result<Self, SummaryError> {
        if RunMetrics::default().get(metric).is_none() {
            return Err(SummaryError::UnknownMetric {
                metric: metric.to_string(),
            });
        }
        Ok(Self {
            metric: metric.to_string(),
            departments: departments.to_vec(),
            levels: levels.to_vec(),
            cells: vec![(0, Welford::new()); departments.len() * levels.len()],
        })
    }

    pub fn push(&mut self, row: &ResultRow) {
        let d = self.departments.iter().position(|d| *d == row.department);
        let l = self.levels.iter().position(|l| *l == row.level);
        if let (Some(d), Some(l)) = (d, l) {
            let cell = &mut self.cells[d * self.levels.len() + l];
            cell.0 += 1;
            if let Some(Some(v)) = row.metrics.get(&self.metric) {
                cell.1.push(v);
            }
        }
    }

    pub fn finish(self) -> Result<Vec<CellSummary>, SummaryError> {
        let mut out = Vec::with_capacity(self.cells.len());
        for (d, department) in self.departments.iter().enumerate() {
            for (l, &level) in self.levels.iter().enumerate() {
                let (n, w) = self.cells[d * self.levels.len() + l];
                if n == 0 {
                    return Err(SummaryError::EmptyCell {
                        department: department.clone(),
                        level: level_label(level),
                    });
                }
                out.push(CellSummary {
                    department: department.clone(),
                    level,
                    n,
                    mean: w.mean(),
                    sd: w.sd(),
                });
            }
        }
        Ok(out)
    }
}

/// Mean and sample standard deviation of `metric` in every cell.
pub fn summarize(table: &ResultTable, metric: &str) -> Result<Vec<CellSummary>, SummaryError> {
    let mut acc = SummaryAccumulator::new(&table.departments, &table.design.levels, metric)?;
    table.rows.iter().for_each(|r| acc.push(r));
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Horizon;

    fn short(mut c: DepartmentConfig) -> DepartmentConfig {
        c.horizon = Horizon::new(2, c.horizon.trading_day_minutes()).unwrap();
        c
    }

    fn configs() -> Vec<DepartmentConfig> {
        vec![
            short(DepartmentConfig::shipped_atv()),
            short(DepartmentConfig::shipped_ww()),
        ]
    }

    fn row(department: &str, level: f64, rep: usize, transactions: u64) -> ResultRow {
        ResultRow {
            experiment: Experiment::CashierSweep,
            department: department.into(),
            level,
            replication: rep,
            seed: 0,
            metrics: RunMetrics {
                transactions,
                ..Default::default()
            },
        }
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let d = ExperimentDesign::cashier_sweep(20, 1);
        d.validate(&["A&TV", "WW"]).unwrap();
        assert_eq!(d.cell_seed("WW", 2, 3), d.cell_seed("WW", 2, 3));
        assert_ne!(d.cell_seed("WW", 2, 3), d.cell_seed("A&TV", 2, 3));
        // adding a level leaves existing cells untouched
        let mut wider = d.clone();
        wider.levels.push(6.0);
        assert_eq!(wider.cell_seed("WW", 2, 3), d.cell_seed("WW", 2, 3));
    }

    #[test]
    fn one_replication_sweeps_have_ten_rows() {
        let t = run_cashier_sweep(&configs(), &ExperimentDesign::cashier_sweep(1, 7)).unwrap();
        assert_eq!(t.rows.len(), 10);
        let e =
            run_empowerment_sweep(&configs(), &ExperimentDesign::empowerment_sweep(1, 7)).unwrap();
        assert_eq!(e.rows.len(), 10);
        let order: Vec<(String, f64)> = e
            .rows
            .iter()
            .map(|r| (r.department.clone(), r.level))
            .collect();
        assert_eq!(order[0], ("A&TV".to_string(), 0.0));
        assert_eq!(order[9], ("WW".to_string(), 1.0));
    }

    #[test]
    fn table_independent_of_thread_count() {
        let design = ExperimentDesign::cashier_sweep(3, 11);
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let wide = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = serial
            .install(|| run_cashier_sweep(&configs(), &design))
            .unwrap();
        let b = wide
            .install(|| run_cashier_sweep(&configs(), &design))
            .unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
    }

    #[test]
    fn bad_designs_rejected() {
        let mut d = ExperimentDesign::cashier_sweep(1, 1);
        d.levels = vec![9.0];
        assert!(matches!(
            run_cashier_sweep(&configs(), &d),
            Err(SweepError::Design(_))
        ));
        let d = ExperimentDesign::cashier_sweep(0, 1);
        assert!(matches!(
            run_cashier_sweep(&configs(), &d),
            Err(SweepError::Design(_))
        ));
        let d = ExperimentDesign::empowerment_sweep(1, 1);
        assert!(run_cashier_sweep(&configs(), &d).is_err());
    }

    #[test]
    fn csv_layout() {
        let t =
            run_empowerment_sweep(&configs(), &ExperimentDesign::empowerment_sweep(1, 3)).unwrap();
        let text = t.to_csv_string();
        let mut lines = text.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("experiment,department,level,replication,seed,transactions,satisfied_customers,overall_satisfaction,refund_satisfaction,cashier_utilization"));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 11);
        assert!(text
            .lines()
            .nth(2)
            .unwrap()
            .starts_with("empowerment,A&TV,0.25,0,"));
    }

    #[test]
    fn summary_examples() {
        let table = ResultTable {
            design: ExperimentDesign {
                experiment: Experiment::CashierSweep,
                levels: vec![1.0, 2.0],
                replications: 3,
                base_seed: 0,
            },
            departments: vec!["X".into()],
            rows: vec![
                row("X", 1.0, 0, 2),
                row("X", 1.0, 1, 4),
                row("X", 2.0, 0, 5),
                row("X", 2.0, 1, 5),
                row("X", 2.0, 2, 5),
            ],
        };
        let s = summarize(&table, "transactions").unwrap();
        assert_eq!(s[0].display("transactions"), "3.00 / 1.41");
        assert_eq!(s[1].display("transactions"), "5.00 / 0.00");
        let u = summarize(&table, "cashier_utilization").unwrap();
        assert_eq!(u[0].display("cashier_utilization"), "n/a / n/a");
        assert!(matches!(
            summarize(&table, "profit"),
            Err(SummaryError::UnknownMetric { .. })
        ));
        let mut gap = table.clone();
        gap.rows.retain(|r| r.level == 1.0);
        assert_eq!(
            summarize(&gap, "transactions"),
            Err(SummaryError::EmptyCell {
                department: "X".into(),
                level: "2".into()
            })
        );
        let mut single = table;
        single.rows.truncate(1);
        single.design.levels.truncate(1);
        let s = summarize(&single, "transactions").unwrap();
        assert_eq!((s[0].mean, s[0].sd), (Some(2.0), None));
    }

    #[test]
    fn streamed_summary_matches_recomputed() {
        let t = run_cashier_sweep(&configs(), &ExperimentDesign::cashier_sweep(4, 5)).unwrap();
        for metric in RunMetrics::FIELDS {
            let mut acc =
                SummaryAccumulator::new(&t.departments, &t.design.levels, metric).unwrap();
            for r in &t.rows {
                acc.push(r);
            }
            let streamed = acc.finish().unwrap();
            assert_eq!(streamed, summarize(&t, metric).unwrap());
            for s in &streamed {
                let values: Vec<f64> = t
                    .rows_in_cell(&s.department, s.level)
                    .filter_map(|r| r.metrics.get(metric).unwrap())
                    .collect();
                if let Some(mean) = s.mean {
                    let direct = values.iter().sum::<f64>() / values.len() as f64;
                    assert!((mean - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
                }
            }
        }
    }
}
