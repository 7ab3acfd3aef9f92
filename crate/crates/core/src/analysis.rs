//! Reads a results CSV and reports ANOVA, Levene and Tukey tests for one metric.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::experiments::ID_COLUMNS;
use crate::stats::{
    anova_two_way, levene_test, tukey_hsd, AnovaTable, BalancedTable, LeveneResult, SourceRow,
    StatsError, TukeyPair,
};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("cannot read results: {0}")]
    Csv(#[from] csv::Error),
    #[error("results file has no {0:?} column")]
    MissingColumn(String),
    #[error("unknown metric {metric:?}; available: {}", available.join(", "))]
    UnknownMetric {
        metric: String,
        available: Vec<String>,
    },
    #[error("row {row}: {column} value {value:?} is not a number")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("{0}")]
    Stats(#[from] StatsError),
}

/// One metric laid out as department × level × replication.
#[derive(Debug, Clone)]
pub struct Observations {
    pub metric: String,
    pub departments: Vec<String>,
    pub levels: Vec<String>,
    pub table: BalancedTable,
}

/// Metric columns in a results header.
pub fn available_metrics(header: &csv::StringRecord) -> Vec<String> {
    header
        .iter()
        .filter(|h| !ID_COLUMNS.contains(h))
        .map(str::to_string)
        .collect()
}

pub fn observations_from_csv(
    input: impl Read,
    metric: &str,
) -> Result<Observations, AnalysisError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| AnalysisError::MissingColumn(name.to_string()))
    };
    let dept_col = column("department")?;
    let level_col = column("level")?;
    let metric_col = match header.iter().position(|h| h == metric) {
        Some(i) if !ID_COLUMNS.contains(&metric) => i,
        _ => {
            return Err(AnalysisError::UnknownMetric {
                metric: metric.to_string(),
                available: available_metrics(&header),
            })
        }
    };

    let mut departments: Vec<String> = Vec::new();
    let mut levels: Vec<String> = Vec::new();
    let mut values: Vec<(usize, usize, f64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let dept = &record[dept_col];
        let level = &record[level_col];
        let raw = record[metric_col].trim();
        let value: f64 = raw.parse().map_err(|_| AnalysisError::BadValue {
            row,
            column: metric.to_string(),
            value: raw.to_string(),
        })?;
        let d = index_of(&mut departments, dept);
        let l = index_of(&mut levels, level);
        values.push((d, l, value));
    }
    let mut cells = vec![vec![Vec::new(); levels.len()]; departments.len()];
    for (d, l, v) in values {
        cells[d][l].push(v);
    }
    Ok(Observations {
        metric: metric.to_string(),
        table: BalancedTable::new(&cells).map_err(|e| match e {
            StatsError::Unbalanced(msg) => {
                StatsError::Unbalanced(format!("{msg} (department × level)"))
            }
            other => other,
        })?,
        departments,
        levels,
    })
}

fn index_of(names: &mut Vec<String>, name: &str) -> usize {
    match names.iter().position(|n| n == name) {
        Some(i) => i,
        None => {
            names.push(name.to_string());
            names.len() - 1
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub metric: String,
    pub departments: Vec<String>,
    pub levels: Vec<String>,
    pub n_per_cell: usize,
    pub anova: AnovaTable,
    /// Across all department × level cells.
    pub levene: LeveneResult,
    /// Level marginal means compared pairwise; absent for degenerate tables.
    pub tukey: Option<Vec<TukeyPair>>,
    pub level_means: Vec<f64>,
    pub alpha: f64,
}

pub fn analyze(obs: &Observations, alpha: f64) -> Result<AnalysisReport, AnalysisError> {
    let (a, b, n) = obs.table.shape();
    let anova = anova_two_way(&obs.table)?;
    let groups: Vec<&[f64]> = obs.table.cells().collect();
    let levene = levene_test(&groups)?;
    let level_means: Vec<f64> = (0..b).map(|j| obs.table.b_marginal_mean(j)).collect();
    let tukey = if anova.degenerate {
        None
    } else {
        Some(tukey_hsd(
            &level_means,
            a * n,
            anova.within.ms,
            anova.within.df,
            alpha,
        )?)
    };
    Ok(AnalysisReport {
        metric: obs.metric.clone(),
        departments: obs.departments.clone(),
        levels: obs.levels.clone(),
        n_per_cell: n,
        anova,
        levene,
        tukey,
        level_means,
        alpha,
    })
}

/// "p < .001" below one in a thousand, otherwise four decimals.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "p < .001".to_string()
    } else {
        format!("p = {p:.4}")
    }
}

fn f_line(row: &SourceRow, df_within: f64) -> String {
    match (row.f, row.p) {
        (Some(f), Some(p)) => format!("F({}, {}) = {f:.2}, {}", row.df, df_within, format_p(p)),
        _ => format!(
            "F({}, {}) undefined (no within-cell variance)",
            row.df, df_within
        ),
    }
}

impl AnalysisReport {
    fn terms(&self) -> [(&'static str, &SourceRow); 4] {
        [
            ("department", &self.anova.factor_a),
            ("level", &self.anova.factor_b),
            ("interaction", &self.anova.interaction),
            ("within", &self.anova.within),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let a = &self.anova;
        let _ = writeln!(
            s,
            "Two-way ANOVA on {} ({} departments x {} levels, n = {} per cell)",
            self.metric,
            self.departments.len(),
            self.levels.len(),
            self.n_per_cell
        );
        let _ = writeln!(
            s,
            "{:<12} {:>16} {:>5} {:>16} {:>12} {:>10}",
            "source", "SS", "df", "MS", "F", "p"
        );
        for (name, row) in self.terms() {
            let f = row.f.map_or("-".to_string(), |f| format!("{f:.2}"));
            let p = row.p.map_or("-".to_string(), |p| format!("{p:.4}"));
            let _ = writeln!(
                s,
                "{name:<12} {:>16.2} {:>5} {:>16.2} {f:>12} {p:>10}",
                row.ss, row.df, row.ms
            );
        }
        let _ = writeln!(
            s,
            "{:<12} {:>16.2} {:>5}",
            "total",
            a.ss_total,
            a.factor_a.df + a.factor_b.df + a.interaction.df + a.within.df
        );
        if a.degenerate {
            let _ = writeln!(
                s,
                "degenerate: every cell is constant, F ratios are undefined"
            );
        }
        let _ = writeln!(s);
        for (name, row) in &self.terms()[..3] {
            let _ = writeln!(s, "{name}: {}", f_line(row, a.within.df));
        }
        let l = &self.levene;
        match (l.w, l.p) {
            (Some(w), Some(p)) => {
                let _ = writeln!(
                    s,
                    "Levene: F({}, {}) = {w:.2}, {}",
                    l.df.0,
                    l.df.1,
                    format_p(p)
                );
            }
            _ => {
                let _ = writeln!(s, "Levene: undefined (all deviations are zero)");
            }
        }
        match &self.tukey {
            Some(pairs) => {
                let k = self.levels.len();
                let _ = writeln!(
                    s,
                    "Tukey HSD on level (alpha = {}, k = {k}, n = {} per level):",
                    self.alpha,
                    self.n_per_cell * self.departments.len()
                );
                for p in pairs {
                    let _ = writeln!(
                        s,
                        "  {} vs {}: diff = {:.2}, q = {:.2}, {}{}",
                        self.levels[p.i],
                        self.levels[p.j],
                        p.mean_difference,
                        p.q,
                        format_p(p.p),
                        if p.significant { " *" } else { "" }
                    );
                }
            }
            None => {
                let _ = writeln!(s, "Tukey HSD: skipped (no within-cell variance)");
            }
        }
        s
    }

    /// All test results, one row per term or pair.
    pub fn write_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record([
            "test",
            "term",
            "ss",
            "df1",
            "df2",
            "ms",
            "statistic",
            "p",
            "mean_difference",
            "significant",
        ])?;
        let opt = |v: Option<f64>| v.map(|v| format!("{v}")).unwrap_or_default();
        let df_within = self.anova.within.df;
        for (name, row) in self.terms() {
            let df2 = if name == "within" {
                String::new()
            } else {
                format!("{df_within}")
            };
            w.write_record([
                "anova".to_string(),
                name.to_string(),
                format!("{}", row.ss),
                format!("{}", row.df),
                df2,
                format!("{}", row.ms),
                opt(row.f),
                opt(row.p),
                String::new(),
                String::new(),
            ])?;
        }
        let l = &self.levene;
        w.write_record([
            "levene".to_string(),
            "cells".to_string(),
            String::new(),
            format!("{}", l.df.0),
            format!("{}", l.df.1),
            String::new(),
            opt(l.w),
            opt(l.p),
            String::new(),
            String::new(),
        ])?;
        for p in self.tukey.iter().flatten() {
            w.write_record([
                "tukey".to_string(),
                format!("{} vs {}", self.levels[p.i], self.levels[p.j]),
                String::new(),
                format!("{}", self.levels.len()),
                format!("{df_within}"),
                String::new(),
                format!("{}", p.q),
                format!("{}", p.p),
                format!("{}", p.mean_difference),
                p.significant.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: &str = "department,level,replication,y\n\
        A1,B1,0,1\nA1,B1,1,3\nA1,B2,0,2\nA1,B2,1,4\n\
        A2,B1,0,5\nA2,B1,1,7\nA2,B2,0,6\nA2,B2,1,8\n";

    #[test]
    fn worked_example_report() {
        let obs = observations_from_csv(WORKED.as_bytes(), "y").unwrap();
        let r = analyze(&obs, 0.05).unwrap();
        let text = r.to_text();
        assert!(
            text.contains("department: F(1, 4) = 16.00, p = 0.0161"),
            "{text}"
        );
        assert!(text.contains("level: F(1, 4) = 1.00"));
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("anova,department,32,1,4,32,16,"));
    }

    #[test]
    fn unknown_metric_lists_columns() {
        let err = observations_from_csv(WORKED.as_bytes(), "profit").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("available: y"), "{msg}");
        assert!(matches!(
            observations_from_csv(WORKED.as_bytes(), "department"),
            Err(AnalysisError::UnknownMetric { .. })
        ));
    }

    #[test]
    fn constant_data_is_reported_not_fatal() {
        let mut text = String::from("department,level,y\n");
        for cell in ["A1,B1", "A1,B2", "A2,B1", "A2,B2"] {
            text.push_str(&format!("{cell},3\n{cell},3\n"));
        }
        let r = analyze(&observations_from_csv(text.as_bytes(), "y").unwrap(), 0.05).unwrap();
        assert!(r.anova.degenerate);
        assert!(r.to_text().contains("undefined"));
        assert!(r.tukey.is_none());
    }

    #[test]
    fn unbalanced_and_bad_values_rejected() {
        let short = WORKED.lines().take(8).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            observations_from_csv(short.as_bytes(), "y"),
            Err(AnalysisError::Stats(StatsError::Unbalanced(_)))
        ));
        let bad = WORKED.replace("A2,B2,1,8", "A2,B2,1,x");
        assert!(matches!(
            observations_from_csv(bad.as_bytes(), "y"),
            Err(AnalysisError::BadValue { row: 9, .. })
        ));
    }

    #[test]
    fn p_formatting() {
        assert_eq!(format_p(0.0004), "p < .001");
        assert_eq!(format_p(0.01613), "p = 0.0161");
    }
}
