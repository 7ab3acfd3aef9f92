//! Two-way between-groups ANOVA and Levene's test.

use super::special::f_upper_tail;
use super::StatsError;

/// Balanced a × b × n layout, indexed `[i][j][r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedTable {
    a: usize,
    b: usize,
    n: usize,
    data: Vec<f64>,
}

impl BalancedTable {
    /// Builds the table from nested cells, rejecting ragged input.
    pub fn new(cells: &[Vec<Vec<f64>>]) -> Result<Self, StatsError> {
        let a = cells.len();
        let b = cells.first().map_or(0, Vec::len);
        let n = cells
            .first()
            .and_then(|row| row.first())
            .map_or(0, Vec::len);
        let mut data = Vec::with_capacity(a * b * n);
        for (i, row) in cells.iter().enumerate() {
            if row.len() != b {
                return Err(StatsError::Unbalanced(format!(
                    "row {i} has {} cells, expected {b}",
                    row.len()
                )));
            }
            for (j, cell) in row.iter().enumerate() {
                if cell.len() != n {
                    return Err(StatsError::Unbalanced(format!(
                        "cell ({i}, {j}) has {} observations, expected {n}",
                        cell.len()
                    )));
                }
                if cell.iter().any(|x| !x.is_finite()) {
                    return Err(StatsError::NonFinite);
                }
                data.extend_from_slice(cell);
            }
        }
        if a < 2 || b < 2 {
            return Err(StatsError::Domain(format!(
                "need at least 2 levels per factor, got {a} × {b}"
            )));
        }
        if n < 2 {
            return Err(StatsError::Domain(format!(
                "need at least 2 observations per cell, got {n}"
            )));
        }
        Ok(Self { a, b, n, data })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.a, self.b, self.n)
    }

    pub fn cell(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.b + j) * self.n;
        &self.data[start..start + self.n]
    }

    pub fn cell_mean(&self, i: usize, j: usize) -> f64 {
        self.cell(i, j).iter().sum::<f64>() / self.n as f64
    }

    /// Mean of factor-B level `j` over all levels of A.
    pub fn b_marginal_mean(&self, j: usize) -> f64 {
        (0..self.a).map(|i| self.cell_mean(i, j)).sum::<f64>() / self.a as f64
    }

    pub fn a_marginal_mean(&self, i: usize) -> f64 {
        (0..self.b).map(|j| self.cell_mean(i, j)).sum::<f64>() / self.b as f64
    }

    pub fn cells(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceRow {
    pub ss: f64,
    pub df: f64,
    pub ms: f64,
    /// Absent for the within row and for degenerate tables.
    pub f: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaTable {
    pub factor_a: SourceRow,
    pub factor_b: SourceRow,
    pub interaction: SourceRow,
    pub within: SourceRow,
    pub ss_total: f64,
    /// No within-cell variance: F ratios are undefined.
    pub degenerate: bool,
}

impl AnovaTable {
    pub fn effects(&self) -> [(&'static str, &SourceRow); 3] {
        [
            ("A", &self.factor_a),
            ("B", &self.factor_b),
            ("AB", &self.interaction),
        ]
    }
}

/// Treats a relative within-cell sum of squares this small as rounding noise.
const DEGENERATE_RATIO: f64 = 1e-24;

/// Fixed-effects two-way ANOVA with interaction.
pub fn anova_two_way(table: &BalancedTable) -> Result<AnovaTable, StatsError> {
    let (a, b, n) = table.shape();
    let total = (a * b * n) as f64;
    let grand = table.data.iter().sum::<f64>() / total;
    let mut ss_a = 0.0;
    for i in 0..a {
        ss_a += (table.a_marginal_mean(i) - grand).powi(2);
    }
    ss_a *= (b * n) as f64;
    let mut ss_b = 0.0;
    for j in 0..b {
        ss_b += (table.b_marginal_mean(j) - grand).powi(2);
    }
    ss_b *= (a * n) as f64;
    let mut ss_ab = 0.0;
    let mut ss_within = 0.0;
    for i in 0..a {
        for j in 0..b {
            let m = table.cell_mean(i, j);
            ss_ab += (m - table.a_marginal_mean(i) - table.b_marginal_mean(j) + grand).powi(2);
            ss_within += table
                .cell(i, j)
                .iter()
                .map(|x| (x - m).powi(2))
                .sum::<f64>();
        }
    }
    ss_ab *= n as f64;
    let ss_total = table.data.iter().map(|x| (x - grand).powi(2)).sum::<f64>();

    let df_a = (a - 1) as f64;
    let df_b = (b - 1) as f64;
    let df_ab = df_a * df_b;
    let df_within = (a * b * (n - 1)) as f64;
    let ms_within = ss_within / df_within;
    let scale = table.data.iter().map(|x| x * x).sum::<f64>();
    let degenerate = ss_within <= DEGENERATE_RATIO * scale;

    let row = |ss: f64, df: f64| -> Result<SourceRow, StatsError> {
        let ms = ss / df;
        let (f, p) = if degenerate {
            (None, None)
        } else {
            let f = ms / ms_within;
            (Some(f), Some(f_upper_tail(f, df, df_within)?))
        };
        Ok(SourceRow { ss, df, ms, f, p })
    };
    Ok(AnovaTable {
        factor_a: row(ss_a, df_a)?,
        factor_b: row(ss_b, df_b)?,
        interaction: row(ss_ab, df_ab)?,
        within: SourceRow {
            ss: ss_within,
            df: df_within,
            ms: ms_within,
            f: None,
            p: None,
        },
        ss_total,
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeveneResult {
    /// Absent when every absolute deviation is zero.
    pub w: Option<f64>,
    pub df: (f64, f64),
    pub p: Option<f64>,
    pub degenerate: bool,
}

/// Levene's test, centred on group means.
pub fn levene_test(groups: &[&[f64]]) -> Result<LeveneResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::Domain(format!(
            "Levene needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some(g) = groups.iter().position(|g| g.len() < 2) {
        return Err(StatsError::Domain(format!(
            "group {g} has fewer than 2 observations"
        )));
    }
    if groups.iter().flat_map(|g| g.iter()).any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let deviations: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let m = g.iter().sum::<f64>() / g.len() as f64;
            g.iter().map(|x| (x - m).abs()).collect()
        })
        .collect();
    let k = groups.len();
    let total_n: usize = groups.iter().map(|g| g.len()).sum();
    let df = ((k - 1) as f64, (total_n - k) as f64);
    let all: f64 = deviations.iter().flatten().sum();
    let grand = all / total_n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for d in &deviations {
        let m = d.iter().sum::<f64>() / d.len() as f64;
        ss_between += d.len() as f64 * (m - grand).powi(2);
        ss_within += d.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let scale = deviations.iter().flatten().map(|x| x * x).sum::<f64>();
    if scale == 0.0 {
        return Ok(LeveneResult {
            w: None,
            df,
            p: None,
            degenerate: true,
        });
    }
    let tiny = DEGENERATE_RATIO * scale;
    let (w, p) = match (ss_between <= tiny, ss_within <= tiny) {
        (true, _) => (0.0, 1.0),
        (false, true) => (f64::INFINITY, 0.0),
        (false, false) => {
            let w = (ss_between / df.0) / (ss_within / df.1);
            (w, f_upper_tail(w, df.0, df.1)?)
        }
    };
    Ok(LeveneResult {
        w: Some(w),
        df,
        p: Some(p),
        degenerate: false,
    })
}
