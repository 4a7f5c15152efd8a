use std::fmt::Write as _;

use serde::Serialize;

use super::template::FamilyTemplate;

/// One `(n, M, seed, target)` cell.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: usize,
    /// Graph seed for random families.
    pub seed: Option<u64>,
    pub target: String,
    /// False when the row compares against a limit the subsequence is not expected to reach.
    pub own_target: bool,
    pub m: f64,
    pub k: f64,
    pub vertices: usize,
    pub edges: usize,
    pub p: f64,
    pub r_n: f64,
    pub lambda0_estimate: Option<f64>,
    pub lambda0_target: Option<f64>,
    /// Cut norm in canonical labeling, hence an upper bound on the cut distance.
    pub cut_distance: Option<f64>,
    pub cut_exact: Option<bool>,
    pub degree_l1: Option<f64>,
    pub truncated_mean: Option<f64>,
    pub truncated_var: Option<f64>,
    pub samples: Option<u64>,
    pub empirical_mean: Option<f64>,
    pub mean_se: Option<f64>,
    pub empirical_second_moment: Option<f64>,
    pub second_moment_se: Option<f64>,
    pub limit_second_moment: Option<f64>,
    pub tv: Option<f64>,
    pub tv_lumped_tail: Option<f64>,
    /// `½ Σ_k sd(p̂_k)` under the limit law: the scale of TV due to sampling alone.
    pub tv_noise: Option<f64>,
}

/// Per-n values (averaged over seeds) and whether they end below where they start.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trend {
    pub n: Vec<usize>,
    pub values: Vec<f64>,
    pub decreasing: bool,
    pub monotone: bool,
    pub last: f64,
}

impl Trend {
    pub(crate) fn from_points(points: Vec<(usize, f64)>) -> Option<Trend> {
        if points.is_empty() {
            return None;
        }
        let (n, values): (Vec<usize>, Vec<f64>) = points.into_iter().unzip();
        let last = *values.last().unwrap();
        Some(Trend {
            decreasing: values.len() < 2 || last < values[0],
            monotone: values.windows(2).all(|w| w[1] <= w[0] + 1e-12),
            last,
            n,
            values,
        })
    }
}

/// Trends of the three hypotheses of the limit theorem and of the TV distance.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Verdicts {
    /// `|tail mass - λ0|`.
    pub lambda0: Option<Trend>,
    pub cut: Option<Trend>,
    pub degree: Option<Trend>,
    pub tv: Option<Trend>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecondMomentSummary {
    pub lambda: f64,
    pub mean: f64,
    pub variance: f64,
    pub predicts_poisson: bool,
    pub tv: Option<f64>,
}

/// Gap between the second moments of two subsequence limits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsequenceSummary {
    pub odd_limit_second_moment: f64,
    pub even_limit_second_moment: f64,
    pub gap: f64,
    /// Every empirical second moment lies within a quarter of the gap of its own limit.
    pub separated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub id: String,
    pub family: FamilyTemplate,
    pub n_grid: Vec<usize>,
    pub samples: u64,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    pub verdicts: Verdicts,
    pub tv_budget: Option<f64>,
    pub final_tv: Option<f64>,
    pub second_moment: Option<SecondMomentSummary>,
    pub subsequences: Option<SubsequenceSummary>,
    pub passed: Option<bool>,
    pub notes: Vec<String>,
}

const CSV_COLUMNS: &[&str] = &[
    "id",
    "n",
    "M",
    "K",
    "seed",
    "target",
    "own_target",
    "vertices",
    "edges",
    "p",
    "r_n",
    "lambda0_estimate",
    "lambda0_target",
    "cut_distance",
    "cut_exact",
    "degree_l1",
    "truncated_mean",
    "truncated_var",
    "samples",
    "empirical_mean",
    "mean_se",
    "empirical_second_moment",
    "second_moment_se",
    "limit_second_moment",
    "tv",
    "tv_lumped_tail",
    "tv_noise",
];

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per row; missing values are empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            let fields = [
                self.id.clone(),
                r.n.to_string(),
                r.m.to_string(),
                r.k.to_string(),
                opt(r.seed),
                r.target.clone(),
                r.own_target.to_string(),
                r.vertices.to_string(),
                r.edges.to_string(),
                r.p.to_string(),
                r.r_n.to_string(),
                opt(r.lambda0_estimate),
                opt(r.lambda0_target),
                opt(r.cut_distance),
                opt(r.cut_exact),
                opt(r.degree_l1),
                opt(r.truncated_mean),
                opt(r.truncated_var),
                opt(r.samples),
                opt(r.empirical_mean),
                opt(r.mean_se),
                opt(r.empirical_second_moment),
                opt(r.second_moment_se),
                opt(r.limit_second_moment),
                opt(r.tv),
                opt(r.tv_lumped_tail),
                opt(r.tv_noise),
            ];
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }
}
