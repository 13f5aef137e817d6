//! Listening-test report: accuracy and quality tables with summary rows,
//! repeated-measures ANOVA, FDR-corrected pairwise matrices, degradation
//! ANOVA, listener subgroup and speaker gender comparisons, and correlations
//! against automatic metrics.
//!
//! Every analysis that cannot run is marked `insufficient_data` with a reason.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use anonbench_core::protocol::{Condition, Gender, ListenerProfile, Table3Row, Table5Row, Variant};
use anonbench_core::stats::{
    bh_fdr, degradation_scores, mann_whitney_u, mean, mean_sd, one_way_anova, paired_t_test, pearson_correlation,
    repeated_measures_anova, shapiro_wilk, unpaired_t_test, MwMode, RepeatedMeasuresTable, StatsError,
};
use anonbench_core::TestResult64;
use serde::Serialize;
use thiserror::Error;

use crate::snapshot::{SpeakerAccuracy, StudySnapshot};

pub const FDR_ALPHA: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("duplicate {measure} cell for listener {listener}, group {group}")]
    DuplicateCell { measure: String, listener: String, group: String },
    #[error("{path}: {message}")]
    MetricFile { path: String, message: String },
}

/// Result of one analysis, or why it was skipped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Analysis<T> {
    Ok { result: T },
    InsufficientData { reason: String },
}

impl<T> Analysis<T> {
    fn insufficient(reason: impl Into<String>) -> Self {
        Analysis::InsufficientData { reason: reason.into() }
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Analysis::Ok { result } => Some(result),
            Analysis::InsufficientData { .. } => None,
        }
    }
}

impl<T> From<Result<T, StatsError>> for Analysis<T> {
    fn from(r: Result<T, StatsError>) -> Self {
        match r {
            Ok(result) => Analysis::Ok { result },
            Err(e) => Analysis::insufficient(e.to_string()),
        }
    }
}

/// Mean and sample SD with integer display, e.g. `91 ± 9`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanSd {
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
    pub display: String,
}

/// Rounds half away from zero.
pub fn round_display(x: f64) -> String {
    let r = x.round();
    format!("{}", if r == 0.0 { 0.0 } else { r })
}

impl MeanSd {
    pub fn of(xs: &[f64]) -> Option<Self> {
        match xs.len() {
            0 => None,
            1 => Some(Self { n: 1, mean: xs[0], sd: None, display: format!("{} ± NA", round_display(xs[0])) }),
            n => {
                let (m, sd) = mean_sd(xs).ok()?;
                Some(Self { n, mean: m, sd: Some(sd), display: format!("{} ± {}", round_display(m), round_display(sd)) })
            }
        }
    }
}

/// Three decimals; values that would print as `0.000` become `< 0.001`.
fn p_display(p: f64) -> String {
    if p < 0.0005 {
        "< 0.001".into()
    } else {
        format!("{p:.3}")
    }
}

/// Which table a measure comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    ZeroShot,
    FewShot,
    Orig,
    Anon,
}

impl Measure {
    pub const ACCURACY: [Measure; 2] = [Measure::ZeroShot, Measure::FewShot];
    pub const QUALITY: [Measure; 2] = [Measure::Orig, Measure::Anon];

    fn name(self) -> &'static str {
        match self {
            Measure::ZeroShot => "zero_shot",
            Measure::FewShot => "few_shot",
            Measure::Orig => "orig",
            Measure::Anon => "anon",
        }
    }

    fn is_accuracy(self) -> bool {
        matches!(self, Measure::ZeroShot | Measure::FewShot)
    }
}

/// Per-group automatic privacy metric.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupEer {
    pub group: String,
    pub eer: f64,
}

/// Per-group pathology-classifier AUC on original and anonymized audio.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAuc {
    pub group: String,
    pub orig: f64,
    pub anon: f64,
}

fn metric_err(path: &Path, message: impl Into<String>) -> ReportError {
    ReportError::MetricFile { path: path.display().to_string(), message: message.into() }
}

fn read_metric_rows(path: &Path, header: &[&str]) -> Result<Vec<(String, Vec<f64>)>, ReportError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| metric_err(path, e.to_string()))?;
    let found = r.headers().map_err(|e| metric_err(path, e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(metric_err(path, format!("expected header {}", header.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| metric_err(path, e.to_string()))?;
        let values = rec
            .iter()
            .skip(1)
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| metric_err(path, format!("line {}: bad number", i + 2)))?;
        out.push((rec[0].to_string(), values));
    }
    Ok(out)
}

/// CSV `group,eer`.
pub fn read_eer_file(path: impl AsRef<Path>) -> Result<Vec<GroupEer>, ReportError> {
    let rows = read_metric_rows(path.as_ref(), &["group", "eer"])?;
    Ok(rows.into_iter().map(|(group, v)| GroupEer { group, eer: v[0] }).collect())
}

/// CSV `group,orig,anon`.
pub fn read_auc_file(path: impl AsRef<Path>) -> Result<Vec<GroupAuc>, ReportError> {
    let rows = read_metric_rows(path.as_ref(), &["group", "orig", "anon"])?;
    Ok(rows.into_iter().map(|(group, v)| GroupAuc { group, orig: v[0], anon: v[1] }).collect())
}

/// Everything the report is computed from.
#[derive(Debug, Clone, Default)]
pub struct ReportInput {
    /// Column order of every table.
    pub groups: Vec<String>,
    pub accuracy: Vec<Table3Row>,
    pub quality: Vec<Table5Row>,
    pub listeners: Vec<ListenerProfile>,
    /// Absent in fixture-only mode.
    pub speakers: Option<Vec<SpeakerAccuracy>>,
    pub eer: Option<Vec<GroupEer>>,
    pub auc: Option<Vec<GroupAuc>>,
}

impl ReportInput {
    /// Fixture mode: groups in order of first appearance.
    pub fn from_tables(accuracy: Vec<Table3Row>, quality: Vec<Table5Row>, listeners: Vec<ListenerProfile>) -> Self {
        let mut groups: Vec<String> = Vec::new();
        for g in accuracy.iter().map(|r| &r.group).chain(quality.iter().map(|r| &r.group)) {
            if !groups.contains(g) {
                groups.push(g.clone());
            }
        }
        Self { groups, accuracy, quality, listeners, ..Self::default() }
    }

    pub fn from_snapshot(snapshot: &StudySnapshot) -> Result<Self, anonbench_core::protocol::ProtocolError> {
        let (accuracy, quality) = snapshot.export()?;
        Ok(Self {
            groups: snapshot.config.groups.clone(),
            accuracy,
            quality,
            listeners: snapshot.config.listeners.clone(),
            speakers: Some(snapshot.speaker_accuracy()),
            eer: None,
            auc: None,
        })
    }
}

/// listeners × groups matrix of one measure.
#[derive(Debug, Clone)]
struct Grid {
    measure: Measure,
    listeners: Vec<String>,
    groups: Vec<String>,
    cells: Vec<Vec<Option<f64>>>,
}

impl Grid {
    fn build(
        measure: Measure,
        listeners: &[String],
        groups: &[String],
        rows: impl Iterator<Item = (String, String, f64)>,
    ) -> Result<Self, ReportError> {
        let li: HashMap<&str, usize> = listeners.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let gi: HashMap<&str, usize> = groups.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
        let mut cells = vec![vec![None; groups.len()]; listeners.len()];
        for (listener, group, value) in rows {
            let (Some(&l), Some(&g)) = (li.get(listener.as_str()), gi.get(group.as_str())) else {
                continue;
            };
            if cells[l][g].replace(value).is_some() {
                return Err(ReportError::DuplicateCell { measure: measure.name().into(), listener, group });
            }
        }
        Ok(Self { measure, listeners: listeners.to_vec(), groups: groups.to_vec(), cells })
    }

    fn present_listeners(&self) -> Vec<usize> {
        (0..self.listeners.len()).filter(|&l| self.cells[l].iter().any(Option::is_some)).collect()
    }

    /// Listeners with a value in every group.
    fn complete_listeners(&self) -> Vec<usize> {
        (0..self.listeners.len()).filter(|&l| self.cells[l].iter().all(Option::is_some)).collect()
    }

    fn column(&self, g: usize, subset: &[usize]) -> Vec<f64> {
        subset.iter().filter_map(|&l| self.cells[l][g]).collect()
    }

    fn all_cells(&self, subset: &[usize]) -> Vec<f64> {
        subset.iter().flat_map(|&l| self.cells[l].iter().flatten().copied()).collect()
    }

    /// Per-listener (listener, group, value) for listeners in `subset`.
    fn keyed(&self, subset: &[usize]) -> Vec<((String, String), f64)> {
        let mut out = Vec::new();
        for &l in subset {
            for (g, v) in self.cells[l].iter().enumerate() {
                if let Some(v) = v {
                    out.push(((self.listeners[l].clone(), self.groups[g].clone()), *v));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ListenerRow {
    pub listener: String,
    pub values: Vec<Option<f64>>,
    /// Values rounded for display; `null` where the cell is missing.
    pub display: Vec<Option<String>>,
    pub average: Option<MeanSd>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub label: String,
    pub listeners: usize,
    pub per_group: Vec<Option<MeanSd>>,
    /// Over every cell of the listeners in this row.
    pub overall: Option<MeanSd>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreTable {
    pub rows: Vec<ListenerRow>,
    pub summary: Vec<SummaryRow>,
}

/// One upper-triangle entry of a pairwise matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEntry {
    pub t: f64,
    pub df: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
    pub degenerate: bool,
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum MatrixCell {
    /// `"NA"` on the diagonal.
    NotApplicable(&'static str),
    /// Lower triangle, `null`.
    Blank(()),
    Entry(PairEntry),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseMatrix {
    pub groups: Vec<String>,
    pub listeners: usize,
    pub alpha: f64,
    pub cells: Vec<Vec<MatrixCell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupTest {
    pub group: String,
    pub result: Analysis<TestResult64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSection {
    pub measure: Measure,
    pub table: ScoreTable,
    pub normality: Vec<GroupTest>,
    pub repeated_measures_anova: Analysis<TestResult64>,
    pub pairwise: Analysis<PairwiseMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedComparison {
    pub orig: MeanSd,
    pub anon: MeanSd,
    pub test: TestResult64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupPaired {
    pub group: String,
    pub result: Analysis<PairedComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupDegradation {
    pub group: String,
    pub degradation: Option<MeanSd>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegradationAnalysis {
    pub per_group: Vec<GroupDegradation>,
    pub normality: Vec<GroupTest>,
    pub anova: TestResult64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityComparison {
    /// Over listener × group cells.
    pub paired_overall: Analysis<PairedComparison>,
    /// Over listeners, per group.
    pub paired_by_group: Vec<GroupPaired>,
    /// One-way ANOVA of per-listener-group orig − anon.
    pub degradation: Analysis<DegradationAnalysis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Native,
    Expert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// Every listener × group cell is one observation.
    ListenerGroup,
    /// Each listener's mean over groups is one observation.
    Listener,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GranularTest {
    pub granularity: Granularity,
    pub result: Analysis<TestResult64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgroupResult {
    /// Native or expert listeners.
    pub members: MeanSd,
    pub others: MeanSd,
    pub delta: f64,
    pub tests: Vec<GranularTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgroupComparison {
    pub split: Split,
    pub measure: Measure,
    pub result: Analysis<SubgroupResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenderRow {
    pub label: String,
    pub male: Option<MeanSd>,
    pub female: Option<MeanSd>,
    pub test: Analysis<TestResult64>,
    /// BH-adjusted across the per-group rows of one condition.
    pub p_adjusted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenderSection {
    pub condition: Condition,
    pub groups: Vec<GenderRow>,
    /// Patients (every non-control group) and controls, pooled.
    pub pooled: Vec<GenderRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ListenerSet {
    All,
    NonNative,
    Native,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricPair {
    EerVsZeroShot,
    EerVsFewShot,
    AucVsQualityAnon,
    AucVsQualityOrig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub listener_set: ListenerSet,
    pub metric_pair: MetricPair,
    pub groups: Vec<String>,
    pub result: Analysis<TestResult64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub groups: Vec<String>,
    pub listeners: Vec<String>,
    pub fdr_alpha: f64,
    pub accuracy: Vec<MeasureSection>,
    pub quality: Vec<MeasureSection>,
    pub quality_comparison: QualityComparison,
    pub listener_comparisons: Vec<SubgroupComparison>,
    pub gender: Analysis<Vec<GenderSection>>,
    pub correlations: Analysis<Vec<CorrelationRow>>,
}

impl Report {
    /// Pretty JSON with a trailing newline. Field order is fixed by the types,
    /// so equal inputs give byte-identical output.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn score_table(grid: &Grid, roster: &HashMap<&str, &ListenerProfile>) -> ScoreTable {
    let present = grid.present_listeners();
    let rows = present
        .iter()
        .map(|&l| {
            let values = grid.cells[l].clone();
            let observed: Vec<f64> = values.iter().flatten().copied().collect();
            ListenerRow {
                listener: grid.listeners[l].clone(),
                display: values.iter().map(|v| v.map(round_display)).collect(),
                values,
                average: MeanSd::of(&observed),
            }
        })
        .collect();

    let mut subsets: Vec<(&str, Vec<usize>)> = Vec::new();
    if !roster.is_empty() {
        let native = |l: usize| roster.get(grid.listeners[l].as_str()).map(|p| p.is_native());
        subsets.push(("Avg - non-native", present.iter().copied().filter(|&l| native(l) == Some(false)).collect()));
        subsets.push(("Avg - native", present.iter().copied().filter(|&l| native(l) == Some(true)).collect()));
    }
    subsets.push(("Avg - all", present.clone()));
    let summary = subsets
        .into_iter()
        .filter(|(_, s)| !s.is_empty())
        .map(|(label, subset)| SummaryRow {
            label: label.to_string(),
            listeners: subset.len(),
            per_group: (0..grid.groups.len()).map(|g| MeanSd::of(&grid.column(g, &subset))).collect(),
            overall: MeanSd::of(&grid.all_cells(&subset)),
        })
        .collect();
    ScoreTable { rows, summary }
}

fn normality(grid: &Grid, subset: &[usize]) -> Vec<GroupTest> {
    grid.groups
        .iter()
        .enumerate()
        .map(|(g, group)| GroupTest { group: group.clone(), result: shapiro_wilk(&grid.column(g, subset)).into() })
        .collect()
}

fn rm_anova(grid: &Grid) -> Analysis<TestResult64> {
    let complete = grid.complete_listeners();
    if complete.len() < 2 || grid.groups.len() < 2 {
        return Analysis::insufficient(format!(
            "need at least 2 listeners with every group and 2 groups, have {} and {}",
            complete.len(),
            grid.groups.len()
        ));
    }
    let values = complete.iter().map(|&l| grid.cells[l].iter().map(|v| v.unwrap()).collect()).collect();
    let subjects = complete.iter().map(|&l| grid.listeners[l].clone()).collect();
    RepeatedMeasuresTable::new(values, subjects, grid.groups.clone())
        .and_then(|t| repeated_measures_anova(&t))
        .into()
}

/// Paired t-tests between every pair of groups over listeners with complete
/// rows, BH-corrected over the upper triangle.
fn pairwise(grid: &Grid) -> Analysis<PairwiseMatrix> {
    let complete = grid.complete_listeners();
    let k = grid.groups.len();
    if complete.len() < 2 || k < 2 {
        return Analysis::insufficient(format!(
            "need at least 2 listeners with every group and 2 groups, have {} and {k}",
            complete.len()
        ));
    }
    let mut tests = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            match paired_t_test(&grid.column(i, &complete), &grid.column(j, &complete)) {
                Ok(t) => tests.push((i, j, t)),
                Err(e) => return Analysis::insufficient(e.to_string()),
            }
        }
    }
    let raw: Vec<f64> = tests.iter().map(|t| t.2.p_value).collect();
    let fdr = match bh_fdr(&raw, FDR_ALPHA) {
        Ok(f) => f,
        Err(e) => return Analysis::insufficient(e.to_string()),
    };
    let mut cells: Vec<Vec<MatrixCell>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { MatrixCell::NotApplicable("NA") } else { MatrixCell::Blank(()) }).collect())
        .collect();
    for (n, (i, j, t)) in tests.into_iter().enumerate() {
        cells[i][j] = MatrixCell::Entry(PairEntry {
            t: t.statistic,
            df: t.df[0],
            p_raw: t.p_value,
            p_adjusted: fdr.adjusted[n],
            significant: fdr.significant[n],
            degenerate: t.degenerate,
            display: p_display(fdr.adjusted[n]),
        });
    }
    Analysis::Ok {
        result: PairwiseMatrix { groups: grid.groups.clone(), listeners: complete.len(), alpha: FDR_ALPHA, cells },
    }
}

fn measure_section(grid: &Grid, roster: &HashMap<&str, &ListenerProfile>) -> MeasureSection {
    MeasureSection {
        measure: grid.measure,
        table: score_table(grid, roster),
        normality: normality(grid, &grid.present_listeners()),
        repeated_measures_anova: rm_anova(grid),
        pairwise: pairwise(grid),
    }
}

fn paired_comparison(orig: &[f64], anon: &[f64]) -> Analysis<PairedComparison> {
    let test = match paired_t_test(orig, anon) {
        Ok(t) => t,
        Err(e) => return Analysis::insufficient(e.to_string()),
    };
    Analysis::Ok {
        result: PairedComparison { orig: MeanSd::of(orig).unwrap(), anon: MeanSd::of(anon).unwrap(), test },
    }
}

fn quality_comparison(orig: &Grid, anon: &Grid) -> QualityComparison {
    let all: Vec<usize> = (0..orig.listeners.len()).collect();
    // Cells observed in both variants, aligned by (listener, group).
    let both: Vec<(usize, usize)> = all
        .iter()
        .flat_map(|&l| (0..orig.groups.len()).map(move |g| (l, g)))
        .filter(|&(l, g)| orig.cells[l][g].is_some() && anon.cells[l][g].is_some())
        .collect();
    let pick = |grid: &Grid, cells: &[(usize, usize)]| cells.iter().map(|&(l, g)| grid.cells[l][g].unwrap()).collect::<Vec<_>>();

    let paired_overall = paired_comparison(&pick(orig, &both), &pick(anon, &both));
    let paired_by_group = orig
        .groups
        .iter()
        .enumerate()
        .map(|(g, group)| {
            let cells: Vec<(usize, usize)> = both.iter().copied().filter(|c| c.1 == g).collect();
            GroupPaired { group: group.clone(), result: paired_comparison(&pick(orig, &cells), &pick(anon, &cells)) }
        })
        .collect();

    let degradation = match degradation_scores(&orig.keyed(&all), &anon.keyed(&all)) {
        Err(e) => Analysis::insufficient(e.to_string()),
        Ok(scores) => {
            let per_group_values: Vec<Vec<f64>> = orig
                .groups
                .iter()
                .map(|group| scores.iter().filter(|((_, g), _)| g == group).map(|(_, v)| *v).collect())
                .collect();
            let nonempty: Vec<&Vec<f64>> = per_group_values.iter().filter(|v| !v.is_empty()).collect();
            match one_way_anova(&nonempty) {
                Err(e) => Analysis::insufficient(e.to_string()),
                Ok(anova) => Analysis::Ok {
                    result: DegradationAnalysis {
                        per_group: orig
                            .groups
                            .iter()
                            .zip(&per_group_values)
                            .map(|(group, v)| GroupDegradation { group: group.clone(), degradation: MeanSd::of(v) })
                            .collect(),
                        normality: orig
                            .groups
                            .iter()
                            .zip(&per_group_values)
                            .map(|(group, v)| GroupTest { group: group.clone(), result: shapiro_wilk(v).into() })
                            .collect(),
                        anova,
                    },
                },
            }
        }
    };
    QualityComparison { paired_overall, paired_by_group, degradation }
}

fn subgroup(grid: &Grid, split: Split, roster: &HashMap<&str, &ListenerProfile>) -> SubgroupComparison {
    let done = |result| SubgroupComparison { split, measure: grid.measure, result };
    if roster.is_empty() {
        return done(Analysis::insufficient("no listener roster"));
    }
    let present = grid.present_listeners();
    let side = |want: bool| -> Vec<usize> {
        present
            .iter()
            .copied()
            .filter(|&l| {
                roster.get(grid.listeners[l].as_str()).map(|p| match split {
                    Split::Native => p.is_native(),
                    Split::Expert => p.is_expert(),
                }) == Some(want)
            })
            .collect()
    };
    let (members, others) = (side(true), side(false));
    if members.is_empty() || others.is_empty() {
        return done(Analysis::insufficient(format!(
            "need listeners on both sides, have {} and {}",
            members.len(),
            others.len()
        )));
    }
    let (xm, xo) = (grid.all_cells(&members), grid.all_cells(&others));
    let listener_means = |subset: &[usize]| -> Vec<f64> {
        subset
            .iter()
            .map(|&l| mean(&grid.cells[l].iter().flatten().copied().collect::<Vec<_>>()).expect("present listener"))
            .collect()
    };
    let (lm, lo) = (listener_means(&members), listener_means(&others));
    // Accuracy cells are bounded and tie-heavy: rank test. Quality: Welch t.
    let test = |x: &[f64], y: &[f64]| -> Analysis<TestResult64> {
        if grid.measure.is_accuracy() {
            mann_whitney_u(x, y, MwMode::Auto).map(|m| m.test).into()
        } else {
            unpaired_t_test(x, y).into()
        }
    };
    let (m, o) = (MeanSd::of(&xm).unwrap(), MeanSd::of(&xo).unwrap());
    done(Analysis::Ok {
        result: SubgroupResult {
            delta: m.mean - o.mean,
            members: m,
            others: o,
            tests: vec![
                GranularTest { granularity: Granularity::ListenerGroup, result: test(&xm, &xo) },
                GranularTest { granularity: Granularity::Listener, result: test(&lm, &lo) },
            ],
        },
    })
}

fn is_control(group: &str) -> bool {
    group.to_ascii_lowercase().contains("control")
}

fn gender_row(label: &str, rows: &[&SpeakerAccuracy]) -> GenderRow {
    let of = |g: Gender| rows.iter().filter(|s| s.gender == Some(g)).map(|s| s.accuracy_percent).collect::<Vec<_>>();
    let (male, female) = (of(Gender::Male), of(Gender::Female));
    GenderRow {
        label: label.to_string(),
        male: MeanSd::of(&male),
        female: MeanSd::of(&female),
        test: mann_whitney_u(&male, &female, MwMode::Auto).map(|m| m.test).into(),
        p_adjusted: None,
    }
}

fn gender(groups: &[String], speakers: Option<&[SpeakerAccuracy]>) -> Analysis<Vec<GenderSection>> {
    let Some(speakers) = speakers else {
        return Analysis::insufficient("no per-speaker responses (fixture input)");
    };
    if !speakers.iter().any(|s| s.gender.is_some()) {
        return Analysis::insufficient("no speaker gender in the study configuration");
    }
    let sections = Condition::ALL
        .iter()
        .map(|&condition| {
            let of_cond: Vec<&SpeakerAccuracy> = speakers.iter().filter(|s| s.condition == condition).collect();
            let mut rows: Vec<GenderRow> = groups
                .iter()
                .map(|g| gender_row(g, &of_cond.iter().copied().filter(|s| &s.group == g).collect::<Vec<_>>()))
                .collect();
            let ok: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].test.ok().is_some()).collect();
            let raw: Vec<f64> = ok.iter().map(|&i| rows[i].test.ok().unwrap().p_value).collect();
            if let Ok(fdr) = bh_fdr(&raw, FDR_ALPHA) {
                for (n, &i) in ok.iter().enumerate() {
                    rows[i].p_adjusted = Some(fdr.adjusted[n]);
                }
            }
            let patients: Vec<&SpeakerAccuracy> = of_cond.iter().copied().filter(|s| !is_control(&s.group)).collect();
            let controls: Vec<&SpeakerAccuracy> = of_cond.iter().copied().filter(|s| is_control(&s.group)).collect();
            let pooled = [("patients", patients), ("controls", controls)]
                .into_iter()
                .filter(|(_, v)| !v.is_empty())
                .map(|(label, v)| gender_row(label, &v))
                .collect();
            GenderSection { condition, groups: rows, pooled }
        })
        .collect();
    Analysis::Ok { result: sections }
}

fn correlations(input: &ReportInput, grids: &HashMap<Measure, Grid>, roster: &HashMap<&str, &ListenerProfile>) -> Analysis<Vec<CorrelationRow>> {
    if input.eer.is_none() && input.auc.is_none() {
        return Analysis::insufficient("no EER or AUC file supplied");
    }
    let mut sets = vec![ListenerSet::All];
    if !roster.is_empty() {
        sets.extend([ListenerSet::NonNative, ListenerSet::Native]);
    }
    let pairs: [(MetricPair, Measure); 4] = [
        (MetricPair::EerVsZeroShot, Measure::ZeroShot),
        (MetricPair::EerVsFewShot, Measure::FewShot),
        (MetricPair::AucVsQualityAnon, Measure::Anon),
        (MetricPair::AucVsQualityOrig, Measure::Orig),
    ];
    let mut rows = Vec::new();
    for &set in &sets {
        for &(pair, measure) in &pairs {
            let grid = &grids[&measure];
            let subset: Vec<usize> = grid
                .present_listeners()
                .into_iter()
                .filter(|&l| {
                    let native = roster.get(grid.listeners[l].as_str()).map(|p| p.is_native());
                    match set {
                        ListenerSet::All => true,
                        ListenerSet::NonNative => native == Some(false),
                        ListenerSet::Native => native == Some(true),
                    }
                })
                .collect();
            let metric: Option<Vec<(String, f64)>> = match pair {
                MetricPair::EerVsZeroShot | MetricPair::EerVsFewShot => {
                    input.eer.as_ref().map(|v| v.iter().map(|r| (r.group.clone(), r.eer)).collect())
                }
                MetricPair::AucVsQualityAnon => {
                    input.auc.as_ref().map(|v| v.iter().map(|r| (r.group.clone(), r.anon)).collect())
                }
                MetricPair::AucVsQualityOrig => {
                    input.auc.as_ref().map(|v| v.iter().map(|r| (r.group.clone(), r.orig)).collect())
                }
            };
            let Some(metric) = metric else {
                let what = if matches!(pair, MetricPair::EerVsZeroShot | MetricPair::EerVsFewShot) { "EER" } else { "AUC" };
                rows.push(CorrelationRow {
                    listener_set: set,
                    metric_pair: pair,
                    groups: vec![],
                    result: Analysis::insufficient(format!("no {what} file supplied")),
                });
                continue;
            };
            let (mut groups, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
            for (group, value) in metric {
                let Some(g) = grid.groups.iter().position(|x| *x == group) else { continue };
                let column = grid.column(g, &subset);
                if let Ok(m) = mean(&column) {
                    groups.push(group);
                    xs.push(m);
                    ys.push(value);
                }
            }
            rows.push(CorrelationRow {
                listener_set: set,
                metric_pair: pair,
                groups,
                result: pearson_correlation(&xs, &ys).into(),
            });
        }
    }
    Analysis::Ok { result: rows }
}

pub fn generate_report(input: &ReportInput) -> Result<Report, ReportError> {
    let mut listeners: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    for l in input.accuracy.iter().map(|r| &r.listener).chain(input.quality.iter().map(|r| &r.listener)) {
        if seen.insert(l.clone()) {
            listeners.push(l.clone());
        }
    }
    let roster: HashMap<&str, &ListenerProfile> =
        input.listeners.iter().map(|p| (p.listener_id.as_str(), p)).collect();

    let mut grids = HashMap::new();
    for (measure, condition) in [(Measure::ZeroShot, Condition::ZeroShot), (Measure::FewShot, Condition::FewShot)] {
        let rows = input
            .accuracy
            .iter()
            .filter(|r| r.condition == condition)
            .map(|r| (r.listener.clone(), r.group.clone(), r.accuracy_percent));
        grids.insert(measure, Grid::build(measure, &listeners, &input.groups, rows)?);
    }
    for (measure, variant) in [(Measure::Orig, Variant::Orig), (Measure::Anon, Variant::Anon)] {
        let rows = input
            .quality
            .iter()
            .filter(|r| r.variant == variant)
            .map(|r| (r.listener.clone(), r.group.clone(), r.quality_percent));
        grids.insert(measure, Grid::build(measure, &listeners, &input.groups, rows)?);
    }

    let accuracy = Measure::ACCURACY.iter().map(|m| measure_section(&grids[m], &roster)).collect();
    let quality = Measure::QUALITY.iter().map(|m| measure_section(&grids[m], &roster)).collect();
    let mut listener_comparisons = Vec::new();
    for split in [Split::Native, Split::Expert] {
        for m in Measure::ACCURACY.iter().chain(&Measure::QUALITY) {
            listener_comparisons.push(subgroup(&grids[m], split, &roster));
        }
    }

    Ok(Report {
        groups: input.groups.clone(),
        fdr_alpha: FDR_ALPHA,
        quality_comparison: quality_comparison(&grids[&Measure::Orig], &grids[&Measure::Anon]),
        gender: gender(&input.groups, input.speakers.as_deref()),
        correlations: correlations(input, &grids, &roster),
        listeners,
        accuracy,
        quality,
        listener_comparisons,
    })
}
