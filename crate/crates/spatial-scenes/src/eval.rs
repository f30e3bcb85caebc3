//! Accuracy reports over solver predictions: overall, per-relation and
//! per-category breakdowns, rule-coverage accounting, and mean/std
//! aggregation across runs.
//!
//! Stored reports always carry every group; frequency filters (such as the
//! "more than 15 occurrences" cut used for plots) are applied only when
//! rendering CSV, never to the report itself.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::VsrInstance;
use crate::solver::{FailureReason, Method, Prediction, VsrLexicon};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions/gold length mismatch: {predictions} predictions vs {gold} gold rows")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("no reports to aggregate")]
    NoReports,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracy {
    pub n: usize,
    pub accuracy: f64,
}

/// How much of the workload the geometric rules handled. `mappable` counts
/// instances whose relation is in the mapping table (even when caption
/// parsing or object matching failed later); `solved` counts instances the
/// rules actually answered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleCoverage {
    pub mappable_fraction: f64,
    pub solved_fraction: f64,
    pub solved_accuracy: f64,
    pub failure_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub overall_accuracy: f64,
    pub per_relation: BTreeMap<String, GroupAccuracy>,
    pub per_category: BTreeMap<String, GroupAccuracy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_coverage: Option<RuleCoverage>,
}

fn ratio(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

/// Scores aligned predictions against gold labels. Relations missing from
/// the lexicon's category table land in an "uncategorized" bucket rather
/// than being dropped.
pub fn evaluate(
    predictions: &[Prediction],
    gold: &[VsrInstance],
    lexicon: &VsrLexicon,
) -> Result<EvalReport, EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    let total = gold.len();
    let mut correct = 0usize;
    let mut by_relation: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let mut by_category: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let mut solved = 0usize;
    let mut solved_correct = 0usize;
    let mut failure_counts: BTreeMap<FailureReason, usize> = BTreeMap::new();
    for (prediction, instance) in predictions.iter().zip(gold) {
        let hit = prediction.answer == instance.label;
        correct += usize::from(hit);
        let relation = instance.relation.as_str();
        let category = lexicon.category_of(relation).unwrap_or("uncategorized");
        for bucket in [
            by_relation.entry(relation).or_insert((0, 0)),
            by_category.entry(category).or_insert((0, 0)),
        ] {
            bucket.0 += 1;
            bucket.1 += usize::from(hit);
        }
        match (prediction.method, prediction.failure_reason) {
            (Method::Rule, _) => {
                solved += 1;
                solved_correct += usize::from(hit);
            }
            (Method::Random, Some(reason)) => *failure_counts.entry(reason).or_insert(0) += 1,
            // a random answer without a recorded reason still counts against
            // coverage, it just lands in no failure bucket
            (Method::Random, None) => {}
        }
    }
    let group = |m: BTreeMap<&str, (usize, usize)>| {
        m.into_iter()
            .map(|(k, (n, c))| {
                (
                    k.to_string(),
                    GroupAccuracy {
                        n,
                        accuracy: ratio(c, n),
                    },
                )
            })
            .collect::<BTreeMap<_, _>>()
    };
    let unmapped = failure_counts
        .get(&FailureReason::UnmappedRelation)
        .copied()
        .unwrap_or(0);
    Ok(EvalReport {
        total,
        overall_accuracy: ratio(correct, total),
        per_relation: group(by_relation),
        per_category: group(by_category),
        rule_coverage: Some(RuleCoverage {
            mappable_fraction: ratio(total - unmapped, total),
            solved_fraction: ratio(solved, total),
            solved_accuracy: ratio(solved_correct, solved),
            failure_counts: failure_counts
                .into_iter()
                .map(|(reason, n)| (reason.name().to_string(), n))
                .collect(),
        }),
    })
}

/// Mean and population standard deviation of one metric across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

impl RunAggregate {
    pub fn from_values(values: &[f64]) -> Option<RunAggregate> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(RunAggregate {
            mean,
            std: variance.sqrt(),
            runs: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregates {
    pub runs: usize,
    pub overall: RunAggregate,
    pub per_relation: BTreeMap<String, RunAggregate>,
    pub per_category: BTreeMap<String, RunAggregate>,
}

/// Aggregates each metric over the runs that report it (groups absent from a
/// run contribute nothing; their `runs` field says how many runs had them).
pub fn aggregate_runs(reports: &[EvalReport]) -> Result<RunAggregates, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::NoReports);
    }
    let overall_values: Vec<f64> = reports.iter().map(|r| r.overall_accuracy).collect();
    let grouped = |pick: fn(&EvalReport) -> &BTreeMap<String, GroupAccuracy>| {
        let mut buckets: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for report in reports {
            for (key, group) in pick(report) {
                buckets.entry(key).or_default().push(group.accuracy);
            }
        }
        buckets
            .into_iter()
            .map(|(key, values)| {
                (
                    key.to_string(),
                    RunAggregate::from_values(&values).expect("bucket never empty"),
                )
            })
            .collect::<BTreeMap<_, _>>()
    };
    Ok(RunAggregates {
        runs: reports.len(),
        overall: RunAggregate::from_values(&overall_values).expect("checked non-empty"),
        per_relation: grouped(|r| &r.per_relation),
        per_category: grouped(|r| &r.per_category),
    })
}

pub fn report_json(report: &EvalReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serialization");
    out.push('\n');
    out
}

/// The per-relation table as CSV, ordered by descending frequency (name
/// ascending on ties). `min_count` keeps only relations appearing strictly
/// more often — the plot-style frequency cut; `None` keeps everything.
pub fn report_csv(report: &EvalReport, min_count: Option<usize>) -> String {
    let mut rows: Vec<(&str, usize, f64)> = report
        .per_relation
        .iter()
        .map(|(name, g)| (name.as_str(), g.n, g.accuracy))
        .collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut out = String::from("relation,n,accuracy\n");
    for (name, n, accuracy) in rows {
        if min_count.is_none_or(|cut| n > cut) {
            writeln!(out, "{name},{n},{accuracy:.6}").expect("string write");
        }
    }
    out
}

pub fn aggregates_json(aggregates: &RunAggregates) -> String {
    let mut out = serde_json::to_string_pretty(aggregates).expect("aggregate serialization");
    out.push('\n');
    out
}

/// Per-relation mean/std table across runs, name ascending.
pub fn aggregates_csv(aggregates: &RunAggregates) -> String {
    let mut out = String::from("relation,runs,mean,std\n");
    for (name, agg) in &aggregates.per_relation {
        writeln!(out, "{name},{},{:.6},{:.6}", agg.runs, agg.mean, agg.std).expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gold(relation: &str, label: bool) -> VsrInstance {
        VsrInstance {
            image: "1.jpg".to_string(),
            image_link: None,
            caption: format!("The a is {relation} the b."),
            label,
            relation: relation.to_string(),
        }
    }

    fn rule(answer: bool) -> Prediction {
        Prediction {
            answer,
            method: Method::Rule,
            failure_reason: None,
        }
    }

    fn random(answer: bool, reason: FailureReason) -> Prediction {
        Prediction {
            answer,
            method: Method::Random,
            failure_reason: Some(reason),
        }
    }

    #[test]
    fn all_correct_is_one() {
        let gold_rows = vec![gold("left of", true), gold("above", false)];
        let predictions = vec![rule(true), rule(false)];
        let report = evaluate(&predictions, &gold_rows, VsrLexicon::builtin()).unwrap();
        assert_eq!(report.overall_accuracy, 1.0);
        assert_eq!(report.total, 2);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            evaluate(&[rule(true)], &[], VsrLexicon::builtin()),
            Err(EvalError::LengthMismatch {
                predictions: 1,
                gold: 0
            })
        ));
    }

    #[test]
    fn per_relation_counts_sum_to_total() {
        let gold_rows = vec![
            gold("left of", true),
            gold("left of", false),
            gold("touching", true),
            gold("above", true),
        ];
        let predictions = vec![
            rule(true),
            rule(true),
            random(false, FailureReason::UnmappedRelation),
            rule(true),
        ];
        let report = evaluate(&predictions, &gold_rows, VsrLexicon::builtin()).unwrap();
        assert_eq!(report.per_relation.values().map(|g| g.n).sum::<usize>(), 4);
        assert_eq!(report.per_category.values().map(|g| g.n).sum::<usize>(), 4);
        let left_of = &report.per_relation["left of"];
        assert_eq!(left_of.n, 2);
        assert_eq!(left_of.accuracy, 0.5);
        // hits: rows 0 and 3; rows 1 and 2 answer against the label
        assert_eq!(report.overall_accuracy, 0.5);
        // only relations that occur are present
        assert!(!report.per_relation.contains_key("below"));
    }

    #[test]
    fn unknown_relations_land_in_uncategorized() {
        let gold_rows = vec![gold("levitating above", true)];
        let report = evaluate(&[rule(true)], &gold_rows, VsrLexicon::builtin()).unwrap();
        assert_eq!(report.per_category["uncategorized"].n, 1);
    }

    #[test]
    fn category_buckets_follow_the_lexicon() {
        let gold_rows = vec![
            gold("left of", true),  // projective
            gold("touching", true), // topological
            gold("near", true),     // proximity
        ];
        let predictions = vec![rule(true); 3];
        let report = evaluate(&predictions, &gold_rows, VsrLexicon::builtin()).unwrap();
        for category in ["projective", "topological", "proximity"] {
            assert_eq!(report.per_category[category].n, 1, "{category}");
        }
    }

    #[test]
    fn weighted_relation_mean_equals_overall() {
        let relations = ["left of", "above", "touching", "under", "near"];
        let mut gold_rows = Vec::new();
        let mut predictions = Vec::new();
        for (i, relation) in relations.iter().enumerate() {
            for j in 0..=i {
                gold_rows.push(gold(relation, j % 2 == 0));
                predictions.push(rule(j % 3 == 0));
            }
        }
        let report = evaluate(&predictions, &gold_rows, VsrLexicon::builtin()).unwrap();
        let weighted: f64 = report
            .per_relation
            .values()
            .map(|g| g.n as f64 * g.accuracy)
            .sum::<f64>()
            / report.total as f64;
        assert!((weighted - report.overall_accuracy).abs() < 1e-12);
    }

    #[test]
    fn rule_coverage_accounting() {
        let gold_rows = vec![
            gold("left of", true),
            gold("left of", true),
            gold("above", false),
            gold("touching", true),
            gold("behind", false),
            gold("under", true),
        ];
        let predictions = vec![
            rule(true),                                     // hit
            rule(false),                                    // miss
            random(false, FailureReason::CaptionParse),     // hit by luck
            random(false, FailureReason::UnmappedRelation), // miss
            random(true, FailureReason::UnmappedRelation),  // miss
            random(true, FailureReason::SubjectUnmatched),  // hit by luck
        ];
        let report = evaluate(&predictions, &gold_rows, VsrLexicon::builtin()).unwrap();
        let coverage = report.rule_coverage.as_ref().unwrap();
        // 2 unmapped out of 6 leaves 4 mappable
        assert!((coverage.mappable_fraction - 4.0 / 6.0).abs() < 1e-12);
        assert!((coverage.solved_fraction - 2.0 / 6.0).abs() < 1e-12);
        assert_eq!(coverage.solved_accuracy, 0.5);
        assert_eq!(coverage.failure_counts["unmapped_relation"], 2);
        assert_eq!(coverage.failure_counts["caption_parse"], 1);
        assert_eq!(coverage.failure_counts["subject_unmatched"], 1);
        // rule-solved plus failures covers every instance
        let failures: usize = coverage.failure_counts.values().sum();
        assert_eq!(failures + 2, report.total);
    }

    #[test]
    fn empty_input_evaluates_to_zeroes() {
        let report = evaluate(&[], &[], VsrLexicon::builtin()).unwrap();
        assert_eq!(report.total, 0);
        assert_eq!(report.overall_accuracy, 0.0);
        assert!(report.per_relation.is_empty());
    }

    #[test]
    fn aggregate_constant_runs() {
        let values = RunAggregate::from_values(&[0.7, 0.7, 0.7]).unwrap();
        assert!((values.mean - 0.7).abs() < 1e-12);
        assert!(values.std.abs() < 1e-12);
        assert_eq!(values.runs, 3);
    }

    #[test]
    fn aggregate_spread_runs() {
        let agg = RunAggregate::from_values(&[0.72, 0.74, 0.76]).unwrap();
        assert!((agg.mean - 0.74).abs() < 1e-12, "mean {}", agg.mean);
        // population std of {0.72, 0.74, 0.76}: sqrt(2/3) * 0.02
        let expected = (2.0f64 / 3.0).sqrt() * 0.02;
        assert!((agg.std - expected).abs() < 1e-15, "std {}", agg.std);
        assert!((agg.std - 0.0163299).abs() < 1e-6);
    }

    #[test]
    fn aggregate_single_run() {
        let agg = RunAggregate::from_values(&[0.5]).unwrap();
        assert_eq!((agg.mean, agg.std, agg.runs), (0.5, 0.0, 1));
        assert_eq!(RunAggregate::from_values(&[]), None);
    }

    fn report_with(overall: f64, groups: &[(&str, usize, f64)]) -> EvalReport {
        EvalReport {
            total: groups.iter().map(|(_, n, _)| n).sum(),
            overall_accuracy: overall,
            per_relation: groups
                .iter()
                .map(|(k, n, a)| {
                    (
                        k.to_string(),
                        GroupAccuracy {
                            n: *n,
                            accuracy: *a,
                        },
                    )
                })
                .collect(),
            per_category: BTreeMap::new(),
            rule_coverage: None,
        }
    }

    #[test]
    fn aggregate_runs_per_metric() {
        let runs = vec![
            report_with(0.72, &[("left of", 10, 0.6), ("above", 5, 0.4)]),
            report_with(0.74, &[("left of", 10, 0.7), ("above", 5, 0.5)]),
            report_with(0.76, &[("left of", 10, 0.8)]),
        ];
        let agg = aggregate_runs(&runs).unwrap();
        assert_eq!(agg.runs, 3);
        assert!((agg.overall.mean - 0.74).abs() < 1e-12);
        assert_eq!(agg.per_relation["left of"].runs, 3);
        assert!((agg.per_relation["left of"].mean - 0.7).abs() < 1e-12);
        // "above" only appeared in two runs
        assert_eq!(agg.per_relation["above"].runs, 2);
        assert!((agg.per_relation["above"].mean - 0.45).abs() < 1e-12);
        assert!(matches!(aggregate_runs(&[]), Err(EvalError::NoReports)));
    }

    #[test]
    fn json_report_roundtrips() {
        let gold_rows = vec![gold("left of", true), gold("touching", false)];
        let predictions = vec![rule(true), random(true, FailureReason::UnmappedRelation)];
        let report = evaluate(&predictions, &gold_rows, VsrLexicon::builtin()).unwrap();
        let text = report_json(&report);
        let back: EvalReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        // identical input, identical bytes
        assert_eq!(text, report_json(&back));
    }

    #[test]
    fn csv_is_sorted_and_filtered() {
        let report = report_with(
            0.5,
            &[
                ("above", 20, 0.25),
                ("left of", 30, 0.5),
                ("under", 20, 0.75),
                ("rare", 3, 1.0),
            ],
        );
        let full = report_csv(&report, None);
        assert_eq!(
            full,
            "relation,n,accuracy\n\
             left of,30,0.500000\n\
             above,20,0.250000\n\
             under,20,0.750000\n\
             rare,3,1.000000\n"
        );
        let cut = report_csv(&report, Some(15));
        assert!(!cut.contains("rare"));
        assert_eq!(cut.lines().count(), 4);
        // the cut is strict: a group with exactly the threshold count drops
        let edge = report_csv(&report, Some(20));
        assert_eq!(edge.lines().count(), 2);
    }

    #[test]
    fn aggregates_render() {
        let runs = vec![
            report_with(0.7, &[("left of", 10, 0.6)]),
            report_with(0.8, &[("left of", 10, 0.8)]),
        ];
        let agg = aggregate_runs(&runs).unwrap();
        let json = aggregates_json(&agg);
        let back: RunAggregates = serde_json::from_str(&json).unwrap();
        assert_eq!(back, agg);
        let csv = aggregates_csv(&agg);
        assert_eq!(csv, "relation,runs,mean,std\nleft of,2,0.700000,0.100000\n");
    }
}
