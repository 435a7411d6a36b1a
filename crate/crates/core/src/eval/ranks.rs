use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::records::{Criterion, Method, ResultRow};
use super::stats::{average_ranks_of, holm_correction, wilcoxon};
use crate::{Error, Result};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Mean over cases of per-case ranks; within a case the best value gets rank
/// `k` and ties share their average rank. `cases[c][m]` is method `m` in case `c`.
pub fn average_ranks(cases: &[Vec<f64>]) -> Vec<f64> {
    let k = cases.first().map_or(0, Vec::len);
    let mut sum = vec![0.0; k];
    for case in cases {
        for (s, r) in sum.iter_mut().zip(average_ranks_of(case)) {
            *s += r;
        }
    }
    sum.into_iter().map(|s| s / cases.len() as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub first: Method,
    pub second: Method,
    /// Number of nonzero paired differences.
    pub n: usize,
    pub p_value: f64,
    pub adjusted: f64,
    /// Positive when `first` tends to score higher.
    pub direction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub criterion: Criterion,
    pub snr_db: f64,
    pub cases: usize,
    pub methods: Vec<Method>,
    pub ranks: Vec<f64>,
    pub means: Vec<f64>,
    /// For each method, the methods it beats significantly after Holm adjustment.
    pub better_than: Vec<Vec<Method>>,
    pub tests: Vec<PairTest>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankTable {
    pub rows: Vec<RankRow>,
}

impl RankTable {
    pub fn row(&self, criterion: Criterion, snr_db: f64) -> Option<&RankRow> {
        self.rows.iter().find(|r| r.criterion == criterion && r.snr_db == snr_db)
    }

    pub fn methods(&self) -> Vec<Method> {
        self.rows.first().map(|r| r.methods.clone()).unwrap_or_default()
    }

    pub fn snrs(&self) -> Vec<f64> {
        let mut v: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !v.contains(&r.snr_db) {
                v.push(r.snr_db);
            }
        }
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Ranks and pairwise tests for one group of cases.
pub fn rank_group(criterion: Criterion, snr_db: f64, methods: &[Method], cases: &[Vec<f64>]) -> Result<RankRow> {
    let k = methods.len();
    if cases.iter().any(|c| c.len() != k) {
        return Err(Error::invalid("every case needs a value for every method"));
    }
    let ranks = average_ranks(cases);
    let column = |m: usize| cases.iter().map(|c| c[m]).collect::<Vec<f64>>();
    let means = (0..k).map(|m| column(m).iter().sum::<f64>() / cases.len() as f64).collect();

    let mut tests = Vec::new();
    let mut raw = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let w = wilcoxon(&column(i), &column(j))?;
            raw.push(w.p_value);
            tests.push(PairTest {
                first: methods[i],
                second: methods[j],
                n: w.n,
                p_value: w.p_value,
                adjusted: 0.0,
                direction: w.w_plus - w.w_minus,
            });
        }
    }
    for (t, a) in tests.iter_mut().zip(holm_correction(&raw)) {
        t.adjusted = a;
    }
    let mut better_than = vec![Vec::new(); k];
    for t in &tests {
        if t.adjusted < SIGNIFICANCE_LEVEL && t.direction != 0.0 {
            let (win, lose) = if t.direction > 0.0 { (t.first, t.second) } else { (t.second, t.first) };
            let wi = methods.iter().position(|m| *m == win).expect("method in group");
            better_than[wi].push(lose);
        }
    }
    Ok(RankRow { criterion, snr_db, cases: cases.len(), methods: methods.to_vec(), ranks, means, better_than, tests })
}

/// Groups result rows by (criterion, SNR) and ranks methods over (repeat, fold) cases.
pub fn rank_table(rows: &[ResultRow]) -> Result<RankTable> {
    let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();

    type Cases = BTreeMap<(usize, usize), BTreeMap<Method, f64>>;
    let mut groups: BTreeMap<(Criterion, u64), (f64, Cases)> = BTreeMap::new();
    for r in rows {
        let key = (r.criterion, snr_key(r.snr_db));
        let (_, cases) = groups.entry(key).or_insert_with(|| (r.snr_db, BTreeMap::new()));
        if cases.entry((r.repeat, r.fold)).or_default().insert(r.method, r.value).is_some() {
            return Err(Error::invalid(format!(
                "duplicate result for {} at {} dB ({}) fold {} repeat {}",
                r.method, r.snr_db, r.criterion, r.fold, r.repeat
            )));
        }
    }

    let mut table = RankTable::default();
    for ((criterion, _), (snr_db, cases)) in groups {
        let mut matrix = Vec::with_capacity(cases.len());
        for ((repeat, fold), values) in cases {
            let mut row = Vec::with_capacity(methods.len());
            for m in &methods {
                let v = values.get(m).ok_or_else(|| {
                    Error::invalid(format!(
                        "method {m} missing at {snr_db} dB ({criterion}) fold {fold} repeat {repeat}"
                    ))
                })?;
                row.push(*v);
            }
            matrix.push(row);
        }
        table.rows.push(rank_group(criterion, snr_db, &methods, &matrix)?);
    }
    let small = table.rows.iter().flat_map(|r| &r.tests).filter(|t| t.n < 5).count();
    if small > 0 {
        log::warn!("{small} pairwise tests rest on fewer than 5 nonzero differences; their p-values cannot reach 0.05");
    }
    Ok(table)
}

// Orders SNR values numerically with +inf last.
fn snr_key(snr: f64) -> u64 {
    let bits = snr.to_bits();
    if snr.is_sign_negative() {
        !bits
    } else {
        bits | (1 << 63)
    }
}
