//! Irregular multivariate functional data: per-subject, per-variable series
//! with their own timestamps, grouped into covariate and response channels.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Interval;

/// Minimum number of distinct pooled observation times per channel.
pub const MIN_DISTINCT_TIMES: usize = 10;
/// Minimum fraction of the domain the pooled times must span.
pub const MIN_SPAN_FRACTION: f64 = 0.9;

/// One variable observed on one subject: strictly increasing times and their values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeriesRepr")]
pub struct ObservationSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct SeriesRepr {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<SeriesRepr> for ObservationSeries {
    type Error = Error;

    fn try_from(r: SeriesRepr) -> Result<Self> {
        ObservationSeries::new(r.times, r.values)
    }
}

impl ObservationSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::BadSeries(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::BadSeries("series is empty".into()));
        }
        if let Some(bad) = times.iter().chain(&values).find(|v| !v.is_finite()) {
            return Err(Error::BadSeries(format!("non-finite entry {bad}")));
        }
        if let Some(w) = times.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::BadSeries(format!(
                "times not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Same times, values replaced by `f(t, y)`.
    pub fn map_values(&self, mut f: impl FnMut(f64, f64) -> f64) -> ObservationSeries {
        let values = self.iter().map(|(t, y)| f(t, y)).collect();
        ObservationSeries {
            times: self.times.clone(),
            values,
        }
    }

    /// Keeps the observations whose index satisfies `keep`; errors if none remain.
    pub fn filter(&self, mut keep: impl FnMut(usize) -> bool) -> Result<ObservationSeries> {
        let (times, values): (Vec<f64>, Vec<f64>) =
            self.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, p)| p).unzip();
        ObservationSeries::new(times, values)
    }

    /// Linear interpolation at `t`, constant beyond the first/last observation.
    pub fn interpolate(&self, t: f64) -> f64 {
        crate::grid::interpolate_scattered(&self.times, &self.values, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Covariate,
    Response,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Covariate => "covariate",
            Role::Response => "response",
        }
    }
}

impl core::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "covariate" => Ok(Role::Covariate),
            "response" => Ok(Role::Response),
            other => Err(Error::BadSeries(format!("unknown role {other:?}"))),
        }
    }
}

/// One long-format observation row.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub subject: String,
    pub variable: String,
    pub role: Role,
    pub time: f64,
    pub value: f64,
}

/// Declared channels and domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub covariates: Vec<String>,
    pub responses: Vec<String>,
    pub covariate_domain: Interval,
    pub response_domain: Interval,
}

impl Schema {
    fn lookup(&self, variable: &str) -> Option<(Role, usize)> {
        if let Some(i) = self.covariates.iter().position(|v| v == variable) {
            return Some((Role::Covariate, i));
        }
        self.responses
            .iter()
            .position(|v| v == variable)
            .map(|i| (Role::Response, i))
    }

    fn validate(&self) -> Result<()> {
        if self.covariates.is_empty() || self.responses.is_empty() {
            return Err(Error::BadConfig(
                "schema needs at least one covariate and one response".into(),
            ));
        }
        let mut seen = BTreeMap::new();
        for v in self.covariates.iter().chain(&self.responses) {
            if seen.insert(v.as_str(), ()).is_some() {
                return Err(Error::BadConfig(format!("variable {v:?} declared twice")));
            }
        }
        Ok(())
    }
}

/// N subjects, each with R covariate series on S and (optionally) D response series on T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalDataset {
    covariate_domain: Interval,
    response_domain: Interval,
    subject_ids: Vec<String>,
    covariate_names: Vec<String>,
    response_names: Vec<String>,
    /// `[subject][channel]`
    covariates: Vec<Vec<ObservationSeries>>,
    /// `[subject][channel]`; absent for prediction-only data.
    responses: Option<Vec<Vec<ObservationSeries>>>,
}

impl FunctionalDataset {
    /// Validates and assembles a dataset.
    ///
    /// With responses present this is a training dataset: N >= 2 and every
    /// channel must pass the pooled coverage check. Prediction-only datasets
    /// (`responses == None`) need N >= 1 and skip the coverage check, since no
    /// smoothing is run on them.
    pub fn new(
        schema: &Schema,
        subject_ids: Vec<String>,
        covariates: Vec<Vec<ObservationSeries>>,
        responses: Option<Vec<Vec<ObservationSeries>>>,
    ) -> Result<Self> {
        let ds = Self::assemble(schema, subject_ids, covariates, responses)?;
        if ds.responses.is_some() {
            if ds.n_subjects() < 2 {
                return Err(Error::TooFewSubjects {
                    needed: 2,
                    got: ds.n_subjects(),
                });
            }
            ds.check_coverage()?;
        }
        Ok(ds)
    }

    fn assemble(
        schema: &Schema,
        subject_ids: Vec<String>,
        covariates: Vec<Vec<ObservationSeries>>,
        responses: Option<Vec<Vec<ObservationSeries>>>,
    ) -> Result<Self> {
        if schema.covariates.is_empty() {
            return Err(Error::BadConfig("no covariate channels".into()));
        }
        if responses.is_some() && schema.responses.is_empty() {
            return Err(Error::BadConfig("no response channels".into()));
        }
        if subject_ids.is_empty() {
            return Err(Error::TooFewSubjects { needed: 1, got: 0 });
        }
        let n = subject_ids.len();
        if covariates.len() != n || responses.as_ref().is_some_and(|r| r.len() != n) {
            return Err(Error::ShapeMismatch(format!(
                "{n} subject ids but series for a different number of subjects"
            )));
        }
        let check = |rows: &[Vec<ObservationSeries>], names: &[String], dom: Interval| {
            for (i, row) in rows.iter().enumerate() {
                if row.len() != names.len() {
                    return Err(Error::ChannelCountMismatch {
                        expected: names.len(),
                        got: row.len(),
                    });
                }
                for (s, name) in row.iter().zip(names) {
                    if let Some(&t) = s.times().iter().find(|&&t| !dom.contains(t)) {
                        return Err(Error::DomainViolation {
                            subject: subject_ids[i].clone(),
                            variable: name.clone(),
                            time: t,
                            lo: dom.lo(),
                            hi: dom.hi(),
                        });
                    }
                }
            }
            Ok(())
        };
        check(&covariates, &schema.covariates, schema.covariate_domain)?;
        if let Some(r) = &responses {
            check(r, &schema.responses, schema.response_domain)?;
        }
        let mut seen = BTreeMap::new();
        for id in &subject_ids {
            if seen.insert(id.as_str(), ()).is_some() {
                return Err(Error::BadConfig(format!("subject {id:?} listed twice")));
            }
        }
        Ok(Self {
            covariate_domain: schema.covariate_domain,
            response_domain: schema.response_domain,
            subject_ids,
            covariate_names: schema.covariates.clone(),
            response_names: schema.responses.clone(),
            covariates,
            responses,
        })
    }

    /// Groups long-format records by (subject, variable) and validates.
    ///
    /// Subjects keep the order of their first appearance. If no response
    /// rows are present at all the result is a prediction-only dataset.
    pub fn from_records(schema: &Schema, records: impl IntoIterator<Item = Record>) -> Result<Self> {
        schema.validate()?;
        let mut order: Vec<String> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut groups: BTreeMap<(usize, Role, usize), Vec<(f64, f64)>> = BTreeMap::new();
        let mut any_response = false;
        for rec in records {
            let (role, channel) = schema
                .lookup(&rec.variable)
                .ok_or_else(|| Error::UnknownVariable(rec.variable.clone()))?;
            if role != rec.role {
                return Err(Error::RoleMismatch {
                    variable: rec.variable,
                    declared: role.as_str(),
                    found: rec.role.as_str(),
                });
            }
            let domain = match role {
                Role::Covariate => schema.covariate_domain,
                Role::Response => schema.response_domain,
            };
            if !rec.time.is_finite() || !domain.contains(rec.time) {
                return Err(Error::DomainViolation {
                    subject: rec.subject,
                    variable: rec.variable,
                    time: rec.time,
                    lo: domain.lo(),
                    hi: domain.hi(),
                });
            }
            if !rec.value.is_finite() {
                return Err(Error::BadSeries(format!(
                    "non-finite value for subject {:?}, variable {:?}",
                    rec.subject, rec.variable
                )));
            }
            any_response |= role == Role::Response;
            let subject = match index.get(&rec.subject) {
                Some(&i) => i,
                None => {
                    index.insert(rec.subject.clone(), order.len());
                    order.push(rec.subject.clone());
                    order.len() - 1
                }
            };
            groups
                .entry((subject, role, channel))
                .or_default()
                .push((rec.time, rec.value));
        }
        if order.is_empty() {
            return Err(Error::TooFewSubjects { needed: 1, got: 0 });
        }

        let mut take = |subject: usize, role: Role, names: &[String]| -> Result<Vec<ObservationSeries>> {
            names
                .iter()
                .enumerate()
                .map(|(c, name)| {
                    let mut pts = groups.remove(&(subject, role, c)).ok_or_else(|| {
                        Error::MissingChannel {
                            subject: order[subject].clone(),
                            variable: name.clone(),
                        }
                    })?;
                    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                    if let Some(w) = pts.windows(2).find(|w| w[0].0 == w[1].0) {
                        return Err(Error::DuplicateTimestamp {
                            subject: order[subject].clone(),
                            variable: name.clone(),
                            time: w[0].0,
                        });
                    }
                    let (t, v) = pts.into_iter().unzip();
                    ObservationSeries::new(t, v)
                })
                .collect()
        };
        let mut covariates = Vec::with_capacity(order.len());
        let mut responses = Vec::with_capacity(order.len());
        for i in 0..order.len() {
            covariates.push(take(i, Role::Covariate, &schema.covariates)?);
            if any_response {
                responses.push(take(i, Role::Response, &schema.responses)?);
            }
        }
        Self::new(schema, order, covariates, any_response.then_some(responses))
    }

    fn check_coverage(&self) -> Result<()> {
        let check = |names: &[String], dom: Interval, blocks: &[Vec<ObservationSeries>]| {
            for (c, name) in names.iter().enumerate() {
                let mut pooled: Vec<f64> = (0..self.n_subjects())
                    .flat_map(|i| blocks[i][c].times().iter().copied())
                    .collect();
                pooled.sort_by(f64::total_cmp);
                pooled.dedup();
                let span = match (pooled.first(), pooled.last()) {
                    (Some(a), Some(b)) => (b - a) / dom.length(),
                    _ => 0.0,
                };
                if pooled.len() < MIN_DISTINCT_TIMES || span < MIN_SPAN_FRACTION {
                    return Err(Error::InsufficientCoverage {
                        variable: name.clone(),
                        distinct: pooled.len(),
                        span_fraction: span,
                        min_distinct: MIN_DISTINCT_TIMES,
                        min_span: MIN_SPAN_FRACTION,
                    });
                }
            }
            Ok(())
        };
        check(&self.covariate_names, self.covariate_domain, &self.covariates)?;
        if let Some(r) = &self.responses {
            check(&self.response_names, self.response_domain, r)?;
        }
        Ok(())
    }

    pub fn schema(&self) -> Schema {
        Schema {
            covariates: self.covariate_names.clone(),
            responses: self.response_names.clone(),
            covariate_domain: self.covariate_domain,
            response_domain: self.response_domain,
        }
    }

    pub fn n_subjects(&self) -> usize {
        self.subject_ids.len()
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn response_names(&self) -> &[String] {
        &self.response_names
    }

    pub fn covariate_domain(&self) -> Interval {
        self.covariate_domain
    }

    pub fn response_domain(&self) -> Interval {
        self.response_domain
    }

    pub fn has_responses(&self) -> bool {
        self.responses.is_some()
    }

    /// All covariate series of one subject, in channel order.
    pub fn subject_covariates(&self, subject: usize) -> &[ObservationSeries] {
        &self.covariates[subject]
    }

    pub fn subject_responses(&self, subject: usize) -> Option<&[ObservationSeries]> {
        self.responses.as_ref().map(|r| r[subject].as_slice())
    }

    /// One covariate channel across all subjects.
    pub fn covariate_channel(&self, channel: usize) -> Vec<&ObservationSeries> {
        self.covariates.iter().map(|row| &row[channel]).collect()
    }

    pub fn response_channel(&self, channel: usize) -> Option<Vec<&ObservationSeries>> {
        self.responses
            .as_ref()
            .map(|r| r.iter().map(|row| &row[channel]).collect())
    }

    /// Same subjects and covariates, responses dropped.
    pub fn without_responses(&self) -> FunctionalDataset {
        FunctionalDataset {
            responses: None,
            ..self.clone()
        }
    }

    /// Subjects at `indices`, in that order. Skips the coverage check: a
    /// subset of a validated dataset is used for prediction or evaluation.
    pub fn subset(&self, indices: &[usize]) -> Result<FunctionalDataset> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_subjects()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.n_subjects(),
            });
        }
        let pick = |rows: &Vec<Vec<ObservationSeries>>| indices.iter().map(|&i| rows[i].clone()).collect();
        Self::assemble(
            &self.schema(),
            indices.iter().map(|&i| self.subject_ids[i].clone()).collect(),
            pick(&self.covariates),
            self.responses.as_ref().map(pick),
        )
    }

    /// Re-validates a subset as a training dataset (N >= 2, coverage).
    pub fn training_subset(&self, indices: &[usize]) -> Result<FunctionalDataset> {
        let s = self.subset(indices)?;
        Self::new(&s.schema(), s.subject_ids, s.covariates, s.responses)
    }

    /// Seeded subject-level split into (train, test) index lists. The test
    /// set holds `round(test_fraction * N)` subjects.
    pub fn split_indices(&self, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
        if !(0.0..=0.5).contains(&test_fraction) {
            return Err(Error::BadConfig(format!(
                "test fraction {test_fraction} outside [0, 0.5]"
            )));
        }
        let n = self.n_subjects();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_test = libm::round(test_fraction * n as f64) as usize;
        let mut test = idx[..n_test].to_vec();
        let mut train = idx[n_test..].to_vec();
        test.sort_unstable();
        train.sort_unstable();
        Ok((train, test))
    }

    /// Long-format records, subjects in order, covariates before responses.
    pub fn records(&self) -> Vec<Record> {
        let mut out = Vec::new();
        for (i, id) in self.subject_ids.iter().enumerate() {
            let mut push = |role: Role, names: &[String], row: &[ObservationSeries]| {
                for (name, s) in names.iter().zip(row) {
                    for (time, value) in s.iter() {
                        out.push(Record {
                            subject: id.clone(),
                            variable: name.clone(),
                            role,
                            time,
                            value,
                        });
                    }
                }
            };
            push(Role::Covariate, &self.covariate_names, &self.covariates[i]);
            if let Some(r) = &self.responses {
                push(Role::Response, &self.response_names, &r[i]);
            }
        }
        out
    }

    /// Response series as a [`CurveSet`] (for evaluation).
    pub fn response_curves(&self) -> Option<CurveSet> {
        self.responses.as_ref().map(|r| CurveSet {
            channels: self.response_names.clone(),
            subjects: self.subject_ids.clone(),
            curves: r.clone(),
        })
    }

    /// Copy with every series transformed by `f(subject, role, channel, series)`.
    pub fn map_series(
        &self,
        mut f: impl FnMut(usize, Role, usize, &ObservationSeries) -> Result<ObservationSeries>,
    ) -> Result<FunctionalDataset> {
        let mut map_rows = |role: Role, rows: &Vec<Vec<ObservationSeries>>| -> Result<Vec<Vec<ObservationSeries>>> {
            rows.iter()
                .enumerate()
                .map(|(i, row)| row.iter().enumerate().map(|(c, s)| f(i, role, c, s)).collect())
                .collect()
        };
        let covariates = map_rows(Role::Covariate, &self.covariates)?;
        let responses = match &self.responses {
            Some(r) => Some(map_rows(Role::Response, r)?),
            None => None,
        };
        Self::new(&self.schema(), self.subject_ids.clone(), covariates, responses)
    }
}

/// Named curves per subject and channel, as used for predictions and truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    pub channels: Vec<String>,
    pub subjects: Vec<String>,
    /// `[subject][channel]`
    pub curves: Vec<Vec<ObservationSeries>>,
}

impl CurveSet {
    /// Builds from `(subject, variable, time, value)` rows; subjects keep
    /// first-appearance order, channels are sorted by name.
    pub fn from_points(points: impl IntoIterator<Item = (String, String, f64, f64)>) -> Result<Self> {
        let mut subjects: Vec<String> = Vec::new();
        let mut sidx: BTreeMap<String, usize> = BTreeMap::new();
        let mut groups: BTreeMap<(usize, String), Vec<(f64, f64)>> = BTreeMap::new();
        for (s, v, t, y) in points {
            let i = *sidx.entry(s.clone()).or_insert_with(|| {
                subjects.push(s.clone());
                subjects.len() - 1
            });
            groups.entry((i, v)).or_default().push((t, y));
        }
        let channels: Vec<String> = {
            let mut c: Vec<String> = groups.keys().map(|(_, v)| v.clone()).collect();
            c.sort();
            c.dedup();
            c
        };
        let mut curves = Vec::with_capacity(subjects.len());
        for (i, id) in subjects.iter().enumerate() {
            let mut row = Vec::with_capacity(channels.len());
            for ch in &channels {
                let mut pts = groups.remove(&(i, ch.clone())).ok_or_else(|| Error::MissingChannel {
                    subject: id.clone(),
                    variable: ch.clone(),
                })?;
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                if let Some(w) = pts.windows(2).find(|w| w[0].0 == w[1].0) {
                    return Err(Error::DuplicateTimestamp {
                        subject: id.clone(),
                        variable: ch.to_string(),
                        time: w[0].0,
                    });
                }
                let (t, y) = pts.into_iter().unzip();
                row.push(ObservationSeries::new(t, y)?);
            }
            curves.push(row);
        }
        Ok(Self {
            channels,
            subjects,
            curves,
        })
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }

    pub fn subject_index(&self, id: &str) -> Option<usize> {
        self.subjects.iter().position(|s| s == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn schema() -> Schema {
        Schema {
            covariates: vec!["x1".into()],
            responses: vec!["y1".into()],
            covariate_domain: Interval::new(0.0, 1.0).unwrap(),
            response_domain: Interval::new(0.0, 1.0).unwrap(),
        }
    }

    fn rec(s: &str, v: &str, role: Role, t: f64, y: f64) -> Record {
        Record {
            subject: s.into(),
            variable: v.into(),
            role,
            time: t,
            value: y,
        }
    }

    /// Two subjects, five covariate and five response times each: ten distinct pooled times.
    fn records() -> Vec<Record> {
        let mut out = Vec::new();
        for (s, off) in [("a", 0.0), ("b", 0.1)] {
            for k in 0..5 {
                let t = off + 0.225 * k as f64;
                out.push(rec(s, "x1", Role::Covariate, t, t * 2.0));
                out.push(rec(s, "y1", Role::Response, t, -t));
            }
        }
        out
    }

    #[test]
    fn series_invariants() {
        assert!(ObservationSeries::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(ObservationSeries::new(vec![], vec![]).is_err());
        assert!(ObservationSeries::new(vec![0.5, 0.5], vec![1.0, 2.0]).is_err());
        assert!(ObservationSeries::new(vec![0.6, 0.5], vec![1.0, 2.0]).is_err());
        assert!(ObservationSeries::new(vec![0.1, 0.5], vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn builds_from_unordered_records() {
        let mut r = records();
        r.reverse();
        let ds = FunctionalDataset::from_records(&schema(), r).unwrap();
        assert_eq!(ds.n_subjects(), 2);
        assert_eq!(ds.subject_ids(), &["b".to_string(), "a".to_string()]);
        let s = &ds.subject_covariates(1)[0];
        assert_eq!(s.len(), 5);
        assert!(s.times().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn prediction_only_when_no_response_rows() {
        let r: Vec<Record> = records().into_iter().filter(|r| r.role == Role::Covariate).collect();
        let ds = FunctionalDataset::from_records(&schema(), r).unwrap();
        assert!(!ds.has_responses());
    }

    #[test]
    fn validation_errors() {
        let mut r = records();
        r.push(rec("a", "x1", Role::Covariate, 1.5, 0.0));
        assert!(matches!(
            FunctionalDataset::from_records(&schema(), r),
            Err(Error::DomainViolation { .. })
        ));

        let mut r = records();
        r.push(rec("a", "x1", Role::Covariate, 0.225, 9.0));
        assert!(matches!(
            FunctionalDataset::from_records(&schema(), r),
            Err(Error::DuplicateTimestamp { .. })
        ));

        let mut r = records();
        r.push(rec("c", "x1", Role::Covariate, 0.3, 0.0));
        r.push(rec("c", "y1", Role::Response, 0.3, 0.0));
        r.retain(|x| !(x.subject == "c" && x.variable == "y1"));
        assert!(matches!(
            FunctionalDataset::from_records(&schema(), r),
            Err(Error::MissingChannel { .. })
        ));

        let mut r = records();
        r.push(rec("a", "z", Role::Covariate, 0.3, 0.0));
        assert!(matches!(
            FunctionalDataset::from_records(&schema(), r),
            Err(Error::UnknownVariable(_))
        ));

        let mut r = records();
        r.push(rec("a", "y1", Role::Covariate, 0.31, 0.0));
        assert!(matches!(
            FunctionalDataset::from_records(&schema(), r),
            Err(Error::RoleMismatch { .. })
        ));

        let r: Vec<Record> = records().into_iter().filter(|r| r.subject == "a").collect();
        assert!(matches!(
            FunctionalDataset::from_records(&schema(), r),
            Err(Error::TooFewSubjects { .. })
        ));
    }

    #[test]
    fn coverage_check() {
        // nine distinct pooled times
        let mut r = Vec::new();
        for (s, off) in [("a", 0.0), ("b", 0.05)] {
            for k in 0..5 {
                let t = (off + 0.24 * k as f64).min(1.0);
                if s == "b" && k == 4 {
                    continue;
                }
                r.push(rec(s, "x1", Role::Covariate, t, 0.0));
                r.push(rec(s, "y1", Role::Response, t, 0.0));
            }
        }
        assert!(matches!(
            FunctionalDataset::from_records(&schema(), r),
            Err(Error::InsufficientCoverage { distinct: 9, .. })
        ));

        // enough points, but only spanning half the domain
        let mut r = Vec::new();
        for (s, off) in [("a", 0.0), ("b", 0.01)] {
            for k in 0..6 {
                let t = off + 0.09 * k as f64;
                r.push(rec(s, "x1", Role::Covariate, t, 0.0));
                r.push(rec(s, "y1", Role::Response, t * 2.0, 0.0));
            }
        }
        assert!(matches!(
            FunctionalDataset::from_records(&schema(), r),
            Err(Error::InsufficientCoverage { ref variable, .. }) if variable == "x1"
        ));
    }

    #[test]
    fn records_round_trip() {
        let ds = FunctionalDataset::from_records(&schema(), records()).unwrap();
        let again = FunctionalDataset::from_records(&schema(), ds.records()).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn split_is_seeded_partition() {
        let ds = FunctionalDataset::from_records(&schema(), records()).unwrap();
        let (tr, te) = ds.split_indices(0.5, 3).unwrap();
        assert_eq!(tr.len() + te.len(), 2);
        assert_eq!(te.len(), 1);
        assert_eq!(ds.split_indices(0.5, 3).unwrap(), (tr, te));
        assert!(ds.split_indices(0.6, 3).is_err());
    }
}
