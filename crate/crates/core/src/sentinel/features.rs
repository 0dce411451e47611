use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::scheduler::Priority;

pub const NUM_FEATURES: usize = 6;

/// One executed job as recorded by the scheduler. Times are in hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub user: String,
    pub job_id: String,
    pub submit: f64,
    pub finish: f64,
    pub priority: Priority,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested: Option<Vec<usize>>,
    #[serde(default)]
    pub granted: Vec<usize>,
}

impl JobRecord {
    fn duration(&self) -> f64 {
        self.finish - self.submit
    }

    fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.requested.iter().flatten().chain(&self.granted).copied()
    }
}

/// Half-open interval `[start, start + hours)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub hours: f64,
}

impl Window {
    pub fn days(start: f64, days: f64) -> Self {
        Window {
            start,
            hours: days * 24.0,
        }
    }

    fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.start + self.hours
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JobLog {
    pub records: Vec<JobRecord>,
}

impl JobLog {
    pub fn users(&self) -> BTreeSet<String> {
        self.records.iter().map(|r| r.user.clone()).collect()
    }

    /// Smallest window covering every submission.
    pub fn span(&self) -> Window {
        let lo = self.records.iter().map(|r| r.submit).fold(f64::INFINITY, f64::min);
        let hi = self.records.iter().map(|r| r.submit).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            return Window::days(0.0, 1.0);
        }
        Window {
            start: lo,
            hours: (hi - lo).max(24.0) + 1e-9,
        }
    }
}

/// Per-user behavior vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct UserFeatures<T: Real> {
    /// Jobs per day.
    pub request_frequency: T,
    /// Most of the user's jobs pending at one instant.
    pub concurrency: T,
    /// Mean of +1 (high), 0 (medium), −1 (low).
    pub priority_skew: T,
    /// Coefficient of variation of the gaps between submissions, taken
    /// cyclically over the window so that evenly spread activity scores 0.
    pub activity_burstiness: T,
    /// Share of cross-priority job pairs where the lower priority finished faster.
    pub duration_priority_inversion: T,
    /// Share of jobs whose explicit qubit request overlaps another user's
    /// qubits while both are pending.
    pub contention_rate: T,
}

impl<T: Real> UserFeatures<T> {
    pub fn to_array(&self) -> [T; NUM_FEATURES] {
        [
            self.request_frequency,
            self.concurrency,
            self.priority_skew,
            self.activity_burstiness,
            self.duration_priority_inversion,
            self.contention_rate,
        ]
    }

    pub fn from_array(a: [T; NUM_FEATURES]) -> Self {
        UserFeatures {
            request_frequency: a[0],
            concurrency: a[1],
            priority_skew: a[2],
            activity_burstiness: a[3],
            duration_priority_inversion: a[4],
            contention_rate: a[5],
        }
    }
}

fn rank(p: Priority) -> i32 {
    match p {
        Priority::High => 1,
        Priority::Medium => 0,
        Priority::Low => -1,
    }
}

fn intervals_overlap(a: &JobRecord, b: &JobRecord) -> bool {
    a.submit < b.finish && b.submit < a.finish
}

/// Features of `user` from records submitted inside `window`.
pub fn extract_features<T: Real>(log: &JobLog, user: &str, window: Window) -> UserFeatures<T> {
    let mut mine: Vec<&JobRecord> = log
        .records
        .iter()
        .filter(|r| r.user == user && window.contains(r.submit))
        .collect();
    if mine.is_empty() {
        return UserFeatures::default();
    }
    mine.sort_by(|a, b| a.submit.total_cmp(&b.submit));
    let others: Vec<&JobRecord> = log
        .records
        .iter()
        .filter(|r| r.user != user && window.contains(r.submit))
        .collect();
    let n = mine.len() as f64;

    let request_frequency = n / (window.hours / 24.0);

    let mut events: Vec<(f64, i32)> = mine
        .iter()
        .flat_map(|r| [(r.submit, 1), (r.finish.max(r.submit), -1)])
        .collect();
    // Ends sort before starts at the same instant.
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (mut live, mut concurrency) = (0i32, 0i32);
    for (_, d) in events {
        live += d;
        concurrency = concurrency.max(live);
    }

    let priority_skew = mine.iter().map(|r| rank(r.priority) as f64).sum::<f64>() / n;

    let gaps: Vec<f64> = (0..mine.len())
        .map(|i| {
            if i + 1 < mine.len() {
                mine[i + 1].submit - mine[i].submit
            } else {
                mine[0].submit + window.hours - mine[i].submit
            }
        })
        .collect();
    let gm = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let gv = gaps.iter().map(|g| (g - gm) * (g - gm)).sum::<f64>() / gaps.len() as f64;
    let activity_burstiness = if gm > 0.0 { gv.sqrt() / gm } else { 0.0 };

    let (mut pairs, mut inverted) = (0usize, 0usize);
    for (i, a) in mine.iter().enumerate() {
        for b in &mine[i + 1..] {
            let (hi, lo) = match rank(a.priority).cmp(&rank(b.priority)) {
                std::cmp::Ordering::Greater => (a, b),
                std::cmp::Ordering::Less => (b, a),
                std::cmp::Ordering::Equal => continue,
            };
            pairs += 1;
            if lo.duration() < hi.duration() {
                inverted += 1;
            }
        }
    }
    let duration_priority_inversion = if pairs > 0 { inverted as f64 / pairs as f64 } else { 0.0 };

    let contended = mine
        .iter()
        .filter(|r| {
            let Some(req) = &r.requested else { return false };
            others.iter().any(|o| {
                intervals_overlap(r, o) && o.qubits().any(|q| req.contains(&q))
            })
        })
        .count();
    let contention_rate = contended as f64 / n;

    UserFeatures {
        request_frequency: T::of(request_frequency),
        concurrency: T::of(concurrency as f64),
        priority_skew: T::of(priority_skew),
        activity_burstiness: T::of(activity_burstiness),
        duration_priority_inversion: T::of(duration_priority_inversion),
        contention_rate: T::of(contention_rate),
    }
}

/// Features of every user appearing in the log, keyed by user.
pub fn extract_all<T: Real>(log: &JobLog, window: Window) -> BTreeMap<String, UserFeatures<T>> {
    log.users()
        .into_iter()
        .map(|u| {
            let f = extract_features(log, &u, window);
            (u, f)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(user: &str, i: usize, submit: f64, finish: f64, p: Priority) -> JobRecord {
        JobRecord {
            user: user.into(),
            job_id: format!("{user}-{i}"),
            submit,
            finish,
            priority: p,
            requested: None,
            granted: vec![],
        }
    }

    #[test]
    fn evenly_spaced_uniform_user() {
        let ps = [Priority::High, Priority::Medium, Priority::Low];
        let records: Vec<JobRecord> = (0..15)
            .map(|i| {
                let t = i as f64 * 24.0 / 5.0;
                rec("u", i, t, t + 1.0, ps[i % 3])
            })
            .collect();
        let log = JobLog { records };
        let f: UserFeatures<f64> = extract_features(&log, "u", Window::days(0.0, 3.0));
        assert!((f.request_frequency - 5.0).abs() < 1e-12);
        assert!(f.priority_skew.abs() < 1e-12);
        assert!(f.activity_burstiness.abs() < 1e-9);
        assert_eq!(f.concurrency, 1.0);
        assert_eq!(f.contention_rate, 0.0);
    }

    #[test]
    fn single_burst() {
        let records: Vec<JobRecord> = (0..50).map(|i| rec("b", i, 1.0, 2.0, Priority::High)).collect();
        let log = JobLog { records };
        let f: UserFeatures<f64> = extract_features(&log, "b", Window::days(0.0, 1.0));
        assert!((f.request_frequency - 50.0).abs() < 1e-12);
        assert!(f.activity_burstiness > 1.0, "{}", f.activity_burstiness);
        assert_eq!(f.concurrency, 50.0);
        assert_eq!(f.priority_skew, 1.0);
    }

    #[test]
    fn empty_history_is_zero() {
        let f: UserFeatures<f32> = extract_features(&JobLog::default(), "x", Window::days(0.0, 1.0));
        assert_eq!(f, UserFeatures::default());
    }

    #[test]
    fn inversion_and_contention() {
        let mut a_hi = rec("a", 0, 0.0, 5.0, Priority::High);
        let a_lo = rec("a", 1, 0.0, 1.0, Priority::Low);
        a_hi.requested = Some(vec![3]);
        let mut b = rec("b", 0, 2.0, 3.0, Priority::Medium);
        b.granted = vec![3, 4];
        let log = JobLog {
            records: vec![a_hi, a_lo, b],
        };
        let f: UserFeatures<f64> = extract_features(&log, "a", Window::days(0.0, 1.0));
        assert_eq!(f.duration_priority_inversion, 1.0);
        assert_eq!(f.contention_rate, 0.5);
        let fb: UserFeatures<f64> = extract_features(&log, "b", Window::days(0.0, 1.0));
        assert_eq!(fb.contention_rate, 0.0);
    }

    #[test]
    fn window_filters_records() {
        let log = JobLog {
            records: vec![rec("u", 0, 1.0, 2.0, Priority::Low), rec("u", 1, 30.0, 31.0, Priority::Low)],
        };
        let f: UserFeatures<f64> = extract_features(&log, "u", Window::days(0.0, 1.0));
        assert_eq!(f.request_frequency, 1.0);
        assert_eq!(extract_all::<f64>(&log, Window::days(0.0, 2.0)).len(), 1);
    }
}
