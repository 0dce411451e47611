//! Behavioral anomaly detection over the scheduler's job log.
//!
//! Six per-user features are extracted from a time window, a one-class
//! kernel boundary is fit to normal users, and flagged users are either
//! isolated (their jobs always run alone) or pushed to the back of the queue.

mod features;
mod svm;
pub mod synthetic;

pub use features::{extract_all, extract_features, JobLog, JobRecord, UserFeatures, Window, NUM_FEATURES};
pub use svm::{score, train, AnomalyModel, Scaler, SupportPoint, DEFAULT_NU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheduler::FairShareQueue;

/// Decision values below this are anomalous.
pub const THRESHOLD: f64 = 0.0;

/// Added on top of the current maximum usage when deprioritizing.
pub const DEPRIORITIZE_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponsePolicy {
    Isolate,
    Deprioritize,
}

/// Applies `policy` to every pending job of `user`.
pub fn respond(queue: &mut FairShareQueue, user: &str, policy: ResponsePolicy) -> Result<()> {
    if queue.is_empty() {
        return Ok(());
    }
    if !queue.jobs.iter().any(|j| j.user == user) {
        return Err(Error::Argument(format!("user {user:?} has no jobs in the queue")));
    }
    match policy {
        ResponsePolicy::Isolate => {
            for j in queue.jobs.iter_mut().filter(|j| j.user == user) {
                j.solo = true;
            }
        }
        ResponsePolicy::Deprioritize => {
            let max = queue
                .jobs
                .iter()
                .filter(|j| j.user != user)
                .map(|j| j.usage_score)
                .fold(0.0, f64::max);
            for j in queue.jobs.iter_mut().filter(|j| j.user == user) {
                j.usage_score = max + DEPRIORITIZE_EPSILON;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::hardware::CouplingGraph;
    use crate::scheduler::{fair_share_order, Job, SchedulerConfig};

    fn queue() -> FairShareQueue {
        let c = |s| Circuit::random(2, 10, 0.5, s).unwrap();
        FairShareQueue::new(vec![
            Job::new("a1", "adv", c(0), 0.0, 0).unwrap(),
            Job::new("v1", "vic", c(1), 0.2, 1).unwrap(),
            Job::new("a2", "adv", c(2), 0.1, 2).unwrap(),
            Job::new("v2", "vic", c(3), 0.3, 3).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn isolate_separates_users() {
        let g = CouplingGraph::line5();
        let mut q = queue();
        respond(&mut q, "adv", ResponsePolicy::Isolate).unwrap();
        let cfg = SchedulerConfig {
            depth_tolerance: 10.0,
            ..SchedulerConfig::default()
        };
        while !q.is_empty() {
            let b = q.select_batch(&g, None, &cfg);
            let users: std::collections::BTreeSet<&str> =
                b.entries.iter().map(|e| e.job.user.as_str()).collect();
            assert!(!(users.contains("adv") && users.contains("vic")));
        }
    }

    #[test]
    fn deprioritize_moves_user_last() {
        let mut q = queue();
        respond(&mut q, "adv", ResponsePolicy::Deprioritize).unwrap();
        let order: Vec<String> = fair_share_order(q.jobs.clone()).into_iter().map(|j| j.user).collect();
        assert_eq!(order, ["vic", "vic", "adv", "adv"]);
    }

    #[test]
    fn empty_and_unknown() {
        let mut empty = FairShareQueue::default();
        respond(&mut empty, "x", ResponsePolicy::Isolate).unwrap();
        assert!(empty.is_empty());
        assert!(respond(&mut queue(), "nobody", ResponsePolicy::Isolate).is_err());
    }
}
