//! Placement and delivery for vector coded caching.
//!
//! Users are split into `Λ` groups of `B` users; every user of group `g`
//! caches the subfiles whose index set contains `g`. Delivery walks every
//! `(t+1)`-subset `Ψ` of groups and, in each round, serves `Q` users from each
//! group of `Ψ` at once, sending user `(ψ, b)` the subfile of its demand
//! labelled `Ψ \ {ψ}`.
//!
//! Indices for files, groups, users and slots are 1-based throughout, and
//! subsets are always sorted and enumerated in lexicographic order.

use std::collections::BTreeMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `C(n, k)` without overflow for the sizes of interest.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// All `k`-subsets of `{1, …, n}` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (1..=n).combinations(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheLayout {
    /// Number of cache states `Λ`.
    pub lambda: usize,
    /// Subfile index size `t = Λγ`.
    pub t: usize,
    /// Library size `N`.
    pub n_files: usize,
    /// Users per cache state `B = K/Λ`.
    pub users_per_group: usize,
}

impl CacheLayout {
    pub fn new(lambda: usize, t: usize, n_files: usize, users_per_group: usize) -> Result<Self> {
        let layout = CacheLayout {
            lambda,
            t,
            n_files,
            users_per_group,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::Layout("t = Λγ must be at least 1".into()));
        }
        if self.t >= self.lambda {
            return Err(Error::Layout(format!(
                "t = {} must be smaller than Λ = {}",
                self.t, self.lambda
            )));
        }
        if self.users_per_group == 0 {
            return Err(Error::Layout("B = K/Λ must be at least 1".into()));
        }
        if self.n_files == 0 {
            return Err(Error::Layout("library must hold at least one file".into()));
        }
        Ok(())
    }

    /// Layout for `k` users; rejects `k` not divisible by `Λ`.
    pub fn for_users(lambda: usize, t: usize, n_files: usize, k: usize) -> Result<Self> {
        if lambda == 0 || !k.is_multiple_of(lambda) {
            return Err(Error::Layout(format!("K = {k} is not divisible by Λ = {lambda}")));
        }
        Self::new(lambda, t, n_files, k / lambda)
    }

    pub fn users(&self) -> usize {
        self.lambda * self.users_per_group
    }

    /// Groups served per stage, `G = t + 1`.
    pub fn caching_gain(&self) -> usize {
        self.t + 1
    }

    /// Normalised cache size `γ = t/Λ`.
    pub fn gamma(&self) -> f64 {
        self.t as f64 / self.lambda as f64
    }

    /// Subfiles per file, `C(Λ, t)`, without enumerating them.
    pub fn subfiles_per_file(&self) -> u64 {
        binomial(self.lambda as u64, self.t as u64)
    }

    /// Subfiles of each file held by one cache state, `C(Λ−1, t−1)`.
    pub fn cached_per_file(&self) -> u64 {
        binomial(self.lambda as u64 - 1, self.t as u64 - 1)
    }

    pub fn stage_count(&self) -> u64 {
        binomial(self.lambda as u64, self.caching_gain() as u64)
    }

    /// Cache state (group) of a 1-based user id.
    pub fn group_of(&self, user: usize) -> usize {
        (user - 1) / self.users_per_group + 1
    }

    /// Users of group `g`, ascending.
    pub fn users_in_group(&self, g: usize) -> impl Iterator<Item = usize> {
        let b = self.users_per_group;
        (g - 1) * b + 1..=g * b
    }
}

/// Label of subfile `W_n^𝒯`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubfileLabel {
    pub file_index: usize,
    pub index_set: Vec<usize>,
}

/// All subfile labels of one file in lexicographic order of their index sets.
pub fn split_file(layout: &CacheLayout, file_index: usize) -> Result<Vec<SubfileLabel>> {
    layout.validate()?;
    if file_index == 0 || file_index > layout.n_files {
        return Err(Error::Layout(format!(
            "file index {file_index} outside [1, {}]",
            layout.n_files
        )));
    }
    Ok(subsets(layout.lambda, layout.t)
        .map(|index_set| SubfileLabel { file_index, index_set })
        .collect())
}

/// Content of one cache state: every subfile whose index set contains it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheState {
    pub g: usize,
}

impl CacheState {
    pub fn contains(&self, label: &SubfileLabel) -> bool {
        label.index_set.binary_search(&self.g).is_ok()
    }
}

pub fn cache_contents(layout: &CacheLayout, g: usize) -> Result<CacheState> {
    layout.validate()?;
    if g == 0 || g > layout.lambda {
        return Err(Error::Layout(format!("cache state {g} outside [1, {}]", layout.lambda)));
    }
    Ok(CacheState { g })
}

/// Delivery stages: the `G`-subsets of `[Λ]`, lexicographic.
pub fn enumerate_stages(layout: &CacheLayout) -> Vec<Vec<usize>> {
    subsets(layout.lambda, layout.caching_gain()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub group: usize,
    pub slot: usize,
    pub user: usize,
    pub subfile: SubfileLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub assignments: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub groups: Vec<usize>,
    pub rounds: Vec<Round>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliverySchedule {
    pub g: usize,
    pub q: usize,
    pub stages: Vec<Stage>,
}

impl DeliverySchedule {
    pub fn rounds(&self) -> impl Iterator<Item = &Round> {
        self.stages.iter().flat_map(|s| s.rounds.iter())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialises")
    }
}

/// Requested file per user; entry `k − 1` holds user `k`'s demand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demands(pub Vec<usize>);

impl Demands {
    /// User `k` requests file `k`.
    pub fn identity(k: usize) -> Self {
        Demands((1..=k).collect())
    }

    pub fn of(&self, user: usize) -> usize {
        self.0[user - 1]
    }

    pub fn validate(&self, layout: &CacheLayout) -> Result<()> {
        let k = layout.users();
        if self.0.len() != k {
            return Err(Error::Schedule(format!(
                "demands cover {} users, layout has K = {k}",
                self.0.len()
            )));
        }
        if let Some(&bad) = self.0.iter().find(|&&d| d == 0 || d > layout.n_files) {
            return Err(Error::Schedule(format!(
                "requested file {bad} outside [1, {}]",
                layout.n_files
            )));
        }
        if !self.0.iter().all_unique() {
            return Err(Error::Schedule("users must request distinct files".into()));
        }
        Ok(())
    }
}

pub fn build_schedule(layout: &CacheLayout, q: usize, demands: &Demands) -> Result<DeliverySchedule> {
    layout.validate()?;
    let b = layout.users_per_group;
    if q == 0 {
        return Err(Error::Schedule("Q must be at least 1".into()));
    }
    if q > b {
        return Err(Error::Schedule(format!("Q = {q} exceeds B = {b} users per group")));
    }
    if !b.is_multiple_of(q) {
        return Err(Error::Schedule(format!("B = {b} is not divisible by Q = {q}")));
    }
    demands.validate(layout)?;

    let rounds_per_stage = b / q;
    let stages = enumerate_stages(layout)
        .into_iter()
        .map(|psi| {
            let rounds = (0..rounds_per_stage)
                .map(|r| {
                    let assignments = psi
                        .iter()
                        .flat_map(|&group| {
                            let index_set: Vec<usize> = psi.iter().copied().filter(|&g| g != group).collect();
                            (1..=q).map(move |slot| {
                                let user = (group - 1) * b + r * q + slot;
                                Assignment {
                                    group,
                                    slot,
                                    user,
                                    subfile: SubfileLabel {
                                        file_index: demands.of(user),
                                        index_set: index_set.clone(),
                                    },
                                }
                            })
                        })
                        .collect();
                    Round { assignments }
                })
                .collect();
            Stage { groups: psi, rounds }
        })
        .collect();

    Ok(DeliverySchedule {
        g: layout.caching_gain(),
        q,
        stages,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelIssue {
    pub user: usize,
    pub subfile: SubfileLabel,
    /// Times the label was delivered to this user.
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub complete: bool,
    pub users_checked: usize,
    /// Subfiles each user still needs after placement, `C(Λ−1, t)`.
    pub needed_per_user: u64,
    pub deliveries: usize,
    pub missing: Vec<LabelIssue>,
    pub duplicated: Vec<LabelIssue>,
    /// Deliveries of a label the user did not need (wrong file or cached).
    pub extraneous: Vec<LabelIssue>,
}

/// Check that every user ends up with every subfile of its demand, each
/// missing one delivered exactly once.
pub fn verify_completeness(schedule: &DeliverySchedule, layout: &CacheLayout, demands: &Demands) -> VerificationReport {
    let mut received: BTreeMap<usize, BTreeMap<SubfileLabel, usize>> = BTreeMap::new();
    let mut deliveries = 0;
    for a in schedule.rounds().flat_map(|r| r.assignments.iter()) {
        *received
            .entry(a.user)
            .or_default()
            .entry(a.subfile.clone())
            .or_default() += 1;
        deliveries += 1;
    }

    let mut report = VerificationReport {
        users_checked: layout.users(),
        needed_per_user: binomial(layout.lambda as u64 - 1, layout.t as u64),
        deliveries,
        ..Default::default()
    };
    let empty = BTreeMap::new();
    for user in 1..=layout.users() {
        let cache = CacheState {
            g: layout.group_of(user),
        };
        let file = demands.of(user);
        let got = received.get(&user).unwrap_or(&empty);
        let needed: Vec<SubfileLabel> = subsets(layout.lambda, layout.t)
            .map(|index_set| SubfileLabel {
                file_index: file,
                index_set,
            })
            .filter(|l| !cache.contains(l))
            .collect();
        for label in &needed {
            match got.get(label).copied().unwrap_or(0) {
                0 => report.missing.push(LabelIssue {
                    user,
                    subfile: label.clone(),
                    count: 0,
                }),
                1 => {}
                n => report.duplicated.push(LabelIssue {
                    user,
                    subfile: label.clone(),
                    count: n,
                }),
            }
        }
        for (label, &count) in got {
            if label.file_index != file || cache.contains(label) {
                report.extraneous.push(LabelIssue {
                    user,
                    subfile: label.clone(),
                    count,
                });
            }
        }
    }
    report.complete = report.missing.is_empty() && report.duplicated.is_empty() && report.extraneous.is_empty();
    report
}
