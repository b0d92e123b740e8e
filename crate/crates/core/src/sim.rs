//! Discrete-event model of the device/cloud pipeline.
//!
//! Stages form a DAG. Every stage starts as soon as all of its dependencies
//! have finished (branches run with unbounded parallelism), so the schedule is
//! the longest-path schedule of the graph and the end-to-end latency is the
//! length of its critical path.

use std::collections::HashMap;

use statrs::distribution::{ContinuousCDF, LogNormal, Normal, Uniform};

use crate::error::{Error, Result};

/// Name of the stage where all branches join by default.
pub const DEFAULT_JOIN: &str = "mmllm";
pub const STR_BRANCH: &str = "str";
pub const TRANSFER_BRANCH: &str = "transfer";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimMode {
    #[default]
    Cpu,
    HardwareAccelerated,
}

impl SimMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SimMode::Cpu => "cpu",
            SimMode::HardwareAccelerated => "hardware_accelerated",
        }
    }
}

/// A value that is either shared by both execution modes or given per mode.
#[derive(Debug, Clone, PartialEq)]
pub enum ByMode<T> {
    Same(T),
    PerMode { cpu: T, accelerated: T },
}

impl<T> ByMode<T> {
    pub fn get(&self, mode: SimMode) -> &T {
        match (self, mode) {
            (ByMode::Same(v), _) => v,
            (ByMode::PerMode { cpu, .. }, SimMode::Cpu) => cpu,
            (ByMode::PerMode { accelerated, .. }, SimMode::HardwareAccelerated) => accelerated,
        }
    }
}

/// Which captured image a transfer stage moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload {
    Full,
    Thumbnail,
    Bytes(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std_dev: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl Distribution {
    fn quantile(&self, q: f64) -> Result<f64> {
        let bad = |e: statrs::StatsError| Error::invalid(format!("bad distribution: {e}"));
        Ok(match *self {
            Distribution::Uniform { low, high } => Uniform::new(low, high).map_err(bad)?.inverse_cdf(q),
            Distribution::Normal { mean, std_dev } => Normal::new(mean, std_dev).map_err(bad)?.inverse_cdf(q),
            Distribution::LogNormal { mu, sigma } => LogNormal::new(mu, sigma).map_err(bad)?.inverse_cdf(q),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LatencyModel {
    Fixed(f64),
    /// Linear in the scenario's word count.
    PerWord(f64),
    /// `batch_ms` measured for `batch_words` words, scaled linearly.
    PerBatch { batch_ms: f64, batch_words: f64 },
    /// `bytes / bandwidth + rtt`.
    Transfer {
        payload: Payload,
        bytes_per_ms: f64,
        rtt_ms: f64,
    },
    /// A distribution evaluated at a fixed quantile.
    Quantile { distribution: Distribution, q: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageCost {
    pub name: String,
    pub latency: ByMode<LatencyModel>,
    pub energy_mwh: ByMode<f64>,
    pub depends_on: Vec<String>,
    /// Parallel branch this stage belongs to (`"str"`, `"transfer"`, ...).
    pub branch: Option<String>,
}

impl StageCost {
    pub fn fixed(name: &str, latency_ms: f64, depends_on: &[&str]) -> Self {
        StageCost {
            name: name.to_string(),
            latency: ByMode::Same(LatencyModel::Fixed(latency_ms)),
            energy_mwh: ByMode::Same(0.0),
            depends_on: depends_on.iter().map(|s| s.to_string()).collect(),
            branch: None,
        }
    }

    pub fn in_branch(mut self, branch: &str) -> Self {
        self.branch = Some(branch.to_string());
        self
    }

    pub fn with_energy(mut self, mwh: f64) -> Self {
        self.energy_mwh = ByMode::Same(mwh);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub name: String,
    pub stages: Vec<StageCost>,
    pub word_count: u64,
    pub image_bytes_full: f64,
    pub image_bytes_thumb: f64,
    pub mode: SimMode,
    /// Stage every root must reach.
    pub join: String,
}

impl SimScenario {
    pub fn new(stages: Vec<StageCost>) -> Self {
        SimScenario {
            name: String::new(),
            stages,
            word_count: 100,
            image_bytes_full: 0.0,
            image_bytes_thumb: 0.0,
            mode: SimMode::Cpu,
            join: DEFAULT_JOIN.to_string(),
        }
    }

    pub fn stage(&self, name: &str) -> Option<&StageCost> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn stage_mut(&mut self, name: &str) -> Option<&mut StageCost> {
        self.stages.iter_mut().find(|s| s.name == name)
    }

    /// Latency of a stage under the scenario's mode and word count.
    pub fn latency_of(&self, stage: &StageCost) -> Result<f64> {
        let words = self.word_count as f64;
        let ms = match stage.latency.get(self.mode) {
            LatencyModel::Fixed(v) => *v,
            LatencyModel::PerWord(v) => v * words,
            LatencyModel::PerBatch { batch_ms, batch_words } => {
                if !(*batch_words > 0.0) {
                    return Err(Error::invalid(format!("stage {}: batch size must be > 0", stage.name)));
                }
                batch_ms * words / batch_words
            }
            LatencyModel::Transfer {
                payload,
                bytes_per_ms,
                rtt_ms,
            } => {
                if !(*bytes_per_ms > 0.0) {
                    return Err(Error::invalid(format!("stage {}: bandwidth must be > 0", stage.name)));
                }
                let bytes = match payload {
                    Payload::Full => self.image_bytes_full,
                    Payload::Thumbnail => self.image_bytes_thumb,
                    Payload::Bytes(b) => *b,
                };
                bytes / bytes_per_ms + rtt_ms
            }
            LatencyModel::Quantile { distribution, q } => {
                if !(0.0..=1.0).contains(q) {
                    return Err(Error::invalid(format!("stage {}: quantile outside [0, 1]", stage.name)));
                }
                distribution.quantile(*q)?.max(0.0)
            }
        };
        if !(ms >= 0.0 && ms.is_finite()) {
            return Err(Error::invalid(format!("stage {}: latency {ms} is not a finite non-negative time", stage.name)));
        }
        Ok(ms)
    }

    /// Stage indices in a dependency-respecting order (ties by declaration).
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.stages.len();
        let mut index: HashMap<&str, usize> = HashMap::with_capacity(n);
        for (i, s) in self.stages.iter().enumerate() {
            if index.insert(s.name.as_str(), i).is_some() {
                return Err(Error::invalid(format!("duplicate stage name {:?}", s.name)));
            }
        }
        let mut indegree = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for (i, s) in self.stages.iter().enumerate() {
            for d in &s.depends_on {
                let &j = index
                    .get(d.as_str())
                    .ok_or_else(|| Error::invalid(format!("stage {:?} depends on unknown stage {d:?}", s.name)))?;
                indegree[i] += 1;
                children[j].push(i);
            }
        }
        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != n {
            return Err(Error::invalid("stage dependencies contain a cycle"));
        }
        Ok(order)
    }

    /// Checks the graph is a DAG whose roots all reach the join stage.
    pub fn validate(&self) -> Result<()> {
        let order = self.topological_order()?;
        let join = self
            .stages
            .iter()
            .position(|s| s.name == self.join)
            .ok_or_else(|| Error::invalid(format!("scenario has no join stage {:?}", self.join)))?;
        // Reverse reachability from the join.
        let mut reaches = vec![false; self.stages.len()];
        reaches[join] = true;
        for &i in order.iter().rev() {
            if reaches[i] {
                for d in &self.stages[i].depends_on {
                    let j = self.stages.iter().position(|s| &s.name == d).unwrap();
                    reaches[j] = true;
                }
            }
        }
        for (i, s) in self.stages.iter().enumerate() {
            if s.depends_on.is_empty() && !reaches[i] {
                return Err(Error::invalid(format!("root stage {:?} never reaches {:?}", s.name, self.join)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub stage: String,
    pub start_ms: f64,
    pub end_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// One event per stage, in declaration order.
    pub trace: Vec<TraceEvent>,
    pub e2e_ms: f64,
    pub critical_path: Vec<String>,
    pub energy_mwh: f64,
}

impl SimResult {
    pub fn event(&self, stage: &str) -> Option<&TraceEvent> {
        self.trace.iter().find(|e| e.stage == stage)
    }
}

/// Longest-path schedule of the scenario.
pub fn simulate(s: &SimScenario) -> Result<SimResult> {
    s.validate()?;
    let order = s.topological_order()?;
    let n = s.stages.len();
    let index: HashMap<&str, usize> = s.stages.iter().enumerate().map(|(i, st)| (st.name.as_str(), i)).collect();

    let mut start = vec![0.0f64; n];
    let mut end = vec![0.0f64; n];
    // Predecessor on the longest path into each stage.
    let mut via: Vec<Option<usize>> = vec![None; n];
    for &i in &order {
        let stage = &s.stages[i];
        for d in &stage.depends_on {
            let j = index[d.as_str()];
            if via[i].is_none() || end[j] > start[i] {
                start[i] = end[j];
                via[i] = Some(j);
            }
        }
        end[i] = start[i] + s.latency_of(stage)?;
    }

    let mut energy = 0.0;
    for stage in &s.stages {
        let e = *stage.energy_mwh.get(s.mode);
        if !(e >= 0.0 && e.is_finite()) {
            return Err(Error::invalid(format!("stage {}: energy must be finite and >= 0", stage.name)));
        }
        energy += e;
    }

    // Ties go to the stage latest in topological order.
    let mut last = order.first().copied().unwrap_or(0);
    for &i in &order {
        if end[i] >= end[last] {
            last = i;
        }
    }
    let mut critical_path = Vec::new();
    if n > 0 {
        let mut cur = Some(last);
        while let Some(i) = cur {
            critical_path.push(s.stages[i].name.clone());
            cur = via[i];
        }
        critical_path.reverse();
    }

    Ok(SimResult {
        trace: s
            .stages
            .iter()
            .enumerate()
            .map(|(i, st)| TraceEvent {
                stage: st.name.clone(),
                start_ms: start[i],
                end_ms: end[i],
            })
            .collect(),
        e2e_ms: if n > 0 { end[last] } else { 0.0 },
        critical_path,
        energy_mwh: energy,
    })
}

/// Time between the earliest start and the latest end of a branch's stages.
pub fn branch_span(s: &SimScenario, result: &SimResult, branch: &str) -> Result<(f64, f64)> {
    let mut span: Option<(f64, f64)> = None;
    for (st, ev) in s.stages.iter().zip(&result.trace) {
        if st.branch.as_deref() == Some(branch) {
            span = Some(match span {
                None => (ev.start_ms, ev.end_ms),
                Some((a, b)) => (a.min(ev.start_ms), b.max(ev.end_ms)),
            });
        }
    }
    span.ok_or_else(|| Error::invalid(format!("scenario has no {branch:?} branch")))
}

/// Wall-clock latency of a branch under the scenario.
pub fn branch_latency(s: &SimScenario, branch: &str) -> Result<f64> {
    let r = simulate(s)?;
    let (a, b) = branch_span(s, &r, branch)?;
    Ok(b - a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiddenLatency {
    /// Removing the STR branch would not change end-to-end latency.
    pub hidden: bool,
    /// Transfer-branch finish minus STR-branch finish.
    pub slack_ms: f64,
    pub e2e_ms: f64,
    pub e2e_without_str_ms: f64,
}

/// Whether on-device STR finishes in the shadow of the image transfer.
pub fn str_latency_hidden(s: &SimScenario) -> Result<HiddenLatency> {
    let with = simulate(s)?;
    let (_, str_end) = branch_span(s, &with, STR_BRANCH)?;
    let (_, transfer_end) = branch_span(s, &with, TRANSFER_BRANCH)?;

    // Zeroing the branch keeps the graph intact while removing its cost.
    let mut without = s.clone();
    for st in &mut without.stages {
        if st.branch.as_deref() == Some(STR_BRANCH) {
            st.latency = ByMode::Same(LatencyModel::Fixed(0.0));
        }
    }
    let e2e_without = simulate(&without)?.e2e_ms;
    Ok(HiddenLatency {
        hidden: with.e2e_ms == e2e_without,
        slack_ms: transfer_end - str_end,
        e2e_ms: with.e2e_ms,
        e2e_without_str_ms: e2e_without,
    })
}

/// Average recognizer cost per word crop.
pub fn per_word_recognition_ms(total_ms: f64, words: u64) -> Result<f64> {
    if words == 0 {
        return Err(Error::invalid("word count must be at least 1"));
    }
    Ok(total_ms / words as f64)
}
