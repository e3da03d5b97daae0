//! Fully resolved runs. A job holds every input that affects its outputs,
//! so executing the same job always produces the same bytes.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use slotgame_core::capture::converse::{converse_checks, near_optimal_interval, ConverseReport};
use slotgame_core::capture::CaptureEstimate;
use slotgame_core::multichannel::{
    optimize_three_user_two_channel, simulate_multichannel, sweep_full, sweep_restricted,
    three_user_beta_theta, two_user_capture_time_for, ChannelPolicyParams, OptimizerSettings,
    SubsetDistribution, SweepPoint, ThreeUserOptimum,
};
use slotgame_core::tournament::{dump_transcripts, Entrant};
use slotgame_core::{
    alpha_optimal, beta3, beta4, expected_y, merit_report, parse_strategy, run_tournament,
    simulate_capture, solve_capture_table, Horizon, ScoreMatrix, TournamentConfig,
};

/// One output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

impl Artifact {
    fn text(name: &str, contents: String) -> Self {
        Self {
            name: name.to_owned(),
            contents: contents.into_bytes(),
        }
    }

    fn json(name: &str, value: &impl Serialize) -> Result<Self> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        Ok(Self::text(name, s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    Tournament(TournamentJob),
    Analytics(AnalyticsJob),
    CaptureSolve(CaptureSolveJob),
    CaptureSimulate(CaptureSimulateJob),
    CaptureConverse(CaptureConverseJob),
    MultichannelOptimize(MultichannelOptimizeJob),
    MultichannelSimulate(MultichannelSimulateJob),
    MultichannelSweep(MultichannelSweepJob),
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Tournament(_) => "tournament",
            Job::Analytics(_) => "analytics",
            Job::CaptureSolve(_) => "capture solve",
            Job::CaptureSimulate(_) => "capture simulate",
            Job::CaptureConverse(_) => "capture converse",
            Job::MultichannelOptimize(_) => "multichannel optimize",
            Job::MultichannelSimulate(_) => "multichannel simulate",
            Job::MultichannelSweep(_) => "multichannel sweep",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Job::Tournament(j) => Some(j.seed),
            Job::CaptureSimulate(j) => Some(j.seed),
            Job::CaptureConverse(j) => Some(j.seed),
            Job::MultichannelSimulate(j) => Some(j.seed),
            _ => None,
        }
    }

    pub fn execute(&self) -> Result<Vec<Artifact>> {
        match self {
            Job::Tournament(j) => j.execute(),
            Job::Analytics(j) => j.execute(),
            Job::CaptureSolve(j) => j.execute(),
            Job::CaptureSimulate(j) => j.execute(),
            Job::CaptureConverse(j) => j.execute(),
            Job::MultichannelOptimize(j) => j.execute(),
            Job::MultichannelSimulate(j) => j.execute(),
            Job::MultichannelSweep(j) => j.execute(),
        }
    }
}

/// A strategy file's text, embedded so the run does not depend on the
/// file still existing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntrantSource {
    pub origin: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentJob {
    pub entrants: Vec<EntrantSource>,
    pub horizon: u32,
    pub runs: u64,
    pub seed: u64,
    pub dump_transcripts: bool,
    pub emit_plot_data: bool,
}

fn cell(mean: f64, stderr: f64) -> String {
    format!("{mean:.6}±{stderr:.6}")
}

fn matrix_csv(m: &ScoreMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["entrant".to_owned()];
    header.extend(m.names.iter().cloned());
    header.push("total".to_owned());
    w.write_record(&header)?;
    for (i, name) in m.names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(m.entries[i].iter().map(|e| cell(e.mean, e.stderr)));
        row.push(format!("{:.6}", m.totals[i]));
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

impl TournamentJob {
    pub fn config(&self) -> Result<TournamentConfig> {
        let entrants = self
            .entrants
            .iter()
            .map(|e| {
                parse_strategy(&e.source)
                    .map(Entrant::from)
                    .with_context(|| format!("invalid strategy in {}", e.origin))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TournamentConfig::new(
            entrants,
            Horizon::new(self.horizon)?,
            self.runs,
            self.seed,
        ))
    }

    fn execute(&self) -> Result<Vec<Artifact>> {
        let config = self.config()?;
        let matrix = run_tournament(&config)?;
        let report = merit_report(&matrix);
        if !report.beta_defined() {
            eprintln!("warning: no entrant never transmits; beta is undefined");
        }
        let mut out = vec![
            Artifact::text("scores.csv", matrix_csv(&matrix)?),
            Artifact::json("merit.json", &report)?,
        ];
        if self.dump_transcripts {
            out.push(Artifact::json(
                "transcripts.json",
                &dump_transcripts(&config)?,
            )?);
        }
        if self.emit_plot_data {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["entrant", "figure", "mean", "stderr"])?;
            for r in &report.rows {
                w.write_record([
                    &r.name,
                    "alpha",
                    &r.alpha.mean.to_string(),
                    &r.alpha.stderr.to_string(),
                ])?;
                if let Some(b) = r.beta {
                    w.write_record([&r.name, "beta", &b.mean.to_string(), &b.stderr.to_string()])?;
                }
                w.write_record([&r.name, "gamma", &r.gamma.to_string(), ""])?;
            }
            out.push(Artifact::text(
                "merit_plot.csv",
                String::from_utf8(w.into_inner()?)?,
            ));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsJob {
    pub t_min: u32,
    pub t_max: u32,
    pub emit_plot_data: bool,
}

impl AnalyticsJob {
    fn execute(&self) -> Result<Vec<Artifact>> {
        if self.t_min == 0 || self.t_min > self.t_max {
            bail!(
                "need 1 <= t-min <= t-max, got {}..{}",
                self.t_min,
                self.t_max
            );
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["T", "alpha", "beta4", "beta3", "expected_y", "limiting"])?;
        let mut tidy = String::from("T,series,value\n");
        for t in self.t_min..=self.t_max {
            let h = Horizon::new(t)?;
            let forms = [
                ("alpha", alpha_optimal(h)),
                ("beta4", beta4(h)),
                ("beta3", beta3(h)),
                ("expected_y", expected_y(h)),
            ];
            let mut row = vec![t.to_string()];
            for (series, f) in &forms {
                row.push(f.to_f64().to_string());
                let _ = writeln!(tidy, "{t},{series},{}", f.to_f64());
            }
            row.push(forms[0].1.is_limiting().to_string());
            w.write_record(&row)?;
        }
        let mut out = vec![Artifact::text(
            "analytics.csv",
            String::from_utf8(w.into_inner()?)?,
        )];
        if self.emit_plot_data {
            out.push(Artifact::text("analytics_plot.csv", tidy));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureSolveJob {
    pub n_max: usize,
    pub tol: f64,
    pub emit_plot_data: bool,
}

impl CaptureSolveJob {
    fn execute(&self) -> Result<Vec<Artifact>> {
        let table = solve_capture_table(self.n_max, self.tol)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "p", "z"])?;
        let mut tidy = String::from("n,quantity,value\n");
        for r in table.rows() {
            w.write_record([
                r.n.to_string(),
                format!("{:.9}", r.p),
                format!("{:.9}", r.z),
            ])?;
            let _ = writeln!(tidy, "{},p,{}\n{},z,{}", r.n, r.p, r.n, r.z);
        }
        let mut out = vec![Artifact::text(
            "capture_table.csv",
            String::from_utf8(w.into_inner()?)?,
        )];
        if self.emit_plot_data {
            out.push(Artifact::text("capture_plot.csv", tidy));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureSimulateJob {
    pub n: usize,
    pub episodes: u64,
    pub seed: u64,
    pub max_slots: u64,
    pub tol: f64,
}

#[derive(Serialize)]
struct CaptureSimulation {
    n: usize,
    p: f64,
    z: f64,
    #[serde(flatten)]
    simulated: CaptureEstimate,
}

impl CaptureSimulateJob {
    fn execute(&self) -> Result<Vec<Artifact>> {
        let table = solve_capture_table(self.n.max(1), self.tol)?;
        let simulated = simulate_capture(self.n, &table, self.episodes, self.seed, self.max_slots)?;
        let report = CaptureSimulation {
            n: self.n,
            p: table.p(self.n),
            z: table.z(self.n),
            simulated,
        };
        Ok(vec![Artifact::json("capture_simulation.json", &report)?])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureConverseJob {
    pub n_max: usize,
    pub episodes: u64,
    pub seed: u64,
    pub max_slots: u64,
    pub tol: f64,
}

#[derive(Serialize)]
struct IntervalRow {
    n: usize,
    p: f64,
    lower: f64,
    upper: f64,
}

#[derive(Serialize)]
struct ConverseOutput {
    #[serde(flatten)]
    report: ConverseReport,
    near_optimal_intervals: Vec<IntervalRow>,
}

impl CaptureConverseJob {
    fn execute(&self) -> Result<Vec<Artifact>> {
        let table = solve_capture_table(self.n_max, self.tol)?;
        let report = converse_checks(&table, self.episodes, self.seed, self.max_slots)?;
        let near_optimal_intervals = table
            .rows()
            .filter(|r| r.n >= 2)
            .map(|r| {
                let (lower, upper) = near_optimal_interval(r.n);
                IntervalRow {
                    n: r.n,
                    p: r.p,
                    lower,
                    upper,
                }
            })
            .collect();
        Ok(vec![Artifact::json(
            "converse.json",
            &ConverseOutput {
                report,
                near_optimal_intervals,
            },
        )?])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultichannelOptimizeJob {
    pub settings: OptimizerSettings,
}

impl MultichannelOptimizeJob {
    fn execute(&self) -> Result<Vec<Artifact>> {
        let optimum: ThreeUserOptimum = optimize_three_user_two_channel(self.settings);
        Ok(vec![Artifact::json("multichannel_optimum.json", &optimum)?])
    }
}

/// Per-user, per-slot channel choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChannelPolicy {
    /// Each of `channels` channels used independently with probability `p`.
    Independent { p: f64, channels: usize },
    /// Two channels, `(p, q, r)` parameterization.
    Correlated { p: f64, q: f64, r: f64 },
}

impl ChannelPolicy {
    pub fn distribution(&self) -> Result<SubsetDistribution> {
        Ok(match *self {
            ChannelPolicy::Independent { p, channels } => {
                SubsetDistribution::independent(p, channels)?
            }
            ChannelPolicy::Correlated { p, q, r } => {
                SubsetDistribution::from_params(ChannelPolicyParams::new(p, q, r)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultichannelSimulateJob {
    pub users: usize,
    pub policy: ChannelPolicy,
    pub episodes: u64,
    pub seed: u64,
    pub max_slots: u64,
}

#[derive(Serialize)]
struct MultichannelSimulation<'a> {
    users: usize,
    policy: &'a ChannelPolicy,
    /// Value predicted from the first slot's statistics.
    predicted: f64,
    #[serde(flatten)]
    simulated: CaptureEstimate,
}

impl MultichannelSimulateJob {
    fn execute(&self) -> Result<Vec<Artifact>> {
        let dist = self.policy.distribution()?;
        let predicted = match self.users {
            2 => two_user_capture_time_for(&dist),
            3 => three_user_beta_theta(&dist).renewal_value(),
            n => bail!("multichannel simulation supports 2 or 3 users, got {n}"),
        };
        let simulated =
            simulate_multichannel(&dist, self.users, self.episodes, self.seed, self.max_slots)?;
        Ok(vec![Artifact::json(
            "multichannel_simulation.json",
            &MultichannelSimulation {
                users: self.users,
                policy: &self.policy,
                predicted,
                simulated,
            },
        )?])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepFamily {
    Restricted,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultichannelSweepJob {
    pub family: SweepFamily,
    pub steps: usize,
}

impl MultichannelSweepJob {
    fn execute(&self) -> Result<Vec<Artifact>> {
        if self.steps < 2 {
            bail!("sweep needs at least 2 steps");
        }
        let points: Vec<SweepPoint> = match self.family {
            SweepFamily::Restricted => sweep_restricted(self.steps),
            SweepFamily::Full => sweep_full(self.steps),
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["p", "q", "r", "beta", "theta", "z"])?;
        for pt in points {
            w.write_record([
                pt.params.p.to_string(),
                pt.params.q.to_string(),
                pt.params.r.to_string(),
                pt.beta_theta.beta.to_string(),
                pt.beta_theta.theta.to_string(),
                pt.z.to_string(),
            ])?;
        }
        Ok(vec![Artifact::text(
            "multichannel_sweep.csv",
            String::from_utf8(w.into_inner()?)?,
        )])
    }
}
