use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::rows::{
    appender, encode_weights, existing_keys, read_rows, write_all, ResultRow, TimingRow,
};
use crate::conic::InteriorPoint;
use crate::design::{solve_design, DesignOptions, Method};
use crate::error::{Error, Result};
use crate::extract::Source;
use crate::model::{outage_estimate_vec, sample_channel, ChannelScenario, EvalMode, SystemParams};
use crate::rng::{derive_seed, streams, GaussianSource};
use crate::tightness::{check_dominance, in_window, interior_grid, rho_window, GaussianQuadratic};

/// Channels solved between two appends to `design.csv`.
const CHUNK: usize = 16;

pub const BIN_LABELS: [&str; 11] = [
    "(0.999,1.000]",
    "(0.998,0.999]",
    "(0.997,0.998]",
    "(0.996,0.997]",
    "(0.995,0.996]",
    "(0.994,0.995]",
    "(0.993,0.994]",
    "(0.992,0.993]",
    "(0.991,0.992]",
    "(0.990,0.991]",
    "[0.000,0.990]",
];

/// Bin index of a satisfaction rate. Rates are multiples of `1/n`, so edges
/// are compared with a small tolerance.
pub fn satisfaction_bin(v: f64) -> usize {
    for k in 0..10 {
        let lo = 0.999 - 0.001 * k as f64;
        if v > lo + 1e-9 {
            return k;
        }
    }
    10
}

pub fn histogram(values: &[f64]) -> [usize; 11] {
    let mut h = [0; 11];
    for &v in values {
        h[satisfaction_bin(v)] += 1;
    }
    h
}

fn channel_seed(cfg: &ExperimentConfig, k: usize) -> u64 {
    derive_seed(cfg.seed, k as u64)
}

fn channel(cfg: &ExperimentConfig, params: &SystemParams, k: usize) -> ChannelScenario {
    sample_channel(params, channel_seed(cfg, k), cfg.eps(), cfg.eta())
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a ExperimentConfig,
    channel_seeds: Vec<u64>,
}

fn write_manifest(cfg: &ExperimentConfig, command: &str) -> Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        channel_seeds: (0..cfg.channels).map(|k| channel_seed(cfg, k)).collect(),
    };
    let path = cfg.out.join(format!("manifest-{command}.json"));
    std::fs::write(path, serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(())
}

/// Settings that change a design row without changing its resume key.
#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct DesignStamp {
    relays: usize,
    pt: f64,
    sigma2: f64,
    sigma_v2: f64,
    rho: f64,
    eps2: f64,
    eta2: f64,
    perts: usize,
    randomizations: usize,
    seed: u64,
}

impl DesignStamp {
    fn of(cfg: &ExperimentConfig) -> Self {
        Self {
            relays: cfg.relays,
            pt: cfg.pt,
            sigma2: cfg.sigma2,
            sigma_v2: cfg.sigma_v2,
            rho: cfg.rho,
            eps2: cfg.eps2,
            eta2: cfg.eta2,
            perts: cfg.perts,
            randomizations: cfg.randomizations,
            seed: cfg.seed,
        }
    }
}

/// Refuses to append to a `design.csv` produced under different settings.
fn check_stamp(cfg: &ExperimentConfig) -> Result<()> {
    let path = cfg.out.join("design-stamp.json");
    let stamp = DesignStamp::of(cfg);
    let has_rows = std::fs::metadata(cfg.out.join("design.csv")).is_ok_and(|m| m.len() > 0);
    if has_rows && path.exists() {
        let old: DesignStamp = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
        if old != stamp {
            return Err(Error::Config(format!(
                "{} holds designs for different settings; use another output directory",
                cfg.out.display()
            )));
        }
    }
    std::fs::write(path, serde_json::to_string_pretty(&stamp)? + "\n")?;
    Ok(())
}

fn design_row(
    cfg: &ExperimentConfig,
    method: Method,
    gamma_db: f64,
    k: usize,
    sc: &ChannelScenario,
    params: &SystemParams,
) -> (ResultRow, TimingRow) {
    let seed = channel_seed(cfg, k);
    let opts = DesignOptions {
        n_randomizations: cfg.randomizations,
        seed,
    };
    let start = Instant::now();
    let res = solve_design(method, sc, params, &InteriorPoint::default(), &opts);
    let millis = start.elapsed().as_secs_f64() * 1e3;
    let timing = TimingRow {
        method,
        gamma_db,
        channel: k as u64,
        millis,
    };
    let mut row = ResultRow {
        method,
        gamma_db,
        channel: k as u64,
        channel_seed: seed,
        status: "Error".into(),
        objective: f64::NAN,
        rank: None,
        extraction: "none".into(),
        rand_feasible: None,
        power: None,
        outage_exact: None,
        outage_quadratic: None,
        iterations: 0,
        w: String::new(),
    };
    let Ok(res) = res else {
        return (row, timing);
    };
    row.status = res.status.as_str().to_string();
    row.objective = res.objective;
    row.rank = res.rank;
    row.iterations = res.iterations;
    if let Some(e) = &res.extraction {
        row.extraction = match e.source {
            Source::EigRankOne => "eig",
            Source::Randomized => "rand",
        }
        .into();
        row.rand_feasible = Some(e.n_feasible);
        row.power = Some(e.power);
        row.w = encode_weights(Some(&e.w));
        let est = |mode| outage_estimate_vec(&e.w, sc, params, cfg.perts, seed, mode).ok();
        row.outage_exact = est(EvalMode::Exact);
        row.outage_quadratic = est(EvalMode::Quadratic);
    } else if res.feasible() {
        row.rand_feasible = Some(0);
    }
    (row, timing)
}

/// Solves every requested (method, gamma, channel) not already present in
/// `design.csv` and returns all rows of the file for this config.
pub fn cmd_design(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    check_stamp(cfg)?;
    write_manifest(cfg, "design")?;
    let path = cfg.out.join("design.csv");
    let timing_path = cfg.out.join("design_timing.csv");
    let done = existing_keys(&path)?;
    for &gamma_db in &cfg.gamma_db {
        let params = cfg.params(gamma_db)?;
        let ks: Vec<usize> = (0..cfg.channels).collect();
        for chunk in ks.chunks(CHUNK) {
            let todo: Vec<(usize, Method)> = chunk
                .iter()
                .flat_map(|&k| cfg.methods.iter().map(move |&m| (k, m)))
                .filter(|&(k, m)| {
                    let key = super::rows::RowKey {
                        method: m,
                        gamma_bits: gamma_db.to_bits(),
                        channel_seed: channel_seed(cfg, k),
                    };
                    !done.contains(&key)
                })
                .collect();
            if todo.is_empty() {
                continue;
            }
            let out: Vec<(ResultRow, TimingRow)> = todo
                .par_iter()
                .map(|&(k, m)| design_row(cfg, m, gamma_db, k, &channel(cfg, &params, k), &params))
                .collect();
            let mut w = appender(&path)?;
            let mut t = appender(&timing_path)?;
            for (row, timing) in &out {
                w.serialize(row)?;
                t.serialize(timing)?;
            }
            w.flush()?;
            t.flush()?;
        }
    }
    select_rows(cfg, read_rows(&path)?)
}

/// Rows of the config's methods, gamma grid and channel range.
fn select_rows(cfg: &ExperimentConfig, rows: Vec<ResultRow>) -> Result<Vec<ResultRow>> {
    let gammas: BTreeSet<u64> = cfg.gamma_db.iter().map(|g| g.to_bits()).collect();
    let seeds: BTreeSet<u64> = (0..cfg.channels).map(|k| channel_seed(cfg, k)).collect();
    Ok(rows
        .into_iter()
        .filter(|r| {
            cfg.methods.contains(&r.method)
                && gammas.contains(&r.gamma_db.to_bits())
                && seeds.contains(&r.channel_seed)
        })
        .collect())
}

/// Per gamma: channels on which every configured method is feasible and has
/// an extracted weight.
fn common_channels(cfg: &ExperimentConfig, rows: &[ResultRow]) -> BTreeMap<u64, BTreeSet<u64>> {
    let mut ok: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    for r in rows {
        if r.feasible() && r.power.is_some() {
            *ok.entry((r.gamma_db.to_bits(), r.channel)).or_default() += 1;
        }
    }
    let mut out: BTreeMap<u64, BTreeSet<u64>> = cfg
        .gamma_db
        .iter()
        .map(|g| (g.to_bits(), BTreeSet::new()))
        .collect();
    for ((g, ch), n) in ok {
        if n == cfg.methods.len() {
            out.entry(g).or_default().insert(ch);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionRow {
    pub scenario: String,
    pub method: Method,
    pub gamma_db: f64,
    pub channel: u64,
    pub mode: EvalMode,
    pub satisfaction: f64,
    /// Satisfaction below `1 - rho`.
    pub outage_event: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub scenario: String,
    pub method: Method,
    pub gamma_db: f64,
    pub mode: EvalMode,
    pub bin: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchSummary {
    pub scenario: String,
    pub method: Method,
    pub gamma_db: f64,
    pub mode: EvalMode,
    pub channels: usize,
    pub mean_satisfaction: f64,
    pub min_satisfaction: f64,
    pub outage_events: usize,
}

fn summarize(
    cfg: &ExperimentConfig,
    sat: &[SatisfactionRow],
) -> (Vec<HistogramRow>, Vec<MismatchSummary>) {
    let mut groups: BTreeMap<(String, Method, u64), Vec<&SatisfactionRow>> = BTreeMap::new();
    for s in sat {
        groups
            .entry((s.scenario.clone(), s.method, s.gamma_db.to_bits()))
            .or_default()
            .push(s);
    }
    let mut hist = Vec::new();
    let mut summary = Vec::new();
    for ((scenario, method, g), rows) in groups {
        let gamma_db = f64::from_bits(g);
        let vals: Vec<f64> = rows.iter().map(|r| r.satisfaction).collect();
        for (label, count) in BIN_LABELS.iter().zip(histogram(&vals)) {
            hist.push(HistogramRow {
                scenario: scenario.clone(),
                method,
                gamma_db,
                mode: cfg.mode,
                bin: label.to_string(),
                count,
            });
        }
        let n = vals.len();
        summary.push(MismatchSummary {
            scenario: scenario.clone(),
            method,
            gamma_db,
            mode: cfg.mode,
            channels: n,
            mean_satisfaction: if n == 0 {
                f64::NAN
            } else {
                vals.iter().sum::<f64>() / n as f64
            },
            min_satisfaction: vals.iter().copied().fold(f64::NAN, f64::min),
            outage_events: rows.iter().filter(|r| r.outage_event).count(),
        });
    }
    (hist, summary)
}

fn nominal_satisfaction(cfg: &ExperimentConfig, rows: &[ResultRow]) -> Vec<SatisfactionRow> {
    let common = common_channels(cfg, rows);
    rows.iter()
        .filter(|r| {
            common
                .get(&r.gamma_db.to_bits())
                .is_some_and(|c| c.contains(&r.channel))
        })
        .filter_map(|r| {
            let outage = match cfg.mode {
                EvalMode::Exact => r.outage_exact,
                EvalMode::Quadratic => r.outage_quadratic,
            }?;
            let satisfaction = 1.0 - outage;
            Some(SatisfactionRow {
                scenario: "nominal".into(),
                method: r.method,
                gamma_db: r.gamma_db,
                channel: r.channel,
                mode: cfg.mode,
                satisfaction,
                outage_event: satisfaction < 1.0 - cfg.rho - 1e-12,
            })
        })
        .collect()
}

fn write_validation(
    cfg: &ExperimentConfig,
    prefix: &str,
    sat: &[SatisfactionRow],
) -> Result<(Vec<HistogramRow>, Vec<MismatchSummary>)> {
    let (hist, summary) = summarize(cfg, sat);
    write_all(&cfg.out.join(format!("{prefix}satisfaction.csv")), sat)?;
    write_all(&cfg.out.join(format!("{prefix}histogram.csv")), &hist)?;
    write_all(&cfg.out.join(format!("{prefix}summary.csv")), &summary)?;
    Ok((hist, summary))
}

/// SNR-satisfaction rates `1 - outage` on channels feasible for every
/// configured method, with histogram and summary. Runs any missing designs.
pub fn cmd_validate(
    cfg: &ExperimentConfig,
) -> Result<(Vec<SatisfactionRow>, Vec<MismatchSummary>)> {
    let rows = cmd_design(cfg)?;
    write_manifest(cfg, "validate")?;
    let sat = nominal_satisfaction(cfg, &rows);
    let (_, summary) = write_validation(cfg, "", &sat)?;
    Ok((sat, summary))
}

fn mismatch_label(cfg: &ExperimentConfig) -> String {
    let m = &cfg.mismatch;
    let mut parts = Vec::new();
    if let Some(v) = m.sigma2 {
        parts.push(format!("sigma2={v}"));
    }
    if let Some(v) = m.eps2 {
        parts.push(format!("eps2={v}"));
    }
    if let Some(v) = m.eta2 {
        parts.push(format!("eta2={v}"));
    }
    if parts.is_empty() {
        "nominal".into()
    } else {
        parts.join(",")
    }
}

/// Re-estimates outage of the nominal designs under the configured mismatch
/// without re-solving. With no mismatch this reproduces [`cmd_validate`].
pub fn cmd_mismatch(
    cfg: &ExperimentConfig,
) -> Result<(Vec<SatisfactionRow>, Vec<MismatchSummary>)> {
    let rows = cmd_design(cfg)?;
    write_manifest(cfg, "mismatch")?;
    let sat = if cfg.mismatch.is_empty() {
        nominal_satisfaction(cfg, &rows)
    } else {
        let common = common_channels(cfg, &rows);
        let label = mismatch_label(cfg);
        let m = &cfg.mismatch;
        let eps = m.eps2.unwrap_or(cfg.eps2).sqrt();
        let eta = m.eta2.unwrap_or(cfg.eta2).sqrt();
        let noise = m.sigma2;
        let picked: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| {
                common
                    .get(&r.gamma_db.to_bits())
                    .is_some_and(|c| c.contains(&r.channel))
            })
            .collect();
        picked
            .par_iter()
            .map(|r| -> Result<SatisfactionRow> {
                let mut params = cfg.params(r.gamma_db)?;
                if let Some(s) = noise {
                    params.sigma_v2 = s;
                    params.sigma2 = vec![s; params.relays()];
                }
                let sc = sample_channel(&params, r.channel_seed, eps, eta);
                let w = r
                    .weights()?
                    .ok_or_else(|| Error::Config("feasible row without weights".into()))?;
                let outage =
                    outage_estimate_vec(&w, &sc, &params, cfg.perts, r.channel_seed, cfg.mode)?;
                let satisfaction = 1.0 - outage;
                Ok(SatisfactionRow {
                    scenario: label.clone(),
                    method: r.method,
                    gamma_db: r.gamma_db,
                    channel: r.channel,
                    mode: cfg.mode,
                    satisfaction,
                    outage_event: satisfaction < 1.0 - cfg.rho - 1e-12,
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    let (_, summary) = write_validation(cfg, "mismatch_", &sat)?;
    Ok((sat, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: Method,
    pub gamma_db: f64,
    pub channels: usize,
    pub feasible: usize,
    pub feasibility: f64,
    /// Fractions of feasible channels by detected rank.
    pub rank1: f64,
    pub rank2: f64,
    pub rank3: f64,
    pub rank4plus: f64,
    /// Fraction of rank-k solutions for which randomization found a feasible
    /// candidate; NaN when there are no rank-k solutions.
    pub rand_rank2: f64,
    pub rand_rank3: f64,
    pub rand_rank4plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub method: Method,
    pub gamma_db: f64,
    pub common_channels: usize,
    pub mean_power: f64,
    pub mean_objective: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

/// Feasibility and rank statistics per (method, gamma), and mean power on
/// commonly feasible channels. Runs any missing designs.
pub fn cmd_tables(cfg: &ExperimentConfig) -> Result<(Vec<TableRow>, Vec<PowerRow>)> {
    let rows = cmd_design(cfg)?;
    write_manifest(cfg, "tables")?;
    let common = common_channels(cfg, &rows);
    let mut tables = Vec::new();
    let mut powers = Vec::new();
    for &gamma_db in &cfg.gamma_db {
        for &method in &cfg.methods {
            let rs: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.method == method && r.gamma_db.to_bits() == gamma_db.to_bits())
                .collect();
            let feas: Vec<&&ResultRow> = rs.iter().filter(|r| r.feasible()).collect();
            let bucket = |r: &ResultRow| r.rank.map(|k| k.clamp(1, 4));
            let count = |k: usize| feas.iter().filter(|r| bucket(r) == Some(k)).count();
            let rand_ok = |k: usize| {
                feas.iter()
                    .filter(|r| bucket(r) == Some(k) && r.power.is_some())
                    .count()
            };
            tables.push(TableRow {
                method,
                gamma_db,
                channels: rs.len(),
                feasible: feas.len(),
                feasibility: ratio(feas.len(), rs.len()),
                rank1: ratio(count(1), feas.len()),
                rank2: ratio(count(2), feas.len()),
                rank3: ratio(count(3), feas.len()),
                rank4plus: ratio(count(4), feas.len()),
                rand_rank2: ratio(rand_ok(2), count(2)),
                rand_rank3: ratio(rand_ok(3), count(3)),
                rand_rank4plus: ratio(rand_ok(4), count(4)),
            });
            let set = &common[&gamma_db.to_bits()];
            let on_common: Vec<&&ResultRow> =
                rs.iter().filter(|r| set.contains(&r.channel)).collect();
            let n = on_common.len();
            powers.push(PowerRow {
                method,
                gamma_db,
                common_channels: n,
                mean_power: ratio(1, n) * on_common.iter().filter_map(|r| r.power).sum::<f64>(),
                mean_objective: ratio(1, n) * on_common.iter().map(|r| r.objective).sum::<f64>(),
            });
        }
    }
    write_all(&cfg.out.join("tables.csv"), &tables)?;
    write_all(&cfg.out.join("power.csv"), &powers)?;
    Ok((tables, powers))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub rho: f64,
    pub in_window: bool,
    pub instances: usize,
    pub violations: usize,
    pub mean_moment_rhs: f64,
    pub mean_bernstein_rhs: f64,
    /// Smallest `moment_rhs - bernstein_rhs` over the instances.
    pub min_margin: f64,
}

/// Dominance sweep over random Gaussian quadratics of dimension
/// `1..=max_dim` (cycled) on a rho grid inside and outside the window.
pub fn cmd_tightness(cfg: &ExperimentConfig) -> Result<Vec<TightnessRow>> {
    cfg.validate()?;
    write_manifest(cfg, "tightness")?;
    let rows = tightness_sweep(cfg)?;
    write_all(&cfg.out.join("tightness.csv"), &rows)?;
    Ok(rows)
}

pub(crate) fn tightness_sweep(cfg: &ExperimentConfig) -> Result<Vec<TightnessRow>> {
    let t = &cfg.tightness;
    let mut src = GaussianSource::new(cfg.seed, streams::TIGHTNESS);
    let qs: Vec<GaussianQuadratic> = (0..t.instances)
        .map(|i| GaussianQuadratic::random(1 + i % t.max_dim, &mut src))
        .collect();
    let (lo, hi) = rho_window();
    let mut grid = interior_grid(lo, hi, t.window_points);
    grid.extend(t.extra_rho.iter().copied());
    grid.into_par_iter()
        .map(|rho| -> Result<TightnessRow> {
            let mut violations = 0;
            let (mut sm, mut sb, mut min_margin) = (0.0, 0.0, f64::INFINITY);
            for q in &qs {
                let r = check_dominance(q, rho)?;
                violations += usize::from(!r.dominated);
                sm += r.moment_rhs;
                sb += r.bernstein_rhs;
                min_margin = min_margin.min(r.moment_rhs - r.bernstein_rhs);
            }
            let n = qs.len() as f64;
            Ok(TightnessRow {
                rho,
                in_window: in_window(rho),
                instances: qs.len(),
                violations,
                mean_moment_rhs: sm / n,
                mean_bernstein_rhs: sb / n,
                min_margin,
            })
        })
        .collect()
}
