//! Campaign runner: config parsing, the four experiment families and CSV
//! artifact emission.
//!
//! CSV bodies depend only on the config (seed included), never on the
//! worker count or wall clock; timing lives in `manifest.json` alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::channel::{
    build_hex_layout, generate_channels, BeamLayout, ChannelMatrix, GeoPoint, NoiseModel, RadiationPattern,
    DEFAULT_CENTER, DEFAULT_SATELLITE_LONGITUDE,
};
use crate::error::{Error, Result};
use crate::fsa::{
    adaptive_schedule, efficiency_accounting, fixed_depth_schedule, EfficiencyReport, FsaConfig, ScheduleRecord,
    SchedulingSetup,
};
use crate::metrics::{
    cdf_curve, complexity_estimate, complexity_fsa, complexity_gain, estimated_fsa_frequency, grid, outage_probability,
    quantile, CampaignStats,
};
use crate::rates::per_user_bound;
use crate::scheduler::{
    color_grouping, exhaustive_search, leximin_cmp, schedule, SchedulingProblem, DEFAULT_ENUMERATION_CAP,
    DEFAULT_ORACLE_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    BeamSweep,
    DepthSweep,
    FsaStudy,
    OracleCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub experiment: Experiment,
    /// Beam count for depth sweeps, FSA studies and oracle checks.
    pub b: usize,
    /// Beam counts of a beam sweep.
    pub b_list: Vec<usize>,
    /// Users per beam for beam sweeps and oracle checks.
    pub m: usize,
    /// Depths of a depth sweep.
    pub m_list: Vec<usize>,
    /// FSA thresholds of an FSA study.
    pub m_fsa_list: Vec<usize>,
    /// Service rates paired with `m_fsa_list`; empty picks each one as the
    /// `outage_target` quantile of the fixed-depth benchmark.
    pub r_th_list: Vec<f64>,
    pub outage_target: f64,
    /// Threshold reported as `p_r_th` in sweep summaries.
    pub r_th: f64,
    pub keep_best_on_failure: bool,
    /// Generations (channel matrices); trials for oracle checks.
    pub n_ch: usize,
    pub snr_db: f64,
    pub n0: f64,
    /// Color groups; unset auto-enables 3 colors when the path count would
    /// exceed `enumeration_cap`.
    pub c_colors: Option<usize>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
    pub enumeration_cap: u64,
    pub oracle_cap: u64,
    pub cdf_step: f64,
    pub jain_step: f64,
    pub center: GeoPoint,
    pub satellite_longitude_deg: f64,
    /// Defaults to the pattern beamwidth (touching -3 dB contours).
    pub spacing_deg: Option<f64>,
    pub pattern: RadiationPattern,
    /// Number of leading generations whose channel matrices are exported.
    pub export_channels: usize,
    pub export_allocations: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::BeamSweep,
            b: 7,
            b_list: vec![2, 3, 4, 5, 6, 7],
            m: 1,
            m_list: vec![1, 2, 3, 5],
            m_fsa_list: vec![2, 3, 4],
            r_th_list: Vec::new(),
            outage_target: 0.1,
            r_th: 3.0,
            keep_best_on_failure: true,
            n_ch: 5000,
            snr_db: 15.0,
            n0: 1.0,
            c_colors: None,
            seed: 1,
            workers: None,
            output_dir: PathBuf::from("out"),
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            oracle_cap: DEFAULT_ORACLE_CAP,
            cdf_step: 0.01,
            jain_step: 0.005,
            center: DEFAULT_CENTER,
            satellite_longitude_deg: DEFAULT_SATELLITE_LONGITUDE,
            spacing_deg: None,
            pattern: RadiationPattern::default(),
            export_channels: 0,
            export_allocations: false,
        }
    }
}

impl CampaignConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !self.snr_db.is_finite() {
            return bad(format!("snr_db must be finite, got {}", self.snr_db));
        }
        if self.n_ch == 0 {
            return bad("n_ch must be at least 1".into());
        }
        NoiseModel::new(self.n0)?;
        self.pattern.validate()?;
        if !(self.cdf_step > 0.0 && self.jain_step > 0.0) {
            return bad("cdf_step and jain_step must be positive".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        match self.experiment {
            Experiment::BeamSweep => {
                if self.b_list.is_empty() {
                    return bad("b_list must not be empty for beam_sweep".into());
                }
                if self.m == 0 {
                    return bad("m must be at least 1".into());
                }
            }
            Experiment::DepthSweep => {
                if self.m_list.is_empty() || self.m_list.contains(&0) {
                    return bad("m_list must be non-empty with entries >= 1 for depth_sweep".into());
                }
            }
            Experiment::FsaStudy => {
                if self.m_fsa_list.is_empty() || self.m_fsa_list.contains(&0) {
                    return bad("m_fsa_list must be non-empty with entries >= 1 for fsa_study".into());
                }
                if !self.r_th_list.is_empty() && self.r_th_list.len() != self.m_fsa_list.len() {
                    return bad(format!(
                        "r_th_list has {} entries, m_fsa_list has {}",
                        self.r_th_list.len(),
                        self.m_fsa_list.len()
                    ));
                }
                if !(self.outage_target > 0.0 && self.outage_target < 1.0) {
                    return bad(format!("outage_target must be in (0, 1), got {}", self.outage_target));
                }
            }
            Experiment::OracleCheck => {
                if self.m == 0 {
                    return bad("m must be at least 1".into());
                }
            }
        }
        Ok(())
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel { n0: self.n0 }
    }

    pub fn layout(&self, b: usize) -> Result<BeamLayout> {
        build_hex_layout(
            b,
            self.center,
            self.spacing_deg.unwrap_or(self.pattern.beamwidth_deg),
            self.pattern,
            self.satellite_longitude_deg,
        )
    }

    fn channels(&self, layout: &BeamLayout) -> Result<Vec<ChannelMatrix>> {
        generate_channels(layout, self.n_ch, self.seed, self.noise(), self.snr_db)
    }

    /// Scheduling setup for depth `m` on `layout`; picks color grouping when
    /// configured, or with 3 colors when ungrouped enumeration would exceed
    /// the cap.
    fn setup(&self, layout: &BeamLayout, max_depth: usize) -> Result<SchedulingSetup> {
        let b = layout.beam_count();
        let colors = match self.c_colors {
            Some(c) => Some(c),
            None => {
                let paths = (max_depth as f64).powi(b as i32);
                (paths > self.enumeration_cap as f64).then_some(3)
            }
        };
        let grouping = match colors {
            Some(c) if c < b => Some(color_grouping(layout, c)?),
            _ => None,
        };
        Ok(SchedulingSetup {
            noise: self.noise(),
            grouping,
            enumeration_cap: self.enumeration_cap,
            seed: self.seed,
        })
    }
}

/// Samples and bookkeeping for one plotted curve.
#[derive(Debug, Clone, Serialize)]
pub struct CurveResult {
    pub label: String,
    pub b: usize,
    pub m: usize,
    pub stats: CampaignStats,
    /// Worst-slot minimum rate of every schedule.
    pub worst_slot_samples: Vec<f64>,
    pub evaluations: u64,
    pub predicted_evaluations: u64,
}

impl CurveResult {
    fn from_records(label: String, b: usize, m: usize, records: &[ScheduleRecord], predicted: u64) -> Result<Self> {
        let mut stats = CampaignStats::default();
        for r in records {
            stats.push_allocation(&r.allocation)?;
        }
        Ok(Self {
            label,
            b,
            m,
            stats,
            worst_slot_samples: records.iter().map(|r| r.allocation.worst_min_rate()).collect(),
            evaluations: records.iter().map(|r| r.evaluations).sum(),
            predicted_evaluations: predicted,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FsaRow {
    pub m_fsa: usize,
    pub r_th: f64,
    pub fixed: EfficiencyReport,
    pub fsa: EfficiencyReport,
    /// Outage `p_{r_th, M}` of the fixed-depth benchmark.
    pub fixed_outage: f64,
    pub fsa_use_estimate: f64,
    pub alpha_m: f64,
    pub alpha_fsa: f64,
    pub complexity_gain: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub m: usize,
    pub b: usize,
    pub instances: usize,
    pub max_min_agree: usize,
    pub leximin_agree: usize,
    pub bg_evaluations: u64,
    pub es_evaluations: u64,
}

impl OracleSummary {
    pub fn line(&self) -> String {
        format!(
            "BG == ES on {}/{} instances (leximin agreement {}/{})",
            self.max_min_agree, self.instances, self.leximin_agree, self.instances
        )
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOutput {
    pub experiment: Experiment,
    pub curves: Vec<CurveResult>,
    /// Per-user bound samples (sum rate / B per generation) and their B.
    pub bound: Option<(usize, Vec<f64>)>,
    pub fsa_rows: Vec<FsaRow>,
    pub oracle: Option<OracleSummary>,
    /// File name and body of every CSV artifact, in emission order.
    pub artifacts: Vec<(String, String)>,
    pub manifest: serde_json::Value,
}

/// Fixed-depth evaluations predicted by path counting: one per path, with
/// `layers` layers and the last group possibly shorter.
fn predicted_fixed_evaluations(n_ch: usize, m: usize, layers: usize) -> u64 {
    let full = (n_ch / m) as u64;
    let rest = n_ch % m;
    let per = |g: usize| (g as u64).pow(layers as u32);
    full * per(m) + if rest > 0 { per(rest) } else { 0 }
}

fn layer_count(setup: &SchedulingSetup, b: usize) -> usize {
    setup.grouping.as_ref().map_or(b, |g| g.colors())
}

fn bound_samples(channels: &[ChannelMatrix], noise: NoiseModel) -> Result<Vec<f64>> {
    channels.par_iter().map(|h| per_user_bound(&h.entries, noise)).collect()
}

/// Grid points rounded to the step's decimal precision so they print
/// cleanly and parse back to the same value.
fn clean_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let decimals = (-step.log10()).ceil().max(0.0) as usize + 1;
    grid(lo, hi, step)
        .into_iter()
        .map(|x| format!("{x:.decimals$}").parse().expect("formatted float parses"))
        .collect()
}

fn rate_grid(curves: &[(String, &[f64])], step: f64) -> Vec<f64> {
    let max = curves
        .iter()
        .flat_map(|(_, s)| s.iter().copied())
        .fold(0.0f64, f64::max);
    let hi = (max / step).ceil() * step;
    clean_grid(0.0, hi.max(step), step)
}

/// CDF table of one or more labelled sample sets. One curve gives two
/// columns `(x, p)`; several add a `label` column.
pub fn cdf_csv(curves: &[(String, &[f64])], grid: &[f64], x_name: &str, p_name: &str) -> Result<String> {
    if curves.is_empty() || curves.iter().any(|(_, s)| s.is_empty()) {
        return Err(Error::NoSamples("refusing to emit a CDF without samples".into()));
    }
    let mut out = String::new();
    if curves.len() == 1 {
        let _ = writeln!(out, "{x_name},{p_name}");
        for (r, p) in cdf_curve(curves[0].1, grid)? {
            let _ = writeln!(out, "{r},{p}");
        }
    } else {
        let _ = writeln!(out, "{x_name},{p_name},label");
        for (label, samples) in curves {
            for (r, p) in cdf_curve(samples, grid)? {
                let _ = writeln!(out, "{r},{p},{label}");
            }
        }
    }
    Ok(out)
}

/// Writes the outage CDF of `curves` to `path`.
pub fn emit_plot_data(curves: &[(String, &[f64])], step: f64, path: &Path) -> Result<()> {
    let body = cdf_csv(curves, &rate_grid(curves, step), "r", "p_r")?;
    fs::write(path, body)?;
    Ok(())
}

/// One parsed CDF row: `(x, p, label)`.
pub type CdfRow = (f64, f64, Option<String>);

pub fn parse_cdf_csv(text: &str) -> Result<Vec<CdfRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::NoSamples("empty CSV".into()))?;
    let labelled = header.split(',').count() == 3;
    lines
        .map(|line| {
            let mut cells = line.splitn(3, ',');
            let mut num = |what: &str| -> Result<f64> {
                cells
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad {what} cell in `{line}`")))
            };
            let x = num("x")?;
            let p = num("p")?;
            let label = if labelled {
                cells.next().map(str::to_owned)
            } else {
                None
            };
            Ok((x, p, label))
        })
        .collect()
}

fn curve_refs(curves: &[CurveResult], bound: Option<&(usize, Vec<f64>)>) -> Vec<(String, Vec<f64>)> {
    let mut v: Vec<(String, Vec<f64>)> = curves
        .iter()
        .map(|c| (c.label.clone(), c.stats.min_rate_samples.clone()))
        .collect();
    if let Some((b, samples)) = bound {
        v.push((format!("bound B={b}"), samples.clone()));
    }
    v
}

fn sweep_artifacts(cfg: &CampaignConfig, out: &mut CampaignOutput) -> Result<()> {
    let owned = curve_refs(&out.curves, out.bound.as_ref());
    let rate_curves: Vec<(String, &[f64])> = owned.iter().map(|(l, s)| (l.clone(), s.as_slice())).collect();
    out.artifacts.push((
        "cdf_min_rate.csv".into(),
        cdf_csv(&rate_curves, &rate_grid(&rate_curves, cfg.cdf_step), "r", "p_r")?,
    ));

    let jain_curves: Vec<(String, &[f64])> = out
        .curves
        .iter()
        .map(|c| (c.label.clone(), c.stats.jain_samples.as_slice()))
        .collect();
    out.artifacts.push((
        "cdf_jain.csv".into(),
        cdf_csv(&jain_curves, &clean_grid(0.0, 1.0, cfg.jain_step), "jain", "p_jain")?,
    ));

    let mut summary = String::from(
        "label,b,m,slots,n_sched,p_r_th,r_th,q01,q10,q50,floor,worst_slot_q10,jain_min,jain_frac_above_095,evaluations\n",
    );
    for c in &out.curves {
        let s = &c.stats.min_rate_samples;
        let j = &c.stats.jain_samples;
        let above = j.iter().filter(|&&x| x > 0.95).count() as f64 / j.len() as f64;
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.label,
            c.b,
            c.m,
            s.len(),
            c.stats.n_sched,
            outage_probability(s, cfg.r_th)?,
            cfg.r_th,
            quantile(s, 0.01)?,
            quantile(s, 0.1)?,
            quantile(s, 0.5)?,
            s.iter().copied().fold(f64::INFINITY, f64::min),
            quantile(&c.worst_slot_samples, 0.1)?,
            j.iter().copied().fold(f64::INFINITY, f64::min),
            above,
            c.evaluations,
        );
    }
    out.artifacts.push(("summary.csv".into(), summary));
    Ok(())
}

fn allocation_rows(label: &str, records: &[ScheduleRecord], beams: usize, csv: &mut String) {
    for (k, r) in records.iter().enumerate() {
        for (slot, path) in r.allocation.paths.iter().enumerate() {
            let gens: Vec<String> = path
                .user_per_beam
                .iter()
                .map(|u| u.map(|g| (r.first_generation + g).to_string()).unwrap_or_default())
                .collect();
            let rates: Vec<String> = path.rates.iter().map(f64::to_string).collect();
            let _ = writeln!(
                csv,
                "{label},{k},{slot},{},{},{}",
                gens.join(","),
                rates.join(","),
                path.min_rate
            );
        }
    }
    debug_assert!(records
        .iter()
        .all(|r| r.allocation.paths.iter().all(|p| p.rates.len() == beams)));
}

fn allocation_header(beams: usize) -> String {
    let gens: Vec<String> = (1..=beams).map(|b| format!("beam{b}_generation")).collect();
    let rates: Vec<String> = (1..=beams).map(|b| format!("beam{b}_rate")).collect();
    format!("curve,schedule,slot,{},{},min_rate\n", gens.join(","), rates.join(","))
}

fn channel_artifacts(cfg: &CampaignConfig, channels: &[ChannelMatrix], out: &mut CampaignOutput) {
    for h in channels.iter().take(cfg.export_channels) {
        out.artifacts
            .push((format!("channels/generation_{:05}.csv", h.generation), h.to_csv()));
    }
}

fn beam_sweep(cfg: &CampaignConfig) -> Result<CampaignOutput> {
    let mut out = empty_output(cfg.experiment);
    let b_max = *cfg.b_list.iter().max().expect("validated non-empty");
    for &b in &cfg.b_list {
        let layout = cfg.layout(b)?;
        let channels = cfg.channels(&layout)?;
        let setup = cfg.setup(&layout, cfg.m)?;
        let records = fixed_depth_schedule(&channels, cfg.m, cfg.r_th, &setup)?;
        let predicted = predicted_fixed_evaluations(cfg.n_ch, cfg.m, layer_count(&setup, b));
        out.curves.push(CurveResult::from_records(
            format!("B={b}"),
            b,
            cfg.m,
            &records,
            predicted,
        )?);
        if b == b_max {
            out.bound = Some((b, bound_samples(&channels, cfg.noise())?));
            channel_artifacts(cfg, &channels, &mut out);
        }
    }
    sweep_artifacts(cfg, &mut out)?;
    Ok(out)
}

fn depth_sweep(cfg: &CampaignConfig) -> Result<CampaignOutput> {
    let mut out = empty_output(cfg.experiment);
    let layout = cfg.layout(cfg.b)?;
    let channels = cfg.channels(&layout)?;
    let max_depth = *cfg.m_list.iter().max().expect("validated non-empty");
    let setup = cfg.setup(&layout, max_depth)?;
    let mut alloc_csv = allocation_header(cfg.b);
    for &m in &cfg.m_list {
        let records = fixed_depth_schedule(&channels, m, cfg.r_th, &setup)?;
        let predicted = predicted_fixed_evaluations(cfg.n_ch, m, layer_count(&setup, cfg.b));
        let label = format!("M={m}");
        if cfg.export_allocations {
            allocation_rows(&label, &records, cfg.b, &mut alloc_csv);
        }
        out.curves
            .push(CurveResult::from_records(label, cfg.b, m, &records, predicted)?);
    }
    out.bound = Some((cfg.b, bound_samples(&channels, cfg.noise())?));
    channel_artifacts(cfg, &channels, &mut out);
    sweep_artifacts(cfg, &mut out)?;
    if cfg.export_allocations {
        out.artifacts.push(("allocations.csv".into(), alloc_csv));
    }
    Ok(out)
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn table_csv(rows: &[(usize, f64, &EfficiencyReport)], max_size: usize) -> String {
    let mut header = vec!["m_fsa".to_string(), "r_th".into(), "slots_without_sched_pct".into()];
    header.extend((2..=max_size).map(|m| format!("slots_with_m{m}_pct")));
    header.extend(
        [
            "availability_pct",
            "efficiency_pct",
            "efficiency_full_slots_pct",
            "fsa_use_pct",
        ]
        .map(String::from),
    );
    let mut out = header.join(",") + "\n";
    for &(m, r_th, rep) in rows {
        let mut cells = vec![m.to_string(), r_th.to_string()];
        cells.extend((1..=max_size).map(|k| rep.slots_by_size.get(&k).map(|&f| pct(f)).unwrap_or_default()));
        cells.extend([
            pct(rep.availability),
            pct(rep.efficiency),
            pct(rep.efficiency_full_slots),
            pct(rep.fsa_use),
        ]);
        out += &(cells.join(",") + "\n");
    }
    out
}

fn fsa_study(cfg: &CampaignConfig) -> Result<CampaignOutput> {
    let mut out = empty_output(cfg.experiment);
    let layout = cfg.layout(cfg.b)?;
    let channels = cfg.channels(&layout)?;
    let max_depth = *cfg.m_fsa_list.iter().max().expect("validated non-empty") + 1;
    let setup = cfg.setup(&layout, max_depth)?;
    let colors = layer_count(&setup, cfg.b).max(2);
    let mut alloc_csv = allocation_header(cfg.b);

    for (k, &m_fsa) in cfg.m_fsa_list.iter().enumerate() {
        let fixed = fixed_depth_schedule(&channels, m_fsa, 0.0, &setup)?;
        let fixed_mins: Vec<f64> = fixed.iter().flat_map(ScheduleRecord::slot_min_rates).collect();
        let r_th = match cfg.r_th_list.get(k) {
            Some(&r) => r,
            None => quantile(&fixed_mins, cfg.outage_target)?,
        };
        let fixed_report = efficiency_accounting(&fixed, r_th)?;
        let fixed_outage = outage_probability(&fixed_mins, r_th)?;

        let fsa_cfg = FsaConfig {
            r_th,
            m_fsa,
            keep_best_on_failure: cfg.keep_best_on_failure,
        };
        let records = adaptive_schedule(&channels, &fsa_cfg, &setup)?;
        let report = efficiency_accounting(&records, r_th)?;
        let freqs: Vec<f64> = (1..=m_fsa + 1)
            .map(|i| report.slots_by_size.get(&i).copied().unwrap_or(0.0))
            .collect();
        let alpha_fsa = complexity_fsa(&freqs, m_fsa, colors)?;

        let fixed_label = format!("M={m_fsa}");
        let fsa_label = format!("FSA M_FSA={m_fsa}");
        if cfg.export_allocations {
            allocation_rows(&fixed_label, &fixed, cfg.b, &mut alloc_csv);
            allocation_rows(&fsa_label, &records, cfg.b, &mut alloc_csv);
        }
        let predicted = predicted_fixed_evaluations(cfg.n_ch, m_fsa, layer_count(&setup, cfg.b));
        out.curves
            .push(CurveResult::from_records(fixed_label, cfg.b, m_fsa, &fixed, predicted)?);
        out.curves
            .push(CurveResult::from_records(fsa_label, cfg.b, m_fsa, &records, 0)?);
        out.fsa_rows.push(FsaRow {
            m_fsa,
            r_th,
            fixed: fixed_report,
            fsa: report,
            fixed_outage,
            fsa_use_estimate: estimated_fsa_frequency(fixed_outage, m_fsa),
            alpha_m: complexity_estimate(m_fsa, colors),
            alpha_fsa,
            complexity_gain: complexity_gain(alpha_fsa, m_fsa, colors),
        });
    }

    out.bound = Some((cfg.b, bound_samples(&channels, cfg.noise())?));
    channel_artifacts(cfg, &channels, &mut out);
    sweep_artifacts(cfg, &mut out)?;

    let fixed_rows: Vec<_> = out.fsa_rows.iter().map(|r| (r.m_fsa, r.r_th, &r.fixed)).collect();
    let fsa_rows: Vec<_> = out.fsa_rows.iter().map(|r| (r.m_fsa, r.r_th, &r.fsa)).collect();
    out.artifacts
        .push(("table_no_fsa.csv".into(), table_csv(&fixed_rows, max_depth)));
    out.artifacts
        .push(("table_fsa.csv".into(), table_csv(&fsa_rows, max_depth)));

    let mut complexity =
        String::from("m_fsa,r_th,alpha_m,alpha_fsa,gain_pct,fixed_outage,fsa_use_estimate_pct,fsa_use_measured_pct\n");
    for r in &out.fsa_rows {
        let _ = writeln!(
            complexity,
            "{},{},{},{},{},{},{},{}",
            r.m_fsa,
            r.r_th,
            r.alpha_m,
            r.alpha_fsa,
            pct(r.complexity_gain),
            r.fixed_outage,
            pct(r.fsa_use_estimate),
            pct(r.fsa.fsa_use)
        );
    }
    out.artifacts.push(("table_complexity.csv".into(), complexity));
    if cfg.export_allocations {
        out.artifacts.push(("allocations.csv".into(), alloc_csv));
    }
    Ok(out)
}

/// Path-level minimum deletion against exhaustive search on `n_ch`
/// independent instances of `m` generations.
pub fn oracle_check(m: usize, b: usize, trials: usize, seed: u64, caps: (u64, u64)) -> Result<OracleSummary> {
    let pattern = RadiationPattern::default();
    let layout = build_hex_layout(
        b,
        DEFAULT_CENTER,
        pattern.beamwidth_deg,
        pattern,
        DEFAULT_SATELLITE_LONGITUDE,
    )?;
    oracle_on_layout(&layout, m, trials, seed, NoiseModel::default(), 15.0, caps)
}

fn oracle_on_layout(
    layout: &BeamLayout,
    m: usize,
    trials: usize,
    seed: u64,
    noise: NoiseModel,
    snr_db: f64,
    (enumeration_cap, oracle_cap): (u64, u64),
) -> Result<OracleSummary> {
    if trials == 0 {
        return Err(Error::Config("oracle check needs at least one trial".into()));
    }
    let channels = generate_channels(layout, trials * m, seed, noise, snr_db)?;
    let results: Vec<(bool, bool, u64, u64)> = channels
        .par_chunks(m)
        .map(|group| {
            let problem = SchedulingProblem::ungrouped(group)?;
            let bg = schedule(&problem, noise, enumeration_cap)?;
            let es = exhaustive_search(&problem, noise, oracle_cap)?;
            let max_min = bg.allocation.worst_min_rate() == es.allocation.worst_min_rate();
            let leximin = leximin_cmp(&bg.allocation.sorted_slot_mins(), &es.allocation.sorted_slot_mins()).is_eq();
            Ok((max_min, leximin, bg.evaluations, es.evaluations))
        })
        .collect::<Result<_>>()?;
    Ok(OracleSummary {
        m,
        b: layout.beam_count(),
        instances: results.len(),
        max_min_agree: results.iter().filter(|r| r.0).count(),
        leximin_agree: results.iter().filter(|r| r.1).count(),
        bg_evaluations: results.iter().map(|r| r.2).sum(),
        es_evaluations: results.iter().map(|r| r.3).sum(),
    })
}

fn oracle_experiment(cfg: &CampaignConfig) -> Result<CampaignOutput> {
    let mut out = empty_output(cfg.experiment);
    let layout = cfg.layout(cfg.b)?;
    let summary = oracle_on_layout(
        &layout,
        cfg.m,
        cfg.n_ch,
        cfg.seed,
        cfg.noise(),
        cfg.snr_db,
        (cfg.enumeration_cap, cfg.oracle_cap),
    )?;
    let mut csv = String::from("m,b,instances,max_min_agree,leximin_agree,bg_evaluations,es_evaluations\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{}",
        summary.m,
        summary.b,
        summary.instances,
        summary.max_min_agree,
        summary.leximin_agree,
        summary.bg_evaluations,
        summary.es_evaluations
    );
    out.artifacts.push(("oracle.csv".into(), csv));
    out.oracle = Some(summary);
    Ok(out)
}

fn empty_output(experiment: Experiment) -> CampaignOutput {
    CampaignOutput {
        experiment,
        curves: Vec::new(),
        bound: None,
        fsa_rows: Vec::new(),
        oracle: None,
        artifacts: Vec::new(),
        manifest: serde_json::Value::Null,
    }
}

/// Runs the configured experiment in memory, without touching the output
/// directory.
pub fn execute(cfg: &CampaignConfig) -> Result<CampaignOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let run = || match cfg.experiment {
        Experiment::BeamSweep => beam_sweep(cfg),
        Experiment::DepthSweep => depth_sweep(cfg),
        Experiment::FsaStudy => fsa_study(cfg),
        Experiment::OracleCheck => oracle_experiment(cfg),
    };
    let mut out = match cfg.workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {k} workers: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let curves: Vec<_> = out
        .curves
        .iter()
        .map(|c| {
            json!({
                "label": c.label,
                "b": c.b,
                "m": c.m,
                "slots": c.stats.min_rate_samples.len(),
                "n_sched": c.stats.n_sched,
                "evaluations": c.evaluations,
                "predicted_evaluations": c.predicted_evaluations,
            })
        })
        .collect();
    let files: Vec<&str> = out.artifacts.iter().map(|(n, _)| n.as_str()).collect();
    let mut counts = BTreeMap::new();
    if let Some(o) = &out.oracle {
        counts.insert("oracle", json!(o));
    }
    out.manifest = json!({
        "config": cfg,
        "curves": curves,
        "oracle": counts.get("oracle"),
        "files": files,
        "wall_time_ms": started.elapsed().as_millis() as u64,
        "generated_unix_s": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    });
    Ok(out)
}

/// Runs the experiment and writes every artifact plus `manifest.json` under
/// `cfg.output_dir`. Files already written are removed if a later write
/// fails.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<(CampaignOutput, Vec<PathBuf>)> {
    let out = execute(cfg)?;
    let mut written = Vec::new();
    let result = (|| -> Result<()> {
        fs::create_dir_all(&cfg.output_dir)?;
        let manifest = serde_json::to_string_pretty(&out.manifest).map_err(|e| Error::Io(e.into()))?;
        let all = out
            .artifacts
            .iter()
            .map(|(n, b)| (n.as_str(), b.as_str()))
            .chain(std::iter::once(("manifest.json", manifest.as_str())));
        for (name, body) in all {
            let path = cfg.output_dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, body)?;
            written.push(path);
        }
        Ok(())
    })();
    if let Err(e) = result {
        for p in &written {
            let _ = fs::remove_file(p);
        }
        return Err(e);
    }
    Ok((out, written))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overrides() {
        let cfg = CampaignConfig::from_toml_str(
            r#"
            experiment = "depth_sweep"
            n_ch = 20
            m_list = [1, 2]
            c_colors = 3
            [pattern]
            beamwidth_deg = 0.6
            max_gain_dbi = 48.0
            sidelobe_floor_db = -25.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::DepthSweep);
        assert_eq!(cfg.snr_db, 15.0);
        assert_eq!(cfg.pattern.beamwidth_deg, 0.6);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            CampaignConfig::from_toml_str("experiment = \"nope\""),
            Err(Error::Config(_))
        ));
        assert!(CampaignConfig::from_toml_str("experiment = \"beam_sweep\"\nn_ch = 0").is_err());
        assert!(CampaignConfig::from_toml_str("experiment = \"depth_sweep\"\nm_list = []").is_err());
        assert!(CampaignConfig::from_toml_str("experiment = \"fsa_study\"\nr_th_list = [3.0]").is_err());
        assert!(CampaignConfig::from_toml_str("experiment = \"beam_sweep\"\nsnr_db = nan").is_err());
        assert!(CampaignConfig::from_toml_str("experiment = \"beam_sweep\"\nbogus = 1").is_err());
    }

    #[test]
    fn predicted_evaluations() {
        assert_eq!(predicted_fixed_evaluations(10, 3, 3), 3 * 27 + 1);
        assert_eq!(predicted_fixed_evaluations(10, 1, 7), 10);
    }

    #[test]
    fn cdf_csv_shapes() {
        let a = [1.0, 2.0];
        let one = cdf_csv(&[("x".into(), &a[..])], &[0.0, 1.5, 3.0], "r", "p_r").unwrap();
        assert_eq!(one, "r,p_r\n0,0\n1.5,0.5\n3,1\n");
        let two = cdf_csv(&[("a".into(), &a[..]), ("b".into(), &a[..])], &[1.0], "r", "p_r").unwrap();
        assert_eq!(two, "r,p_r,label\n1,0.5,a\n1,0.5,b\n");
        assert!(matches!(
            cdf_csv(&[("e".into(), &[][..])], &[1.0], "r", "p_r"),
            Err(Error::NoSamples(_))
        ));
    }

    #[test]
    fn clean_grid_prints_short() {
        let g = clean_grid(0.0, 0.1, 0.01);
        assert_eq!(g.len(), 11);
        assert_eq!(g[7].to_string(), "0.07");
    }
}
