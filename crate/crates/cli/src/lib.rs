//! Command implementations behind the `gbs-tn` binary.

mod args;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use gbs_tn::analysis::{choose_cutoff, choose_cutoff_with_delta, dmax_fbs, scaling_grid, CutoffPolicy, ScalingRow};
use gbs_tn::circuit::{build_brickwork, with_uniform_loss, AngleSource, Circuit};
use gbs_tn::fockdense::{
    dense_evolve_density, dense_evolve_state, dense_probability, dense_squeezed_vacuum, DenseDensity,
};
use gbs_tn::gauss::{evolve_circuit, gbs_probability, squeezed_vacuum_cov, SqueezeSpec};
use gbs_tn::tnet::{
    batch_probabilities, EvolutionStats, Picture, TruncationPolicy,
};
use gbs_tn::{FockOutcome, GbsResult};

pub use args::*;

/// Runs one parsed command line. `Ok(false)` means the command ran but some
/// of its computations failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building the worker pool")?;
    pool.install(|| match &cli.command {
        Command::Gen(a) => {
            let c = cmd_gen(a)?;
            write_text(&a.output, &c.to_json())?;
            Ok(true)
        }
        Command::Prob(a) => {
            let records = cmd_prob(a)?;
            write_json_lines(&a.output, &records)?;
            Ok(records.iter().all(|r| r.error.is_none()))
        }
        Command::Cutoff(a) => {
            let rec = cmd_cutoff(a)?;
            write_json_lines(&a.output, &[rec])?;
            Ok(true)
        }
        Command::Scaling(a) => {
            let rows = cmd_scaling(a)?;
            write_scaling_csv(&a.output, &rows)?;
            Ok(true)
        }
        Command::Validate(a) => {
            let report = cmd_validate(a)?;
            let ok = report.passed;
            write_json_lines(&a.output, &[report])?;
            Ok(ok)
        }
    })
}

fn open_output(path: &str) -> Result<Box<dyn Write>> {
    if path == "-" {
        return Ok(Box::new(io::stdout().lock()));
    }
    let file = File::create(path).with_context(|| format!("cannot write {path}"))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn write_text(path: &str, text: &str) -> Result<()> {
    let mut w = open_output(path)?;
    writeln!(w, "{text}").with_context(|| format!("cannot write {path}"))?;
    w.flush().with_context(|| format!("cannot write {path}"))
}

/// One JSON document per line.
pub fn write_json_lines<T: Serialize>(path: &str, items: &[T]) -> Result<()> {
    let mut w = open_output(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        writeln!(w).with_context(|| format!("cannot write {path}"))?;
    }
    w.flush().with_context(|| format!("cannot write {path}"))
}

pub fn cmd_gen(a: &GenArgs) -> Result<Circuit> {
    let mut c = build_brickwork(a.modes, a.depth.unwrap_or(a.modes), AngleSource::Seeded(a.seed))?;
    if let Some(g) = a.gamma {
        c = with_uniform_loss(&c, g)?;
    }
    Ok(c)
}

fn load_circuit(path: &Path) -> Result<Circuit> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Circuit::from_json(&text).with_context(|| format!("invalid circuit in {}", path.display()))
}

/// A single value for every mode, or one value per mode.
pub fn parse_squeezing(text: &str, num_modes: usize) -> Result<SqueezeSpec> {
    let values = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad squeezing value {t:?}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(match values.as_slice() {
        [r] => SqueezeSpec::new(vec![*r; num_modes])?,
        _ if values.len() == num_modes => SqueezeSpec::new(values)?,
        _ => bail!("{} squeezing values for {num_modes} modes", values.len()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbRecord {
    pub outcome: FockOutcome,
    pub probability: Option<f64>,
    pub picture: PictureArg,
    pub backend: Backend,
    pub n_c: Option<usize>,
    pub max_bond: Option<usize>,
    pub truncation_weight: Option<f64>,
    pub flop_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Requested outcomes in command-line order, explicit ones first.
fn collect_outcomes(a: &ProbArgs, num_modes: usize) -> Result<Vec<FockOutcome>> {
    let mut out = Vec::new();
    for text in &a.outcomes {
        let n: FockOutcome = text.parse().map_err(|e| anyhow!("outcome {text:?}: {e}"))?;
        if n.num_modes() != num_modes {
            bail!("outcome {n} has {} modes, circuit has {num_modes}", n.num_modes());
        }
        out.push(n);
    }
    for &t in &a.all_with_total {
        out.extend(FockOutcome::with_total(num_modes, t));
    }
    if out.is_empty() {
        bail!("no outcomes requested; use --outcome or --all-with-total");
    }
    Ok(out)
}

/// Cutoff used when none is given: exact photon-number support for lossless
/// circuits, the loss rule otherwise.
pub fn auto_cutoff(
    c: &Circuit,
    s: &SqueezeSpec,
    n: &FockOutcome,
    epsilon: f64,
    num_sources: Option<usize>,
) -> Result<usize> {
    let floor = n.total().max(1);
    if c.is_lossless() {
        return Ok(floor);
    }
    let gamma = c
        .uniform_gamma()
        .map_err(|k| anyhow!("automatic cutoff needs uniform loss (gate {k} differs); pass --cutoff"))?;
    let r = s.r[0];
    if s.r.iter().any(|&x| x != r) {
        bail!("automatic cutoff needs uniform squeezing; pass --cutoff");
    }
    let q = num_sources.unwrap_or_else(|| c.lossy_gate_count());
    let policy = CutoffPolicy::new(gamma, q, c.num_modes, r, n.total())
        .and_then(|p| p.with_epsilon(epsilon))
        .context("automatic cutoff unavailable; pass --cutoff")?;
    Ok(choose_cutoff(&policy)?.max(floor))
}

pub fn cmd_prob(a: &ProbArgs) -> Result<Vec<ProbRecord>> {
    let c = load_circuit(&a.circuit)?;
    let s = parse_squeezing(&a.squeezing, c.num_modes)?;
    let outcomes = collect_outcomes(a, c.num_modes)?;
    let policy = TruncationPolicy::new(a.svd_threshold, a.max_bond)?;
    let blank = |n: &FockOutcome| ProbRecord {
        outcome: n.clone(),
        probability: None,
        picture: a.picture,
        backend: a.backend,
        n_c: None,
        max_bond: None,
        truncation_weight: None,
        flop_estimate: None,
        wall_time: None,
        warnings: Vec::new(),
        error: None,
    };

    if a.backend == Backend::Gaussian {
        if let Err(k) = c.uniform_gamma() {
            bail!("gaussian backend needs a lossless or uniformly lossy circuit; gate {k} differs");
        }
        let g = evolve_circuit(&squeezed_vacuum_cov(&s), &c)?;
        return Ok(outcomes
            .par_iter()
            .map(|n| {
                let start = Instant::now();
                let mut rec = blank(n);
                match gbs_probability(&g, n) {
                    Ok(p) => rec.probability = Some(p),
                    Err(e) => rec.error = Some(e.to_string()),
                }
                rec.wall_time = (!a.no_timing).then(|| start.elapsed().as_secs_f64());
                rec
            })
            .collect());
    }

    let cutoffs: Vec<Result<usize>> = outcomes
        .iter()
        .map(|n| match a.cutoff {
            Some(nc) => Ok(nc),
            None => auto_cutoff(&c, &s, n, a.epsilon, a.num_sources),
        })
        .collect();

    if a.backend == Backend::Dense {
        let mut cache: BTreeMap<usize, GbsResult<Box<dyn DenseDist>>> = BTreeMap::new();
        return Ok(outcomes
            .iter()
            .zip(cutoffs)
            .map(|(n, nc)| {
                let start = Instant::now();
                let mut rec = blank(n);
                let result = nc.and_then(|nc| {
                    rec.n_c = Some(nc);
                    let state = cache.entry(nc).or_insert_with(|| dense_output(&c, &s, nc));
                    match state {
                        Ok(st) => Ok(st.probability(n)?),
                        Err(e) => Err(anyhow!(e.clone())),
                    }
                });
                match result {
                    Ok(p) => rec.probability = Some(p),
                    Err(e) => rec.error = Some(format!("{e:#}")),
                }
                rec.wall_time = (!a.no_timing).then(|| start.elapsed().as_secs_f64());
                rec
            })
            .collect());
    }

    // Outcomes sharing a cutoff go through one batch call, so a Schrödinger
    // evolution is computed once per cutoff.
    let mut records: Vec<ProbRecord> = outcomes.iter().map(blank).collect();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, nc) in cutoffs.into_iter().enumerate() {
        match nc {
            Ok(nc) => groups.entry(nc).or_default().push(k),
            Err(e) => records[k].error = Some(format!("{e:#}")),
        }
    }
    let picture = tn_picture(a.picture, &c);
    for (nc, members) in groups {
        let batch: Vec<FockOutcome> = members.iter().map(|&k| outcomes[k].clone()).collect();
        let start = Instant::now();
        let results = batch_probabilities(picture, &c, &batch, &s, nc, &policy);
        let per_outcome = start.elapsed().as_secs_f64() / batch.len() as f64;
        for (k, result) in members.into_iter().zip(results) {
            let rec = &mut records[k];
            rec.n_c = Some(nc);
            match result {
                Ok((p, st)) => {
                    rec.probability = Some(p);
                    rec.max_bond = Some(st.max_bond_seen);
                    rec.truncation_weight = Some(st.truncation_weight);
                    rec.flop_estimate = Some(st.flop_estimate);
                    rec.warnings = st.warnings;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec.wall_time = (!a.no_timing).then_some(per_outcome);
        }
    }
    Ok(records)
}

fn tn_picture(picture: PictureArg, c: &Circuit) -> Picture {
    match picture {
        PictureArg::Schrodinger => Picture::Schrodinger,
        PictureArg::Heisenberg if c.is_lossless() => Picture::HeisenbergLossless,
        PictureArg::Heisenberg => Picture::HeisenbergLossy,
    }
}

trait DenseDist: Send + Sync {
    fn probability(&self, n: &FockOutcome) -> GbsResult<f64>;
}

impl DenseDist for gbs_tn::fockdense::DenseState {
    fn probability(&self, n: &FockOutcome) -> GbsResult<f64> {
        dense_probability(self, n)
    }
}

impl DenseDist for DenseDensity {
    fn probability(&self, n: &FockOutcome) -> GbsResult<f64> {
        dense_probability(self, n)
    }
}

fn dense_output(c: &Circuit, s: &SqueezeSpec, nc: usize) -> GbsResult<Box<dyn DenseDist>> {
    let psi = dense_squeezed_vacuum(s, nc)?;
    if c.is_lossless() {
        Ok(Box::new(dense_evolve_state(&psi, c)?))
    } else {
        Ok(Box::new(dense_evolve_density(&DenseDensity::from_state(&psi)?, c)?))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CutoffRecord {
    pub n_c: usize,
    pub delta: f64,
    pub num_sources: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub n_tilde: usize,
    pub num_modes: usize,
    pub r: f64,
}

pub fn cmd_cutoff(a: &CutoffArgs) -> Result<CutoffRecord> {
    let (modes, gamma, lossy_gates) = match &a.circuit {
        Some(path) => {
            let c = load_circuit(path)?;
            let gamma = c.uniform_gamma().map_err(|k| anyhow!("circuit loss is not uniform (gate {k} differs)"))?;
            (c.num_modes, gamma, Some(c.lossy_gate_count()))
        }
        None => (
            a.modes.context("--modes is required without --circuit")?,
            a.gamma.context("--gamma is required without --circuit")?,
            None,
        ),
    };
    let q = a
        .num_sources
        .or(lossy_gates)
        .context("--num-sources is required without --circuit")?;
    let policy = CutoffPolicy::new(gamma, q, modes, a.squeezing, a.n_tilde)?.with_epsilon(a.epsilon)?;
    let (n_c, delta) = choose_cutoff_with_delta(&policy)?;
    Ok(CutoffRecord {
        n_c,
        delta,
        num_sources: q,
        gamma,
        epsilon: a.epsilon,
        n_tilde: a.n_tilde,
        num_modes: modes,
        r: a.squeezing,
    })
}

/// `start:end:step` (inclusive) or a comma-separated list.
pub fn parse_usize_range(text: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = text.split(':').collect();
    if let [start, end, step] = parts.as_slice() {
        let (start, end, step): (usize, usize, usize) = (start.parse()?, end.parse()?, step.parse()?);
        if step == 0 {
            bail!("range step must be positive");
        }
        return Ok((start..=end).step_by(step).collect());
    }
    text.split(',').map(|t| t.trim().parse::<usize>().with_context(|| format!("bad integer {t:?}"))).collect()
}

/// Float version of [`parse_usize_range`]; grid points are rounded to 12
/// decimals so `0.3:0.7:0.1` yields exactly five values.
pub fn parse_f64_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if let [start, end, step] = parts.as_slice() {
        let (start, end, step): (f64, f64, f64) = (start.parse()?, end.parse()?, step.parse()?);
        if !(step > 0.0) || end < start {
            bail!("range needs start ≤ end and a positive step");
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect());
    }
    text.split(',').map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number {t:?}"))).collect()
}

pub fn cmd_scaling(a: &ScalingArgs) -> Result<Vec<ScalingRow>> {
    Ok(scaling_grid(&parse_usize_range(&a.modes)?, &parse_f64_range(&a.squeezing)?)?)
}

pub fn write_scaling_csv(path: &str, rows: &[ScalingRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_output(path)?);
    w.write_record(["M", "r", "n_mode", "D_heisenberg", "D_schrodinger", "out_of_regime"])?;
    let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
    for row in rows {
        w.write_record([
            row.num_modes.to_string(),
            row.r.to_string(),
            row.n_mode.to_string(),
            opt(row.d_heisenberg),
            opt(row.d_schrodinger),
            row.out_of_regime.to_string(),
        ])?;
    }
    w.flush().with_context(|| format!("cannot write {path}"))
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub instance: Instance,
    pub seed: u64,
    pub engines: Vec<&'static str>,
    pub outcomes: usize,
    pub max_deviation: f64,
    pub worst_outcome: Option<FockOutcome>,
    pub max_bond_seen: usize,
    pub bond_bound_violations: usize,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn cmd_validate(a: &ValidateArgs) -> Result<ValidationReport> {
    let policy = TruncationPolicy::default();
    let (c, s, nc, outcomes) = match a.instance {
        Instance::LosslessM4 => {
            let c = build_brickwork(4, 4, AngleSource::Seeded(a.seed))?;
            let outcomes = [0, 2, 4].iter().flat_map(|&t| FockOutcome::with_total(4, t)).collect::<Vec<_>>();
            (c, SqueezeSpec::uniform(4, 0.4), 8, outcomes)
        }
        Instance::LossyM3 => {
            let c = with_uniform_loss(&build_brickwork(3, 3, AngleSource::Seeded(a.seed))?, 0.05)?;
            (c, SqueezeSpec::uniform(3, 0.4), 4, FockOutcome::up_to_total(3, 3))
        }
    };
    let lossless = c.is_lossless();

    let tn_heis: Vec<(f64, EvolutionStats)> = batch_probabilities(tn_picture(PictureArg::Heisenberg, &c), &c, &outcomes, &s, nc, &policy)
        .into_iter()
        .collect::<GbsResult<_>>()?;
    let dense = dense_output(&c, &s, nc)?;
    let mut columns: Vec<(&'static str, Vec<f64>)> = vec![
        ("tn-heisenberg", tn_heis.iter().map(|x| x.0).collect()),
        ("dense", outcomes.iter().map(|n| dense.probability(n)).collect::<GbsResult<_>>()?),
    ];
    if lossless {
        let schr: Vec<f64> = batch_probabilities(Picture::Schrodinger, &c, &outcomes, &s, nc, &policy)
            .into_iter()
            .map(|r| r.map(|x| x.0))
            .collect::<GbsResult<_>>()?;
        let g = evolve_circuit(&squeezed_vacuum_cov(&s), &c)?;
        let gauss: Vec<f64> = outcomes.iter().map(|n| gbs_probability(&g, n)).collect::<GbsResult<_>>()?;
        columns.push(("tn-schrodinger", schr));
        columns.push(("gaussian", gauss));
    }

    let mut max_deviation = 0.0;
    let mut worst = None;
    for (k, n) in outcomes.iter().enumerate() {
        for i in 0..columns.len() {
            for j in i + 1..columns.len() {
                let dev = (columns[i].1[k] - columns[j].1[k]).abs();
                if dev > max_deviation {
                    max_deviation = dev;
                    worst = Some(n.clone());
                }
            }
        }
    }
    // The port bound applies to the reversed Fock state; operators are only
    // checked in the lossless case.
    let bond_bound_violations = if lossless {
        outcomes
            .iter()
            .zip(&tn_heis)
            .filter(|(n, (_, st))| st.max_bond_seen as u128 > dmax_fbs(n))
            .count()
    } else {
        0
    };
    Ok(ValidationReport {
        instance: a.instance,
        seed: a.seed,
        engines: columns.iter().map(|c| c.0).collect(),
        outcomes: outcomes.len(),
        max_deviation,
        worst_outcome: worst,
        max_bond_seen: tn_heis.iter().map(|x| x.1.max_bond_seen).max().unwrap_or(1),
        bond_bound_violations,
        tolerance: a.tolerance,
        passed: max_deviation <= a.tolerance && bond_bound_violations == 0,
    })
}
