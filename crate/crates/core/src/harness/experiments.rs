use std::collections::BTreeMap;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CodebookKind, PermutationPilots, SystemConfig};
use super::{substream, SETUP_TRIAL};
use crate::channel::{build_dictionary, generate_channel, generate_on_grid_channel, AngleDictionary};
use crate::codebook::{
    combiner_codebook, random_permutation_design, select_pilots_and_order, BeamformerCodebook, DesignResult,
    PilotChoice,
};
use crate::estimator::{nmse, omp, to_db};
use crate::sensing::{
    assemble_phi, build_schedule, measure, random_configuration, EquivalentOperator, RandomConfigSpec, SensingSystem,
};
use crate::{Error, Result};

/// Receiver noise variance; SNR is swept through the transmit power.
const NOISE_VAR: f64 = 1.0;

/// Stream shared by every cell of a sweep for channel and noise draws, so
/// cells are compared on common random numbers. Cell `c` draws its own
/// codebook randomness from stream `c + 1`.
const COMMON_STREAM: u32 = 0;

fn index_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n)
        .ok()
        .filter(|&v| v < SETUP_TRIAL)
        .ok_or_else(|| Error::Config(format!("{what} = {n} is too large")))
}

fn proposed_design(cfg: &SystemConfig, m_x: usize) -> Result<DesignResult> {
    select_pilots_and_order(cfg.n_t, cfg.l_t, m_x, &cfg.greedy_options())
}

fn pilot_choice(cfg: &SystemConfig, proposed: &DesignResult) -> PilotChoice {
    match cfg.permutation_pilots {
        PermutationPilots::Proposed => PilotChoice::Fixed(proposed.pilot.selected().to_vec()),
        PermutationPilots::Random => PilotChoice::Random,
    }
}

/// A design plus its human-readable summary.
#[derive(Debug, Clone)]
pub struct DesignReport {
    pub kind: CodebookKind,
    pub design: DesignResult,
    pub summary: String,
}

/// Designs the transmit codebook named by `codebook_kind` at `m_x`.
/// A random permutation is drawn from the setup stream of cell 0.
pub fn run_design(cfg: &SystemConfig) -> Result<DesignReport> {
    cfg.validate()?;
    let design = match cfg.codebook_kind {
        CodebookKind::Proposed => proposed_design(cfg, cfg.m_x)?,
        CodebookKind::RandomPermutation => {
            let choice = match cfg.permutation_pilots {
                PermutationPilots::Proposed => pilot_choice(cfg, &proposed_design(cfg, cfg.m_x)?),
                PermutationPilots::Random => PilotChoice::Random,
            };
            let mut rng = substream(cfg.master_seed, 0, SETUP_TRIAL);
            random_permutation_design(cfg.n_t, cfg.l_t, cfg.m_x, &choice, &mut rng)?
        }
        CodebookKind::RandomConfiguration => {
            return Err(Error::Config(
                "random_configuration is redrawn every trial and has no fixed design".into(),
            ))
        }
    };
    let (i, j) = design.coherence.pair();
    let summary = format!(
        "codebook: {}\nn_t = {}, l_t = {}, m_x = {}\ncoherence: {:.6} (columns {i} and {j})\npilot subset: {:?}\nordering: {:?}\n",
        cfg.codebook_kind.as_str(),
        design.n_t(),
        design.l_t(),
        design.m_x(),
        design.coherence.value(),
        design.pilot.selected(),
        design.precoder.ordering(),
    );
    Ok(DesignReport {
        kind: cfg.codebook_kind,
        design,
        summary,
    })
}

/// Coherence of random-permutation designs next to the proposed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceDistribution {
    pub m_x: usize,
    pub pilot_indices: Vec<usize>,
    pub proposed: f64,
    /// `(draw index, μ)` of every non-degenerate draw.
    pub samples: Vec<(usize, f64)>,
    /// Draws that left a transmit direction unexcited, so μ is undefined.
    pub degenerate: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

fn permutation_samples(
    cfg: &SystemConfig,
    proposed: &DesignResult,
    draws: usize,
    cell: u32,
) -> Result<CoherenceDistribution> {
    if draws == 0 {
        return Err(Error::Config("need at least one permutation draw".into()));
    }
    index_u32(draws, "draws")?;
    let m_x = proposed.m_x();
    let choice = pilot_choice(cfg, proposed);
    let draws_mu = (0..draws as u32)
        .into_par_iter()
        .map(|d| {
            let mut rng = substream(cfg.master_seed, cell, d);
            match random_permutation_design(cfg.n_t, cfg.l_t, m_x, &choice, &mut rng) {
                Ok(r) => Ok(Some(r.coherence.value())),
                Err(Error::DegenerateDesign { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<Option<f64>>>>()?;
    let samples: Vec<(usize, f64)> = draws_mu
        .iter()
        .enumerate()
        .filter_map(|(i, mu)| mu.map(|mu| (i, mu)))
        .collect();
    let degenerate = draws - samples.len();
    let values = samples.iter().map(|&(_, mu)| mu);
    let mean = values.clone().sum::<f64>() / samples.len() as f64;
    let min = values.clone().fold(f64::INFINITY, f64::min);
    let max = values.fold(f64::NEG_INFINITY, f64::max);
    Ok(CoherenceDistribution {
        m_x,
        pilot_indices: proposed.pilot.selected().to_vec(),
        proposed: proposed.coherence.value(),
        samples,
        degenerate,
        mean,
        min,
        max,
    })
}

/// `draws` random permutations at `m_x`, seeded from cell `m_x`, with the
/// proposed design for reference.
pub fn run_coherence_distribution(cfg: &SystemConfig, m_x: usize, draws: usize) -> Result<CoherenceDistribution> {
    cfg.validate()?;
    let proposed = proposed_design(cfg, m_x)?;
    permutation_samples(cfg, &proposed, draws, index_u32(m_x, "m_x")?)
}

/// One row of the coherence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub m_x: usize,
    pub proposed: f64,
    pub coherence_pair: (usize, usize),
    pub pilot_indices: Vec<usize>,
    pub permutation_mean: f64,
    pub permutation_min: f64,
    pub permutation_max: f64,
    pub permutation_draws: usize,
    pub permutation_degenerate: usize,
    pub wall_time_s: f64,
}

/// Proposed and random-permutation coherence for every `m_x` in `1..=l_t`.
/// Returns the rows and the proposed designs.
pub fn run_table1(cfg: &SystemConfig) -> Result<(Vec<Table1Row>, Vec<DesignResult>)> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.l_t);
    let mut designs = Vec::with_capacity(cfg.l_t);
    for m_x in 1..=cfg.l_t {
        let start = Instant::now();
        let proposed = proposed_design(cfg, m_x)?;
        let dist = permutation_samples(cfg, &proposed, cfg.permutation_draws, index_u32(m_x, "m_x")?)?;
        rows.push(Table1Row {
            m_x,
            proposed: dist.proposed,
            coherence_pair: proposed.coherence.pair(),
            pilot_indices: dist.pilot_indices,
            permutation_mean: dist.mean,
            permutation_min: dist.min,
            permutation_max: dist.max,
            permutation_draws: dist.samples.len() + dist.degenerate,
            permutation_degenerate: dist.degenerate,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
        designs.push(proposed);
    }
    Ok((rows, designs))
}

/// Parameter swept by an NMSE experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Snr,
    #[value(name = "m-x", alias = "m_x")]
    MX,
    #[value(name = "n-p", alias = "n_p")]
    NP,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Snr => "snr_db",
            Self::MX => "m_x",
            Self::NP => "n_p",
        }
    }
}

/// Operating point of one NMSE cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub m_x: usize,
    pub n_p: usize,
    pub snr_db: f64,
}

impl CellSpec {
    pub fn axis_value(&self, axis: SweepAxis) -> f64 {
        match axis {
            SweepAxis::Snr => self.snr_db,
            SweepAxis::MX => self.m_x as f64,
            SweepAxis::NP => self.n_p as f64,
        }
    }
}

/// Cells of a sweep: the SNR axis runs `snr_db` at `m_x`; the other axes
/// run their value list at `fixed_snr_db`.
pub fn nmse_plan(cfg: &SystemConfig, axis: SweepAxis) -> Vec<CellSpec> {
    match axis {
        SweepAxis::Snr => cfg
            .snr_db
            .iter()
            .map(|&snr_db| CellSpec {
                m_x: cfg.m_x,
                n_p: cfg.n_p,
                snr_db,
            })
            .collect(),
        SweepAxis::MX => cfg
            .m_x_values
            .iter()
            .filter(|&&m_x| m_x <= cfg.l_t)
            .map(|&m_x| CellSpec {
                m_x,
                n_p: cfg.n_p,
                snr_db: cfg.fixed_snr_db,
            })
            .collect(),
        SweepAxis::NP => cfg
            .n_p_values
            .iter()
            .map(|&n_p| CellSpec {
                m_x: cfg.m_x,
                n_p,
                snr_db: cfg.fixed_snr_db,
            })
            .collect(),
    }
}

/// Aggregated NMSE of one (cell, codebook) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmseCell {
    pub axis: SweepAxis,
    pub axis_value: f64,
    pub cell: usize,
    pub codebook: CodebookKind,
    pub m_x: usize,
    pub n_p: usize,
    pub snr_db: f64,
    /// Snapshot count.
    pub m: usize,
    pub trials: usize,
    pub mean_nmse: f64,
    pub mean_nmse_db: f64,
    pub std_error: f64,
    /// Coherence of the fixed design, if there is one.
    pub coherence: Option<f64>,
    pub seed: u64,
    pub wall_time_s: f64,
}

enum Source {
    Fixed {
        system: SensingSystem,
        op: EquivalentOperator,
    },
    Random(RandomConfigSpec),
}

struct Shared {
    at: AngleDictionary,
    ar: AngleDictionary,
    combiner: BeamformerCodebook,
}

fn fixed_source(design: &DesignResult, shared: &Shared, rho: f64) -> Result<Source> {
    let schedule = build_schedule(design, &shared.combiner);
    let system = assemble_phi(&schedule, design, &shared.combiner)?;
    let op = system.equivalent_operator(&shared.at, &shared.ar, rho)?;
    Ok(Source::Fixed { system, op })
}

fn nmse_trial(
    cfg: &SystemConfig,
    shared: &Shared,
    spec: &CellSpec,
    source: &Source,
    rho: f64,
    common: &mut ChaCha8Rng,
    own: &mut ChaCha8Rng,
) -> Result<f64> {
    let paths = cfg.path_config(spec.n_p);
    let channel = if cfg.on_grid {
        generate_on_grid_channel(&shared.at, &shared.ar, &paths, common)?
    } else {
        generate_channel(cfg.n_t, cfg.n_r, &paths, common)?
    };
    let drawn;
    let (system, op) = match source {
        Source::Fixed { system, op } => (system, op),
        Source::Random(rc) => {
            let system = random_configuration(rc, own)?;
            let op = system.equivalent_operator(&shared.at, &shared.ar, rho)?;
            drawn = (system, op);
            (&drawn.0, &drawn.1)
        }
    };
    let y = measure(system, &channel, rho, NOISE_VAR, common)?.y;
    let est = omp(op, &y, &cfg.omp_config(spec.n_p))?;
    nmse(&channel.h, &est.channel(&shared.at, &shared.ar)?)
}

/// Mean, its dB value and the standard error of the mean.
fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let se = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    (mean, to_db(mean), se)
}

/// Sweep results and the proposed designs they used, by ascending `m_x`.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub cells: Vec<NmseCell>,
    pub designs: Vec<DesignResult>,
}

/// Runs every cell for every codebook kind, cells outermost. Trial `t` draws
/// its channel and noise from substream `(master_seed, 0, t)` in every cell
/// and codebook, and codebook randomness of cell `c` from `(master_seed, c + 1, t)`.
pub fn run_nmse_cells(
    cfg: &SystemConfig,
    axis: SweepAxis,
    cells: &[CellSpec],
    kinds: &[CodebookKind],
) -> Result<SweepOutput> {
    cfg.validate()?;
    let trials = index_u32(cfg.trials, "trials")?;
    let shared = Shared {
        at: build_dictionary(cfg.n_t, cfg.g_t())?,
        ar: build_dictionary(cfg.n_r, cfg.g_r())?,
        combiner: combiner_codebook(cfg.n_r, cfg.l_r)?,
    };
    let mut designs: BTreeMap<usize, DesignResult> = BTreeMap::new();
    let mut out = Vec::with_capacity(cells.len() * kinds.len());
    for (ci, spec) in cells.iter().enumerate() {
        if spec.m_x == 0 || spec.m_x > cfg.l_t || spec.n_p == 0 || !spec.snr_db.is_finite() {
            return Err(Error::Config(format!("invalid sweep cell {spec:?}")));
        }
        let own_stream = index_u32(ci + 1, "cell index")?;
        let rho = NOISE_VAR * 10f64.powf(spec.snr_db / 10.0) * cfg.power_scale();
        let needs_proposed = kinds.iter().any(|k| match k {
            CodebookKind::Proposed => true,
            CodebookKind::RandomPermutation => cfg.permutation_pilots == PermutationPilots::Proposed,
            CodebookKind::RandomConfiguration => false,
        });
        if needs_proposed && !designs.contains_key(&spec.m_x) {
            designs.insert(spec.m_x, proposed_design(cfg, spec.m_x)?);
        }
        for &kind in kinds {
            let start = Instant::now();
            let (source, coherence) = match kind {
                CodebookKind::Proposed => {
                    let d = &designs[&spec.m_x];
                    (fixed_source(d, &shared, rho)?, Some(d.coherence.value()))
                }
                CodebookKind::RandomPermutation => {
                    let choice = match designs.get(&spec.m_x) {
                        Some(d) => pilot_choice(cfg, d),
                        None => PilotChoice::Random,
                    };
                    let mut rng = substream(cfg.master_seed, own_stream, SETUP_TRIAL);
                    let d = random_permutation_design(cfg.n_t, cfg.l_t, spec.m_x, &choice, &mut rng)?;
                    (fixed_source(&d, &shared, rho)?, Some(d.coherence.value()))
                }
                CodebookKind::RandomConfiguration => (
                    Source::Random(RandomConfigSpec {
                        n_t: cfg.n_t,
                        n_r: cfg.n_r,
                        l_t: cfg.l_t,
                        l_r: cfg.l_r,
                        snapshots: cfg.snapshots(spec.m_x),
                        phase_bits: cfg.phase_bits,
                    }),
                    None,
                ),
            };
            let values = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut common = substream(cfg.master_seed, COMMON_STREAM, t);
                    let mut own = substream(cfg.master_seed, own_stream, t);
                    nmse_trial(cfg, &shared, spec, &source, rho, &mut common, &mut own)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean_nmse, mean_nmse_db, std_error) = summarize(&values);
            out.push(NmseCell {
                axis,
                axis_value: spec.axis_value(axis),
                cell: ci,
                codebook: kind,
                m_x: spec.m_x,
                n_p: spec.n_p,
                snr_db: spec.snr_db,
                m: cfg.snapshots(spec.m_x),
                trials: values.len(),
                mean_nmse,
                mean_nmse_db,
                std_error,
                coherence,
                seed: cfg.master_seed,
                wall_time_s: start.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(SweepOutput {
        cells: out,
        designs: designs.into_values().collect(),
    })
}

/// Codebooks compared by a sweep: the configured kind and the random-configuration baseline.
pub fn sweep_kinds(cfg: &SystemConfig) -> Vec<CodebookKind> {
    let mut kinds = vec![cfg.codebook_kind];
    if cfg.codebook_kind != CodebookKind::RandomConfiguration {
        kinds.push(CodebookKind::RandomConfiguration);
    }
    kinds
}

/// The default sweep along `axis`.
pub fn run_nmse_sweep(cfg: &SystemConfig, axis: SweepAxis) -> Result<SweepOutput> {
    run_nmse_cells(cfg, axis, &nmse_plan(cfg, axis), &sweep_kinds(cfg))
}

/// Per-cell outputs of one harness invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: SystemConfig,
    pub g_t: usize,
    pub g_r: usize,
    pub seed: u64,
    pub cells: Vec<RecordCell>,
}

/// One entry of an [`ExperimentRecord`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordCell {
    pub label: String,
    pub coherence: Option<f64>,
    pub mean_nmse: Option<f64>,
    pub mean_nmse_db: Option<f64>,
    pub trials: usize,
    pub wall_time_s: f64,
}

impl ExperimentRecord {
    pub fn new(cfg: &SystemConfig, cells: Vec<RecordCell>) -> Self {
        Self {
            config: cfg.clone(),
            g_t: cfg.g_t(),
            g_r: cfg.g_r(),
            seed: cfg.master_seed,
            cells,
        }
    }

    pub fn from_nmse(cfg: &SystemConfig, cells: &[NmseCell]) -> Self {
        let cells = cells
            .iter()
            .map(|c| RecordCell {
                label: format!(
                    "{} {}={} m_x={} n_p={} snr_db={}",
                    c.codebook.as_str(),
                    c.axis.as_str(),
                    c.axis_value,
                    c.m_x,
                    c.n_p,
                    c.snr_db
                ),
                coherence: c.coherence,
                mean_nmse: Some(c.mean_nmse),
                mean_nmse_db: Some(c.mean_nmse_db),
                trials: c.trials,
                wall_time_s: c.wall_time_s,
            })
            .collect();
        Self::new(cfg, cells)
    }

    pub fn from_table1(cfg: &SystemConfig, rows: &[Table1Row]) -> Self {
        let cells = rows
            .iter()
            .map(|r| RecordCell {
                label: format!("table1 m_x={}", r.m_x),
                coherence: Some(r.proposed),
                mean_nmse: None,
                mean_nmse_db: None,
                trials: r.permutation_draws,
                wall_time_s: r.wall_time_s,
            })
            .collect();
        Self::new(cfg, cells)
    }

    pub fn from_distributions(cfg: &SystemConfig, dists: &[(CoherenceDistribution, f64)]) -> Self {
        let cells = dists
            .iter()
            .map(|(d, wall)| RecordCell {
                label: format!("coherence distribution m_x={}", d.m_x),
                coherence: Some(d.proposed),
                mean_nmse: None,
                mean_nmse_db: None,
                trials: d.samples.len() + d.degenerate,
                wall_time_s: *wall,
            })
            .collect();
        Self::new(cfg, cells)
    }
}
