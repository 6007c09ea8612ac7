use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::{CodebookKind, SystemConfig};
use super::experiments::{
    run_coherence_distribution, run_design, run_nmse_cells, run_nmse_sweep, run_table1, sweep_kinds, CellSpec,
    ExperimentRecord, SweepAxis, SweepOutput,
};
use super::output::{coherence_csv, design_json, nmse_csv, table1_csv, write_text, Manifest, ManifestFile};
use super::{worker_count, worker_pool};
use crate::codebook::DesignResult;
use crate::Result;

/// Pilot-count pair shown in the coherence-distribution figure.
const FIG2_M_X: [usize; 2] = [2, 7];
/// Pilot counts of the SNR-sweep figure (M = 64, 128, 256 snapshots).
const FIG3_M_X: [usize; 3] = [2, 4, 8];

#[derive(Debug, Parser)]
#[command(
    name = "hbcodebook",
    version,
    about = "Coherence-minimizing hybrid beamforming codebooks and channel-estimation experiments"
)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (defaults to the available cores, capped by HBCODEBOOK_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Design a transmit codebook and write its JSON artifact.
    Design(Overrides),
    /// Coherence of random precoder permutations against the proposed design.
    CoherenceDist(Overrides),
    /// Monte-Carlo NMSE sweep along one axis.
    Nmse {
        #[arg(long, value_enum)]
        axis: SweepAxis,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Regenerate the data behind a table or figure.
    Reproduce {
        #[arg(value_enum)]
        target: Target,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Table1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Target {
    fn name(self) -> &'static str {
        match self {
            Self::Table1 => "table1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
        }
    }
}

#[derive(Debug, Args)]
struct Overrides {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Random permutations per coherence distribution.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    lt: Option<usize>,
    #[arg(long)]
    lr: Option<usize>,
    #[arg(long)]
    mx: Option<usize>,
    #[arg(long)]
    np: Option<usize>,
    /// Dictionary oversampling factor.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    phase_bits: Option<u32>,
    #[arg(long, value_enum)]
    codebook: Option<CodebookKind>,
    /// Comma-separated SNR grid in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,
    /// SNR of the M_x and N_p sweeps, dB.
    #[arg(long, allow_negative_numbers = true)]
    fixed_snr_db: Option<f64>,
    /// Draw ground-truth paths on the dictionary grid.
    #[arg(long)]
    on_grid: bool,
    #[arg(long)]
    tie_tolerance: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut SystemConfig) {
        fn set<T: Clone>(dst: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *dst = v.clone();
            }
        }
        set(&mut cfg.master_seed, &self.seed);
        set(&mut cfg.trials, &self.trials);
        set(&mut cfg.permutation_draws, &self.draws);
        set(&mut cfg.n_t, &self.nt);
        set(&mut cfg.n_r, &self.nr);
        set(&mut cfg.l_t, &self.lt);
        set(&mut cfg.l_r, &self.lr);
        set(&mut cfg.m_x, &self.mx);
        set(&mut cfg.n_p, &self.np);
        set(&mut cfg.grid_multiplier, &self.gamma);
        set(&mut cfg.phase_bits, &self.phase_bits);
        set(&mut cfg.codebook_kind, &self.codebook);
        set(&mut cfg.snr_db, &self.snr_db);
        set(&mut cfg.fixed_snr_db, &self.fixed_snr_db);
        set(&mut cfg.tie_tolerance, &self.tie_tolerance);
        cfg.on_grid |= self.on_grid;
        if self.lt.is_some() && self.mx.is_none() {
            cfg.m_x = cfg.m_x.min(cfg.l_t);
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_config(cli: &Cli, overrides: &Overrides) -> Result<SystemConfig> {
    let mut cfg = match &cli.config {
        Some(path) => SystemConfig::load(path)?,
        None => SystemConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let overrides = match &cli.command {
        Command::Design(o) | Command::CoherenceDist(o) => o,
        Command::Nmse { overrides, .. } | Command::Reproduce { overrides, .. } => overrides,
    };
    let cfg = load_config(cli, overrides)?;
    let pool = worker_pool(worker_count(cli.workers)?)?;
    let out = overrides.out.as_path();
    let start = Instant::now();
    pool.install(|| match &cli.command {
        Command::Design(_) => design(&cfg, out),
        Command::CoherenceDist(_) => coherence_dist(&cfg, out),
        Command::Nmse { axis, .. } => {
            let sweep = run_nmse_sweep(&cfg, *axis)?;
            write_sweep(&cfg, out, &format!("nmse_{}", axis.as_str()), &sweep)
        }
        Command::Reproduce { target, .. } => reproduce(&cfg, *target, out),
    })?;
    eprintln!("done in {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn design_file_name(d: &DesignResult, kind: CodebookKind) -> String {
    format!(
        "design_{}_nt{}_lt{}_mx{}.json",
        kind.as_str(),
        d.n_t(),
        d.l_t(),
        d.m_x()
    )
}

fn write_designs(out: &Path, designs: &[DesignResult], files: &mut Vec<ManifestFile>) -> Result<()> {
    for d in designs {
        let rel = format!("designs/{}", design_file_name(d, CodebookKind::Proposed));
        let text = design_json(d);
        write_text(&out.join(&rel), &text)?;
        files.push(ManifestFile::new(&rel, &text));
    }
    Ok(())
}

fn finish(
    cfg: &SystemConfig,
    out: &Path,
    target: &str,
    files: Vec<ManifestFile>,
    record: ExperimentRecord,
) -> Result<()> {
    let path = out.join(format!("{target}.manifest.json"));
    write_text(&path, &Manifest::new(target, cfg, files, record).to_json())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn design(cfg: &SystemConfig, out: &Path) -> Result<()> {
    let report = run_design(cfg)?;
    let name = design_file_name(&report.design, report.kind);
    let json = design_json(&report.design);
    let path = out.join(&name);
    write_text(&path, &json)?;
    let summary_path = path.with_extension("txt");
    write_text(&summary_path, &report.summary)?;
    print!("{}", report.summary);
    println!("wrote {}", path.display());
    Ok(())
}

fn coherence_dist(cfg: &SystemConfig, out: &Path) -> Result<()> {
    let start = Instant::now();
    let dist = run_coherence_distribution(cfg, cfg.m_x, cfg.permutation_draws)?;
    let wall = start.elapsed().as_secs_f64();
    let rel = format!("coherence_mx{}.csv", cfg.m_x);
    let text = coherence_csv(std::slice::from_ref(&dist));
    write_text(&out.join(&rel), &text)?;
    println!(
        "m_x = {}: proposed {:.4}, permutations mean {:.4} min {:.4} max {:.4} over {} draws ({} degenerate)",
        dist.m_x,
        dist.proposed,
        dist.mean,
        dist.min,
        dist.max,
        dist.samples.len(),
        dist.degenerate
    );
    println!("wrote {}", out.join(&rel).display());
    let record = ExperimentRecord::from_distributions(cfg, &[(dist, wall)]);
    finish(
        cfg,
        out,
        &format!("coherence_mx{}", cfg.m_x),
        vec![ManifestFile::new(&rel, &text)],
        record,
    )
}

fn write_sweep(cfg: &SystemConfig, out: &Path, target: &str, sweep: &SweepOutput) -> Result<()> {
    let rel = format!("{target}.csv");
    let text = nmse_csv(&sweep.cells);
    write_text(&out.join(&rel), &text)?;
    for c in &sweep.cells {
        println!(
            "{:>20} {}={:<6} m_x={} n_p={} nmse {:8.3} dB (se {:.2e})",
            c.codebook.as_str(),
            c.axis.as_str(),
            c.axis_value,
            c.m_x,
            c.n_p,
            c.mean_nmse_db,
            c.std_error
        );
    }
    println!("wrote {}", out.join(&rel).display());
    let mut files = vec![ManifestFile::new(&rel, &text)];
    write_designs(out, &sweep.designs, &mut files)?;
    finish(cfg, out, target, files, ExperimentRecord::from_nmse(cfg, &sweep.cells))
}

fn reproduce(cfg: &SystemConfig, target: Target, out: &Path) -> Result<()> {
    let name = target.name();
    match target {
        Target::Table1 => {
            let (rows, designs) = run_table1(cfg)?;
            let text = table1_csv(&rows);
            write_text(&out.join("table1.csv"), &text)?;
            println!("m_x  proposed  permutation_mean");
            for r in &rows {
                println!("{:>3}  {:8.4}  {:16.4}", r.m_x, r.proposed, r.permutation_mean);
            }
            println!("wrote {}", out.join("table1.csv").display());
            let mut files = vec![ManifestFile::new("table1.csv", &text)];
            write_designs(out, &designs, &mut files)?;
            finish(cfg, out, name, files, ExperimentRecord::from_table1(cfg, &rows))
        }
        Target::Fig2 => {
            let mut dists = Vec::new();
            for m_x in FIG2_M_X.into_iter().filter(|&m| m <= cfg.l_t) {
                let start = Instant::now();
                let d = run_coherence_distribution(cfg, m_x, cfg.permutation_draws)?;
                println!(
                    "m_x = {m_x}: proposed {:.4}, permutations mean {:.4}",
                    d.proposed, d.mean
                );
                dists.push((d, start.elapsed().as_secs_f64()));
            }
            let text = coherence_csv(&dists.iter().map(|(d, _)| d.clone()).collect::<Vec<_>>());
            write_text(&out.join("fig2.csv"), &text)?;
            println!("wrote {}", out.join("fig2.csv").display());
            let record = ExperimentRecord::from_distributions(cfg, &dists);
            finish(cfg, out, name, vec![ManifestFile::new("fig2.csv", &text)], record)
        }
        Target::Fig3 => {
            let cells: Vec<CellSpec> = FIG3_M_X
                .into_iter()
                .filter(|&m| m <= cfg.l_t)
                .flat_map(|m_x| {
                    cfg.snr_db.iter().map(move |&snr_db| CellSpec {
                        m_x,
                        n_p: cfg.n_p,
                        snr_db,
                    })
                })
                .collect();
            let sweep = run_nmse_cells(cfg, SweepAxis::Snr, &cells, &sweep_kinds(cfg))?;
            write_sweep(cfg, out, name, &sweep)
        }
        Target::Fig4 => write_sweep(cfg, out, name, &run_nmse_sweep(cfg, SweepAxis::MX)?),
        Target::Fig5 => write_sweep(cfg, out, name, &run_nmse_sweep(cfg, SweepAxis::NP)?),
    }
}
