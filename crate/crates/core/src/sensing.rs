//! Snapshot schedules, the stacked sensing matrix Φ and noisy measurements.
//!
//! Snapshot `m` transmits `s_m = F_m·x_m` and combines with `W_m`, so its
//! block of Φ is `s_mᵀ ⊗ W_m^H` acting on the column-major `vec(H)`. With the
//! dictionary `Ψ = conj(Ā_t) ⊗ Ā_r` the block of ΦΨ factors as
//! `(s_mᵀ·conj(Ā_t)) ⊗ (W_m^H·Ā_r)`; [`EquivalentOperator`] works on those
//! factors and never forms ΦΨ.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, AngleDictionary, ChannelRealization};
use crate::codebook::{BeamformerCodebook, DesignResult};
use crate::error::{Error, Result};
use crate::estimator::SensingOperator;
use crate::numerics::{unit_root, CMatrix, C0};

/// One (precoder block, pilot, combiner block) triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotIndex {
    pub precoder_block: usize,
    pub pilot: usize,
    pub combiner_block: usize,
}

/// Every precoder/pilot/combiner combination once, precoder outermost and
/// combiner innermost.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotSchedule {
    pub entries: Vec<SnapshotIndex>,
    pub precoder_blocks: usize,
    pub pilots: usize,
    pub combiner_blocks: usize,
}

impl SnapshotSchedule {
    pub fn new(precoder_blocks: usize, pilots: usize, combiner_blocks: usize) -> Self {
        let mut entries = Vec::with_capacity(precoder_blocks * pilots * combiner_blocks);
        for precoder_block in 0..precoder_blocks {
            for pilot in 0..pilots {
                for combiner_block in 0..combiner_blocks {
                    entries.push(SnapshotIndex {
                        precoder_block,
                        pilot,
                        combiner_block,
                    });
                }
            }
        }
        Self {
            entries,
            precoder_blocks,
            pilots,
            combiner_blocks,
        }
    }

    /// Total snapshot count M.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn build_schedule(design: &DesignResult, combiner: &BeamformerCodebook) -> SnapshotSchedule {
    SnapshotSchedule::new(
        design.precoder.block_count(),
        design.pilot.m_x(),
        combiner.block_count(),
    )
}

/// Transmit vector `s_m = F_m x_m` and combiner `W_m` of a single snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub transmit: Vec<Complex64>,
    pub combiner: CMatrix,
}

/// The measurement setup: snapshots in acquisition order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingSystem {
    /// Present for codebook designs; random configurations have none.
    pub schedule: Option<SnapshotSchedule>,
    snapshots: Vec<Snapshot>,
    n_t: usize,
    n_r: usize,
    l_r: usize,
}

impl SensingSystem {
    /// Builds a system from explicit snapshots, which must agree on dimensions.
    pub fn from_snapshots(snapshots: Vec<Snapshot>) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| Error::Dimension("sensing system needs at least one snapshot".into()))?;
        let (n_t, n_r, l_r) = (first.transmit.len(), first.combiner.rows(), first.combiner.cols());
        if let Some(m) = snapshots
            .iter()
            .position(|s| s.transmit.len() != n_t || s.combiner.shape() != (n_r, l_r))
        {
            return Err(Error::Dimension(format!(
                "snapshot {m} does not match the N_t = {n_t}, N_r x L_r = {n_r}x{l_r} of snapshot 0"
            )));
        }
        Ok(Self {
            schedule: None,
            snapshots,
            n_t,
            n_r,
            l_r,
        })
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn l_r(&self) -> usize {
        self.l_r
    }

    /// Number of rows of Φ, `M·L_r`.
    pub fn measurement_count(&self) -> usize {
        self.snapshots.len() * self.l_r
    }

    /// Dense Φ, `(M·L_r) × (N_t·N_r)`, rows stacked in snapshot order.
    pub fn phi(&self) -> CMatrix {
        let (n_r, l_r) = (self.n_r, self.l_r);
        let mut phi = CMatrix::zeros(self.measurement_count(), self.n_t * n_r);
        for (m, snap) in self.snapshots.iter().enumerate() {
            for r in 0..l_r {
                let row = m * l_r + r;
                for (t, &st) in snap.transmit.iter().enumerate() {
                    for q in 0..n_r {
                        phi[(row, t * n_r + q)] = st * snap.combiner[(q, r)].conj();
                    }
                }
            }
        }
        phi
    }

    /// Structured `√ρ·Φ·Ψ` for the given dictionaries.
    pub fn equivalent_operator(
        &self,
        at: &AngleDictionary,
        ar: &AngleDictionary,
        rho: f64,
    ) -> Result<EquivalentOperator> {
        EquivalentOperator::new(self, at, ar, rho)
    }
}

/// `Φ` for a designed codebook, with snapshots in schedule order.
pub fn assemble_phi(
    schedule: &SnapshotSchedule,
    design: &DesignResult,
    combiner: &BeamformerCodebook,
) -> Result<SensingSystem> {
    if schedule.precoder_blocks != design.precoder.block_count()
        || schedule.pilots != design.pilot.m_x()
        || schedule.combiner_blocks != combiner.block_count()
    {
        return Err(Error::Dimension(
            "schedule does not match the design and combiner codebooks".into(),
        ));
    }
    let precoders = design.precoder.blocks();
    let combiners = combiner.blocks();
    let pilots: Vec<Vec<Complex64>> = (0..design.pilot.m_x()).map(|k| design.pilot.vector(k)).collect();
    let mut transmit = vec![vec![Vec::new(); pilots.len()]; precoders.len()];
    for (f, block) in precoders.iter().enumerate() {
        for (k, x) in pilots.iter().enumerate() {
            transmit[f][k] = block.matvec(x)?;
        }
    }
    let snapshots = schedule
        .entries
        .iter()
        .map(|e| Snapshot {
            transmit: transmit[e.precoder_block][e.pilot].clone(),
            combiner: combiners[e.combiner_block].clone(),
        })
        .collect();
    let mut system = SensingSystem::from_snapshots(snapshots)?;
    system.schedule = Some(schedule.clone());
    Ok(system)
}

/// Shape of a random phase-shifter configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomConfigSpec {
    pub n_t: usize,
    pub n_r: usize,
    pub l_t: usize,
    pub l_r: usize,
    pub snapshots: usize,
    pub phase_bits: u32,
}

/// Random configuration baseline. Every snapshot gets its own `F_m` and `W_m`
/// whose entries carry uniformly random phases quantized to `phase_bits`
/// bits, and a pilot with uniformly random continuous phases.
pub fn random_configuration<R: Rng + ?Sized>(spec: &RandomConfigSpec, rng: &mut R) -> Result<SensingSystem> {
    if spec.snapshots == 0 || spec.l_t == 0 || spec.l_r == 0 {
        return Err(Error::InvalidArgument(
            "random configuration needs snapshots and RF chains".into(),
        ));
    }
    if spec.phase_bits == 0 || spec.phase_bits > 30 {
        return Err(Error::InvalidArgument(format!(
            "phase resolution must be 1..=30 bits, got {}",
            spec.phase_bits
        )));
    }
    // Rounding a uniform phase to the grid is uniform over the grid levels,
    // so levels are drawn directly.
    let levels = 1usize << spec.phase_bits;
    let table: Vec<Complex64> = if levels <= 1 << 16 {
        (0..levels).map(|k| unit_root(k, levels)).collect()
    } else {
        Vec::new()
    };
    let quantized = |rows: usize, cols: usize, rng: &mut R| {
        let data = (0..rows * cols)
            .map(|_| {
                let k = rng.random_range(0..levels);
                table.get(k).copied().unwrap_or_else(|| unit_root(k, levels))
            })
            .collect();
        CMatrix::from_row_major(rows, cols, data)
    };
    let mut snapshots = Vec::with_capacity(spec.snapshots);
    for _ in 0..spec.snapshots {
        let f = quantized(spec.n_t, spec.l_t, rng)?;
        let x: Vec<Complex64> = (0..spec.l_t).map(|_| random_phase(rng)).collect();
        let w = quantized(spec.n_r, spec.l_r, rng)?;
        snapshots.push(Snapshot {
            transmit: f.matvec(&x)?,
            combiner: w,
        });
    }
    SensingSystem::from_snapshots(snapshots)
}

fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..TAU))
}

/// Received samples for one channel use of the whole schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub y: Vec<Complex64>,
    pub rho: f64,
    pub noise_var: f64,
}

/// `y_m = √ρ·W_m^H·H·s_m + W_m^H·n_m`, `n_m ~ CN(0, σ² I)` drawn per snapshot.
pub fn measure<R: Rng + ?Sized>(
    system: &SensingSystem,
    channel: &ChannelRealization,
    rho: f64,
    sigma2: f64,
    rng: &mut R,
) -> Result<MeasurementSet> {
    if !(sigma2 >= 0.0) || !(rho >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need rho >= 0 and sigma2 >= 0, got rho = {rho}, sigma2 = {sigma2}"
        )));
    }
    if channel.h.shape() != (system.n_r, system.n_t) {
        return Err(Error::Dimension(format!(
            "channel is {}x{}, system expects {}x{}",
            channel.h.rows(),
            channel.h.cols(),
            system.n_r,
            system.n_t
        )));
    }
    let amp = rho.sqrt();
    let mut y = Vec::with_capacity(system.measurement_count());
    for snap in &system.snapshots {
        let mut rx = channel.h.matvec(&snap.transmit)?;
        for v in rx.iter_mut() {
            *v *= amp;
        }
        if sigma2 > 0.0 {
            for v in rx.iter_mut() {
                *v += complex_gaussian(rng, sigma2);
            }
        }
        y.extend(snap.combiner.adjoint_matvec(&rx)?);
    }
    Ok(MeasurementSet {
        y,
        rho,
        noise_var: sigma2,
    })
}

/// `√ρ·Φ·Ψ` kept in factored form. Column `g_t·G_r + g_r`, snapshot block
/// `m`, equals `√ρ·α_m[g_t]·β_m[:, g_r]` with `α_m = s_mᵀ conj(Ā_t)` and
/// `β_m = W_m^H Ā_r`.
#[derive(Debug, Clone)]
pub struct EquivalentOperator {
    /// Per snapshot: √ρ·α_m, length G_t.
    alpha: Vec<Vec<Complex64>>,
    /// Per snapshot: β_m, L_r × G_r.
    beta: Vec<CMatrix>,
    g_t: usize,
    g_r: usize,
    l_r: usize,
    norms: Vec<f64>,
}

impl EquivalentOperator {
    fn new(system: &SensingSystem, at: &AngleDictionary, ar: &AngleDictionary, rho: f64) -> Result<Self> {
        if at.antenna_count() != system.n_t || ar.antenna_count() != system.n_r {
            return Err(Error::Dimension(format!(
                "dictionaries are for {}x{} antennas, system has {}x{}",
                ar.antenna_count(),
                at.antenna_count(),
                system.n_r,
                system.n_t
            )));
        }
        let amp = rho.sqrt();
        let at_h = at.matrix().adjoint();
        let mut alpha = Vec::with_capacity(system.snapshots.len());
        let mut beta = Vec::with_capacity(system.snapshots.len());
        for snap in &system.snapshots {
            let a = at_h.matvec(&snap.transmit)?;
            alpha.push(a.into_iter().map(|z| z * amp).collect::<Vec<_>>());
            beta.push(snap.combiner.adjoint().matmul(ar.matrix())?);
        }
        let (g_t, g_r) = (at.grid_size(), ar.grid_size());
        // ‖column‖² = Σ_m |α_m[g_t]|²·‖β_m[:, g_r]‖²
        let mut norms = vec![0.0; g_t * g_r];
        for (a, b) in alpha.iter().zip(&beta) {
            let bn: Vec<f64> = b.column_norms().iter().map(|x| x * x).collect();
            for (gt, av) in a.iter().enumerate() {
                let an = av.norm_sqr();
                for (gr, bv) in bn.iter().enumerate() {
                    norms[gt * g_r + gr] += an * bv;
                }
            }
        }
        let norms = norms.into_iter().map(f64::sqrt).collect();
        Ok(Self {
            alpha,
            beta,
            g_t,
            g_r,
            l_r: system.l_r,
            norms,
        })
    }

    /// Dense copy, for checks on small systems.
    pub fn to_dense(&self) -> CMatrix {
        let cols = self.g_t * self.g_r;
        let mut out = CMatrix::zeros(self.rows(), cols);
        for j in 0..cols {
            for (i, v) in self.column(j).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

impl SensingOperator for EquivalentOperator {
    fn rows(&self) -> usize {
        self.alpha.len() * self.l_r
    }

    fn cols(&self) -> usize {
        self.g_t * self.g_r
    }

    fn column(&self, j: usize) -> Vec<Complex64> {
        let (gt, gr) = (j / self.g_r, j % self.g_r);
        let mut out = Vec::with_capacity(self.rows());
        for (a, b) in self.alpha.iter().zip(&self.beta) {
            for r in 0..self.l_r {
                out.push(a[gt] * b[(r, gr)]);
            }
        }
        out
    }

    fn adjoint_apply(&self, r: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![C0; self.cols()];
        for (m, (a, b)) in self.alpha.iter().zip(&self.beta).enumerate() {
            let rm = &r[m * self.l_r..(m + 1) * self.l_r];
            // β_m^H r_m
            let mut proj = vec![C0; self.g_r];
            for (q, &rv) in rm.iter().enumerate() {
                for (p, bv) in proj.iter_mut().zip(b.row(q)) {
                    *p += bv.conj() * rv;
                }
            }
            for (gt, av) in a.iter().enumerate() {
                let ac = av.conj();
                let dst = &mut out[gt * self.g_r..(gt + 1) * self.g_r];
                for (d, p) in dst.iter_mut().zip(&proj) {
                    *d += ac * p;
                }
            }
        }
        out
    }

    fn column_norms(&self) -> Vec<f64> {
        self.norms.clone()
    }
}
