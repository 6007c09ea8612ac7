//! DFT-based pilot, precoder and combiner codebooks, and the greedy precoder
//! column ordering that minimizes the mutual coherence of the sensing matrix.
//!
//! The coherence of the full sensing matrix Φ is evaluated through the
//! N_t × N_t matrix `S = conj(F)·(I ⊗ X)·Fᵀ`: with a DFT combiner,
//! `Φ^H Φ = S ⊗ (N_r I)`, so normalizing `S` by its diagonal gives exactly the
//! normalized Gram of Φ up to the Kronecker factor.

use itertools::Itertools;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dft_matrix, max_normalized_off_diagonal, CMatrix, Coherence, C0};

/// Diagonal entries of a partial-design S below this fraction of the largest
/// one are treated as "direction not excited yet".
const PARTIAL_DIAGONAL_FLOOR: f64 = 1e-10;

/// Pilot vectors picked from the L_t-point DFT matrix, with their Gram
/// `X = Σ conj(x)·xᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotCodebook {
    l_t: usize,
    selected: Vec<usize>,
    vectors: CMatrix,
    gram: CMatrix,
}

impl PilotCodebook {
    pub fn l_t(&self) -> usize {
        self.l_t
    }

    pub fn m_x(&self) -> usize {
        self.selected.len()
    }

    /// Selected DFT column indices, ascending; always starts with 0.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// L_t × M_x matrix of pilot vectors.
    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn vector(&self, m: usize) -> Vec<Complex64> {
        self.vectors.column(m)
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }
}

/// Pilot codebook from a subset of L_t-point DFT columns. The subset must
/// contain column 0.
pub fn pilot_codebook(l_t: usize, selected: &[usize]) -> Result<PilotCodebook> {
    if l_t == 0 {
        return Err(Error::Dimension("L_t must be at least 1".into()));
    }
    if selected.is_empty() {
        return Err(Error::PilotSelection("no pilot vectors selected".into()));
    }
    let mut idx = selected.to_vec();
    idx.sort_unstable();
    if let Some(w) = idx.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::PilotSelection(format!("index {} selected twice", w[0])));
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= l_t) {
        return Err(Error::PilotSelection(format!(
            "index {bad} out of range for {l_t}-point DFT"
        )));
    }
    if idx[0] != 0 {
        return Err(Error::MissingFirstPilot);
    }
    let vectors = dft_matrix(l_t)?.select_columns(&idx);
    let gram = vectors.conj().matmul(&vectors.transpose())?;
    Ok(PilotCodebook {
        l_t,
        selected: idx,
        vectors,
        gram,
    })
}

/// DFT columns in a chosen order, cut into N/L consecutive N × L blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerCodebook {
    n: usize,
    l: usize,
    ordering: Vec<usize>,
    ordered: CMatrix,
}

impl BeamformerCodebook {
    pub fn antennas(&self) -> usize {
        self.n
    }

    pub fn rf_chains(&self) -> usize {
        self.l
    }

    pub fn block_count(&self) -> usize {
        self.n / self.l
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    /// N × N matrix of DFT columns in codebook order.
    pub fn ordered_matrix(&self) -> &CMatrix {
        &self.ordered
    }

    pub fn block(&self, m: usize) -> CMatrix {
        let cols: Vec<usize> = (m * self.l..(m + 1) * self.l).collect();
        self.ordered.select_columns(&cols)
    }

    pub fn blocks(&self) -> Vec<CMatrix> {
        (0..self.block_count()).map(|m| self.block(m)).collect()
    }
}

fn check_permutation(n: usize, ordering: &[usize]) -> Result<()> {
    if ordering.len() != n {
        return Err(Error::Permutation(format!(
            "expected {n} entries, got {}",
            ordering.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in ordering {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Permutation(format!(
                "{ordering:?} is not a permutation of 0..{n}"
            )));
        }
    }
    Ok(())
}

fn check_divides(n: usize, l: usize) -> Result<()> {
    if n == 0 || l == 0 || !n.is_multiple_of(l) {
        return Err(Error::Dimension(format!(
            "RF chain count {l} must divide antenna count {n}"
        )));
    }
    Ok(())
}

/// Partitions the (reordered) N-point DFT matrix into blocks of L columns.
pub fn partition_codebook(n: usize, l: usize, ordering: &[usize]) -> Result<BeamformerCodebook> {
    check_divides(n, l)?;
    check_permutation(n, ordering)?;
    let ordered = dft_matrix(n)?.select_columns(ordering);
    Ok(BeamformerCodebook {
        n,
        l,
        ordering: ordering.to_vec(),
        ordered,
    })
}

/// Receive codebook: the N_r-point DFT in natural order.
pub fn combiner_codebook(n_r: usize, l_r: usize) -> Result<BeamformerCodebook> {
    let ordering: Vec<usize> = (0..n_r).collect();
    partition_codebook(n_r, l_r, &ordering)
}

/// `S = conj(F)·(I_{N/L} ⊗ X)·Fᵀ = Σ_m conj(F_m)·X·F_mᵀ`.
pub fn s_matrix(precoder: &BeamformerCodebook, pilot: &PilotCodebook) -> Result<CMatrix> {
    if precoder.l != pilot.l_t {
        return Err(Error::Dimension(format!(
            "precoder has {} RF chains but pilots have length {}",
            precoder.l, pilot.l_t
        )));
    }
    let n = precoder.n;
    let mut s = CMatrix::zeros(n, n);
    for block in precoder.blocks() {
        let left = block.conj().matmul(&pilot.gram)?;
        let term = left.matmul(&block.transpose())?;
        s = s.add(&term)?;
    }
    Ok(s)
}

/// `max_{i≠j} |(D^{-1/2} S D^{-1/2})_{ij}|` with `D = diag(S)`.
///
/// A diagonal entry that is zero relative to the largest one means a
/// transmit direction that is never excited and is reported as an error.
pub fn fast_coherence(s: &CMatrix) -> Result<Coherence> {
    if s.rows() != s.cols() || s.rows() < 2 {
        return Err(Error::Dimension(format!(
            "S must be square with at least 2 rows, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    let max_d = (0..s.rows()).map(|i| s[(i, i)].re).fold(0.0, f64::max);
    let mut norms = Vec::with_capacity(s.rows());
    for i in 0..s.rows() {
        let d = s[(i, i)].re;
        if !(d > max_d * PARTIAL_DIAGONAL_FLOOR) {
            return Err(Error::DegenerateDesign { index: i, value: d });
        }
        norms.push(d.sqrt());
    }
    Ok(max_normalized_off_diagonal(s, &norms))
}

/// Coherence of a partially built design: rows of S whose diagonal is
/// (numerically) zero are left out instead of rejected.
pub fn partial_coherence(s: &CMatrix) -> f64 {
    let diag: Vec<f64> = (0..s.rows()).map(|i| s[(i, i)].re).collect();
    let max_d = diag.iter().copied().fold(0.0, f64::max);
    let floor = max_d * PARTIAL_DIAGONAL_FLOOR;
    let live: Vec<usize> = (0..diag.len()).filter(|&i| diag[i] > floor).collect();
    let mut best = 0.0f64;
    for (a, &i) in live.iter().enumerate() {
        for &j in &live[a + 1..] {
            best = best.max(s[(i, j)].norm() / (diag[i] * diag[j]).sqrt());
        }
    }
    best.min(1.0)
}

/// Knobs for the greedy ordering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyOptions {
    /// Candidates within this distance of the best coherence count as tied;
    /// ties go to the smallest DFT column index.
    pub tie_tolerance: f64,
    /// Evaluate candidates (and pilot subsets) on the rayon pool.
    pub parallel: bool,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self {
            tie_tolerance: crate::numerics::TIE_TOLERANCE,
            parallel: true,
        }
    }
}

/// Incremental S for a precoder being built one column at a time.
///
/// `committed` already holds every complete block plus the current partial
/// block. Appending column `u` as position `k` of the partial block adds
/// `a uᵀ + conj(u) a^H + X_kk conj(u) uᵀ` with `a = conj(P)·X[0..k, k]`.
struct GreedyState<'a> {
    n: usize,
    l: usize,
    gram: &'a CMatrix,
    dft: CMatrix,
    committed: Vec<Complex64>,
    partial: Vec<usize>,
    ordering: Vec<usize>,
}

impl<'a> GreedyState<'a> {
    fn new(n: usize, l: usize, pilot: &'a PilotCodebook) -> Result<Self> {
        Ok(Self {
            n,
            l,
            gram: &pilot.gram,
            dft: dft_matrix(n)?,
            committed: vec![C0; n * n],
            partial: Vec::with_capacity(l),
            ordering: Vec::with_capacity(n),
        })
    }

    /// `a = conj(P)·X[0..k, k]` for the current partial block.
    fn cross_vector(&self) -> Vec<Complex64> {
        let k = self.partial.len();
        let mut a = vec![C0; self.n];
        for (i, &col) in self.partial.iter().enumerate() {
            let x = self.gram[(i, k)];
            for (r, ar) in a.iter_mut().enumerate() {
                *ar += self.dft[(r, col)].conj() * x;
            }
        }
        a
    }

    fn candidate_entry(&self, a: &[Complex64], u: &[Complex64], xkk: Complex64, i: usize, j: usize) -> Complex64 {
        self.committed[i * self.n + j] + a[i] * u[j] + (a[j] * u[i]).conj() + xkk * u[i].conj() * u[j]
    }

    /// Coherence over the excited directions, and how many directions are excited.
    fn candidate_score(&self, a: &[Complex64], col: usize) -> (f64, usize) {
        let n = self.n;
        let u = self.dft.column(col);
        let xkk = self.gram[(self.partial.len(), self.partial.len())];
        let diag: Vec<f64> = (0..n).map(|i| self.candidate_entry(a, &u, xkk, i, i).re).collect();
        let max_d = diag.iter().copied().fold(0.0, f64::max);
        let floor = max_d * PARTIAL_DIAGONAL_FLOOR;
        let live: Vec<usize> = (0..n).filter(|&i| diag[i] > floor).collect();
        let mut best = 0.0f64;
        for (k, &i) in live.iter().enumerate() {
            for &j in &live[k + 1..] {
                let v = self.candidate_entry(a, &u, xkk, i, j).norm() / (diag[i] * diag[j]).sqrt();
                best = best.max(v);
            }
        }
        (best, live.len())
    }

    fn commit(&mut self, a: &[Complex64], col: usize) {
        let n = self.n;
        let u = self.dft.column(col);
        let xkk = self.gram[(self.partial.len(), self.partial.len())];
        let mut next = self.committed.clone();
        for i in 0..n {
            for j in 0..n {
                next[i * n + j] = self.candidate_entry(a, &u, xkk, i, j);
            }
        }
        self.committed = next;
        self.ordering.push(col);
        self.partial.push(col);
        if self.partial.len() == self.l {
            self.partial.clear();
        }
    }
}

/// Index of the winning candidate. The default rule takes the lowest
/// coherence and, among ties, the candidate exciting the most directions.
/// With `lit_first` the number of excited directions decides first. Remaining
/// ties go to the first candidate (smallest column index).
fn pick_candidate(scores: &[(f64, usize)], tie_tolerance: f64, lit_first: bool) -> usize {
    let most_lit = scores.iter().map(|s| s.1).max().unwrap_or(0);
    let eligible = |live: usize| !lit_first || live == most_lit;
    let best = scores
        .iter()
        .filter(|s| eligible(s.1))
        .map(|s| s.0)
        .fold(f64::INFINITY, f64::min);
    let mut pick = None;
    for (pos, &(mu, live)) in scores.iter().enumerate() {
        if !eligible(live) || mu > best + tie_tolerance {
            continue;
        }
        match pick {
            Some((_, l)) if l >= live => {}
            _ => pick = Some((pos, live)),
        }
    }
    pick.expect("pool is non-empty").0
}

/// Greedy precoder column ordering for a fixed pilot codebook.
///
/// At every step each remaining DFT column is tried as the next column; the
/// one giving the lowest coherence of the partial design is appended. The
/// pilot Gram is applied blockwise in acquisition order, and a partial last
/// block uses the leading sub-block of X. If the finished design leaves a
/// transmit direction unexcited, the ordering is rebuilt preferring
/// candidates that excite more directions. Returns the ordering and the
/// coherence of the finished design.
pub fn greedy_order(
    n_t: usize,
    l_t: usize,
    pilot: &PilotCodebook,
    opts: &GreedyOptions,
) -> Result<(Vec<usize>, Coherence)> {
    check_divides(n_t, l_t)?;
    if pilot.l_t != l_t {
        return Err(Error::Dimension(format!(
            "pilot length {} does not match L_t = {l_t}",
            pilot.l_t
        )));
    }
    match greedy_pass(n_t, l_t, pilot, opts, false) {
        // the coherence-first path can strand a direction; retry favouring coverage
        Err(Error::DegenerateDesign { .. }) => greedy_pass(n_t, l_t, pilot, opts, true),
        r => r,
    }
}

fn greedy_pass(
    n_t: usize,
    l_t: usize,
    pilot: &PilotCodebook,
    opts: &GreedyOptions,
    lit_first: bool,
) -> Result<(Vec<usize>, Coherence)> {
    let mut state = GreedyState::new(n_t, l_t, pilot)?;
    let mut pool: Vec<usize> = (0..n_t).collect();
    while !pool.is_empty() {
        let a = state.cross_vector();
        let scores: Vec<(f64, usize)> = if opts.parallel {
            pool.par_iter().map(|&c| state.candidate_score(&a, c)).collect()
        } else {
            pool.iter().map(|&c| state.candidate_score(&a, c)).collect()
        };
        let col = pool.remove(pick_candidate(&scores, opts.tie_tolerance, lit_first));
        state.commit(&a, col);
    }
    let ordering = state.ordering;
    let precoder = partition_codebook(n_t, l_t, &ordering)?;
    let mu = fast_coherence(&s_matrix(&precoder, pilot)?)?;
    Ok((ordering, mu))
}

/// A complete transmit-side design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub pilot: PilotCodebook,
    pub precoder: BeamformerCodebook,
    pub coherence: Coherence,
    pub s: CMatrix,
}

impl DesignResult {
    /// Assembles S for the given codebooks and evaluates its coherence.
    pub fn evaluate(pilot: PilotCodebook, precoder: BeamformerCodebook) -> Result<Self> {
        let s = s_matrix(&precoder, &pilot)?;
        let coherence = fast_coherence(&s)?;
        Ok(Self {
            pilot,
            precoder,
            coherence,
            s,
        })
    }

    pub fn n_t(&self) -> usize {
        self.precoder.antennas()
    }

    pub fn l_t(&self) -> usize {
        self.precoder.rf_chains()
    }

    pub fn m_x(&self) -> usize {
        self.pilot.m_x()
    }

    pub fn artifact(&self) -> DesignArtifact {
        DesignArtifact {
            n_t: self.n_t(),
            l_t: self.l_t(),
            m_x: self.m_x(),
            pilot_indices: self.pilot.selected.clone(),
            ordering: self.precoder.ordering.clone(),
            coherence: self.coherence.value(),
            coherence_pair: self.coherence.pair(),
        }
    }
}

/// JSON form of a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignArtifact {
    pub n_t: usize,
    pub l_t: usize,
    pub m_x: usize,
    pub pilot_indices: Vec<usize>,
    pub ordering: Vec<usize>,
    pub coherence: f64,
    pub coherence_pair: (usize, usize),
}

impl DesignArtifact {
    /// Rebuilds the codebooks and recomputes the coherence.
    pub fn to_design(&self) -> Result<DesignResult> {
        let pilot = pilot_codebook(self.l_t, &self.pilot_indices)?;
        if pilot.m_x() != self.m_x {
            return Err(Error::PilotSelection(format!(
                "artifact says M_x = {} but lists {} pilot indices",
                self.m_x,
                pilot.m_x()
            )));
        }
        let precoder = partition_codebook(self.n_t, self.l_t, &self.ordering)?;
        DesignResult::evaluate(pilot, precoder)
    }
}

/// Every pilot subset of size `m_x` that contains column 0, in lexicographic order.
pub fn pilot_subsets(l_t: usize, m_x: usize) -> Result<Vec<Vec<usize>>> {
    if m_x == 0 || m_x > l_t {
        return Err(Error::InvalidArgument(format!("M_x must be in 1..={l_t}, got {m_x}")));
    }
    Ok((1..l_t)
        .combinations(m_x - 1)
        .map(|rest| std::iter::once(0).chain(rest).collect())
        .collect())
}

/// Runs the greedy ordering for every admissible pilot subset and keeps the
/// lowest-coherence design. Ties keep the first subset enumerated.
pub fn select_pilots_and_order(n_t: usize, l_t: usize, m_x: usize, opts: &GreedyOptions) -> Result<DesignResult> {
    check_divides(n_t, l_t)?;
    let subsets = pilot_subsets(l_t, m_x)?;
    let run = |sel: &Vec<usize>| -> Result<(Vec<usize>, Vec<usize>, Coherence)> {
        let pilot = pilot_codebook(l_t, sel)?;
        let (ordering, mu) = greedy_order(n_t, l_t, &pilot, opts)?;
        Ok((sel.clone(), ordering, mu))
    };
    let outcomes: Vec<_> = if opts.parallel {
        subsets.par_iter().map(run).collect()
    } else {
        subsets.iter().map(run).collect()
    };
    // subsets whose greedy ordering leaves a direction dark are skipped
    let mut results = Vec::with_capacity(outcomes.len());
    let mut degenerate = None;
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(e @ Error::DegenerateDesign { .. }) => degenerate = degenerate.or(Some(e)),
            Err(e) => return Err(e),
        }
    }
    let Some((first, rest)) = results.split_first() else {
        return Err(degenerate.expect("at least one subset was tried"));
    };
    let mut best = first;
    for r in rest {
        if r.2.value() < best.2.value() - opts.tie_tolerance {
            best = r;
        }
    }
    let pilot = pilot_codebook(l_t, &best.0)?;
    let precoder = partition_codebook(n_t, l_t, &best.1)?;
    DesignResult::evaluate(pilot, precoder)
}

/// How the random-permutation baseline picks its pilots.
#[derive(Debug, Clone, PartialEq)]
pub enum PilotChoice {
    /// Reuse a given subset (normally the one the proposed design chose).
    Fixed(Vec<usize>),
    /// Draw a subset containing column 0 uniformly per design.
    Random,
}

/// Baseline design: a uniformly random precoder column permutation.
pub fn random_permutation_design<R: Rng + ?Sized>(
    n_t: usize,
    l_t: usize,
    m_x: usize,
    pilots: &PilotChoice,
    rng: &mut R,
) -> Result<DesignResult> {
    check_divides(n_t, l_t)?;
    let selected = match pilots {
        PilotChoice::Fixed(sel) => {
            if sel.len() != m_x {
                return Err(Error::PilotSelection(format!(
                    "fixed subset has {} entries, M_x = {m_x}",
                    sel.len()
                )));
            }
            sel.clone()
        }
        PilotChoice::Random => {
            let subsets = pilot_subsets(l_t, m_x)?;
            subsets[rng.random_range(0..subsets.len())].clone()
        }
    };
    let pilot = pilot_codebook(l_t, &selected)?;
    let mut ordering: Vec<usize> = (0..n_t).collect();
    ordering.shuffle(rng);
    let precoder = partition_codebook(n_t, l_t, &ordering)?;
    DesignResult::evaluate(pilot, precoder)
}
