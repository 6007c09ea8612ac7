//! Narrowband geometric channel model for half-wavelength uniform linear
//! arrays, plus the angle dictionaries used for the sparse formulation.
//!
//! Array responses are unit norm. A dictionary built from `G` of them on the
//! uniform spatial-frequency grid satisfies `Ā·Ā^H = (G/N)·I`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{kron, CMatrix, C0};

/// ULA response `(1/√n)·[exp(-iπ·p·cos(angle))]_{p=0..n-1}` as an n×1 column.
pub fn array_response(n: usize, angle: f64) -> CMatrix {
    CMatrix::column_vector(&steering(n, angle.cos()))
}

/// Steering vector parameterized directly by `cos(angle)`.
pub(crate) fn steering(n: usize, cos_angle: f64) -> Vec<Complex64> {
    let amp = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|p| Complex64::from_polar(amp, -PI * p as f64 * cos_angle))
        .collect()
}

/// Grid angles with uniformly spaced cosines `2n/g - 1`, n = 0..g.
pub fn angle_grid(g: usize) -> Vec<f64> {
    (0..g).map(|n| grid_cosine(n, g).acos()).collect()
}

fn grid_cosine(n: usize, g: usize) -> f64 {
    2.0 * n as f64 / g as f64 - 1.0
}

/// Steering vectors of an N-element array sampled on a G-point angle grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleDictionary {
    antenna_count: usize,
    grid_angles: Vec<f64>,
    matrix: CMatrix,
}

impl AngleDictionary {
    pub fn antenna_count(&self) -> usize {
        self.antenna_count
    }

    pub fn grid_size(&self) -> usize {
        self.grid_angles.len()
    }

    pub fn grid_angles(&self) -> &[f64] {
        &self.grid_angles
    }

    /// N × G matrix whose columns are the grid steering vectors.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Index of the grid point closest to `angle` in the spatial-frequency
    /// domain. The grid is periodic there: `cos = 1` aliases `cos = -1`.
    pub fn nearest_index(&self, angle: f64) -> usize {
        let g = self.grid_size();
        let pos = ((angle.cos() + 1.0) * g as f64 / 2.0).round() as usize;
        pos % g
    }
}

/// Builds the N × G angle dictionary.
pub fn build_dictionary(n: usize, g: usize) -> Result<AngleDictionary> {
    if n == 0 {
        return Err(Error::Dimension("antenna count must be at least 1".into()));
    }
    if g < n {
        return Err(Error::Dimension(format!(
            "angle grid size {g} must be at least the antenna count {n}"
        )));
    }
    let columns: Vec<Vec<Complex64>> = (0..g).map(|k| steering(n, grid_cosine(k, g))).collect();
    Ok(AngleDictionary {
        antenna_count: n,
        grid_angles: angle_grid(g),
        matrix: CMatrix::from_fn(n, g, |r, c| columns[c][r]),
    })
}

/// Two-dimensional dictionary `Ψ = conj(Ā_t) ⊗ Ā_r`.
pub fn kron_dictionary(at: &AngleDictionary, ar: &AngleDictionary) -> Result<CMatrix> {
    kron(&at.matrix.conj(), &ar.matrix)
}

/// Path statistics for channel draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub paths: usize,
    pub gain_variance: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            paths: 4,
            gain_variance: 1.0,
        }
    }
}

/// Gains and angles of the propagation paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub gains: Vec<Complex64>,
    /// Angles of arrival, radians in (0, π).
    pub aoa: Vec<f64>,
    /// Angles of departure, radians in (0, π).
    pub aod: Vec<f64>,
    pub gain_variance: f64,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let n = self.gains.len();
        if n == 0 {
            return Err(Error::InvalidArgument("channel needs at least one path".into()));
        }
        if self.aoa.len() != n || self.aod.len() != n {
            return Err(Error::Dimension(format!(
                "path set has {n} gains, {} AoAs and {} AoDs",
                self.aoa.len(),
                self.aod.len()
            )));
        }
        Ok(())
    }
}

/// A channel draw: its paths and the assembled N_r × N_t matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub paths: PathSet,
    pub h: CMatrix,
}

impl ChannelRealization {
    /// `H = √(N_t N_r / N_p) Σ_l α_l a_r(θ_l) a_t(ϑ_l)^H`.
    pub fn from_paths(n_t: usize, n_r: usize, paths: PathSet) -> Result<Self> {
        if n_t == 0 || n_r == 0 {
            return Err(Error::Dimension("antenna counts must be positive".into()));
        }
        paths.validate()?;
        let scale = ((n_t * n_r) as f64 / paths.len() as f64).sqrt();
        let mut h = CMatrix::zeros(n_r, n_t);
        for l in 0..paths.len() {
            let ar = steering(n_r, paths.aoa[l].cos());
            let at = steering(n_t, paths.aod[l].cos());
            let g = paths.gains[l] * scale;
            for r in 0..n_r {
                let gr = g * ar[r];
                for t in 0..n_t {
                    h[(r, t)] += gr * at[t].conj();
                }
            }
        }
        Ok(Self { paths, h })
    }

    pub fn n_r(&self) -> usize {
        self.h.rows()
    }

    pub fn n_t(&self) -> usize {
        self.h.cols()
    }
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

fn draw_gains<R: Rng + ?Sized>(cfg: &PathConfig, rng: &mut R) -> Vec<Complex64> {
    (0..cfg.paths)
        .map(|_| complex_gaussian(rng, cfg.gain_variance))
        .collect()
}

fn check_path_config(cfg: &PathConfig) -> Result<()> {
    if cfg.paths == 0 {
        return Err(Error::InvalidArgument("number of paths must be at least 1".into()));
    }
    if !(cfg.gain_variance > 0.0 && cfg.gain_variance.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gain variance must be positive, got {}",
            cfg.gain_variance
        )));
    }
    Ok(())
}

/// Draws an off-grid channel: path cosines uniform on (-1, 1), gains CN(0, σ_α²).
pub fn generate_channel<R: Rng + ?Sized>(
    n_t: usize,
    n_r: usize,
    cfg: &PathConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    check_path_config(cfg)?;
    let mut aoa = Vec::with_capacity(cfg.paths);
    let mut aod = Vec::with_capacity(cfg.paths);
    for _ in 0..cfg.paths {
        aoa.push(uniform_cosine_angle(rng));
        aod.push(uniform_cosine_angle(rng));
    }
    let gains = draw_gains(cfg, rng);
    ChannelRealization::from_paths(
        n_t,
        n_r,
        PathSet {
            gains,
            aoa,
            aod,
            gain_variance: cfg.gain_variance,
        },
    )
}

fn uniform_cosine_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random_range(-1.0..1.0);
        // keep strictly inside (0, π)
        if u > -1.0 {
            return u.acos();
        }
    }
}

/// Draws a channel whose path angles sit exactly on the dictionary grids.
pub fn generate_on_grid_channel<R: Rng + ?Sized>(
    at: &AngleDictionary,
    ar: &AngleDictionary,
    cfg: &PathConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    check_path_config(cfg)?;
    let mut aoa = Vec::with_capacity(cfg.paths);
    let mut aod = Vec::with_capacity(cfg.paths);
    let mut used = Vec::with_capacity(cfg.paths);
    while aoa.len() < cfg.paths {
        let gt = rng.random_range(0..at.grid_size());
        let gr = rng.random_range(0..ar.grid_size());
        if used.contains(&(gt, gr)) {
            continue;
        }
        used.push((gt, gr));
        aod.push(at.grid_angles[gt]);
        aoa.push(ar.grid_angles[gr]);
    }
    let gains = draw_gains(cfg, rng);
    ChannelRealization::from_paths(
        at.antenna_count,
        ar.antenna_count,
        PathSet {
            gains,
            aoa,
            aod,
            gain_variance: cfg.gain_variance,
        },
    )
}

/// Virtual channel vector `vec(H̄_d)` (length G_t·G_r, column-major, index
/// `g_t·G_r + g_r`) with every path snapped to its nearest grid point, so that
/// `Ā_r·H̄_d·Ā_t^H` is the snapped channel.
pub fn sparsify_on_grid(ch: &ChannelRealization, at: &AngleDictionary, ar: &AngleDictionary) -> Result<Vec<Complex64>> {
    if ch.n_t() != at.antenna_count || ch.n_r() != ar.antenna_count {
        return Err(Error::Dimension(format!(
            "channel is {}x{}, dictionaries expect {}x{}",
            ch.n_r(),
            ch.n_t(),
            ar.antenna_count,
            at.antenna_count
        )));
    }
    let (g_t, g_r) = (at.grid_size(), ar.grid_size());
    let scale = ((ch.n_t() * ch.n_r()) as f64 / ch.paths.len() as f64).sqrt();
    let mut h = vec![C0; g_t * g_r];
    for l in 0..ch.paths.len() {
        let it = at.nearest_index(ch.paths.aod[l]);
        let ir = ar.nearest_index(ch.paths.aoa[l]);
        h[it * g_r + ir] += ch.paths.gains[l] * scale;
    }
    Ok(h)
}

/// Same paths with every angle replaced by its nearest grid angle.
pub fn snap_to_grid(ch: &ChannelRealization, at: &AngleDictionary, ar: &AngleDictionary) -> Result<ChannelRealization> {
    let mut paths = ch.paths.clone();
    for a in paths.aod.iter_mut() {
        *a = at.grid_angles[at.nearest_index(*a)];
    }
    for a in paths.aoa.iter_mut() {
        *a = ar.grid_angles[ar.nearest_index(*a)];
    }
    ChannelRealization::from_paths(ch.n_t(), ch.n_r(), paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Largest off-diagonal modulus of `Ā·Ā^H` relative to its smallest diagonal entry.
    fn gram_off_ratio(a: &CMatrix) -> (f64, f64) {
        let g = a.matmul(&a.adjoint()).unwrap();
        let mut off: f64 = 0.0;
        let mut diag = f64::INFINITY;
        for i in 0..g.rows() {
            diag = diag.min(g[(i, i)].re);
            for j in 0..g.cols() {
                if i != j {
                    off = off.max(g[(i, j)].norm());
                }
            }
        }
        (off / diag, diag)
    }

    #[test]
    fn array_response_examples() {
        assert_eq!(array_response(1, 0.3).as_slice(), &[Complex64::new(1.0, 0.0)]);

        let a = array_response(4, PI / 2.0);
        for z in a.as_slice() {
            assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);
        }

        let a = array_response(2, 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!((a[(0, 0)] - s).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((a[(1, 0)] + s).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn grid_examples() {
        let g2: Vec<f64> = angle_grid(2).iter().map(|a| a.cos()).collect();
        assert_abs_diff_eq!(g2[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g2[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(angle_grid(2)[0], PI, epsilon = 1e-15);

        let g4: Vec<f64> = angle_grid(4).iter().map(|a| a.cos()).collect();
        for (got, want) in g4.iter().zip([-1.0, -0.5, 0.0, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        assert!(angle_grid(7).iter().all(|&a| a > 0.0 && a <= PI));
    }

    #[test]
    fn dictionary_gram_is_scaled_identity() {
        for (n, g) in [(1, 1), (4, 4), (4, 6), (16, 24), (8, 9), (64, 96)] {
            let d = build_dictionary(n, g).unwrap();
            assert_eq!(d.matrix().shape(), (n, g));
            let (ratio, diag) = gram_off_ratio(d.matrix());
            assert!(ratio < 1e-9, "n={n} g={g} ratio={ratio}");
            assert_abs_diff_eq!(diag, g as f64 / n as f64, epsilon = 1e-9);
        }
        assert!(matches!(build_dictionary(4, 3), Err(Error::Dimension(_))));
    }

    #[test]
    fn kron_dictionary_shapes_and_gram() {
        let one = build_dictionary(1, 1).unwrap();
        assert_eq!(
            kron_dictionary(&one, &one).unwrap().as_slice(),
            &[Complex64::new(1.0, 0.0)]
        );

        let d2 = build_dictionary(2, 2).unwrap();
        let psi = kron_dictionary(&d2, &d2).unwrap();
        assert!(gram_off_ratio(&psi).0 < 1e-9);

        let psi = kron_dictionary(&build_dictionary(4, 6).unwrap(), &build_dictionary(2, 3).unwrap()).unwrap();
        assert_eq!(psi.shape(), (8, 18));
        assert!(gram_off_ratio(&psi).0 < 1e-9);
    }

    #[test]
    fn broadside_unit_gain_channel_is_all_ones() {
        let paths = PathSet {
            gains: vec![Complex64::new(1.0, 0.0)],
            aoa: vec![PI / 2.0],
            aod: vec![PI / 2.0],
            gain_variance: 1.0,
        };
        let ch = ChannelRealization::from_paths(4, 3, paths).unwrap();
        for z in ch.h.as_slice() {
            assert_abs_diff_eq!((z - Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stored_matrix_matches_rebuild() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = generate_channel(
            8,
            4,
            &PathConfig {
                paths: 3,
                gain_variance: 1.0,
            },
            &mut rng,
        )
        .unwrap();
        let rebuilt = ChannelRealization::from_paths(8, 4, ch.paths.clone()).unwrap();
        assert!(ch.h.max_abs_diff(&rebuilt.h).unwrap() < 1e-10);
        assert!(ch.paths.aoa.iter().chain(&ch.paths.aod).all(|&a| a > 0.0 && a < PI));
    }

    #[test]
    fn zero_paths_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = PathConfig {
            paths: 0,
            gain_variance: 1.0,
        };
        assert!(generate_channel(4, 4, &cfg, &mut rng).is_err());
    }

    #[test]
    fn sparsify_zero_gain_channel() {
        let at = build_dictionary(4, 6).unwrap();
        let ar = build_dictionary(2, 3).unwrap();
        let paths = PathSet {
            gains: vec![C0, C0],
            aoa: vec![0.4, 1.2],
            aod: vec![2.0, 0.9],
            gain_variance: 1.0,
        };
        let ch = ChannelRealization::from_paths(4, 2, paths).unwrap();
        assert!(sparsify_on_grid(&ch, &at, &ar).unwrap().iter().all(|z| *z == C0));
    }

    #[test]
    fn single_on_grid_path_lands_on_one_index() {
        let at = build_dictionary(4, 6).unwrap();
        let ar = build_dictionary(2, 3).unwrap();
        let (gt, gr) = (4, 1);
        let paths = PathSet {
            gains: vec![Complex64::new(0.3, -0.7)],
            aoa: vec![ar.grid_angles()[gr]],
            aod: vec![at.grid_angles()[gt]],
            gain_variance: 1.0,
        };
        let ch = ChannelRealization::from_paths(4, 2, paths).unwrap();
        let h = sparsify_on_grid(&ch, &at, &ar).unwrap();
        let nz: Vec<usize> = (0..h.len()).filter(|&i| h[i] != C0).collect();
        assert_eq!(nz, vec![gt * ar.grid_size() + gr]);
    }

    #[test]
    fn nearest_index_wraps_endfire() {
        let d = build_dictionary(4, 8).unwrap();
        // cos just below 1 is closest to the aliased cos = -1 point
        assert_eq!(d.nearest_index(1e-3), 0);
        assert_eq!(d.nearest_index(PI / 2.0), 4);
    }
}
