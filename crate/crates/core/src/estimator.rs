//! Sparse recovery of the virtual channel with orthogonal matching pursuit,
//! reconstruction of the channel matrix, and NMSE scoring.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::AngleDictionary;
use crate::error::{Error, Result};
use crate::numerics::{CMatrix, C0};

/// Relative ridge added to the support Gram when it is badly conditioned.
const RIDGE: f64 = 1e-12;
/// Condition number above which the ridge kicks in.
const MAX_CONDITION: f64 = 1e12;

/// The linear map OMP works against.
pub trait SensingOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn column(&self, j: usize) -> Vec<Complex64>;
    /// `A^H r`.
    fn adjoint_apply(&self, r: &[Complex64]) -> Vec<Complex64>;
    fn column_norms(&self) -> Vec<f64>;
}

impl SensingOperator for CMatrix {
    fn rows(&self) -> usize {
        CMatrix::rows(self)
    }

    fn cols(&self) -> usize {
        CMatrix::cols(self)
    }

    fn column(&self, j: usize) -> Vec<Complex64> {
        CMatrix::column(self, j)
    }

    fn adjoint_apply(&self, r: &[Complex64]) -> Vec<Complex64> {
        self.adjoint_matvec(r).expect("residual length matches operator rows")
    }

    fn column_norms(&self) -> Vec<f64> {
        CMatrix::column_norms(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmpConfig {
    /// Number of atoms to pick (normally the path count).
    pub sparsity: usize,
    /// Stop once `‖r‖ ≤ residual_tol·‖y‖`.
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl OmpConfig {
    pub fn with_sparsity(sparsity: usize) -> Self {
        Self {
            sparsity,
            residual_tol: 0.0,
            max_iter: sparsity,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sparsity == 0 {
            return Err(Error::InvalidArgument("OMP sparsity must be at least 1".into()));
        }
        if self.max_iter < self.sparsity {
            return Err(Error::InvalidArgument(format!(
                "max_iter ({}) must be at least the sparsity ({})",
                self.max_iter, self.sparsity
            )));
        }
        if !(self.residual_tol >= 0.0) {
            return Err(Error::InvalidArgument("residual_tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// OMP output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Full-length coefficient vector, zero off the support.
    pub h_hat: Vec<Complex64>,
    /// Atoms in selection order.
    pub support: Vec<usize>,
    /// Residual norm before the first and after every iteration.
    pub residual_norms: Vec<f64>,
    /// Set when a support least-squares solve needed the ridge.
    pub rank_deficient: bool,
}

impl Estimate {
    /// Channel matrix implied by the estimate.
    pub fn channel(&self, at: &AngleDictionary, ar: &AngleDictionary) -> Result<CMatrix> {
        reconstruct(&self.h_hat, at, ar)
    }
}

/// Orthogonal matching pursuit on `y ≈ A h`.
///
/// Atoms are ranked by correlation with the residual over normalized columns;
/// coefficients are refit by least squares on the unnormalized support.
pub fn omp<O: SensingOperator + ?Sized>(a: &O, y: &[Complex64], cfg: &OmpConfig) -> Result<Estimate> {
    cfg.validate()?;
    if y.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "measurement has {} entries, operator has {} rows",
            y.len(),
            a.rows()
        )));
    }
    let norms = a.column_norms();
    if let Some(column) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::DegenerateColumn { column });
    }
    let y_norm = vector_norm(y);
    let mut est = Estimate {
        h_hat: vec![C0; a.cols()],
        support: Vec::new(),
        residual_norms: vec![y_norm],
        rank_deficient: false,
    };
    if y_norm == 0.0 {
        return Ok(est);
    }

    let mut residual = y.to_vec();
    let mut atoms: Vec<Vec<Complex64>> = Vec::new();
    let mut coef = Vec::new();
    while est.support.len() < cfg.sparsity && est.residual_norms.len() <= cfg.max_iter {
        let corr = a.adjoint_apply(&residual);
        let mut best: Option<(usize, f64)> = None;
        for (j, (c, n)) in corr.iter().zip(&norms).enumerate() {
            if est.support.contains(&j) {
                continue;
            }
            let score = c.norm() / n;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((j, score)) = best else { break };
        if score == 0.0 {
            break;
        }
        est.support.push(j);
        atoms.push(a.column(j));

        let (x, ridged) = least_squares(&atoms, y);
        est.rank_deficient |= ridged;
        coef = x;
        residual = y.to_vec();
        for (col, &c) in atoms.iter().zip(&coef) {
            for (r, v) in residual.iter_mut().zip(col) {
                *r -= c * v;
            }
        }
        let r_norm = vector_norm(&residual);
        est.residual_norms.push(r_norm);
        if r_norm <= cfg.residual_tol * y_norm {
            break;
        }
    }
    for (&j, &c) in est.support.iter().zip(&coef) {
        est.h_hat[j] = c;
    }
    Ok(est)
}

fn vector_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves the normal equations on the given columns. Returns the coefficients
/// and whether a ridge was needed.
fn least_squares(cols: &[Vec<Complex64>], y: &[Complex64]) -> (Vec<Complex64>, bool) {
    let k = cols.len();
    let dot = |u: &[Complex64], v: &[Complex64]| -> Complex64 { u.iter().zip(v).map(|(a, b)| a.conj() * b).sum() };
    let mut gram = vec![C0; k * k];
    for i in 0..k {
        for j in i..k {
            let g = dot(&cols[i], &cols[j]);
            gram[i * k + j] = g;
            gram[j * k + i] = g.conj();
        }
    }
    let rhs: Vec<Complex64> = cols.iter().map(|c| dot(c, y)).collect();

    if let Some(l) = cholesky(&gram, k) {
        let diag: Vec<f64> = (0..k).map(|i| l[i * k + i].re).collect();
        let hi = diag.iter().copied().fold(0.0, f64::max);
        let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
        if (hi / lo).powi(2) <= MAX_CONDITION {
            return (cholesky_solve(&l, &rhs, k), false);
        }
    }
    let trace: f64 = (0..k).map(|i| gram[i * k + i].re).sum();
    let mut lambda = RIDGE * trace / k as f64;
    loop {
        let mut ridged = gram.clone();
        for i in 0..k {
            ridged[i * k + i] += lambda;
        }
        if let Some(l) = cholesky(&ridged, k) {
            return (cholesky_solve(&l, &rhs, k), true);
        }
        lambda *= 10.0;
    }
}

/// Lower-triangular `L` with `G = L L^H`, or `None` if `G` is not positive definite.
fn cholesky(g: &[Complex64], k: usize) -> Option<Vec<Complex64>> {
    let mut l = vec![C0; k * k];
    for j in 0..k {
        let mut d = g[j * k + j].re;
        for p in 0..j {
            d -= l[j * k + p].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[j * k + j] = Complex64::new(d, 0.0);
        for i in j + 1..k {
            let mut s = g[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p].conj();
            }
            l[i * k + j] = s / d;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[Complex64], b: &[Complex64], k: usize) -> Vec<Complex64> {
    let mut z = vec![C0; k];
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i * k + p] * z[p];
        }
        z[i] = s / l[i * k + i];
    }
    let mut x = vec![C0; k];
    for i in (0..k).rev() {
        let mut s = z[i];
        for p in i + 1..k {
            s -= l[p * k + i].conj() * x[p];
        }
        x[i] = s / l[i * k + i];
    }
    x
}

/// `Ĥ = Ā_r·H̄_d·Ā_t^H` with `H̄_d` the column-major G_r × G_t reshape of `h`.
///
/// The measurement operator handed to OMP already carries the `√ρ` factor,
/// so `h` is on the same scale as the virtual channel and needs no rescaling.
pub fn reconstruct(h: &[Complex64], at: &AngleDictionary, ar: &AngleDictionary) -> Result<CMatrix> {
    let (g_t, g_r) = (at.grid_size(), ar.grid_size());
    if h.len() != g_t * g_r {
        return Err(Error::Dimension(format!(
            "virtual channel has {} entries, dictionaries need {}",
            h.len(),
            g_t * g_r
        )));
    }
    let (n_t, n_r) = (at.antenna_count(), ar.antenna_count());
    let (a_t, a_r) = (at.matrix(), ar.matrix());
    let mut out = CMatrix::zeros(n_r, n_t);
    for (idx, &coef) in h.iter().enumerate() {
        if coef == C0 {
            continue;
        }
        let (gt, gr) = (idx / g_r, idx % g_r);
        for r in 0..n_r {
            let left = coef * a_r[(r, gr)];
            for t in 0..n_t {
                out[(r, t)] += left * a_t[(t, gt)].conj();
            }
        }
    }
    Ok(out)
}

/// `‖H − Ĥ‖²_F / ‖H‖²_F` for one realization.
pub fn nmse(h: &CMatrix, h_hat: &CMatrix) -> Result<f64> {
    let denom = h.frobenius_norm_sqr();
    if denom == 0.0 {
        return Err(Error::ZeroChannel);
    }
    Ok(h.sub(h_hat)?.frobenius_norm_sqr() / denom)
}

/// `10·log10(x)`.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_dictionary;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_measurement_gives_empty_support() {
        let a = CMatrix::identity(4);
        let est = omp(&a, &[C0; 4], &OmpConfig::with_sparsity(2)).unwrap();
        assert!(est.support.is_empty());
        assert!(est.h_hat.iter().all(|z| *z == C0));
    }

    #[test]
    fn identity_picks_the_spike() {
        let a = CMatrix::identity(5);
        let mut y = vec![C0; 5];
        y[3] = c(1.0, 0.0);
        let est = omp(&a, &y, &OmpConfig::with_sparsity(1)).unwrap();
        assert_eq!(est.support, vec![3]);
        assert_abs_diff_eq!((est.h_hat[3] - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn recovers_two_sparse_vector_with_overcomplete_matrix() {
        // columns of a 4x6 matrix, two of them active
        let a = CMatrix::from_fn(4, 6, |r, col| {
            Complex64::from_polar(1.0, 0.7 * (r * (col + 1)) as f64 + 0.3 * col as f64)
        });
        let mut h = vec![C0; 6];
        h[1] = c(2.0, -1.0);
        h[4] = c(-0.5, 0.25);
        let y = a.matvec(&h).unwrap();
        let est = omp(&a, &y, &OmpConfig::with_sparsity(2)).unwrap();
        let mut sup = est.support.clone();
        sup.sort_unstable();
        assert_eq!(sup, vec![1, 4]);
        for (got, want) in est.h_hat.iter().zip(&h) {
            assert!((got - want).norm() < 1e-10);
        }
        assert!(est.residual_norms.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn residual_tolerance_stops_early() {
        let a = CMatrix::identity(4);
        let y = vec![c(1.0, 0.0), c(1e-6, 0.0), C0, C0];
        let cfg = OmpConfig {
            sparsity: 3,
            residual_tol: 1e-3,
            max_iter: 3,
        };
        let est = omp(&a, &y, &cfg).unwrap();
        assert_eq!(est.support, vec![0]);
    }

    #[test]
    fn nearly_collinear_support_uses_the_ridge() {
        let a = CMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1e-7]]).unwrap();
        let y = vec![c(1.0, 0.0), c(5e-8, 0.0)];
        let est = omp(&a, &y, &OmpConfig::with_sparsity(2)).unwrap();
        let mut support = est.support.clone();
        support.sort_unstable();
        assert_eq!(support, vec![0, 1]);
        assert!(est.rank_deficient);
        assert!(est.residual_norms.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn config_validation() {
        let a = CMatrix::identity(2);
        let y = vec![C0; 2];
        assert!(omp(
            &a,
            &y,
            &OmpConfig {
                sparsity: 0,
                residual_tol: 0.0,
                max_iter: 1
            }
        )
        .is_err());
        assert!(omp(
            &a,
            &y,
            &OmpConfig {
                sparsity: 2,
                residual_tol: 0.0,
                max_iter: 1
            }
        )
        .is_err());
        assert!(omp(&a, &[C0; 3], &OmpConfig::with_sparsity(1)).is_err());
        let zero_col = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(
            omp(&zero_col, &y, &OmpConfig::with_sparsity(1)),
            Err(Error::DegenerateColumn { column: 1 })
        ));
    }

    #[test]
    fn reconstruct_examples() {
        let at = build_dictionary(4, 6).unwrap();
        let ar = build_dictionary(2, 3).unwrap();
        let h = reconstruct(&[C0; 18], &at, &ar).unwrap();
        assert_eq!(h.frobenius_norm(), 0.0);

        let mut v = vec![C0; 18];
        v[4 * 3 + 2] = c(0.5, 0.5);
        let h = reconstruct(&v, &at, &ar).unwrap();
        assert_eq!(crate::numerics::numerical_rank(&h, 1e-8), 1);
        let want = ar
            .matrix()
            .select_columns(&[2])
            .matmul(&at.matrix().select_columns(&[4]).adjoint())
            .unwrap()
            .scale(c(0.5, 0.5));
        assert!(h.max_abs_diff(&want).unwrap() < 1e-14);
        assert!(reconstruct(&[C0; 5], &at, &ar).is_err());
    }

    #[test]
    fn nmse_examples() {
        let h = CMatrix::from_fn(3, 2, |r, col| c(r as f64 + 1.0, col as f64 - 0.5));
        assert_eq!(nmse(&h, &h).unwrap(), 0.0);
        assert_abs_diff_eq!(nmse(&h, &CMatrix::zeros(3, 2)).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(nmse(&h, &h.scale(c(2.0, 0.0))).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(
            nmse(&CMatrix::zeros(2, 2), &CMatrix::zeros(2, 2)),
            Err(Error::ZeroChannel)
        );
        assert_abs_diff_eq!(to_db(0.01), -20.0, epsilon = 1e-12);
    }
}
