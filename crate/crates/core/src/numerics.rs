//! Dense complex matrices and the handful of primitives the codebook and
//! estimation code is built from: DFT matrices, Kronecker products, Gram
//! matrices, mutual coherence and phase quantization.
//!
//! Storage is row-major. Column-major vectorization (`vec`) is provided
//! separately because the sensing model relies on it.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex zero.
pub const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
/// Complex one.
pub const C1: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Tolerance used when reporting which column pair attains the coherence.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    /// Builds a matrix from row-major entries, checking shape and finiteness.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Dimension(format!("{rows}x{cols} overflows")))?;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {expected} entries, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix by evaluating `f(row, col)`.
    ///
    /// Panics on an empty shape; callers validate dimensions beforehand.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| C0)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { C1 } else { C0 })
    }

    /// Column vector from a slice.
    pub fn column_vector(entries: &[Complex64]) -> Self {
        Self::from_fn(entries.len(), 1, |r, _| entries[r])
    }

    /// Real-valued matrix from nested rows (test and fixture convenience).
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::from_row_major(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Sub-matrix made of the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |r, c| self[(r, cols[c])])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Entry-wise (Hadamard) product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = vec![C0; self.rows * other.cols];
        for r in 0..self.rows {
            let out_row = &mut out[r * other.cols..(r + 1) * other.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == C0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            data: out,
        })
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `self^H * v`.
    pub fn adjoint_matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply ({}x{})^H by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![C0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a.conj() * vr;
            }
        }
        Ok(out)
    }

    /// Gram matrix `A^H A`.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = vec![C0; n * n];
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let ai = row[i].conj();
                if ai == C0 {
                    continue;
                }
                for j in i..n {
                    g[i * n + j] += ai * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[i * n + j] = g[j * n + i].conj();
            }
        }
        Self {
            rows: n,
            cols: n,
            data: g,
        }
    }

    /// Euclidean norm of every column.
    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (s, z) in sq.iter_mut().zip(self.row(r)) {
                *s += z.norm_sqr();
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Column-major vectorization.
    pub fn vec(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self[(r, c)]);
            }
        }
        out
    }

    /// Inverse of [`CMatrix::vec`].
    pub fn unvec(v: &[Complex64], rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || v.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "cannot reshape vector of length {} into {rows}x{cols}",
                v.len()
            )));
        }
        Ok(Self::from_fn(rows, cols, |r, c| v[c * rows + r]))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(r) {
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Serialized form: shape plus row-major `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl From<CMatrix> for MatrixRepr {
    fn from(m: CMatrix) -> Self {
        Self {
            rows: m.rows,
            cols: m.cols,
            entries: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<MatrixRepr> for CMatrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        let data = r.entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        CMatrix::from_row_major(r.rows, r.cols, data)
    }
}

/// `exp(-2πi·k/n)`, reduced by quadrant so that multiples of a quarter turn
/// come out exact and mirrored angles share bit patterns.
pub fn unit_root(k: usize, n: usize) -> Complex64 {
    debug_assert!(n > 0);
    let k = k % n;
    let quarter = (4 * k) / n;
    let rem = (4 * k) % n;
    // angle within the quadrant: 2π·rem/(4n)
    let base = if rem == 0 {
        C1
    } else {
        let a = PI * rem as f64 / (2.0 * n as f64);
        Complex64::new(a.cos(), -a.sin())
    };
    // multiply by (-i)^quarter
    match quarter {
        0 => base,
        1 => Complex64::new(base.im, -base.re),
        2 => Complex64::new(-base.re, -base.im),
        _ => Complex64::new(-base.im, base.re),
    }
}

/// N-point DFT matrix with unit-modulus entries `exp(-2πi·k·m/n)`.
pub fn dft_matrix(n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::Dimension("DFT size must be at least 1".into()));
    }
    let roots: Vec<Complex64> = (0..n).map(|k| unit_root(k, n)).collect();
    Ok(CMatrix::from_fn(n, n, |k, m| roots[(k * m) % n]))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let rows = a
        .rows()
        .checked_mul(b.rows())
        .ok_or_else(|| Error::Dimension("Kronecker product row count overflows".into()))?;
    let cols = a
        .cols()
        .checked_mul(b.cols())
        .ok_or_else(|| Error::Dimension("Kronecker product column count overflows".into()))?;
    rows.checked_mul(cols)
        .ok_or_else(|| Error::Dimension("Kronecker product size overflows".into()))?;
    Ok(CMatrix::from_fn(rows, cols, |r, c| {
        a[(r / b.rows(), c / b.cols())] * b[(r % b.rows(), c % b.cols())]
    }))
}

/// Mutual coherence together with the column pair that attains it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    value: f64,
    pair: (usize, usize),
}

impl Coherence {
    pub(crate) fn new(value: f64, pair: (usize, usize)) -> Self {
        // rounding can push a normalized inner product a hair above 1
        Self {
            value: value.clamp(0.0, 1.0),
            pair,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Smallest `(i, j)`, `i < j`, attaining the maximum within [`TIE_TOLERANCE`].
    pub fn pair(&self) -> (usize, usize) {
        self.pair
    }
}

/// Max normalized off-diagonal modulus of a Gram-like matrix `g` whose diagonal
/// is given separately as `norms` (square roots of the diagonal).
pub(crate) fn max_normalized_off_diagonal(g: &CMatrix, norms: &[f64]) -> Coherence {
    let n = g.rows();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let v = g[(i, j)].norm() / (norms[i] * norms[j]);
            if v > best {
                best = v;
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if g[(i, j)].norm() / (norms[i] * norms[j]) >= best - TIE_TOLERANCE {
                return Coherence::new(best, (i, j));
            }
        }
    }
    Coherence::new(best, (0, 1.min(n - 1)))
}

/// Mutual coherence `max_{i≠j} |a_i^H a_j| / (‖a_i‖ ‖a_j‖)` from the full Gram matrix.
pub fn mutual_coherence(a: &CMatrix) -> Result<Coherence> {
    if a.cols() < 2 {
        return Err(Error::Dimension(format!(
            "mutual coherence needs at least 2 columns, got {}",
            a.cols()
        )));
    }
    let norms = a.column_norms();
    if let Some(column) = norms.iter().position(|&x| x == 0.0) {
        return Err(Error::DegenerateColumn { column });
    }
    Ok(max_normalized_off_diagonal(&a.gram(), &norms))
}

/// Rounds every entry's phase to the nearest multiple of `2π / 2^bits`,
/// keeping its modulus. Entries already on the grid are returned untouched,
/// which makes the operation exactly idempotent.
pub fn quantize_phases(a: &CMatrix, bits: u32) -> Result<CMatrix> {
    if bits == 0 || bits > 30 {
        return Err(Error::InvalidArgument(format!(
            "phase resolution must be 1..=30 bits, got {bits}"
        )));
    }
    let levels = 1usize << bits;
    let step = 2.0 * PI / levels as f64;
    let data = a.as_slice().iter().map(|&z| quantize_phase(z, step, levels)).collect();
    CMatrix::from_row_major(a.rows(), a.cols(), data)
}

fn quantize_phase(z: Complex64, step: f64, levels: usize) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return z;
    }
    let phase = z.arg();
    let k = (phase / step).round();
    if (phase - k * step).abs() <= 1e-12 {
        return z;
    }
    // index on the grid, expressed as a negative-exponent root of unity
    let idx = ((-k).rem_euclid(levels as f64)) as usize;
    unit_root(idx, levels) * r
}

/// Numerical rank via column-pivoted modified Gram-Schmidt. Columns whose
/// residual norm drops below `rel_tol` times the largest column norm are
/// treated as dependent.
pub fn numerical_rank(a: &CMatrix, rel_tol: f64) -> usize {
    let mut cols: Vec<Vec<Complex64>> = (0..a.cols()).map(|c| a.column(c)).collect();
    let scale = a.column_norms().into_iter().fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    while !cols.is_empty() {
        let (pos, norm) = cols
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if norm <= rel_tol * scale {
            break;
        }
        let q: Vec<Complex64> = cols.swap_remove(pos).iter().map(|z| z / norm).collect();
        for c in cols.iter_mut() {
            let proj: Complex64 = q.iter().zip(c.iter()).map(|(qi, ci)| qi.conj() * ci).sum();
            for (ci, qi) in c.iter_mut().zip(&q) {
                *ci -= proj * qi;
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dft_small_cases() {
        let u1 = dft_matrix(1).unwrap();
        assert_eq!(u1.as_slice(), &[C1]);

        let u2 = dft_matrix(2).unwrap();
        let want = CMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, -1.0]]).unwrap();
        assert_eq!(u2, want);

        let u4 = dft_matrix(4).unwrap();
        assert_eq!(u4[(1, 1)], c(0.0, -1.0));
        assert!(matches!(dft_matrix(0), Err(Error::Dimension(_))));
    }

    #[test]
    fn dft_is_scaled_unitary() {
        for n in [1, 2, 3, 5, 8, 12, 64] {
            let u = dft_matrix(n).unwrap();
            let g = u.matmul(&u.adjoint()).unwrap();
            let want = CMatrix::identity(n).scale(c(n as f64, 0.0));
            assert!(g.max_abs_diff(&want).unwrap() < 1e-10, "n = {n}");
            assert!(u.as_slice().iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn kron_examples() {
        let b = CMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let i2 = CMatrix::identity(2);
        let k = kron(&i2, &b).unwrap();
        assert_eq!(k.shape(), (4, 4));
        for r in 0..4 {
            for col in 0..4 {
                let want = if r / 2 == col / 2 { b[(r % 2, col % 2)] } else { C0 };
                assert_eq!(k[(r, col)], want);
            }
        }

        let two = CMatrix::from_real_rows(&[&[2.0]]).unwrap();
        assert_eq!(kron(&two, &b).unwrap(), b.scale(c(2.0, 0.0)));

        let a = CMatrix::from_real_rows(&[&[1.0, 2.0]]).unwrap();
        let ones = CMatrix::from_real_rows(&[&[1.0], &[1.0]]).unwrap();
        let want = CMatrix::from_real_rows(&[&[1.0, 2.0], &[1.0, 2.0]]).unwrap();
        assert_eq!(kron(&a, &ones).unwrap(), want);
    }

    #[test]
    fn coherence_examples() {
        let mu = mutual_coherence(&CMatrix::identity(3)).unwrap();
        assert_eq!(mu.value(), 0.0);

        let mu = mutual_coherence(&dft_matrix(2).unwrap()).unwrap();
        assert_eq!(mu.value(), 0.0);

        let a = CMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        let mu = mutual_coherence(&a).unwrap();
        assert_abs_diff_eq!(mu.value(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(mu.pair(), (0, 1));
    }

    #[test]
    fn coherence_rejects_zero_column_and_single_column() {
        let a = CMatrix::from_real_rows(&[&[1.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(mutual_coherence(&a), Err(Error::DegenerateColumn { column: 1 }));
        let single = CMatrix::from_real_rows(&[&[1.0], &[2.0]]).unwrap();
        assert!(matches!(mutual_coherence(&single), Err(Error::Dimension(_))));
    }

    #[test]
    fn coherence_ties_report_smallest_pair() {
        // three identical columns: every pair has coherence 1
        let a = CMatrix::from_real_rows(&[&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]]).unwrap();
        let mu = mutual_coherence(&a).unwrap();
        assert_eq!(mu.pair(), (0, 1));
        assert_abs_diff_eq!(mu.value(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn quantize_examples() {
        let u = dft_matrix(64).unwrap();
        assert_eq!(quantize_phases(&u, 6).unwrap(), u);

        let z = CMatrix::column_vector(&[Complex64::from_polar(1.0, 0.1)]);
        let q = quantize_phases(&z, 1).unwrap();
        assert_abs_diff_eq!((q[(0, 0)] - C1).norm(), 0.0, epsilon = 1e-15);

        let z = CMatrix::column_vector(&[Complex64::from_polar(2.0, PI / 3.0)]);
        let q = quantize_phases(&z, 2).unwrap();
        assert_abs_diff_eq!((q[(0, 0)] - c(0.0, 2.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn quantize_rejects_zero_bits() {
        assert!(quantize_phases(&CMatrix::identity(2), 0).is_err());
    }

    #[test]
    fn from_row_major_validates() {
        assert!(CMatrix::from_row_major(0, 1, vec![]).is_err());
        assert!(CMatrix::from_row_major(2, 2, vec![C1; 3]).is_err());
        assert_eq!(
            CMatrix::from_row_major(1, 2, vec![C1, c(f64::NAN, 0.0)]),
            Err(Error::NonFinite { row: 0, col: 1 })
        );
    }

    #[test]
    fn vec_is_column_major() {
        let a = CMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let v: Vec<f64> = a.vec().iter().map(|z| z.re).collect();
        assert_eq!(v, vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(CMatrix::unvec(&a.vec(), 2, 2).unwrap(), a);
    }

    #[test]
    fn rank_of_outer_products() {
        let u = dft_matrix(8).unwrap();
        assert_eq!(numerical_rank(&u, 1e-10), 8);
        let x = u.select_columns(&[0, 3]);
        let gram = x.conj().matmul(&x.transpose()).unwrap();
        assert_eq!(numerical_rank(&gram, 1e-10), 2);
    }

    #[test]
    fn json_round_trip() {
        let u = dft_matrix(3).unwrap();
        let s = serde_json::to_string(&u).unwrap();
        let back: CMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
        assert!(serde_json::from_str::<CMatrix>(r#"{"rows":2,"cols":2,"entries":[[1,0]]}"#).is_err());
    }
}
