//! Complex linear algebra kernel: Haar-random unitaries, submatrix
//! extraction and matrix permanents.
//!
//! Complex values are held as explicit real/imaginary `f64` pairs in
//! row-major order; nothing here depends on an external matrix library's
//! memory layout.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::config::Configuration;
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Largest matrix size accepted by [`permanent_ryser`]. Subset masks fit a
/// 32-bit word; beyond this the run-time is hopeless anyway.
pub const MAX_RYSER_DIM: usize = 32;

/// Largest matrix size accepted by [`permanent_naive`] (factorial cost).
pub const MAX_NAIVE_DIM: usize = 9;

/// Unitarity tolerance enforced on every [`UnitaryMatrix`]:
/// `max |U†U − I|` must not exceed this.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries. All entries must be finite
    /// and the length must equal `rows * cols`.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite entry {bad}")));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.entries[row * self.cols + col] = value;
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for c in 0..rhs.cols {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..self.cols {
                    acc += self.get(r, k) * rhs.get(k, c);
                }
                out.set(r, c, acc);
            }
        }
        Ok(out)
    }
}

/// An M×M unitary together with the seed that generated it and the measured
/// deviation from exact unitarity.
#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    matrix: ComplexMatrix,
    seed: u64,
    unitarity_defect: f64,
}

impl UnitaryMatrix {
    /// Wraps an externally constructed matrix, verifying it is square and
    /// unitary to within [`UNITARITY_TOLERANCE`].
    pub fn from_matrix(matrix: ComplexMatrix, seed: u64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "unitary must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let defect = unitarity_defect_of(&matrix);
        if defect > UNITARITY_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "matrix is not unitary: defect {defect:.3e}"
            )));
        }
        Ok(Self {
            matrix,
            seed,
            unitarity_defect: defect,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `max |U†U − I|`, guaranteed ≤ [`UNITARITY_TOLERANCE`].
    pub fn unitarity_defect(&self) -> f64 {
        self.unitarity_defect
    }

    /// Number of ports M.
    pub fn dim(&self) -> u32 {
        self.matrix.rows() as u32
    }

    /// SHA-256 over the canonical 17-significant-digit entry serialization.
    pub fn checksum(&self) -> String {
        checksum_of(&self.matrix)
    }
}

fn unitarity_defect_of(m: &ComplexMatrix) -> f64 {
    let gram = m.dagger().matmul(m).expect("square by construction");
    let n = m.rows();
    let mut defect = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let expected = if r == c { 1.0 } else { 0.0 };
            let delta = gram.get(r, c) - C64::new(expected, 0.0);
            defect = defect.max(delta.norm());
        }
    }
    defect
}

/// Draws an M×M unitary Haar-uniformly, deterministically in `(m, seed)`.
///
/// Construction: complex Ginibre matrix → Householder QR → multiply Q by
/// the phases of R's diagonal, which removes the sign ambiguity of QR and
/// makes the resulting distribution exactly Haar.
pub fn haar_random_unitary(m: u32, seed: u64) -> UnitaryMatrix {
    assert!(m >= 1, "unitary dimension must be at least 1");
    let n = m as usize;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let entries: Vec<C64> = (0..n * n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * inv_sqrt2, im * inv_sqrt2)
        })
        .collect();
    let ginibre = ComplexMatrix { rows: n, cols: n, entries };
    let (q, r) = qr_householder(&ginibre);

    // Fix the phases: column j of Q gets r_jj / |r_jj|.
    let mut unitary = q;
    for j in 0..n {
        let d = r.get(j, j);
        let phase = if d.norm() == 0.0 { C64::new(1.0, 0.0) } else { d / d.norm() };
        for i in 0..n {
            let v = unitary.get(i, j) * phase;
            unitary.set(i, j, v);
        }
    }

    let defect = unitarity_defect_of(&unitary);
    debug_assert!(defect <= UNITARITY_TOLERANCE, "QR lost unitarity: {defect}");
    UnitaryMatrix {
        matrix: unitary,
        seed,
        unitarity_defect: defect,
    }
}

/// Householder QR of a square complex matrix: returns (Q, R) with A = QR,
/// Q unitary and R upper triangular.
fn qr_householder(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(n);
    let mut v = vec![C64::new(0.0, 0.0); n];

    for k in 0..n {
        let mut norm_sq = 0.0f64;
        for i in k..n {
            norm_sq += r.get(i, k).norm_sqr();
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = r.get(k, k);
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm;

        // v = x − α e₁, restricted to rows k..n.
        v[k] = x0 - alpha;
        for i in (k + 1)..n {
            v[i] = r.get(i, k);
        }
        let v_norm_sq: f64 = v[k..n].iter().map(|z| z.norm_sqr()).sum();
        if v_norm_sq == 0.0 {
            continue;
        }
        let scale = 2.0 / v_norm_sq;

        // R ← H R with H = I − 2 v v† / ‖v‖².
        for c in k..n {
            let mut w = C64::new(0.0, 0.0);
            for i in k..n {
                w += v[i].conj() * r.get(i, c);
            }
            w *= scale;
            for i in k..n {
                let val = r.get(i, c) - v[i] * w;
                r.set(i, c, val);
            }
        }
        // Q ← Q H (accumulates Q = H₁ H₂ ⋯).
        for row in 0..n {
            let mut u = C64::new(0.0, 0.0);
            for i in k..n {
                u += q.get(row, i) * v[i];
            }
            u *= scale;
            for i in k..n {
                let val = q.get(row, i) - u * v[i].conj();
                q.set(row, i, val);
            }
        }
    }
    (q, r)
}

/// Permanent by Ryser's inclusion–exclusion with Gray-code subset ordering:
/// each subset step updates the row sums by a single column.
pub fn permanent_ryser(a: &ComplexMatrix) -> Result<C64> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "permanent requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n > MAX_RYSER_DIM {
        return Err(Error::Capacity(format!(
            "permanent dimension {n} exceeds the {MAX_RYSER_DIM} limit"
        )));
    }

    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut total = C64::new(0.0, 0.0);
    let subsets: u64 = 1u64 << n;
    for k in 1..subsets {
        let gray = k ^ (k >> 1);
        let flipped = k.trailing_zeros() as usize;
        let added = gray & (1u64 << flipped) != 0;
        if added {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += a.get(i, flipped);
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= a.get(i, flipped);
            }
        }
        let mut prod = C64::new(1.0, 0.0);
        for s in &row_sums {
            prod *= *s;
        }
        if gray.count_ones() % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        total = -total;
    }
    Ok(total)
}

/// Permanent by direct expansion over all N! permutations. Test oracle for
/// [`permanent_ryser`]; deliberately a different algorithm.
pub fn permanent_naive(a: &ComplexMatrix) -> Result<C64> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "permanent requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n > MAX_NAIVE_DIM {
        return Err(Error::Capacity(format!(
            "naive permanent dimension {n} exceeds the {MAX_NAIVE_DIM} limit"
        )));
    }

    fn expand(a: &ComplexMatrix, row: usize, used: u32, partial: C64, total: &mut C64) {
        let n = a.rows();
        if row == n {
            *total += partial;
            return;
        }
        for col in 0..n {
            if used & (1u32 << col) == 0 {
                expand(a, row + 1, used | (1u32 << col), partial * a.get(row, col), total);
            }
        }
    }

    let mut total = C64::new(0.0, 0.0);
    expand(a, 0, 0, C64::new(1.0, 0.0), &mut total);
    Ok(total)
}

/// Extracts the N×N submatrix addressed by an (input, output) configuration
/// pair: entry (j, k) is `U[output.ports[j], input.ports[k]]`.
pub fn submatrix(
    u: &UnitaryMatrix,
    input_cfg: &Configuration,
    output_cfg: &Configuration,
) -> Result<ComplexMatrix> {
    if input_cfg.len() != output_cfg.len() {
        return Err(Error::Dimension(format!(
            "input and output configurations differ in length: {} vs {}",
            input_cfg.len(),
            output_cfg.len()
        )));
    }
    let m = u.dim();
    let n = input_cfg.len();
    for &p in input_cfg.ports().iter().chain(output_cfg.ports()) {
        if p >= m {
            return Err(Error::Bounds(format!("port {p} outside [0, {m})")));
        }
    }
    let mut entries = Vec::with_capacity(n * n);
    for &out_port in output_cfg.ports() {
        for &in_port in input_cfg.ports() {
            entries.push(u.matrix().get(out_port as usize, in_port as usize));
        }
    }
    Ok(ComplexMatrix {
        rows: n,
        cols: n,
        entries,
    })
}

fn format_float(x: f64) -> String {
    // 17 significant digits: enough for the decimal round-trip to be
    // bit-exact for any f64.
    format!("{x:.16e}")
}

fn checksum_of(m: &ComplexMatrix) -> String {
    let mut hasher = Sha256::new();
    for z in m.entries() {
        hasher.update(format_float(z.re).as_bytes());
        hasher.update(b",");
        hasher.update(format_float(z.im).as_bytes());
        hasher.update(b";");
    }
    hex::encode(hasher.finalize())
}

/// Serializes a unitary to its JSON file form:
/// `{"M": .., "seed": .., "entries": [[re, im], ..], "checksum": ".."}`
/// with every float written at 17 significant digits.
pub fn unitary_to_json(u: &UnitaryMatrix) -> String {
    let m = u.dim();
    let mut out = String::new();
    let _ = write!(out, "{{\n  \"M\": {m},\n  \"seed\": {},\n  \"entries\": [\n", u.seed());
    let total = (m as usize) * (m as usize);
    for (idx, z) in u.matrix().entries().iter().enumerate() {
        let sep = if idx + 1 == total { "" } else { "," };
        let _ = write!(
            out,
            "    [{}, {}]{sep}\n",
            format_float(z.re),
            format_float(z.im)
        );
    }
    let _ = write!(out, "  ],\n  \"checksum\": \"{}\"\n}}\n", u.checksum());
    out
}

#[derive(Deserialize)]
struct UnitaryFileRepr {
    #[serde(rename = "M")]
    m: u32,
    seed: u64,
    entries: Vec<[f64; 2]>,
    checksum: String,
}

/// Writes the unitary JSON file format to `path`.
pub fn write_unitary(u: &UnitaryMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, unitary_to_json(u))?;
    Ok(())
}

/// Reads a unitary back, verifying the checksum and the unitarity defect.
pub fn read_unitary(path: &Path) -> Result<UnitaryMatrix> {
    let text = std::fs::read_to_string(path)?;
    unitary_from_json(&text)
}

pub fn unitary_from_json(text: &str) -> Result<UnitaryMatrix> {
    let repr: UnitaryFileRepr = serde_json::from_str(text)?;
    let n = repr.m as usize;
    if repr.entries.len() != n * n {
        return Err(Error::Integrity(format!(
            "expected {} entries for M={}, found {}",
            n * n,
            repr.m,
            repr.entries.len()
        )));
    }
    let entries: Vec<C64> = repr.entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
    let matrix = ComplexMatrix::new(n, n, entries)?;
    let checksum = checksum_of(&matrix);
    if checksum != repr.checksum {
        return Err(Error::Integrity(format!(
            "checksum mismatch: file says {}, entries hash to {}",
            repr.checksum, checksum
        )));
    }
    let defect = unitarity_defect_of(&matrix);
    if defect > UNITARITY_TOLERANCE {
        return Err(Error::Integrity(format!(
            "matrix is not unitary: defect {defect:.3e} exceeds {UNITARITY_TOLERANCE:.0e}"
        )));
    }
    Ok(UnitaryMatrix {
        matrix,
        seed: repr.seed,
        unitarity_defect: defect,
    })
}
