//! Exact simulation of a zero-mean, unit-variance isotropic Gaussian field
//! on the points of a [`SurfaceCloud`].
//!
//! The covariance matrix is factored once (`Σ + δI = LLᵀ`, lower triangular)
//! and every replicate is `L z` with `z` standard normal. Replicates are
//! produced in blocks of [`REPLICATE_BLOCK`] aligned to multiples of the
//! block size, and each block is always computed with the same shape, so the
//! values of replicate `k` depend only on the master seed and `k`.
//!
//! Standard normals come from ChaCha8 streams: replicate `k` reads stream `k`
//! of the generator keyed by the master seed, and normals are drawn with the
//! ziggurat sampler of `rand_distr`. Bit-level reproducibility holds per build.

use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::surface::{distance, CloudId, SurfaceCloud};

/// Replicates are generated in aligned blocks of this many columns.
pub const REPLICATE_BLOCK: usize = 64;

/// Diagonal inflations tried in order until the factorization succeeds.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// Default ceiling on the memory used by one dense factor.
pub const DEFAULT_MAX_FACTOR_BYTES: usize = 2 << 30;

const CHOLESKY_BLOCK: usize = 96;
const PRODUCT_BLOCK: usize = 256;

/// One simulated field vector on a cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization {
    pub values: Vec<f64>,
    /// Master seed of the policy that produced this replicate.
    pub seed: u64,
    pub replicate: u64,
    pub cloud_id: CloudId,
}

/// Maps replicate indices to independent, reproducible random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPolicy {
    pub master_seed: u64,
}

impl SeedPolicy {
    pub fn new(master_seed: u64) -> Self {
        SeedPolicy { master_seed }
    }

    /// Generator for replicate `k`.
    pub fn stream(&self, replicate: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(replicate);
        rng
    }

    /// A child policy keyed by `path`; distinct paths give unrelated seeds.
    pub fn derive(&self, path: &[u64]) -> SeedPolicy {
        let mut h = splitmix64(self.master_seed ^ 0x6a09_e667_f3bc_c909);
        for &p in path {
            h = splitmix64(h ^ splitmix64(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        }
        SeedPolicy { master_seed: h }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// `Σ_ij = B(‖p_i − p_j‖)`, unit diagonal, exactly symmetric.
pub fn covariance_matrix(model: &CovarianceModel, cloud: &SurfaceCloud) -> DMatrix<f64> {
    let n = cloud.len();
    let mut sigma = DMatrix::from_element(n, n, 0.0);
    for j in 0..n {
        sigma[(j, j)] = 1.0;
        for i in (j + 1)..n {
            let c = model.cov_unchecked(distance(&cloud.points[i], &cloud.points[j]));
            sigma[(i, j)] = c;
            sigma[(j, i)] = c;
        }
    }
    sigma
}

/// Lower-triangular factor of a jittered covariance matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: DMatrix<f64>,
    /// Diagonal inflation δ that made the factorization succeed.
    pub jitter: f64,
    /// Smallest pivot `L_ii²` encountered.
    pub min_pivot: f64,
}

impl CholeskyFactor {
    /// Factor `sigma + δI`, escalating δ along [`JITTER_LADDER`].
    pub fn new(sigma: &DMatrix<f64>) -> Result<Self> {
        let mut last = (f64::NAN, 0usize);
        for &jitter in &JITTER_LADDER {
            let mut a = sigma.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += jitter;
            }
            match cholesky_in_place(&mut a) {
                Ok(min_pivot) => {
                    return Ok(CholeskyFactor {
                        lower: a,
                        jitter,
                        min_pivot,
                    })
                }
                Err(failure) => last = failure,
            }
        }
        Err(Error::Numeric(format!(
            "covariance factorization failed even with jitter {:e}: pivot {:e} at row {} \
             (duplicate or nearly coincident points make the matrix singular)",
            JITTER_LADDER[JITTER_LADDER.len() - 1],
            last.0,
            last.1
        )))
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// `L z` for an `n × m` matrix `z`, accumulated in a fixed block order.
    pub fn apply(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let m = z.ncols();
        let mut y = DMatrix::from_element(n, m, 0.0);
        let mut i0 = 0;
        while i0 < n {
            let ib = PRODUCT_BLOCK.min(n - i0);
            let mut j0 = 0;
            while j0 <= i0 {
                let jb = PRODUCT_BLOCK.min(n - j0);
                let l_blk = self.lower.view((i0, j0), (ib, jb));
                let z_blk = z.view((j0, 0), (jb, m));
                y.view_mut((i0, 0), (ib, m)).gemm(1.0, &l_blk, &z_blk, 1.0);
                j0 += PRODUCT_BLOCK;
            }
            i0 += PRODUCT_BLOCK;
        }
        y
    }
}

/// Blocked right-looking Cholesky; on success the strict upper triangle is
/// zeroed and the smallest pivot is returned, on failure `(pivot, row)`.
fn cholesky_in_place(a: &mut DMatrix<f64>) -> std::result::Result<f64, (f64, usize)> {
    let n = a.nrows();
    let mut min_pivot = f64::INFINITY;
    let mut k = 0;
    while k < n {
        let kb = CHOLESKY_BLOCK.min(n - k);
        // Diagonal block, unblocked.
        for j in k..k + kb {
            let mut pivot = a[(j, j)];
            for l in k..j {
                pivot -= a[(j, l)] * a[(j, l)];
            }
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err((pivot, j));
            }
            min_pivot = min_pivot.min(pivot);
            let ljj = pivot.sqrt();
            a[(j, j)] = ljj;
            for i in (j + 1)..(k + kb) {
                let mut s = a[(i, j)];
                for l in k..j {
                    s -= a[(i, l)] * a[(j, l)];
                }
                a[(i, j)] = s / ljj;
            }
        }
        let rest = n - k - kb;
        if rest > 0 {
            // Panel: A21 ← A21 L11⁻ᵀ, column by column.
            for j in k..k + kb {
                let ljj = a[(j, j)];
                for l in k..j {
                    let f = a[(j, l)];
                    if f != 0.0 {
                        for i in (k + kb)..n {
                            let v = a[(i, l)];
                            a[(i, j)] -= v * f;
                        }
                    }
                }
                for i in (k + kb)..n {
                    a[(i, j)] /= ljj;
                }
            }
            // Trailing update of the lower triangle: A22 ← A22 − A21 A21ᵀ.
            let panel = a.view((k + kb, k), (rest, kb)).clone_owned();
            let panel_t = panel.transpose();
            let mut c0 = 0;
            while c0 < rest {
                let cb = CHOLESKY_BLOCK.min(rest - c0);
                let rows = rest - c0;
                let left = panel.rows(c0, rows);
                let right = panel_t.columns(c0, cb);
                a.view_mut((k + kb + c0, k + kb + c0), (rows, cb))
                    .gemm(-1.0, &left, &right, 1.0);
                c0 += CHOLESKY_BLOCK;
            }
        }
        k += kb;
    }
    for j in 1..n {
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Ok(min_pivot)
}

/// Bytes needed to hold the dense factor for `n` points.
pub fn factor_bytes(n: usize) -> usize {
    n.saturating_mul(n).saturating_mul(std::mem::size_of::<f64>())
}

/// Reject clouds whose factor would exceed `max_bytes`.
pub fn check_factor_memory(n: usize, max_bytes: usize) -> Result<()> {
    let need = factor_bytes(n);
    if need > max_bytes {
        return Err(Error::Resource(format!(
            "a {n}-point cloud needs {:.1} MiB for its covariance factor, limit is {:.1} MiB",
            need as f64 / (1 << 20) as f64,
            max_bytes as f64 / (1 << 20) as f64
        )));
    }
    Ok(())
}

/// Draws field replicates on one cloud from a cached factor.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    factor: CholeskyFactor,
    cloud_id: CloudId,
}

impl FieldSampler {
    pub fn new(model: &CovarianceModel, cloud: &SurfaceCloud) -> Result<Self> {
        Self::with_memory_limit(model, cloud, DEFAULT_MAX_FACTOR_BYTES)
    }

    pub fn with_memory_limit(model: &CovarianceModel, cloud: &SurfaceCloud, max_bytes: usize) -> Result<Self> {
        check_factor_memory(cloud.len(), max_bytes)?;
        let sigma = covariance_matrix(model, cloud);
        let factor = CholeskyFactor::new(&sigma)?;
        Ok(FieldSampler {
            factor,
            cloud_id: cloud.id(),
        })
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn jitter(&self) -> f64 {
        self.factor.jitter
    }

    pub fn len(&self) -> usize {
        self.factor.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cloud_id(&self) -> CloudId {
        self.cloud_id
    }

    /// Replicates `block·B .. (block+1)·B` as the columns of an `n × B` matrix.
    pub fn sample_block(&self, seeds: &SeedPolicy, block: u64) -> DMatrix<f64> {
        let n = self.len();
        let first = block * REPLICATE_BLOCK as u64;
        let mut z = DMatrix::from_element(n, REPLICATE_BLOCK, 0.0);
        for (c, mut col) in z.column_iter_mut().enumerate() {
            let mut rng = seeds.stream(first + c as u64);
            for v in col.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
        }
        self.factor.apply(&z)
    }

    /// Visit replicates `0..n_reps` in order.
    pub fn for_each_replicate(&self, seeds: &SeedPolicy, n_reps: usize, mut visit: impl FnMut(u64, &[f64])) {
        let blocks = n_reps.div_ceil(REPLICATE_BLOCK);
        for b in 0..blocks {
            let y = self.sample_block(seeds, b as u64);
            for (c, col) in y.column_iter().enumerate() {
                let k = b * REPLICATE_BLOCK + c;
                if k >= n_reps {
                    break;
                }
                visit(k as u64, col.as_slice());
            }
        }
    }

    pub fn simulate(&self, seeds: &SeedPolicy, n_reps: usize) -> Vec<FieldRealization> {
        let mut out = Vec::with_capacity(n_reps);
        self.for_each_replicate(seeds, n_reps, |k, values| {
            out.push(FieldRealization {
                values: values.to_vec(),
                seed: seeds.master_seed,
                replicate: k,
                cloud_id: self.cloud_id,
            })
        });
        out
    }
}

/// Factor the covariance of `cloud` and draw `n_reps` independent replicates.
pub fn simulate(
    model: &CovarianceModel,
    cloud: &SurfaceCloud,
    seeds: &SeedPolicy,
    n_reps: usize,
) -> Result<Vec<FieldRealization>> {
    if n_reps == 0 {
        return Err(Error::config("replicates", "must be at least 1"));
    }
    Ok(FieldSampler::new(model, cloud)?.simulate(seeds, n_reps))
}

/// Magic bytes opening a binary realization block.
pub const LRF_MAGIC: &[u8; 4] = b"LRF1";

/// Little-endian block: `LRF1`, `u64 n`, `u64 reps`, then `reps·n` `f64`s, replicate-major.
pub fn write_binary(realizations: &[FieldRealization], mut out: impl Write) -> Result<()> {
    let n = realizations.first().map_or(0, |r| r.values.len());
    out.write_all(LRF_MAGIC)?;
    out.write_all(&(n as u64).to_le_bytes())?;
    out.write_all(&(realizations.len() as u64).to_le_bytes())?;
    for r in realizations {
        if r.values.len() != n {
            return Err(Error::Shape {
                context: "binary field block",
                expected: n,
                got: r.values.len(),
            });
        }
        for v in &r.values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a block written by [`write_binary`]; returns one vector per replicate.
pub fn read_binary(mut input: impl Read) -> Result<Vec<Vec<f64>>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != LRF_MAGIC {
        return Err(Error::parse("binary field block", format!("bad magic bytes {magic:?}")));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let reps = u64::from_le_bytes(word) as usize;
    let mut rows = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut row = Vec::with_capacity(n);
        for _ in 0..n {
            input.read_exact(&mut word)?;
            row.push(f64::from_le_bytes(word));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// CSV with a header `p0,p1,…` and one row per replicate.
pub fn write_csv(realizations: &[FieldRealization], mut out: impl Write) -> Result<()> {
    let n = realizations.first().map_or(0, |r| r.values.len());
    let header: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for r in realizations {
        let row: Vec<String> = r.values.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Read field rows from CSV; a non-numeric first line is treated as a header.
pub fn read_csv(input: impl BufRead) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                if let Some(first) = rows.first() {
                    let first: &Vec<f64> = first;
                    if first.len() != row.len() {
                        return Err(Error::Shape {
                            context: "field CSV row",
                            expected: first.len(),
                            got: row.len(),
                        });
                    }
                }
                rows.push(row);
            }
            Err(_) if lineno == 0 => continue,
            Err(e) => return Err(Error::parse(format!("field CSV line {}", lineno + 1), e.to_string())),
        }
    }
    Ok(rows)
}
