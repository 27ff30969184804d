//! Domain types, synthetic ground truth and noise generation.

use std::fmt;
use std::fs;
use std::ops::Deref;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Absolute asymmetry tolerated by [`SymmetricMatrix::new`] and the text reader.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Dense symmetric matrix whose lower triangle mirrors the upper one bit-exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix(Matrix);

impl SymmetricMatrix {
    /// Accepts a square finite matrix with `max |A - A^T| <= 1e-9` and
    /// re-mirrors the upper triangle.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let dev = linalg::max_asymmetry(&m);
        if dev > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { deviation: dev });
        }
        Ok(Self::mirror_upper(m))
    }

    /// Builds the matrix from its upper triangle, ignoring the strict lower part.
    pub fn from_upper(m: Matrix) -> Self {
        Self::mirror_upper(m)
    }

    /// `(A + A^T) / 2`, always symmetric.
    pub fn symmetrized(m: &Matrix) -> Self {
        SymmetricMatrix(linalg::symmetrize(m))
    }

    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix(Matrix::zeros(n, n))
    }

    fn mirror_upper(mut m: Matrix) -> Self {
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                m[(i, j)] = m[(j, i)];
            }
        }
        SymmetricMatrix(m)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> SymmetricMatrix {
        let k = idx.len();
        SymmetricMatrix(Matrix::from_fn(k, k, |a, b| self.0[(idx[a], idx[b])]))
    }

    /// Elementwise mean; all inputs must share one dimension.
    pub fn mean(items: &[SymmetricMatrix]) -> Result<SymmetricMatrix> {
        let first = items
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot average an empty list".into()))?;
        let n = first.n();
        let mut acc = Matrix::zeros(n, n);
        for m in items {
            if m.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.n(),
                });
            }
            acc += &m.0;
        }
        acc /= items.len() as f64;
        Ok(SymmetricMatrix(acc))
    }
}

impl Deref for SymmetricMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// One subject's node-sparse perturbation.
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub matrix: SymmetricMatrix,
    /// Sorted node support.
    pub support: Vec<usize>,
    /// Set when the planted rows are identically zero (zero signal scale).
    pub degenerate: bool,
}

/// Planted model: `M* = U* diag(lambda) U*^T` plus node-sparse perturbations.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    basis: Matrix,
    eigenvalues: Vec<f64>,
    perturbations: Vec<Perturbation>,
}

impl GroundTruth {
    pub fn new(basis: Matrix, eigenvalues: Vec<f64>, perturbations: Vec<Perturbation>) -> Result<Self> {
        let (n, r) = basis.shape();
        if r == 0 || r > n {
            return Err(Error::InvalidRank { rank: r, n });
        }
        if eigenvalues.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                got: eigenvalues.len(),
            });
        }
        if eigenvalues.windows(2).any(|w| w[0].abs() < w[1].abs()) {
            return Err(Error::InvalidArgument(
                "eigenvalues must be sorted by magnitude, largest first".into(),
            ));
        }
        let gram = basis.transpose() * &basis - Matrix::identity(r, r);
        if linalg::max_abs(&gram) > 1e-10 {
            return Err(Error::InvalidArgument("basis columns are not orthonormal".into()));
        }
        for p in &perturbations {
            if p.matrix.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.matrix.n(),
                });
            }
        }
        Ok(Self {
            basis,
            eigenvalues,
            perturbations,
        })
    }

    pub fn n(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn perturbations(&self) -> &[Perturbation] {
        &self.perturbations
    }

    pub fn mstar(&self) -> SymmetricMatrix {
        let scaled = Matrix::from_fn(self.n(), self.rank(), |i, k| {
            self.basis[(i, k)] * self.eigenvalues[k]
        });
        SymmetricMatrix::symmetrized(&(scaled * self.basis.transpose()))
    }

    pub fn kappa(&self) -> f64 {
        self.eigenvalues[0].abs() / self.eigenvalues[self.rank() - 1].abs()
    }

    pub fn mu(&self) -> f64 {
        incoherence(&self.basis)
    }

    /// `delta_1 = inf`; for `l > 1` the distance to the nearest other eigenvalue.
    pub fn eigengaps(&self) -> Vec<f64> {
        let ev = &self.eigenvalues;
        (0..ev.len())
            .map(|l| {
                if l == 0 {
                    return f64::INFINITY;
                }
                (0..ev.len())
                    .filter(|&k| k != l)
                    .map(|k| (ev[l] - ev[k]).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}

/// `(n / r) * max_i ||U_i||^2`.
pub fn incoherence(u: &Matrix) -> f64 {
    let (n, r) = u.shape();
    let m = linalg::two_inf_norm(u);
    n as f64 / r as f64 * m * m
}

/// Two-block random orthonormal basis with target incoherence.
///
/// The top `floor(n / mu)` rows carry one Haar block and the remaining rows
/// another; columns are then renormalized. Returns the basis and its realized
/// incoherence, which only approximates `mu_target`.
pub fn generate_ustar<R: Rng + ?Sized>(n: usize, r: usize, mu_target: f64, rng: &mut R) -> Result<(Matrix, f64)> {
    if r == 0 || r > n {
        return Err(Error::InvalidRank { rank: r, n });
    }
    let max = n as f64 / r as f64;
    if !(mu_target >= 1.0 && mu_target <= max * (1.0 + 1e-12)) {
        return Err(Error::InvalidMu { mu: mu_target, max });
    }
    let m = ((n as f64 / mu_target).floor() as usize).clamp(r, n);
    let mut u = Matrix::zeros(n, r);
    if m == n || n - m < r {
        u = linalg::haar_stiefel(n, r, rng);
    } else {
        let top = linalg::haar_stiefel(m, r, rng);
        let bottom = linalg::haar_stiefel(n - m, r, rng);
        u.view_mut((0, 0), (m, r)).copy_from(&top);
        u.view_mut((m, 0), (n - m, r)).copy_from(&bottom);
        for k in 0..r {
            let nrm = u.column(k).norm();
            u.column_mut(k).unscale_mut(nrm);
        }
    }
    let mu = incoherence(&u);
    Ok((u, mu))
}

fn random_subset<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<usize> {
    let mut idx = rand::seq::index::sample(rng, n, m).into_vec();
    idx.sort_unstable();
    idx
}

/// Node-sparse `B* = B0 + B0^T` whose nonzero rows of `B0` sit on a random
/// `m`-subset and are i.i.d. `N(0, sigma_b^2)` (diagonal included).
pub fn generate_bstar<R: Rng + ?Sized>(n: usize, m: usize, sigma_b: f64, rng: &mut R) -> Result<Perturbation> {
    let all: Vec<usize> = (0..n).collect();
    generate_bstar_within(n, m, sigma_b, &all, rng)
}

/// [`generate_bstar`] with the support drawn uniformly from `candidates`.
pub fn generate_bstar_within<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    sigma_b: f64,
    candidates: &[usize],
    rng: &mut R,
) -> Result<Perturbation> {
    if m == 0 || m >= n || m > candidates.len() {
        return Err(Error::InvalidSupportSize { m, n });
    }
    if candidates.iter().any(|&i| i >= n) {
        return Err(Error::InvalidArgument("support candidate out of range".into()));
    }
    if !(sigma_b >= 0.0) || !sigma_b.is_finite() {
        return Err(Error::InvalidArgument(format!("signal scale {sigma_b} must be >= 0")));
    }
    let mut support: Vec<usize> = random_subset(candidates.len(), m, rng)
        .into_iter()
        .map(|k| candidates[k])
        .collect();
    support.sort_unstable();
    let mut b0 = Matrix::zeros(n, n);
    for &i in &support {
        for j in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            b0[(i, j)] = sigma_b * z;
        }
    }
    let b = SymmetricMatrix::from_upper(&b0 + b0.transpose());
    Ok(Perturbation {
        matrix: b,
        support,
        degenerate: sigma_b == 0.0,
    })
}

/// Perturbation on which row-norm based selectors are fooled by a decoy set.
#[derive(Clone, Debug)]
pub struct AdversarialPerturbation {
    pub perturbation: Perturbation,
    /// Sorted decoy nodes `J`.
    pub decoys: Vec<usize>,
    pub beta1: f64,
    pub beta2: f64,
}

/// `m = floor(2 sqrt n)` support nodes and `k = max(5, floor(0.2 m))` decoys
/// placed uniformly at random. Support-decoy entries are `beta1`, support-rest
/// entries `beta2`, everything else zero.
pub fn generate_bstar_adversarial<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<AdversarialPerturbation> {
    if n < 100 {
        return Err(Error::InvalidArgument(format!(
            "adversarial construction needs n >= 100, got {n}"
        )));
    }
    let nf = n as f64;
    let m = (2.0 * nf.sqrt()).floor() as usize;
    let k = 5usize.max((0.2 * m as f64).floor() as usize);
    let beta1 = 2.5 * (nf * nf.ln()).powf(0.25) / (m as f64).sqrt();
    let beta2 = 2.0 * nf.powf(-0.25) * nf.ln().powf(0.25);
    let chosen = rand::seq::index::sample(rng, n, m + k).into_vec();
    let mut support = chosen[..m].to_vec();
    let mut decoys = chosen[m..].to_vec();
    support.sort_unstable();
    decoys.sort_unstable();
    let mut role = vec![0u8; n];
    for &i in &support {
        role[i] = 1;
    }
    for &j in &decoys {
        role[j] = 2;
    }
    let mut b = Matrix::zeros(n, n);
    for &i in &support {
        for j in 0..n {
            let v = match role[j] {
                2 => beta1,
                0 => beta2,
                _ => 0.0,
            };
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    Ok(AdversarialPerturbation {
        perturbation: Perturbation {
            matrix: SymmetricMatrix::from_upper(b),
            support,
            degenerate: false,
        },
        decoys,
        beta1,
        beta2,
    })
}

/// Noise families for the symmetric noise matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseFamily {
    GaussianIid,
    /// Entry standard deviations drawn from `Unif[sigma_min, sigma_max]`.
    GaussianEntryHetero,
    /// Node scales `s_i ~ Unif[sigma_min, sigma_max]`; entry `(i, j)` has
    /// standard deviation `(s_i^2 + s_j^2) / 2`.
    GaussianRowHetero,
    /// Student t with 4 degrees of freedom rescaled to variance `sigma^2`.
    ScaledT4,
    /// `Unif[-sigma sqrt 3, sigma sqrt 3]`.
    Uniform,
}

impl NoiseFamily {
    pub const ALL: [NoiseFamily; 5] = [
        NoiseFamily::GaussianIid,
        NoiseFamily::GaussianEntryHetero,
        NoiseFamily::GaussianRowHetero,
        NoiseFamily::ScaledT4,
        NoiseFamily::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseFamily::GaussianIid => "gaussian-iid",
            NoiseFamily::GaussianEntryHetero => "gaussian-entry-hetero",
            NoiseFamily::GaussianRowHetero => "gaussian-row-hetero",
            NoiseFamily::ScaledT4 => "scaled-t4",
            NoiseFamily::Uniform => "uniform",
        }
    }

    fn heteroscedastic(self) -> bool {
        matches!(self, NoiseFamily::GaussianEntryHetero | NoiseFamily::GaussianRowHetero)
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        NoiseFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownNoiseFamily(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub sigma: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Entries are clipped to `[-L, L]` when set.
    pub truncation: Option<f64>,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, sigma: f64) -> Self {
        Self {
            family,
            sigma,
            sigma_min: sigma,
            sigma_max: sigma,
            truncation: None,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self::new(NoiseFamily::GaussianIid, sigma)
    }

    pub fn heteroscedastic(family: NoiseFamily, sigma_min: f64, sigma_max: f64) -> Self {
        Self {
            family,
            sigma: 0.5 * (sigma_min + sigma_max),
            sigma_min,
            sigma_max,
            truncation: None,
        }
    }

    pub fn with_truncation(mut self, bound: f64) -> Self {
        self.truncation = Some(bound);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.sigma, self.sigma_min, self.sigma_max].iter().all(|v| v.is_finite());
        if !finite || self.sigma < 0.0 {
            return Err(Error::InvalidNoise(format!("sigma = {} must be finite and >= 0", self.sigma)));
        }
        if self.family.heteroscedastic()
            && !(0.0 < self.sigma_min && self.sigma_min <= self.sigma && self.sigma <= self.sigma_max)
        {
            return Err(Error::InvalidNoise(format!(
                "need 0 < sigma_min <= sigma <= sigma_max, got {} / {} / {}",
                self.sigma_min, self.sigma, self.sigma_max
            )));
        }
        if let Some(l) = self.truncation {
            if !(l > 0.0) {
                return Err(Error::InvalidNoise(format!("truncation bound {l} must be positive")));
            }
        }
        Ok(())
    }
}

/// Symmetric noise with independent upper-triangle entries (diagonal included).
///
/// Entries are drawn column by column over `i <= j` and mirrored.
pub fn sample_noise<R: Rng + ?Sized>(n: usize, spec: &NoiseSpec, rng: &mut R) -> Result<SymmetricMatrix> {
    spec.validate()?;
    let mut w = Matrix::zeros(n, n);
    if spec.sigma == 0.0 && !spec.family.heteroscedastic() {
        return Ok(SymmetricMatrix(w));
    }
    let s = spec.sigma;
    match spec.family {
        NoiseFamily::GaussianIid => fill_upper(&mut w, |_, _| s * rng.sample::<f64, _>(StandardNormal)),
        NoiseFamily::GaussianEntryHetero => {
            let (lo, hi) = (spec.sigma_min, spec.sigma_max);
            fill_upper(&mut w, |_, _| {
                let sd = if lo < hi { rng.random_range(lo..=hi) } else { lo };
                sd * rng.sample::<f64, _>(StandardNormal)
            })
        }
        NoiseFamily::GaussianRowHetero => {
            let (lo, hi) = (spec.sigma_min, spec.sigma_max);
            let node: Vec<f64> = (0..n)
                .map(|_| if lo < hi { rng.random_range(lo..=hi) } else { lo })
                .collect();
            fill_upper(&mut w, |i, j| {
                let sd = 0.5 * (node[i] * node[i] + node[j] * node[j]);
                sd * rng.sample::<f64, _>(StandardNormal)
            })
        }
        NoiseFamily::ScaledT4 => {
            let t = StudentT::new(4.0).expect("valid dof");
            let c = s / 2f64.sqrt();
            fill_upper(&mut w, |_, _| c * t.sample(rng))
        }
        NoiseFamily::Uniform => {
            let a = s * 3f64.sqrt();
            fill_upper(&mut w, |_, _| rng.random_range(-a..=a))
        }
    }
    if let Some(l) = spec.truncation {
        w.apply(|v| *v = v.clamp(-l, l));
    }
    Ok(SymmetricMatrix(w))
}

fn fill_upper(w: &mut Matrix, mut draw: impl FnMut(usize, usize) -> f64) {
    let n = w.nrows();
    for j in 0..n {
        for i in 0..=j {
            let v = draw(i, j);
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
}

/// How treatment subjects map to planted perturbations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assignment {
    /// Subject `j` receives perturbation `j`.
    PerSubject,
    /// Every subject receives the single planted perturbation.
    Shared,
}

#[derive(Clone, Debug)]
pub struct ObservationSet {
    pub n: usize,
    pub g0: Vec<SymmetricMatrix>,
    pub g1: Vec<SymmetricMatrix>,
    pub truth: Option<Arc<GroundTruth>>,
}

impl ObservationSet {
    pub fn new(g0: Vec<SymmetricMatrix>, g1: Vec<SymmetricMatrix>) -> Result<Self> {
        let n = g0
            .first()
            .map(|m| m.n())
            .ok_or_else(|| Error::InvalidArgument("control group is empty".into()))?;
        for m in g0.iter().chain(&g1) {
            if m.n() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.n() });
            }
        }
        Ok(Self { n, g0, g1, truth: None })
    }
}

/// Draws `Y0_i = M* + W0_i` and `Y1_j = M* + B*_j + W1_j` with fresh noise
/// for every matrix (control group first).
pub fn assemble_observations<R: Rng + ?Sized>(
    truth: Arc<GroundTruth>,
    spec: &NoiseSpec,
    n0: usize,
    n1: usize,
    assignment: Assignment,
    rng: &mut R,
) -> Result<ObservationSet> {
    if n0 == 0 {
        return Err(Error::InvalidArgument("control group needs at least one matrix".into()));
    }
    let k = truth.perturbations().len();
    match assignment {
        Assignment::PerSubject if n1 != k => {
            return Err(Error::DimensionMismatch { expected: k, got: n1 })
        }
        Assignment::Shared if k != 1 => {
            return Err(Error::DimensionMismatch { expected: 1, got: k })
        }
        _ => {}
    }
    let n = truth.n();
    let mstar = truth.mstar();
    let mut g0 = Vec::with_capacity(n0);
    for _ in 0..n0 {
        let w = sample_noise(n, spec, rng)?;
        g0.push(SymmetricMatrix(mstar.as_matrix() + w.as_matrix()));
    }
    let mut g1 = Vec::with_capacity(n1);
    for j in 0..n1 {
        let b = match assignment {
            Assignment::PerSubject => &truth.perturbations()[j].matrix,
            Assignment::Shared => &truth.perturbations()[0].matrix,
        };
        let w = sample_noise(n, spec, rng)?;
        g1.push(SymmetricMatrix(mstar.as_matrix() + b.as_matrix() + w.as_matrix()));
    }
    Ok(ObservationSet {
        n,
        g0,
        g1,
        truth: Some(truth),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSupport {
    /// Sorted support indices.
    pub indices: Vec<usize>,
    /// False when some support node has at most `|I|` nonzero entries, in
    /// which case the support is not uniquely determined.
    pub identifiable: bool,
}

/// Default support tolerance: `1e-12 * max |B|`.
pub fn default_support_tol(b: &Matrix) -> f64 {
    1e-12 * linalg::max_abs(b)
}

/// Smallest (greedy) node set `I` such that `B` vanishes on `I^c x I^c`.
pub fn node_support(b: &SymmetricMatrix, tol: f64) -> NodeSupport {
    let n = b.n();
    let nz = |i: usize, j: usize| b[(i, j)].abs() > tol;
    let counts: Vec<usize> = (0..n).map(|i| (0..n).filter(|&j| nz(i, j)).count()).collect();
    let mut order: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
    order.sort_by(|&a, &c| counts[c].cmp(&counts[a]).then(a.cmp(&c)));
    let mut chosen = vec![false; n];
    let mut picked = Vec::new();
    // A prefix covers everything once no nonzero entry has both ends unchosen.
    let covered = |chosen: &[bool]| {
        (0..n).all(|i| chosen[i] || (i..n).all(|j| chosen[j] || !nz(i, j)))
    };
    if !covered(&chosen) {
        for &i in &order {
            chosen[i] = true;
            picked.push(i);
            if covered(&chosen) {
                break;
            }
        }
    }
    picked.sort_unstable();
    let size = picked.len();
    let identifiable = picked.iter().all(|&i| counts[i] > size);
    NodeSupport {
        indices: picked,
        identifiable,
    }
}

/// Reads the text format: first line `n`, then `n` rows of `n` floats.
pub fn read_matrix(path: &Path) -> Result<SymmetricMatrix> {
    let text = fs::read_to_string(path)?;
    parse_matrix(&text, path)
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<SymmetricMatrix> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing dimension line".into()))?;
    let n: usize = header
        .trim()
        .parse()
        .map_err(|_| parse_err(hl + 1, format!("expected dimension, found `{}`", header.trim())))?;
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(hl + 2 + i, format!("expected {n} rows, found {i}")))?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != n {
            return Err(parse_err(ln + 1, format!("expected {n} values, found {}", vals.len())));
        }
        for (j, tok) in vals.iter().enumerate() {
            m[(i, j)] = tok
                .parse()
                .map_err(|_| parse_err(ln + 1, format!("invalid number `{tok}`")))?;
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln + 1, "trailing data after matrix".into()));
    }
    SymmetricMatrix::new(m)
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = format!("{}\n", m.nrows());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    fs::write(path, format_matrix(m))?;
    Ok(())
}
