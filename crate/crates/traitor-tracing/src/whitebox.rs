//! White-box tracing over synthetic weight vectors.
//!
//! Each user's copy of the model carries a fingerprint in weight space: a
//! secret normal matrix `D` maps weights into a `p_dim`-dimensional space
//! where user `j` owns one vector of an orthonormal basis. Embedding pushes
//! the user's weights so their projection onto their own basis vector is
//! high; averaging `c` colluders' weights dilutes each projection towards
//! `1/sqrt(c)` while innocents stay near zero, so thresholding the
//! projections identifies all colluders at once when the weights are
//! readable.
//!
//! Training-time embedding is replaced by a closed-form surrogate
//! `w_j = w0 + (beta/l) D s_j + noise`, with `beta` tuned by doubling
//! search. Because `D^T D` only approximates `l I`, the own-projection has
//! a hard ceiling of about `1/sqrt(1 + (p_dim+1)/l)` — keep `l` well above
//! `p_dim` or tuning will (correctly) report failure.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write as IoWrite};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::{purpose, substream};

pub const WHITEBOX_FORMAT_VERSION: u32 = 1;

/// Default minimum own-projection the embedding must reach.
pub const DEFAULT_EMBED_TARGET: f64 = 0.95;

/// Default noise scale (about 5% of the unit RMS of the standard-normal
/// base vector), modeling imperfect convergence.
pub const DEFAULT_NOISE_SIGMA: f64 = 0.05;

/// Shape and embedding knobs for a white-box ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiteboxParams {
    /// Weight-vector length.
    pub l: usize,
    /// Projection-space dimension; needs one basis vector per user and
    /// `l` comfortably larger (see the module ceiling note).
    pub p_dim: usize,
    pub n_users: usize,
    /// Starting embedding strength for the doubling search.
    pub embed_strength: f64,
    /// Own-projection every user must reach after embedding.
    pub embed_target: f64,
    /// Scale of the additive normal noise on each user's weights.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl WhiteboxParams {
    pub fn new(l: usize, p_dim: usize, n_users: usize, seed: u64) -> Result<Self> {
        let params = WhiteboxParams {
            l,
            p_dim,
            n_users,
            embed_strength: 1.0,
            embed_target: DEFAULT_EMBED_TARGET,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_noise_sigma(mut self, noise_sigma: f64) -> Result<Self> {
        self.noise_sigma = noise_sigma;
        self.validate()?;
        Ok(self)
    }

    pub fn with_embed_target(mut self, embed_target: f64) -> Result<Self> {
        self.embed_target = embed_target;
        self.validate()?;
        Ok(self)
    }

    pub fn with_embed_strength(mut self, embed_strength: f64) -> Result<Self> {
        self.embed_strength = embed_strength;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users < 1 {
            return Err(Error::domain("need at least one user".to_string()));
        }
        if self.p_dim < self.n_users {
            return Err(Error::domain(format!(
                "basis dimension {} cannot supply one vector per user for {} users",
                self.p_dim, self.n_users
            )));
        }
        if self.l < self.p_dim {
            return Err(Error::domain(format!(
                "weight length {} must be at least the basis dimension {}",
                self.l, self.p_dim
            )));
        }
        if !self.embed_strength.is_finite() || self.embed_strength <= 0.0 {
            return Err(Error::domain(format!(
                "embed_strength must be positive, got {}",
                self.embed_strength
            )));
        }
        if !self.embed_target.is_finite() || !(0.0 < self.embed_target && self.embed_target < 1.0) {
            return Err(Error::domain(format!(
                "embed_target must lie in (0, 1), got {}",
                self.embed_target
            )));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::domain(format!(
                "noise_sigma must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Everything the owner holds: the secret matrix, the user basis, the base
/// weights, and the per-user embedded weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteboxEnsemble {
    pub params: WhiteboxParams,
    /// `l x p_dim`, row-major by weight coordinate.
    d: Vec<f64>,
    /// `p_dim x p_dim`, row `j` is basis vector `s_j`.
    basis: Vec<f64>,
    w0: Vec<f64>,
    /// `n_users x l`, row `j` is user `j`'s weights.
    user_weights: Vec<f64>,
    /// Embedding strength the tuning settled on.
    beta: f64,
}

impl WhiteboxEnsemble {
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Basis vector of user (or basis index) `j`.
    pub fn s(&self, j: usize) -> &[f64] {
        &self.basis[j * self.params.p_dim..(j + 1) * self.params.p_dim]
    }

    pub fn w0(&self) -> &[f64] {
        &self.w0
    }

    pub fn weights(&self, user: usize) -> &[f64] {
        &self.user_weights[user * self.params.l..(user + 1) * self.params.l]
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Projection of an arbitrary weight vector onto user `j`'s basis
    /// vector.
    pub fn project(&self, w: &[f64], user: usize) -> Result<f64> {
        projection(w, &self.d, self.s(user))
    }

    /// Projections of one suspect onto every user's basis vector (the
    /// secret-space image is computed once).
    pub fn project_all(&self, w: &[f64]) -> Result<Vec<f64>> {
        let u = secret_image(w, &self.d, self.params.l, self.params.p_dim)?;
        let nu = norm(&u);
        if nu <= f64::MIN_POSITIVE {
            return Err(Error::DegenerateProjection(
                "suspect weights vanish in the secret space".to_string(),
            ));
        }
        Ok((0..self.params.n_users)
            .map(|j| dot(&u, self.s(j)) / nu)
            .collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Root mean square of a vector's entries.
pub fn rms(w: &[f64]) -> f64 {
    if w.is_empty() {
        0.0
    } else {
        (dot(w, w) / w.len() as f64).sqrt()
    }
}

/// `D^T w`: the weight vector's image in the secret projection space.
fn secret_image(w: &[f64], d: &[f64], l: usize, p_dim: usize) -> Result<Vec<f64>> {
    if w.len() != l || d.len() != l * p_dim {
        return Err(Error::domain(format!(
            "dimension mismatch: |w|={}, |D|={}, expected l={l}, l*p={}",
            w.len(),
            d.len(),
            l * p_dim
        )));
    }
    let mut u = vec![0.0; p_dim];
    for (i, &wi) in w.iter().enumerate() {
        let row = &d[i * p_dim..(i + 1) * p_dim];
        for (uk, &dk) in u.iter_mut().zip(row) {
            *uk += wi * dk;
        }
    }
    Ok(u)
}

/// `D g`: map a projection-space vector back to weight space.
fn from_secret(g: &[f64], d: &[f64], l: usize, p_dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; l];
    for (i, vi) in v.iter_mut().enumerate() {
        *vi = dot(&d[i * p_dim..(i + 1) * p_dim], g);
    }
    v
}

fn infer_dims(w: &[f64], d: &[f64], s: &[f64]) -> Result<(usize, usize)> {
    let l = w.len();
    let p_dim = s.len();
    if l == 0 || p_dim == 0 || d.len() != l * p_dim {
        return Err(Error::domain(format!(
            "dimension mismatch: |w|={l}, |s|={p_dim}, |D|={}",
            d.len()
        )));
    }
    Ok((l, p_dim))
}

/// Generate `p_dim` mutually orthonormal vectors (row-major `p_dim x
/// p_dim`) by Gram-Schmidt over random normal draws, with a second
/// orthogonalization pass for 1e-9-grade orthogonality at dimension 1000.
pub fn generate_basis<R: Rng + ?Sized>(p_dim: usize, rng: &mut R) -> Result<Vec<f64>> {
    if p_dim < 1 {
        return Err(Error::domain(
            "basis dimension must be at least 1".to_string(),
        ));
    }
    let mut basis = vec![0.0f64; p_dim * p_dim];
    let floor = 1e-8 * (p_dim as f64).sqrt();
    for j in 0..p_dim {
        let mut accepted = false;
        for _attempt in 0..100 {
            let mut v: Vec<f64> = (0..p_dim).map(|_| StandardNormal.sample(rng)).collect();
            for _pass in 0..2 {
                for k in 0..j {
                    let s_k = &basis[k * p_dim..(k + 1) * p_dim];
                    let proj = dot(&v, s_k);
                    for (vi, &si) in v.iter_mut().zip(s_k) {
                        *vi -= proj * si;
                    }
                }
            }
            let n = norm(&v);
            if n > floor {
                for (slot, &vi) in basis[j * p_dim..(j + 1) * p_dim].iter_mut().zip(&v) {
                    *slot = vi / n;
                }
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::DegenerateProjection(format!(
                "basis vector {j} stayed linearly dependent after 100 attempts"
            )));
        }
    }
    Ok(basis)
}

/// Normalized projection of weights onto one basis vector through the
/// secret matrix: `r = (w^T D s) / ||w^T D||`, in `[-1, 1]` and invariant
/// under positive scaling of `w`.
pub fn projection(w: &[f64], d: &[f64], s: &[f64]) -> Result<f64> {
    let (l, p_dim) = infer_dims(w, d, s)?;
    let u = secret_image(w, d, l, p_dim)?;
    let nu = norm(&u);
    if nu <= f64::MIN_POSITIVE {
        return Err(Error::DegenerateProjection(
            "weights vanish in the secret space (||w^T D|| = 0)".to_string(),
        ));
    }
    Ok(dot(&u, s) / nu)
}

/// Embedding regularizer `exp(-r)` for one user's basis vector, with its
/// analytic gradient with respect to the weights. Minimizing it pulls the
/// projection `r` towards 1.
pub fn regularizer(w: &[f64], d: &[f64], s: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (l, p_dim) = infer_dims(w, d, s)?;
    let u = secret_image(w, d, l, p_dim)?;
    let nu = norm(&u);
    if nu <= f64::MIN_POSITIVE {
        return Err(Error::DegenerateProjection(
            "weights vanish in the secret space (||w^T D|| = 0)".to_string(),
        ));
    }
    let us = dot(&u, s);
    let e = (-us / nu).exp();
    // dr/du = s/||u|| - (u.s) u/||u||^3, pulled back through D.
    let nu3 = nu * nu * nu;
    let g: Vec<f64> = (0..p_dim).map(|k| s[k] / nu - us * u[k] / nu3).collect();
    let mut grad = from_secret(&g, d, l, p_dim);
    for gi in grad.iter_mut() {
        *gi *= -e;
    }
    Ok((e, grad))
}

/// Build a full ensemble: secret matrix, basis, base weights, and per-user
/// embedded weights `w_j = w0 + (beta/l) D s_j + noise_sigma * xi_j`. The
/// embedding strength starts at `params.embed_strength` and doubles until
/// every user's own projection reaches `params.embed_target` (tuning
/// failure after 100 doublings — in particular when the target exceeds the
/// `1/sqrt(1 + (p_dim+1)/l)` ceiling).
pub fn embed_users(params: &WhiteboxParams) -> Result<WhiteboxEnsemble> {
    params.validate()?;
    let (l, p_dim, n) = (params.l, params.p_dim, params.n_users);

    let mut d_rng = substream(params.seed, &[purpose::WHITEBOX_SECRET]);
    let d: Vec<f64> = (0..l * p_dim)
        .map(|_| StandardNormal.sample(&mut d_rng))
        .collect();

    let mut basis_rng = substream(params.seed, &[purpose::WHITEBOX_BASIS]);
    let basis = generate_basis(p_dim, &mut basis_rng)?;

    let mut w_rng = substream(params.seed, &[purpose::WHITEBOX_WEIGHTS]);
    let w0: Vec<f64> = (0..l).map(|_| StandardNormal.sample(&mut w_rng)).collect();
    let noise: Vec<f64> = (0..n * l)
        .map(|_| StandardNormal.sample(&mut w_rng))
        .collect();

    // Pull every ingredient into the p_dim-dimensional secret space once;
    // then each candidate strength is a cheap linear combination there:
    // D^T w_j = u0 + (beta/l) b_j + sigma e_j  with  a_j = D s_j,
    // b_j = D^T a_j, e_j = D^T xi_j.
    let u0 = secret_image(&w0, &d, l, p_dim)?;
    let s_of = |j: usize| &basis[j * p_dim..(j + 1) * p_dim];
    let mut aligned = Vec::with_capacity(n); // a_j
    let mut b = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    for j in 0..n {
        let a_j = from_secret(s_of(j), &d, l, p_dim);
        b.push(secret_image(&a_j, &d, l, p_dim)?);
        if params.noise_sigma > 0.0 {
            e.push(secret_image(&noise[j * l..(j + 1) * l], &d, l, p_dim)?);
        }
        aligned.push(a_j);
    }

    let min_r_at = |beta: f64| -> f64 {
        let mut min_r = f64::INFINITY;
        for j in 0..n {
            let mut u = vec![0.0; p_dim];
            for k in 0..p_dim {
                u[k] = u0[k]
                    + (beta / l as f64) * b[j][k]
                    + if params.noise_sigma > 0.0 {
                        params.noise_sigma * e[j][k]
                    } else {
                        0.0
                    };
            }
            let r = dot(&u, s_of(j)) / norm(&u);
            min_r = min_r.min(r);
        }
        min_r
    };

    let mut beta = params.embed_strength;
    let mut reached = min_r_at(beta);
    let mut doublings = 0;
    while reached < params.embed_target {
        doublings += 1;
        if doublings > 100 {
            return Err(Error::TuningFailure(format!(
                "embedding strength search stalled at min projection {reached:.4} \
                 (target {}); the achievable ceiling is about 1/sqrt(1+(p_dim+1)/l) = {:.4}",
                params.embed_target,
                1.0 / (1.0 + (p_dim as f64 + 1.0) / l as f64).sqrt()
            )));
        }
        beta *= 2.0;
        reached = min_r_at(beta);
    }

    let mut user_weights = vec![0.0; n * l];
    for j in 0..n {
        let row = &mut user_weights[j * l..(j + 1) * l];
        let scale = beta / l as f64;
        for i in 0..l {
            row[i] = w0[i] + scale * aligned[j][i] + params.noise_sigma * noise[j * l + i];
        }
    }

    Ok(WhiteboxEnsemble {
        params: *params,
        d,
        basis,
        w0,
        user_weights,
        beta,
    })
}

/// Weight-space collusion: the arithmetic mean of the colluders' weights.
pub fn collude_average(ensemble: &WhiteboxEnsemble, colluders: &[usize]) -> Result<Vec<f64>> {
    if colluders.is_empty() {
        return Err(Error::domain("colluder set must be non-empty".to_string()));
    }
    if let Some(&bad) = colluders.iter().find(|&&j| j >= ensemble.params.n_users) {
        return Err(Error::index(format!(
            "colluder index {bad} beyond ensemble with {} users",
            ensemble.params.n_users
        )));
    }
    let l = ensemble.params.l;
    let mut avg = vec![0.0; l];
    for &j in colluders {
        for (a, &w) in avg.iter_mut().zip(ensemble.weights(j)) {
            *a += w;
        }
    }
    let inv = 1.0 / colluders.len() as f64;
    for a in avg.iter_mut() {
        *a *= inv;
    }
    Ok(avg)
}

/// Fine-tuning proxy: add i.i.d. normal perturbation of scale
/// `sigma_ft * RMS(w)`.
pub fn attack_finetune<R: Rng + ?Sized>(w: &[f64], sigma_ft: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !sigma_ft.is_finite() || sigma_ft < 0.0 {
        return Err(Error::domain(format!(
            "sigma_ft must be nonnegative, got {sigma_ft}"
        )));
    }
    if sigma_ft == 0.0 {
        return Ok(w.to_vec());
    }
    let scale = sigma_ft * rms(w);
    Ok(w.iter()
        .map(|&wi| {
            let xi: f64 = StandardNormal.sample(rng);
            wi + scale * xi
        })
        .collect())
}

/// Which coordinates pruning removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PruneMode {
    /// Zero the smallest-magnitude fraction (standard magnitude pruning).
    SmallestMagnitude,
    /// Zero a uniformly random fraction.
    Random,
}

/// Pruning proxy: zero `fraction` of the coordinates.
pub fn attack_prune<R: Rng + ?Sized>(
    w: &[f64],
    fraction: f64,
    mode: PruneMode,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !fraction.is_finite() || !(0.0..1.0).contains(&fraction) {
        return Err(Error::domain(format!(
            "prune fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let mut out = w.to_vec();
    let k = (fraction * w.len() as f64).round() as usize;
    if k == 0 {
        return Ok(out);
    }
    match mode {
        PruneMode::SmallestMagnitude => {
            let mut order: Vec<usize> = (0..w.len()).collect();
            order.sort_by(|&i, &j| {
                w[i].abs()
                    .partial_cmp(&w[j].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(i.cmp(&j))
            });
            for &i in &order[..k] {
                out[i] = 0.0;
            }
        }
        PruneMode::Random => {
            for i in rand::seq::index::sample(rng, w.len(), k) {
                out[i] = 0.0;
            }
        }
    }
    Ok(out)
}

/// All users whose projection of the suspect weights exceeds `threshold`,
/// sorted by descending projection.
pub fn accuse_whitebox(
    ensemble: &WhiteboxEnsemble,
    suspect_w: &[f64],
    threshold: f64,
) -> Result<Vec<(usize, f64)>> {
    let r = ensemble.project_all(suspect_w)?;
    let mut accused: Vec<(usize, f64)> = r
        .into_iter()
        .enumerate()
        .filter(|&(_, r_j)| r_j > threshold)
        .collect();
    accused.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    Ok(accused)
}

/// Default accusation threshold: midpoint between the ideal smallest
/// colluder projection `1/sqrt(c0)` and the `3/sqrt(p_dim)` band where
/// random-weight projections concentrate.
pub fn default_threshold(c0: usize, p_dim: usize) -> f64 {
    0.5 * (1.0 / (c0 as f64).sqrt() + 3.0 / (p_dim as f64).sqrt())
}

#[derive(Serialize, Deserialize)]
struct WhiteboxHeader {
    format_version: u32,
    params: WhiteboxParams,
    /// Tuned strength, informational: regeneration re-derives it.
    beta: f64,
}

/// Persist an ensemble as a small JSON header; the vectors regenerate
/// deterministically from the seed on load.
pub fn save_whitebox_header(ensemble: &WhiteboxEnsemble, path: impl AsRef<Path>) -> Result<()> {
    let header = WhiteboxHeader {
        format_version: WHITEBOX_FORMAT_VERSION,
        params: ensemble.params,
        beta: ensemble.beta,
    };
    let writer = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(writer, &header)?;
    Ok(())
}

/// Rebuild the full ensemble from a saved header.
pub fn load_whitebox(path: impl AsRef<Path>) -> Result<WhiteboxEnsemble> {
    let reader = BufReader::new(File::open(path)?);
    let header: WhiteboxHeader = serde_json::from_reader(reader)
        .map_err(|e| Error::malformed(format!("not a white-box header: {e}")))?;
    if header.format_version != WHITEBOX_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: header.format_version,
            expected: WHITEBOX_FORMAT_VERSION,
        });
    }
    embed_users(&header.params)
}

/// Debugging escape hatch: write the full matrices as CSV files
/// (`secret.csv`, `basis.csv`, `base_weights.csv`, `user_weights.csv`)
/// into a directory.
pub fn dump_vectors(ensemble: &WhiteboxEnsemble, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let write_matrix =
        |name: &str, rows: usize, cols: usize, data: &dyn Fn(usize) -> Vec<f64>| -> Result<()> {
            let mut w = BufWriter::new(File::create(dir.join(name))?);
            for r in 0..rows {
                let row = data(r);
                debug_assert_eq!(row.len(), cols);
                let line: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
                writeln!(w, "{}", line.join(","))?;
            }
            Ok(())
        };
    let p = ensemble.params.p_dim;
    let l = ensemble.params.l;
    write_matrix("secret.csv", l, p, &|i| {
        ensemble.d[i * p..(i + 1) * p].to_vec()
    })?;
    write_matrix("basis.csv", p, p, &|j| ensemble.s(j).to_vec())?;
    write_matrix("base_weights.csv", 1, l, &|_| ensemble.w0.clone())?;
    write_matrix("user_weights.csv", ensemble.params.n_users, l, &|j| {
        ensemble.weights(j).to_vec()
    })?;
    Ok(())
}
