//! Dense complex SDP solver for `min tr(CV)` over Hermitian PSD `V` with box
//! constraints on the diagonal, plus Gaussian randomization.
//!
//! The solver is ADMM on the splitting `V = Z`, `V ⪰ 0`, `Z` in the diagonal
//! box. It works directly on Hermitian matrices; the PSD projection is one
//! eigendecomposition per iteration.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::linalg::{complex_normal_vec, hermitian_defect, hermitian_eigen, trace_product, CMat, CVec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub cost: CMat,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SdpProblem {
    pub fn new(cost: CMat, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = cost.nrows();
        if n == 0 || cost.ncols() != n || lower.len() != n || upper.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "SDP cost {}x{} with {} lower and {} upper bounds",
                cost.nrows(),
                cost.ncols(),
                lower.len(),
                upper.len()
            )));
        }
        let scale = cost.norm().max(1.0);
        if hermitian_defect(&cost) > 1e-12 * scale {
            return Err(Error::InvalidConfig("SDP cost must be Hermitian".into()));
        }
        if lower.iter().zip(&upper).any(|(lo, hi)| !(lo <= hi) || *hi < 0.0) {
            return Err(Error::InvalidConfig("SDP diagonal bounds must satisfy lo <= hi, hi >= 0".into()));
        }
        Ok(Self { cost, lower, upper })
    }

    /// Diagonal in `[0, 1]` except the listed entries, which are fixed at 1.
    pub fn unit_box(cost: CMat, pinned: &[usize]) -> Result<Self> {
        let n = cost.nrows();
        let mut lower = vec![0.0; n];
        for &i in pinned {
            if i >= n {
                return Err(Error::DimensionMismatch(format!("pinned index {i} out of {n}")));
            }
            lower[i] = 1.0;
        }
        Self::new(cost, lower, vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.cost.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub rho: f64,
    /// Over-relaxation factor in `(0, 2)`.
    pub alpha: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
            rho: 1.0,
            alpha: 1.0,
        }
    }
}

/// ADMM iterates that can seed a later solve of a similar problem.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub z: CMat,
    pub u: CMat,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub v: CMat,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    pub state: AdmmState,
}

fn project_psd(a: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(a);
    let n = vals.len();
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.0).collect();
    if keep.is_empty() {
        return CMat::zeros(n, n);
    }
    let mut scaled = CMat::zeros(n, keep.len());
    let mut plain = CMat::zeros(n, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        let col = vecs.column(i);
        plain.set_column(j, &col);
        scaled.set_column(j, &(col * Complex64::from(vals[i])));
    }
    let out = scaled * plain.adjoint();
    (&out + out.adjoint()).scale(0.5)
}

fn project_box(a: &mut CMat, lower: &[f64], upper: &[f64]) {
    for i in 0..a.nrows() {
        a[(i, i)] = Complex64::new(a[(i, i)].re.clamp(lower[i], upper[i]), 0.0);
    }
}

const MAX_RHO_CHANGES: usize = 30;
const RHO_CHECK_EVERY: usize = 5;

/// Runs ADMM and reports the final iterate whether or not it converged.
pub fn sdp_admm(problem: &SdpProblem, settings: &SdpSettings, warm: Option<&AdmmState>) -> SdpSolution {
    let n = problem.dim();
    let c_norm = problem.cost.norm();
    let c = if c_norm > 0.0 {
        problem.cost.clone() / Complex64::from(c_norm)
    } else {
        problem.cost.clone()
    };
    let (mut z, mut u, mut rho) = match warm {
        Some(s) if s.z.nrows() == n => (s.z.clone(), s.u.clone(), s.rho),
        _ => {
            let mut z = CMat::identity(n, n);
            project_box(&mut z, &problem.lower, &problem.upper);
            (z, CMat::zeros(n, n), settings.rho)
        }
    };
    let scale = (n as f64).sqrt();
    let mut v = z.clone();
    let (mut r, mut s) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;
    let mut rho_changes = 0;
    while iterations < settings.max_iter {
        iterations += 1;
        v = project_psd(&(&z - &u - &c / Complex64::from(rho)));
        let z_prev = z;
        let relaxed = v.scale(settings.alpha) + z_prev.scale(1.0 - settings.alpha);
        z = &relaxed + &u;
        project_box(&mut z, &problem.lower, &problem.upper);
        u += &relaxed - &z;
        r = (&v - &z).norm();
        s = rho * (&z - &z_prev).norm();
        let eps_pri = settings.tol * (scale + v.norm().max(z.norm()));
        let eps_dual = settings.tol * (scale + rho * u.norm());
        if r <= eps_pri && s <= eps_dual {
            converged = true;
            break;
        }
        // Unbounded rebalancing can cycle; a fixed ρ afterwards keeps the
        // usual ADMM convergence guarantee.
        if rho_changes < MAX_RHO_CHANGES && iterations % RHO_CHECK_EVERY == 0 {
            if r > 10.0 * s {
                rho *= 2.0;
                u /= Complex64::from(2.0);
                rho_changes += 1;
            } else if s > 10.0 * r {
                rho /= 2.0;
                u *= Complex64::from(2.0);
                rho_changes += 1;
            }
        }
    }
    let objective = trace_product(&problem.cost, &v).re;
    SdpSolution {
        v,
        objective,
        iterations,
        primal_residual: r,
        dual_residual: s,
        converged,
        state: AdmmState { z, u, rho },
    }
}

/// Solves the SDP, failing when the residuals stay above tolerance.
pub fn sdp_solve(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution> {
    sdp_solve_warm(problem, settings, None)
}

pub fn sdp_solve_warm(problem: &SdpProblem, settings: &SdpSettings, warm: Option<&AdmmState>) -> Result<SdpSolution> {
    let sol = sdp_admm(problem, settings, warm);
    if sol.converged {
        Ok(sol)
    } else {
        Err(Error::SdpNotConverged {
            iterations: sol.iterations,
            primal: sol.primal_residual,
            dual: sol.dual_residual,
        })
    }
}

/// Square-root factor `L` with `V = L Lᴴ`, dropping negative eigenvalues.
pub fn psd_factor(v: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(v);
    let mut l = vecs;
    for (j, mut col) in l.column_iter_mut().enumerate() {
        col *= Complex64::from(vals[j].max(0.0).sqrt());
    }
    l
}

/// `√λ_max q_max`, the best rank-one approximation's factor.
pub fn leading_eigenvector(v: &CMat) -> CVec {
    let (vals, vecs) = hermitian_eigen(v);
    let last = vals.len() - 1;
    vecs.column(last) * Complex64::from(vals[last].max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Randomized {
    pub vector: CVec,
    pub objective: f64,
    /// Index of the winning draw.
    pub index: usize,
}

/// Draws `count` samples from CN(0, V), projects each and keeps the one with
/// the smallest objective. Earlier draws win ties.
pub fn gaussian_randomize<R, P, F>(v: &CMat, count: usize, mut project: P, mut objective: F, rng: &mut R) -> Randomized
where
    R: Rng + ?Sized,
    P: FnMut(&CVec) -> CVec,
    F: FnMut(&CVec) -> f64,
{
    assert!(count >= 1, "at least one randomization is needed");
    let l = psd_factor(v);
    let mut best: Option<Randomized> = None;
    for index in 0..count {
        let xi = &l * complex_normal_vec(rng, l.ncols());
        let cand = project(&xi);
        let obj = objective(&cand);
        if best.as_ref().is_none_or(|b| obj < b.objective) {
            best = Some(Randomized {
                vector: cand,
                objective: obj,
                index,
            });
        }
    }
    best.expect("count >= 1")
}

/// Real symmetric embedding `[[Re A, −Im A], [Im A, Re A]]`.
pub fn embed_real(a: &CMat) -> nalgebra::DMatrix<f64> {
    let n = a.nrows();
    let mut r = nalgebra::DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            r[(i, j)] = z.re;
            r[(i + n, j + n)] = z.re;
            r[(i, j + n)] = -z.im;
            r[(i + n, j)] = z.im;
        }
    }
    r
}

/// Inverse of [`embed_real`] for matrices with the embedded block structure.
pub fn lift_complex(r: &nalgebra::DMatrix<f64>) -> CMat {
    let n = r.nrows() / 2;
    CMat::from_fn(n, n, |i, j| {
        Complex64::new(
            0.5 * (r[(i, j)] + r[(i + n, j + n)]),
            0.5 * (r[(i + n, j)] - r[(i, j + n)]),
        )
    })
}

/// Smallest eigenvalue, used by invariant checks.
pub fn min_eigenvalue(v: &CMat) -> f64 {
    let (vals, _): (DVector<f64>, _) = hermitian_eigen(v);
    vals[0]
}
