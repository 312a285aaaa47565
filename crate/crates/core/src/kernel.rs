//! Per-momentum Bogoliubov kernel `K(k)` and `cosh(2K(k)) - 1`.
//!
//! For each `k` the patches in `I_k` are ordered with the plus half first
//! (ascending) followed by the antipode of each plus entry in the same order,
//! so the block matrices `D`, `W`, `W~` have the literal form
//! `diag(d, d)`, `diag(b, b)`, `[[0, b], [b, 0]]`.

pub mod identities;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::{FermiGeometry, ModelParams, Momentum3};
use crate::linalg::{self, recompose, sym_eigen};
use crate::patches::{pair_data, PatchLattice, PatchSet};

/// Coupling `g_k = V_k / (2 hbar kappa N |k|)`.
pub fn coupling(params: &ModelParams, k: Momentum3) -> f64 {
    params.vhat.value(k) / (2.0 * params.hbar * params.kappa * params.n as f64 * k.norm())
}

/// Kernel data for one interaction momentum `k`.
#[derive(Debug, Clone)]
pub struct KernelBundle {
    pub k: Momentum3,
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
    /// `lambda_{alpha,k} = |k_hat . omega_hat_alpha|` for the plus half.
    pub lambdas: Vec<f64>,
    /// `n_{alpha,k}^2` for the plus half (equal for the antipodes).
    pub counts: Vec<u64>,
    /// Patches of `I_k^+` dropped because they contain no pair; their antipodes go too.
    pub pruned: Vec<usize>,
    pub g: f64,
    pub e: DMatrix<f64>,
    pub s1: DMatrix<f64>,
    pub kmat: DMatrix<f64>,
    pub cosh2k_minus1: DMatrix<f64>,
}

/// `d`, `b` and the full block matrices for the given data.
pub fn small_matrices(lambdas: &[f64], counts: &[u64], g: f64) -> (DVector<f64>, DMatrix<f64>) {
    let d = DVector::from_column_slice(lambdas);
    let nvec = DVector::from_iterator(counts.len(), counts.iter().map(|&c| (c as f64).sqrt()));
    let b = &nvec * nvec.transpose() * g;
    (d, b)
}

fn blocks(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((n, n), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(b);
    m
}

impl KernelBundle {
    /// Builds the bundle from the plus-half data.
    pub fn from_parts(
        k: Momentum3,
        plus: Vec<usize>,
        minus: Vec<usize>,
        lambdas: Vec<f64>,
        counts: Vec<u64>,
        pruned: Vec<usize>,
        g: f64,
    ) -> Result<Self> {
        let n = lambdas.len();
        if counts.len() != n || plus.len() != n || minus.len() != n {
            return Err(Error::InvalidParameter("kernel data length mismatch".into()));
        }
        if n == 0 {
            let z = DMatrix::zeros(0, 0);
            return Ok(KernelBundle {
                k,
                plus,
                minus,
                lambdas,
                counts,
                pruned,
                g,
                e: z.clone(),
                s1: z.clone(),
                kmat: z.clone(),
                cosh2k_minus1: z,
            });
        }
        if g == 0.0 {
            let dd = DVector::from_iterator(2 * n, lambdas.iter().chain(lambdas.iter()).copied());
            let z = DMatrix::zeros(2 * n, 2 * n);
            return Ok(KernelBundle {
                k,
                plus,
                minus,
                lambdas,
                counts,
                pruned,
                g,
                e: DMatrix::from_diagonal(&dd),
                s1: DMatrix::identity(2 * n, 2 * n),
                kmat: z.clone(),
                cosh2k_minus1: z,
            });
        }
        let (d, b) = small_matrices(&lambdas, &counts, g);
        let dm = DMatrix::from_diagonal(&d);
        let x = blocks(&(&dm + &b), &(-&b));
        let y = blocks(&(&dm + &b), &b);
        let xh = linalg::spd_power(&x, 0.5)?;
        let e = linalg::spd_power(&(&xh * &y * &xh), 0.5)?;
        let s1 = &xh * linalg::spd_power(&e, -0.5)?;
        // |S1^T| = ((S1^T)^T S1^T)^{1/2} = (S1 S1^T)^{1/2}
        let kmat = linalg::spd_log(&(&s1 * s1.transpose()))? * 0.5;
        let ke = sym_eigen(&kmat);
        let cosh2k_minus1 = recompose(&ke.eigenvectors, &ke.eigenvalues.map(|t| 2.0 * t.sinh().powi(2)));
        Ok(KernelBundle { k, plus, minus, lambdas, counts, pruned, g, e, s1, kmat, cosh2k_minus1 })
    }

    pub fn size(&self) -> usize {
        2 * self.plus.len()
    }

    /// Position of `alpha` in the index list, and the position of its plus-half partner.
    pub fn position(&self, alpha: usize) -> Option<(usize, usize)> {
        if let Some(i) = self.plus.iter().position(|&a| a == alpha) {
            return Some((i, i));
        }
        self.minus.iter().position(|&a| a == alpha).map(|i| (self.plus.len() + i, i))
    }

    pub fn index_list(&self) -> Vec<usize> {
        self.plus.iter().chain(self.minus.iter()).copied().collect()
    }

    /// `(cosh 2K - 1)_{alpha,alpha}`.
    pub fn diag(&self, alpha: usize) -> Option<f64> {
        self.position(alpha).map(|(i, _)| self.cosh2k_minus1[(i, i)])
    }

    /// `Q_k(mu) = 2 g sum_beta n_beta^2 lambda_beta / (mu^2 + lambda_beta^2)`.
    pub fn q_finite(&self, mu: f64) -> f64 {
        let s: f64 = self
            .lambdas
            .iter()
            .zip(&self.counts)
            .map(|(&l, &c)| c as f64 * l / (mu * mu + l * l))
            .sum();
        2.0 * self.g * s
    }

    /// Matrices as text: one `name` header then row-major rows at 17 significant digits.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# k = {} index_list = {:?} g = {:.16e}", self.k, self.index_list(), self.g);
        for (name, m) in [("E", &self.e), ("S1", &self.s1), ("K", &self.kmat), ("cosh2K-1", &self.cosh2k_minus1)] {
            let _ = writeln!(s, "{name} {}x{}", m.nrows(), m.ncols());
            for i in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        }
        s
    }
}

/// Builds the bundle for `k` from the lattice.
pub fn build_kernel(
    k: Momentum3,
    ps: &PatchSet,
    lat: &PatchLattice,
    params: &ModelParams,
) -> Result<KernelBundle> {
    let pd = pair_data(ps, lat, k, params.belt());
    let kn = k.norm();
    let lambdas = pd.plus.iter().map(|&a| k.dot_f64(&ps.omega_hat(a)).abs() / kn).collect();
    KernelBundle::from_parts(k, pd.plus, pd.minus, lambdas, pd.counts, pd.pruned, coupling(params, k))
}

/// Bundles for every `k` in `Gamma^nor`.
pub fn build_all_kernels(
    geom: &FermiGeometry,
    ps: &PatchSet,
    lat: &PatchLattice,
    params: &ModelParams,
) -> Result<Vec<KernelBundle>> {
    use rayon::prelude::*;
    geom.gamma_nor()
        .par_iter()
        .map(|&k| build_kernel(k, ps, lat, params))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_semi_infinite, QuadratureSpec};

    fn closed_form(lambdas: &[f64], counts: &[u64], g: f64, i: usize) -> f64 {
        let l = lambdas[i];
        let n2 = counts[i] as f64;
        let f = |mu: f64| {
            let q: f64 = lambdas.iter().zip(counts).map(|(&b, &c)| c as f64 * b / (mu * mu + b * b)).sum();
            2.0 * g * n2 * (mu * mu - l * l) / (mu * mu + l * l).powi(2) / (1.0 + 2.0 * g * q)
        };
        let spec = QuadratureSpec::tight().with_abs_tol(1e-14 / l);
        let mut br = lambdas.to_vec();
        br.push(l);
        integrate_semi_infinite(f, &br, &spec).unwrap().value / std::f64::consts::PI
    }

    #[test]
    fn single_pair_matches_quadrature() {
        for &(l, n2, g) in &[(0.3, 4u64, 0.05), (0.9, 1, 1.0), (0.05, 10, 0.2)] {
            let kb = KernelBundle::from_parts(Momentum3::new(0, 0, 1), vec![0], vec![1], vec![l], vec![n2], vec![], g).unwrap();
            let want = closed_form(&[l], &[n2], g, 0);
            let got = kb.cosh2k_minus1[(0, 0)];
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1e-12), "{got} vs {want}");
            assert!((kb.cosh2k_minus1[(1, 1)] - got).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coupling_gives_zero_kernel() {
        let kb = KernelBundle::from_parts(
            Momentum3::new(1, 0, 0),
            vec![0, 1],
            vec![2, 3],
            vec![0.4, 0.7],
            vec![3, 5],
            vec![],
            0.0,
        )
        .unwrap();
        assert!(kb.kmat.abs().max() < 1e-13);
        assert!(kb.cosh2k_minus1.abs().max() < 1e-13);
    }

    #[test]
    fn multi_patch_diagonal_matches_closed_form() {
        let lambdas = [0.2, 0.45, 0.8, 0.95];
        let counts = [3u64, 7, 2, 11];
        let g = 0.03;
        let kb = KernelBundle::from_parts(Momentum3::new(0, 1, 1), vec![0, 1, 2, 3], vec![4, 5, 6, 7], lambdas.to_vec(), counts.to_vec(), vec![], g)
            .unwrap();
        for i in 0..4 {
            let want = closed_form(&lambdas, &counts, g, i);
            let got = kb.cosh2k_minus1[(i, i)];
            assert!((got - want).abs() <= 1e-10 * want.abs(), "{i}: {got} vs {want}");
            assert!((kb.cosh2k_minus1[(i + 4, i + 4)] - got).abs() <= 1e-12 * got.abs().max(1e-12));
        }
        let ev = sym_eigen(&kb.cosh2k_minus1).eigenvalues;
        assert!(ev.min() >= -1e-10 * ev.abs().max());
    }
}
