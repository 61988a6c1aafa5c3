//! Vectors of the cone `R^l_+ x S^n1_+ x ... x S^nk_+` and Nesterov-Todd scaling.
//!
//! PSD components are kept as full symmetric matrices; the inner product is the
//! trace inner product. In the scaled space the NT point `lambda` is diagonal on
//! every PSD block, which keeps the Jordan-algebra operations elementwise.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct ConeDims {
    pub lp: usize,
    pub psd: Vec<usize>,
}

impl ConeDims {
    /// Barrier degree of the cone.
    pub fn degree(&self) -> usize {
        self.lp + self.psd.iter().sum::<usize>()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct ConeVec {
    pub lp: Vec<f64>,
    pub psd: Vec<DMatrix<f64>>,
}

impl ConeVec {
    pub fn zeros(dims: &ConeDims) -> Self {
        Self {
            lp: vec![0.0; dims.lp],
            psd: dims.psd.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
        }
    }

    pub fn identity(dims: &ConeDims) -> Self {
        Self {
            lp: vec![1.0; dims.lp],
            psd: dims.psd.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let lp: f64 = self.lp.iter().zip(&other.lp).map(|(a, b)| a * b).sum();
        let psd: f64 = self.psd.iter().zip(&other.psd).map(|(a, b)| a.dot(b)).sum();
        lp + psd
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.lp.iter_mut().zip(&other.lp) {
            *a += alpha * b;
        }
        for (a, b) in self.psd.iter_mut().zip(&other.psd) {
            *a += b * alpha;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.lp.iter_mut().for_each(|a| *a *= alpha);
        self.psd.iter_mut().for_each(|m| *m *= alpha);
    }

    pub fn add_identity(&mut self, alpha: f64) {
        self.lp.iter_mut().for_each(|a| *a += alpha);
        for m in &mut self.psd {
            for k in 0..m.nrows() {
                m[(k, k)] += alpha;
            }
        }
    }

    /// Smallest eigenvalue over all components (`+inf` for the trivial cone).
    pub fn min_eigenvalue(&self) -> f64 {
        let lp = self.lp.iter().copied().fold(f64::INFINITY, f64::min);
        self.psd
            .iter()
            .map(|m| min_sym_eigenvalue(m))
            .fold(lp, f64::min)
    }

    pub fn symmetrize(&mut self) {
        for m in &mut self.psd {
            let t = m.transpose();
            *m += t;
            *m *= 0.5;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lp.iter().all(|v| v.is_finite()) && self.psd.iter().all(|m| m.iter().all(|v| v.is_finite()))
    }
}

pub(crate) fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// NT scaling point `lambda`: diagonal per PSD block.
#[derive(Clone, Debug)]
pub(crate) struct Lambda {
    pub lp: Vec<f64>,
    pub psd: Vec<DVector<f64>>,
}

impl Lambda {
    #[cfg(test)]
    pub fn to_cone(&self) -> ConeVec {
        ConeVec {
            lp: self.lp.clone(),
            psd: self.psd.iter().map(DMatrix::from_diagonal).collect(),
        }
    }

    /// `lambda o lambda` as a cone vector.
    pub fn square(&self) -> ConeVec {
        ConeVec {
            lp: self.lp.iter().map(|l| l * l).collect(),
            psd: self
                .psd
                .iter()
                .map(|l| DMatrix::from_diagonal(&l.map(|v| v * v)))
                .collect(),
        }
    }

    /// Solves `lambda o x = v` for `x`.
    pub fn jordan_solve(&self, v: &ConeVec) -> ConeVec {
        ConeVec {
            lp: v.lp.iter().zip(&self.lp).map(|(a, l)| a / l).collect(),
            psd: v
                .psd
                .iter()
                .zip(&self.psd)
                .map(|(m, l)| {
                    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| 2.0 * m[(i, j)] / (l[i] + l[j]))
                })
                .collect(),
        }
    }

    /// Largest `alpha` with `lambda + alpha * d` in the cone (capped at `f64::INFINITY`).
    pub fn max_step(&self, d: &ConeVec) -> f64 {
        let mut step = f64::INFINITY;
        for (l, dv) in self.lp.iter().zip(&d.lp) {
            if *dv < 0.0 {
                step = step.min(-l / dv);
            }
        }
        for (l, dm) in self.psd.iter().zip(&d.psd) {
            let n = l.len();
            if n == 0 {
                continue;
            }
            let isq = l.map(|v| 1.0 / v.sqrt());
            let scaled = DMatrix::from_fn(n, n, |i, j| isq[i] * dm[(i, j)] * isq[j]);
            let lmin = min_sym_eigenvalue(&scaled);
            if lmin < 0.0 {
                step = step.min(-1.0 / lmin);
            }
        }
        step
    }
}

/// Jordan product `(a b + b a) / 2` componentwise.
pub(crate) fn jordan_product(a: &ConeVec, b: &ConeVec) -> ConeVec {
    ConeVec {
        lp: a.lp.iter().zip(&b.lp).map(|(x, y)| x * y).collect(),
        psd: a
            .psd
            .iter()
            .zip(&b.psd)
            .map(|(x, y)| {
                let p = x * y;
                (&p + p.transpose()) * 0.5
            })
            .collect(),
    }
}

/// `(R, R^{-1}, lambda)` with `s = R diag(lambda) R^T` and `z = R^{-T} diag(lambda) R^{-1}`.
fn nt_block(sm: &DMatrix<f64>, zm: &DMatrix<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>, DVector<f64>)> {
    let ls = sm.clone().cholesky()?.unpack();
    let lz = zm.clone().cholesky()?.unpack();
    let prod = lz.transpose() * &ls;
    let svd = prod.svd(true, true);
    let u = svd.u?;
    let v = svd.v_t?.transpose();
    let sv = svd.singular_values;
    if sv.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return None;
    }
    let isq = sv.map(|x| 1.0 / x.sqrt());
    let n = sv.len();
    let mut r = ls * v;
    for j in 0..n {
        r.column_mut(j).scale_mut(isq[j]);
    }
    let mut rinv = u.transpose() * lz.transpose();
    for i in 0..n {
        rinv.row_mut(i).scale_mut(isq[i]);
    }
    Some((r, rinv, sv))
}

#[derive(Clone, Debug)]
pub(crate) struct BlockScaling {
    pub r: DMatrix<f64>,
    pub rinv: DMatrix<f64>,
    /// `(R R^T)^{-1}`, the matrix appearing in the Schur complement.
    pub winv: DMatrix<f64>,
}

/// Nesterov-Todd scaling `W` with `W z = W^{-T} s = lambda`.
#[derive(Clone, Debug)]
pub(crate) struct Scaling {
    pub lp: Vec<f64>,
    pub psd: Vec<BlockScaling>,
}

impl Scaling {
    pub fn identity(dims: &ConeDims) -> Self {
        Self {
            lp: vec![1.0; dims.lp],
            psd: dims
                .psd
                .iter()
                .map(|&n| BlockScaling {
                    r: DMatrix::identity(n, n),
                    rinv: DMatrix::identity(n, n),
                    winv: DMatrix::identity(n, n),
                })
                .collect(),
        }
    }

    /// Computes the NT scaling of the pair `(s, z)`; `None` if either leaves the cone interior.
    pub fn nesterov_todd(s: &ConeVec, z: &ConeVec) -> Option<(Self, Lambda)> {
        let mut lp = Vec::with_capacity(s.lp.len());
        let mut lam_lp = Vec::with_capacity(s.lp.len());
        for (&sv, &zv) in s.lp.iter().zip(&z.lp) {
            if !(sv > 0.0 && zv > 0.0) {
                return None;
            }
            lp.push((sv / zv).sqrt());
            lam_lp.push((sv * zv).sqrt());
        }
        let mut blocks = Vec::with_capacity(s.psd.len());
        let mut lam_psd = Vec::with_capacity(s.psd.len());
        for (sm, zm) in s.psd.iter().zip(&z.psd) {
            let (r, rinv, sv) = nt_block(sm, zm)?;
            let winv = rinv.transpose() * &rinv;
            blocks.push(BlockScaling { r, rinv, winv });
            lam_psd.push(sv);
        }
        Some((
            Self { lp, psd: blocks },
            Lambda {
                lp: lam_lp,
                psd: lam_psd,
            },
        ))
    }

    /// Scaling at `s = W^T (lambda + alpha ds)`, `z = W^{-1} (lambda + alpha dz)`
    /// for scaled directions `ds`, `dz`, composed with the current one so the
    /// factors stay accurate as the iterates approach the cone boundary.
    pub fn update(&self, lambda: &Lambda, ds: &ConeVec, dz: &ConeVec, alpha: f64) -> Option<(Self, Lambda)> {
        let mut lp = Vec::with_capacity(self.lp.len());
        let mut lam_lp = Vec::with_capacity(self.lp.len());
        for (k, &d) in self.lp.iter().enumerate() {
            let sv = lambda.lp[k] + alpha * ds.lp[k];
            let zv = lambda.lp[k] + alpha * dz.lp[k];
            if !(sv > 0.0 && zv > 0.0) {
                return None;
            }
            lp.push(d * (sv / zv).sqrt());
            lam_lp.push((sv * zv).sqrt());
        }
        let mut blocks = Vec::with_capacity(self.psd.len());
        let mut lam_psd = Vec::with_capacity(self.psd.len());
        for (k, b) in self.psd.iter().enumerate() {
            let shifted = |d: &DMatrix<f64>| {
                let mut m = d * alpha;
                for i in 0..m.nrows() {
                    m[(i, i)] += lambda.psd[k][i];
                }
                (&m + m.transpose()) * 0.5
            };
            let (rt, rtinv, sv) = nt_block(&shifted(&ds.psd[k]), &shifted(&dz.psd[k]))?;
            let r = &b.r * rt;
            let rinv = rtinv * &b.rinv;
            let winv = rinv.transpose() * &rinv;
            blocks.push(BlockScaling { r, rinv, winv });
            lam_psd.push(sv);
        }
        Some((
            Self { lp, psd: blocks },
            Lambda {
                lp: lam_lp,
                psd: lam_psd,
            },
        ))
    }

    /// `W^{-1} v = R^{-T} v R^{-1}`
    pub fn apply_winv(&self, v: &ConeVec) -> ConeVec {
        ConeVec {
            lp: v.lp.iter().zip(&self.lp).map(|(a, d)| a / d).collect(),
            psd: v
                .psd
                .iter()
                .zip(&self.psd)
                .map(|(m, b)| b.rinv.transpose() * m * &b.rinv)
                .collect(),
        }
    }

    /// `W^{-T} v = R^{-1} v R^{-T}`
    pub fn apply_wt_inv(&self, v: &ConeVec) -> ConeVec {
        ConeVec {
            lp: v.lp.iter().zip(&self.lp).map(|(a, d)| a / d).collect(),
            psd: v
                .psd
                .iter()
                .zip(&self.psd)
                .map(|(m, b)| &b.rinv * m * b.rinv.transpose())
                .collect(),
        }
    }

    /// `W z = R^T z R`
    #[cfg(test)]
    pub fn apply_w(&self, z: &ConeVec) -> ConeVec {
        ConeVec {
            lp: z.lp.iter().zip(&self.lp).map(|(a, d)| a * d).collect(),
            psd: z
                .psd
                .iter()
                .zip(&self.psd)
                .map(|(m, b)| b.r.transpose() * m * &b.r)
                .collect(),
        }
    }

    /// `W^T v = R v R^T`
    pub fn apply_wt(&self, v: &ConeVec) -> ConeVec {
        ConeVec {
            lp: v.lp.iter().zip(&self.lp).map(|(a, d)| a * d).collect(),
            psd: v
                .psd
                .iter()
                .zip(&self.psd)
                .map(|(m, b)| &b.r * m * b.r.transpose())
                .collect(),
        }
    }
}
