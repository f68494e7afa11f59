//! Log-det barrier method for the margin-maximization problem
//!
//! ```text
//! maximize t  subject to  -(A_k^T P + P A_k + 2 lambda P) - t I >= 0   for every k,
//!                          -I <= P <= I.
//! ```
//!
//! Variables are the upper triangle of `P` and `t`. The start `P = 0, t = -1`
//! is strictly feasible, so no phase one is needed.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::DominanceError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Stop once the duality gap bound is below this fraction of the margin.
    pub rel_gap: f64,
    pub max_outer: usize,
    pub max_newton: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            rel_gap: 1e-7,
            max_outer: 40,
            max_newton: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub p: DMatrix<f64>,
    /// Achieved margin: every vertex residual is below `-t`.
    pub t: f64,
    /// Upper bound on the best achievable margin.
    pub upper_bound: f64,
    pub feasible: bool,
    pub outer_iterations: usize,
    pub newton_iterations: usize,
}

struct Block {
    f0: DMatrix<f64>,
    /// One coefficient matrix per variable (upper-triangle entries of P, then t).
    g: Vec<DMatrix<f64>>,
}

impl Block {
    fn eval(&self, y: &[f64]) -> DMatrix<f64> {
        let mut f = self.f0.clone();
        for (gj, yj) in self.g.iter().zip(y) {
            if *yj != 0.0 {
                f += gj * *yj;
            }
        }
        f
    }
}

fn basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        for b in a..n {
            let mut e = DMatrix::zeros(n, n);
            e[(a, b)] = 1.0;
            e[(b, a)] = 1.0;
            out.push(e);
        }
    }
    out
}

pub(crate) fn unpack(n: usize, y: &[f64]) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, n);
    let mut idx = 0;
    for a in 0..n {
        for b in a..n {
            p[(a, b)] = y[idx];
            p[(b, a)] = y[idx];
            idx += 1;
        }
    }
    p
}

struct Barrier {
    blocks: Vec<Block>,
    nvar: usize,
    nu: f64,
}

impl Barrier {
    fn factors(&self, y: &[f64]) -> Option<Vec<Cholesky<f64, Dyn>>> {
        self.blocks.iter().map(|b| b.eval(y).cholesky()).collect()
    }

    /// `-s t - log det` of all blocks, or `None` outside the interior.
    fn value(&self, y: &[f64], s: f64) -> Option<f64> {
        let mut v = -s * y[self.nvar - 1];
        for chol in self.factors(y)? {
            let l = chol.l_dirty();
            v -= 2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>();
        }
        Some(v)
    }

    fn derivatives(&self, y: &[f64], s: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let m = self.nvar;
        let mut grad = DVector::zeros(m);
        let mut hess = DMatrix::zeros(m, m);
        grad[m - 1] = -s;
        for (block, chol) in self.blocks.iter().zip(self.factors(y)?) {
            let w = chol.inverse();
            let prods: Vec<Option<DMatrix<f64>>> = block
                .g
                .iter()
                .map(|g| (g.amax() > 0.0).then(|| &w * g))
                .collect();
            for j in 0..m {
                let Some(mj) = &prods[j] else { continue };
                grad[j] -= mj.trace();
                for k in j..m {
                    let Some(mk) = &prods[k] else { continue };
                    // tr(Mj Mk)
                    let v = mj.component_mul(&mk.transpose()).sum();
                    hess[(j, k)] += v;
                    if k != j {
                        hess[(k, j)] += v;
                    }
                }
            }
        }
        Some((grad, hess))
    }
}

/// Maximize the uniform margin over the vertex matrices `mats`.
///
/// `target` is the margin below which the problem is reported infeasible; the
/// search stops early once the upper bound drops below it.
pub fn maximize_margin(
    mats: &[DMatrix<f64>],
    lambda: f64,
    target: f64,
    opts: &SdpOptions,
) -> Result<SdpSolution, DominanceError> {
    let n = mats
        .first()
        .ok_or_else(|| DominanceError::Dimension("no vertex matrices".into()))?
        .nrows();
    if mats.iter().any(|a| a.nrows() != n || a.ncols() != n) {
        return Err(DominanceError::Dimension("vertex matrices differ in size".into()));
    }
    let mut unique: Vec<&DMatrix<f64>> = Vec::new();
    for a in mats {
        if !unique.contains(&a) {
            unique.push(a);
        }
    }

    // normalize so that the margin is O(1)
    let scale = unique.iter().map(|a| a.norm()).fold(0.0, f64::max) + lambda.abs();
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let lam = lambda / scale;
    let target_n = target / scale;

    let e = basis(n);
    let d = e.len();
    let nvar = d + 1;
    let eye = DMatrix::<f64>::identity(n, n);
    let mut blocks = Vec::with_capacity(unique.len() + 2);
    for a in &unique {
        let an = *a / scale;
        let mut g: Vec<DMatrix<f64>> = e
            .iter()
            .map(|ei| -(an.transpose() * ei + ei * &an + ei * (2.0 * lam)))
            .collect();
        g.push(-eye.clone());
        blocks.push(Block {
            f0: DMatrix::zeros(n, n),
            g,
        });
    }
    for sign in [-1.0, 1.0] {
        let mut g: Vec<DMatrix<f64>> = e.iter().map(|ei| ei * sign).collect();
        g.push(DMatrix::zeros(n, n));
        blocks.push(Block { f0: eye.clone(), g });
    }
    let barrier = Barrier {
        nu: (blocks.len() * n) as f64,
        blocks,
        nvar,
    };

    let mut y = vec![0.0; nvar];
    y[nvar - 1] = -1.0;
    let mut s = 1.0;
    let mut newton_total = 0;
    let mut outer = 0;
    let mut upper = f64::INFINITY;

    while outer < opts.max_outer {
        outer += 1;
        let mut centered = false;
        for _ in 0..opts.max_newton {
            let (grad, hess) = barrier
                .derivatives(&y, s)
                .ok_or_else(|| DominanceError::Stalled("iterate left the interior".into()))?;
            let step = match hess.clone().cholesky() {
                Some(c) => c.solve(&(-&grad)),
                None => {
                    let reg = hess + DMatrix::identity(nvar, nvar) * 1e-12;
                    reg.lu()
                        .solve(&(-&grad))
                        .ok_or_else(|| DominanceError::Stalled("singular Newton system".into()))?
                }
            };
            let slope = grad.dot(&step);
            newton_total += 1;
            if -slope / 2.0 <= 1e-10 {
                centered = true;
                break;
            }
            let f0 = barrier.value(&y, s).expect("current iterate is interior");
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand: Vec<f64> = y.iter().zip(step.iter()).map(|(a, b)| a + alpha * b).collect();
                if let Some(fc) = barrier.value(&cand, s) {
                    if fc <= f0 + 0.25 * alpha * slope {
                        y = cand;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                // numerically as centered as it gets
                centered = true;
                break;
            }
        }
        let t = y[nvar - 1];
        let gap = barrier.nu / s;
        if centered {
            upper = upper.min(t + gap);
        }
        if t > target_n && gap <= opts.rel_gap * t {
            break;
        }
        if centered && t + gap < target_n {
            break;
        }
        s *= 10.0;
    }

    let t = y[nvar - 1];
    Ok(SdpSolution {
        p: unpack(n, &y[..d]),
        t: t * scale,
        upper_bound: upper * scale,
        feasible: t > target_n,
        outer_iterations: outer,
        newton_iterations: newton_total,
    })
}
