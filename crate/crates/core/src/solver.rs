//! Jacobi-preconditioned Krylov solvers: CG, BiCGStab and restarted GMRES.
//!
//! Every successful return satisfies `||b - A x|| <= rtol ||b|| + atol`,
//! checked against the true residual rather than the recurrence.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Cg,
    BiCgStab,
    Gmres { restart: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    /// `None` means ten times the system size.
    pub max_iter: Option<usize>,
    /// `None` picks CG for symmetric systems and BiCGStab otherwise.
    pub method: Option<Method>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rtol: 1e-10,
            atol: 1e-14,
            max_iter: None,
            method: None,
        }
    }
}

impl SolverConfig {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = Some(method);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol >= 0.0) {
            return Err(Error::InvalidArgument(
                "solver tolerances must be positive (atol may be zero)".into(),
            ));
        }
        if let Some(Method::Gmres { restart: 0 }) = self.method {
            return Err(Error::InvalidArgument("GMRES restart must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64], r: &mut [f64]) -> f64 {
    a.mul_vec_into(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm(r)
}

/// Inverse diagonal, with zero diagonal entries left unscaled.
pub fn jacobi(a: &CsrMatrix) -> Vec<f64> {
    a.diagonal()
        .into_iter()
        .map(|d| if d != 0.0 && d.is_finite() { 1.0 / d } else { 1.0 })
        .collect()
}

pub fn solve(a: &CsrMatrix, rhs: &[f64], config: &SolverConfig, symmetric_hint: bool) -> Result<Solution> {
    solve_with(a, rhs, None, None, config, symmetric_hint)
}

/// Full-control entry point: optional initial guess and optional inverse
/// diagonal preconditioner (Jacobi of `a` when `None`).
pub fn solve_with(
    a: &CsrMatrix,
    rhs: &[f64],
    x0: Option<&[f64]>,
    inv_diag: Option<&[f64]>,
    config: &SolverConfig,
    symmetric_hint: bool,
) -> Result<Solution> {
    config.validate()?;
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, expected square",
            n,
            a.n_cols()
        )));
    }
    if rhs.len() != n {
        return Err(Error::InvalidArgument(format!(
            "rhs has length {}, matrix has {} rows",
            rhs.len(),
            n
        )));
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericBreakdown("non-finite right-hand side".into()));
    }
    let owned;
    let precond = match inv_diag {
        Some(d) => d,
        None => {
            owned = jacobi(a);
            &owned
        }
    };
    let mut x = match x0 {
        Some(g) if g.len() == n => g.to_vec(),
        Some(_) => return Err(Error::InvalidArgument("initial guess has wrong length".into())),
        None => vec![0.0; n],
    };
    let target = config.rtol * norm(rhs) + config.atol;
    let max_iter = config.max_iter.unwrap_or(10 * n.max(1));
    let method = config
        .method
        .unwrap_or(if symmetric_hint { Method::Cg } else { Method::BiCgStab });
    let (iterations, res) = match method {
        Method::Cg => cg(a, rhs, &mut x, precond, target, max_iter)?,
        Method::BiCgStab => {
            let start = x.clone();
            match bicgstab(a, rhs, &mut x, precond, target, max_iter) {
                Ok(r) => r,
                // stagnation near round-off: restarted GMRES from the same start
                Err(e @ (Error::NumericBreakdown(_) | Error::SolverFailure { .. }))
                    if x.iter().all(|v| v.is_finite()) =>
                {
                    log::warn!("BiCGStab failed ({e}); retrying with GMRES");
                    x.copy_from_slice(&start);
                    gmres(a, rhs, &mut x, precond, target, max_iter, 100)?
                }
                Err(e) => return Err(e),
            }
        }
        Method::Gmres { restart } => gmres(a, rhs, &mut x, precond, target, max_iter, restart)?,
    };
    Ok(Solution {
        x,
        iterations,
        residual: res,
    })
}

fn check_finite(value: f64, what: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericBreakdown(format!("{what} is not finite")))
    }
}

fn cg(a: &CsrMatrix, b: &[f64], x: &mut [f64], m: &[f64], target: f64, max_iter: usize) -> Result<(usize, f64)> {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut rnorm = residual(a, x, b, &mut r);
    check_finite(rnorm, "initial residual")?;
    if rnorm <= target {
        return Ok((0, rnorm));
    }
    let mut z: Vec<f64> = r.iter().zip(m).map(|(ri, mi)| ri * mi).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut it = 0;
    while it < max_iter {
        it += 1;
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        check_finite(pap, "p.Ap")?;
        if pap <= 0.0 {
            // search direction in the null space: nothing left to reduce
            rnorm = residual(a, x, b, &mut r);
            if rnorm <= target {
                return Ok((it, rnorm));
            }
            return Err(Error::NumericBreakdown(format!("CG curvature {pap:e} is not positive")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = norm(&r);
        check_finite(rnorm, "CG residual")?;
        if rnorm <= target {
            rnorm = residual(a, x, b, &mut r);
            if rnorm <= target {
                return Ok((it, rnorm));
            }
        }
        for i in 0..n {
            z[i] = r[i] * m[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure {
        iterations: it,
        residual: residual(a, x, b, &mut r),
        target,
    })
}

fn bicgstab(a: &CsrMatrix, b: &[f64], x: &mut [f64], m: &[f64], target: f64, max_iter: usize) -> Result<(usize, f64)> {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut rnorm = residual(a, x, b, &mut r);
    check_finite(rnorm, "initial residual")?;
    if rnorm <= target {
        return Ok((0, rnorm));
    }
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut restarts = 0;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let rho_new = dot(&r_hat, &r);
        check_finite(rho_new, "BiCGStab rho")?;
        if rho_new.abs() < 1e-300 || omega == 0.0 {
            // shadow residual lost: restart from the current iterate
            restarts += 1;
            if restarts > 20 {
                return Err(Error::NumericBreakdown("BiCGStab breakdown".into()));
            }
            residual(a, x, b, &mut r);
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.fill(0.0);
            p.fill(0.0);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            p_hat[i] = m[i] * p[i];
        }
        a.mul_vec_into(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            omega = 0.0;
            continue;
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        let snorm = norm(&s);
        check_finite(snorm, "BiCGStab residual")?;
        if snorm <= target {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            rnorm = residual(a, x, b, &mut r);
            if rnorm <= target {
                return Ok((it, rnorm));
            }
            // recurrence drifted: restart
            omega = 0.0;
            continue;
        }
        for i in 0..n {
            s_hat[i] = m[i] * s[i];
        }
        a.mul_vec_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        rnorm = norm(&r);
        check_finite(rnorm, "BiCGStab residual")?;
        if rnorm <= target {
            rnorm = residual(a, x, b, &mut r);
            if rnorm <= target {
                return Ok((it, rnorm));
            }
            omega = 0.0;
        }
    }
    Err(Error::SolverFailure {
        iterations: it,
        residual: residual(a, x, b, &mut r),
        target,
    })
}

fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    m: &[f64],
    target: f64,
    max_iter: usize,
    restart: usize,
) -> Result<(usize, f64)> {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut it = 0;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    loop {
        let beta = residual(a, x, b, &mut r);
        check_finite(beta, "GMRES residual")?;
        if beta <= target {
            return Ok((it, beta));
        }
        if it >= max_iter {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: beta,
                target,
            });
        }
        let k_max = restart.min(n.max(1));
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k_max + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; k_max]; k_max + 1];
        let mut cs = vec![0.0; k_max];
        let mut sn = vec![0.0; k_max];
        let mut g = vec![0.0; k_max + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..k_max {
            it += 1;
            for i in 0..n {
                z[i] = m[i] * basis[k][i];
            }
            a.mul_vec_into(&z, &mut w);
            // modified Gram-Schmidt
            for (j, vj) in basis.iter().enumerate() {
                let hj = dot(&w, vj);
                h[j][k] = hj;
                for i in 0..n {
                    w[i] -= hj * vj[i];
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            check_finite(denom, "GMRES Hessenberg")?;
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() <= 0.5 * target || wn == 0.0 || it >= max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution for the Krylov coefficients
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += m[i] * yj * basis[j][i];
            }
        }
        if k_used == 0 {
            return Err(Error::NumericBreakdown("GMRES made no progress".into()));
        }
    }
}

/// Solves a singular system whose null space is the constants (pure
/// Neumann problems) and fixes the weighted mean of the solution.
///
/// `weights` are the integrals of the basis functions, so the mean is
/// `Σ w_i x_i / Σ w_i`.
pub fn solve_constrained_mean(
    a: &CsrMatrix,
    rhs: &[f64],
    weights: &[f64],
    target_mean: f64,
    config: &SolverConfig,
) -> Result<Solution> {
    let n = rhs.len();
    if weights.len() != n {
        return Err(Error::InvalidArgument("weights have wrong length".into()));
    }
    let rnorm = norm(rhs);
    let projection: f64 = rhs.iter().sum();
    if projection.abs() > 1e-8 * rnorm.max(f64::MIN_POSITIVE) && rnorm > 0.0 {
        return Err(Error::Incompatible {
            projection: projection.abs(),
            norm: rnorm,
        });
    }
    // remove the rounding-level component along the constants
    let shift = projection / n as f64;
    let b: Vec<f64> = rhs.iter().map(|v| v - shift).collect();
    let mut sol = solve_with(a, &b, None, None, config, true)?;
    let wsum: f64 = weights.iter().sum();
    let mean = dot(weights, &sol.x) / wsum;
    for v in &mut sol.x {
        *v += target_mean - mean;
    }
    let mut r = vec![0.0; n];
    sol.residual = residual(a, &sol.x, rhs, &mut r);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::FeContext;

    fn spd() -> CsrMatrix {
        CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]])
    }

    #[test]
    fn identity_returns_rhs() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        for method in [Method::Cg, Method::BiCgStab, Method::Gmres { restart: 3 }] {
            let cfg = SolverConfig::default().with_method(method);
            let s = solve(&a, &b, &cfg, true).unwrap();
            for (x, y) in s.x.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_by_two_all_methods() {
        let a = spd();
        for method in [Method::Cg, Method::BiCgStab, Method::Gmres { restart: 2 }] {
            let cfg = SolverConfig::default().with_method(method);
            let s = solve(&a, &[3.0, 3.0], &cfg, false).unwrap();
            assert!((s.x[0] - 1.0).abs() < 1e-10 && (s.x[1] - 1.0).abs() < 1e-10);
            assert!(s.residual <= 1e-10 * 18f64.sqrt() + 1e-14);
        }
    }

    #[test]
    fn nonsymmetric_system() {
        let a = CsrMatrix::from_dense(&[vec![4.0, 1.0, 0.0], vec![-2.0, 5.0, 1.0], vec![0.0, -3.0, 6.0]]);
        let x_true = [1.0, -1.0, 2.0];
        let b = a.mul_vec(&x_true);
        for method in [
            Method::BiCgStab,
            Method::Gmres { restart: 1 },
            Method::Gmres { restart: 10 },
        ] {
            let s = solve(&a, &b, &SolverConfig::default().with_method(method), false).unwrap();
            for (x, y) in s.x.iter().zip(&x_true) {
                assert!((x - y).abs() < 1e-9, "{method:?}");
            }
        }
    }

    #[test]
    fn non_convergence_reports_failure() {
        let ctx = FeContext::uniform(8, 8).unwrap();
        let k = ctx.weighted_stiffness(|_, _| 1.0);
        let mut a = ctx.mass.clone();
        a.axpy(1.0, &k);
        let b = vec![1.0; ctx.n_vertices()];
        let cfg = SolverConfig {
            max_iter: Some(2),
            ..SolverConfig::default()
        };
        match solve(&a, &b, &cfg, true) {
            Err(Error::SolverFailure { iterations, .. }) => assert_eq!(iterations, 2),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn nan_is_breakdown() {
        let a = spd();
        assert!(matches!(
            solve(&a, &[f64::NAN, 1.0], &SolverConfig::default(), true),
            Err(Error::NumericBreakdown(_))
        ));
    }

    #[test]
    fn invalid_config() {
        let cfg = SolverConfig::default().with_method(Method::Gmres { restart: 0 });
        assert!(solve(&spd(), &[1.0, 1.0], &cfg, false).is_err());
        let cfg = SolverConfig::default().with_rtol(0.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn constrained_mean_zero_rhs_gives_constant() {
        let ctx = FeContext::uniform(4, 4).unwrap();
        let k = ctx.weighted_stiffness(|_, _| 1.0);
        let b = vec![0.0; ctx.n_vertices()];
        let s = solve_constrained_mean(&k, &b, &ctx.lumped, 3.5, &SolverConfig::default()).unwrap();
        assert!(s.x.iter().all(|v| (v - 3.5).abs() < 1e-14));
    }

    #[test]
    fn constrained_mean_rejects_constant_rhs() {
        let ctx = FeContext::uniform(4, 4).unwrap();
        let k = ctx.weighted_stiffness(|_, _| 1.0);
        let b = vec![1.0; ctx.n_vertices()];
        assert!(matches!(
            solve_constrained_mean(&k, &b, &ctx.lumped, 0.0, &SolverConfig::default()),
            Err(Error::Incompatible { .. })
        ));
    }

    fn dirichlet_poisson_error(n: usize) -> f64 {
        let ctx = FeContext::uniform(n, n).unwrap();
        let exact = |x: f64, y: f64| x * (1.0 - x) * y * (1.0 - y);
        let f = |x: f64, y: f64| 2.0 * (x * (1.0 - x) + y * (1.0 - y));
        let mut k = ctx.weighted_stiffness(|_, _| 1.0);
        let mut b = crate::assembly::assemble_vector(&ctx.mesh, &ctx.scalar, |e, local| {
            let area = ctx.geometry[e].area;
            for (q, qp) in ctx.qps.iter().enumerate() {
                let [x, y] = ctx.qp_coords(e, q);
                for a in 0..3 {
                    local[a] += qp.weight * area * f(x, y) * qp.lambda[a];
                }
            }
        });
        let fixed = ctx.mesh.boundary_vertices.clone();
        k.apply_dirichlet(&fixed, &vec![0.0; fixed.len()], &mut b);
        let s = solve(&k, &b, &SolverConfig::default(), true).unwrap();
        ctx.integrate(|e, q| {
            let [x, y] = ctx.qp_coords(e, q);
            let d = ctx.p1_at(&s.x, e, q) - exact(x, y);
            d * d
        })
        .sqrt()
    }

    #[test]
    fn manufactured_poisson_is_second_order() {
        let errors: Vec<f64> = [8, 16, 32].iter().map(|&n| dirichlet_poisson_error(n)).collect();
        for w in errors.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((1.8..2.2).contains(&rate), "rate {rate}, errors {errors:?}");
        }
    }

    #[test]
    fn neumann_poisson_mean_fixed() {
        use std::f64::consts::PI;
        let ctx = FeContext::uniform(16, 16).unwrap();
        let k = ctx.weighted_stiffness(|_, _| 1.0);
        let f = ctx.interpolate(|x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin());
        let b = ctx.mass.mul_vec(&f);
        let s = solve_constrained_mean(&k, &b, &ctx.lumped, 0.0, &SolverConfig::default()).unwrap();
        assert!(ctx.mean_p1(&s.x).abs() < 1e-12);
        assert!(s.residual <= 1e-10 * b.iter().map(|v| v * v).sum::<f64>().sqrt() + 1e-13);
    }
}
