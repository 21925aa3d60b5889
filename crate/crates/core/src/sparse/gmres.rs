use super::{dot, norm2, CsrMatrix, Preconditioner};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-8,
            restart: 100,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovReport {
    /// Inner (Arnoldi) iterations over all restart cycles.
    pub iterations: usize,
    pub restarts: usize,
    /// True residual `||b - A x||` of the returned iterate.
    pub residual_norm: f64,
    pub rhs_norm: f64,
    /// `max(rel_tol * ||b||, abs_tol)`.
    pub tolerance: f64,
    pub converged: bool,
    /// The Krylov space became invariant while the residual was still
    /// above tolerance.
    pub breakdown: bool,
    /// Residual norm estimates: the initial residual of each cycle followed
    /// by one entry per inner iteration.
    pub history: Vec<f64>,
}

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt and
/// Givens rotations. Starts from `x0` (zero if `None`). Non-convergence is
/// reported, not raised.
pub fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    precond: &dyn Preconditioner,
    config: &GmresConfig,
    x0: Option<&[f64]>,
) -> (Vec<f64>, KrylovReport) {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "GMRES needs a square matrix");
    assert_eq!(b.len(), n, "right-hand side length");
    let restart = config.restart.max(1);

    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let rhs_norm = norm2(b);
    let tolerance = (config.rel_tol * rhs_norm).max(config.abs_tol);
    let mut report = KrylovReport {
        iterations: 0,
        restarts: 0,
        residual_norm: 0.0,
        rhs_norm,
        tolerance,
        converged: false,
        breakdown: false,
        history: Vec::new(),
    };

    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let residual = |x: &[f64], r: &mut [f64]| {
        a.matvec_into(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        norm2(r)
    };

    let mut beta = residual(&x, &mut r);
    loop {
        report.history.push(beta);
        report.residual_norm = beta;
        if beta <= tolerance {
            report.converged = true;
            return (x, report);
        }
        if report.iterations >= config.max_iter || report.breakdown {
            return (x, report);
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // column-major Hessenberg after rotations: h[j] has j + 2 entries
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::with_capacity(restart);
        let mut sn: Vec<f64> = Vec::with_capacity(restart);
        let mut g = vec![beta];
        let mut invariant = false;

        while h.len() < restart && report.iterations < config.max_iter {
            let j = h.len();
            precond.apply(&basis[j], &mut z);
            a.matvec_into(&z, &mut w);
            let w_norm0 = norm2(&w);
            let mut col = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                col[i] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let hnext = norm2(&w);
            col[j + 1] = hnext;
            for i in 0..j {
                let (c, s) = (cs[i], sn[i]);
                let (p, q) = (col[i], col[i + 1]);
                col[i] = c * p + s * q;
                col[i + 1] = -s * p + c * q;
            }
            let (p, q) = (col[j], col[j + 1]);
            let rho = p.hypot(q);
            let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (p / rho, q / rho) };
            col[j] = rho;
            col[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            h.push(col);
            report.iterations += 1;
            let estimate = g[j + 1].abs();
            report.history.push(estimate);

            invariant = hnext <= 1e-14 * w_norm0.max(f64::MIN_POSITIVE);
            if estimate <= tolerance || invariant {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }

        // back substitution for the least-squares coefficients
        let m = h.len();
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let mut s = g[i];
            for k in i + 1..m {
                s -= h[k][i] * y[k];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        let mut update = vec![0.0; n];
        for (k, yk) in y.iter().enumerate() {
            for (u, v) in update.iter_mut().zip(&basis[k]) {
                *u += yk * v;
            }
        }
        precond.apply(&update, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        // the estimate was already recorded; replace it with the true value
        report.history.pop();
        beta = residual(&x, &mut r);
        if invariant && beta > tolerance {
            report.breakdown = true;
        }
        report.restarts += 1;
    }
}
