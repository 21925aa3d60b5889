//! Closed-form singular potential `G`, its Yukawa convolution `Ghat`, their
//! gradients and the interface flux datum `g_Gamma`.
//!
//! All evaluations are direct sums over atoms, batched over point arrays
//! and evaluated in parallel. Each point is summed in atom order, so results
//! do not depend on the thread count.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{dot, norm, scale, sub, Vec3};
use crate::model::Molecule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("point {point} at {position:?} lies within {distance:e} A of atom {atom}")]
    Singular {
        point: usize,
        position: Vec3,
        atom: usize,
        distance: f64,
    },
    #[error("invalid kernel parameters: {0}")]
    InvalidParameters(String),
}

pub const DEFAULT_SINGULAR_GUARD: f64 = 1e-10;

/// Below this multiple of lambda the convolved kernels use their series.
const SERIES_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelContext {
    molecule: Molecule,
    alpha: f64,
    eps_p: f64,
    lambda: f64,
    guard: f64,
    prefactor: f64,
}

impl KernelContext {
    pub fn new(molecule: Molecule, alpha: f64, eps_p: f64, lambda: f64) -> Result<Self, KernelError> {
        Self::with_guard(molecule, alpha, eps_p, lambda, DEFAULT_SINGULAR_GUARD)
    }

    pub fn with_guard(
        molecule: Molecule,
        alpha: f64,
        eps_p: f64,
        lambda: f64,
        guard: f64,
    ) -> Result<Self, KernelError> {
        if !(lambda > 0.0) || !(eps_p > 0.0) || !(guard > 0.0) || !alpha.is_finite() {
            return Err(KernelError::InvalidParameters(format!(
                "need lambda > 0, eps_p > 0, guard > 0 and finite alpha; got lambda = {lambda}, \
                 eps_p = {eps_p}, guard = {guard}, alpha = {alpha}"
            )));
        }
        Ok(Self {
            prefactor: alpha / (4.0 * PI * eps_p),
            molecule,
            alpha,
            eps_p,
            lambda,
            guard,
        })
    }

    pub fn molecule(&self) -> &Molecule {
        &self.molecule
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eps_p(&self) -> f64 {
        self.eps_p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `alpha / (4 pi eps_p)`.
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    /// Index of an atom within the singular guard of `p`, if any.
    pub fn coincident_atom(&self, p: Vec3) -> Option<usize> {
        self.molecule
            .atoms()
            .iter()
            .position(|a| norm(sub(p, a.position)) < self.guard)
    }

    fn check(&self, index: usize, p: Vec3) -> Result<(), KernelError> {
        match self.coincident_atom(p) {
            Some(atom) => Err(KernelError::Singular {
                point: index,
                position: p,
                atom,
                distance: norm(sub(p, self.molecule.atoms()[atom].position)),
            }),
            None => Ok(()),
        }
    }

    pub fn g_at(&self, p: Vec3) -> f64 {
        let mut s = 0.0;
        for a in self.molecule.atoms() {
            s += a.charge / norm(sub(p, a.position));
        }
        self.prefactor * s
    }

    pub fn grad_g_at(&self, p: Vec3) -> Vec3 {
        let mut g = [0.0; 3];
        for a in self.molecule.atoms() {
            let d = sub(p, a.position);
            let r = norm(d);
            let c = a.charge / (r * r * r);
            for k in 0..3 {
                g[k] -= c * d[k];
            }
        }
        scale(g, self.prefactor)
    }

    pub fn ghat_at(&self, p: Vec3) -> f64 {
        let lam = self.lambda;
        let mut s = 0.0;
        for a in self.molecule.atoms() {
            let r = norm(sub(p, a.position));
            let term = if r < SERIES_THRESHOLD * lam {
                1.0 / lam - r / (2.0 * lam * lam) + r * r / (6.0 * lam * lam * lam)
            } else {
                -(-r / lam).exp_m1() / r
            };
            s += a.charge * term;
        }
        self.prefactor * s
    }

    pub fn grad_ghat_at(&self, p: Vec3) -> Vec3 {
        let lam = self.lambda;
        let mut g = [0.0; 3];
        for a in self.molecule.atoms() {
            let d = sub(p, a.position);
            let r = norm(d);
            if r == 0.0 {
                continue;
            }
            // coefficient of the unit vector d / r
            let radial = if r < SERIES_THRESHOLD * lam {
                let l2 = lam * lam;
                -1.0 / (2.0 * l2) + r / (3.0 * l2 * lam) - r * r / (8.0 * l2 * l2)
            } else {
                let x = r / lam;
                ((-x).exp_m1() + x * (-x).exp()) / (r * r)
            };
            let c = a.charge * radial / r;
            for k in 0..3 {
                g[k] += c * d[k];
            }
        }
        scale(g, self.prefactor)
    }

    pub fn g_gamma_at(&self, eps_s: f64, eps_inf: f64, p: Vec3, n: Vec3) -> f64 {
        (eps_s - eps_inf) * dot(self.grad_ghat_at(p), n) + (eps_inf - self.eps_p) * dot(self.grad_g_at(p), n)
    }

    pub fn eval_g(&self, points: &[Vec3]) -> Result<Vec<f64>, KernelError> {
        points
            .par_iter()
            .enumerate()
            .map(|(i, &p)| self.check(i, p).map(|_| self.g_at(p)))
            .collect()
    }

    pub fn eval_grad_g(&self, points: &[Vec3]) -> Result<Vec<Vec3>, KernelError> {
        points
            .par_iter()
            .enumerate()
            .map(|(i, &p)| self.check(i, p).map(|_| self.grad_g_at(p)))
            .collect()
    }

    pub fn eval_ghat(&self, points: &[Vec3]) -> Vec<f64> {
        points.par_iter().map(|&p| self.ghat_at(p)).collect()
    }

    pub fn eval_grad_ghat(&self, points: &[Vec3]) -> Vec<Vec3> {
        points.par_iter().map(|&p| self.grad_ghat_at(p)).collect()
    }

    /// `(eps_s - eps_inf) dGhat/dn + (eps_inf - eps_p) dG/dn` at surface
    /// points with unit normals.
    pub fn eval_g_gamma(
        &self,
        eps_s: f64,
        eps_inf: f64,
        points: &[Vec3],
        normals: &[Vec3],
    ) -> Result<Vec<f64>, KernelError> {
        assert_eq!(points.len(), normals.len(), "one normal per point");
        points
            .par_iter()
            .zip(normals.par_iter())
            .enumerate()
            .map(|(i, (&p, &n))| self.check(i, p).map(|_| self.g_gamma_at(eps_s, eps_inf, p, n)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Atom, FROZEN_ALPHA};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_ion(lambda: f64) -> KernelContext {
        KernelContext::new(Molecule::single_ion([0.0; 3], 1.0, 1.0), FROZEN_ALPHA, 2.0, lambda).unwrap()
    }

    fn dipole() -> Molecule {
        Molecule::new(vec![
            Atom {
                position: [-1.5, 0.3, 0.2],
                charge: 1.0,
                radius: 1.0,
            },
            Atom {
                position: [1.5, 0.3, 0.2],
                charge: -1.0,
                radius: 1.0,
            },
        ])
        .unwrap()
    }

    #[test]
    fn g_of_unit_ion() {
        let ctx = unit_ion(15.0);
        let g = ctx.eval_g(&[[10.0, 0.0, 0.0], [0.0, 6.0, 8.0]]).unwrap();
        assert_relative_eq!(g[0], 28.022967475916506, max_relative = 1e-14);
        assert_relative_eq!(g[1], 28.022967475916506, max_relative = 1e-14);
    }

    #[test]
    fn g_vanishes_on_bisector_of_dipole() {
        let ctx = KernelContext::new(dipole(), FROZEN_ALPHA, 2.0, 15.0).unwrap();
        let g = ctx.eval_g(&[[0.0, 4.0, -7.0], [0.0, -3.0, 2.5]]).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn g_at_atom_center_is_singular() {
        let ctx = unit_ion(15.0);
        let err = ctx.eval_g(&[[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, KernelError::Singular { point: 1, atom: 0, .. }));
        assert!(ctx.eval_grad_g(&[[0.0; 3]]).is_err());
        assert!(ctx.eval_g_gamma(80.0, 1.8, &[[0.0; 3]], &[[1.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn grad_g_of_unit_ion() {
        let ctx = unit_ion(15.0);
        let g = ctx.eval_grad_g(&[[10.0, 0.0, 0.0]]).unwrap()[0];
        assert_relative_eq!(g[0], -2.8022967475916505, max_relative = 1e-14);
        assert_eq!(g[1], 0.0);
        assert_eq!(g[2], 0.0);
        let p = [3.0, -4.0, 2.0];
        let g = ctx.grad_g_at(p);
        let c = crate::geometry::cross(g, p);
        assert!(norm(c) < 1e-14 * norm(g) * norm(p));
    }

    #[test]
    fn ghat_of_unit_ion() {
        let ctx = unit_ion(15.0);
        assert_relative_eq!(ctx.ghat_at([10.0, 0.0, 0.0]), 13.635496247687424, max_relative = 1e-13);
        assert_relative_eq!(ctx.ghat_at([0.0; 3]), 18.68197831727767, max_relative = 1e-14);
        assert_relative_eq!(ctx.ghat_at([1e-6, 0.0, 0.0]), 18.68197831727767, max_relative = 1e-7);
    }

    #[test]
    fn ghat_series_and_closed_form_agree_at_threshold() {
        let ctx = unit_ion(15.0);
        let r = SERIES_THRESHOLD * 15.0;
        let below = ctx.ghat_at([r * (1.0 - 1e-9), 0.0, 0.0]);
        let above = ctx.ghat_at([r * (1.0 + 1e-9), 0.0, 0.0]);
        assert_relative_eq!(below, above, max_relative = 1e-10);
        let gb = ctx.grad_ghat_at([r * (1.0 - 1e-9), 0.0, 0.0]);
        let ga = ctx.grad_ghat_at([r * (1.0 + 1e-9), 0.0, 0.0]);
        assert_relative_eq!(gb[0], ga[0], max_relative = 1e-9);
    }

    #[test]
    fn ghat_vanishes_for_huge_lambda() {
        let ctx = unit_ion(1e9);
        let p = [10.0, 0.0, 0.0];
        assert!(ctx.ghat_at(p).abs() < 1e-6 * ctx.g_at(p));
    }

    #[test]
    fn grad_ghat_near_atom_tends_to_cusp_slope() {
        // Ghat ~ C (1/lambda - r/(2 lambda^2)), so the gradient keeps a
        // finite magnitude C/(2 lambda^2) as r -> 0
        let ctx = unit_ion(15.0);
        let g = ctx.grad_ghat_at([1e-6, 0.0, 0.0]);
        assert_relative_eq!(norm(g), 0.6227326105759223, max_relative = 1e-6);
        assert!(g[0] < 0.0);
        assert_eq!(ctx.grad_ghat_at([0.0; 3]), [0.0; 3]);
    }

    #[test]
    fn grad_ghat_tends_to_grad_g_for_small_lambda() {
        let ctx = unit_ion(1e-3);
        let p = [10.0, 0.0, 0.0];
        let a = ctx.grad_ghat_at(p);
        let b = ctx.grad_g_at(p);
        assert!(norm(sub(a, b)) < 1e-4 * norm(b));
    }

    fn central_difference(f: impl Fn(Vec3) -> f64, p: Vec3, h: f64) -> Vec3 {
        let mut g = [0.0; 3];
        for k in 0..3 {
            let mut a = p;
            let mut b = p;
            a[k] += h;
            b[k] -= h;
            g[k] = (f(a) - f(b)) / (2.0 * h);
        }
        g
    }

    #[test]
    fn gradients_match_central_differences() {
        let ctx = unit_ion(15.0);
        let p = [6.0, 8.0, 0.0];
        let fd = central_difference(|x| ctx.g_at(x), p, 1e-3);
        assert!(norm(sub(fd, ctx.grad_g_at(p))) < 1e-5 * norm(fd));
        let fd = central_difference(|x| ctx.ghat_at(x), p, 1e-3);
        assert!(norm(sub(fd, ctx.grad_ghat_at(p))) < 1e-5 * norm(fd));
    }

    #[test]
    fn finite_difference_error_is_second_order() {
        let ctx = KernelContext::new(dipole(), FROZEN_ALPHA, 2.0, 15.0).unwrap();
        let p = [2.0, 3.0, -1.0];
        let err = |f: &dyn Fn(Vec3) -> f64, exact: Vec3, h: f64| norm(sub(central_difference(f, p, h), exact));
        for (f, exact) in [
            (&(|x| ctx.g_at(x)) as &dyn Fn(Vec3) -> f64, ctx.grad_g_at(p)),
            (&(|x| ctx.ghat_at(x)) as &dyn Fn(Vec3) -> f64, ctx.grad_ghat_at(p)),
        ] {
            let ratio = err(f, exact, 0.02) / err(f, exact, 0.01);
            assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        }
    }

    #[test]
    fn g_gamma_reference_value() {
        let ctx = unit_ion(15.0);
        let v = ctx
            .eval_g_gamma(80.0, 1.8, &[[5.0, 0.0, 0.0]], &[[1.0, 0.0, 0.0]])
            .unwrap()[0];
        assert_relative_eq!(v, -36.87451141724741, max_relative = 1e-10);
    }

    #[test]
    fn g_gamma_local_and_small_lambda_limits() {
        let p = [3.0, 4.0, 0.0];
        let n = [0.6, 0.8, 0.0];
        let ctx = unit_ion(15.0);
        let local = ctx.g_gamma_at(80.0, 80.0, p, n);
        assert_relative_eq!(local, 78.0 * dot(ctx.grad_g_at(p), n), max_relative = 1e-14);
        let ctx = unit_ion(1e-4);
        let v = ctx.g_gamma_at(80.0, 2.0, p, n);
        assert_relative_eq!(v, 78.0 * dot(ctx.grad_g_at(p), n), max_relative = 1e-4);
    }

    proptest! {
        #[test]
        fn kernels_are_linear_in_charges(
            x in -20.0f64..20.0, y in -20.0f64..20.0, z in 0.5f64..20.0, lambda in 0.5f64..50.0
        ) {
            let p = [x, y, z];
            let m = dipole();
            let a = KernelContext::new(m.clone(), FROZEN_ALPHA, 2.0, lambda).unwrap();
            let b = KernelContext::new(m.scaled_charges(2.0), FROZEN_ALPHA, 2.0, lambda).unwrap();
            if a.coincident_atom(p).is_none() {
                prop_assert!((b.g_at(p) - 2.0 * a.g_at(p)).abs() <= 1e-12 * a.g_at(p).abs().max(1.0));
                prop_assert!((b.ghat_at(p) - 2.0 * a.ghat_at(p)).abs() <= 1e-12 * a.ghat_at(p).abs().max(1.0));
                let (ga, gb) = (a.grad_g_at(p), b.grad_g_at(p));
                let (ha, hb) = (a.grad_ghat_at(p), b.grad_ghat_at(p));
                prop_assert!(norm(sub(gb, scale(ga, 2.0))) <= 1e-12 * norm(ga).max(1.0));
                prop_assert!(norm(sub(hb, scale(ha, 2.0))) <= 1e-12 * norm(ha).max(1.0));
            }
        }

        #[test]
        fn ghat_is_bounded_by_g_for_positive_charge(r in 0.01f64..100.0, lambda in 0.1f64..100.0) {
            let ctx = unit_ion(lambda);
            let p = [r, 0.0, 0.0];
            prop_assert!(ctx.ghat_at(p) > 0.0);
            prop_assert!(ctx.ghat_at(p) <= ctx.g_at(p));
        }
    }
}
