use crate::model::SolventModel;

/// Values of the Boltzmann term at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoltzmannPoint {
    /// `A2 / A1`: net charge density in units of `beta`.
    pub source: f64,
    /// `(A1 A3 - gamma' A2^2) / A1^2`: derivative of `source` with respect
    /// to the potential, negated.
    pub derivative: f64,
}

/// Ionic charge density as a function of the total potential `u` at a
/// point. Every exponent `-Z_i u` is capped above at `tau`.
///
/// The size-modified form is
///
/// ```text
/// A1 = 1 + gamma' sum_j c_j e^{-Z_j u}
/// A2 = sum_i Z_i c_i e^{-Z_i u}
/// A3 = sum_i Z_i^2 c_i e^{-Z_i u}
/// ```
///
/// with `gamma' = gamma v_bar^2 / v0`. The point-ion form is the same
/// expression with `A1 = 1`, coded separately so the two can be compared.
#[derive(Debug, Clone, PartialEq)]
pub enum Integrand {
    SizeModified {
        charges: Vec<f64>,
        bulk: Vec<f64>,
        crowding: f64,
        tau: f64,
    },
    PointIon {
        charges: Vec<f64>,
        bulk: Vec<f64>,
        tau: f64,
    },
}

impl Integrand {
    pub fn size_modified(solvent: &SolventModel, tau: f64) -> Self {
        Integrand::SizeModified {
            charges: solvent.species.iter().map(|s| f64::from(s.charge_number)).collect(),
            bulk: solvent.species.iter().map(|s| s.bulk_concentration).collect(),
            crowding: solvent.crowding(),
            tau,
        }
    }

    pub fn point_ion(solvent: &SolventModel, tau: f64) -> Self {
        Integrand::PointIon {
            charges: solvent.species.iter().map(|s| f64::from(s.charge_number)).collect(),
            bulk: solvent.species.iter().map(|s| s.bulk_concentration).collect(),
            tau,
        }
    }

    pub fn tau(&self) -> f64 {
        match self {
            Integrand::SizeModified { tau, .. } | Integrand::PointIon { tau, .. } => *tau,
        }
    }

    /// True when every bulk concentration is zero, so the term vanishes.
    pub fn is_salt_free(&self) -> bool {
        match self {
            Integrand::SizeModified { bulk, .. } | Integrand::PointIon { bulk, .. } => bulk.iter().all(|&c| c == 0.0),
        }
    }

    /// Evaluate at total potential `u`. Returns `None` when `u` or the
    /// result is not finite.
    pub fn eval(&self, u: f64) -> Option<BoltzmannPoint> {
        if !u.is_finite() {
            return None;
        }
        let point = match self {
            Integrand::SizeModified {
                charges,
                bulk,
                crowding,
                tau,
            } => {
                let (mut a1, mut a2, mut a3) = (1.0, 0.0, 0.0);
                for (&z, &c) in charges.iter().zip(bulk) {
                    let ce = c * capped_exp(-z * u, *tau);
                    a1 += crowding * ce;
                    a2 += z * ce;
                    a3 += z * z * ce;
                }
                BoltzmannPoint {
                    source: a2 / a1,
                    derivative: (a1 * a3 - crowding * a2 * a2) / (a1 * a1),
                }
            }
            Integrand::PointIon { charges, bulk, tau } => {
                let (mut a2, mut a3) = (0.0, 0.0);
                for (&z, &c) in charges.iter().zip(bulk) {
                    let ce = c * capped_exp(-z * u, *tau);
                    a2 += z * ce;
                    a3 += z * z * ce;
                }
                BoltzmannPoint {
                    source: a2,
                    derivative: a3,
                }
            }
        };
        (point.source.is_finite() && point.derivative.is_finite()).then_some(point)
    }
}

/// `exp(min(s, tau))`.
pub(crate) fn capped_exp(s: f64, tau: f64) -> f64 {
    s.min(tau).exp()
}

/// Size-modified concentrations `c_i(u)` in mol/L, with the same exponent
/// cap as the solver.
pub fn concentrations_at(solvent: &SolventModel, u: f64, tau: f64) -> Vec<f64> {
    let gp = solvent.crowding();
    let weighted: Vec<f64> = solvent
        .species
        .iter()
        .map(|s| s.bulk_concentration * capped_exp(-f64::from(s.charge_number) * u, tau))
        .collect();
    let denom = 1.0 + gp * weighted.iter().sum::<f64>();
    weighted.into_iter().map(|w| w / denom).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_solvent_model, default_species, DielectricParams, PhysicalConstants};
    use proptest::prelude::*;

    fn solvent() -> SolventModel {
        build_solvent_model(default_species(), DielectricParams::default(), None, PhysicalConstants::default()).unwrap()
    }

    #[test]
    fn neutral_rest_state_has_no_charge() {
        let f = Integrand::size_modified(&solvent(), 40.0);
        let p = f.eval(0.0).unwrap();
        assert_eq!(p.source, 0.0);
        // at u = 0: A3 = sum Z^2 c = 0.4, A2 = 0, A1 = 1 + gamma' 0.4
        let s = solvent();
        assert!((p.derivative - 0.4 / (1.0 + s.crowding() * 0.4)).abs() < 1e-15);
        assert!((f.eval(0.0).unwrap().derivative * s.constants.beta - s.upsilon).abs() < 1e-12);
    }

    #[test]
    fn capping_equals_clamping_first() {
        let s = solvent();
        let f = Integrand::size_modified(&s, 40.0);
        // u = -50 gives exponent +50 for the cations
        let capped = f.eval(-50.0).unwrap();
        let clamped = f.eval(-40.0).unwrap();
        assert_eq!(capped.source.to_bits(), clamped.source.to_bits());
        assert_eq!(capped.derivative.to_bits(), clamped.derivative.to_bits());
        assert_eq!(capped_exp(50.0, 40.0).to_bits(), 40f64.exp().to_bits());
    }

    #[test]
    fn non_finite_potential_is_rejected() {
        let f = Integrand::size_modified(&solvent(), 40.0);
        assert!(f.eval(f64::NAN).is_none());
        assert!(f.eval(f64::INFINITY).is_none());
    }

    #[test]
    fn point_ion_form_matches_zero_volume_size_modified_form() {
        let s = solvent().with_point_ions();
        let a = Integrand::size_modified(&s, 40.0);
        let b = Integrand::point_ion(&s, 40.0);
        for u in [-3.0, -0.5, 0.0, 0.7, 2.0, 45.0] {
            let (pa, pb) = (a.eval(u).unwrap(), b.eval(u).unwrap());
            assert!((pa.source - pb.source).abs() <= 1e-12 * pb.source.abs().max(1.0));
            assert!((pa.derivative - pb.derivative).abs() <= 1e-12 * pb.derivative.abs().max(1.0));
        }
    }

    #[test]
    fn unit_potential_concentrations() {
        let c = concentrations_at(&solvent(), 0.0, 40.0);
        for ci in c {
            assert!((ci - 0.095923).abs() < 1e-6, "{ci}");
        }
    }

    proptest! {
        #[test]
        fn derivative_matches_finite_difference(u in -5.0f64..5.0) {
            let f = Integrand::size_modified(&solvent(), 40.0);
            let h = 1e-6;
            let fd = -(f.eval(u + h).unwrap().source - f.eval(u - h).unwrap().source) / (2.0 * h);
            let d = f.eval(u).unwrap().derivative;
            prop_assert!((fd - d).abs() <= 1e-6 * d.abs().max(1e-3));
        }

        #[test]
        fn derivative_is_positive(u in -30.0f64..30.0) {
            let f = Integrand::size_modified(&solvent(), 40.0);
            prop_assert!(f.eval(u).unwrap().derivative > 0.0);
        }

        #[test]
        fn saturation_bound(u in -60.0f64..60.0) {
            let s = solvent();
            let c = concentrations_at(&s, u, 40.0);
            prop_assert!(c.iter().all(|&ci| ci > 0.0));
            prop_assert!(s.crowding() * c.iter().sum::<f64>() < 1.0);
        }
    }
}
