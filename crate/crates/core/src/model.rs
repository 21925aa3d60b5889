//! Physical constants, ion species, solvent parameters and the fixed-charge
//! molecule, plus PQR ingestion.
//!
//! Lengths are in Å, bulk concentrations in mol/L and potentials are the
//! dimensionless `e_c Φ / (k_B T)`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("temperature must be positive, got {0} K")]
    NonPositiveTemperature(f64),
    #[error("ion species list is empty")]
    NoSpecies,
    #[error("invalid ion species: {0}")]
    InvalidSpecies(String),
    #[error("invalid permittivities: {0}")]
    Permittivity(String),
    #[error("correlation length lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("size scaling parameter v0 must be positive, got {0}")]
    NonPositiveV0(f64),
    #[error("molecule has no atoms")]
    EmptyMolecule,
    #[error("invalid atom {index}: {reason}")]
    InvalidAtom { index: usize, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PqrError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("no ATOM/HETATM records found")]
    EmptyMolecule,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Scalar constants of the rescaled model.
///
/// `alpha` scales the fixed charges, `beta` the ionic charge density and
/// `gamma` converts mol/L into 1/Å³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub boltzmann: f64,
    pub avogadro: f64,
    pub elem_charge: f64,
    pub vacuum_permittivity: f64,
}

pub const BOLTZMANN: f64 = 1.380648813e-23;
pub const AVOGADRO: f64 = 6.02214129e23;
pub const ELEMENTARY_CHARGE: f64 = 1.602176565e-19;
pub const VACUUM_PERMITTIVITY: f64 = 8.854187817e-12;
pub const ROOM_TEMPERATURE: f64 = 298.15;

/// Frozen values at 298.15 K, kept bit-stable for tests and reports.
pub const FROZEN_ALPHA: f64 = 7042.93990033;
pub const FROZEN_BETA: f64 = 4.24135792;
pub const FROZEN_GAMMA: f64 = 6.02214129e-4;

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            alpha: FROZEN_ALPHA,
            beta: FROZEN_BETA,
            gamma: FROZEN_GAMMA,
            temperature: ROOM_TEMPERATURE,
            boltzmann: BOLTZMANN,
            avogadro: AVOGADRO,
            elem_charge: ELEMENTARY_CHARGE,
            vacuum_permittivity: VACUUM_PERMITTIVITY,
        }
    }
}

/// Recompute the constants from SI values at the given temperature.
pub fn derive_constants(temperature: f64) -> Result<PhysicalConstants, ModelError> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(ModelError::NonPositiveTemperature(temperature));
    }
    let e2 = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE;
    let denom = VACUUM_PERMITTIVITY * BOLTZMANN * temperature;
    Ok(PhysicalConstants {
        alpha: 1e10 * e2 / denom,
        beta: AVOGADRO * e2 / (1e17 * denom),
        gamma: 1e-27 * AVOGADRO,
        temperature,
        ..PhysicalConstants::default()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IonSpecies {
    pub name: String,
    pub charge_number: i32,
    /// mol/L
    pub bulk_concentration: f64,
    /// Å
    pub radius: f64,
    /// Å³, volume of the hydrated sphere.
    pub volume: f64,
}

impl IonSpecies {
    /// A radius of zero gives a point ion (zero volume).
    pub fn new(
        name: impl Into<String>,
        charge_number: i32,
        bulk_concentration: f64,
        radius: f64,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if !(bulk_concentration >= 0.0) || !bulk_concentration.is_finite() {
            return Err(ModelError::InvalidSpecies(format!(
                "{name}: bulk concentration must be non-negative, got {bulk_concentration}"
            )));
        }
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(ModelError::InvalidSpecies(format!(
                "{name}: radius must be non-negative, got {radius}"
            )));
        }
        Ok(Self {
            name,
            charge_number,
            bulk_concentration,
            radius,
            volume: 4.0 / 3.0 * PI * radius.powi(3),
        })
    }

    /// Same species with zero volume.
    pub fn as_point_ion(&self) -> Self {
        Self {
            radius: 0.0,
            volume: 0.0,
            ..self.clone()
        }
    }
}

/// The four-species mixture of 0.1 mol/L KNO3 and 0.1 mol/L NaCl with
/// hydrated radii.
pub fn default_species() -> Vec<IonSpecies> {
    [("Cl", -1, 3.32), ("NO3", -1, 3.35), ("K", 1, 3.58), ("Na", 1, 3.31)]
        .into_iter()
        .map(|(name, z, r)| IonSpecies::new(name, z, 0.1, r).expect("valid default species"))
        .collect()
}

/// Everything on the solution side of the interface.
#[derive(Debug, Clone, PartialEq)]
pub struct SolventModel {
    pub species: Vec<IonSpecies>,
    pub v_bar: f64,
    pub v0: f64,
    pub eps_p: f64,
    pub eps_s: f64,
    pub eps_inf: f64,
    pub lambda: f64,
    pub ionic_strength: f64,
    pub kappa_sq: f64,
    pub upsilon: f64,
    pub constants: PhysicalConstants,
}

/// Permittivities and correlation length used throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DielectricParams {
    pub eps_p: f64,
    pub eps_s: f64,
    pub eps_inf: f64,
    pub lambda: f64,
}

impl Default for DielectricParams {
    fn default() -> Self {
        Self {
            eps_p: 2.0,
            eps_s: 80.0,
            eps_inf: 1.8,
            lambda: 15.0,
        }
    }
}

pub fn build_solvent_model(
    species: Vec<IonSpecies>,
    dielectric: DielectricParams,
    v0_override: Option<f64>,
    constants: PhysicalConstants,
) -> Result<SolventModel, ModelError> {
    let DielectricParams {
        eps_p,
        eps_s,
        eps_inf,
        lambda,
    } = dielectric;
    if species.is_empty() {
        return Err(ModelError::NoSpecies);
    }
    if !(eps_p > 0.0) {
        return Err(ModelError::Permittivity(format!("eps_p must be positive, got {eps_p}")));
    }
    if !(eps_inf > 0.0) {
        return Err(ModelError::Permittivity(format!(
            "eps_inf must be positive, got {eps_inf}"
        )));
    }
    if eps_inf > eps_s {
        return Err(ModelError::Permittivity(format!(
            "eps_inf ({eps_inf}) must not exceed eps_s ({eps_s})"
        )));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(ModelError::NonPositiveLambda(lambda));
    }

    let n = species.len() as f64;
    let v_bar = species.iter().map(|s| s.volume).sum::<f64>() / n;
    let v0 = match v0_override {
        Some(v) if !(v > 0.0) => return Err(ModelError::NonPositiveV0(v)),
        Some(v) => v,
        None => species.iter().map(|s| s.volume).fold(f64::INFINITY, f64::min),
    };
    if v_bar > 0.0 && !(v0 > 0.0) {
        return Err(ModelError::NonPositiveV0(v0));
    }

    let ionic_strength = 0.5
        * species
            .iter()
            .map(|s| f64::from(s.charge_number).powi(2) * s.bulk_concentration)
            .sum::<f64>();
    let kappa_sq = 2.0 * constants.beta * ionic_strength;

    let mut model = SolventModel {
        species,
        v_bar,
        v0,
        eps_p,
        eps_s,
        eps_inf,
        lambda,
        ionic_strength,
        kappa_sq,
        upsilon: 0.0,
        constants,
    };
    let total_bulk: f64 = model.species.iter().map(|s| s.bulk_concentration).sum();
    model.upsilon = kappa_sq / (1.0 + model.crowding() * total_bulk);

    let net = model.net_bulk_charge();
    if net.abs() > 1e-12 {
        log::warn!("solvent is not electro-neutral: sum Z_i c_i^b = {net}");
    }
    Ok(model)
}

impl SolventModel {
    /// `gamma * v_bar^2 / v0`, the coefficient of the size-modified
    /// denominator. Zero when every ion is a point charge.
    pub fn crowding(&self) -> f64 {
        if self.v_bar == 0.0 {
            0.0
        } else {
            self.constants.gamma * self.v_bar * self.v_bar / self.v0
        }
    }

    pub fn net_bulk_charge(&self) -> f64 {
        self.species
            .iter()
            .map(|s| f64::from(s.charge_number) * s.bulk_concentration)
            .sum()
    }

    pub fn is_electroneutral(&self) -> bool {
        self.net_bulk_charge().abs() <= 1e-12
    }

    /// Copy with every ion volume set to zero.
    pub fn with_point_ions(&self) -> SolventModel {
        let species = self.species.iter().map(IonSpecies::as_point_ion).collect();
        build_solvent_model(species, self.dielectric(), None, self.constants)
            .expect("point-ion reduction of a valid model is valid")
    }

    /// Copy with `eps_inf = eps_s` (no nonlocal correlation).
    pub fn localized(&self) -> SolventModel {
        SolventModel {
            eps_inf: self.eps_s,
            ..self.clone()
        }
    }

    /// Copy with every bulk concentration multiplied by `factor`.
    pub fn scaled_concentrations(&self, factor: f64) -> Result<SolventModel, ModelError> {
        let species = self
            .species
            .iter()
            .map(|s| IonSpecies::new(s.name.clone(), s.charge_number, s.bulk_concentration * factor, s.radius))
            .collect::<Result<Vec<_>, _>>()?;
        build_solvent_model(species, self.dielectric(), Some(self.v0).filter(|v| *v > 0.0), self.constants)
    }

    pub fn dielectric(&self) -> DielectricParams {
        DielectricParams {
            eps_p: self.eps_p,
            eps_s: self.eps_s,
            eps_inf: self.eps_inf,
            lambda: self.lambda,
        }
    }

    pub fn is_local(&self) -> bool {
        self.eps_inf == self.eps_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub position: Vec3,
    /// Partial charge in units of e_c.
    pub charge: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    atoms: Vec<Atom>,
}

impl Molecule {
    pub fn new(atoms: Vec<Atom>) -> Result<Self, ModelError> {
        if atoms.is_empty() {
            return Err(ModelError::EmptyMolecule);
        }
        let mut seen = HashSet::with_capacity(atoms.len());
        for (index, atom) in atoms.iter().enumerate() {
            if atom.position.iter().any(|c| !c.is_finite()) {
                return Err(ModelError::InvalidAtom {
                    index,
                    reason: "non-finite position".into(),
                });
            }
            if !(atom.radius >= 0.0) {
                return Err(ModelError::InvalidAtom {
                    index,
                    reason: format!("negative radius {}", atom.radius),
                });
            }
            if !atom.charge.is_finite() {
                return Err(ModelError::InvalidAtom {
                    index,
                    reason: "non-finite charge".into(),
                });
            }
            // +0.0 and -0.0 must collide
            let key = atom.position.map(|c| (c + 0.0).to_bits());
            if !seen.insert(key) {
                return Err(ModelError::InvalidAtom {
                    index,
                    reason: "duplicate position".into(),
                });
            }
        }
        Ok(Self { atoms })
    }

    /// A single ion of the given charge at `position`.
    pub fn single_ion(position: Vec3, charge: f64, radius: f64) -> Self {
        Self::new(vec![Atom {
            position,
            charge,
            radius,
        }])
        .expect("single finite atom")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn n_p(&self) -> usize {
        self.atoms.len()
    }

    pub fn total_charge(&self) -> f64 {
        self.atoms.iter().map(|a| a.charge).sum()
    }

    /// Same geometry with every charge multiplied by `factor`.
    pub fn scaled_charges(&self, factor: f64) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    charge: a.charge * factor,
                    ..*a
                })
                .collect(),
        }
    }

    /// Serialize as whitespace-delimited PQR; values use shortest
    /// round-trip formatting.
    pub fn to_pqr(&self) -> String {
        let mut out = String::new();
        for (i, a) in self.atoms.iter().enumerate() {
            let [x, y, z] = a.position;
            let _ = writeln!(
                out,
                "ATOM {} X MOL 1 {:?} {:?} {:?} {:?} {:?}",
                i + 1,
                x,
                y,
                z,
                a.charge,
                a.radius
            );
        }
        out.push_str("END\n");
        out
    }
}

/// Parse whitespace-delimited PQR text. Only ATOM and HETATM records are
/// read; the last five fields are x, y, z, charge and radius.
pub fn parse_pqr(text: &str) -> Result<Molecule, PqrError> {
    let mut atoms = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first() {
            Some(&"ATOM") | Some(&"HETATM") => {}
            _ => continue,
        }
        if fields.len() < 10 {
            return Err(PqrError::Malformed {
                line: line_no,
                reason: format!("expected at least 10 fields, found {}", fields.len()),
            });
        }
        let tail = &fields[fields.len() - 5..];
        let mut values = [0.0; 5];
        for (slot, (text, name)) in values
            .iter_mut()
            .zip(tail.iter().zip(["x", "y", "z", "charge", "radius"]))
        {
            *slot = text.parse::<f64>().map_err(|_| PqrError::Malformed {
                line: line_no,
                reason: format!("{name} field {text:?} is not a number"),
            })?;
        }
        atoms.push(Atom {
            position: [values[0], values[1], values[2]],
            charge: values[3],
            radius: values[4],
        });
    }
    if atoms.is_empty() {
        return Err(PqrError::EmptyMolecule);
    }
    Ok(Molecule::new(atoms)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn paper_solvent() -> SolventModel {
        build_solvent_model(
            default_species(),
            DielectricParams::default(),
            None,
            PhysicalConstants::default(),
        )
        .unwrap()
    }

    #[test]
    fn derived_constants_match_frozen_values() {
        let c = derive_constants(298.15).unwrap();
        assert!((c.alpha - 7042.93990033).abs() < 5e-9);
        assert!((c.beta - 4.24135792).abs() < 5e-9);
        assert!((c.gamma - 6.02214129e-4).abs() < 1e-16);
    }

    #[test]
    fn gamma_is_temperature_independent() {
        let a = derive_constants(250.0).unwrap();
        let b = derive_constants(350.0).unwrap();
        assert_eq!(a.gamma, b.gamma);
    }

    #[test]
    fn non_positive_temperature_is_rejected() {
        assert_eq!(
            derive_constants(0.0),
            Err(ModelError::NonPositiveTemperature(0.0))
        );
        assert!(derive_constants(-3.0).is_err());
        assert!(derive_constants(f64::NAN).is_err());
    }

    #[test]
    fn four_species_mixture_constants() {
        let s = paper_solvent();
        assert!((s.v_bar - 163.715).abs() < 1e-3);
        assert_relative_eq!(s.v_bar, 163.715876, epsilon = 1e-6);
        assert_relative_eq!(s.v0, 151.905182, epsilon = 1e-6);
        assert_relative_eq!(s.kappa_sq, 1.69654317, epsilon = 1e-8);
        assert_relative_eq!(s.upsilon, 1.62737480, epsilon = 1e-8);
        assert_relative_eq!(s.ionic_strength, 0.2, epsilon = 1e-15);
        assert!(s.is_electroneutral());
    }

    #[test]
    fn zero_salt_has_no_screening() {
        let s = build_solvent_model(
            vec![IonSpecies::new("X", 1, 0.0, 2.0).unwrap()],
            DielectricParams::default(),
            None,
            PhysicalConstants::default(),
        )
        .unwrap();
        assert_eq!(s.ionic_strength, 0.0);
        assert_eq!(s.kappa_sq, 0.0);
        assert_eq!(s.upsilon, 0.0);
    }

    #[test]
    fn solvent_model_validation() {
        let d = DielectricParams::default();
        let c = PhysicalConstants::default();
        assert_eq!(
            build_solvent_model(vec![], d, None, c),
            Err(ModelError::NoSpecies)
        );
        let bad_lambda = DielectricParams { lambda: 0.0, ..d };
        assert!(matches!(
            build_solvent_model(default_species(), bad_lambda, None, c),
            Err(ModelError::NonPositiveLambda(_))
        ));
        let inverted = DielectricParams { eps_inf: 90.0, ..d };
        assert!(matches!(
            build_solvent_model(default_species(), inverted, None, c),
            Err(ModelError::Permittivity(_))
        ));
        let local = DielectricParams { eps_inf: 80.0, ..d };
        assert!(build_solvent_model(default_species(), local, None, c).unwrap().is_local());
    }

    #[test]
    fn v0_override_is_used() {
        let s = build_solvent_model(
            default_species(),
            DielectricParams::default(),
            Some(100.0),
            PhysicalConstants::default(),
        )
        .unwrap();
        assert_eq!(s.v0, 100.0);
        assert!(build_solvent_model(
            default_species(),
            DielectricParams::default(),
            Some(0.0),
            PhysicalConstants::default()
        )
        .is_err());
    }

    #[test]
    fn point_ions_remove_crowding() {
        let s = paper_solvent().with_point_ions();
        assert_eq!(s.v_bar, 0.0);
        assert_eq!(s.crowding(), 0.0);
        assert_eq!(s.upsilon, s.kappa_sq);
    }

    #[test]
    fn non_neutral_solvent_is_accepted() {
        let s = build_solvent_model(
            vec![IonSpecies::new("K", 1, 0.1, 3.0).unwrap()],
            DielectricParams::default(),
            None,
            PhysicalConstants::default(),
        )
        .unwrap();
        assert!(!s.is_electroneutral());
    }

    #[test]
    fn parse_single_atom_record() {
        let m = parse_pqr("ATOM 1 N ALA 1 0.0 0.0 0.0 -0.300 1.625").unwrap();
        assert_eq!(m.n_p(), 1);
        let a = m.atoms()[0];
        assert_eq!(a.position, [0.0, 0.0, 0.0]);
        assert_eq!(a.charge, -0.3);
        assert_eq!(a.radius, 1.625);
    }

    #[test]
    fn non_atom_records_are_skipped() {
        let text = "REMARK generated\n\
                    ATOM 1 N ALA A 1 1.0 2.0 3.0 -0.3 1.6\n\
                    HETATM 2 O HOH A 2 4.0 5.0 6.0 0.4 1.7\n";
        let m = parse_pqr(text).unwrap();
        assert_eq!(m.n_p(), 2);
        assert_eq!(m.atoms()[1].position, [4.0, 5.0, 6.0]);
    }

    #[test]
    fn bad_coordinate_reports_line() {
        let text = "REMARK x\nATOM 1 N ALA 1 0.0 0.0 xyz -0.3 1.6\n";
        match parse_pqr(text) {
            Err(PqrError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        assert_eq!(parse_pqr("REMARK only\nEND\n"), Err(PqrError::EmptyMolecule));
    }

    #[test]
    fn duplicate_atoms_are_rejected() {
        let text = "ATOM 1 N ALA 1 0.0 0.0 0.0 -0.3 1.6\nATOM 2 N ALA 1 0.0 0.0 -0.0 0.3 1.6\n";
        assert!(matches!(
            parse_pqr(text),
            Err(PqrError::Model(ModelError::InvalidAtom { index: 1, .. }))
        ));
    }

    proptest! {
        #[test]
        fn alpha_and_beta_decrease_with_temperature(t in 1.0f64..1000.0, dt in 0.1f64..100.0) {
            let a = derive_constants(t).unwrap();
            let b = derive_constants(t + dt).unwrap();
            prop_assert!(b.alpha < a.alpha);
            prop_assert!(b.beta < a.beta);
        }

        #[test]
        fn upsilon_never_exceeds_kappa_sq(
            conc in proptest::collection::vec(0.0f64..2.0, 1..5),
            radius in 0.0f64..5.0,
        ) {
            let species: Vec<_> = conc
                .iter()
                .enumerate()
                .map(|(i, c)| IonSpecies::new(format!("s{i}"), if i % 2 == 0 { 1 } else { -2 }, *c, radius).unwrap())
                .collect();
            let s = build_solvent_model(species, DielectricParams::default(), None, PhysicalConstants::default()).unwrap();
            prop_assert!(s.upsilon <= s.kappa_sq);
            let all_zero = conc.iter().all(|c| *c == 0.0);
            if s.v_bar == 0.0 || all_zero {
                prop_assert_eq!(s.upsilon, s.kappa_sq);
            } else {
                prop_assert!(s.upsilon < s.kappa_sq);
            }
        }

        #[test]
        fn pqr_round_trip(
            atoms in proptest::collection::vec(
                ((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0), -2.0f64..2.0, 0.0f64..3.0),
                1..20,
            )
        ) {
            let atoms: Vec<Atom> = atoms
                .into_iter()
                .map(|((x, y, z), charge, radius)| Atom { position: [x, y, z], charge, radius })
                .collect();
            if let Ok(m) = Molecule::new(atoms) {
                let back = parse_pqr(&m.to_pqr()).unwrap();
                prop_assert_eq!(back, m);
            }
        }
    }
}
