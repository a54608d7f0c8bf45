//! Temperature-dependent thermophysical properties.
//!
//! Properties are piecewise-linear lookup tables with separate solid and
//! liquid branches, blended over the phase-transition interval by the
//! fraction of liquid material. Lookups return the interpolated value and
//! the table slope so PDE residuals can expand conduction terms by the
//! chain rule without differentiating through the table.
//!
//! Units are mm-ms-A-K throughout: `alpha` mm²/ms, `kappa` K·mm⁴/(A²·ms),
//! `beta` 1/K, `lambda_th` W/(mm·K).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Solid/liquid transition window with a monotone liquid-fraction function.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhaseBlend {
    /// Solidus temperature in °C.
    pub t_sol: f64,
    /// Liquidus temperature in °C.
    pub t_liq: f64,
}

impl Default for PhaseBlend {
    fn default() -> Self {
        Self { t_sol: 630.0, t_liq: 660.0 }
    }
}

impl PhaseBlend {
    /// Liquid fraction χ(T): 0 below solidus, 1 above liquidus, linear between.
    pub fn liquid_fraction(&self, t: f64) -> f64 {
        ((t - self.t_sol) / (self.t_liq - self.t_sol)).clamp(0.0, 1.0)
    }

    /// dχ/dT inside the transition window, 0 outside.
    pub fn liquid_fraction_slope(&self, t: f64) -> f64 {
        if t > self.t_sol && t < self.t_liq {
            1.0 / (self.t_liq - self.t_sol)
        } else {
            0.0
        }
    }
}

/// Phase transition rule: solid value below solidus, liquid value above
/// liquidus, χ-weighted combination between.
pub fn blend(f_sol: f64, f_liq: f64, t: f64, pb: &PhaseBlend) -> f64 {
    let chi = pb.liquid_fraction(t);
    (1.0 - chi) * f_sol + chi * f_liq
}

/// Tabulated property selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Alpha,
    Kappa,
    Beta,
    LambdaTh,
}

/// One piecewise-linear branch: strictly increasing temperature grid plus
/// one value column per property.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Branch {
    t: Vec<f64>,
    alpha: Vec<f64>,
    kappa: Vec<f64>,
    beta: Vec<f64>,
    lambda_th: Vec<f64>,
}

impl Branch {
    fn column(&self, prop: Property) -> &[f64] {
        match prop {
            Property::Alpha => &self.alpha,
            Property::Kappa => &self.kappa,
            Property::Beta => &self.beta,
            Property::LambdaTh => &self.lambda_th,
        }
    }

    /// Interpolated value and segment slope; clamped with zero slope outside
    /// the grid.
    fn interp(&self, prop: Property, t: f64) -> (f64, f64) {
        let ts = &self.t;
        let vs = self.column(prop);
        let n = ts.len();
        if t <= ts[0] {
            return (vs[0], 0.0);
        }
        if t >= ts[n - 1] {
            return (vs[n - 1], 0.0);
        }
        // Index of the segment [t_i, t_{i+1}) containing t.
        let i = ts.partition_point(|&x| x <= t) - 1;
        let slope = (vs[i + 1] - vs[i]) / (ts[i + 1] - ts[i]);
        (vs[i] + slope * (t - ts[i]), slope)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.t.is_empty() {
            return Err(Error::Config(format!("material table: empty {name} branch")));
        }
        for w in self.t.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config(format!(
                    "material table: {name} temperatures not strictly increasing at {} °C",
                    w[1]
                )));
            }
        }
        for prop in [Property::Alpha, Property::Kappa, Property::Beta, Property::LambdaTh] {
            if self.column(prop).len() != self.t.len() {
                return Err(Error::Config(format!("material table: ragged {name} branch")));
            }
            if self.column(prop).iter().any(|v| !v.is_finite() || *v <= 0.0) {
                return Err(Error::Config(format!(
                    "material table: non-positive or non-finite value in {name} branch"
                )));
            }
        }
        Ok(())
    }
}

/// Per-point property set produced by [`MaterialTable::update_parameters`].
///
/// `dlambda_dt` is the slope of `lambda_th` with respect to temperature in
/// W/(mm·K²); it is zero while the material gate is closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointProps {
    pub alpha: f64,
    pub kappa: f64,
    pub beta: f64,
    pub lambda_th: f64,
    pub dlambda_dt: f64,
}

/// Temperature-indexed thermophysical property table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaterialTable {
    sol: Branch,
    liq: Branch,
    pub phase: PhaseBlend,
}

impl MaterialTable {
    /// Blended lookup: value and temperature derivative of a property.
    ///
    /// Below the solidus this is the solid branch, above the liquidus the
    /// liquid branch, and inside the window the χ-weighted blend whose
    /// derivative picks up the χ'·(liq−sol) term. Outside either grid the
    /// value clamps with zero slope.
    pub fn lookup(&self, prop: Property, t: f64) -> (f64, f64) {
        if t <= self.phase.t_sol {
            return self.sol.interp(prop, t);
        }
        if t >= self.phase.t_liq {
            return self.liq.interp(prop, t);
        }
        let (vs, ss) = self.sol.interp(prop, t);
        let (vl, sl) = self.liq.interp(prop, t);
        let chi = self.phase.liquid_fraction(t);
        let dchi = self.phase.liquid_fraction_slope(t);
        let value = (1.0 - chi) * vs + chi * vl;
        let slope = (1.0 - chi) * ss + chi * sl + dchi * (vl - vs);
        (value, slope)
    }

    /// Gated per-point update: with the gate closed every point receives the
    /// constant room-temperature property set (zero λ-slope); with it open,
    /// each point is looked up at its own predicted temperature.
    pub fn update_parameters(&self, t_hat: &[f64], gate: bool) -> Vec<PointProps> {
        if !gate {
            let room = self.props_at(ROOM_TEMP_C);
            let frozen = PointProps { dlambda_dt: 0.0, ..room };
            return vec![frozen; t_hat.len()];
        }
        t_hat.iter().map(|&t| self.props_at(t)).collect()
    }

    /// All properties at one temperature.
    pub fn props_at(&self, t: f64) -> PointProps {
        let (alpha, _) = self.lookup(Property::Alpha, t);
        let (kappa, _) = self.lookup(Property::Kappa, t);
        let (beta, _) = self.lookup(Property::Beta, t);
        let (lambda_th, dlambda_dt) = self.lookup(Property::LambdaTh, t);
        PointProps { alpha, kappa, beta, lambda_th, dlambda_dt }
    }

    /// Volumetric heat capacity ρ·c_p in J/(mm³·K), derived from λ_th/α so
    /// the table stays internally consistent.
    pub fn rho_cp(&self, t: f64) -> f64 {
        let (lambda, _) = self.lookup(Property::LambdaTh, t);
        let (alpha, _) = self.lookup(Property::Alpha, t);
        lambda * 1e-3 / alpha
    }

    /// Electric resistivity ρ_el in Ω·mm, reconstructed as κ·ρc_p.
    pub fn rho_el(&self, t: f64) -> f64 {
        let (kappa, _) = self.lookup(Property::Kappa, t);
        kappa * self.rho_cp(t) * 1e3
    }

    /// Load from CSV with header `T_C,alpha,kappa,beta,lambda_th,phase`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)
            .map_err(|e| Error::Config(format!("material table {}: {e}", path.display())))?;
        let mut sol = Branch { t: vec![], alpha: vec![], kappa: vec![], beta: vec![], lambda_th: vec![] };
        let mut liq = sol.clone();
        for (idx, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Data(format!("material table row {}: {e}", idx + 2)))?;
            if rec.len() != 6 {
                return Err(Error::Data(format!(
                    "material table row {}: expected 6 columns, got {}",
                    idx + 2,
                    rec.len()
                )));
            }
            let num = |i: usize| -> Result<f64> {
                rec[i].trim().parse::<f64>().map_err(|_| {
                    Error::Data(format!("material table row {}: bad number {:?}", idx + 2, &rec[i]))
                })
            };
            let branch = match rec[5].trim() {
                "sol" => &mut sol,
                "liq" => &mut liq,
                other => {
                    return Err(Error::Data(format!(
                        "material table row {}: phase must be sol or liq, got {other:?}",
                        idx + 2
                    )))
                }
            };
            branch.t.push(num(0)?);
            branch.alpha.push(num(1)?);
            branch.kappa.push(num(2)?);
            branch.beta.push(num(3)?);
            branch.lambda_th.push(num(4)?);
        }
        let table = Self { sol, liq, phase: PhaseBlend::default() };
        table.validate()?;
        Ok(table)
    }

    /// Write the table back out in the CSV interchange format.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("T_C,alpha,kappa,beta,lambda_th,phase\n");
        for (branch, tag) in [(&self.sol, "sol"), (&self.liq, "liq")] {
            for i in 0..branch.t.len() {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    branch.t[i], branch.alpha[i], branch.kappa[i], branch.beta[i], branch.lambda_th[i], tag
                ));
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        self.sol.validate("sol")?;
        self.liq.validate("liq")?;
        let t_min = self.sol.t[0].min(self.liq.t[0]);
        let t_max = self.sol.t.last().unwrap().max(*self.liq.t.last().unwrap());
        if t_min > 0.0 || t_max < 800.0 {
            return Err(Error::Config(format!(
                "material table must cover [0, 800] °C, got [{t_min}, {t_max}]"
            )));
        }
        Ok(())
    }

    /// Built-in AlMgSi default: branches anchored to the room-temperature
    /// values α=0.06 mm²/ms, κ=1.523e-5 K·mm⁴/(A²·ms), β=2.3e-5 1/K,
    /// λ_th=0.16 W/(mm·K), with smooth monotone trends to the liquidus and a
    /// distinct liquid branch. Sampled every 50 K.
    pub fn default_almgsi() -> Self {
        let line = |t: f64, v20: f64, v630: f64| v20 + (t - 20.0) * (v630 - v20) / 610.0;
        let mut sol = Branch { t: vec![], alpha: vec![], kappa: vec![], beta: vec![], lambda_th: vec![] };
        let mut t = 0.0;
        while t < 630.0 {
            sol.t.push(t);
            sol.alpha.push(line(t, 0.06, 0.075));
            sol.kappa.push(line(t, 1.523e-5, 3.05e-5));
            sol.beta.push(line(t, 2.3e-5, 2.75e-5));
            sol.lambda_th.push(line(t, 0.16, 0.185));
            t = if t == 0.0 { 20.0 } else { t + 50.0 };
        }
        sol.t.push(630.0);
        sol.alpha.push(0.075);
        sol.kappa.push(3.05e-5);
        sol.beta.push(2.75e-5);
        sol.lambda_th.push(0.185);

        let lf = |t: f64, v630: f64, v860: f64| v630 + (t - 630.0) * (v860 - v630) / 230.0;
        let mut liq = Branch { t: vec![], alpha: vec![], kappa: vec![], beta: vec![], lambda_th: vec![] };
        let mut t = 630.0;
        while t <= 860.0 {
            liq.t.push(t);
            liq.alpha.push(lf(t, 0.035, 0.040));
            liq.kappa.push(lf(t, 4.2e-5, 4.6e-5));
            liq.beta.push(2.8e-5);
            liq.lambda_th.push(lf(t, 0.090, 0.095));
            t += 50.0;
        }
        let table = Self { sol, liq, phase: PhaseBlend::default() };
        debug_assert!(table.validate().is_ok());
        table
    }
}

/// Room temperature in °C (Table of typical values).
pub const ROOM_TEMP_C: f64 = 20.0;

/// Vickers hardness: 430 N/mm² at 20 °C decreasing linearly to 0 at the
/// liquidus, clamped outside.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HardnessModel {
    pub h_ref: f64,
    pub t_ref: f64,
    pub t_liq: f64,
}

impl Default for HardnessModel {
    fn default() -> Self {
        Self { h_ref: 430.0, t_ref: 20.0, t_liq: 660.0 }
    }
}

impl HardnessModel {
    pub fn hardness(&self, t: f64) -> f64 {
        let frac = (self.t_liq - t) / (self.t_liq - self.t_ref);
        self.h_ref * frac.clamp(0.0, 1.0)
    }
}
