//! Single-room thermal model: a five-node RC network (four wall nodes, one
//! room-air node) with a bilinear HVAC heat term, its analytic linearization
//! around a configured operating point, exact zero-order-hold discretization,
//! and a rule-based thermostat simulation used for smoke validation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::expm;

/// Number of wall nodes.
pub const N_WALLS: usize = 4;
/// Total state count: four walls plus the room-air node.
pub const N_STATES: usize = 5;
/// Index of the room-air state.
pub const ROOM: usize = 4;

/// HVAC actuator and air-side parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvacParams {
    /// Specific heat capacity of air, J/(kg·K).
    pub cp_j_per_kg_k: f64,
    /// Heating inlet air temperature, °C.
    pub t_in_heat_c: f64,
    /// Fan pressure difference, Pa.
    pub delta_p_pa: f64,
    /// Density of air, kg/m³.
    pub air_density_kg_per_m3: f64,
    /// Maximum mass flow rate, kg/s.
    pub mdot_max_kg_per_s: f64,
    /// Minimum mass flow rate, kg/s.
    pub mdot_min_kg_per_s: f64,
}

impl HvacParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cp_j_per_kg_k > 0.0) {
            return Err(Error::invalid("cp must be > 0"));
        }
        if !(self.air_density_kg_per_m3 > 0.0) {
            return Err(Error::invalid("air density must be > 0"));
        }
        if !(self.delta_p_pa >= 0.0) {
            return Err(Error::invalid("fan pressure difference must be >= 0"));
        }
        if !(self.mdot_min_kg_per_s >= 0.0) {
            return Err(Error::invalid("mdot_min must be >= 0"));
        }
        if !(self.mdot_min_kg_per_s <= self.mdot_max_kg_per_s) {
            return Err(Error::invalid("mdot_min must be <= mdot_max"));
        }
        if !self.t_in_heat_c.is_finite() {
            return Err(Error::NonFinite("t_in_heat_c".into()));
        }
        Ok(())
    }
}

/// Thermal capacitances and resistances of the RC network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomThermalParams {
    /// Thermal capacitance per wall node, J/K.
    pub wall_capacitance_j_per_k: [f64; N_WALLS],
    /// Room-air thermal capacitance, J/K.
    pub room_capacitance_j_per_k: f64,
    /// Wall-to-ambient thermal resistance, K/W.
    pub r_out_k_per_w: [f64; N_WALLS],
    /// Wall-to-room thermal resistance, K/W.
    pub r_in_k_per_w: [f64; N_WALLS],
    /// Effective solar aperture per wall, m²: irradiance (W/m²) times this
    /// gives the heat injected into the wall node.
    pub solar_gain_m2: [f64; N_WALLS],
}

impl RoomThermalParams {
    pub fn validate(&self) -> Result<()> {
        for c in self
            .wall_capacitance_j_per_k
            .iter()
            .chain(std::iter::once(&self.room_capacitance_j_per_k))
        {
            if !(*c > 0.0) || !c.is_finite() {
                return Err(Error::invalid("all capacitances must be finite and > 0"));
            }
        }
        for r in self.r_out_k_per_w.iter().chain(self.r_in_k_per_w.iter()) {
            if !(*r > 0.0) || !r.is_finite() {
                return Err(Error::invalid("all resistances must be finite and > 0"));
            }
        }
        for s in &self.solar_gain_m2 {
            if !(*s >= 0.0) || !s.is_finite() {
                return Err(Error::invalid("solar gain coefficients must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Per-state comfort band. Entries may be -inf / +inf where a bound is
/// inactive (typically the wall states).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComfortBounds {
    pub lower_c: [f64; N_STATES],
    pub upper_c: [f64; N_STATES],
}

impl ComfortBounds {
    pub fn validate(&self) -> Result<()> {
        for i in 0..N_STATES {
            let (lo, hi) = (self.lower_c[i], self.upper_c[i]);
            if lo.is_nan() || hi.is_nan() {
                return Err(Error::NonFinite(format!("comfort bound for state {i}")));
            }
            if lo.is_finite() && hi.is_finite() && !(lo < hi) {
                return Err(Error::invalid(format!(
                    "comfort lower bound must be below upper bound for state {i}"
                )));
            }
            if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::invalid(format!("comfort bound for state {i} excludes all values")));
            }
        }
        Ok(())
    }

    /// Midpoint of the room-air band, used as the default operating point
    /// and initial condition.
    pub fn room_midpoint_c(&self) -> f64 {
        let lo = self.lower_c[ROOM];
        let hi = self.upper_c[ROOM];
        if lo.is_finite() && hi.is_finite() {
            0.5 * (lo + hi)
        } else if lo.is_finite() {
            lo + 1.0
        } else if hi.is_finite() {
            hi - 1.0
        } else {
            20.0
        }
    }
}

/// Linearization point for the bilinear HVAC heat term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub t_room_op_c: f64,
    pub mdot_op_kg_per_s: f64,
}

/// One time sample of the exogenous disturbances, in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceSample {
    pub ambient_c: f64,
    /// Solar irradiance per wall, W/m², ordered N, E, S, W.
    pub solar_w_per_m2: [f64; N_WALLS],
    pub internal_w: f64,
}

/// Disturbance time series over the horizon.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisturbanceProfile {
    pub ambient_c: Vec<f64>,
    pub solar_w_per_m2: Vec<[f64; N_WALLS]>,
    pub internal_w: Vec<f64>,
}

impl DisturbanceProfile {
    pub fn len(&self) -> usize {
        self.ambient_c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ambient_c.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.solar_w_per_m2.len() != self.len() || self.internal_w.len() != self.len() {
            return Err(Error::dims(
                "disturbance series must all have the same length".into(),
            ));
        }
        for (k, s) in self.solar_w_per_m2.iter().enumerate() {
            if s.iter().any(|v| *v < 0.0) {
                return Err(Error::invalid(format!("negative solar irradiance at step {k}")));
            }
        }
        let all = self
            .ambient_c
            .iter()
            .chain(self.internal_w.iter())
            .chain(self.solar_w_per_m2.iter().flatten());
        for (k, v) in all.enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("disturbance entry {k}")));
            }
        }
        Ok(())
    }

    pub fn sample(&self, k: usize) -> DisturbanceSample {
        DisturbanceSample {
            ambient_c: self.ambient_c[k],
            solar_w_per_m2: self.solar_w_per_m2[k],
            internal_w: self.internal_w[k],
        }
    }

    /// Contiguous sub-profile `[start, start+len)`.
    pub fn window(&self, start: usize, len: usize) -> DisturbanceProfile {
        DisturbanceProfile {
            ambient_c: self.ambient_c[start..start + len].to_vec(),
            solar_w_per_m2: self.solar_w_per_m2[start..start + len].to_vec(),
            internal_w: self.internal_w[start..start + len].to_vec(),
        }
    }
}

/// Electrical power drawn by the HVAC at mass flow `mdot` and room
/// temperature `t_room`: heating power and fan power, both in W.
pub fn hvac_power(mdot: f64, t_room_c: f64, hvac: &HvacParams) -> Result<(f64, f64)> {
    if mdot < 0.0 {
        return Err(Error::invalid(format!("mass flow must be >= 0, got {mdot}")));
    }
    if !mdot.is_finite() || !t_room_c.is_finite() {
        return Err(Error::NonFinite("hvac_power input".into()));
    }
    let p_heat = mdot * hvac.cp_j_per_kg_k * (hvac.t_in_heat_c - t_room_c);
    let p_fan = mdot * hvac.delta_p_pa / hvac.air_density_kg_per_m3;
    Ok((p_heat, p_fan))
}

/// Right-hand side of the nonlinear room ODE.
///
/// Wall nodes exchange heat with ambient through `r_out` and with the room
/// through `r_in`, plus the solar injection; the room node collects the wall
/// heat, the HVAC term `mdot·cp·(T_in − T_room)` (bilinear in flow and room
/// temperature) and the internal gains.
pub fn nonlinear_derivative(
    thermal: &RoomThermalParams,
    hvac: &HvacParams,
    x: &DVector<f64>,
    mdot: f64,
    d: &DisturbanceSample,
) -> Result<DVector<f64>> {
    if x.len() != N_STATES {
        return Err(Error::dims(format!(
            "state vector must have {} entries, got {}",
            N_STATES,
            x.len()
        )));
    }
    if mdot < 0.0 {
        return Err(Error::invalid(format!("mass flow must be >= 0, got {mdot}")));
    }
    let mut dx = DVector::zeros(N_STATES);
    let t_room = x[ROOM];
    let mut wall_to_room = 0.0;
    for i in 0..N_WALLS {
        let to_ambient = (d.ambient_c - x[i]) / thermal.r_out_k_per_w[i];
        let to_room = (t_room - x[i]) / thermal.r_in_k_per_w[i];
        let solar = thermal.solar_gain_m2[i] * d.solar_w_per_m2[i];
        dx[i] = (to_ambient + to_room + solar) / thermal.wall_capacitance_j_per_k[i];
        wall_to_room += (x[i] - t_room) / thermal.r_in_k_per_w[i];
    }
    let hvac_heat = mdot * hvac.cp_j_per_kg_k * (hvac.t_in_heat_c - t_room);
    dx[ROOM] = (wall_to_room + hvac_heat + d.internal_w) / thermal.room_capacitance_j_per_k;
    Ok(dx)
}

/// Analytic Jacobians of the nonlinear dynamics at the operating point.
///
/// `A_c = ∂f/∂x` and `B_c = ∂f/∂mdot`, both evaluated at
/// `(T_room, mdot) = (t_room_op, mdot_op)`; `E_c` maps the equivalent
/// per-node disturbance heat input (see [`RoomModel::disturbance_vector`]).
/// The constant Taylor term `cp·mdot_op·T_room_op` that makes the affine
/// model exact at the operating point is not part of these matrices; it is
/// folded into the room channel of the disturbance vector.
pub fn linearize(
    thermal: &RoomThermalParams,
    hvac: &HvacParams,
    op: &OperatingPoint,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    thermal.validate()?;
    hvac.validate()?;
    if op.mdot_op_kg_per_s < hvac.mdot_min_kg_per_s - 1e-12
        || op.mdot_op_kg_per_s > hvac.mdot_max_kg_per_s + 1e-12
    {
        return Err(Error::invalid(
            "operating-point mass flow must lie within [mdot_min, mdot_max]",
        ));
    }
    let cr = thermal.room_capacitance_j_per_k;
    let mut a_c = DMatrix::<f64>::zeros(N_STATES, N_STATES);
    let mut sum_rin_inv = 0.0;
    for i in 0..N_WALLS {
        let cw = thermal.wall_capacitance_j_per_k[i];
        let rin = thermal.r_in_k_per_w[i];
        let rout = thermal.r_out_k_per_w[i];
        a_c[(i, i)] = -(1.0 / rout + 1.0 / rin) / cw;
        a_c[(i, ROOM)] = 1.0 / (rin * cw);
        a_c[(ROOM, i)] = 1.0 / (rin * cr);
        sum_rin_inv += 1.0 / rin;
    }
    a_c[(ROOM, ROOM)] = -(sum_rin_inv + op.mdot_op_kg_per_s * hvac.cp_j_per_kg_k) / cr;

    let mut b_c = DMatrix::<f64>::zeros(N_STATES, 1);
    b_c[(ROOM, 0)] = hvac.cp_j_per_kg_k * (hvac.t_in_heat_c - op.t_room_op_c) / cr;

    let mut e_c = DMatrix::<f64>::zeros(N_STATES, N_STATES);
    for i in 0..N_WALLS {
        e_c[(i, i)] = 1.0 / thermal.wall_capacitance_j_per_k[i];
    }
    e_c[(ROOM, ROOM)] = 1.0 / cr;

    Ok((a_c, b_c, e_c))
}

/// Exact zero-order-hold discretization of `x' = A_c x + B_c u + E_c d`.
///
/// Computed as one matrix exponential of the block-augmented system, so the
/// input and disturbance channels get the exact ZOH integrals.
pub fn discretize(
    a_c: &DMatrix<f64>,
    b_c: &DMatrix<f64>,
    e_c: &DMatrix<f64>,
    dt_s: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let n = a_c.nrows();
    if a_c.ncols() != n || b_c.nrows() != n || e_c.nrows() != n {
        return Err(Error::dims("discretize: inconsistent matrix dimensions"));
    }
    if !(dt_s > 0.0) {
        return Err(Error::invalid("discretization step must be > 0"));
    }
    let nu = b_c.ncols();
    let nd = e_c.ncols();
    let total = n + nu + nd;
    let mut aug = DMatrix::<f64>::zeros(total, total);
    aug.view_mut((0, 0), (n, n)).copy_from(a_c);
    aug.view_mut((0, n), (n, nu)).copy_from(b_c);
    aug.view_mut((0, n + nu), (n, nd)).copy_from(e_c);
    let e = expm(&(aug * dt_s))?;
    let a = e.view((0, 0), (n, n)).into_owned();
    let b = e.view((0, n), (n, nu)).into_owned();
    let d = e.view((0, n + nu), (n, nd)).into_owned();
    Ok((a, b, d))
}

/// A fully assembled room model: physical parameters, comfort band and both
/// the continuous-time and exactly discretized linear dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomModel {
    pub hvac: HvacParams,
    pub thermal: RoomThermalParams,
    pub comfort: ComfortBounds,
    pub dt_s: f64,
    pub linearization: OperatingPoint,
    /// Continuous-time Jacobians.
    pub a_c: DMatrix<f64>,
    pub b_c: DMatrix<f64>,
    pub e_c: DMatrix<f64>,
    /// Discrete-time (ZOH) counterparts; `b` is the single merged input
    /// column (fan and heat channel coupled through the fixed inlet
    /// temperature).
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub e: DMatrix<f64>,
    /// Constant heat folded into the room disturbance channel so the affine
    /// linearized model is exact at the operating point, W.
    pub heat_offset_w: f64,
}

impl RoomModel {
    pub fn new(
        hvac: HvacParams,
        thermal: RoomThermalParams,
        comfort: ComfortBounds,
        dt_s: f64,
        linearization: Option<OperatingPoint>,
    ) -> Result<Self> {
        hvac.validate()?;
        thermal.validate()?;
        comfort.validate()?;
        let op = linearization.unwrap_or(OperatingPoint {
            t_room_op_c: comfort.room_midpoint_c(),
            mdot_op_kg_per_s: 0.5 * hvac.mdot_max_kg_per_s,
        });
        let (a_c, b_c, e_c) = linearize(&thermal, &hvac, &op)?;
        let (a, b, e) = discretize(&a_c, &b_c, &e_c, dt_s)?;
        let heat_offset_w = hvac.cp_j_per_kg_k * op.mdot_op_kg_per_s * op.t_room_op_c;
        Ok(RoomModel {
            hvac,
            thermal,
            comfort,
            dt_s,
            linearization: op,
            a_c,
            b_c,
            e_c,
            a,
            b,
            e,
            heat_offset_w,
        })
    }

    pub fn n_states(&self) -> usize {
        N_STATES
    }

    /// Equivalent per-node disturbance heat input, W, for one sample.
    ///
    /// `scale` multiplies the physical disturbance (used for the per-room
    /// deviation factors); the linearization offset is bookkeeping, not
    /// weather, and is never scaled.
    pub fn disturbance_vector(&self, d: &DisturbanceSample, scale: f64) -> DVector<f64> {
        let mut v = DVector::zeros(N_STATES);
        for i in 0..N_WALLS {
            v[i] = scale
                * (d.ambient_c / self.thermal.r_out_k_per_w[i]
                    + self.thermal.solar_gain_m2[i] * d.solar_w_per_m2[i]);
        }
        v[ROOM] = scale * d.internal_w + self.heat_offset_w;
        v
    }

    /// Continuous-time affine model `A_c x + B_c m + E_c d̂`, exact at the
    /// operating point by construction.
    pub fn linear_derivative(&self, x: &DVector<f64>, mdot: f64, d: &DisturbanceSample) -> DVector<f64> {
        &self.a_c * x + &self.b_c * DVector::from_element(1, mdot) + &self.e_c * self.disturbance_vector(d, 1.0)
    }

    /// One step of the discrete model.
    pub fn step(&self, x: &DVector<f64>, mdot: f64, d_hat: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * DVector::from_element(1, mdot) + &self.e * d_hat
    }

    /// Electrical kW drawn per unit mass flow, linearized at the operating
    /// point: heating plus fan power.
    pub fn kappa_kw_per_kgps(&self) -> f64 {
        self.hvac.cp_j_per_kg_k * (self.hvac.t_in_heat_c - self.linearization.t_room_op_c) / 1000.0
            + self.hvac.delta_p_pa / (self.hvac.air_density_kg_per_m3 * 1000.0)
    }
}

/// Trajectories produced by the rule-based thermostat simulation.
#[derive(Debug, Clone)]
pub struct RuleBasedTrace {
    /// Full state per step, including the initial state (length steps + 1).
    pub states_c: Vec<DVector<f64>>,
    /// Room-air temperature per step, including the initial state.
    pub room_c: Vec<f64>,
    /// Commanded mass flow per step (length steps).
    pub mdot_kgps: Vec<f64>,
    /// Total electrical power per step, kW.
    pub power_kw: Vec<f64>,
}

/// Rule-based thermostat on the discrete linear model: run at `rated_mdot`
/// until the room reaches `t_max_setpoint`, then cut the flow to the
/// actuator minimum. Reproduces the characteristic drop in rated power once
/// the set-point is reached.
pub fn simulate_rule_based(
    model: &RoomModel,
    d: &DisturbanceProfile,
    t_max_setpoint_c: f64,
    rated_mdot_kgps: f64,
    x0: &DVector<f64>,
) -> Result<RuleBasedTrace> {
    d.validate()?;
    if x0.len() != N_STATES {
        return Err(Error::dims("rule-based simulation: x0 must have 5 states"));
    }
    let rated = rated_mdot_kgps.clamp(model.hvac.mdot_min_kg_per_s, model.hvac.mdot_max_kg_per_s);
    let steps = d.len();
    let mut states = Vec::with_capacity(steps + 1);
    let mut room = Vec::with_capacity(steps + 1);
    let mut mdots = Vec::with_capacity(steps);
    let mut power = Vec::with_capacity(steps);
    let mut x = x0.clone();
    states.push(x.clone());
    room.push(x[ROOM]);
    for k in 0..steps {
        let mdot = if x[ROOM] < t_max_setpoint_c {
            rated
        } else {
            model.hvac.mdot_min_kg_per_s
        };
        let (p_heat, p_fan) = hvac_power(mdot, x[ROOM], &model.hvac)?;
        mdots.push(mdot);
        power.push((p_heat + p_fan) / 1000.0);
        let d_hat = model.disturbance_vector(&d.sample(k), 1.0);
        x = model.step(&x, mdot, &d_hat);
        states.push(x.clone());
        room.push(x[ROOM]);
    }
    Ok(RuleBasedTrace {
        states_c: states,
        room_c: room,
        mdot_kgps: mdots,
        power_kw: power,
    })
}

#[cfg(test)]
pub(crate) fn test_params() -> (HvacParams, RoomThermalParams, ComfortBounds) {
    let hvac = HvacParams {
        cp_j_per_kg_k: 1005.0,
        t_in_heat_c: 40.0,
        delta_p_pa: 600.0,
        air_density_kg_per_m3: 1.2,
        mdot_max_kg_per_s: 0.05,
        mdot_min_kg_per_s: 0.0,
    };
    let thermal = RoomThermalParams {
        wall_capacitance_j_per_k: [1.2e6, 1.3e6, 1.4e6, 1.2e6],
        room_capacitance_j_per_k: 6.0e5,
        r_out_k_per_w: [0.18, 0.20, 0.17, 0.19],
        r_in_k_per_w: [0.02, 0.021, 0.019, 0.02],
        solar_gain_m2: [0.4, 0.7, 0.9, 0.7],
    };
    let comfort = ComfortBounds {
        lower_c: [
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
            20.0,
        ],
        upper_c: [f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY, 24.0],
    };
    (hvac, thermal, comfort)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rk4_integrate, spectral_radius};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn model(dt_s: f64) -> RoomModel {
        let (hvac, thermal, comfort) = test_params();
        RoomModel::new(hvac, thermal, comfort, dt_s, None).unwrap()
    }

    fn calm_sample() -> DisturbanceSample {
        DisturbanceSample {
            ambient_c: 5.0,
            solar_w_per_m2: [0.0; N_WALLS],
            internal_w: 0.0,
        }
    }

    #[test]
    fn hvac_power_zero_flow() {
        let (hvac, _, _) = test_params();
        let (heat, fan) = hvac_power(0.0, 31.7, &hvac).unwrap();
        assert_eq!(heat, 0.0);
        assert_eq!(fan, 0.0);
    }

    #[test]
    fn hvac_power_direct_substitution() {
        let hvac = HvacParams {
            cp_j_per_kg_k: 1005.0,
            t_in_heat_c: 40.0,
            delta_p_pa: 600.0,
            air_density_kg_per_m3: 1.2,
            mdot_max_kg_per_s: 1.0,
            mdot_min_kg_per_s: 0.0,
        };
        let (heat, _) = hvac_power(1.0, 20.0, &hvac).unwrap();
        assert_relative_eq!(heat, 20100.0, max_relative = 1e-12);
        let (_, fan) = hvac_power(0.5, 20.0, &hvac).unwrap();
        assert_relative_eq!(fan, 250.0, max_relative = 1e-12);
    }

    #[test]
    fn hvac_power_rejects_negative_flow() {
        let (hvac, _, _) = test_params();
        assert!(hvac_power(-0.1, 20.0, &hvac).is_err());
    }

    proptest! {
        // hvac_power is linear in the flow for fixed room temperature.
        #[test]
        fn hvac_power_scales_linearly(mdot in 0.0..2.0f64, alpha in 0.0..4.0f64, t_room in -10.0..35.0f64) {
            let (hvac, _, _) = test_params();
            let (h1, f1) = hvac_power(mdot, t_room, &hvac).unwrap();
            let (h2, f2) = hvac_power(alpha * mdot, t_room, &hvac).unwrap();
            prop_assert!((h2 - alpha * h1).abs() <= 1e-9 * (1.0 + h1.abs() * alpha));
            prop_assert!((f2 - alpha * f1).abs() <= 1e-9 * (1.0 + f1.abs() * alpha));
        }
    }

    #[test]
    fn derivative_zero_at_uniform_ambient_equilibrium() {
        let (hvac, thermal, _) = test_params();
        let x = DVector::from_element(N_STATES, 5.0);
        let d = calm_sample();
        let dx = nonlinear_derivative(&thermal, &hvac, &x, 0.0, &d).unwrap();
        assert!(dx.iter().all(|v| v.abs() < 1e-14), "expected equilibrium, got {dx}");
    }

    #[test]
    fn heating_raises_room_derivative() {
        let (hvac, thermal, _) = test_params();
        let x = DVector::from_element(N_STATES, 18.0);
        let d = calm_sample();
        let base = nonlinear_derivative(&thermal, &hvac, &x, 0.0, &d).unwrap();
        let heated = nonlinear_derivative(&thermal, &hvac, &x, 0.04, &d).unwrap();
        assert!(heated[ROOM] > base[ROOM]);
    }

    #[test]
    fn derivative_matches_high_resolution_integrator() {
        // Finite difference of a fine RK4 one-step integration must agree
        // with the analytic right-hand side.
        let (hvac, thermal, _) = test_params();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let x = DVector::from_fn(N_STATES, |_, _| rng.random_range(0.0..30.0));
            let mdot = rng.random_range(0.0..0.05);
            let d = DisturbanceSample {
                ambient_c: rng.random_range(-5.0..15.0),
                solar_w_per_m2: [
                    rng.random_range(0.0..400.0),
                    rng.random_range(0.0..400.0),
                    rng.random_range(0.0..400.0),
                    rng.random_range(0.0..400.0),
                ],
                internal_w: rng.random_range(0.0..300.0),
            };
            let f = |s: &DVector<f64>| nonlinear_derivative(&thermal, &hvac, s, mdot, &d).unwrap();
            let h = 1.8; // dt/1000 for the 1800 s market period
            let x1 = rk4_integrate(f, &x, h, 1);
            let fd = (&x1 - &x) / h;
            let analytic = f(&x);
            for i in 0..N_STATES {
                assert_relative_eq!(fd[i], analytic[i], max_relative = 1e-4, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn derivative_monotone_in_ambient() {
        // A warmer ambient never lowers any state derivative.
        let (hvac, thermal, _) = test_params();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = DVector::from_fn(N_STATES, |_, _| rng.random_range(0.0..30.0));
            let mdot = rng.random_range(0.0..0.05);
            let mut d = calm_sample();
            d.ambient_c = rng.random_range(-10.0..20.0);
            let base = nonlinear_derivative(&thermal, &hvac, &x, mdot, &d).unwrap();
            d.ambient_c += 1.0;
            let warmer = nonlinear_derivative(&thermal, &hvac, &x, mdot, &d).unwrap();
            for i in 0..N_STATES {
                assert!(warmer[i] >= base[i] - 1e-12);
            }
        }
    }

    #[test]
    fn linearize_diagonal_negative_when_decoupled() {
        let (hvac, mut thermal, _) = test_params();
        // Effectively sever the wall-room couplings.
        thermal.r_in_k_per_w = [1e12; N_WALLS];
        let op = OperatingPoint {
            t_room_op_c: 22.0,
            mdot_op_kg_per_s: 0.025,
        };
        let (a_c, _, _) = linearize(&thermal, &hvac, &op).unwrap();
        for i in 0..N_STATES {
            assert!(a_c[(i, i)] < 0.0, "diagonal entry {i} not negative");
            for j in 0..N_STATES {
                if i != j {
                    assert!(a_c[(i, j)].abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn linearize_b_matches_partial_derivative() {
        let (hvac, thermal, _) = test_params();
        let op = OperatingPoint {
            t_room_op_c: 22.0,
            mdot_op_kg_per_s: 0.02,
        };
        let (_, b_c, _) = linearize(&thermal, &hvac, &op).unwrap();
        let expected = hvac.cp_j_per_kg_k * (hvac.t_in_heat_c - 22.0) / thermal.room_capacitance_j_per_k;
        assert_relative_eq!(b_c[(ROOM, 0)], expected, max_relative = 1e-15);
        for i in 0..N_WALLS {
            assert_eq!(b_c[(i, 0)], 0.0);
        }
    }

    #[test]
    fn linearized_derivative_exact_at_operating_point() {
        // The affine model (Jacobians plus the folded constant) must equal
        // the nonlinear right-hand side whenever the room temperature and
        // flow sit at the linearization point, for any wall state and any
        // disturbance.
        let (hvac, thermal, comfort) = test_params();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let op = OperatingPoint {
                t_room_op_c: rng.random_range(15.0..28.0),
                mdot_op_kg_per_s: rng.random_range(0.0..0.05),
            };
            let model = RoomModel::new(
                hvac.clone(),
                thermal.clone(),
                comfort.clone(),
                1800.0,
                Some(op),
            )
            .unwrap();
            let mut x = DVector::from_fn(N_STATES, |_, _| rng.random_range(0.0..35.0));
            x[ROOM] = op.t_room_op_c;
            let d = DisturbanceSample {
                ambient_c: rng.random_range(-5.0..15.0),
                solar_w_per_m2: [
                    rng.random_range(0.0..500.0),
                    rng.random_range(0.0..500.0),
                    rng.random_range(0.0..500.0),
                    rng.random_range(0.0..500.0),
                ],
                internal_w: rng.random_range(0.0..400.0),
            };
            let lin = model.linear_derivative(&x, op.mdot_op_kg_per_s, &d);
            let nl = nonlinear_derivative(&thermal, &hvac, &x, op.mdot_op_kg_per_s, &d).unwrap();
            for i in 0..N_STATES {
                assert_relative_eq!(lin[i], nl[i], max_relative = 1e-12, epsilon = 1e-18);
            }
        }
    }

    #[test]
    fn discretize_constant_integrand() {
        let a_c = DMatrix::<f64>::zeros(3, 3);
        let b_c = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        let e_c = DMatrix::<f64>::identity(3, 3);
        let dt = 7.0;
        let (a, b, e) = discretize(&a_c, &b_c, &e_c, dt).unwrap();
        assert_relative_eq!(a, DMatrix::identity(3, 3), epsilon = 1e-12);
        assert_relative_eq!(b, b_c * dt, max_relative = 1e-12);
        assert_relative_eq!(e, DMatrix::identity(3, 3) * dt, max_relative = 1e-12);
    }

    #[test]
    fn discretize_scalar_decay() {
        let a_c = DMatrix::from_element(1, 1, -0.3);
        let b_c = DMatrix::zeros(1, 1);
        let e_c = DMatrix::zeros(1, 1);
        let (a, _, _) = discretize(&a_c, &b_c, &e_c, 2.5).unwrap();
        assert_relative_eq!(a[(0, 0)], (-0.3f64 * 2.5).exp(), max_relative = 1e-13);
    }

    #[test]
    fn discrete_fixed_point_preserved_at_equilibrium() {
        // If the continuous linear derivative is zero at x*, the discrete
        // map must hold x* as a fixed point: a pure ZOH-exactness check.
        let model = model(1800.0);
        let mdot_op = model.linearization.mdot_op_kg_per_s;
        let d = DisturbanceSample {
            ambient_c: 8.0,
            solar_w_per_m2: [50.0, 80.0, 120.0, 60.0],
            internal_w: 120.0,
        };
        let d_hat = model.disturbance_vector(&d, 1.0);
        let rhs = &model.b_c * DVector::from_element(1, mdot_op) + &model.e_c * &d_hat;
        let x_star = model.a_c.clone().lu().solve(&(-&rhs)).unwrap();
        let x_next = model.step(&x_star, mdot_op, &d_hat);
        for i in 0..N_STATES {
            assert!(
                (x_next[i] - x_star[i]).abs() < 1e-9,
                "state {i} drifted by {}",
                (x_next[i] - x_star[i]).abs()
            );
        }
    }

    #[test]
    fn discrete_dynamics_stable_for_dissipative_parameters() {
        let model = model(1800.0);
        let rho = spectral_radius(&model.a, 500);
        assert!(rho < 1.0, "spectral radius {rho} not < 1");
    }

    #[test]
    fn rule_based_power_drops_at_setpoint_crossing() {
        let model = model(120.0);
        let steps = 400;
        let d = DisturbanceProfile {
            ambient_c: vec![5.0; steps],
            solar_w_per_m2: vec![[0.0; N_WALLS]; steps],
            internal_w: vec![0.0; steps],
        };
        let x0 = DVector::from_element(N_STATES, 18.0);
        let trace = simulate_rule_based(&model, &d, 22.0, 0.05, &x0).unwrap();
        let crossing = trace
            .room_c
            .iter()
            .position(|t| *t >= 22.0)
            .expect("room should reach the set-point");
        assert!(crossing > 0 && crossing < steps);
        assert!(trace.power_kw[crossing] < trace.power_kw[crossing - 1] * 0.5);
    }

    #[test]
    fn rule_based_stays_off_when_warm() {
        let model = model(1800.0);
        let steps = 24;
        let d = DisturbanceProfile {
            ambient_c: vec![26.0; steps],
            solar_w_per_m2: vec![[0.0; N_WALLS]; steps],
            internal_w: vec![0.0; steps],
        };
        let x0 = DVector::from_element(N_STATES, 26.0);
        let trace = simulate_rule_based(&model, &d, 22.0, 0.05, &x0).unwrap();
        assert!(trace.mdot_kgps.iter().all(|m| *m == model.hvac.mdot_min_kg_per_s));
        assert!(trace.power_kw.iter().all(|p| *p == 0.0));
    }

    #[test]
    fn rule_based_matches_nonlinear_rk4_replay() {
        // Replay the discrete simulation's switching sequence through the
        // nonlinear model at 100x time resolution; the linear-model error
        // stays within a tenth of a degree for a tight thermostat band.
        let model = model(120.0);
        let steps = 600;
        let d = DisturbanceProfile {
            ambient_c: vec![8.0; steps],
            solar_w_per_m2: vec![[60.0, 90.0, 130.0, 70.0]; steps],
            internal_w: vec![100.0; steps],
        };
        let x0 = DVector::from_element(N_STATES, 21.5);
        let setpoint = model.linearization.t_room_op_c;
        let trace = simulate_rule_based(&model, &d, setpoint, 0.05, &x0).unwrap();

        let mut x = x0.clone();
        let mut max_err: f64 = 0.0;
        for k in 0..steps {
            let sample = d.sample(k);
            let mdot = trace.mdot_kgps[k];
            let f =
                |s: &DVector<f64>| nonlinear_derivative(&model.thermal, &model.hvac, s, mdot, &sample).unwrap();
            x = rk4_integrate(f, &x, model.dt_s, 100);
            max_err = max_err.max((x[ROOM] - trace.room_c[k + 1]).abs());
        }
        assert!(max_err < 0.1, "room trajectory deviates by {max_err} degC");
    }
}
