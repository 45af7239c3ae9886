//! Building-level aggregation: replicate the room template across floors,
//! draw per-room disturbance deviations, wire up the reserve-participation
//! structure and build the lifted (stacked-over-time) dynamics used by the
//! scheduler and its tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::thermal::{RoomModel, N_STATES};

/// Identity of the RNG used for the per-room disturbance multipliers,
/// recorded in output metadata so runs are reproducible across
/// implementations of the same generator family.
pub const MULTIPLIER_RNG: &str = "chacha8";

/// Block-aggregated model of an `n_s`-floor, `n_r`-rooms-per-floor building.
#[derive(Debug, Clone)]
pub struct BuildingModel {
    pub floors: usize,
    pub rooms_per_floor: usize,
    /// Room template shared by every room.
    pub room: RoomModel,
    /// Block-diagonal building matrices assembled from the template.
    pub a_b: DMatrix<f64>,
    pub b_b: DMatrix<f64>,
    pub e_b: DMatrix<f64>,
    /// Reserve input matrix: columns of `b_b` masked by floor participation.
    pub b_r: DMatrix<f64>,
    /// Per-floor reserve participation.
    pub participation: Vec<bool>,
    /// Per-room scaling of the disturbance profile, in [0.5, 1.5]; room 0 is
    /// pinned to 1.0 (the reference room).
    pub disturbance_multipliers: Vec<f64>,
    pub rng_seed: u64,
}

impl BuildingModel {
    pub fn n_rooms(&self) -> usize {
        self.floors * self.rooms_per_floor
    }

    pub fn floor_of_room(&self, room: usize) -> usize {
        room / self.rooms_per_floor
    }

    pub fn room_participates(&self, room: usize) -> bool {
        self.participation[self.floor_of_room(room)]
    }
}

/// Replicate `room` into an `n_s x n_r` building.
///
/// The per-room disturbance multipliers are drawn uniformly from
/// [0.5, 1.5] with the given seed; room 0 keeps the unscaled template
/// profile. `B_r` copies the columns of `B_b` for rooms on participating
/// floors and zeros the rest.
pub fn augment(
    room: &RoomModel,
    floors: usize,
    rooms_per_floor: usize,
    rng_seed: u64,
    participation: &[bool],
) -> Result<BuildingModel> {
    if floors < 1 || rooms_per_floor < 1 {
        return Err(Error::invalid("building needs at least one floor and one room per floor"));
    }
    if participation.len() != floors {
        return Err(Error::dims(format!(
            "participation mask has {} entries for {} floors",
            participation.len(),
            floors
        )));
    }
    let n_rooms = floors * rooms_per_floor;
    let n = N_STATES;

    let mut a_b = DMatrix::<f64>::zeros(n * n_rooms, n * n_rooms);
    let mut e_b = DMatrix::<f64>::zeros(n * n_rooms, n * n_rooms);
    let mut b_b = DMatrix::<f64>::zeros(n * n_rooms, n_rooms);
    let mut b_r = DMatrix::<f64>::zeros(n * n_rooms, n_rooms);
    for j in 0..n_rooms {
        let row = j * n;
        a_b.view_mut((row, row), (n, n)).copy_from(&room.a);
        e_b.view_mut((row, row), (n, n)).copy_from(&room.e);
        b_b.view_mut((row, j), (n, 1)).copy_from(&room.b);
        if participation[j / rooms_per_floor] {
            b_r.view_mut((row, j), (n, 1)).copy_from(&room.b);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut multipliers = Vec::with_capacity(n_rooms);
    multipliers.push(1.0);
    for _ in 1..n_rooms {
        multipliers.push(rng.random_range(0.5..=1.5));
    }

    Ok(BuildingModel {
        floors,
        rooms_per_floor,
        room: room.clone(),
        a_b,
        b_b,
        e_b,
        b_r,
        participation: participation.to_vec(),
        disturbance_multipliers: multipliers,
        rng_seed,
    })
}

/// Stacked-over-time response maps for `x_{k+1} = A x_k + B u_k + E d_k + B_r r_k`.
///
/// Row block `t` (t = 0..N-1) corresponds to the state after step `t+1`;
/// `phi_u` block `(k, l)` equals `A^(k-1-l) B` for `l < k` and is zero
/// otherwise (strict causality), and `phi_r` has the same structure built
/// from `B_r`.
#[derive(Debug, Clone)]
pub struct LiftedDynamics {
    pub horizon: usize,
    pub phi_x0: DMatrix<f64>,
    pub phi_u: DMatrix<f64>,
    pub phi_d: DMatrix<f64>,
    pub phi_r: DMatrix<f64>,
}

impl LiftedDynamics {
    /// Predicted stacked state trajectory for the given initial state and
    /// stacked input/disturbance/reserve sequences.
    pub fn predict(
        &self,
        x0: &DVector<f64>,
        u: &DVector<f64>,
        d: &DVector<f64>,
        r: &DVector<f64>,
    ) -> DVector<f64> {
        &self.phi_x0 * x0 + &self.phi_u * u + &self.phi_d * d + &self.phi_r * r
    }
}

/// Build the lifted maps for generic system matrices over `horizon` steps.
pub fn lift_matrices(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    e: &DMatrix<f64>,
    b_r: &DMatrix<f64>,
    horizon: usize,
) -> Result<LiftedDynamics> {
    if horizon < 1 {
        return Err(Error::invalid("lift horizon must be >= 1"));
    }
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || e.nrows() != n || b_r.nrows() != n {
        return Err(Error::dims("lift: inconsistent system matrices"));
    }
    let m = b.ncols();
    let q = e.ncols();
    let mr = b_r.ncols();

    // Powers of A up to the horizon.
    let mut pows = Vec::with_capacity(horizon + 1);
    pows.push(DMatrix::<f64>::identity(n, n));
    for k in 1..=horizon {
        let next = &pows[k - 1] * a;
        pows.push(next);
    }

    let mut phi_x0 = DMatrix::<f64>::zeros(n * horizon, n);
    let mut phi_u = DMatrix::<f64>::zeros(n * horizon, m * horizon);
    let mut phi_d = DMatrix::<f64>::zeros(n * horizon, q * horizon);
    let mut phi_r = DMatrix::<f64>::zeros(n * horizon, mr * horizon);
    for t in 0..horizon {
        let k = t + 1; // state index
        phi_x0.view_mut((t * n, 0), (n, n)).copy_from(&pows[k]);
        for l in 0..k {
            let coeff = &pows[k - 1 - l];
            phi_u
                .view_mut((t * n, l * m), (n, m))
                .copy_from(&(coeff * b));
            phi_d
                .view_mut((t * n, l * q), (n, q))
                .copy_from(&(coeff * e));
            phi_r
                .view_mut((t * n, l * mr), (n, mr))
                .copy_from(&(coeff * b_r));
        }
    }
    Ok(LiftedDynamics {
        horizon,
        phi_x0,
        phi_u,
        phi_d,
        phi_r,
    })
}

/// Lifted dynamics of the whole building. Intended for verification-scale
/// instances; the production solve path decomposes per room instead.
pub fn lift(building: &BuildingModel, horizon: usize) -> Result<LiftedDynamics> {
    lift_matrices(&building.a_b, &building.b_b, &building.e_b, &building.b_r, horizon)
}

/// A single room's slice of the building: the shared template plus the
/// room-specific disturbance scaling and participation flag.
#[derive(Debug, Clone, Copy)]
pub struct RoomView<'a> {
    pub room_index: usize,
    pub floor: usize,
    pub model: &'a RoomModel,
    pub disturbance_scale: f64,
    pub participates: bool,
}

/// Decompose the building into independent per-room subproblems.
///
/// All building matrices are block-diagonal with no inter-room coupling, so
/// any building-level program separates into the sum of these room-level
/// problems.
pub fn per_room_views(building: &BuildingModel) -> Vec<RoomView<'_>> {
    (0..building.n_rooms())
        .map(|j| RoomView {
            room_index: j,
            floor: building.floor_of_room(j),
            model: &building.room,
            disturbance_scale: building.disturbance_multipliers[j],
            participates: building.room_participates(j),
        })
        .collect()
}
