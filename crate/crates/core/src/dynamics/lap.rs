use super::basis::evaluate_on_uniform_grid;
use super::GalerkinState;

pub const DEFAULT_LAP_GRID_POINTS: usize = 513;
pub const MIN_LAP_GRID_POINTS: usize = 257;

/// `1e-7 max(1, sup |u|)`.
pub fn default_deadband(values: &[f64]) -> f64 {
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    1e-7 * sup.max(1.0)
}

/// Number of sign-definite components of `u` on `(0, 1)`, from `grid_points`
/// uniform samples. Values below the deadband count as zero and never split a
/// component: the sign only changes once a value of the other sign clears it.
pub fn lap_number(state: &GalerkinState, grid_points: usize, deadband: Option<f64>) -> usize {
    let values = evaluate_on_uniform_grid(&state.coeffs, grid_points.max(MIN_LAP_GRID_POINTS));
    lap_number_of_values(&values, deadband)
}

pub fn lap_number_of_values(values: &[f64], deadband: Option<f64>) -> usize {
    let delta = deadband.unwrap_or_else(|| default_deadband(values));
    let mut laps = 0;
    let mut current = 0i8;
    for &v in values {
        let s = if v > delta {
            1
        } else if v < -delta {
            -1
        } else {
            continue;
        };
        if s != current {
            laps += 1;
            current = s;
        }
    }
    laps
}
