//! Central finite-difference checks of reverse-mode gradients.
//!
//! The numeric side only ever calls forward evaluations, so it is
//! independent of the backward pass it checks.

use rand::Rng;

use super::{Matrix, Network};
use crate::error::Result;

/// Denominator floor for the relative error, so that coordinates whose true
/// gradient is ~0 are judged on absolute error instead.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    pub step: f64,
    pub coordinates: usize,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            coordinates: 100,
        }
    }
}

/// Location of one scalar inside a network: `(parameter index, flat entry)`.
/// Parameter index follows [`Network::params`] order.
pub type Coordinate = (usize, usize);

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst: Option<(Coordinate, f64, f64)>,
}

impl Default for GradCheckReport {
    fn default() -> Self {
        Self::new()
    }
}

impl GradCheckReport {
    pub fn new() -> Self {
        Self {
            checked: 0,
            max_rel_error: 0.0,
            worst: None,
        }
    }

    pub fn record(&mut self, coord: Coordinate, analytic: f64, numeric: f64) {
        let err = relative_error(analytic, numeric);
        self.checked += 1;
        if err > self.max_rel_error || self.worst.is_none() {
            self.max_rel_error = self.max_rel_error.max(err);
            self.worst = Some((coord, analytic, numeric));
        }
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Draws `count` coordinates uniformly over all scalars of `net`.
pub fn sample_coordinates<R: Rng + ?Sized>(
    net: &Network,
    count: usize,
    rng: &mut R,
) -> Vec<Coordinate> {
    let sizes: Vec<usize> = net.params().map(|p| p.value.len()).collect();
    let total: usize = sizes.iter().sum();
    let picks = rand::seq::index::sample(rng, total, count.min(total));
    let mut coords: Vec<Coordinate> = picks
        .into_iter()
        .map(|mut flat| {
            let mut idx = 0;
            while flat >= sizes[idx] {
                flat -= sizes[idx];
                idx += 1;
            }
            (idx, flat)
        })
        .collect();
    coords.sort_unstable();
    coords
}

pub fn param_value(net: &Network, coord: Coordinate) -> f64 {
    net.params().nth(coord.0).expect("coordinate in range").value.data()[coord.1]
}

pub fn param_grad(net: &Network, coord: Coordinate) -> f64 {
    net.params().nth(coord.0).expect("coordinate in range").grad.data()[coord.1]
}

fn set_param(net: &mut Network, coord: Coordinate, v: f64) {
    net.params_mut()
        .nth(coord.0)
        .expect("coordinate in range")
        .value
        .data_mut()[coord.1] = v;
}

/// `(f(θ + h) - f(θ - h)) / 2h` along one coordinate; restores θ afterwards.
pub fn central_difference<F>(net: &mut Network, coord: Coordinate, h: f64, mut f: F) -> Result<f64>
where
    F: FnMut(&Network) -> Result<f64>,
{
    let original = param_value(net, coord);
    set_param(net, coord, original + h);
    let plus = f(net);
    set_param(net, coord, original - h);
    let minus = f(net);
    set_param(net, coord, original);
    Ok((plus? - minus?) / (2.0 * h))
}

/// Checks `d(Σ output ⊙ W)/dθ` for a random fixed projection `W`.
pub fn check_network_gradients<R: Rng + ?Sized>(
    net: &mut Network,
    input: &Matrix,
    cfg: &GradCheckConfig,
    rng: &mut R,
) -> Result<GradCheckReport> {
    let (out, cache) = net.forward(input)?;
    let proj_data = (0..out.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let projection = Matrix::from_vec(out.rows(), out.cols(), proj_data)?;

    net.zero_grad();
    net.backward(&cache, &projection)?;

    let objective = |n: &Network| -> Result<f64> {
        let y = n.predict(input)?;
        Ok(y.data().iter().zip(projection.data()).map(|(a, b)| a * b).sum())
    };

    let mut report = GradCheckReport::new();
    for coord in sample_coordinates(net, cfg.coordinates, rng) {
        let numeric = central_difference(net, coord, cfg.step, objective)?;
        report.record(coord, param_grad(net, coord), numeric);
    }
    net.zero_grad();
    Ok(report)
}
