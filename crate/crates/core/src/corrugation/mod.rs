//! Corrugation pair `Gamma(s, t)`: `2 pi`-periodic in `t`, vanishing at
//! `s = 0`, with `(1 + dt Gamma1)^2 + (dt Gamma2)^2 = 1 + s^2`.
//!
//! Built from the Kuiper loop with Bessel-normalized amplitude.

pub mod bessel;
mod table;

use std::io::Write;

pub use table::{
    amplitude, amplitude_slope, CorrugationConstants, CorrugationSample, CorrugationTable,
    Quantity, DEFAULT_S_MAX, DEFAULT_S_SAMPLES, DEFAULT_T_SAMPLES,
};

#[derive(Debug, thiserror::Error)]
pub enum CorrugationError {
    #[error("s_max = {0} outside (0, 1]")]
    SMax(f64),
    #[error("table needs at least 64 samples per axis, got {0}")]
    Samples(usize),
    #[error("no root of J0(a) = (1+s^2)^(-1/2) on the first branch for s = {0}")]
    NoBracket(f64),
    #[error("s = {s} outside the table domain [0, {s_max}]")]
    OutOfDomain { s: f64, s_max: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Profiles of every quantity along `t` at the given amplitudes, as CSV with
/// columns `s,t,<quantity...>`.
pub fn dump_profiles<W: Write>(
    table: &CorrugationTable,
    amplitudes: &[f64],
    t_points: usize,
    mut w: W,
) -> Result<(), CorrugationError> {
    let names: Vec<&str> = Quantity::ALL.iter().map(|q| q.name()).collect();
    writeln!(w, "s,t,{}", names.join(","))?;
    for &s in amplitudes {
        for k in 0..t_points {
            let t = std::f64::consts::TAU * k as f64 / t_points as f64;
            let v = table.eval_all(s, t)?;
            writeln!(
                w,
                "{s},{t},{},{},{},{},{},{},{},{},{},{}",
                v.gamma[0], v.gamma[1], v.dt[0], v.dt[1], v.ds[0], v.ds[1], v.dtt[0], v.dtt[1],
                v.dst[0], v.dst[1]
            )?;
        }
    }
    Ok(())
}
