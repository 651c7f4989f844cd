use super::PhaseState;
use crate::model::{complex_pow, IonSpecies, LinearTrap};

/// Amplitude vector (m) of the driven RF oscillation about a secular
/// position: the ion follows `R + a·cos(Ωt + φ)` to lowest order.
pub fn micromotion_amplitude(trap: &LinearTrap, ion: &IonSpecies, pos: [f64; 3]) -> [f64; 3] {
    let r0 = trap.r0();
    let (re, im) = complex_pow(pos[0] / r0, pos[1] / r0, trap.k() - 1);
    let scale = trap.k() as f64 * ion.charge() * trap.v0()
        / (2.0 * ion.mass() * trap.omega().powi(2) * r0);
    [scale * re, -scale * im, 0.0]
}

/// Converts a secular (guiding-centre) state into the RF-frame state at the
/// same instant by adding the micromotion displacement and velocity.
pub fn rf_initial_state(trap: &LinearTrap, ion: &IonSpecies, secular: &PhaseState) -> PhaseState {
    let a = micromotion_amplitude(trap, ion, secular.position());
    let arg = trap.omega() * secular.t + trap.rf_phase();
    let (s, c) = arg.sin_cos();
    let w = trap.omega();
    PhaseState {
        t: secular.t,
        x: secular.x + a[0] * c,
        y: secular.y + a[1] * c,
        z: secular.z,
        vx: secular.vx - a[0] * w * s,
        vy: secular.vy - a[1] * w * s,
        vz: secular.vz,
    }
}
