//! Regulate the main-paper vehicle from (9 m, 7 m, 45°) to (10 m, 8 m, 60°)
//! and print the pose every second.

use omav::control::{Controller, GainSet};
use omav::dynamics::VehicleParams;
use omav::scenario::Scenario;

fn main() -> Result<(), omav::Error> {
    let params = VehicleParams::main_paper();
    let controller = Controller::new(params.clone(), GainSet::default())?;
    let log = Scenario::regulation().simulate(&params, &controller)?;
    for (t, x) in log.times.iter().zip(&log.states).step_by(1000) {
        println!("t = {t:5.1} s  x = {:8.4}  y = {:8.4}  φ = {:7.3}°", x[0], x[1], x[2].to_degrees());
    }
    println!("{:?}, final position error {:.2e} m", log.termination, log.e_pos.last().unwrap());
    Ok(())
}
