use fiberatom::fiber_mode::{solve_he11, FiberSpec};

fn main() {
    let mode = solve_he11(&FiberSpec::<f64>::cs_nanofiber(), 1e-12).unwrap();
    println!("{:#?}", mode.summary());
    let a = mode.fiber.radius;
    for d in [0.0, 50e-9, 100e-9, 200e-9, 370e-9, 1e-6] {
        println!("d={d:e} I/P={:e} W/m^2 per W", mode.intensity_profile(1.0, a + d).unwrap());
    }
    println!("fraction 370nm = {}", mode.evanescent_power_fraction(370e-9));
}
