use std::time::Instant;
use stokes_green::force::ForceSpec;
use stokes_green::quadrature::*;
use stokes_green::stokes::*;
use stokes_green::Dimension;

fn quad() -> QuadConfig {
    QuadConfig {
        order: 8,
        base_level: 0,
        map_scale: 2.0,
        grades: 6,
        tol: Tolerance { rel: 1e-7, abs: 1e-10, max_refinements: 4 },
    }
}

fn main() {
    let d3 = Dimension::new(3).unwrap();
    let spec = ForceSpec::unit_bump(3, vec![0.0, 0.0, 1.0], 0.8, vec![1.0, 0.0, 0.0]).unwrap();

    let t0 = Instant::now();
    let b = coeffs_b(&spec, &d3, &quad()).unwrap();
    println!("coeffs_b: {:?} -> {:?}", t0.elapsed(), b);

    let t0 = Instant::now();
    let (lhs, rhs) = moment_identity(&spec, &d3, &quad()).unwrap();
    println!("moment_identity: {:?} -> {:?} vs {:?}", t0.elapsed(), lhs, rhs);

    let absorbed = absorb_force(&spec, &quad()).unwrap();
    let t0 = Instant::now();
    let (v, e) = solve_stokes(&absorbed, &[0.4, 0.2, 1.1], &d3, &quad()).unwrap();
    println!("solve interior: {:?} -> {:?} est {:.2e}", t0.elapsed(), v, e);
}
