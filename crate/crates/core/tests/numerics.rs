use frontlab::pde_core::{evolve, Field, Grid, Medium, PureDiffusion, Stepper, StepperConfig};
use frontlab::reaction_env::ReactionEnv;

fn run<M: Medium>(medium: &M, dx: f64, dt: f64, half: f64, t_end: f64, u0: impl Fn(f64) -> f64, left: f64) -> Field {
    let n = (2.0 * half / dx).round() as usize + 1;
    let grid = Grid::new(-half, dx, n).unwrap();
    let values: Vec<f64> = (0..n).map(|i| u0(grid.x(i))).collect();
    let mut f = Field::new(grid, 0.0, values, (left, 0.0)).unwrap();
    let cfg = StepperConfig::new(dt, medium.lipschitz(), 1.0).unwrap().without_shifts();
    let mut stepper = Stepper::new(cfg);
    evolve(&mut f, medium, &mut stepper, t_end, None, &mut |_| Ok(())).unwrap();
    f
}

/// Largest difference on the nodes of the coarser field.
fn coarse_gap(coarse: &Field, fine: &Field) -> f64 {
    let ratio = (coarse.grid.dx / fine.grid.dx).round() as usize;
    coarse
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (v - fine.values[i * ratio]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn heat_kernel_second_order() {
    // the Gaussian e^{-x²} spreads to (1+4t)^{-1/2} e^{-x²/(1+4t)}
    let t_end = 1.0;
    let exact = |x: f64| (-x * x / (1.0 + 4.0 * t_end)).exp() / (1.0 + 4.0 * t_end).sqrt();
    let errors: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&dx| {
            let f = run(&PureDiffusion, dx, dx * dx, 20.0, t_end, |x| (-x * x).exp(), 0.0);
            f.values
                .iter()
                .enumerate()
                .map(|(i, v)| (v - exact(f.grid.x(i))).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "errors {errors:?}, order {order}");
    }
}

#[test]
fn refinement_against_fine_reference() {
    let env = ReactionEnv::constant(0.25, 1.0).unwrap();
    let u0 = |x: f64| 0.5 * (1.0 - (0.5 * x).tanh());
    let (half, t_end) = (30.0, 4.0);
    let reference = run(&env, 0.025, 2.5e-4, half, t_end, u0, 1.0);
    let coarse = run(&env, 0.4, 4e-3, half, t_end, u0, 1.0);
    let halved = run(&env, 0.2, 2e-3, half, t_end, u0, 1.0);
    let (e1, e2) = (coarse_gap(&coarse, &reference), coarse_gap(&halved, &reference));
    assert!(e1 / e2 >= 3.5, "errors {e1:.3e} -> {e2:.3e}, factor {:.2}", e1 / e2);
}
