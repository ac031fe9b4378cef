//! Privacy mechanisms: clamping, Laplace and ℓ∞ K-norm releases, objective
//! perturbation and budget composition.

use dppf::mechanism::{
    clamp_normalize, compose_budget, knorm_acceptance, knorm_release, laplace_acceptance, laplace_release,
    objective_gamma, objective_perturbation, objperb_log_acceptance, residual_noise, ClampSpec, JacobianConvention,
    LogisticDesign,
};
use dppf::rng::RandomStream;

fn main() -> dppf::error::Result<()> {
    let mut rng = RandomStream::from_parts(3, 0, 0, 0);

    let clamp = ClampSpec::new(-5.0, 5.0)?;
    let raw = [-7.0, -2.5, 0.0, 4.0, 12.0];
    println!("clamped {:?}", clamp_normalize(&raw, &clamp));

    let stats = [0.2, 0.35];
    let s_dp = laplace_release(&stats, 4.0, 1.0, &mut rng);
    println!("laplace release {s_dp:.4?}  r = {:.4}", laplace_acceptance(&stats, &s_dp, 4.0, 1.0));
    let z_dp = knorm_release(&stats, 4.0, 1.0, &mut rng);
    println!("k-norm release  {z_dp:.4?}  r = {:.4}", knorm_acceptance(&stats, &z_dp, 4.0, 1.0));

    let parts = compose_budget(0.5, &[0.9, 0.1])?;
    println!("budget 0.5 split {parts:?}");

    let z: Vec<f64> = (0..200).map(|i| i as f64 / 199.0).collect();
    let y: Vec<f64> = z.iter().map(|&v| if v > 0.45 { 1.0 } else { 0.0 }).collect();
    let design = LogisticDesign::with_intercept(&z, &y)?;
    let (epsilon, q) = (parts[0], 0.5);
    let (theta_dp, v) = objective_perturbation(&design, 2.0, epsilon, q, &mut rng)?;
    let gamma = objective_gamma(design.dim() as f64 / 4.0, epsilon, q);
    println!("objective perturbation θ_dp {theta_dp:.4?}  gamma {gamma:.4}");
    println!("noise {v:.6?}  recovered {:.6?}", residual_noise(&design, &theta_dp, gamma));
    for convention in [JacobianConvention::Published, JacobianConvention::ChangeOfVariables] {
        let log_r = objperb_log_acceptance(&theta_dp, &design, 2.0, epsilon, q, convention)?;
        println!("{convention:?} log r = {log_r:.4}");
    }
    Ok(())
}
