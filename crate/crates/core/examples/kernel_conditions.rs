//! Size and Hörmander constants of power kernels |x|^{-a}, with the running
//! sup over dyadic scales and the partial sums over annuli.
use rough_weights::operators::{kernel_hormander_constant, kernel_size_constant, HormanderParams, KernelSpec};

fn main() -> rough_weights::Result<()> {
    let scales: Vec<f64> = (-10..=10).map(|k| 2f64.powi(k)).collect();
    for n in [1, 2] {
        let probes: Vec<Vec<f64>> = [0.25, 1.0, 4.0].iter().map(|&t| vec![t; n]).collect();
        for a in [0.25, 0.5, 0.75] {
            let k = KernelSpec::power(a * n as f64)?;
            let size = kernel_size_constant(&k, n, &scales)?;
            let horm = kernel_hormander_constant(&k, n, &probes, HormanderParams::default())?;
            println!(
                "n={n} exponent {:.2}: size {:.4} ({}), hormander {:.4} ({}, c_r={:?})",
                a * n as f64,
                size.value,
                if size.stable { "stable" } else { "diverging" },
                horm.value,
                if horm.stable { "stable" } else { "diverging" },
                horm.c_r
            );
        }
    }
    Ok(())
}
