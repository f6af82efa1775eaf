//! Compares back-propagated gradients of the full CNN against central
//! differences, in double precision.

use audio_ensemble::nn::{build_table1_cnn, Mode, Network, NnRng, Tensor};
use rand::{Rng, SeedableRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = build_table1_cnn();
    let mut net: Network<f64> = Network::new(&spec, 11)?;
    let mut rng = NnRng::seed_from_u64(5);
    let x = Tensor::from_vec(&[2, 32, 32, 1], (0..2048).map(|_| rng.random::<f64>()).collect())?;
    let labels = [3, 8];

    // Same dropout masks for every evaluation.
    let loss_at = |net: &Network<f64>| -> f64 {
        net.loss_and_grads(x.clone(), &labels, Mode::Train, &mut NnRng::seed_from_u64(99))
            .expect("finite loss")
            .0
    };
    let (loss, grads, _) = net.loss_and_grads(x.clone(), &labels, Mode::Train, &mut NnRng::seed_from_u64(99))?;
    println!("loss {loss:.6}");

    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for layer in 0..net.layers().len() {
        for (p, name) in net.layers()[layer].param_names().iter().enumerate() {
            let len = net.layers()[layer].params()[p].len();
            for &i in &[0, len / 2, len - 1] {
                let orig = net.layers()[layer].params()[p].data()[i];
                net.layers_mut()[layer].params_mut()[p].data_mut()[i] = orig + eps;
                let up = loss_at(&net);
                net.layers_mut()[layer].params_mut()[p].data_mut()[i] = orig - eps;
                let down = loss_at(&net);
                net.layers_mut()[layer].params_mut()[p].data_mut()[i] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let analytic = grads[layer][p].data()[i];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-5);
                worst = worst.max(rel);
                println!("{layer:02} {:<10} {name:<8} [{i:>6}] {analytic:>13.6e} {numeric:>13.6e} {rel:.1e}",
                    net.layers()[layer].kind_name());
            }
        }
    }
    println!("worst relative error {worst:.2e}");
    Ok(())
}
