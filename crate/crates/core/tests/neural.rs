use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uhisr_core::neural::{persist, Activation, MlpParams, MlpSpec};

const H: f64 = 1e-6;

fn random_net(rng: &mut ChaCha8Rng) -> MlpParams {
    let n_layers = rng.random_range(1..=3);
    let sizes: Vec<usize> = (0..=n_layers).map(|_| rng.random_range(1..=6)).collect();
    let acts = [
        Activation::LeakyRelu,
        Activation::Sigmoid,
        Activation::Linear,
    ];
    let activations = (0..n_layers)
        .map(|_| acts[rng.random_range(0..3)])
        .collect();
    let spec = MlpSpec {
        sizes,
        activations,
        leak: 0.01,
    };
    let mut p = MlpParams::init(spec, rng);
    for v in p.flat_mut() {
        *v += rng.random_range(-0.5..0.5);
    }
    p
}

fn weighted_output(p: &MlpParams, x: &[f64], c: &[f64]) -> f64 {
    p.predict(x)
        .unwrap()
        .iter()
        .zip(c)
        .map(|(a, b)| a * b)
        .sum()
}

/// Relative error with the denominator floored at 1e-4: central differences
/// at h = 1e-6 carry ~1e-11 of rounding noise, which would dominate the
/// ratio for gradients much smaller than that.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = random_net(&mut rng);
        let x: Vec<f64> = (0..p.spec().n_inputs())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let c: Vec<f64> = (0..p.spec().n_outputs())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let (_, cache) = p.forward(&x).unwrap();
        let (g, gx) = p.backward(&cache, &c).unwrap();
        for (i, &gi) in g.iter().enumerate() {
            let mut plus = p.clone();
            plus.flat_mut()[i] += H;
            let mut minus = p.clone();
            minus.flat_mut()[i] -= H;
            let fd = (weighted_output(&plus, &x, &c) - weighted_output(&minus, &x, &c)) / (2.0 * H);
            worst = worst.max(rel_err(gi, fd));
        }
        for j in 0..x.len() {
            let mut xp = x.clone();
            xp[j] += H;
            let mut xm = x.clone();
            xm[j] -= H;
            let fd = (weighted_output(&p, &xp, &c) - weighted_output(&p, &xm, &c)) / (2.0 * H);
            worst = worst.max(rel_err(gx[j], fd));
        }
    }
    assert!(worst <= 1e-5, "max relative error {worst:e}");
}

#[test]
fn sigmoid_outputs_stay_in_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = MlpSpec::new(&[4, 8, 8, 1], Activation::LeakyRelu, Activation::Sigmoid).unwrap();
    let p = MlpParams::init(spec, &mut rng);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y = p.predict(&x).unwrap()[0];
        assert!(y > 0.0 && y < 1.0);
    }
}

#[test]
fn persisted_networks_predict_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let nets: Vec<MlpParams> = (0..4).map(|_| random_net(&mut rng)).collect();
    let refs: Vec<&MlpParams> = nets.iter().collect();
    let bytes = persist::networks_to_bytes(&refs);
    let back = persist::read_networks(bytes.as_slice()).unwrap();
    for (a, b) in nets.iter().zip(&back) {
        let x: Vec<f64> = (0..a.spec().n_inputs())
            .map(|i| i as f64 * 0.3 - 0.2)
            .collect();
        let (ya, yb) = (a.predict(&x).unwrap(), b.predict(&x).unwrap());
        assert_eq!(
            ya.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            yb.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}
