//! Verify the analytic layer gradients against central finite
//! differences, layer kind by layer kind.

use ringnet::gradcheck::{central_difference, max_relative_error};
use ringnet::layers::{Activation, Layer, LayerSpec};
use ringnet::rng::Prng;
use ringnet::tensor::Tensor4;

fn projection_loss(layer: &Layer, x: &Tensor4, r: &[f64]) -> f64 {
    layer
        .infer(x)
        .unwrap()
        .as_slice()
        .iter()
        .zip(r)
        .map(|(y, w)| y * w)
        .sum()
}

fn check(name: &str, layer: &Layer, x: &Tensor4, prng: &mut Prng) {
    let out_len = layer.infer(x).unwrap().len();
    let r: Vec<f64> = (0..out_len).map(|_| prng.range(-1.0, 1.0)).collect();

    let mut train = layer.clone();
    let y = train.forward(x).unwrap();
    let grad_y = Tensor4::from_vec(y.shape(), r.clone()).unwrap();
    let grads = train.backward(&grad_y).unwrap();

    let mut worst: f64 = 0.0;
    if !layer.weights().is_empty() {
        let numeric = central_difference(
            |w| {
                let mut probe = layer.clone();
                probe.weights_mut().copy_from_slice(w);
                projection_loss(&probe, x, &r)
            },
            layer.weights(),
            1e-5,
        );
        worst = worst.max(max_relative_error(&grads.weights, &numeric));
    }
    let numeric = central_difference(
        |xv| {
            let probe = Tensor4::from_vec(x.shape(), xv.to_vec()).unwrap();
            projection_loss(layer, &probe, &r)
        },
        x.as_slice(),
        1e-5,
    );
    worst = worst.max(max_relative_error(grads.input.as_slice(), &numeric));
    println!("{name:<18} max relative error {worst:.3e}");
    assert!(worst <= 1e-6);
}

fn main() {
    let mut prng = Prng::new(7);

    let mut conv = Layer::new(LayerSpec::Conv {
        in_channels: 2,
        out_channels: 3,
        kernel: (3, 3),
        stride: (1, 1),
        pad: (1, 0),
        activation: Activation::Tanh,
    })
    .unwrap();
    conv.init_weights(&mut prng);
    let x = Tensor4::from_vec(
        (2, 2, 6, 8),
        (0..192).map(|_| prng.range(-1.0, 1.0)).collect(),
    )
    .unwrap();
    check("conv 3x3 tanh", &conv, &x, &mut prng);

    let pool = Layer::new(LayerSpec::MaxPool).unwrap();
    let x = Tensor4::from_vec(
        (1, 3, 6, 8),
        (0..144).map(|_| prng.range(-1.0, 1.0)).collect(),
    )
    .unwrap();
    check("maxpool 2x2", &pool, &x, &mut prng);

    let mut dense = Layer::new(LayerSpec::Dense {
        in_units: 12,
        out_units: 7,
        activation: Activation::Relu,
    })
    .unwrap();
    dense.init_weights(&mut prng);
    let x = Tensor4::from_vec(
        (3, 12, 1, 1),
        (0..36).map(|_| prng.range(-1.0, 1.0)).collect(),
    )
    .unwrap();
    check("dense relu", &dense, &x, &mut prng);

    let mut tconv = Layer::new(LayerSpec::TransposedConv {
        in_channels: 3,
        out_channels: 2,
        kernel: (2, 4),
        stride: 2,
        activation: Activation::None,
    })
    .unwrap();
    tconv.init_weights(&mut prng);
    let x = Tensor4::from_vec(
        (1, 3, 2, 5),
        (0..30).map(|_| prng.range(-1.0, 1.0)).collect(),
    )
    .unwrap();
    check("deconv 2x4 s2", &tconv, &x, &mut prng);

    println!("all layer kinds verified against finite differences");
}
