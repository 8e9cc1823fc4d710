//! Fixture builders and numeric helpers shared by the integration tests.

#![allow(dead_code)]

use lrtnet::data::{IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
use lrtnet::network::NetParams;
use lrtnet::OutputNonlinearity;

pub fn idx_images(magic: u32, count: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
    let mut b = Vec::new();
    for v in [magic, count, rows, cols] {
        b.extend_from_slice(&v.to_be_bytes());
    }
    b.extend_from_slice(pixels);
    b
}

pub fn idx_labels(magic: u32, labels: &[u8]) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(&magic.to_be_bytes());
    b.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    b.extend_from_slice(labels);
    b
}

/// `count` 28×28 images filled with `value`.
pub fn mnist_images(count: u32, value: u8) -> Vec<u8> {
    idx_images(IDX_IMAGES_MAGIC, count, 28, 28, &vec![value; 784 * count as usize])
}

pub fn mnist_labels(labels: &[u8]) -> Vec<u8> {
    idx_labels(IDX_LABELS_MAGIC, labels)
}

/// One CIFAR record with constant R, G and B planes.
pub fn cifar_record(label: u8, r: u8, g: u8, b: u8) -> Vec<u8> {
    let mut rec = vec![label];
    for v in [r, g, b] {
        rec.extend(std::iter::repeat_n(v, 1024));
    }
    rec
}

/// Central difference of `ω(z(θ))` with respect to every parameter.
pub fn finite_difference(p: &NetParams, x: &[f64], omega: &OutputNonlinearity, h: f64) -> Vec<f64> {
    let mut q = p.clone();
    (0..p.as_slice().len())
        .map(|i| {
            let orig = q.as_slice()[i];
            q.as_mut_slice()[i] = orig + h;
            let up = omega.omega(q.pre_output(x));
            q.as_mut_slice()[i] = orig - h;
            let down = omega.omega(q.pre_output(x));
            q.as_mut_slice()[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Hidden pre-activations of `p` at `x`.
pub fn pre_activations(p: &NetParams, x: &[f64]) -> Vec<f64> {
    let k = p.input_dim();
    p.hidden_weights()
        .chunks(k)
        .zip(p.hidden_bias())
        .map(|(row, a)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + a)
        .collect()
}
