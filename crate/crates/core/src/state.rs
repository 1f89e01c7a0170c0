//! Plain statevector helpers. States are `Vec<Complex64>` in the
//! computational basis.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type State = Vec<Complex64>;

pub fn basis_state(dimension: usize, index: usize) -> State {
    let mut s = vec![Complex64::new(0.0, 0.0); dimension];
    s[index] = Complex64::new(1.0, 0.0);
    s
}

/// Haar-random pure state.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dimension: usize) -> State {
    let mut s: State = (0..dimension)
        .map(|_| {
            Complex64::new(
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            )
        })
        .collect();
    normalize(&mut s);
    s
}

pub fn norm_sqr(s: &[Complex64]) -> f64 {
    s.iter().map(Complex64::norm_sqr).sum()
}

pub fn norm(s: &[Complex64]) -> f64 {
    norm_sqr(s).sqrt()
}

pub fn normalize(s: &mut [Complex64]) {
    let n = norm(s);
    if n > 0.0 {
        for z in s.iter_mut() {
            *z /= n;
        }
    }
}

/// `⟨a|b⟩`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `|⟨a|b⟩|²` for normalised inputs.
pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    inner(a, b).norm_sqr()
}

/// `min_φ ‖a − e^{iφ} b‖`, the vector distance with the global phase
/// quotiented out.
pub fn phase_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    // align b onto a explicitly; the closed form 2 − 2|⟨a|b⟩| cancels badly
    let overlap = inner(b, a);
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y * phase).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `‖a − b‖` without any phase freedom.
pub fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
