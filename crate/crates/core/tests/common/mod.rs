//! Dense real-space reference Hamiltonians.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use semidirac::dynamics::EmitterSite;
use semidirac::{LatticeModel, Sublattice, Variant};

pub type C64 = Complex64;

/// Site index of `(n1, n2, sublattice)` on an `l1 x l2` torus.
pub fn site(l1: usize, l2: usize, n: (i64, i64), s: Sublattice) -> usize {
    let a = n.0.rem_euclid(l1 as i64) as usize;
    let b = n.1.rem_euclid(l2 as i64) as usize;
    2 * (a * l2 + b) + usize::from(s == Sublattice::B)
}

/// Real symmetric bath Hamiltonian built from explicit hoppings.
pub fn bath(model: &LatticeModel, l1: usize, l2: usize) -> DMatrix<f64> {
    let dim = 2 * l1 * l2;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let hop = |h: &mut DMatrix<f64>, i: usize, j: usize, t: f64| {
        h[(i, j)] += t;
        if i != j {
            h[(j, i)] += t;
        }
    };
    use Sublattice::{A, B};
    for a in 0..l1 as i64 {
        for b in 0..l2 as i64 {
            let n = (a, b);
            let at = |d: (i64, i64), s| site(l1, l2, (n.0 + d.0, n.1 + d.1), s);
            let (j1, j2) = (model.j1, model.j2);
            match model.variant {
                Variant::AnisotropicHoneycomb => {
                    hop(&mut h, at((0, 0), A), at((0, 0), B), -model.beta1 * j1);
                    hop(&mut h, at((0, 0), A), at((1, 0), B), -j1);
                    hop(&mut h, at((0, 0), A), at((0, 1), B), -j1);
                    for s in [A, B] {
                        hop(&mut h, at((0, 0), s), at((1, 0), s), -j2);
                        hop(&mut h, at((0, 0), s), at((0, 1), s), -j2);
                        hop(&mut h, at((0, 0), s), at((1, -1), s), -model.beta2 * j2);
                    }
                }
                Variant::Mizoguchi => {
                    for (d, sign) in [((1, 0), 1.0), ((0, 1), -1.0)] {
                        hop(&mut h, at((0, 0), A), at(d, A), j1 + sign * j2);
                        hop(&mut h, at((0, 0), B), at(d, B), -j1 + sign * j2);
                        hop(&mut h, at((0, 0), A), at(d, B), sign * j2);
                        hop(&mut h, at(d, A), at((0, 0), B), sign * j2);
                    }
                }
            }
        }
    }
    h
}

/// Bath plus emitters appended after the lattice sites.
pub fn full(
    model: &LatticeModel,
    l1: usize,
    l2: usize,
    emitters: &[EmitterSite],
    delta: f64,
    g: f64,
) -> DMatrix<f64> {
    let nb = 2 * l1 * l2;
    let dim = nb + emitters.len();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    h.view_mut((0, 0), (nb, nb)).copy_from(&bath(model, l1, l2));
    for (j, e) in emitters.iter().enumerate() {
        let s = site(l1, l2, (e.n1, e.n2), e.sublattice);
        h[(nb + j, nb + j)] = delta;
        h[(nb + j, s)] = g;
        h[(s, nb + j)] = g;
    }
    h
}

/// `exp(-i H t) psi` by eigendecomposition.
pub fn propagate(h: &DMatrix<f64>, psi: &DVector<C64>, t: f64) -> DVector<C64> {
    let eig = SymmetricEigen::new(h.clone());
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let coeff = v.adjoint() * psi;
    let phased = DVector::from_iterator(
        coeff.len(),
        coeff
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, e)| c * C64::from_polar(1.0, -e * t)),
    );
    v * phased
}
