mod common;

use common::*;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use semidirac::dynamics::{self, EmitterConfig, EmitterSite, EvolveOptions, Propagator, State};
use semidirac::spectral::{self, SelfEnergyOptions};
use semidirac::{BandGrid, LatticeModel, Sublattice};

fn compare_with_matrix_exponential(model: LatticeModel, l: usize) {
    let grid = BandGrid::square(model, l).unwrap();
    let em = EmitterConfig {
        positions: vec![
            EmitterSite::new(1, 2, Sublattice::A),
            EmitterSite::new(-3, 1, Sublattice::B),
        ],
        delta: 0.2,
        g: 0.4,
    };
    let t = 6.0;
    let rec = dynamics::evolve(&grid, &em, t, 0.005, &[t]).unwrap();
    let h = full(&model, l, l, &em.positions, em.delta, em.g);
    let nb = 2 * l * l;
    let mut psi = DVector::<C64>::zeros(nb + 2);
    psi[nb] = C64::new(1.0, 0.0);
    let out = propagate(&h, &psi, t);

    for j in 0..2 {
        let c = *rec.c_e[j].last().unwrap();
        assert!((c - out[nb + j]).norm() < 1e-6, "emitter {j}: {c} vs {}", out[nb + j]);
    }
    let snap = &rec.snapshots[0];
    for a in 0..l as i64 {
        for b in 0..l as i64 {
            let i = (a as usize) * l + b as usize;
            let ra = out[site(l, l, (a, b), Sublattice::A)];
            let rb = out[site(l, l, (a, b), Sublattice::B)];
            assert!((snap.c_a[i] - ra).norm() < 1e-6, "A ({a},{b})");
            assert!((snap.c_b[i] - rb).norm() < 1e-6, "B ({a},{b})");
        }
    }
}

#[test]
fn honeycomb_dynamics_matches_matrix_exponential() {
    let m = LatticeModel::honeycomb(1.0, 0.1, 1.4, 3.0).unwrap();
    compare_with_matrix_exponential(m, 8);
}

#[test]
fn mizoguchi_dynamics_matches_matrix_exponential() {
    let m = LatticeModel::mizoguchi(1.0, 0.3).unwrap();
    compare_with_matrix_exponential(m, 8);
}

fn complex_resolvent_element(h: &DMatrix<f64>, z: C64, i: usize) -> C64 {
    let n = h.nrows();
    let m = DMatrix::<C64>::from_fn(n, n, |r, c| {
        let d = if r == c { z } else { C64::new(0.0, 0.0) };
        d - C64::new(h[(r, c)], 0.0)
    });
    let mut e = DVector::<C64>::zeros(n);
    e[i] = C64::new(1.0, 0.0);
    m.lu().solve(&e).unwrap()[i]
}

#[test]
fn self_energy_matches_dense_resolvent() {
    let l = 12;
    let g = 0.3;
    for model in [
        LatticeModel::honeycomb(1.0, 0.1, 1.3, 2.0).unwrap(),
        LatticeModel::mizoguchi(1.0, 0.3).unwrap(),
    ] {
        let grid = BandGrid::square(model, l).unwrap();
        let h = bath(&model, l, l);
        for s in [Sublattice::A, Sublattice::B] {
            for z in [C64::new(0.37, 0.05), C64::new(-1.1, 0.2), C64::new(4.5, 0.0)] {
                let opts = SelfEnergyOptions { sublattice: s, ..Default::default() };
                let sigma = spectral::self_energy_with(&grid, z, g, opts).unwrap();
                let r = g * g * complex_resolvent_element(&h, z, site(l, l, (0, 0), s));
                assert!((sigma - r).norm() < 1e-10, "{s:?} z = {z}: {sigma} vs {r}");
            }
        }
    }
}

#[test]
fn bound_state_matches_in_gap_eigenvector() {
    let l = 24;
    let model = LatticeModel::nearest(2.1);
    let grid = BandGrid::square(model, l).unwrap();
    let (delta, g) = (0.03, 0.2);
    let e_bs = spectral::bound_state_energy(&grid, delta, g).unwrap();
    let em = [EmitterSite::new(0, 0, Sublattice::A)];
    let h = full(&model, l, l, &em, delta, g);
    let eig = SymmetricEigen::new(h);
    let nb = 2 * l * l;
    let (idx, ev) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - e_bs).abs().total_cmp(&(b.1 - e_bs).abs()))
        .unwrap();
    assert!((ev - e_bs).abs() < 1e-9, "{ev} vs {e_bs}");
    let (lo, hi) = grid.band_ranges(Default::default());
    assert!(*ev > lo.1 && *ev < hi.0, "eigenvalue {ev} not in the gap");

    let v = eig.eigenvectors.column(idx);
    let phase = v[nb].signum();
    let bs = spectral::bound_state_wavefunction(&grid, e_bs, Sublattice::A, g).unwrap();
    assert!((bs.emitter - phase * v[nb]).abs() < 1e-7);
    for a in 0..l as i64 {
        for b in 0..l as i64 {
            let ra = phase * v[site(l, l, (a, b), Sublattice::A)];
            let rb = phase * v[site(l, l, (a, b), Sublattice::B)];
            assert!((bs.a((a, b)) - ra).norm() < 1e-7);
            assert!((bs.b((a, b)) - rb).norm() < 1e-7);
        }
    }
}

#[test]
fn negated_hamiltonian_returns_initial_state() {
    let grid = BandGrid::square(LatticeModel::honeycomb(1.0, 0.1, 1.2, 2.5).unwrap(), 24).unwrap();
    let em = EmitterConfig::single(Sublattice::A, 0.1, 0.2);
    let dt = 0.01;
    let opts = EvolveOptions::new(15.0, dt);
    let init = State::excited(1, 0, grid.len());
    let fwd = Propagator::new(&grid, &em, dt).unwrap();
    let (_, mid) = dynamics::run(&fwd, &grid, &em, init.clone(), &opts).unwrap();
    assert!(mid.emitters[0].norm() < 0.99);
    let back = Propagator::with_direction(&grid, &em, dt, true).unwrap();
    let (_, end) = dynamics::run(&back, &grid, &em, mid, &opts).unwrap();
    assert!((end.emitters[0] - init.emitters[0]).norm() < 1e-6);
    let bath_err = end.bath.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
    assert!(bath_err < 1e-6);
}

#[test]
fn emitter_on_either_sublattice_decays_identically() {
    let grid = BandGrid::square(LatticeModel::honeycomb(1.0, 0.1, 1.0, 4.0).unwrap(), 32).unwrap();
    let a = dynamics::evolve(&grid, &EmitterConfig::single(Sublattice::A, 0.3, 0.15), 20.0, 0.01, &[]).unwrap();
    let b = dynamics::evolve(&grid, &EmitterConfig::single(Sublattice::B, 0.3, 0.15), 20.0, 0.01, &[]).unwrap();
    assert!(a.population(0).iter().zip(b.population(0)).any(|(x, _)| *x < 0.99));
    for (x, y) in a.c_e[0].iter().zip(&b.c_e[0]) {
        assert!((x.norm() - y.norm()).abs() < 1e-8);
    }
}

#[test]
fn norm_drift_stays_below_reporting_bound() {
    let grid = BandGrid::square(LatticeModel::nearest(1.0), 40).unwrap();
    let rec = dynamics::evolve(&grid, &EmitterConfig::single(Sublattice::A, 0.0, 0.1), 50.0, 0.0125, &[]).unwrap();
    assert!(rec.norm_drift < 1e-8, "{}", rec.norm_drift);
}

#[test]
fn exchange_is_conjugate_under_reversal() {
    let grid = BandGrid::square(LatticeModel::nearest(1.0), 32).unwrap();
    for r in [(1, 0), (2, 3), (-4, 1)] {
        let ab = dynamics::effective_coupling(&grid, 0.0, 0.1, r, (Sublattice::A, Sublattice::B)).unwrap();
        let ba = dynamics::effective_coupling(&grid, 0.0, 0.1, (-r.0, -r.1), (Sublattice::B, Sublattice::A)).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-12 * ab.norm().max(1e-30), "{r:?}: {ab} {ba}");
    }
}
