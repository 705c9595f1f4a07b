#![allow(dead_code)]

use std::sync::Arc;

use cdr_core::complex::Complex;
use cdr_core::cover::build_cover;
use cdr_core::mesh::{build_interval_mesh, build_triangle_mesh, Mesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn complex(mesh: Mesh, sets: impl FnOnce(&Mesh) -> Vec<Vec<usize>>) -> Arc<Complex> {
    let mesh = Arc::new(mesh);
    let sets = sets(&mesh);
    Arc::new(Complex::new(Arc::new(build_cover(&mesh, sets).unwrap())))
}

pub fn interval_single(cells: usize) -> Arc<Complex> {
    complex(build_interval_mesh(0.0, 1.0, cells).unwrap(), |m| vec![(0..m.num_cells()).collect()])
}

pub fn interval_two(cells: usize) -> Arc<Complex> {
    complex(build_interval_mesh(0.0, 1.0, cells).unwrap(), |m| {
        vec![m.cells_where(|c| c[0] < 0.6), m.cells_where(|c| c[0] > 0.4)]
    })
}

/// Two rods on (−1, 1) overlapping on (−1/4, 1/4).
pub fn rods(cells_per_unit: usize) -> Arc<Complex> {
    complex(build_interval_mesh(-1.0, 1.0, 2 * cells_per_unit).unwrap(), |m| {
        vec![m.cells_where(|c| c[0] < 0.25), m.cells_where(|c| c[0] > -0.25)]
    })
}

/// Three intervals with a common triple overlap.
pub fn interval_three(cells: usize) -> Arc<Complex> {
    complex(build_interval_mesh(0.0, 1.0, cells).unwrap(), |m| {
        vec![
            m.cells_where(|c| c[0] < 0.6),
            m.cells_where(|c| c[0] > 0.3 && c[0] < 0.8),
            m.cells_where(|c| c[0] > 0.45),
        ]
    })
}

pub fn square_two(n: usize) -> Arc<Complex> {
    complex(build_triangle_mesh(0.0, 0.0, 1.0, 1.0, n, n).unwrap(), |m| {
        vec![m.cells_where(|c| c[0] < 0.6), m.cells_where(|c| c[0] > 0.4)]
    })
}

/// Two fully overlapping continua.
pub fn double_porosity(n: usize) -> Arc<Complex> {
    complex(build_triangle_mesh(0.0, 0.0, 1.0, 1.0, n, n).unwrap(), |m| {
        let all: Vec<usize> = (0..m.num_cells()).collect();
        vec![all.clone(), all]
    })
}

/// Bulk plus an embedded disk, `U_1 ⊂ U_0`.
pub fn inclusion(n: usize) -> Arc<Complex> {
    complex(build_triangle_mesh(0.0, 0.0, 1.0, 1.0, n, n).unwrap(), |m| {
        vec![(0..m.num_cells()).collect(), m.cells_where(|c| (c[0] - 0.5).powi(2) + (c[1] - 0.5).powi(2) < 0.09)]
    })
}

fn in_sector(c: [f64; 2], from: f64, to: f64) -> bool {
    let mut t = (c[1] - 0.5).atan2(c[0] - 0.5).to_degrees();
    while t < from {
        t += 360.0;
    }
    t <= to
}

/// Unit square minus the middle third, covered by three angular sectors.
pub fn square_with_hole(n: usize) -> Arc<Complex> {
    let full = build_triangle_mesh(0.0, 0.0, 1.0, 1.0, n, n).unwrap();
    let keep = full.cells_where(|c| !((1.0 / 3.0..2.0 / 3.0).contains(&c[0]) && (1.0 / 3.0..2.0 / 3.0).contains(&c[1])));
    complex(full.restrict_cells(&keep).unwrap(), |m| {
        vec![
            m.cells_where(|c| in_sector(c, -30.0, 150.0)),
            m.cells_where(|c| in_sector(c, 90.0, 270.0)),
            m.cells_where(|c| in_sector(c, 210.0, 390.0)),
        ]
    })
}

/// Three random sets on a square: each cell gets a home set and joins the
/// others with probability 0.3.
pub fn random_three(n: usize, seed: u64) -> Arc<Complex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    complex(build_triangle_mesh(0.0, 0.0, 1.0, 1.0, n, n).unwrap(), |m| {
        let mut sets = vec![vec![0, 1, 2], vec![3, 4], vec![5, 6]];
        for c in 7..m.num_cells() {
            let home = rng.random_range(0..3);
            for (s, set) in sets.iter_mut().enumerate() {
                if s == home || rng.random_bool(0.3) {
                    set.push(c);
                }
            }
        }
        sets
    })
}

/// The named covers every structural property is checked on.
pub fn test_covers() -> Vec<(&'static str, Arc<Complex>)> {
    vec![
        ("interval", interval_two(8)),
        ("rods", rods(4)),
        ("interval-3", interval_three(10)),
        ("square", square_two(4)),
        ("double-porosity", double_porosity(3)),
        ("inclusion", inclusion(5)),
        ("random-3", random_three(4, 7)),
    ]
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}
