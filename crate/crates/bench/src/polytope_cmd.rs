//! Desk-scale dump of the selection polytope at a point: enumerate the
//! feasible selection pairs, evaluate the corresponding oblique
//! projections of a fixed field value, and write vertices with pairwise
//! distances.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lodei_core::kernels::FactoredMatrix;
use lodei_core::manifold::{polytope_vertices, small_worked_example};
use lodei_core::mat::{random_normal, Mat};

use crate::csvio::fmt_e;
use crate::error::BenchError;

#[derive(Clone, Debug)]
pub enum PolytopeInput {
    /// The 3 x 3 rank-2 worked example (two feasible row selections).
    SmallExample,
    /// A seeded random point (generically a single vertex).
    Random { m: usize, n: usize, rank: usize, seed: u64 },
    /// A rank-2 4 x 4 point with bitwise ties on both sides.
    Tie4x4,
    /// Whitespace-separated dense matrix, truncated to the given rank.
    MatrixFile { path: String, rank: usize },
}

pub struct PolytopeReport {
    pub vertices: Vec<Mat<f64>>,
    pub pairwise: Vec<(usize, usize, f64)>,
}

fn tie_point_4x4() -> FactoredMatrix<f64> {
    let s = 1.0 / 2f64.sqrt();
    let mut u = Mat::<f64>::zeros(4, 2);
    u[(0, 0)] = s;
    u[(1, 0)] = s;
    u[(2, 1)] = 1.0;
    let mut sm = Mat::<f64>::zeros(2, 2);
    sm[(0, 0)] = 3.0;
    sm[(1, 1)] = 1.0;
    let mut v = Mat::<f64>::zeros(4, 2);
    v[(0, 0)] = s;
    v[(1, 0)] = s;
    v[(3, 1)] = 1.0;
    FactoredMatrix::new(u, sm, v)
}

pub fn polytope(input: &PolytopeInput, tau: f64, fy_seed: u64) -> Result<PolytopeReport, BenchError> {
    let y = match input {
        PolytopeInput::SmallExample => small_worked_example(),
        PolytopeInput::Tie4x4 => tie_point_4x4(),
        PolytopeInput::Random { m, n, rank, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let g = random_normal::<f64, _>(*m, *n, &mut rng);
            FactoredMatrix::from_dense_truncated(&g, *rank)
        }
        PolytopeInput::MatrixFile { path, rank } => {
            let text = std::fs::read_to_string(path)
                .map_err(|_| BenchError::Io(format!("matrix file not found: {path}")))?;
            let rows: Vec<Vec<f64>> = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| {
                    l.split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| BenchError::Config(format!("bad number in {path}")))
                })
                .collect::<Result<_, _>>()?;
            let m = rows.len();
            if m == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
                return Err(BenchError::Config(format!("{path}: ragged or empty matrix")));
            }
            let n = rows[0].len();
            let a = Mat::from_fn(m, n, |i, j| rows[i][j]);
            FactoredMatrix::from_dense_truncated(&a, *rank)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(fy_seed);
    let fy = random_normal::<f64, _>(y.nrows(), y.ncols(), &mut rng);
    let vertices = polytope_vertices(&y, &fy, tau)?;
    let mut pairwise = Vec::new();
    for i in 0..vertices.len() {
        for j in i + 1..vertices.len() {
            pairwise.push((i, j, vertices[i].sub(&vertices[j]).norm_fro()));
        }
    }
    Ok(PolytopeReport { vertices, pairwise })
}

pub fn write_polytope(dir: &str, rep: &PolytopeReport) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir)?;
    let base = std::path::Path::new(dir);
    let mut f = std::fs::File::create(base.join("vertices.csv"))?;
    writeln!(f, "vertex,i,j,value")?;
    for (v, m) in rep.vertices.iter().enumerate() {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                writeln!(f, "{},{},{},{}", v, i, j, fmt_e(m[(i, j)]))?;
            }
        }
    }
    let mut g = std::fs::File::create(base.join("distances.csv"))?;
    writeln!(g, "a,b,frobenius_distance")?;
    for (a, b, d) in &rep.pairwise {
        writeln!(g, "{},{},{}", a, b, fmt_e(*d))?;
    }
    Ok(())
}
