//! Bundled coefficient matrices for the synthetic benchmark. The CSV files
//! under data/ are the canonical copies; they are embedded here so the CLI
//! reproduction command works without any external files.

use nalgebra::DMatrix;

const A1_CSV: &str = include_str!("../data/a1.csv");
const A2_CSV: &str = include_str!("../data/a2.csv");
const A3_CSV: &str = include_str!("../data/a3.csv");

fn parse(csv: &str) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|c| c.trim().parse::<f64>().expect("fixture entry"))
                .collect()
        })
        .collect();
    let ncols = rows[0].len();
    DMatrix::from_row_slice(rows.len(), ncols, &rows.concat())
}

/// 5x8 benchmark matrix (dense, random entries).
pub fn a1() -> DMatrix<f64> {
    parse(A1_CSV)
}

/// 5x5 benchmark matrix (fewer columns, more zeros).
pub fn a2() -> DMatrix<f64> {
    parse(A2_CSV)
}

/// 5x3 benchmark matrix (lower-trapezoidal zero pattern).
pub fn a3() -> DMatrix<f64> {
    parse(A3_CSV)
}
