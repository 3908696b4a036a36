#![allow(dead_code)]

pub mod oracle;

/// Largest entrywise difference between a sparse and a dense matrix.
pub fn max_diff(a: &gelflow::linsolve::CsrMatrix, b: &[Vec<f64>]) -> f64 {
    let d = a.to_dense();
    assert_eq!(d.len(), b.len());
    d.iter()
        .zip(b)
        .flat_map(|(r, s)| {
            assert_eq!(r.len(), s.len());
            r.iter().zip(s).map(|(x, y)| (x - y).abs())
        })
        .fold(0.0, f64::max)
}

pub fn max_diff_vec(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
