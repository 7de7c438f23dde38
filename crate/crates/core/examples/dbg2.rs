use extremalkit::linprog::{solve, LinearProgram};
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() {
    // dual-degenerate instance: maximize Re P(0) over the unit disc,
    // degree 8, 54 nodes, K=32 phases
    let t = 9usize;
    let k = 32usize;
    let nodes: Vec<Complex64> = (0..54)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / 54.0))
        .collect();
    let mut rows = Vec::new();
    let mut bounds = Vec::new();
    for z in &nodes {
        for p in 0..k {
            let th = 2.0 * PI * p as f64 / k as f64;
            let rot = Complex64::from_polar(1.0, th);
            let mut row = vec![0.0; 2 * t];
            let mut w = Complex64::new(1.0, 0.0);
            for j in 0..t {
                let v = rot * w;
                row[j] = v.re;
                row[t + j] = -v.im;
                w *= z;
            }
            rows.push(row);
            bounds.push((f64::NEG_INFINITY, 1.0));
        }
    }
    let mut c = vec![0.0; 2 * t];
    c[0] = 1.0; // Re P(0) with monomial basis at z=0
    let lp = LinearProgram { objective: c, rows, bounds };
    match solve(&lp) {
        Ok(s) => println!("status {:?} optimum {} iters {}", s.status, s.optimum, s.iterations),
        Err(e) => println!("ERROR: {e}"),
    }
}
