use super::symbol::SymbolFn;

/// Measured constants for a claimed membership `m ∈ M_a^b`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolClassReport {
    pub a: f64,
    pub b: f64,
    /// Value constant `C0` at the widest sample range.
    pub c0: f64,
    /// First-derivative constant `C1` at the widest sample range.
    pub c1: f64,
    /// `(decades, C0, C1)` for each refinement of the radial sample range.
    pub refinement: Vec<(u32, f64, f64)>,
    pub pass: bool,
}

fn weight(r: f64, a: f64, b: f64) -> f64 {
    if r <= 1.0 {
        r.powf(a)
    } else {
        r.powf(b)
    }
}

fn directions() -> Vec<[f64; 3]> {
    let raw: [[f64; 3]; 13] = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
        [1.0, 1.0, 0.0],
        [1.0, 0.0, 1.0],
        [0.0, 1.0, -1.0],
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [0.3, -0.5, 0.81],
        [-0.7, 0.2, 0.4],
        [0.1, 0.9, -0.35],
        [0.05, 0.02, 0.998],
    ];
    raw.iter()
        .map(|d| {
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            [d[0] / n, d[1] / n, d[2] / n]
        })
        .collect()
}

fn constants(m: &SymbolFn, a: f64, b: f64, decades: u32) -> (f64, f64) {
    let per_decade = 24;
    let total = 2 * decades * per_decade;
    let mut c0: f64 = 0.0;
    let mut c1: f64 = 0.0;
    for d in directions() {
        for s in 0..=total {
            let e = -(decades as f64) + s as f64 / per_decade as f64;
            let r = 10f64.powf(e);
            let xi = [r * d[0], r * d[1], r * d[2]];
            let v = m.eval(xi).norm();
            c0 = c0.max(v / weight(r, a, b));
            let h = 1e-4 * r;
            let mut grad: f64 = 0.0;
            for j in 0..3 {
                let mut p = xi;
                let mut q = xi;
                p[j] += h;
                q[j] -= h;
                let g = (m.eval(p) - m.eval(q)).norm() / (2.0 * h);
                grad = grad.max(g);
            }
            c1 = c1.max(grad / weight(r, a - 1.0, b - 1.0));
        }
    }
    (c0, c1)
}

/// Samples `|m|` and `|∇m|` on log-spaced radii along a fixed direction set
/// and measures the constants in `|m| ≤ C0 w_{a,b}`, `|∇m| ≤ C1 w_{a-1,b-1}`,
/// where `w_{a,b}(r) = r^a` for `r ≤ 1` and `r^b` otherwise. The sample range
/// is widened from `10^{±2}` to `10^{±8}`; membership fails when a constant
/// is non-finite or keeps growing under widening.
pub fn verify_symbol_class(m: &SymbolFn, a: f64, b: f64) -> SymbolClassReport {
    let refinement: Vec<(u32, f64, f64)> = [2u32, 4, 6, 8]
        .iter()
        .map(|&d| {
            let (c0, c1) = constants(m, a, b, d);
            (d, c0, c1)
        })
        .collect();
    let (_, c0_prev, c1_prev) = refinement[refinement.len() - 2];
    let (_, c0, c1) = refinement[refinement.len() - 1];
    let finite = c0.is_finite() && c1.is_finite();
    let stable = c0 <= 1.05 * c0_prev + 1e-300 && c1 <= 1.05 * c1_prev + 1e-300;
    SymbolClassReport {
        a,
        b,
        c0,
        c1,
        refinement,
        pass: finite && stable,
    }
}
