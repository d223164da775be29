//! Extended-precision (double-double, ~31 significant digits) linear algebra
//! used as an independent reference for the posterior formulas. Everything
//! here is deliberately naive — textbook compensated arithmetic and Gaussian
//! elimination with partial pivoting — so that it shares no code path, no
//! factorization, and no library with the implementations under test.

/// A double-double value `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Requires |a| ≥ |b|.
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(a: f64) -> Dd {
        Dd { hi: a, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::new(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::new(q2)));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::new(q3))
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Natural log, accurate to roughly double precision — enough for
    /// comparisons at 1e-11, not a full double-double log.
    pub fn ln_f64(self) -> f64 {
        let l = self.hi.ln();
        // One Newton correction: ln(hi+lo) ≈ ln(hi) + lo/hi.
        l + self.lo / self.hi
    }
}

pub fn dd_sum(values: impl IntoIterator<Item = Dd>) -> Dd {
    values.into_iter().fold(Dd::ZERO, Dd::add)
}

pub fn dd_dot(a: &[Dd], b: &[Dd]) -> Dd {
    dd_sum(a.iter().zip(b).map(|(x, y)| x.mul(*y)))
}

/// Solves `A·x = b` by Gaussian elimination with partial pivoting in
/// double-double arithmetic. `a` is row-major n×n.
pub fn dd_solve(a: &[Vec<Dd>], b: &[Dd]) -> Vec<Dd> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i][col].hi.abs().total_cmp(&m[j][col].hi.abs()))
            .unwrap();
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        assert!(m[col][col].hi != 0.0, "singular system at column {col}");
        for row in (col + 1)..n {
            let factor = m[row][col].div(m[col][col]);
            for k in col..n {
                let delta = factor.mul(m[col][k]);
                m[row][k] = m[row][k].sub(delta);
            }
            rhs[row] = rhs[row].sub(factor.mul(rhs[col]));
        }
    }
    let mut x = vec![Dd::ZERO; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in (row + 1)..n {
            acc = acc.sub(m[row][k].mul(x[k]));
        }
        x[row] = acc.div(m[row][row]);
    }
    x
}

/// log(det A) for a symmetric positive definite `A`, from the pivots of the
/// same elimination.
pub fn dd_log_det(a: &[Vec<Dd>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut log_det = 0.0;
    for col in 0..n {
        // SPD input: unpivoted elimination is stable and keeps every pivot
        // positive, so the determinant is the plain pivot product. (Column
        // pivoting would sometimes swap rows here — a Schur complement's
        // column max need not be its diagonal — and break that identity.)
        assert!(m[col][col].hi > 0.0, "non-positive pivot for SPD input");
        log_det += m[col][col].ln_f64();
        for row in (col + 1)..n {
            let factor = m[row][col].div(m[col][col]);
            for k in col..n {
                let delta = factor.mul(m[col][k]);
                m[row][k] = m[row][k].sub(delta);
            }
        }
    }
    log_det
}
