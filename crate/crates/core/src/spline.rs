//! Natural cubic splines and chord-parameterized planar curves.

use crate::error::{Error, Result};
use crate::geom::Point2;

/// Natural cubic spline `y(s)` through `(knots[i], values[i])`.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    knots: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl CubicSpline {
    /// `knots` must be strictly increasing and at least two long.
    pub fn natural(knots: &[f64], values: &[f64]) -> Result<Self> {
        let n = knots.len();
        if n != values.len() {
            return Err(Error::LengthMismatch(n, values.len()));
        }
        if n < 2 {
            return Err(Error::Degenerate);
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        if h.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Degenerate);
        }
        // second-derivative coefficients, tridiagonal with m[0] = m[n-1] = 0
        let mut c = vec![0.0; n];
        if n > 2 {
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for k in 0..m {
                let i = k + 1;
                diag[k] = 2.0 * (h[i - 1] + h[i]);
                rhs[k] = 3.0 * ((values[i + 1] - values[i]) / h[i] - (values[i] - values[i - 1]) / h[i - 1]);
            }
            // Thomas algorithm; sub/super diagonals are h[k] / h[k+1]
            for k in 1..m {
                let w = h[k] / diag[k - 1];
                diag[k] -= w * h[k];
                rhs[k] -= w * rhs[k - 1];
            }
            let mut sol = vec![0.0; m];
            sol[m - 1] = rhs[m - 1] / diag[m - 1];
            for k in (0..m - 1).rev() {
                sol[k] = (rhs[k] - h[k + 1] * sol[k + 1]) / diag[k];
            }
            c[1..n - 1].copy_from_slice(&sol);
        }
        let mut b = vec![0.0; n - 1];
        let mut d = vec![0.0; n - 1];
        for i in 0..n - 1 {
            b[i] = (values[i + 1] - values[i]) / h[i] - h[i] * (2.0 * c[i] + c[i + 1]) / 3.0;
            d[i] = (c[i + 1] - c[i]) / (3.0 * h[i]);
        }
        Ok(Self {
            knots: knots.to_vec(),
            a: values.to_vec(),
            b,
            c,
            d,
        })
    }

    fn segment(&self, s: f64) -> (usize, f64) {
        let n = self.knots.len();
        let i = match self.knots.binary_search_by(|k| k.total_cmp(&s)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        (i, s - self.knots[i])
    }

    pub fn eval(&self, s: f64) -> f64 {
        let (i, t) = self.segment(s);
        self.a[i] + t * (self.b[i] + t * (self.c[i] + t * self.d[i]))
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let (i, t) = self.segment(s);
        self.b[i] + t * (2.0 * self.c[i] + 3.0 * t * self.d[i])
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        let (i, t) = self.segment(s);
        2.0 * self.c[i] + 6.0 * t * self.d[i]
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }
}

/// Planar curve through waypoints, parameterized by cumulative chord length.
#[derive(Debug, Clone)]
pub struct Spline2D {
    x: CubicSpline,
    y: CubicSpline,
}

impl Spline2D {
    /// Consecutive duplicate waypoints are dropped first; fewer than two
    /// distinct points is an error.
    pub fn through(points: &[Point2]) -> Result<Self> {
        let pts = dedup_consecutive(points);
        if pts.len() < 2 {
            return Err(Error::Degenerate);
        }
        let mut s = Vec::with_capacity(pts.len());
        s.push(0.0);
        for w in pts.windows(2) {
            let last = *s.last().unwrap();
            s.push(last + (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]));
        }
        let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p[1]).collect();
        Ok(Self {
            x: CubicSpline::natural(&s, &xs)?,
            y: CubicSpline::natural(&s, &ys)?,
        })
    }

    pub fn knots(&self) -> &[f64] {
        self.x.knots()
    }

    pub fn length_param(&self) -> f64 {
        *self.knots().last().unwrap()
    }

    pub fn position(&self, s: f64) -> Point2 {
        [self.x.eval(s), self.y.eval(s)]
    }

    pub fn tangent(&self, s: f64) -> Point2 {
        [self.x.derivative(s), self.y.derivative(s)]
    }

    pub fn heading(&self, s: f64) -> f64 {
        let [dx, dy] = self.tangent(s);
        dy.atan2(dx)
    }

    /// Parameters of successive points whose straight-line distance from the
    /// previous one is exactly `spacing`, starting at the first knot. The end
    /// of the curve is appended when the remaining piece is shorter than
    /// `spacing` (and not negligibly short).
    pub fn resample_params(&self, spacing: f64) -> Vec<f64> {
        const SUBSTEPS_PER_UNIT: f64 = 200.0;
        let end = self.length_param();
        let probe = (spacing / 8.0).min(1.0 / SUBSTEPS_PER_UNIT).max(1e-6);
        let mut params = vec![0.0];
        let mut s = 0.0;
        loop {
            let origin = self.position(s);
            let dist = |u: f64| {
                let p = self.position(u);
                (p[0] - origin[0]).hypot(p[1] - origin[1])
            };
            // first crossing of the circle of radius `spacing` along the curve
            let mut lo = s;
            let mut found = None;
            while lo < end {
                let hi = (lo + probe).min(end);
                if dist(hi) >= spacing {
                    found = Some((lo, hi));
                    break;
                }
                lo = hi;
            }
            let Some((mut a, mut b)) = found else { break };
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if dist(m) >= spacing {
                    b = m;
                } else {
                    a = m;
                }
            }
            s = b;
            params.push(s);
        }
        let last = *params.last().unwrap();
        let tail = {
            let p = self.position(last);
            let q = self.position(end);
            (p[0] - q[0]).hypot(p[1] - q[1])
        };
        if end - last > 1e-9 && tail > 1e-6 {
            params.push(end);
        }
        params
    }
}

pub fn dedup_consecutive(points: &[Point2]) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::with_capacity(points.len());
    for &p in points {
        if out.last().is_none_or(|q| q != &p) {
            out.push(p);
        }
    }
    out
}
