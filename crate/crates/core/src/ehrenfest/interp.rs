//! Piecewise cubic Hermite interpolation on ascending nodes.
//!
//! Node slopes come from the three-point Lagrange derivative (one-sided at
//! the ends), so quadratics are reproduced exactly everywhere, including the
//! first and last interval.

#[derive(Debug, Clone)]
pub struct CubicInterpolant {
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// `cumulative[i] = ∫_{nodes[0]}^{nodes[i]}` of the interpolant.
    cumulative: Vec<f64>,
}

impl CubicInterpolant {
    /// Needs at least three strictly ascending nodes.
    pub fn new(nodes: &[f64], values: &[f64]) -> Self {
        let n = nodes.len();
        assert!(n >= 3 && values.len() == n);
        let mut slopes = vec![0.0; n];
        for (i, slope) in slopes.iter_mut().enumerate() {
            let j = i.clamp(1, n - 2);
            *slope = lagrange_slope(
                [nodes[j - 1], nodes[j], nodes[j + 1]],
                [values[j - 1], values[j], values[j + 1]],
                nodes[i],
            );
        }
        let mut cumulative = vec![0.0; n];
        for i in 1..n {
            let h = nodes[i] - nodes[i - 1];
            let piece =
                h * (values[i - 1] + values[i]) / 2.0 + h * h * (slopes[i - 1] - slopes[i]) / 12.0;
            cumulative[i] = cumulative[i - 1] + piece;
        }
        Self {
            nodes: nodes.to_vec(),
            values: values.to_vec(),
            slopes,
            cumulative,
        }
    }

    pub fn min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min() && x <= self.max()
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        }
    }

    /// Evaluates the interpolant; outside the node range the end cubic is
    /// extrapolated.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.interval(x);
        let h = self.nodes[i + 1] - self.nodes[i];
        let s = (x - self.nodes[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[i]
            + h10 * h * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.slopes[i + 1]
    }

    /// `∫_{nodes[0]}^{x}` of the interpolant.
    pub fn integral(&self, x: f64) -> f64 {
        let i = self.interval(x);
        let h = self.nodes[i + 1] - self.nodes[i];
        let s = (x - self.nodes[i]) / h;
        let (s2, s3, s4) = (s * s, s * s * s, s * s * s * s);
        // antiderivatives of the Hermite basis on [0, s]
        let i00 = s4 / 2.0 - s3 + s;
        let i10 = s4 / 4.0 - 2.0 * s3 / 3.0 + s2 / 2.0;
        let i01 = -s4 / 2.0 + s3;
        let i11 = s4 / 4.0 - s3 / 3.0;
        self.cumulative[i]
            + h * (i00 * self.values[i]
                + i10 * h * self.slopes[i]
                + i01 * self.values[i + 1]
                + i11 * h * self.slopes[i + 1])
    }
}

fn lagrange_slope(x: [f64; 3], y: [f64; 3], at: f64) -> f64 {
    let [x0, x1, x2] = x;
    let [y0, y1, y2] = y;
    y0 * (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2))
        + y1 * (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2))
        + y2 * (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1))
}
