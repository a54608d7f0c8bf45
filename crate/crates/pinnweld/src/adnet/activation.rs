//! Activation functions with analytic derivatives up to third order.
//!
//! Third derivatives are required because the reverse pass differentiates
//! through the second-derivative jet propagation. GELU uses the tanh form so
//! every derivative is an exact chain-rule composition of the value path.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Gelu,
    Elu,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/π)
const GELU_A: f64 = 0.044_715;

impl Activation {
    /// σ(x).
    pub fn value(self, x: f64) -> f64 {
        self.eval3(x).0
    }

    /// (σ, σ').
    pub fn eval1(self, x: f64) -> (f64, f64) {
        let (v, d1, _, _) = self.eval3(x);
        (v, d1)
    }

    /// (σ, σ', σ'', σ''').
    pub fn eval3(self, x: f64) -> (f64, f64, f64, f64) {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                let g = 1.0 - t * t;
                (t, g, -2.0 * t * g, -2.0 * g * (1.0 - 3.0 * t * t))
            }
            Activation::Gelu => {
                // g(x) = 0.5·x·(1 + tanh(u)), u = c·(x + a·x³)
                let u = GELU_C * (x + GELU_A * x * x * x);
                let u1 = GELU_C * (1.0 + 3.0 * GELU_A * x * x);
                let u2 = 6.0 * GELU_C * GELU_A * x;
                let u3 = 6.0 * GELU_C * GELU_A;
                let th = u.tanh();
                let t1 = 1.0 - th * th;
                let t2 = -2.0 * th * t1;
                let t3 = -2.0 * t1 * (1.0 - 3.0 * th * th);
                // tanh(u(x)) derivatives in x by Faà di Bruno
                let th1 = t1 * u1;
                let th2 = t2 * u1 * u1 + t1 * u2;
                let th3 = t3 * u1 * u1 * u1 + 3.0 * t2 * u1 * u2 + t1 * u3;
                let v = 0.5 * x * (1.0 + th);
                let d1 = 0.5 * (1.0 + th + x * th1);
                let d2 = 0.5 * (2.0 * th1 + x * th2);
                let d3 = 0.5 * (3.0 * th2 + x * th3);
                (v, d1, d2, d3)
            }
            Activation::Elu => {
                if x > 0.0 {
                    (x, 1.0, 0.0, 0.0)
                } else {
                    let e = x.exp();
                    (e - 1.0, e, e, e)
                }
            }
        }
    }
}
