//! `∫₀ᴸ z^k e^{θz} dz` for complex `θ`, singularity-safe at `θ → 0`.
//!
//! Everything is reduced to the unit interval, `∫₀ᴸ z^k e^{θz} dz = L^{k+1} J_k(θL)`
//! with `J_k(x) = ∫₀¹ u^k e^{xu} du`, and `J_k` is evaluated by one of three
//! routes depending on `|x|`:
//!
//! * `|x| < ε_θ`: the Taylor series `Σ_n xⁿ / (n! (k+n+1))`.
//! * `|x| ≥ k`: the closed form, through its recurrence
//!   `J_m = (eˣ − m J_{m−1}) / x` seeded with `J_0 = expm1(x)/x`.
//!   Unrolled, this is exactly
//!   `eˣ Σ_m (−1)^m k!/(k−m)! x^{−m−1} − (−1)^k k! x^{−k−1}`.
//! * `ε_θ ≤ |x| < k`: the same identity run downward,
//!   `J_{m−1} = (eˣ − x J_m) / m`, seeded far above `k`.
//!
//! The closed form cancels catastrophically when `|x| < k` (its terms grow
//! like `k!/|x|^{k+1}`), which is what the downward sweep avoids.

use num_complex::Complex64;

/// Complex `eˣ − 1` without cancellation near zero.
pub fn expm1(x: Complex64) -> Complex64 {
    let (a, b) = (x.re, x.im);
    let s = (0.5 * b).sin();
    Complex64::new(a.exp_m1() * b.cos() - 2.0 * s * s, a.exp() * b.sin())
}

/// Branch selection for the monomial–exponential integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpKernel {
    /// Below this `|θL|` the Taylor series is used.
    pub eps_theta: f64,
    pub series_terms: usize,
}

impl Default for ExpKernel {
    fn default() -> Self {
        Self {
            eps_theta: 1e-3,
            series_terms: 24,
        }
    }
}

/// How far above `k` the downward sweep starts.
const DOWNWARD_HEADROOM: usize = 60;

impl ExpKernel {
    /// `∫₀ᴸ z^k e^{θz} dz`.
    pub fn integral(&self, k: usize, theta: Complex64, length: f64) -> Complex64 {
        self.unit(k, theta * length) * length.powi(k as i32 + 1)
    }

    /// `J_k(x) = ∫₀¹ u^k e^{xu} du`.
    pub fn unit(&self, k: usize, x: Complex64) -> Complex64 {
        let r = x.norm();
        if r < self.eps_theta {
            self.series(k, x)
        } else if r >= k as f64 {
            *upward(k, x).last().expect("k+1 values")
        } else {
            downward(k, x)[k]
        }
    }

    /// `J_0(x) … J_k(x)` in one sweep.
    pub fn unit_all(&self, k: usize, x: Complex64) -> Vec<Complex64> {
        let r = x.norm();
        if r < self.eps_theta {
            (0..=k).map(|m| self.series(m, x)).collect()
        } else if r >= k as f64 {
            upward(k, x)
        } else {
            // The downward sweep is accurate for every m ≤ k; the upward one
            // only for m ≤ |x|. Splice them.
            let mut down = downward(k, x);
            down.truncate(k + 1);
            let cut = r.floor() as usize;
            if cut >= 1 {
                let up = upward(cut.min(k), x);
                down[..up.len()].copy_from_slice(&up);
            }
            down
        }
    }

    fn series(&self, k: usize, x: Complex64) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut power = Complex64::new(1.0, 0.0); // xⁿ / n!
        for n in 0..self.series_terms.max(1) {
            sum += power / (k + n + 1) as f64;
            power = power * x / (n + 1) as f64;
        }
        sum
    }
}

fn upward(k: usize, x: Complex64) -> Vec<Complex64> {
    let ex = x.exp();
    let mut out = Vec::with_capacity(k + 1);
    let mut j = expm1(x) / x;
    out.push(j);
    for m in 1..=k {
        j = (ex - j * m as f64) / x;
        out.push(j);
    }
    out
}

/// `J_0 … J_top` from a downward sweep; entries above `k` are scaffolding.
fn downward(k: usize, x: Complex64) -> Vec<Complex64> {
    let top = k + DOWNWARD_HEADROOM + x.norm().ceil() as usize;
    let ex = x.exp();
    let mut out = vec![Complex64::new(0.0, 0.0); top + 1];
    // Leading-order asymptote J_m ≈ eˣ/(m+1−x) for m ≫ |x|.
    out[top] = ex / (Complex64::new((top + 1) as f64, 0.0) - x);
    for m in (1..=top).rev() {
        out[m - 1] = (ex - x * out[m]) / m as f64;
    }
    out
}

/// `∫₀ᴸ z^k e^{θz} dz` with the default branch thresholds.
pub fn monomial_exp_integral(k: usize, theta: Complex64, length: f64) -> Complex64 {
    ExpKernel::default().integral(k, theta, length)
}
