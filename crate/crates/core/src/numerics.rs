//! Special functions needed for power-law offspring distributions.

/// Bernoulli numbers B_2, B_4, …, B_20.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Hurwitz zeta `Σ_{k≥0} (q+k)^{-s}` for `s > 1`, `q > 0`, by Euler-Maclaurin
/// summation after `N = 24` explicit terms.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    assert!(s > 1.0 && q > 0.0, "hurwitz_zeta needs s > 1 and q > 0");
    const N: usize = 24;
    let mut sum = 0.0;
    for k in 0..N {
        sum += (q + k as f64).powf(-s);
    }
    let a = q + N as f64;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // correction terms B_{2j}/(2j)! · s(s+1)…(s+2j-2) · a^{-s-2j+1}
    let mut rising = s; // s(s+1)…(s+2j-2)
    let mut fact = 2.0; // (2j)!
    let mut power = a.powf(-s - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / fact * rising * power;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        let j2 = 2.0 * (j as f64 + 1.0);
        rising *= (s + j2 - 1.0) * (s + j2);
        fact *= (j2 + 1.0) * (j2 + 2.0);
        power /= a * a;
    }
    sum
}

/// Riemann zeta for `s > 1`.
pub fn zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}

/// `|Γ(x)|`.
pub fn abs_gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x).abs()
}

/// `j^{-a} - (j+1)^{-a}` without cancellation.
pub fn power_gap(j: f64, a: f64) -> f64 {
    j.powf(-a) * -(-a * (1.0 / j).ln_1p()).exp_m1()
}
