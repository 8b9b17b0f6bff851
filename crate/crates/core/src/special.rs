//! Polynomials needed by the hydrodynamic mode functions.

/// Legendre polynomial P_ℓ(x) by the three-term recurrence.
pub fn legendre(l: u32, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            for n in 1..l {
                let n = n as f64;
                let p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// Terminating Gauss series ₂F₁(−j, j+ℓ+3/2; ℓ+3/2; x), summed term by term
/// with the ratio of consecutive Pochhammer products.
///
/// Exact in exact arithmetic; for large `j` and `x` near 1 the alternating
/// terms cancel badly, which is why mode evaluation uses
/// [`radial_polynomial`].
pub fn hypergeometric_series(j: u32, l: u32, x: f64) -> f64 {
    let b = j as f64 + l as f64 + 1.5;
    let c = l as f64 + 1.5;
    let mut term = 1.0;
    let mut sum = 1.0;
    for p in 0..j {
        let p = p as f64;
        term *= (p - j as f64) * (b + p) / ((c + p) * (p + 1.0)) * x;
        sum += term;
    }
    sum
}

/// Jacobi polynomial P_n^{(α,0)}(y) by the standard three-term recurrence.
pub fn jacobi_beta0(n: u32, alpha: f64, y: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut p0 = 1.0;
    let mut p1 = (alpha + 1.0) + (alpha + 2.0) * (y - 1.0) / 2.0;
    for k in 2..=n {
        let k = k as f64;
        let s = 2.0 * k + alpha;
        let a1 = 2.0 * k * (k + alpha) * (s - 2.0);
        let a2 = (s - 1.0) * (s * (s - 2.0) * y + alpha * alpha);
        let a3 = 2.0 * (k + alpha - 1.0) * (k - 1.0) * s;
        let p2 = (a2 * p1 - a3 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// n!/(α+1)_n as a running product, free of factorial overflow.
pub fn pochhammer_ratio(n: u32, alpha: f64) -> f64 {
    (1..=n).fold(1.0, |acc, p| acc * p as f64 / (alpha + p as f64))
}

/// S_j^{(ℓ)}(x) = ₂F₁(−j, j+ℓ+3/2; ℓ+3/2; x), normalised to S(0) = 1.
///
/// Evaluated as the Jacobi polynomial P_j^{(ℓ+1/2, 0)}(1 − 2x) scaled by
/// j!/(ℓ+3/2)_j, which is stable on the whole interval x ∈ [0, 1].
pub fn radial_polynomial(j: u32, l: u32, x: f64) -> f64 {
    let alpha = l as f64 + 0.5;
    pochhammer_ratio(j, alpha) * jacobi_beta0(j, alpha, 1.0 - 2.0 * x)
}

/// ∫₀¹ x^{ℓ+1/2} S_j^{(ℓ)}(x)² dx in closed form, from the Jacobi norm.
pub fn radial_norm(j: u32, l: u32) -> f64 {
    let alpha = l as f64 + 0.5;
    let r = pochhammer_ratio(j, alpha);
    r * r / (2.0 * j as f64 + alpha + 1.0)
}
