#![allow(dead_code)]

use expspan_core::mp;
use expspan_core::MultiplicitySequence;
use rug::{Complex, Float};

/// Tanh-sinh quadrature of `f` over `[a, b]`, halving the step until two
/// levels agree to `2^{-prec+16}` relative.
pub fn tanh_sinh(f: impl Fn(&Float) -> Complex, a: &Float, b: &Float, prec: u32) -> Complex {
    let wp = prec + 32;
    let a = Float::with_val(wp, a);
    let b = Float::with_val(wp, b);
    let half = Float::with_val(wp, &b - &a) / 2u32;
    let mid = Float::with_val(wp, &b + &a) / 2u32;
    let pi2 = mp::pi(wp) / 2u32;
    // weights fall below 2^{-wp} near t = asinh(2/π · wp ln 2)
    let tmax = Float::with_val(wp, Float::with_val(wp, wp as f64 * 0.7 + 10.0) / &pi2).asinh();
    let node = |t: &Float| -> Complex {
        let u = Float::with_val(wp, &pi2 * Float::with_val(wp, t.sinh_ref()));
        let x = Float::with_val(wp, &mid + Float::with_val(wp, &half * Float::with_val(wp, u.tanh_ref())));
        let ch = Float::with_val(wp, u.cosh_ref());
        let w = Float::with_val(wp, &half * Float::with_val(wp, &pi2 * Float::with_val(wp, t.cosh_ref()))) / ch.square();
        if x <= a || x >= b || w.is_zero() {
            return mp::czero(wp);
        }
        f(&x) * w
    };
    let mut h = mp::float(wp, 0.5);
    let mut sum = node(&mp::float(wp, 0.0));
    let mut k = 1u32;
    loop {
        let t = Float::with_val(wp, &h * k);
        if t > tmax {
            break;
        }
        sum += node(&t) + node(&Float::with_val(wp, -&t));
        k += 1;
    }
    let mut prev = Complex::with_val(wp, &sum * &h);
    let tol = Float::with_val(wp, Float::i_exp(1, -(prec as i32) + 16));
    for _ in 0..12 {
        h /= 2u32;
        let mut k = 1u32;
        loop {
            let t = Float::with_val(wp, &h * k);
            if t > tmax {
                break;
            }
            sum += node(&t) + node(&Float::with_val(wp, -&t));
            k += 2;
        }
        let cur = Complex::with_val(wp, &sum * &h);
        let diff = mp::abs(&Complex::with_val(wp, &cur - &prev));
        let scale = mp::abs(&cur).max(&mp::float(wp, 1e-300));
        prev = cur;
        if diff <= Float::with_val(wp, &tol * &scale) {
            break;
        }
    }
    prev
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(mut a: Vec<Vec<Complex>>) -> Complex {
    let n = a.len();
    let prec = a.first().map(|r| mp::prec_of(&r[0])).unwrap_or(64);
    let mut d = mp::cone(prec);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| mp::abs(&a[i][col]).partial_cmp(&mp::abs(&a[j][col])).unwrap())
            .unwrap();
        if mp::is_zero(&a[piv][col]) {
            return mp::czero(prec);
        }
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        d *= &a[col][col];
        for r in col + 1..n {
            let f = Complex::with_val(prec, &a[r][col] / &a[col][col]);
            for c in col..n {
                let t = Complex::with_val(prec, &f * &a[col][c]);
                a[r][c] -= t;
            }
        }
    }
    d
}

/// `⟨e_{n,k}, e_{m,l}⟩` on `(γ, β)` by quadrature.
pub fn quad_inner(seq: &MultiplicitySequence, a: (usize, u32), b: (usize, u32), gamma: f64, beta: f64) -> Complex {
    let prec = seq.prec();
    let s = Complex::with_val(prec, seq.lambda(a.0) + &mp::conj(seq.lambda(b.0)));
    let p = a.1 + b.1;
    tanh_sinh(
        |t| {
            let e = Complex::with_val(mp::prec_of(&s) + 32, &s * t).exp();
            e * Float::with_val(t.prec(), rug::ops::Pow::pow(t, p))
        },
        &mp::float(prec, gamma),
        &mp::float(prec, beta),
        prec,
    )
}

/// Closed form `⟨e_{n,0}, e_{m,0}⟩ = (e^{sβ} − e^{sγ})/s`, `s = λ_n + conj λ_m`.
pub fn plain_inner(seq: &MultiplicitySequence, n: usize, m: usize, gamma: f64, beta: f64) -> Complex {
    let prec = seq.prec();
    let s = Complex::with_val(prec, seq.lambda(n) + &mp::conj(seq.lambda(m)));
    let eb = Complex::with_val(prec, &s * beta).exp();
    let eg = Complex::with_val(prec, &s * gamma).exp();
    (eb - eg) / s
}

pub fn rel_err(a: &Complex, b: &Complex) -> Float {
    let prec = mp::prec_of(a).max(mp::prec_of(b));
    let scale = mp::abs(b).max(&mp::float(prec, 1.0));
    mp::abs(&Complex::with_val(prec, a - b)) / scale
}

pub fn squares(n: usize, digits: u32) -> MultiplicitySequence {
    let prec = mp::bits_for_digits(digits);
    let e: Vec<(f64, u32)> = (1..=n).map(|i| ((i * i) as f64, 1)).collect();
    MultiplicitySequence::real(prec, &e, "squares")
}

/// `(μ-th derivative)/μ!` of `f` at `x` by a central difference of order `μ`
/// with one Richardson step.
pub fn central_derivative(f: impl Fn(&Complex) -> Complex, x: &Complex, mu: u32, h: &Float) -> Complex {
    let prec = mp::prec_of(x);
    let stencil = |h: &Float| -> Complex {
        let mut acc = mp::czero(prec);
        for i in 0..=mu {
            let off = Float::with_val(prec, h * (f64::from(mu) / 2.0 - f64::from(i)));
            let z = Complex::with_val(prec, x + &off);
            let c = mp::binomial(prec, mu, i);
            let v = f(&z) * c;
            if i % 2 == 0 {
                acc += v;
            } else {
                acc -= v;
            }
        }
        acc / Float::with_val(prec, rug::ops::Pow::pow(h, mu))
    };
    let d1 = stencil(h);
    let d2 = stencil(&Float::with_val(prec, h / 2u32));
    // error is O(h²): (4·D(h/2) − D(h))/3
    let r = (d2 * 4u32 - d1) / 3u32;
    r / mp::factorial(prec, mu)
}
