//! Special functions: the gamma function and the modified Bessel function of
//! the second kind `K_ν`, needed for Matérn covariances.
//!
//! `K_ν` follows the classical two-regime scheme: Temme's series for
//! `x <= 2` and Steed's continued-fraction (CF2) evaluation for `x > 2`,
//! each producing `K_μ` and `K_{μ+1}` for `|μ| <= 1/2`, followed by upward
//! recurrence in the order. Both regimes are accurate to close to machine
//! precision for the orders used here (`ν` of order one).

use crate::{Error, Result};

const PI: f64 = core::f64::consts::PI;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1.0e-16;
const MAX_ITER: usize = 500;

/// Gamma function `Γ(x)`.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Coefficients of the Temme series: `gam1 = [1/Γ(1-μ) - 1/Γ(1+μ)]/(2μ)`,
/// `gam2 = [1/Γ(1-μ) + 1/Γ(1+μ)]/2`, plus the reciprocal gammas themselves.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let gampl = 1.0 / libm::tgamma(1.0 + mu);
    let gammi = 1.0 / libm::tgamma(1.0 - mu);
    let gam1 = if libm::fabs(mu) < 1.0e-3 {
        // Series limit of the difference quotient; the t^3 coefficient of
        // 1/Γ(1+t) is -0.04200263503409524.
        -(EULER_GAMMA + (-0.042_002_635_034_095_24) * mu * mu)
    } else {
        (gammi - gampl) / (2.0 * mu)
    };
    let gam2 = 0.5 * (gammi + gampl);
    (gam1, gam2, gampl, gammi)
}

/// Modified Bessel function of the second kind `K_ν(x)` for real order
/// `ν` and `x > 0`. Symmetric in the order: `K_{-ν} = K_ν`.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter("bessel_k requires x > 0"));
    }
    let nu = libm::fabs(nu);
    if !nu.is_finite() {
        return Err(Error::InvalidParameter("bessel_k requires finite order"));
    }
    // Split ν = μ + nl with |μ| <= 1/2 and nl a non-negative integer.
    let nl = libm::floor(nu + 0.5) as usize;
    let mu = nu - nl as f64;
    let mu2 = mu * mu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    let (mut k_mu, mut k_mu1);
    if x <= 2.0 {
        // Temme's series around small argument.
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if libm::fabs(pimu) < EPS {
            1.0
        } else {
            pimu / libm::sin(pimu)
        };
        let mut d = -libm::log(x2);
        let mut e = mu * d;
        let fact2 = if libm::fabs(e) < EPS {
            1.0
        } else {
            libm::sinh(e) / e
        };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * libm::cosh(e) + gam2 * fact2 * d);
        let mut sum = ff;
        e = libm::exp(e);
        let mut p = 0.5 * e / gampl;
        let mut q = 0.5 / (e * gammi);
        let mut c = 1.0;
        d = x2 * x2;
        let mut sum1 = p;
        let mut converged = false;
        for i in 1..=MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= d / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            let del1 = c * (p - fi * ff);
            sum1 += del1;
            if libm::fabs(del) < libm::fabs(sum) * EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::InvalidParameter("bessel_k series did not converge"));
        }
        k_mu = sum;
        k_mu1 = sum1 * xi2;
    } else {
        // Steed's continued fraction CF2 for the exponentially scaled K.
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = delh;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        let mut converged = false;
        for i in 2..=MAX_ITER {
            a -= 2.0 * (i as f64 - 1.0);
            c = -a * c / i as f64;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if libm::fabs(dels / s) < EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::InvalidParameter(
                "bessel_k continued fraction did not converge",
            ));
        }
        h = a1 * h;
        k_mu = libm::sqrt(PI / (2.0 * x)) * libm::exp(-x) / s;
        k_mu1 = k_mu * (mu + x + 0.5 - h) * xi;
    }
    // March the order up from μ to ν.
    for i in 1..=nl {
        let k_next = (mu + i as f64) * xi2 * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = k_next;
    }
    Ok(k_mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values below were computed independently with a separate
    // high-precision implementation and frozen. [DERIVED]
    const GAMMA_CASES: [(f64, f64); 4] = [
        (0.3, 2.991568987687591),
        (0.8, 1.164229713725303),
        (1.3, 0.8974706963062774),
        (2.5, 1.3293403881791372),
    ];

    const BESSEL_CASES: [(f64, f64, f64); 13] = [
        (0.3, 0.01, 6.890102638292775),
        (0.3, 0.05, 3.8119663367691143),
        (0.3, 0.1, 2.805056475021575),
        (0.3, 0.5, 0.9764741243817909),
        (0.3, 1.0, 0.43507602420880526),
        (0.3, 2.0, 0.11603697434812504),
        (0.3, 5.0, 0.0037216693288734263),
        (0.3, 10.0, 1.7856607016823027e-05),
        (0.3, 30.0, 2.135627028326095e-14),
        (0.5, 0.7, 0.7438832523206937),
        (1.5, 1.3, 0.530017146474073),
        (1.0, 1.0, 0.6019072301972346),
        (0.999, 2.0, 0.13980897393167932),
    ];

    #[test]
    fn gamma_matches_reference() {
        for (x, want) in GAMMA_CASES {
            let got = gamma(x);
            assert!(
                libm::fabs(got - want) <= 1e-13 * libm::fabs(want),
                "gamma({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn bessel_k_matches_reference() {
        for (nu, x, want) in BESSEL_CASES {
            let got = bessel_k(nu, x).unwrap();
            assert!(
                libm::fabs(got - want) <= 1e-10 * libm::fabs(want),
                "K_{nu}({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn half_integer_orders_are_elementary() {
        // K_{1/2}(x) = sqrt(pi/(2x)) exp(-x), and
        // K_{3/2}(x) = K_{1/2}(x) (1 + 1/x); exercises both branches.
        for x in [0.2, 0.9, 1.7, 2.5, 6.0, 14.0] {
            let base = libm::sqrt(PI / (2.0 * x)) * libm::exp(-x);
            let k_half = bessel_k(0.5, x).unwrap();
            let k_three_half = bessel_k(1.5, x).unwrap();
            assert!(libm::fabs(k_half - base) <= 1e-12 * base);
            assert!(libm::fabs(k_three_half - base * (1.0 + 1.0 / x)) <= 1e-12 * base * (1.0 + 1.0 / x));
        }
    }

    #[test]
    fn order_symmetry_and_domain() {
        let a = bessel_k(0.3, 0.8).unwrap();
        let b = bessel_k(-0.3, 0.8).unwrap();
        assert_eq!(a, b);
        assert!(bessel_k(0.3, 0.0).is_err());
        assert!(bessel_k(0.3, -1.0).is_err());
    }
}
