use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Marginal law of the i.i.d. weights `X_v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SparseLaw {
    Bernoulli { p: f64 },
    Poisson { theta: f64 },
    Binomial { m: u64, theta: f64 },
    /// `P(X = r) = C(r + m - 1, r) (1 - θ)^m θ^r`.
    NegBinomial { m: u64, theta: f64 },
    /// Number of marked items among `draws` taken from `population` items, `successes` of them marked.
    Hypergeometric { population: u64, successes: u64, draws: u64 },
}

impl SparseLaw {
    pub fn validate(&self) -> Result<()> {
        let open = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name}={v} must lie in (0, 1)")))
            }
        };
        match *self {
            SparseLaw::Bernoulli { p } => {
                if p > 0.0 && p <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("p={p} must lie in (0, 1]")))
                }
            }
            SparseLaw::Poisson { theta } => {
                if theta > 0.0 && theta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("theta={theta} must be positive")))
                }
            }
            SparseLaw::Binomial { m, theta } | SparseLaw::NegBinomial { m, theta } => {
                if m == 0 {
                    return Err(Error::invalid("m must be at least 1"));
                }
                open("theta", theta)
            }
            SparseLaw::Hypergeometric {
                population,
                successes,
                draws,
            } => {
                if successes == 0 || draws == 0 {
                    return Err(Error::invalid("hypergeometric law needs at least one draw and one marked item"));
                }
                // 0 must be in the support
                if successes.checked_add(draws).is_none_or(|s| s > population) {
                    return Err(Error::invalid("hypergeometric law needs draws + successes <= population"));
                }
                Ok(())
            }
        }
    }

    /// `log P(X = 0)`.
    fn log_p0(&self) -> f64 {
        match *self {
            SparseLaw::Bernoulli { p } => (-p).ln_1p(),
            SparseLaw::Poisson { theta } => -theta,
            SparseLaw::Binomial { m, theta } | SparseLaw::NegBinomial { m, theta } => m as f64 * (-theta).ln_1p(),
            SparseLaw::Hypergeometric {
                population,
                successes,
                draws,
            } => (0..draws)
                .map(|i| (-(successes as f64) / (population - i) as f64).ln_1p())
                .sum(),
        }
    }

    pub fn p0(&self) -> f64 {
        self.log_p0().exp()
    }

    /// `P(X >= 1)`, computed without cancellation.
    pub fn p_active(&self) -> f64 {
        match *self {
            SparseLaw::Bernoulli { p } => p,
            _ => -self.log_p0().exp_m1(),
        }
    }

    /// `P(X = r + 1) / P(X = r)`.
    fn ratio(&self, r: u64) -> f64 {
        let rf = r as f64;
        match *self {
            SparseLaw::Bernoulli { .. } => 0.0,
            SparseLaw::Poisson { theta } => theta / (rf + 1.0),
            SparseLaw::Binomial { m, theta } => {
                if r >= m {
                    0.0
                } else {
                    (m - r) as f64 / (rf + 1.0) * theta / (1.0 - theta)
                }
            }
            SparseLaw::NegBinomial { m, theta } => (rf + m as f64) / (rf + 1.0) * theta,
            SparseLaw::Hypergeometric {
                population,
                successes,
                draws,
            } => {
                if r >= successes || r >= draws {
                    0.0
                } else {
                    (successes - r) as f64 * (draws - r) as f64
                        / ((rf + 1.0) * (population - successes - draws + r + 1) as f64)
                }
            }
        }
    }

    /// `P(X = 1)`; this is the `p_n` of the sparse regime.
    pub fn p1(&self) -> f64 {
        match *self {
            SparseLaw::Bernoulli { p } => p,
            _ => self.p0() * self.ratio(0),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SparseLaw::Bernoulli { p } => p,
            SparseLaw::Poisson { theta } => theta,
            SparseLaw::Binomial { m, theta } => m as f64 * theta,
            SparseLaw::NegBinomial { m, theta } => m as f64 * theta / (1.0 - theta),
            SparseLaw::Hypergeometric {
                population,
                successes,
                draws,
            } => draws as f64 * successes as f64 / population as f64,
        }
    }

    /// `P(X >= 2)`.
    pub fn p_multi(&self) -> f64 {
        (self.p_active() - self.p1()).max(0.0)
    }

    /// `P(X = r)` for `r <= max_r`.
    pub fn pmf(&self, max_r: u64) -> Vec<f64> {
        if let SparseLaw::Bernoulli { p } = *self {
            return (0..=max_r)
                .map(|r| match r {
                    0 => 1.0 - p,
                    1 => p,
                    _ => 0.0,
                })
                .collect();
        }
        let mut out = Vec::with_capacity(max_r as usize + 1);
        let mut cur = self.p0();
        for r in 0..=max_r {
            out.push(cur);
            cur *= self.ratio(r);
        }
        out
    }

    pub fn is_bernoulli(&self) -> bool {
        matches!(self, SparseLaw::Bernoulli { .. })
    }

    /// Draw from the law of `X` conditioned on `X >= 1` by inverse CDF.
    pub(crate) fn sample_active(&self, rng: &mut Stream) -> u64 {
        if self.is_bernoulli() {
            return 1;
        }
        let total = self.p_active();
        let target = rng.uniform_open0() * total;
        let mut r = 1u64;
        let mut pr = self.p1();
        let mut acc = pr;
        while acc < target {
            let next = pr * self.ratio(r);
            if next == 0.0 {
                // end of support; rounding left target just above the total
                break;
            }
            pr = next;
            r += 1;
            acc += pr;
        }
        r
    }
}

impl fmt::Display for SparseLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SparseLaw::Bernoulli { p } => write!(f, "bernoulli:{p}"),
            SparseLaw::Poisson { theta } => write!(f, "poisson:{theta}"),
            SparseLaw::Binomial { m, theta } => write!(f, "binomial:{m}:{theta}"),
            SparseLaw::NegBinomial { m, theta } => write!(f, "negbinomial:{m}:{theta}"),
            SparseLaw::Hypergeometric {
                population,
                successes,
                draws,
            } => write!(f, "hypergeometric:{population}:{successes}:{draws}"),
        }
    }
}

impl FromStr for SparseLaw {
    type Err = Error;

    /// `bernoulli:p`, `poisson:θ`, `binomial:m:θ`, `negbinomial:m:θ`, `hypergeometric:N:K:m`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::invalid(format!("cannot parse law `{s}`"));
        let float = |x: &str| x.parse::<f64>().map_err(|_| bad());
        let int = |x: &str| x.parse::<u64>().map_err(|_| bad());
        let law = match parts.as_slice() {
            ["bernoulli", p] => SparseLaw::Bernoulli { p: float(p)? },
            ["poisson", t] => SparseLaw::Poisson { theta: float(t)? },
            ["binomial", m, t] => SparseLaw::Binomial {
                m: int(m)?,
                theta: float(t)?,
            },
            ["negbinomial", m, t] => SparseLaw::NegBinomial {
                m: int(m)?,
                theta: float(t)?,
            },
            ["hypergeometric", n, k, m] => SparseLaw::Hypergeometric {
                population: int(n)?,
                successes: int(k)?,
                draws: int(m)?,
            },
            _ => return Err(bad()),
        };
        law.validate()?;
        Ok(law)
    }
}

/// Solve `θ e^{-θ} = p` on the branch `θ < 1`.
pub fn poisson_theta_for_p1(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < (-1f64).exp()) {
        return Err(Error::invalid(format!("no Poisson rate has P(X=1)={p}")));
    }
    let mut theta = p;
    for _ in 0..100 {
        let f = theta * (-theta).exp() - p;
        let df = (1.0 - theta) * (-theta).exp();
        let next = theta - f / df;
        if (next - theta).abs() <= 1e-16 * theta {
            return Ok(next);
        }
        theta = next;
    }
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laws() -> Vec<SparseLaw> {
        vec![
            SparseLaw::Bernoulli { p: 0.01 },
            SparseLaw::Poisson { theta: 0.3 },
            SparseLaw::Binomial { m: 5, theta: 0.05 },
            SparseLaw::NegBinomial { m: 3, theta: 0.1 },
            SparseLaw::Hypergeometric {
                population: 1000,
                successes: 30,
                draws: 20,
            },
        ]
    }

    #[test]
    fn pmf_sums_to_one_and_matches_mean() {
        for law in laws() {
            let pmf = law.pmf(200);
            let total: f64 = pmf.iter().sum();
            let mean: f64 = pmf.iter().enumerate().map(|(r, p)| r as f64 * p).sum();
            assert!((total - 1.0).abs() < 1e-12, "{law}: {total}");
            assert!((mean - law.mean()).abs() < 1e-12, "{law}: {mean}");
            assert!((pmf[1] - law.p1()).abs() < 1e-15);
            assert!((1.0 - pmf[0] - law.p_active()).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_p1() {
        let t: f64 = 0.3;
        assert!((SparseLaw::Poisson { theta: t }.p1() - t * (-t).exp()).abs() < 1e-16);
        let b = SparseLaw::Binomial { m: 5, theta: 0.05 };
        assert!((b.p1() - 5.0 * 0.05 * 0.95f64.powi(4)).abs() < 1e-15);
        let nb = SparseLaw::NegBinomial { m: 3, theta: 0.1 };
        assert!((nb.p1() - 3.0 * 0.1 * 0.9f64.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn conditional_sampler_frequencies() {
        let law = SparseLaw::Poisson { theta: 0.8 };
        let pmf = law.pmf(30);
        let active = law.p_active();
        let mut rng = Stream::new(3, &[]);
        let draws = 200_000;
        let mut counts = [0u32; 8];
        for _ in 0..draws {
            let r = law.sample_active(&mut rng) as usize;
            assert!(r >= 1);
            counts[r.min(7)] += 1;
        }
        for r in 1..5 {
            let expect = pmf[r] / active;
            let got = f64::from(counts[r]) / draws as f64;
            let se = (expect * (1.0 - expect) / draws as f64).sqrt();
            assert!((got - expect).abs() < 5.0 * se, "r={r}: {got} vs {expect}");
        }
    }

    #[test]
    fn parse_and_display() {
        for law in laws() {
            let back: SparseLaw = law.to_string().parse().unwrap();
            assert_eq!(back, law);
        }
        assert!("bernoulli:1.5".parse::<SparseLaw>().is_err());
        assert!("hypergeometric:10:8:5".parse::<SparseLaw>().is_err());
        assert!("gamma:1".parse::<SparseLaw>().is_err());
    }

    #[test]
    fn theta_inversion() {
        let p = (2.0f64 / 1e5).sqrt();
        let theta = poisson_theta_for_p1(p).unwrap();
        assert!((theta * (-theta).exp() - p).abs() < 1e-18);
        assert!(theta > p);
    }
}
