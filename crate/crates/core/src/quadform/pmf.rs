use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability mass function on the non-negative integers with explicit unenumerated mass.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Pmf {
    pub probs: BTreeMap<u64, f64>,
    pub tail_mass: f64,
}

#[derive(Serialize, Deserialize)]
struct PmfRepr {
    probs: Vec<(u64, f64)>,
    tail_mass: f64,
}

impl Serialize for Pmf {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PmfRepr {
            probs: self.probs.iter().map(|(&k, &v)| (k, v)).collect(),
            tail_mass: self.tail_mass,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pmf {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PmfRepr::deserialize(d)?;
        let pmf = Pmf {
            probs: r.probs.into_iter().collect(),
            tail_mass: r.tail_mass,
        };
        pmf.validate().map_err(serde::de::Error::custom)?;
        Ok(pmf)
    }
}

impl Pmf {
    pub fn point_mass(value: u64) -> Pmf {
        Pmf {
            probs: BTreeMap::from([(value, 1.0)]),
            tail_mass: 0.0,
        }
    }

    /// Empirical PMF of `counts`, which must be non-empty.
    pub fn from_counts(counts: &BTreeMap<u64, u64>) -> Pmf {
        let total: u64 = counts.values().sum();
        let probs = counts
            .iter()
            .map(|(&k, &c)| (k, c as f64 / total as f64))
            .collect();
        Pmf { probs, tail_mass: 0.0 }
    }

    /// `Pois(λ)` enumerated until the remaining mass is at most `eps`.
    pub fn poisson(lambda: f64, eps: f64) -> Pmf {
        if lambda == 0.0 {
            return Pmf::point_mass(0);
        }
        let mut probs = BTreeMap::new();
        let mut p = (-lambda).exp();
        let mut acc = 0.0;
        let mut k = 0u64;
        loop {
            probs.insert(k, p);
            acc += p;
            if 1.0 - acc <= eps && k as f64 >= lambda {
                break;
            }
            k += 1;
            p *= lambda / k as f64;
        }
        Pmf {
            probs,
            tail_mass: (1.0 - acc).max(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.probs.values().any(|&p| !(p >= 0.0)) || !(self.tail_mass >= 0.0) {
            return Err(Error::invalid("probabilities must be non-negative"));
        }
        let total = self.total();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn get(&self, value: u64) -> f64 {
        self.probs.get(&value).copied().unwrap_or(0.0)
    }

    /// Enumerated mass plus tail mass.
    pub fn total(&self) -> f64 {
        self.probs.values().sum::<f64>() + self.tail_mass
    }

    /// `E[T^a]` over the enumerated part.
    pub fn raw_moment(&self, a: i32) -> f64 {
        self.probs.iter().map(|(&k, &p)| (k as f64).powi(a) * p).sum()
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1)
    }

    pub fn second_moment(&self) -> f64 {
        self.raw_moment(2)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.probs.iter().map(|(&k, &p)| (k as f64 - m).powi(2) * p).sum()
    }

    pub fn max_value(&self) -> Option<u64> {
        self.probs.keys().next_back().copied()
    }

    /// Law of the sum of independent variables.
    pub fn convolve(&self, other: &Pmf) -> Pmf {
        let mut probs = BTreeMap::new();
        for (&a, &pa) in &self.probs {
            for (&b, &pb) in &other.probs {
                *probs.entry(a + b).or_insert(0.0) += pa * pb;
            }
        }
        let enumerated: f64 = probs.values().sum();
        Pmf {
            probs,
            tail_mass: (self.total() * other.total() - enumerated).max(0.0),
        }
    }

    /// Drops values with probability below `threshold`, moving their mass to the tail.
    pub fn pruned(mut self, threshold: f64) -> Pmf {
        let mut dropped = 0.0;
        self.probs.retain(|_, p| {
            if *p < threshold {
                dropped += *p;
                false
            } else {
                true
            }
        });
        self.tail_mass += dropped;
        self
    }

    /// CSV with header `value,prob`; a final `tail,<mass>` row when the tail is non-zero.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,prob\n");
        for (k, p) in &self.probs {
            let _ = writeln!(out, "{k},{p}");
        }
        if self.tail_mass > 0.0 {
            let _ = writeln!(out, "tail,{}", self.tail_mass);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Pmf> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("value,prob") {
            return Err(Error::invalid("PMF CSV must start with `value,prob`"));
        }
        let mut pmf = Pmf::default();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (k, p) = line
                .split_once(',')
                .ok_or_else(|| Error::invalid(format!("bad PMF row `{line}`")))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad probability in `{line}`")))?;
            if k.trim() == "tail" {
                pmf.tail_mass = p;
            } else {
                let k: u64 = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad value in `{line}`")))?;
                pmf.probs.insert(k, p);
            }
        }
        pmf.validate()?;
        Ok(pmf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_tail_and_moments() {
        let p = Pmf::poisson(2.0, 1e-12);
        assert!(p.tail_mass <= 1e-12);
        assert!((p.total() - 1.0).abs() < 1e-12);
        assert!((p.mean() - 2.0).abs() < 1e-9);
        assert!((p.variance() - 2.0).abs() < 1e-9);
        assert!((p.get(0) - (-2.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn convolution_of_poissons() {
        let a = Pmf::poisson(0.5, 1e-14);
        let b = Pmf::poisson(1.5, 1e-14);
        let c = a.convolve(&b);
        let d = Pmf::poisson(2.0, 1e-14);
        for k in 0..10 {
            assert!((c.get(k) - d.get(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let mut p = Pmf::default();
        p.probs.insert(0, 0.5);
        p.probs.insert(3, 0.25);
        p.tail_mass = 0.25;
        let csv = p.to_csv();
        assert_eq!(csv, "value,prob\n0,0.5\n3,0.25\ntail,0.25\n");
        assert_eq!(Pmf::from_csv(&csv).unwrap(), p);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"probs":[[0,0.5],[3,0.25]],"tail_mass":0.25}"#);
        assert_eq!(serde_json::from_str::<Pmf>(&json).unwrap(), p);
        assert!(serde_json::from_str::<Pmf>(r#"{"probs":[[0,0.5]],"tail_mass":0}"#).is_err());
    }
}
