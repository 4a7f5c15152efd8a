use std::collections::BTreeSet;

use serde::Serialize;

use crate::quadform::Pmf;

/// Total variation distance between two PMFs; tail masses are compared as one extra bucket.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TvDistance {
    pub value: f64,
    /// The larger of the two tail masses, i.e. the mass only compared as a bucket.
    pub lumped_tail: f64,
}

pub fn tv_distance(p: &Pmf, q: &Pmf) -> TvDistance {
    let keys: BTreeSet<u64> = p.probs.keys().chain(q.probs.keys()).copied().collect();
    let pointwise: f64 = keys.iter().map(|&k| (p.get(k) - q.get(k)).abs()).sum();
    let value = 0.5 * pointwise + 0.5 * (p.tail_mass - q.tail_mass).abs();
    TvDistance {
        value: value.clamp(0.0, 1.0),
        lumped_tail: p.tail_mass.max(q.tail_mass),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_disjoint() {
        let p = Pmf::poisson(1.3, 1e-9);
        assert_eq!(tv_distance(&p, &p).value, 0.0);
        assert_eq!(tv_distance(&Pmf::point_mass(0), &Pmf::point_mass(1)).value, 1.0);
    }

    #[test]
    fn tails_form_one_bucket() {
        let mut p = Pmf::point_mass(0);
        p.probs.insert(0, 0.9);
        p.tail_mass = 0.1;
        let d = tv_distance(&p, &Pmf::point_mass(0));
        assert!((d.value - 0.1).abs() < 1e-15);
        assert_eq!(d.lumped_tail, 0.1);
    }
}
