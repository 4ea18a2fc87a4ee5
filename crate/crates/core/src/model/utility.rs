use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UtilityFamily {
    Linear,
    CobbDouglas,
    PwlConcave,
}

impl UtilityFamily {
    pub fn name(self) -> &'static str {
        match self {
            UtilityFamily::Linear => "linear",
            UtilityFamily::CobbDouglas => "cobb_douglas",
            UtilityFamily::PwlConcave => "pwl_concave",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(UtilityFamily::Linear),
            "cobb_douglas" => Some(UtilityFamily::CobbDouglas),
            "pwl_concave" => Some(UtilityFamily::PwlConcave),
            _ => None,
        }
    }
}

/// One linear piece of a concave per-good utility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub length: T,
    pub slope: T,
}

/// Coarse utility `f_i` over bundles `(z_0, ..., z_g)`.
///
/// Every family flattens out once a coordinate reaches the satiation cap, so
/// `value` clamps each coordinate to `cap` before evaluating.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilitySpec<T> {
    /// `Σ_j u_j z_j`.
    Linear { coefficients: Vec<T> },
    /// `Π_j z_j^{a_j}` with `Σ a_j = 1`.
    CobbDouglas { exponents: Vec<T> },
    /// Separable: per good, consecutive segments with strictly decreasing slopes.
    /// Beyond the last segment the good adds nothing.
    PwlConcave { goods: Vec<Vec<Segment<T>>> },
}

impl<T: Scalar> UtilitySpec<T> {
    pub fn family(&self) -> UtilityFamily {
        match self {
            UtilitySpec::Linear { .. } => UtilityFamily::Linear,
            UtilitySpec::CobbDouglas { .. } => UtilityFamily::CobbDouglas,
            UtilitySpec::PwlConcave { .. } => UtilityFamily::PwlConcave,
        }
    }

    pub fn n_goods(&self) -> usize {
        match self {
            UtilitySpec::Linear { coefficients } => coefficients.len(),
            UtilitySpec::CobbDouglas { exponents } => exponents.len(),
            UtilitySpec::PwlConcave { goods } => goods.len(),
        }
    }

    pub(crate) fn validate(&self, n_goods: usize) -> std::result::Result<(), String> {
        if self.n_goods() != n_goods {
            return Err(format!(
                "expected parameters for {n_goods} goods, found {}",
                self.n_goods()
            ));
        }
        let bad = |v: T| !v.is_finite() || v < T::zero();
        match self {
            UtilitySpec::Linear { coefficients } => {
                if coefficients.iter().any(|&u| bad(u)) {
                    return Err("coefficients must be finite and nonnegative".into());
                }
                if !coefficients.iter().any(|&u| u > T::zero()) {
                    return Err("at least one coefficient must be positive".into());
                }
            }
            UtilitySpec::CobbDouglas { exponents } => {
                if exponents.iter().any(|&a| bad(a)) {
                    return Err("exponents must be finite and nonnegative".into());
                }
                let total: T = exponents.iter().copied().sum();
                if (total - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) {
                    return Err(format!("exponents must sum to 1, found {total}"));
                }
            }
            UtilitySpec::PwlConcave { goods } => {
                for (j, segs) in goods.iter().enumerate() {
                    for (k, s) in segs.iter().enumerate() {
                        if bad(s.slope) || !s.length.is_finite() || s.length <= T::zero() {
                            return Err(format!(
                                "good {j} segment {k}: length must be positive and slope nonnegative"
                            ));
                        }
                        if k > 0 && s.slope >= segs[k - 1].slope {
                            return Err(format!("good {j}: slopes must be strictly decreasing"));
                        }
                    }
                }
                if !goods
                    .iter()
                    .any(|segs| segs.first().is_some_and(|s| s.slope > T::zero()))
                {
                    return Err("at least one good must have a positive first slope".into());
                }
            }
        }
        Ok(())
    }

    /// Whether more of good `j` (below the cap) can ever raise utility.
    pub fn values_good(&self, j: usize) -> bool {
        match self {
            UtilitySpec::Linear { coefficients } => coefficients[j] > T::zero(),
            UtilitySpec::CobbDouglas { exponents } => exponents[j] > T::zero(),
            UtilitySpec::PwlConcave { goods } => {
                goods[j].first().is_some_and(|s| s.slope > T::zero())
            }
        }
    }

    pub fn value(&self, z: &[T], cap: T) -> T {
        let clamp = |v: T| v.max(T::zero()).min(cap);
        match self {
            UtilitySpec::Linear { coefficients } => coefficients
                .iter()
                .zip(z)
                .fold(T::zero(), |acc, (&u, &v)| acc + u * clamp(v)),
            UtilitySpec::CobbDouglas { exponents } => {
                exponents.iter().zip(z).fold(T::one(), |acc, (&a, &v)| {
                    if a == T::zero() {
                        acc
                    } else {
                        acc * clamp(v).powf(a)
                    }
                })
            }
            UtilitySpec::PwlConcave { goods } => goods
                .iter()
                .zip(z)
                .fold(T::zero(), |acc, (segs, &v)| acc + pwl_good_value(segs, clamp(v))),
        }
    }

    /// Global Lipschitz constant (sup-norm of the gradient) on `[0, cap]^{g+1}`.
    /// `None` for Cobb-Douglas, whose partial derivatives are unbounded at 0.
    pub fn lipschitz_bound(&self) -> Option<T> {
        match self {
            UtilitySpec::Linear { coefficients } => {
                Some(coefficients.iter().copied().fold(T::zero(), T::max))
            }
            UtilitySpec::CobbDouglas { .. } => None,
            UtilitySpec::PwlConcave { goods } => Some(
                goods
                    .iter()
                    .filter_map(|s| s.first().map(|s| s.slope))
                    .fold(T::zero(), T::max),
            ),
        }
    }
}

pub(crate) fn pwl_good_value<T: Scalar>(segs: &[Segment<T>], v: T) -> T {
    let mut start = T::zero();
    let mut acc = T::zero();
    for s in segs {
        if v <= start {
            break;
        }
        acc = acc + s.slope * (v - start).min(s.length);
        start = start + s.length;
    }
    acc
}
