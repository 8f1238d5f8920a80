//! Nonnegative, compactly supported, Lipschitz product kernels on `R^d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate_box;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    Epanechnikov,
    Triangle,
    Quartic,
    /// Epanechnikov profile centred at `1/2`: nonnegative but asymmetric,
    /// so its first moment does not vanish (order 1).
    ShiftedEpanechnikov,
}

impl KernelName {
    pub const ALL: [KernelName; 4] = [
        KernelName::Epanechnikov,
        KernelName::Triangle,
        KernelName::Quartic,
        KernelName::ShiftedEpanechnikov,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KernelName::Epanechnikov => "epanechnikov",
            KernelName::Triangle => "triangle",
            KernelName::Quartic => "quartic",
            KernelName::ShiftedEpanechnikov => "shifted_epanechnikov",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "epanechnikov" => KernelName::Epanechnikov,
            "triangle" => KernelName::Triangle,
            "quartic" | "biweight" => KernelName::Quartic,
            "shifted_epanechnikov" => KernelName::ShiftedEpanechnikov,
            other => return Err(Error::UnsupportedKernel(other.to_string())),
        })
    }

    /// One-dimensional factor.
    #[inline]
    fn profile(self, t: f64) -> f64 {
        match self {
            KernelName::Epanechnikov => {
                if t.abs() <= 1.0 {
                    0.75 * (1.0 - t * t)
                } else {
                    0.0
                }
            }
            KernelName::Triangle => {
                let a = t.abs();
                if a <= 1.0 {
                    1.0 - a
                } else {
                    0.0
                }
            }
            KernelName::Quartic => {
                if t.abs() <= 1.0 {
                    let w = 1.0 - t * t;
                    0.9375 * w * w
                } else {
                    0.0
                }
            }
            KernelName::ShiftedEpanechnikov => KernelName::Epanechnikov.profile(t - 0.5),
        }
    }

    /// Support `[lo, hi]` of the one-dimensional factor.
    fn support(self) -> (f64, f64) {
        match self {
            KernelName::ShiftedEpanechnikov => (-0.5, 1.5),
            _ => (-1.0, 1.0),
        }
    }

    fn profile_max(self) -> f64 {
        match self {
            KernelName::Epanechnikov | KernelName::ShiftedEpanechnikov => 0.75,
            KernelName::Triangle => 1.0,
            KernelName::Quartic => 0.9375,
        }
    }

    fn profile_lipschitz(self) -> f64 {
        match self {
            KernelName::Epanechnikov | KernelName::ShiftedEpanechnikov => 1.5,
            KernelName::Triangle => 1.0,
            // max of (15/4)|t|(1 - t^2), attained at t = 1/sqrt(3)
            KernelName::Quartic => 2.5 / 3f64.sqrt(),
        }
    }

    fn declared_order(self) -> u32 {
        match self {
            KernelName::ShiftedEpanechnikov => 1,
            _ => 2,
        }
    }
}

/// A product kernel `K(u) = Π_j k(u_j)` with `∫K = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub d: u32,
    pub name: KernelName,
    /// `K(u) = 0` whenever `‖u‖_∞ > support_radius`.
    pub support_radius: f64,
    /// Lipschitz constant with respect to the `ℓ¹` distance.
    pub lipschitz_const: f64,
    pub order: u32,
}

pub fn make_kernel(name: KernelName, d: u32) -> Result<Kernel> {
    if d == 0 {
        return Err(Error::UnsupportedKernel("dimension must be at least 1".into()));
    }
    let (lo, hi) = name.support();
    Ok(Kernel {
        d,
        name,
        support_radius: lo.abs().max(hi.abs()),
        lipschitz_const: name.profile_lipschitz() * name.profile_max().powi(d as i32 - 1),
        order: name.declared_order(),
    })
}

impl Kernel {
    pub fn epanechnikov(d: u32) -> Self {
        make_kernel(KernelName::Epanechnikov, d).expect("d >= 1")
    }

    /// Support box of `K`, per axis.
    /// Interior points where the one-dimensional factor is not smooth.
    pub fn kinks(&self) -> &'static [f64] {
        match self.name {
            KernelName::Triangle => &[0.0],
            _ => &[],
        }
    }

    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.name.support();
        (vec![lo; self.d as usize], vec![hi; self.d as usize])
    }

    #[inline]
    pub fn eval(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.d as usize);
        let mut v = 1.0;
        for &t in u {
            v *= self.name.profile(t);
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    }

    /// `h^{-d} K((center - x) / h)` without argument checks.
    #[inline]
    pub fn weight(&self, x: &[f64], center: &[f64], h: f64) -> f64 {
        let mut v = 1.0;
        for (xj, cj) in x.iter().zip(center) {
            v *= self.name.profile((cj - xj) / h);
            if v == 0.0 {
                return 0.0;
            }
        }
        v / h.powi(self.d as i32)
    }

    /// `h^{-d} K((center - x) / h)`: the weight a data point at `center`
    /// receives at evaluation point `x`.
    pub fn eval_scaled(&self, x: &[f64], center: &[f64], h: f64) -> Result<f64> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParams(format!("bandwidth must be positive (got {h})")));
        }
        if x.len() != self.d as usize || center.len() != self.d as usize {
            return Err(Error::InvalidParams(format!(
                "points must have dimension {}",
                self.d
            )));
        }
        Ok(self.weight(x, center, h))
    }
}

/// Accuracy targets for [`verify_order`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderTolerance {
    pub normalization: f64,
    pub moment: f64,
}

impl Default for OrderTolerance {
    fn default() -> Self {
        Self {
            normalization: 1e-6,
            moment: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Moment {
    pub multi_index: Vec<u32>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    pub kernel: KernelName,
    pub d: u32,
    pub requested_order: u32,
    pub integral: f64,
    /// All moments of total degree 1 and 2.
    pub moments: Vec<Moment>,
    /// Lowest-degree moment that does not vanish within tolerance.
    pub first_nonvanishing: Option<Moment>,
    /// Order established numerically: the degree of `first_nonvanishing`.
    pub verified_order: u32,
    pub passed: bool,
}

/// Nodes per axis used by [`verify_order`].
pub const VERIFY_NODES: usize = 256;

fn multi_indices(d: usize, degree: u32) -> Vec<Vec<u32>> {
    if d == 1 {
        return vec![vec![degree]];
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in multi_indices(d - 1, degree - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Numerically checks `∫K = 1` and that every moment of total degree below
/// `k` vanishes, and reports the lowest nonvanishing moment.
pub fn verify_order(kernel: &Kernel, k: u32, tol: OrderTolerance) -> Result<OrderReport> {
    if !(1..=2).contains(&k) {
        return Err(Error::InvalidParams(format!("order must be 1 or 2 (got {k})")));
    }
    if kernel.d > 3 {
        return Err(Error::QuadratureFailure(format!(
            "tensor quadrature limited to d <= 3 (got {})",
            kernel.d
        )));
    }
    let (lo, hi) = kernel.support_box();
    let integrate = |nodes: usize, f: &dyn Fn(&[f64]) -> f64| integrate_box(&lo, &hi, nodes, f);
    let moment_at = |nodes: usize, idx: &[u32]| {
        integrate(nodes, &|u: &[f64]| {
            let mono: f64 = u.iter().zip(idx).map(|(x, &e)| x.powi(e as i32)).product();
            mono * kernel.eval(u)
        })
    };

    let integral = integrate(VERIFY_NODES, &|u| kernel.eval(u));
    let check = integrate(VERIFY_NODES / 2, &|u| kernel.eval(u));
    if (integral - check).abs() > tol.moment {
        return Err(Error::QuadratureFailure(format!(
            "normalisation unstable across resolutions: {check} vs {integral}"
        )));
    }

    let mut moments = Vec::new();
    for degree in 1..=2 {
        for idx in multi_indices(kernel.d as usize, degree) {
            let value = moment_at(VERIFY_NODES, &idx);
            let coarse = moment_at(VERIFY_NODES / 2, &idx);
            if (value - coarse).abs() > tol.moment {
                return Err(Error::QuadratureFailure(format!(
                    "moment {idx:?} unstable across resolutions: {coarse} vs {value}"
                )));
            }
            moments.push(Moment {
                multi_index: idx,
                value,
            });
        }
    }

    let degree = |m: &Moment| m.multi_index.iter().sum::<u32>();
    let first_nonvanishing = moments.iter().find(|m| m.value.abs() > tol.moment).cloned();
    let verified_order = first_nonvanishing.as_ref().map(degree).unwrap_or(3);
    let normalized = (integral - 1.0).abs() <= tol.normalization;
    let vanishing = moments
        .iter()
        .filter(|m| degree(m) < k)
        .all(|m| m.value.abs() <= tol.moment);
    Ok(OrderReport {
        kernel: kernel.name,
        d: kernel.d,
        requested_order: k,
        integral,
        moments,
        first_nonvanishing,
        verified_order,
        passed: normalized && vanishing,
    })
}
