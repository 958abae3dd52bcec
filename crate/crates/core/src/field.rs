//! Evaluable scalar and vector fields on cusp domains.

use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::geometry::Point;

type ScalarFn = dyn Fn(&Point) -> f64 + Send + Sync;
type GradFn = dyn Fn(&Point) -> Vec<f64> + Send + Sync;
type VectorFn = dyn Fn(&Point) -> Result<Vec<f64>> + Send + Sync;

/// Where a field is allowed to be non-zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// Non-zero anywhere in the domain, including up to the boundary.
    Domain,
    /// Vanishes in a neighbourhood of the boundary.
    CompactInterior,
}

/// A real-valued field with an optional analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<ScalarFn>,
    grad: Option<Arc<GradFn>>,
    support: Support,
}

impl ScalarField {
    pub fn new(f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            grad: None,
            support: Support::Domain,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c).with_gradient(|p| vec![0.0; p.dim()])
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn with_gradient(mut self, g: impl Fn(&Point) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_support(mut self, support: Support) -> Self {
        self.support = support;
        self
    }

    #[inline]
    pub fn eval(&self, p: &Point) -> f64 {
        (self.eval)(p)
    }

    pub fn gradient(&self, p: &Point) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(p))
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn support(&self) -> Support {
        self.support
    }

    /// `self - c`, keeping gradient and support descriptor.
    pub fn shifted(&self, c: f64) -> ScalarField {
        let inner = self.eval.clone();
        ScalarField {
            eval: Arc::new(move |p| inner(p) - c),
            grad: self.grad.clone(),
            support: if c == 0.0 { self.support } else { Support::Domain },
        }
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        let inner = self.eval.clone();
        let grad = self.grad.clone().map(|g| {
            Arc::new(move |p: &Point| g(p).into_iter().map(|v| c * v).collect::<Vec<_>>())
                as Arc<GradFn>
        });
        ScalarField {
            eval: Arc::new(move |p| c * inner(p)),
            grad,
            support: self.support,
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let grad = match (&self.grad, &other.grad) {
            (Some(ga), Some(gb)) => {
                let (ga, gb) = (ga.clone(), gb.clone());
                Some(Arc::new(move |p: &Point| {
                    ga(p).into_iter().zip(gb(p)).map(|(u, v)| u + v).collect::<Vec<_>>()
                }) as Arc<GradFn>)
            }
            _ => None,
        };
        let support = if self.support == Support::CompactInterior
            && other.support == Support::CompactInterior
        {
            Support::CompactInterior
        } else {
            Support::Domain
        };
        ScalarField {
            eval: Arc::new(move |p| a(p) + b(p)),
            grad,
            support,
        }
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("has_gradient", &self.grad.is_some())
            .field("support", &self.support)
            .finish()
    }
}

/// A vector-valued field. Evaluation may fail, e.g. outside the domain of definition.
#[derive(Clone)]
pub struct VectorField {
    eval: Arc<VectorFn>,
    dim: usize,
}

impl VectorField {
    pub fn new(dim: usize, f: impl Fn(&Point) -> Result<Vec<f64>> + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            dim,
        }
    }

    /// A field built from infallible component closures.
    pub fn from_fn(dim: usize, f: impl Fn(&Point) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self::new(dim, move |p| Ok(f(p)))
    }

    #[inline]
    pub fn eval(&self, p: &Point) -> Result<Vec<f64>> {
        (self.eval)(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField").field("dim", &self.dim).finish()
    }
}
