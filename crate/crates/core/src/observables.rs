//! Bounded test observables in chart coordinates.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::systems::{circle_distance, Point, SystemKind};

/// Periodic chart coordinate an observable reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// `x` on the circle, `x1` on the torus, `θ` on the solid torus.
    First,
    /// `x2` on the torus.
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Observable {
    Constant { value: f64 },
    Cos { axis: Axis, freq: i32 },
    Sin { axis: Axis, freq: i32 },
    /// Tent `max(0, 1 - d/r)` in the circular distance to `center`.
    Tent { axis: Axis, center: f64, radius: f64 },
    FiberRe,
    FiberIm,
    FiberAbs2,
}

fn axis_value(p: &Point, axis: Axis) -> f64 {
    match (p, axis) {
        (Point::Circle(q), Axis::First) => q.x,
        (Point::Torus(q), Axis::First) => q.x1,
        (Point::Torus(q), Axis::Second) => q.x2,
        (Point::Solid(q), Axis::First) => q.theta,
        _ => 0.0,
    }
}

impl Observable {
    pub fn cos(axis: Axis) -> Self {
        Observable::Cos { axis, freq: 1 }
    }

    pub fn sin(axis: Axis) -> Self {
        Observable::Sin { axis, freq: 1 }
    }

    /// Value at `p`; coordinates that do not exist in `p`'s chart read as 0.
    #[inline]
    pub fn eval(&self, p: &Point) -> f64 {
        match *self {
            Observable::Constant { value } => value,
            Observable::Cos { axis, freq } => (TAU * freq as f64 * axis_value(p, axis)).cos(),
            Observable::Sin { axis, freq } => (TAU * freq as f64 * axis_value(p, axis)).sin(),
            Observable::Tent {
                axis,
                center,
                radius,
            } => (1.0 - circle_distance(axis_value(p, axis), center) / radius).max(0.0),
            Observable::FiberRe => match p {
                Point::Solid(q) => q.z.re,
                _ => 0.0,
            },
            Observable::FiberIm => match p {
                Point::Solid(q) => q.z.im,
                _ => 0.0,
            },
            Observable::FiberAbs2 => match p {
                Point::Solid(q) => q.z.norm_sqr(),
                _ => 0.0,
            },
        }
    }

    /// `‖φ‖∞` on the system's domain.
    pub fn sup_norm(&self) -> f64 {
        match *self {
            Observable::Constant { value } => value.abs(),
            _ => 1.0,
        }
    }

    /// Short identifier used in CSV headers.
    pub fn id(&self) -> String {
        let ax = |a: Axis| match a {
            Axis::First => "1",
            Axis::Second => "2",
        };
        match *self {
            Observable::Constant { value } => format!("const({value})"),
            Observable::Cos { axis, freq } => format!("cos{freq}_x{}", ax(axis)),
            Observable::Sin { axis, freq } => format!("sin{freq}_x{}", ax(axis)),
            Observable::Tent {
                axis,
                center,
                radius,
            } => format!("tent_x{}({center},{radius})", ax(axis)),
            Observable::FiberRe => "re_z".into(),
            Observable::FiberIm => "im_z".into(),
            Observable::FiberAbs2 => "abs2_z".into(),
        }
    }
}

/// Default battery for basin tests and reference measures.
pub fn default_battery(kind: SystemKind) -> Vec<Observable> {
    use Axis::*;
    match kind {
        SystemKind::CatMap | SystemKind::DerivedAnosovT2 => vec![
            Observable::cos(First),
            Observable::sin(First),
            Observable::cos(Second),
            Observable::sin(Second),
        ],
        SystemKind::IntermittentCircle => vec![
            Observable::cos(First),
            Observable::sin(First),
            Observable::Cos {
                axis: First,
                freq: 2,
            },
        ],
        SystemKind::Solenoid | SystemKind::ModifiedSolenoid => vec![
            Observable::cos(First),
            Observable::sin(First),
            Observable::FiberRe,
            Observable::FiberIm,
            Observable::FiberAbs2,
        ],
    }
}
