use std::path::Path;

use serde_json::{Map, Value};

use super::mask::MaskBitmap;
use super::StencilChoice;
use crate::error::{Error, Result};

/// Geometric description of Ω.
///
/// Analytic shapes carry an exact signed distance; masks define the boundary
/// halfway between an inside pixel and an outside neighbour.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Interval { a: f64, b: f64 },
    Rectangle { min: [f64; 2], max: [f64; 2] },
    Ball { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
    Stadium { p1: [f64; 2], p2: [f64; 2], radius: f64 },
    Mask(MaskBitmap),
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self, Shape::Mask(_))
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let bad = |msg: &str| Err(Error::InvalidShape(msg.to_string()));
        match *self {
            Shape::Interval { a, b } => {
                if !finite(&[a, b]) || a >= b {
                    return bad("interval needs finite a < b");
                }
            }
            Shape::Rectangle { min, max } => {
                if !finite(&[min[0], min[1], max[0], max[1]]) || min[0] >= max[0] || min[1] >= max[1] {
                    return bad("rectangle needs min < max on both axes");
                }
            }
            Shape::Ball { center, radius } => {
                if !finite(&[center[0], center[1], radius]) || radius <= 0.0 {
                    return bad("ball needs radius > 0");
                }
            }
            Shape::Annulus { center, inner, outer } => {
                if !finite(&[center[0], center[1], inner, outer]) || inner <= 0.0 || inner >= outer {
                    return bad("annulus needs 0 < inner_radius < outer_radius");
                }
            }
            Shape::Stadium { p1, p2, radius } => {
                if !finite(&[p1[0], p1[1], p2[0], p2[1], radius]) || radius <= 0.0 {
                    return bad("stadium needs radius > 0");
                }
            }
            Shape::Mask(ref m) => {
                if m.width == 0 || m.height == 0 {
                    return bad("mask image is empty");
                }
            }
        }
        Ok(())
    }

    /// Signed distance to ∂Ω, negative inside. `None` for masks.
    pub fn signed_distance(&self, x: [f64; 2]) -> Option<f64> {
        let norm = |v: [f64; 2]| v[0].hypot(v[1]);
        let sd = match *self {
            Shape::Interval { a, b } => (a - x[0]).max(x[0] - b),
            Shape::Rectangle { min, max } => {
                let qx = (x[0] - 0.5 * (min[0] + max[0])).abs() - 0.5 * (max[0] - min[0]);
                let qy = (x[1] - 0.5 * (min[1] + max[1])).abs() - 0.5 * (max[1] - min[1]);
                norm([qx.max(0.0), qy.max(0.0)]) + qx.max(qy).min(0.0)
            }
            Shape::Ball { center, radius } => norm([x[0] - center[0], x[1] - center[1]]) - radius,
            Shape::Annulus { center, inner, outer } => {
                let r = norm([x[0] - center[0], x[1] - center[1]]);
                (inner - r).max(r - outer)
            }
            Shape::Stadium { p1, p2, radius } => {
                let seg = [p2[0] - p1[0], p2[1] - p1[1]];
                let rel = [x[0] - p1[0], x[1] - p1[1]];
                let len2 = seg[0] * seg[0] + seg[1] * seg[1];
                let t = if len2 > 0.0 {
                    ((rel[0] * seg[0] + rel[1] * seg[1]) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                norm([rel[0] - t * seg[0], rel[1] - t * seg[1]]) - radius
            }
            Shape::Mask(_) => return None,
        };
        Some(sd)
    }

    /// Axis-aligned bounding box of Ω as `(min, max)`; for masks, in units of
    /// the given spacing with the image centred on the origin.
    pub(crate) fn bounding_box(&self, h: f64) -> ([f64; 2], [f64; 2]) {
        match *self {
            Shape::Interval { a, b } => ([a, 0.0], [b, 0.0]),
            Shape::Rectangle { min, max } => (min, max),
            Shape::Ball { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Shape::Annulus { center, outer, .. } => (
                [center[0] - outer, center[1] - outer],
                [center[0] + outer, center[1] + outer],
            ),
            Shape::Stadium { p1, p2, radius } => (
                [p1[0].min(p2[0]) - radius, p1[1].min(p2[1]) - radius],
                [p1[0].max(p2[0]) + radius, p1[1].max(p2[1]) + radius],
            ),
            Shape::Mask(ref m) => {
                let hx = 0.5 * (m.width as f64 - 1.0) * h;
                let hy = 0.5 * (m.height as f64 - 1.0) * h;
                ([-hx, -hy], [hx, hy])
            }
        }
    }

    /// Uniform dilation about the origin.
    pub fn scaled(&self, s: f64) -> Shape {
        let sc = |p: [f64; 2]| [s * p[0], s * p[1]];
        match *self {
            Shape::Interval { a, b } => Shape::Interval { a: s * a, b: s * b },
            Shape::Rectangle { min, max } => Shape::Rectangle {
                min: sc(min),
                max: sc(max),
            },
            Shape::Ball { center, radius } => Shape::Ball {
                center: sc(center),
                radius: s * radius,
            },
            Shape::Annulus { center, inner, outer } => Shape::Annulus {
                center: sc(center),
                inner: s * inner,
                outer: s * outer,
            },
            Shape::Stadium { p1, p2, radius } => Shape::Stadium {
                p1: sc(p1),
                p2: sc(p2),
                radius: s * radius,
            },
            Shape::Mask(ref m) => Shape::Mask(m.clone()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Interval { .. } => "interval",
            Shape::Rectangle { .. } => "rectangle",
            Shape::Ball { .. } => "ball",
            Shape::Annulus { .. } => "annulus",
            Shape::Stadium { .. } => "stadium",
            Shape::Mask(_) => "mask",
        }
    }
}

/// A parsed domain document: shape, grid resolution and stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub shape: Shape,
    pub resolution: f64,
    pub stencil: StencilChoice,
}

const DOMAIN_EXAMPLE: &str = r#"{"shape":"ball","center":[0,0],"radius":1.0,"resolution":64}"#;

fn cfg_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
        example: DOMAIN_EXAMPLE.to_string(),
    }
}

impl DomainSpec {
    /// Strict JSON parsing. Mask `path` entries are resolved against
    /// `base_dir` when relative.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| cfg_err("<document>", e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| cfg_err("<document>", "expected a JSON object"))?;
        let kind = obj
            .get("shape")
            .and_then(Value::as_str)
            .ok_or_else(|| cfg_err("shape", "missing or not a string"))?;
        let allowed: &[&str] = match kind {
            "interval" => &["a", "b"],
            "rectangle" | "square" => &["min", "max"],
            "ball" => &["center", "radius"],
            "annulus" => &["center", "inner_radius", "outer_radius"],
            "stadium" => &["p1", "p2", "radius"],
            "mask" => &["path"],
            other => return Err(cfg_err("shape", format!("unknown shape `{other}`"))),
        };
        for key in obj.keys() {
            let common = matches!(key.as_str(), "shape" | "resolution" | "stencil");
            if !common && !allowed.contains(&key.as_str()) {
                return Err(cfg_err(
                    key,
                    format!("unknown key for shape `{kind}` (allowed: {allowed:?})"),
                ));
            }
        }
        let shape = match kind {
            "interval" => Shape::Interval {
                a: num(obj, "a")?,
                b: num(obj, "b")?,
            },
            "rectangle" | "square" => Shape::Rectangle {
                min: point(obj, "min")?,
                max: point(obj, "max")?,
            },
            "ball" => Shape::Ball {
                center: point(obj, "center")?,
                radius: num(obj, "radius")?,
            },
            "annulus" => Shape::Annulus {
                center: point(obj, "center")?,
                inner: num(obj, "inner_radius")?,
                outer: num(obj, "outer_radius")?,
            },
            "stadium" => Shape::Stadium {
                p1: point(obj, "p1")?,
                p2: point(obj, "p2")?,
                radius: num(obj, "radius")?,
            },
            _ => {
                let raw = obj
                    .get("path")
                    .and_then(Value::as_str)
                    .ok_or_else(|| cfg_err("path", "mask needs a PGM path"))?;
                let mut path = Path::new(raw).to_path_buf();
                if path.is_relative() {
                    if let Some(base) = base_dir {
                        path = base.join(path);
                    }
                }
                Shape::Mask(MaskBitmap::load_pgm(&path)?)
            }
        };
        let resolution = num(obj, "resolution")?;
        let stencil = match obj.get("stencil") {
            None => StencilChoice::Standard,
            Some(v) => match v.as_str() {
                Some("standard") => StencilChoice::Standard,
                Some("wide") => StencilChoice::Wide,
                _ => return Err(cfg_err("stencil", "expected \"standard\" or \"wide\"")),
            },
        };
        Ok(DomainSpec {
            shape,
            resolution,
            stencil,
        })
    }
}

fn num(obj: &Map<String, Value>, key: &str) -> Result<f64> {
    obj.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| cfg_err(key, "missing or not a number"))
}

fn point(obj: &Map<String, Value>, key: &str) -> Result<[f64; 2]> {
    let arr = obj
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| cfg_err(key, "missing or not an array"))?;
    match arr.as_slice() {
        [x, y] => match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => Ok([x, y]),
            _ => Err(cfg_err(key, "coordinates must be numbers")),
        },
        _ => Err(cfg_err(key, "expected [x, y]")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ball_document() {
        let spec = DomainSpec::from_json(DOMAIN_EXAMPLE, None).unwrap();
        assert_eq!(
            spec.shape,
            Shape::Ball {
                center: [0.0, 0.0],
                radius: 1.0
            }
        );
        assert_eq!(spec.resolution, 64.0);
        assert_eq!(spec.stencil, StencilChoice::Standard);
    }

    #[test]
    fn rejects_misspelled_key() {
        let err =
            DomainSpec::from_json(r#"{"shape":"ball","center":[0,0],"raduis":1.0,"resolution":64}"#, None).unwrap_err();
        match err {
            Error::Config { key, .. } => assert_eq!(key, "raduis"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn signed_distances() {
        let ball = Shape::Ball {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        assert_eq!(ball.signed_distance([0.0, 0.0]), Some(-1.0));
        let ann = Shape::Annulus {
            center: [0.0, 0.0],
            inner: 1.0,
            outer: 3.0,
        };
        assert_eq!(ann.signed_distance([2.0, 0.0]), Some(-1.0));
        let sq = Shape::Rectangle {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
        };
        assert!((sq.signed_distance([0.5, 0.25]).unwrap() + 0.25).abs() < 1e-15);
        assert!((sq.signed_distance([2.0, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        let st = Shape::Stadium {
            p1: [-1.0, 0.0],
            p2: [1.0, 0.0],
            radius: 0.5,
        };
        assert!((st.signed_distance([0.3, 0.1]).unwrap() + 0.4).abs() < 1e-15);
    }

    #[test]
    fn degenerate_shapes_rejected() {
        assert!(Shape::Annulus {
            center: [0.0, 0.0],
            inner: 2.0,
            outer: 1.0
        }
        .validate()
        .is_err());
        assert!(Shape::Ball {
            center: [0.0, 0.0],
            radius: 0.0
        }
        .validate()
        .is_err());
    }
}
