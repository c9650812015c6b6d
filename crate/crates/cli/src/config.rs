//! Run configuration files.
//!
//! The format is TOML restricted to the sections and keys below. Every
//! diagnostic carries the line it refers to.
//!
//! ```toml
//! [geometry]
//! type = "ball"          # ball | planar
//! curvature = -1.0       # ball: sectional curvature K
//! dim = 3                # ball: ambient dimension n + 1
//! radius = 1.0           # ball or circle: geodesic radius
//! # planar only:
//! # curve = "circle"     # circle | ellipse | star | polyline
//! # metric_curvature = 0 # K of the conformal model
//! # semi_axes = [2, 1]   # ellipse
//! # samples = [...]      # star: radial samples; ellipse: sample count
//! # vertices = [[0, 0], [1, 0], [0, 1]]
//!
//! [method]
//! type = "exact"         # exact | fem
//! refinement = 6         # fem
//! mass = "consistent"    # fem: consistent | lumped
//!
//! [spectrum]
//! count = 50
//!
//! [checks]
//! list = ["theorem1", "weyl"]
//! j_max = 20             # optional
//! tolerance = 1e-9       # optional
//!
//! [case]                 # every key optional, "auto" by default
//! id = "auto"            # auto | case1 | case2
//! a = "auto"
//! kappa_minus = "auto"
//! kappa_plus = "auto"
//!
//! [output]
//! dir = "out"
//! ```

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use serde::Deserialize;
use steklov_core::exact::BallDomain;
use steklov_core::fem::{BoundaryCurve, ConformalMetric, MassMode, StarShapedCurve};
use steklov_core::spaceform::{CaseId, SpaceForm};
use toml::Spanned;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Check {
    Theorem1,
    Corollary1,
    Weyl,
    Buser,
    Pohozaev,
    Proposition1,
    QBounds,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::Theorem1,
        Check::Corollary1,
        Check::Weyl,
        Check::Buser,
        Check::Pohozaev,
        Check::Proposition1,
        Check::QBounds,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Check::Theorem1 => "theorem1",
            Check::Corollary1 => "corollary1",
            Check::Weyl => "weyl",
            Check::Buser => "buser",
            Check::Pohozaev => "pohozaev",
            Check::Proposition1 => "proposition1",
            Check::QBounds => "q_bounds",
        }
    }

    pub fn parse(s: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn needs_fem(&self) -> bool {
        matches!(self, Check::Pohozaev | Check::Proposition1 | Check::QBounds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveSpec {
    /// Geodesic radius in the model metric, centered at the origin.
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64, samples: usize },
    Star { samples: Vec<f64> },
    Polyline { vertices: Vec<[f64; 2]> },
}

impl CurveSpec {
    pub fn is_smooth(&self) -> bool {
        !matches!(self, CurveSpec::Polyline { .. })
    }

    pub fn build(&self, metric: &ConformalMetric) -> steklov_core::error::Result<BoundaryCurve> {
        match self {
            CurveSpec::Circle { radius } => BoundaryCurve::circle(metric.planar_radius(*radius)),
            CurveSpec::Ellipse { a, b, samples } => {
                Ok(BoundaryCurve::StarShaped(StarShapedCurve::ellipse(*a, *b, *samples)?))
            }
            CurveSpec::Star { samples } => Ok(BoundaryCurve::StarShaped(StarShapedCurve::new(samples.clone())?)),
            CurveSpec::Polyline { vertices } => BoundaryCurve::polyline(vertices.clone()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            CurveSpec::Circle { radius } => format!("circle(R={radius})"),
            CurveSpec::Ellipse { a, b, .. } => format!("ellipse({a},{b})"),
            CurveSpec::Star { samples } => format!("star({} samples)", samples.len()),
            CurveSpec::Polyline { vertices } => format!("polyline({} vertices)", vertices.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Ball(BallDomain),
    Planar {
        curve: CurveSpec,
        metric: ConformalMetric,
    },
}

impl Geometry {
    pub fn describe(&self) -> String {
        match self {
            Geometry::Ball(b) => format!(
                "ball(K={}, dim={}, R={})",
                b.space_form.curvature, b.space_form.ambient_dim, b.radius
            ),
            Geometry::Planar { curve, metric } => {
                format!("planar({}, K={})", curve.describe(), metric.curvature())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Exact,
    Fem { refinement: u32, mass: MassMode },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Param {
    #[default]
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CaseSpec {
    /// `None` selects the case from the ambient curvature.
    pub id: Option<CaseId>,
    pub a: Param,
    pub kappa_minus: Param,
    pub kappa_plus: Param,
    /// Line of the `[case]` section, for diagnostics raised at run time.
    pub line: Option<usize>,
}

impl CaseSpec {
    pub fn is_auto(&self) -> bool {
        self.id.is_none()
            && self.a == Param::Auto
            && self.kappa_minus == Param::Auto
            && self.kappa_plus == Param::Auto
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub method: Method,
    pub count: usize,
    pub checks: Vec<Check>,
    pub j_max: Option<usize>,
    pub tolerance: Option<f64>,
    pub case: CaseSpec,
    pub output_dir: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    geometry: Spanned<RawGeometry>,
    method: Option<Spanned<RawMethod>>,
    spectrum: Option<RawSpectrum>,
    checks: Option<RawChecks>,
    case: Option<Spanned<RawCase>>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    #[serde(rename = "type")]
    kind: Spanned<String>,
    curvature: Option<Spanned<f64>>,
    dim: Option<Spanned<i64>>,
    radius: Option<Spanned<f64>>,
    curve: Option<Spanned<String>>,
    metric_curvature: Option<Spanned<f64>>,
    semi_axes: Option<Spanned<Vec<f64>>>,
    samples: Option<Spanned<SamplesValue>>,
    vertices: Option<Spanned<Vec<[f64; 2]>>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SamplesValue {
    Count(i64),
    Values(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMethod {
    #[serde(rename = "type")]
    kind: Spanned<String>,
    refinement: Option<Spanned<i64>>,
    mass: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrum {
    count: Spanned<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChecks {
    list: Spanned<Vec<Spanned<String>>>,
    j_max: Option<Spanned<i64>>,
    tolerance: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawParam {
    Number(f64),
    Word(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    id: Option<Spanned<String>>,
    a: Option<Spanned<RawParam>>,
    kappa_minus: Option<Spanned<RawParam>>,
    kappa_plus: Option<Spanned<RawParam>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: String,
}

/// Default number of radial samples for an ellipse.
pub const ELLIPSE_SAMPLES: usize = 256;

struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err<T>(&self, span: Range<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError {
            line: Some(self.line(span)),
            message: message.into(),
        })
    }

    fn required<'v, T>(&self, value: &'v Option<Spanned<T>>, section: Range<usize>, key: &str) -> Result<&'v Spanned<T>, ConfigError> {
        match value {
            Some(v) => Ok(v),
            None => self.err(section, format!("missing key `{key}`")),
        }
    }

    fn positive(&self, v: &Spanned<f64>, key: &str) -> Result<f64, ConfigError> {
        let x = *v.get_ref();
        if !(x > 0.0) || !x.is_finite() {
            return self.err(v.span(), format!("`{key}` must be a positive number, got {x}"));
        }
        Ok(x)
    }

    fn param(&self, v: &Option<Spanned<RawParam>>, key: &str) -> Result<Param, ConfigError> {
        match v {
            None => Ok(Param::Auto),
            Some(s) => match s.get_ref() {
                RawParam::Number(x) if x.is_finite() => Ok(Param::Value(*x)),
                RawParam::Word(w) if w == "auto" => Ok(Param::Auto),
                _ => self.err(s.span(), format!("`{key}` must be a number or \"auto\"")),
            },
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let src = Source { text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        line: e.span().map(|s| src.line(s)),
        message: e.message().trim().to_string(),
    })?;

    let geometry = parse_geometry(&src, &raw.geometry)?;

    let method = match &raw.method {
        None => Method::Exact,
        Some(m) => {
            let m_ref = m.get_ref();
            match m_ref.kind.get_ref().as_str() {
                "exact" => {
                    if let Some(r) = &m_ref.refinement {
                        return src.err(r.span(), "`refinement` applies to the fem method only");
                    }
                    Method::Exact
                }
                "fem" => {
                    let refinement = match &m_ref.refinement {
                        None => 6,
                        Some(r) => {
                            let v = *r.get_ref();
                            if !(1..=9).contains(&v) {
                                return src.err(r.span(), format!("refinement must be in 1..=9, got {v}"));
                            }
                            v as u32
                        }
                    };
                    let mass = match m_ref.mass.as_ref().map(|s| (s.get_ref().as_str(), s.span())) {
                        None | Some(("consistent", _)) => MassMode::Consistent,
                        Some(("lumped", _)) => MassMode::Lumped,
                        Some((other, span)) => {
                            return src.err(span, format!("unknown mass mode \"{other}\""));
                        }
                    };
                    Method::Fem { refinement, mass }
                }
                other => return src.err(m_ref.kind.span(), format!("unknown method \"{other}\"")),
            }
        }
    };

    let method_span = raw.method.as_ref().map_or(0..0, |m| m.span());
    match (&geometry, &method) {
        (Geometry::Planar { .. }, Method::Exact) => {
            return src.err(method_span, "exact method requires ball geometry");
        }
        (Geometry::Ball(_), Method::Fem { .. }) => {
            return src.err(method_span, "fem requires planar geometry");
        }
        _ => {}
    }

    let count = match &raw.spectrum {
        None => 50,
        Some(s) => {
            let c = *s.count.get_ref();
            if c < 1 {
                return src.err(s.count.span(), format!("count must be at least 1, got {c}"));
            }
            c as usize
        }
    };

    let (mut checks, mut j_max, mut tolerance) = (Vec::new(), None, None);
    if let Some(c) = &raw.checks {
        for item in c.list.get_ref() {
            let check = Check::parse(item.get_ref())
                .ok_or(())
                .or_else(|_| src.err(item.span(), format!("unknown check \"{}\"", item.get_ref())))?;
            if check.needs_fem() && method == Method::Exact {
                return src.err(item.span(), format!("check {} requires the fem method", check.name()));
            }
            if !checks.contains(&check) {
                checks.push(check);
            }
        }
        if let Some(j) = &c.j_max {
            let v = *j.get_ref();
            if v < 1 || v as usize >= count {
                return src.err(j.span(), format!("j_max must be in 1..{count}, got {v}"));
            }
            j_max = Some(v as usize);
        }
        if let Some(t) = &c.tolerance {
            let v = *t.get_ref();
            if !(v >= 0.0) || !v.is_finite() {
                return src.err(t.span(), format!("tolerance must be nonnegative, got {v}"));
            }
            tolerance = Some(v);
        }
    }
    let needs_two = checks
        .iter()
        .any(|c| matches!(c, Check::Corollary1 | Check::Weyl | Check::Buser));
    if needs_two && count < 2 {
        let span = raw.spectrum.as_ref().map_or(0..0, |s| s.count.span());
        return src.err(span, "corollary1, weyl and buser need count >= 2");
    }

    let mut case = CaseSpec::default();
    if let Some(c) = &raw.case {
        case.line = Some(src.line(c.span()));
        let r = c.get_ref();
        case.id = match r.id.as_ref().map(|s| (s.get_ref().as_str(), s.span())) {
            None | Some(("auto", _)) => None,
            Some(("case1", _)) => Some(CaseId::Case1),
            Some(("case2", _)) => Some(CaseId::Case2),
            Some((other, span)) => return src.err(span, format!("unknown case id \"{other}\"")),
        };
        case.a = src.param(&r.a, "a")?;
        case.kappa_minus = src.param(&r.kappa_minus, "kappa_minus")?;
        case.kappa_plus = src.param(&r.kappa_plus, "kappa_plus")?;
        if let (Geometry::Planar { curve, .. }, false) = (&geometry, curve_allows_auto(&case)) {
            if !curve.is_smooth() {
                return src.err(c.span(), "\"auto\" case parameters need a smooth curve");
            }
        }
    }
    if let Geometry::Planar { curve, .. } = &geometry {
        if !curve.is_smooth() && !curve_allows_auto(&case) {
            return src.err(
                raw.geometry.span(),
                "polyline domains need explicit a, kappa_minus and kappa_plus in [case]",
            );
        }
    }

    Ok(RunConfig {
        geometry,
        method,
        count,
        checks,
        j_max,
        tolerance,
        case,
        output_dir: raw.output.map(|o| PathBuf::from(o.dir)),
    })
}

/// True when every case parameter is given explicitly.
fn curve_allows_auto(case: &CaseSpec) -> bool {
    case.id.is_some()
        && matches!(case.a, Param::Value(_))
        && matches!(case.kappa_minus, Param::Value(_))
        && matches!(case.kappa_plus, Param::Value(_))
}

fn parse_geometry(src: &Source, g: &Spanned<RawGeometry>) -> Result<Geometry, ConfigError> {
    let section = g.span();
    let r = g.get_ref();
    match r.kind.get_ref().as_str() {
        "ball" => {
            for (present, key) in [
                (r.curve.as_ref().map(|s| s.span()), "curve"),
                (r.metric_curvature.as_ref().map(|s| s.span()), "metric_curvature"),
                (r.semi_axes.as_ref().map(|s| s.span()), "semi_axes"),
                (r.samples.as_ref().map(|s| s.span()), "samples"),
                (r.vertices.as_ref().map(|s| s.span()), "vertices"),
            ] {
                if let Some(span) = present {
                    return src.err(span, format!("`{key}` applies to planar geometry only"));
                }
            }
            let k = src.required(&r.curvature, section.clone(), "curvature")?;
            let curvature = *k.get_ref();
            if !curvature.is_finite() {
                return src.err(k.span(), "curvature must be finite");
            }
            let d = src.required(&r.dim, section.clone(), "dim")?;
            let dim = *d.get_ref();
            if dim < 2 {
                return src.err(d.span(), format!("dim must be at least 2, got {dim}"));
            }
            let rad = src.required(&r.radius, section, "radius")?;
            let radius = src.positive(rad, "radius")?;
            let sf = SpaceForm::new(curvature, dim as usize).or_else(|e| src.err(d.span(), e.to_string()))?;
            match BallDomain::new(sf, radius) {
                Ok(b) => Ok(Geometry::Ball(b)),
                Err(_) => src.err(
                    rad.span(),
                    format!(
                        "radius {radius} must be below the hemisphere radius {}",
                        FRAC_PI_2 / curvature.sqrt()
                    ),
                ),
            }
        }
        "planar" => {
            if let Some(d) = &r.dim {
                if *d.get_ref() != 2 {
                    return src.err(d.span(), "planar geometry has dim 2");
                }
            }
            if let Some(k) = &r.curvature {
                return src.err(k.span(), "planar geometry uses `metric_curvature`");
            }
            let metric = match &r.metric_curvature {
                None => ConformalMetric::flat(),
                Some(k) if k.get_ref().is_finite() => ConformalMetric::from_curvature(*k.get_ref()),
                Some(k) => return src.err(k.span(), "metric_curvature must be finite"),
            };
            let c = src.required(&r.curve, section.clone(), "curve")?;
            let curve = match c.get_ref().as_str() {
                "circle" => {
                    let rad = src.required(&r.radius, section, "radius")?;
                    let radius = src.positive(rad, "radius")?;
                    if metric.curvature() > 0.0 && radius * metric.curvature().sqrt() >= std::f64::consts::PI {
                        return src.err(rad.span(), "circle radius reaches the antipode");
                    }
                    CurveSpec::Circle { radius }
                }
                "ellipse" => {
                    let ax = src.required(&r.semi_axes, section, "semi_axes")?;
                    let v = ax.get_ref();
                    if v.len() != 2 || !v.iter().all(|x| *x > 0.0 && x.is_finite()) {
                        return src.err(ax.span(), "semi_axes must be two positive numbers");
                    }
                    let samples = match &r.samples {
                        None => ELLIPSE_SAMPLES,
                        Some(s) => match s.get_ref() {
                            SamplesValue::Count(n) if *n >= 8 => *n as usize,
                            _ => return src.err(s.span(), "ellipse `samples` must be an integer >= 8"),
                        },
                    };
                    CurveSpec::Ellipse {
                        a: v[0],
                        b: v[1],
                        samples,
                    }
                }
                "star" => {
                    let s = src.required(&r.samples, section, "samples")?;
                    match s.get_ref() {
                        SamplesValue::Values(v) if v.len() >= 3 && v.iter().all(|x| *x > 0.0 && x.is_finite()) => {
                            CurveSpec::Star { samples: v.clone() }
                        }
                        _ => return src.err(s.span(), "star `samples` must list at least 3 positive radii"),
                    }
                }
                "polyline" => {
                    let v = src.required(&r.vertices, section, "vertices")?;
                    CurveSpec::Polyline {
                        vertices: v.get_ref().clone(),
                    }
                }
                other => return src.err(c.span(), format!("unknown curve \"{other}\"")),
            };
            let built = curve.build(&metric).or_else(|e| src.err(c.span(), e.to_string()))?;
            if metric.curvature() < 0.0 {
                let outside = (0..1024).map(|j| built_point(&built, j)).any(|p| p[0].hypot(p[1]) >= 1.0);
                if outside {
                    return src.err(c.span(), "curve leaves the Poincaré disk");
                }
            }
            Ok(Geometry::Planar { curve, metric })
        }
        other => src.err(r.kind.span(), format!("unknown geometry type \"{other}\"")),
    }
}

fn built_point(curve: &BoundaryCurve, j: usize) -> [f64; 2] {
    let count = match curve {
        BoundaryCurve::Polyline(v) => v.len() * 1024,
        _ => 1024,
    };
    curve.point_at(j * count / 1024, count)
}
