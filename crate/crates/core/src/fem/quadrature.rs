//! Triangle quadrature rules in barycentric coordinates.

use std::fmt;
use std::str::FromStr;

/// Available triangle rules. Weights are normalized to sum to one and are
/// multiplied by the element area at assembly time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum QuadratureRule {
    /// Three interior points, exact for quadratics.
    Gauss3,
    /// Seven-point rule, exact for quintics.
    #[default]
    Dunavant7,
    /// Seven-point rule on each of the four midpoint sub-triangles (28 points).
    /// Resolves the disc indicator four times more finely.
    Dunavant7x4,
}

impl QuadratureRule {
    pub fn name(self) -> &'static str {
        match self {
            QuadratureRule::Gauss3 => "gauss3",
            QuadratureRule::Dunavant7 => "dunavant7",
            QuadratureRule::Dunavant7x4 => "dunavant7x4",
        }
    }

    /// Barycentric points and weights.
    pub fn points(self) -> Vec<([f64; 3], f64)> {
        match self {
            QuadratureRule::Gauss3 => symmetric_orbit(2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0),
            QuadratureRule::Dunavant7 => dunavant7(),
            QuadratureRule::Dunavant7x4 => {
                let base = dunavant7();
                let v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
                let mid = |a: usize, b: usize| {
                    let mut m = [0.0; 3];
                    m[a] = 0.5;
                    m[b] = 0.5;
                    m
                };
                let (m01, m12, m20) = (mid(0, 1), mid(1, 2), mid(2, 0));
                let subs = [
                    [v[0], m01, m20],
                    [m01, v[1], m12],
                    [m20, m12, v[2]],
                    [m12, m20, m01],
                ];
                let mut out = Vec::with_capacity(28);
                for sub in &subs {
                    for (l, w) in &base {
                        let mut p = [0.0; 3];
                        for (k, corner) in sub.iter().enumerate() {
                            for c in 0..3 {
                                p[c] += l[k] * corner[c];
                            }
                        }
                        out.push((p, 0.25 * w));
                    }
                }
                out
            }
        }
    }

    pub fn len(self) -> usize {
        match self {
            QuadratureRule::Gauss3 => 3,
            QuadratureRule::Dunavant7 => 7,
            QuadratureRule::Dunavant7x4 => 28,
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

impl fmt::Display for QuadratureRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuadratureRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gauss3" => Ok(QuadratureRule::Gauss3),
            "dunavant7" => Ok(QuadratureRule::Dunavant7),
            "dunavant7x4" => Ok(QuadratureRule::Dunavant7x4),
            other => Err(format!(
                "unknown quadrature rule '{other}' (expected gauss3, dunavant7 or dunavant7x4)"
            )),
        }
    }
}

fn symmetric_orbit(a: f64, b: f64, w: f64) -> Vec<([f64; 3], f64)> {
    vec![([a, b, b], w), ([b, a, b], w), ([b, b, a], w)]
}

fn dunavant7() -> Vec<([f64; 3], f64)> {
    let mut pts = vec![([1.0 / 3.0; 3], 0.225)];
    pts.extend(symmetric_orbit(
        0.059_715_871_789_770,
        0.470_142_064_105_115,
        0.132_394_152_788_506,
    ));
    pts.extend(symmetric_orbit(
        0.797_426_985_353_087,
        0.101_286_507_323_456,
        0.125_939_180_544_827,
    ));
    pts
}
