//! Weight functions phi: finite color-indexed supports with an optional
//! parametric tail, text serialization, and the finiteness gate that decides
//! whether the variational construction stays finite.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::busemann::BusemannField;
use crate::error::{KpzError, Result};
use crate::geom::{Sign, SignedDirection, SpaceTimePoint};

/// Parametric tail on an unbounded color grid: phi(xi) = -amplitude * |eta|^alpha.
///
/// `alpha: None` models a family whose growth exponent was never declared;
/// the gate refuses to decide such tails.
#[derive(Debug, Clone, PartialEq)]
pub struct TailDescriptor {
    pub family: String,
    pub alpha: Option<f64>,
    pub amplitude: f64,
}

impl TailDescriptor {
    pub fn power(alpha: f64, amplitude: f64) -> Self {
        Self {
            family: "power".to_string(),
            alpha: Some(alpha),
            amplitude,
        }
    }

    /// Tail value at direction eta; requires a declared exponent.
    pub fn value(&self, eta: f64) -> Result<f64> {
        let alpha = self.alpha.ok_or(KpzError::UndecidableTail)?;
        Ok(-self.amplitude * eta.abs().powf(alpha))
    }
}

/// A weight function: finite atoms (conceptually -inf off support), an
/// optional tail, and the space-time anchor its variational sup is taken from.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    pub anchor: SpaceTimePoint,
    atoms: BTreeMap<SignedDirection, f64>,
    pub tail: Option<TailDescriptor>,
}

impl Default for WeightFunction {
    fn default() -> Self {
        Self::new()
    }
}

impl WeightFunction {
    pub fn new() -> Self {
        Self {
            anchor: SpaceTimePoint::new(0.0, 0.0),
            atoms: BTreeMap::new(),
            tail: None,
        }
    }

    pub fn with_anchor(mut self, anchor: SpaceTimePoint) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn with_tail(mut self, tail: TailDescriptor) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (SignedDirection, f64)>) -> Self {
        let mut w = Self::new();
        for (xi, v) in pairs {
            w.insert(xi, v);
        }
        w
    }

    /// Zero weights on the given minus-tagged directions.
    pub fn flat(etas: impl IntoIterator<Item = f64>) -> Self {
        Self::from_pairs(etas.into_iter().map(|e| (SignedDirection::minus(e), 0.0)))
    }

    pub fn insert(&mut self, xi: SignedDirection, value: f64) {
        debug_assert!(value.is_finite());
        self.atoms.insert(xi, value);
    }

    pub fn get(&self, xi: &SignedDirection) -> Option<f64> {
        self.atoms.get(xi).copied()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&SignedDirection, &f64)> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.tail.is_none()
    }

    /// Largest |eta| among explicit atoms (0 for an empty support).
    pub fn max_abs_eta(&self) -> f64 {
        self.atoms
            .keys()
            .map(|xi| xi.eta.abs())
            .fold(0.0, f64::max)
    }

    /// Support restriction phi^A: atoms intersected with A, values kept,
    /// tail dropped (a restriction is always finitely supported).
    pub fn restrict(&self, colors: &[SignedDirection]) -> WeightFunction {
        let mut w = WeightFunction::new().with_anchor(self.anchor);
        for xi in colors {
            if let Some(v) = self.atoms.get(xi) {
                w.insert(*xi, *v);
            }
        }
        w
    }

    /// All candidate (color, value) pairs within |eta| <= budget: explicit
    /// atoms plus the tail discretized on the given grid spacing. Explicit
    /// atoms override a coinciding grid point.
    pub fn materialize(&self, budget: f64, spacing: f64) -> Result<Vec<(SignedDirection, f64)>> {
        let mut out: BTreeMap<SignedDirection, f64> = BTreeMap::new();
        if let Some(tail) = &self.tail {
            if !(spacing > 0.0) {
                return Err(KpzError::Invalid("tail spacing must be positive".into()));
            }
            let k_max = (budget / spacing).floor() as i64;
            for k in -k_max..=k_max {
                let eta = k as f64 * spacing;
                out.insert(SignedDirection::minus(eta), tail.value(eta)?);
            }
        }
        for (xi, v) in &self.atoms {
            if xi.eta.abs() <= budget {
                out.insert(*xi, *v);
            }
        }
        Ok(out.into_iter().collect())
    }

    /// One line per atom `xi=<eta><sign> value=<v>`, then optional tail and
    /// non-origin anchor lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (xi, v) in &self.atoms {
            writeln!(s, "xi={}{} value={}", xi.eta, xi.sign, v).unwrap();
        }
        if let Some(tail) = &self.tail {
            match tail.alpha {
                Some(a) => writeln!(s, "tail={} alpha={} A={}", tail.family, a, tail.amplitude),
                None => writeln!(s, "tail={} A={}", tail.family, tail.amplitude),
            }
            .unwrap();
        }
        if self.anchor != SpaceTimePoint::new(0.0, 0.0) {
            writeln!(s, "anchor={} {}", self.anchor.x, self.anchor.t).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<WeightFunction> {
        let bad = |line: &str| KpzError::Invalid(format!("unparseable weight line: {line:?}"));
        let mut w = WeightFunction::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("xi=") {
                let (xi_part, val_part) = rest.split_once(" value=").ok_or_else(|| bad(line))?;
                let sign = match xi_part.chars().last() {
                    Some('-') => Sign::Minus,
                    Some('+') => Sign::Plus,
                    _ => return Err(bad(line)),
                };
                let eta: f64 = xi_part[..xi_part.len() - 1]
                    .parse()
                    .map_err(|_| bad(line))?;
                let value: f64 = val_part.parse().map_err(|_| bad(line))?;
                w.insert(SignedDirection::new(eta, sign), value);
            } else if let Some(rest) = line.strip_prefix("tail=") {
                let mut parts = rest.split_whitespace();
                let family = parts.next().ok_or_else(|| bad(line))?.to_string();
                let mut alpha = None;
                let mut amplitude = None;
                for p in parts {
                    if let Some(v) = p.strip_prefix("alpha=") {
                        alpha = Some(v.parse().map_err(|_| bad(line))?);
                    } else if let Some(v) = p.strip_prefix("A=") {
                        amplitude = Some(v.parse().map_err(|_| bad(line))?);
                    } else {
                        return Err(bad(line));
                    }
                }
                w.tail = Some(TailDescriptor {
                    family,
                    alpha,
                    amplitude: amplitude.ok_or_else(|| bad(line))?,
                });
            } else if let Some(rest) = line.strip_prefix("anchor=") {
                let (x, t) = rest.split_once(' ').ok_or_else(|| bad(line))?;
                w.anchor = SpaceTimePoint::new(
                    x.trim().parse().map_err(|_| bad(line))?,
                    t.trim().parse().map_err(|_| bad(line))?,
                );
            } else {
                return Err(bad(line));
            }
        }
        Ok(w)
    }
}

/// Outcome of the finiteness gate.
#[derive(Debug, Clone)]
pub struct GateReport {
    pub accepted: bool,
    pub diagnostic: String,
    /// Sampled (|eta|, (phi(xi) + W^xi(anchor; (anchor.x, s))) / eta^2) pairs.
    pub ratios: Vec<(f64, f64)>,
}

/// Decide finiteness of the variational construction started from phi:
/// accept iff the quadratic-normalized tail of phi drifts to -infinity.
///
/// Finite supports always accept (sup over finitely many terms). Power tails
/// accept iff alpha > 2 with positive amplitude; a tail without a declared
/// exponent is undecidable.
pub fn finiteness_gate(
    phi: &WeightFunction,
    s: f64,
    field: &dyn BusemannField,
) -> Result<GateReport> {
    let probe = SpaceTimePoint::new(phi.anchor.x, s);
    let mut ratios = Vec::new();
    for (xi, v) in phi.atoms() {
        if xi.eta != 0.0 {
            let w = field.eval(*xi, phi.anchor, probe)?.value;
            ratios.push((xi.eta.abs(), (v + w) / (xi.eta * xi.eta)));
        }
    }
    let (accepted, diagnostic) = match &phi.tail {
        None => (true, "finite support: accept".to_string()),
        Some(tail) => {
            let alpha = tail.alpha.ok_or(KpzError::UndecidableTail)?;
            if tail.family != "power" {
                return Err(KpzError::UndecidableTail);
            }
            if alpha > 2.0 && tail.amplitude > 0.0 {
                (
                    true,
                    format!("power tail alpha={alpha} > 2: ratio -> -inf, accept"),
                )
            } else {
                (
                    false,
                    format!(
                        "power tail alpha={alpha}, A={}: quadratic ratio does not drift to -inf",
                        tail.amplitude
                    ),
                )
            }
        }
    };
    Ok(GateReport {
        accepted,
        diagnostic,
        ratios,
    })
}
