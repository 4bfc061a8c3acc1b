//! Locality-closure margins from station distances and delay chains.
//!
//! A trial starts when the first source fires and ends when a photon is
//! detected. For every ordered pair of stations the audit checks that the
//! detection at one station lies outside the light cone of the basis
//! choice at the other:
//!
//!   margin = chooser_earliest_basis_choice + distance/c − detector_detection
//!
//! with positive margin (beyond its uncertainty) closing the locality
//! loophole for that pair.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum light speed as printed in layout worksheets, m/ns.
pub const LIGHT_SPEED_M_PER_NS: f64 = 0.299792;
/// Full-precision vacuum light speed, m/ns.
pub const LIGHT_SPEED_EXACT_M_PER_NS: f64 = 0.299792458;

/// One named delay contribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub ns: f64,
    #[serde(default)]
    pub uncertainty_ns: f64,
}

/// An ordered chain of delay segments. The total is always the segment
/// sum; the total uncertainty is root-sum-square unless a fixed override
/// is supplied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DelayChain {
    pub segments: Vec<Segment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_uncertainty_ns: Option<f64>,
}

impl DelayChain {
    pub fn total_ns(&self) -> f64 {
        self.segments.iter().map(|s| s.ns).sum()
    }

    pub fn uncertainty_ns(&self) -> f64 {
        match self.total_uncertainty_ns {
            Some(u) => u,
            None => self
                .segments
                .iter()
                .map(|s| s.uncertainty_ns * s.uncertainty_ns)
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    fn validate(&self, context: &str) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Config(format!("{context}: empty delay chain")));
        }
        for s in &self.segments {
            if !s.ns.is_finite() || s.ns < 0.0 {
                return Err(Error::Config(format!(
                    "{context}: segment {} has invalid duration {}",
                    s.name, s.ns
                )));
            }
            if !s.uncertainty_ns.is_finite() || s.uncertainty_ns < 0.0 {
                return Err(Error::Config(format!(
                    "{context}: segment {} has negative uncertainty",
                    s.name
                )));
            }
        }
        Ok(())
    }
}

/// The two chains of one measurement station: the photon path from the
/// source up to detection (must contain a `measurement` segment), and the
/// basis-selection electronics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeChains {
    pub photon: DelayChain,
    pub basis: DelayChain,
}

/// How closure uncertainties are reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UncertaintyMode {
    /// One blanket value for every pair.
    Fixed(f64),
    /// Root-sum-square of the contributing terms.
    Rss,
}

impl TryFrom<String> for UncertaintyMode {
    type Error = Error;

    fn try_from(text: String) -> Result<Self> {
        if text == "rss" {
            return Ok(UncertaintyMode::Rss);
        }
        if let Some(value) = text.strip_prefix("fixed:") {
            let ns: f64 = value
                .parse()
                .map_err(|_| Error::Config(format!("bad uncertainty mode `{text}`")))?;
            if !ns.is_finite() || ns < 0.0 {
                return Err(Error::Config("fixed uncertainty must be ≥ 0".into()));
            }
            return Ok(UncertaintyMode::Fixed(ns));
        }
        Err(Error::Config(format!(
            "uncertainty mode `{text}` is neither `rss` nor `fixed:<ns>`"
        )))
    }
}

impl From<UncertaintyMode> for String {
    fn from(mode: UncertaintyMode) -> String {
        match mode {
            UncertaintyMode::Fixed(ns) => format!("fixed:{ns}"),
            UncertaintyMode::Rss => "rss".into(),
        }
    }
}

impl Serialize for UncertaintyMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        String::from(*self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for UncertaintyMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        UncertaintyMode::try_from(text).map_err(serde::de::Error::custom)
    }
}

/// Which light-speed constant distance/time conversion uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LightSpeed {
    /// 0.299792 m/ns, matching printed worksheets.
    #[default]
    Rounded,
    /// 0.299792458 m/ns.
    Exact,
}

impl LightSpeed {
    pub fn m_per_ns(self) -> f64 {
        match self {
            LightSpeed::Rounded => LIGHT_SPEED_M_PER_NS,
            LightSpeed::Exact => LIGHT_SPEED_EXACT_M_PER_NS,
        }
    }
}

/// A measured straight-line or fiber link between two nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Link {
    pub from: String,
    pub to: String,
    pub meters: f64,
    #[serde(default)]
    pub uncertainty_m: f64,
}

/// Station geometry plus delay chains; loadable from a JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpacetimeLayout {
    pub nodes: Vec<String>,
    pub distances: Vec<Link>,
    #[serde(default)]
    pub fiber_lengths: Vec<Link>,
    pub delay_chains: BTreeMap<String, NodeChains>,
    pub uncertainty_mode: UncertaintyMode,
    #[serde(default)]
    pub light_speed: LightSpeed,
}

const BUNDLED_LAYOUT_JSON: &str = include_str!("../fixtures/spacetime_layout.json");

/// The layout of the deployed triangular network.
pub fn bundled_layout() -> SpacetimeLayout {
    SpacetimeLayout::from_json_str(BUNDLED_LAYOUT_JSON).expect("bundled layout parses")
}

pub fn bundled_layout_json() -> &'static str {
    BUNDLED_LAYOUT_JSON
}

impl SpacetimeLayout {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let layout: SpacetimeLayout = serde_json::from_str(text)
            .map_err(|e| Error::LayoutFormat(e.to_string()))?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        for link in self.distances.iter().chain(self.fiber_lengths.iter()) {
            if !link.meters.is_finite() || link.meters <= 0.0 {
                return Err(Error::Config(format!(
                    "link {}–{}: length must be positive",
                    link.from, link.to
                )));
            }
            for node in [&link.from, &link.to] {
                if !self.nodes.contains(node) {
                    return Err(Error::Config(format!("unknown node `{node}` in link")));
                }
            }
        }
        for (i, a) in self.distances.iter().enumerate() {
            for b in &self.distances[i + 1..] {
                let same = (a.from == b.from && a.to == b.to)
                    || (a.from == b.to && a.to == b.from);
                if same {
                    return Err(Error::Config(format!(
                        "duplicate distance {}–{}",
                        a.from, a.to
                    )));
                }
            }
        }
        for (node, chains) in &self.delay_chains {
            if !self.nodes.contains(node) {
                return Err(Error::Config(format!(
                    "delay chains given for unknown node `{node}`"
                )));
            }
            chains.photon.validate(&format!("{node} photon chain"))?;
            chains.basis.validate(&format!("{node} basis chain"))?;
            if chains.photon.segment("measurement").is_none() {
                return Err(Error::Config(format!(
                    "{node}: photon chain lacks a `measurement` segment"
                )));
            }
        }
        self.check_triangle_inequalities()?;
        Ok(())
    }

    fn check_triangle_inequalities(&self) -> Result<()> {
        let n = self.nodes.len();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let ab = self.find_distance(&self.nodes[i], &self.nodes[j]);
                    let bc = self.find_distance(&self.nodes[j], &self.nodes[k]);
                    let ac = self.find_distance(&self.nodes[i], &self.nodes[k]);
                    let (Some(ab), Some(bc), Some(ac)) = (ab, bc, ac) else {
                        continue;
                    };
                    let slack = ab.uncertainty_m + bc.uncertainty_m + ac.uncertainty_m;
                    let triples = [
                        (ab.meters, bc.meters, ac.meters),
                        (bc.meters, ab.meters, ac.meters),
                        (ac.meters, ab.meters, bc.meters),
                    ];
                    for (long, s1, s2) in triples {
                        if long > s1 + s2 + slack {
                            return Err(Error::Config(format!(
                                "triangle inequality violated for {}, {}, {}",
                                self.nodes[i], self.nodes[j], self.nodes[k]
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn find_distance(&self, a: &str, b: &str) -> Option<&Link> {
        self.distances
            .iter()
            .find(|l| (l.from == a && l.to == b) || (l.from == b && l.to == a))
    }

    pub fn distance_m(&self, a: &str, b: &str) -> Result<f64> {
        self.find_distance(a, b)
            .map(|l| l.meters)
            .ok_or_else(|| Error::Config(format!("no distance between {a} and {b}")))
    }

    pub fn chains(&self, node: &str) -> Result<&NodeChains> {
        self.delay_chains
            .get(node)
            .ok_or_else(|| Error::Config(format!("no delay chains for node {node}")))
    }

    /// Stations that carry delay chains, in name order.
    pub fn stations(&self) -> Vec<&str> {
        self.delay_chains.keys().map(String::as_str).collect()
    }
}

/// Derived per-station times.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StationTimes {
    pub detection_total_ns: f64,
    pub measurement_ns: f64,
    pub basis_total_ns: f64,
    pub earliest_basis_choice_ns: f64,
}

/// Earliest moment the basis choice can have happened, counted back from
/// the detection event: detection − measurement − basis chain.
pub fn earliest_basis_choice(
    detection_total_ns: f64,
    measurement_delay_ns: f64,
    basis_chain_total_ns: f64,
) -> Result<f64> {
    for (name, v) in [
        ("detection total", detection_total_ns),
        ("measurement delay", measurement_delay_ns),
        ("basis chain total", basis_chain_total_ns),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Domain(format!("{name} must be ≥ 0, got {v}")));
        }
    }
    let t = detection_total_ns - measurement_delay_ns - basis_chain_total_ns;
    if t < 0.0 {
        return Err(Error::Config(format!(
            "basis choice at {t:.1} ns precedes the trial start"
        )));
    }
    Ok(t)
}

pub fn station_times(layout: &SpacetimeLayout) -> Result<BTreeMap<String, StationTimes>> {
    let mut out = BTreeMap::new();
    for node in layout.stations() {
        let chains = layout.chains(node)?;
        let detection = chains.photon.total_ns();
        let measurement = chains
            .photon
            .segment("measurement")
            .ok_or_else(|| {
                Error::Config(format!("{node}: photon chain lacks a `measurement` segment"))
            })?
            .ns;
        let basis = chains.basis.total_ns();
        let earliest = earliest_basis_choice(detection, measurement, basis)?;
        out.insert(
            node.to_string(),
            StationTimes {
                detection_total_ns: detection,
                measurement_ns: measurement,
                basis_total_ns: basis,
                earliest_basis_choice_ns: earliest,
            },
        );
    }
    Ok(out)
}

/// Margin by which a detection sits outside the light cone of another
/// station's basis choice.
#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    pub detector_node: String,
    pub chooser_node: String,
    pub margin_ns: f64,
    pub uncertainty_ns: f64,
    pub pass: bool,
}

fn closure_uncertainty(
    layout: &SpacetimeLayout,
    detector: &str,
    chooser: &str,
) -> Result<f64> {
    match layout.uncertainty_mode {
        UncertaintyMode::Fixed(ns) => Ok(ns),
        UncertaintyMode::Rss => {
            let chooser_chains = layout.chains(chooser)?;
            // The measurement segment cancels out of the earliest-choice
            // arithmetic, so only the remaining photon segments enter.
            let chooser_photon_var: f64 = chooser_chains
                .photon
                .segments
                .iter()
                .filter(|s| s.name != "measurement")
                .map(|s| s.uncertainty_ns * s.uncertainty_ns)
                .sum();
            let chooser_basis = chooser_chains.basis.uncertainty_ns();
            let detector_det = layout.chains(detector)?.photon.uncertainty_ns();
            let link = layout
                .find_distance(detector, chooser)
                .ok_or_else(|| {
                    Error::Config(format!("no distance between {detector} and {chooser}"))
                })?;
            let light = link.uncertainty_m / layout.light_speed.m_per_ns();
            Ok((chooser_photon_var
                + chooser_basis * chooser_basis
                + detector_det * detector_det
                + light * light)
                .sqrt())
        }
    }
}

/// Closure margin for one (detector, chooser) pair from explicit times.
pub fn locality_closure(
    layout: &SpacetimeLayout,
    detector_node: &str,
    chooser_node: &str,
    chooser_basis_time_ns: f64,
    detector_detection_time_ns: f64,
    distance_m: f64,
) -> Result<ClosureReport> {
    if !distance_m.is_finite() || distance_m <= 0.0 {
        return Err(Error::Domain(format!(
            "distance must be positive, got {distance_m}"
        )));
    }
    let travel = distance_m / layout.light_speed.m_per_ns();
    let margin = chooser_basis_time_ns + travel - detector_detection_time_ns;
    let uncertainty = closure_uncertainty(layout, detector_node, chooser_node)?;
    Ok(ClosureReport {
        detector_node: detector_node.to_string(),
        chooser_node: chooser_node.to_string(),
        margin_ns: margin,
        uncertainty_ns: uncertainty,
        pass: margin - uncertainty > 0.0,
    })
}

/// Evaluates every ordered station pair. The margin is role-asymmetric:
/// (detector A, chooser B) and (detector B, chooser A) are independent
/// quantities and both are reported.
pub fn audit(layout: &SpacetimeLayout) -> Result<Vec<ClosureReport>> {
    layout.validate()?;
    let times = station_times(layout)?;
    let stations = layout.stations();
    let mut reports = Vec::new();
    for detector in &stations {
        for chooser in &stations {
            if detector == chooser {
                continue;
            }
            let distance = layout.distance_m(detector, chooser)?;
            reports.push(locality_closure(
                layout,
                detector,
                chooser,
                times[*chooser].earliest_basis_choice_ns,
                times[*detector].detection_total_ns,
                distance,
            )?);
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bundled_layout_station_times() {
        let layout = bundled_layout();
        let times = station_times(&layout).unwrap();
        assert_abs_diff_eq!(times["alice"].detection_total_ns, 767.8, epsilon = 1e-9);
        assert_abs_diff_eq!(times["bob"].detection_total_ns, 902.6, epsilon = 1e-9);
        assert_abs_diff_eq!(times["charlie"].detection_total_ns, 829.6, epsilon = 1e-9);
        assert_abs_diff_eq!(
            times["bob"].earliest_basis_choice_ns,
            329.7,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            times["alice"].earliest_basis_choice_ns,
            262.7,
            epsilon = 1e-9
        );
    }

    #[test]
    fn earliest_basis_choice_arithmetic() {
        assert_abs_diff_eq!(
            earliest_basis_choice(902.6, 38.4, 534.5).unwrap(),
            329.7,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            earliest_basis_choice(100.0, 0.0, 0.0).unwrap(),
            100.0,
            epsilon = 1e-12
        );
        assert!(earliest_basis_choice(10.0, 8.0, 5.0).is_err());
        assert!(earliest_basis_choice(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn worked_closure_examples() {
        let layout = bundled_layout();
        let r = locality_closure(&layout, "alice", "bob", 329.7, 767.8, 384.0).unwrap();
        assert_abs_diff_eq!(r.margin_ns, 842.8, epsilon = 0.2);
        assert!(r.pass);
        let r = locality_closure(&layout, "alice", "charlie", 283.7, 767.8, 192.0).unwrap();
        assert_abs_diff_eq!(r.margin_ns, 156.3, epsilon = 0.2);
        assert!(locality_closure(&layout, "alice", "bob", 0.0, 0.0, -3.0).is_err());
    }

    #[test]
    fn zero_distance_equal_times_margin_zero() {
        let mut layout = bundled_layout();
        layout.uncertainty_mode = UncertaintyMode::Fixed(0.0);
        // Margin → 0 as distance → 0 with equal times; use a tiny distance
        // since zero itself is rejected.
        let r = locality_closure(&layout, "alice", "bob", 100.0, 100.0, 1e-9).unwrap();
        assert_abs_diff_eq!(r.margin_ns, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn audit_reproduces_deployed_margins() {
        let layout = bundled_layout();
        let reports = audit(&layout).unwrap();
        assert_eq!(reports.len(), 6);
        let expected = [
            ("alice", "bob", 842.8),
            ("alice", "charlie", 156.3),
            ("bob", "alice", 641.0),
            ("bob", "charlie", 44.9),
            ("charlie", "alice", 73.5),
            ("charlie", "bob", 163.9),
        ];
        for (detector, chooser, margin) in expected {
            let r = reports
                .iter()
                .find(|r| r.detector_node == detector && r.chooser_node == chooser)
                .unwrap();
            assert_abs_diff_eq!(r.margin_ns, margin, epsilon = 0.2);
            assert_abs_diff_eq!(r.uncertainty_ns, 4.0, epsilon = 1e-12);
            assert!(r.pass);
        }
    }

    #[test]
    fn close_quarters_layout_fails() {
        // Same delays but stations 10 m apart: every margin goes negative.
        let mut layout = bundled_layout();
        for link in layout.distances.iter_mut() {
            link.meters = 10.0;
            link.uncertainty_m = 0.01;
        }
        let reports = audit(&layout).unwrap();
        assert!(reports.iter().all(|r| r.margin_ns < 0.0 && !r.pass));
    }

    #[test]
    fn chooser_delay_increase_shifts_margin_linearly() {
        let layout = bundled_layout();
        let base: BTreeMap<(String, String), f64> = audit(&layout)
            .unwrap()
            .into_iter()
            .map(|r| ((r.detector_node, r.chooser_node), r.margin_ns))
            .collect();
        let mut shifted = layout.clone();
        let delta = 12.5;
        shifted
            .delay_chains
            .get_mut("bob")
            .unwrap()
            .basis
            .segments
            .push(Segment {
                name: "extra_cable".into(),
                ns: delta,
                uncertainty_ns: 0.0,
            });
        for r in audit(&shifted).unwrap() {
            let b = base[&(r.detector_node.clone(), r.chooser_node.clone())];
            if r.chooser_node == "bob" {
                assert_abs_diff_eq!(r.margin_ns, b - delta, epsilon = 1e-9);
            } else if r.detector_node == "bob" {
                // Bob's detection time is untouched by his basis chain.
                assert_abs_diff_eq!(r.margin_ns, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn rss_mode_combines_component_uncertainties() {
        let mut layout = bundled_layout();
        layout.uncertainty_mode = UncertaintyMode::Rss;
        let reports = audit(&layout).unwrap();
        for r in &reports {
            // Distance ±1 m alone contributes 3.34 ns; chains add more.
            assert!(r.uncertainty_ns > 3.3 && r.uncertainty_ns < 5.0);
        }
    }

    #[test]
    fn chain_uncertainty_override() {
        let layout = bundled_layout();
        let chains = layout.chains("alice").unwrap();
        // Override in force.
        assert_abs_diff_eq!(chains.photon.uncertainty_ns(), 0.5, epsilon = 1e-12);
        let mut no_override = chains.photon.clone();
        no_override.total_uncertainty_ns = None;
        let rss = (0.5f64 * 0.5 * 3.0).sqrt();
        assert_abs_diff_eq!(no_override.uncertainty_ns(), rss, epsilon = 1e-12);
    }

    #[test]
    fn layout_validation_errors() {
        assert!(SpacetimeLayout::from_json_str("{").is_err());

        let mut missing_chain = bundled_layout();
        missing_chain.delay_chains.remove("bob");
        // Bob is no longer a station; audit runs on the remaining pair.
        assert_eq!(audit(&missing_chain).unwrap().len(), 2);

        let mut no_measurement = bundled_layout();
        no_measurement
            .delay_chains
            .get_mut("alice")
            .unwrap()
            .photon
            .segments
            .retain(|s| s.name != "measurement");
        assert!(audit(&no_measurement).is_err());

        let mut no_distance = bundled_layout();
        no_distance.distances.retain(|l| {
            !((l.from == "alice" && l.to == "bob") || (l.from == "bob" && l.to == "alice"))
        });
        assert!(audit(&no_distance).is_err());

        let mut bad_triangle = bundled_layout();
        for link in bad_triangle.distances.iter_mut() {
            if link.from == "alice" && link.to == "bob" {
                link.meters = 1000.0;
            }
        }
        assert!(bad_triangle.validate().is_err());
    }

    #[test]
    fn uncertainty_mode_parsing() {
        assert_eq!(
            UncertaintyMode::try_from("fixed:4".to_string()).unwrap(),
            UncertaintyMode::Fixed(4.0)
        );
        assert_eq!(
            UncertaintyMode::try_from("rss".to_string()).unwrap(),
            UncertaintyMode::Rss
        );
        assert!(UncertaintyMode::try_from("gauss".to_string()).is_err());
    }

    #[test]
    fn json_round_trip() {
        let layout = bundled_layout();
        let text = serde_json::to_string(&layout).unwrap();
        let reparsed = SpacetimeLayout::from_json_str(&text).unwrap();
        assert_eq!(reparsed.nodes, layout.nodes);
        assert_eq!(
            audit(&reparsed).unwrap().len(),
            audit(&layout).unwrap().len()
        );
    }
}
