//! Best- and worst-permeating compounds per membrane, their overlaps and
//! property distributions.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::svg::Svg;
use super::AnalyzeError;
use crate::data::{format_value, MeanLogPe, Membrane, RawTable};

/// Numeric per-compound properties by column name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropertyTable {
    pub compound_ids: Vec<String>,
    pub names: Vec<String>,
    /// `values[row][column]`, `None` for blank or non-numeric cells.
    pub values: Vec<Vec<Option<f64>>>,
}

fn name_key(s: &str) -> String {
    s.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect()
}

impl PropertyTable {
    pub fn from_raw(raw: &RawTable) -> Self {
        PropertyTable {
            compound_ids: raw.compound_ids.clone(),
            names: raw.columns.clone(),
            values: raw
                .cells
                .iter()
                .map(|row| row.iter().map(|c| c.trim().parse::<f64>().ok().filter(|v| v.is_finite())).collect())
                .collect(),
        }
    }

    /// Column index by name, ignoring case and punctuation.
    pub fn column(&self, name: &str) -> Option<usize> {
        let key = name_key(name);
        self.names.iter().position(|n| name_key(n) == key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembraneProfile {
    pub membrane: Membrane,
    /// Highest logPe first.
    pub high: Vec<String>,
    /// Lowest logPe first.
    pub low: Vec<String>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    /// "high" or "low".
    pub set: String,
    pub membranes: Vec<Membrane>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySummary {
    pub property: String,
    pub membrane: Membrane,
    pub set: String,
    pub n: usize,
    /// min, q1, median, q3, max; `None` when no member has a value.
    pub quartiles: Option<[f64; 5]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub description: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProfileReport {
    pub k: usize,
    pub membranes: Vec<MembraneProfile>,
    pub overlaps: Vec<Overlap>,
    pub properties: Vec<PropertySummary>,
    /// Requested property columns absent from the property table.
    pub missing_properties: Vec<String>,
    pub trend_checks: Vec<TrendCheck>,
}

/// min, q1, median, q3, max with linear interpolation between order
/// statistics.
pub fn quartiles(values: &[f64]) -> Option<[f64; 5]> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Some([v[0], q(0.25), q(0.5), q(0.75), v[v.len() - 1]])
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n)).filter(|m| m.count_ones() >= 2).map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect()).collect()
}

/// Ranks compounds by mean logPe per membrane (ties by compound id) and
/// takes the top and bottom `k`. When fewer than `2k` compounds have a
/// value, both sets shrink to half of what is available.
pub fn top_bottom_profiles(
    table: &MeanLogPe,
    membranes: &[Membrane],
    k: usize,
    properties: Option<&PropertyTable>,
    property_names: &[String],
) -> ProfileReport {
    let mut report = ProfileReport { k, ..Default::default() };
    for &m in membranes {
        let mut ranked: Vec<(&String, f64)> = table
            .compound_ids
            .iter()
            .zip(table.column(m))
            .filter_map(|(id, v)| v.filter(|x| x.is_finite()).map(|x| (id, x)))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let take = k.min(ranked.len() / 2);
        let warning = (take < k).then(|| {
            let msg = format!("{}: only {} compounds with values, sets truncated to {take}", m.code(), ranked.len());
            log::warn!("{msg}");
            msg
        });
        report.membranes.push(MembraneProfile {
            membrane: m,
            high: ranked[..take].iter().map(|r| r.0.clone()).collect(),
            low: ranked[ranked.len() - take..].iter().rev().map(|r| r.0.clone()).collect(),
            warning,
        });
    }
    for set in ["high", "low"] {
        for members in subsets(report.membranes.len()) {
            let sets: Vec<BTreeSet<&String>> = members
                .iter()
                .map(|&i| {
                    let p = &report.membranes[i];
                    if set == "high" { p.high.iter().collect() } else { p.low.iter().collect() }
                })
                .collect();
            let count = sets[0].iter().filter(|id| sets[1..].iter().all(|s| s.contains(*id))).count();
            report.overlaps.push(Overlap {
                set: set.to_string(),
                membranes: members.iter().map(|&i| report.membranes[i].membrane).collect(),
                count,
            });
        }
    }
    let empty = PropertyTable::default();
    let props = properties.unwrap_or(&empty);
    let row_of: HashMap<&str, usize> = props.compound_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    for name in property_names {
        let Some(col) = props.column(name) else {
            report.missing_properties.push(name.clone());
            continue;
        };
        for p in &report.membranes {
            for (set, ids) in [("high", &p.high), ("low", &p.low)] {
                let vals: Vec<f64> =
                    ids.iter().filter_map(|id| row_of.get(id.as_str()).and_then(|&r| props.values[r][col])).collect();
                report.properties.push(PropertySummary {
                    property: name.clone(),
                    membrane: p.membrane,
                    set: set.to_string(),
                    n: vals.len(),
                    quartiles: quartiles(&vals),
                });
            }
        }
    }
    if !report.missing_properties.is_empty() {
        log::warn!("property columns not found: {}", report.missing_properties.join(", "));
    }
    let dod_logp = report
        .properties
        .iter()
        .find(|s| s.membrane == Membrane::Dod && s.set == "high" && name_key(&s.property) == "logp");
    if let Some(q) = dod_logp.and_then(|s| s.quartiles) {
        report.trend_checks.push(TrendCheck {
            description: "median logP of the high-DOD set".into(),
            value: q[2],
            threshold: 3.5,
            passed: q[2] > 3.5,
        });
    }
    report
}

impl ProfileReport {
    /// One row per set member, with its logPe.
    pub fn write_sets_csv<W: Write>(&self, table: &MeanLogPe, writer: W) -> Result<(), AnalyzeError> {
        let row_of: HashMap<&str, usize> = table.compound_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["membrane", "set", "rank", "compound_id", "logpe"])?;
        for p in &self.membranes {
            for (set, ids) in [("high", &p.high), ("low", &p.low)] {
                for (rank, id) in ids.iter().enumerate() {
                    let v = row_of.get(id.as_str()).and_then(|&r| table.values[r][p.membrane.index()]);
                    w.write_record([p.membrane.code(), set, &(rank + 1).to_string(), id, &format_value(v)])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_overlaps_csv<W: Write>(&self, writer: W) -> Result<(), AnalyzeError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["set", "membranes", "count"])?;
        for o in &self.overlaps {
            let names: Vec<&str> = o.membranes.iter().map(|m| m.code()).collect();
            w.write_record([o.set.as_str(), &names.join("&"), &o.count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_properties_csv<W: Write>(&self, writer: W) -> Result<(), AnalyzeError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["property", "membrane", "set", "n", "min", "q1", "median", "q3", "max"])?;
        for s in &self.properties {
            let mut rec = vec![s.property.clone(), s.membrane.code().to_string(), s.set.clone(), s.n.to_string()];
            match s.quartiles {
                Some(q) => rec.extend(q.iter().map(|&v| format_value(Some(v)))),
                None => rec.extend(std::iter::repeat_n(String::new(), 5)),
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Quartile boxes per property, membrane and set.
    pub fn boxes_svg(&self) -> String {
        let names: Vec<&String> = {
            let mut seen = Vec::new();
            for s in &self.properties {
                if !seen.contains(&&s.property) {
                    seen.push(&s.property);
                }
            }
            seen
        };
        let (panel_w, panel_h, pad) = (60.0 * self.membranes.len().max(1) as f64 + 40.0, 180.0, 30.0);
        let width = pad + names.len().max(1) as f64 * (panel_w + pad);
        let mut svg = Svg::new(width, panel_h + 2.0 * pad + 20.0);
        for (pi, name) in names.iter().enumerate() {
            let x0 = pad + pi as f64 * (panel_w + pad);
            let cells: Vec<&PropertySummary> = self.properties.iter().filter(|s| &&s.property == name).collect();
            let (lo, hi) = cells
                .iter()
                .filter_map(|s| s.quartiles)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), q| (a.min(q[0]), b.max(q[4])));
            let span = if hi > lo { hi - lo } else { 1.0 };
            let ypos = |v: f64| pad + panel_h - (v - lo) / span * panel_h;
            svg.text(x0 + panel_w / 2.0, pad - 12.0, name, "middle", None);
            svg.line(x0, pad, x0, pad + panel_h, "axis");
            if lo.is_finite() {
                svg.text(x0 - 2.0, ypos(hi) + 3.0, &format!("{hi:.2}"), "end", None);
                svg.text(x0 - 2.0, ypos(lo) + 3.0, &format!("{lo:.2}"), "end", None);
            }
            for (mi, p) in self.membranes.iter().enumerate() {
                let gx = x0 + 20.0 + mi as f64 * 60.0;
                svg.text(gx + 20.0, pad + panel_h + 14.0, p.membrane.code(), "middle", None);
                for (si, set) in ["high", "low"].iter().enumerate() {
                    let Some(q) = cells.iter().find(|s| s.membrane == p.membrane && s.set == *set).and_then(|s| s.quartiles)
                    else {
                        continue;
                    };
                    let bx = gx + si as f64 * 22.0;
                    let fill = if *set == "high" { "#d6604d" } else { "#4393c3" };
                    svg.line(bx + 9.0, ypos(q[0]), bx + 9.0, ypos(q[4]), "whisker");
                    svg.rect(bx, ypos(q[3]), 18.0, (ypos(q[1]) - ypos(q[3])).max(0.5), fill, Some("box"));
                    svg.line(bx, ypos(q[2]), bx + 18.0, ypos(q[2]), "median");
                }
            }
        }
        svg.finish("Property distributions of high and low permeability sets")
    }
}
