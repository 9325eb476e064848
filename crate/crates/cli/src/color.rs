//! Segment-level palette transfer.

use std::path::Path;

use ocot::{Matrix, OrderedVariates, Problem};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Largest squared distance between two RGB colors.
pub const MAX_SQUARED_DISTANCE: f64 = 3.0 * 255.0 * 255.0;

#[derive(Debug, Deserialize)]
struct SegmentRow {
    segment_id: String,
    weight: f64,
    #[serde(rename = "R")]
    r: f64,
    #[serde(rename = "G")]
    g: f64,
    #[serde(rename = "B")]
    b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTable {
    pub ids: Vec<String>,
    /// Normalized to sum to one.
    pub weights: Vec<f64>,
    pub colors: Vec<[f64; 3]>,
}

impl SegmentTable {
    pub fn read(path: &Path) -> CliResult<Self> {
        let name = path.display().to_string();
        let reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|source| CliError::Csv { path: name.clone(), source })?;
        Self::from_csv(reader, &name)
    }

    pub fn parse(text: &str, name: &str) -> CliResult<Self> {
        Self::from_csv(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes()), name)
    }

    fn from_csv<R: std::io::Read>(mut reader: csv::Reader<R>, name: &str) -> CliResult<Self> {
        let mut rows = Vec::new();
        for row in reader.deserialize() {
            let row: SegmentRow = row.map_err(|source| CliError::Csv { path: name.into(), source })?;
            rows.push(row);
        }
        Self::from_rows(rows, name)
    }

    fn from_rows(rows: Vec<SegmentRow>, name: &str) -> CliResult<Self> {
        if rows.is_empty() {
            return Err(CliError::EmptyTable(name.into()));
        }
        let mut table = SegmentTable { ids: Vec::new(), weights: Vec::new(), colors: Vec::new() };
        for row in rows {
            if !(row.weight >= 0.0 && row.weight.is_finite()) {
                return Err(CliError::Invalid(format!("{name}: segment {} has weight {}", row.segment_id, row.weight)));
            }
            let color = [row.r, row.g, row.b];
            if color.iter().any(|c| !(0.0..=255.0).contains(c)) {
                return Err(CliError::Invalid(format!("{name}: segment {} has color outside [0, 255]", row.segment_id)));
            }
            if table.ids.contains(&row.segment_id) {
                return Err(CliError::Invalid(format!("{name}: segment {} listed twice", row.segment_id)));
            }
            table.ids.push(row.segment_id);
            table.weights.push(row.weight);
            table.colors.push(color);
        }
        let total: f64 = table.weights.iter().sum();
        if total <= 0.0 {
            return Err(CliError::WeightSumZero(name.into()));
        }
        table.weights.iter_mut().for_each(|w| *w /= total);
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|s| s == id)
    }
}

pub fn color_cost(source: &SegmentTable, target: &SegmentTable) -> Matrix {
    Matrix::from_fn(source.len(), target.len(), |i, j| {
        let (s, t) = (source.colors[i], target.colors[j]);
        s.iter().zip(&t).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / MAX_SQUARED_DISTANCE
    })
}

pub fn color_problem(source: &SegmentTable, target: &SegmentTable) -> CliResult<Problem> {
    Ok(ocot::validate_problem(source.weights.clone(), target.weights.clone(), color_cost(source, target), true)?)
}

#[derive(Debug, Deserialize)]
struct ConstraintRow {
    source_segment: String,
    target_segment: String,
}

/// Reads (source_segment, target_segment) pairs, most important first.
pub fn read_color_constraints(path: &Path, source: &SegmentTable, target: &SegmentTable) -> CliResult<OrderedVariates> {
    let name = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| CliError::Csv { path: name.clone(), source })?;
    let mut ranked = Vec::new();
    for row in reader.deserialize() {
        let row: ConstraintRow = row.map_err(|source| CliError::Csv { path: name.clone(), source })?;
        let i = source
            .index_of(&row.source_segment)
            .ok_or_else(|| CliError::Invalid(format!("{name}: unknown source segment {}", row.source_segment)))?;
        let j = target
            .index_of(&row.target_segment)
            .ok_or_else(|| CliError::Invalid(format!("{name}: unknown target segment {}", row.target_segment)))?;
        ranked.push((i, j));
    }
    Ok(OrderedVariates::from_ranked(ranked, source.len(), target.len())?)
}

/// Plan-weighted average of target colors for each source segment. Segments
/// with no mass keep their color.
pub fn recolor(plan: &Matrix, source: &SegmentTable, target: &SegmentTable) -> Vec<[f64; 3]> {
    (0..source.len())
        .map(|i| {
            let a = source.weights[i];
            if a <= 0.0 {
                return source.colors[i];
            }
            let mut c = [0.0; 3];
            for (j, tc) in target.colors.iter().enumerate() {
                let w = plan[(i, j)];
                for ch in 0..3 {
                    c[ch] += w * tc[ch];
                }
            }
            c.map(|v| (v / a).clamp(0.0, 255.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> SegmentTable {
        SegmentTable::parse(text, "t").unwrap()
    }

    #[test]
    fn weights_normalized_and_cost_scaled() {
        let s = table("segment_id,weight,R,G,B\na,3,0,0,0\nb,1,255,255,255\n");
        assert_eq!(s.weights, vec![0.75, 0.25]);
        let d = color_cost(&s, &s);
        assert_eq!(d[(0, 1)], 1.0);
        assert_eq!(d[(1, 1)], 0.0);
    }

    #[test]
    fn table_errors() {
        let header = "segment_id,weight,R,G,B\n";
        assert!(matches!(SegmentTable::parse(header, "t"), Err(CliError::EmptyTable(_))));
        assert!(matches!(SegmentTable::parse(&format!("{header}a,0,1,2,3\n"), "t"), Err(CliError::WeightSumZero(_))));
        assert!(matches!(SegmentTable::parse(&format!("{header}a,1,1,2,300\n"), "t"), Err(CliError::Invalid(_))));
        assert!(matches!(SegmentTable::parse(&format!("{header}a,-1,1,2,3\n"), "t"), Err(CliError::Invalid(_))));
        assert!(matches!(SegmentTable::parse("segment_id,weight\na,1\n", "t"), Err(CliError::Csv { .. })));
    }

    #[test]
    fn single_target_takes_everything() {
        let s = table("segment_id,weight,R,G,B\na,1,10,20,30\nb,2,200,100,0\n");
        let t = table("segment_id,weight,R,G,B\nz,5,40,50,60\n");
        let p = color_problem(&s, &t).unwrap();
        let colors = recolor(&p.product_plan(), &s, &t);
        for c in colors {
            for (x, y) in c.iter().zip([40.0, 50.0, 60.0]) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
