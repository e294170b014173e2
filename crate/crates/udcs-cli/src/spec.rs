//! JSON distribution specs: the on-disk naming of built-in densities and
//! regions, and their elaboration into live objects.

use serde::{Deserialize, Serialize};
use std::sync::Arc;
use udcs::densities::{
    builtin_bell_cosine, builtin_bell_unit, builtin_gaussian1d, builtin_shifted_exponential,
    builtin_uniform_on, Density,
};
use udcs::regions::{AxisBox, Ellipsoid, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    UniformRegion,
    Gaussian1d,
    ShiftedExponential,
    BellUnit,
    BellCosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Box,
    Ellipsoid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub shape: Shape,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub family: Family,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSpec>,
}

pub fn parse_spec(text: &str) -> Result<DistributionSpec, String> {
    serde_json::from_str(text).map_err(|e| format!("spec parse error: {e}"))
}

pub fn parse_region(text: &str) -> Result<RegionSpec, String> {
    serde_json::from_str(text).map_err(|e| format!("region parse error: {e}"))
}

pub fn build_region(rs: &RegionSpec) -> Result<Arc<dyn Region<f64>>, String> {
    match rs.shape {
        Shape::Box => {
            if rs.params.is_empty() || rs.params.len() % 2 != 0 {
                return Err(format!(
                    "region.params: box wants [lower.., upper..] (even count), got {}",
                    rs.params.len()
                ));
            }
            let n = rs.params.len() / 2;
            let b = AxisBox::new(&rs.params[..n], &rs.params[n..])
                .map_err(|e| format!("region.params: {e}"))?;
            Ok(Arc::new(b))
        }
        Shape::Ellipsoid => {
            let n = (rs.params.len() as f64).sqrt().round() as usize;
            if n == 0 || n * n != rs.params.len() {
                return Err(format!(
                    "region.params: ellipsoid wants a flattened n x n matrix, got {} values",
                    rs.params.len()
                ));
            }
            let e = Ellipsoid::new(n, &rs.params).map_err(|e| format!("region.params: {e}"))?;
            Ok(Arc::new(e))
        }
    }
}

fn want_params(spec: &DistributionSpec, count: usize, what: &str) -> Result<(), String> {
    if spec.params.len() != count {
        return Err(format!(
            "params: {:?} wants {what} ({count} values), got {}",
            spec.family,
            spec.params.len()
        ));
    }
    Ok(())
}

pub fn build_density(spec: &DistributionSpec) -> Result<Box<dyn Density<f64>>, String> {
    if spec.family != Family::UniformRegion && spec.region.is_some() {
        return Err(format!(
            "region: only uniform_region takes a region, not {:?}",
            spec.family
        ));
    }
    match spec.family {
        Family::Gaussian1d => {
            want_params(spec, 0, "no parameters")?;
            Ok(Box::new(builtin_gaussian1d::<f64>()))
        }
        Family::ShiftedExponential => {
            want_params(spec, 1, "[shift]")?;
            Ok(Box::new(
                builtin_shifted_exponential(spec.params[0]).map_err(|e| format!("params: {e}"))?,
            ))
        }
        Family::BellUnit => {
            want_params(spec, 1, "[phase]")?;
            Ok(Box::new(
                builtin_bell_unit(spec.params[0]).map_err(|e| format!("params: {e}"))?,
            ))
        }
        Family::BellCosine => {
            want_params(spec, 2, "[angle, outcome]")?;
            let y = spec.params[1];
            if y != 1.0 && y != -1.0 {
                return Err(format!("params[1]: outcome must be +1 or -1, got {y}"));
            }
            Ok(Box::new(
                builtin_bell_cosine(spec.params[0], y as i8).map_err(|e| format!("params: {e}"))?,
            ))
        }
        Family::UniformRegion => {
            want_params(spec, 0, "no parameters (use the region field)")?;
            let rs = spec
                .region
                .as_ref()
                .ok_or_else(|| "region: uniform_region needs one".to_string())?;
            let region = build_region(rs)?;
            Ok(Box::new(
                builtin_uniform_on(region).map_err(|e| format!("region: {e}"))?,
            ))
        }
    }
}
