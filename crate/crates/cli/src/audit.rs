use fastconv::block::BlockKind;
use fastconv::network::{accounting, AccountingReport, NetConfig};
use serde::{Deserialize, Serialize};

use crate::Outcome;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditConfig {
    /// `tiny` or `resnet34`.
    pub arch: String,
    pub kind: BlockKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    /// `[T, H, W]` of the input clip.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<[usize; 3]>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            arch: "tiny".into(),
            kind: BlockKind::Fast,
            classes: None,
            input: None,
        }
    }
}

/// Published ResNet-34 rows: kind, parameters, depth.
pub const PUBLISHED: [(BlockKind, f64, u64); 6] = [
    (BlockKind::Conv3D, 40.60e6, 137),
    (BlockKind::TwoPlusOneD, 25.84e6, 147),
    (BlockKind::Fast, 43.48e6, 157),
    (BlockKind::SplitFast, 43.48e6, 157),
    (BlockKind::FastXtOnly, 32.89e6, 147),
    (BlockKind::FastYtOnly, 32.89e6, 147),
];

/// Kinds whose parameter magnitudes and orderings are gated.
pub const GATED: [BlockKind; 3] = [BlockKind::TwoPlusOneD, BlockKind::Conv3D, BlockKind::Fast];

pub const PARAM_TOLERANCE: f64 = 0.20;

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub kind: BlockKind,
    pub params: u64,
    pub reference_params: f64,
    pub rel_delta: f64,
    pub within_tolerance: bool,
    pub gated: bool,
    pub depth: u64,
    pub reference_depth: u64,
    pub depth_delta: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableComparison {
    pub tolerance: f64,
    pub rows: Vec<TableRow>,
    /// 2plus1d < conv3d < fast by parameter count.
    pub param_ordering: bool,
    /// fast > 2plus1d > conv3d by depth.
    pub depth_ordering: bool,
    pub passed: bool,
}

impl AuditConfig {
    pub fn net_config(&self, kind: BlockKind) -> anyhow::Result<NetConfig> {
        let mut cfg = NetConfig::preset(&self.arch, kind)?;
        if let Some(c) = self.classes {
            cfg.num_classes = c;
        }
        if let Some([t, h, w]) = self.input {
            cfg.input_shape.t = t;
            cfg.input_shape.h = h;
            cfg.input_shape.w = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Accounting of the preset under the configured options for each published row.
pub fn table_comparison(cfg: &AuditConfig) -> anyhow::Result<TableComparison> {
    let mut rows = Vec::new();
    for (kind, reference_params, reference_depth) in PUBLISHED {
        let report = accounting(&cfg.net_config(kind)?)?;
        let rel_delta = (report.total_params as f64 - reference_params) / reference_params;
        rows.push(TableRow {
            kind,
            params: report.total_params,
            reference_params,
            rel_delta,
            within_tolerance: rel_delta.abs() <= PARAM_TOLERANCE,
            gated: GATED.contains(&kind),
            depth: report.depth as u64,
            reference_depth,
            depth_delta: report.depth as i64 - reference_depth as i64,
        });
    }
    let row = |k: BlockKind| {
        rows.iter()
            .find(|r| r.kind == k)
            .expect("every gated kind has a row")
    };
    let (r21d, c3d, fast) = (
        row(BlockKind::TwoPlusOneD),
        row(BlockKind::Conv3D),
        row(BlockKind::Fast),
    );
    let param_ordering = r21d.params < c3d.params && c3d.params < fast.params;
    let depth_ordering = fast.depth > r21d.depth && r21d.depth > c3d.depth;
    let passed = param_ordering
        && depth_ordering
        && rows.iter().filter(|r| r.gated).all(|r| r.within_tolerance);
    Ok(TableComparison {
        tolerance: PARAM_TOLERANCE,
        rows,
        param_ordering,
        depth_ordering,
        passed,
    })
}

#[derive(Serialize)]
struct AuditReport {
    accounting: AccountingReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    published_table: Option<TableComparison>,
}

pub fn audit(cfg: &AuditConfig) -> anyhow::Result<Outcome> {
    let net = cfg.net_config(cfg.kind)?;
    let report = AuditReport {
        accounting: accounting(&net)?,
        published_table: if matches!(cfg.arch.as_str(), "resnet34" | "resnet-34") {
            Some(table_comparison(cfg)?)
        } else {
            None
        },
    };
    let passed = report.published_table.as_ref().is_none_or(|t| t.passed);
    Outcome::new("audit", cfg, &report, passed)
}
