//! Published benchmark numbers embedded as reference constants.
//!
//! These are comparison baselines only (the toolkit never re-implements
//! the baseline models) and are labeled indicative in reports: the exact
//! evaluation protocol behind them is not fully specified.

/// Full-scale long-term forecasting results (7-day test week).
#[derive(Clone, Copy, Debug)]
pub struct ReferenceEntry {
    pub dataset: &'static str,
    pub weeks: usize,
    pub model: &'static str,
    pub rho50: f64,
    pub rho90: f64,
}

pub const LONG_TERM_REFERENCE: &[ReferenceEntry] = &[
    ReferenceEntry { dataset: "electricity", weeks: 2, model: "deepar", rho50: 0.153, rho90: 0.147 },
    ReferenceEntry { dataset: "electricity", weeks: 2, model: "deepssm", rho50: 0.087, rho90: 0.05 },
    ReferenceEntry { dataset: "electricity", weeks: 2, model: "arima", rho50: 0.283, rho90: 0.109 },
    ReferenceEntry { dataset: "electricity", weeks: 2, model: "ets", rho50: 0.121, rho90: 0.101 },
    ReferenceEntry { dataset: "electricity", weeks: 2, model: "augmented", rho50: 0.083, rho90: 0.044 },
    ReferenceEntry { dataset: "electricity", weeks: 3, model: "deepar", rho50: 0.147, rho90: 0.132 },
    ReferenceEntry { dataset: "electricity", weeks: 3, model: "deepssm", rho50: 0.130, rho90: 0.110 },
    ReferenceEntry { dataset: "electricity", weeks: 3, model: "arima", rho50: 0.291, rho90: 0.112 },
    ReferenceEntry { dataset: "electricity", weeks: 3, model: "ets", rho50: 0.130, rho90: 0.110 },
    ReferenceEntry { dataset: "electricity", weeks: 3, model: "augmented", rho50: 0.083, rho90: 0.042 },
    ReferenceEntry { dataset: "electricity", weeks: 4, model: "deepar", rho50: 0.125, rho90: 0.080 },
    ReferenceEntry { dataset: "electricity", weeks: 4, model: "deepssm", rho50: 0.130, rho90: 0.110 },
    ReferenceEntry { dataset: "electricity", weeks: 4, model: "arima", rho50: 0.30, rho90: 0.110 },
    ReferenceEntry { dataset: "electricity", weeks: 4, model: "ets", rho50: 0.13, rho90: 0.11 },
    ReferenceEntry { dataset: "electricity", weeks: 4, model: "augmented", rho50: 0.084, rho90: 0.041 },
    ReferenceEntry { dataset: "traffic", weeks: 2, model: "deepar", rho50: 0.177, rho90: 0.153 },
    ReferenceEntry { dataset: "traffic", weeks: 2, model: "deepssm", rho50: 0.168, rho90: 0.117 },
    ReferenceEntry { dataset: "traffic", weeks: 2, model: "arima", rho50: 0.492, rho90: 0.280 },
    ReferenceEntry { dataset: "traffic", weeks: 2, model: "ets", rho50: 0.621, rho90: 0.650 },
    ReferenceEntry { dataset: "traffic", weeks: 2, model: "augmented", rho50: 0.141, rho90: 0.099 },
    ReferenceEntry { dataset: "traffic", weeks: 3, model: "deepar", rho50: 0.126, rho90: 0.096 },
    ReferenceEntry { dataset: "traffic", weeks: 3, model: "deepssm", rho50: 0.170, rho90: 0.113 },
    ReferenceEntry { dataset: "traffic", weeks: 3, model: "arima", rho50: 0.492, rho90: 0.509 },
    ReferenceEntry { dataset: "traffic", weeks: 3, model: "ets", rho50: 0.529, rho90: 0.163 },
    ReferenceEntry { dataset: "traffic", weeks: 3, model: "augmented", rho50: 0.140, rho90: 0.101 },
    ReferenceEntry { dataset: "traffic", weeks: 4, model: "deepar", rho50: 0.219, rho90: 0.138 },
    ReferenceEntry { dataset: "traffic", weeks: 4, model: "deepssm", rho50: 0.168, rho90: 0.114 },
    ReferenceEntry { dataset: "traffic", weeks: 4, model: "arima", rho50: 0.501, rho90: 0.298 },
    ReferenceEntry { dataset: "traffic", weeks: 4, model: "ets", rho50: 0.532, rho90: 0.60 },
    ReferenceEntry { dataset: "traffic", weeks: 4, model: "augmented", rho50: 0.140, rho90: 0.104 },
];

/// Sampler-ablation results (vanilla / fixed / augmented); standard
/// deviations where published.
#[derive(Clone, Copy, Debug)]
pub struct AblationEntry {
    pub dataset: &'static str,
    pub weeks: usize,
    pub mode: &'static str,
    pub rho50: f64,
    pub rho50_sd: Option<f64>,
    pub rho90: f64,
    pub rho90_sd: Option<f64>,
}

pub const ABLATION_REFERENCE: &[AblationEntry] = &[
    AblationEntry { dataset: "electricity", weeks: 2, mode: "vanilla", rho50: 0.107, rho50_sd: None, rho90: 0.051, rho90_sd: None },
    AblationEntry { dataset: "electricity", weeks: 2, mode: "fixed", rho50: 0.0846, rho50_sd: Some(0.0019), rho90: 0.0454, rho90_sd: Some(0.0025) },
    AblationEntry { dataset: "electricity", weeks: 2, mode: "augmented", rho50: 0.0828, rho50_sd: Some(0.0016), rho90: 0.0442, rho90_sd: Some(0.0015) },
    AblationEntry { dataset: "electricity", weeks: 3, mode: "vanilla", rho50: 0.098, rho50_sd: None, rho90: 0.051, rho90_sd: None },
    AblationEntry { dataset: "electricity", weeks: 3, mode: "fixed", rho50: 0.0886, rho50_sd: Some(0.0025), rho90: 0.0434, rho90_sd: Some(0.0018) },
    AblationEntry { dataset: "electricity", weeks: 3, mode: "augmented", rho50: 0.0830, rho50_sd: Some(0.0025), rho90: 0.0424, rho90_sd: Some(0.0017) },
    AblationEntry { dataset: "electricity", weeks: 4, mode: "vanilla", rho50: 0.092, rho50_sd: None, rho90: 0.047, rho90_sd: None },
    AblationEntry { dataset: "electricity", weeks: 4, mode: "fixed", rho50: 0.0886, rho50_sd: Some(0.0034), rho90: 0.0440, rho90_sd: Some(0.0012) },
    AblationEntry { dataset: "electricity", weeks: 4, mode: "augmented", rho50: 0.0843, rho50_sd: Some(0.0017), rho90: 0.0410, rho90_sd: Some(0.0013) },
    AblationEntry { dataset: "traffic", weeks: 2, mode: "vanilla", rho50: 0.223, rho50_sd: None, rho90: 0.177, rho90_sd: None },
    AblationEntry { dataset: "traffic", weeks: 2, mode: "fixed", rho50: 0.1546, rho50_sd: Some(0.0079), rho90: 0.1114, rho90_sd: Some(0.0007) },
    AblationEntry { dataset: "traffic", weeks: 2, mode: "augmented", rho50: 0.1413, rho50_sd: Some(0.0019), rho90: 0.0988, rho90_sd: Some(0.0014) },
    AblationEntry { dataset: "traffic", weeks: 3, mode: "vanilla", rho50: 0.210, rho50_sd: None, rho90: 0.163, rho90_sd: None },
    AblationEntry { dataset: "traffic", weeks: 3, mode: "fixed", rho50: 0.1428, rho50_sd: Some(0.0031), rho90: 0.1038, rho90_sd: Some(0.0023) },
    AblationEntry { dataset: "traffic", weeks: 3, mode: "augmented", rho50: 0.1396, rho50_sd: Some(0.0019), rho90: 0.1009, rho90_sd: Some(0.0026) },
    AblationEntry { dataset: "traffic", weeks: 4, mode: "vanilla", rho50: 0.223, rho50_sd: None, rho90: 0.184, rho90_sd: None },
    AblationEntry { dataset: "traffic", weeks: 4, mode: "fixed", rho50: 0.147, rho50_sd: Some(0.0067), rho90: 0.106, rho90_sd: Some(0.0101) },
    AblationEntry { dataset: "traffic", weeks: 4, mode: "augmented", rho50: 0.140, rho50_sd: Some(0.0048), rho90: 0.104, rho90_sd: Some(0.0042) },
];

/// Reference lookup for report footers.
pub fn ablation_reference(dataset: &str, weeks: usize, mode: &str) -> Option<&'static AblationEntry> {
    ABLATION_REFERENCE
        .iter()
        .find(|e| e.dataset == dataset && e.weeks == weeks && e.mode == mode)
}
