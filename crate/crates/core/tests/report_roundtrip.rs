use fragdeconv_core::bandwidth::Rule;
use fragdeconv_core::bench::{run_campaign, CampaignConfig, RiskReport};
use fragdeconv_core::config::{parse_str, RunConfig};
use fragdeconv_core::io::read_csv_text;
use fragdeconv_core::DivisionKernel;

fn small_report() -> RiskReport {
    let cfg = CampaignConfig {
        n: 2000,
        v: 2,
        runs: 3,
        delta_max: 10,
        ..CampaignConfig::reference(DivisionKernel::truncated_normal(0.5, 0.25).unwrap())
    };
    run_campaign(&cfg, None).unwrap()
}

#[test]
fn report_survives_json() {
    let report = small_report();
    let text = serde_json::to_string_pretty(&report).unwrap();
    let back: RiskReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.runs_completed, 3);
}

#[test]
fn runs_csv_has_one_row_per_run_and_rule() {
    let report = small_report();
    let dir = std::env::temp_dir().join(format!("fragdeconv-core-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("runs.csv");
    std::fs::write(&path, report.runs_csv().unwrap()).unwrap();
    let table = read_csv_text(&path).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(table.headers, ["run", "seed", "rule", "ell", "error", "risk", "status"]);
    assert_eq!(table.rows.len(), 9);
    let oracle_ells: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| r[2] == Rule::Oracle.name())
        .map(|r| r[3].parse().unwrap())
        .collect();
    let summary = report.summary_for(Rule::Oracle).unwrap();
    let mean = oracle_ells.iter().sum::<f64>() / oracle_ells.len() as f64;
    assert!((mean - summary.mean_ell).abs() < 1e-9);
}

#[test]
fn config_survives_toml() {
    let cfg = RunConfig::default();
    let back = parse_str(&cfg.to_toml().unwrap()).unwrap();
    assert_eq!(back.model, cfg.model);
    assert_eq!(back.campaign, cfg.campaign);
    assert_eq!(back.grids, cfg.grids);
}
