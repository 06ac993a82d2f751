//! Ablation grid: architecture variants × seeds, each trained from scratch
//! and scored on the test split.

use std::fmt::Write as _;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{MetricsReport, DEFAULT_SCALE};
use crate::network::{default_kernels, Network, NetworkConfig};
use crate::settings::Settings;
use crate::training::{train, TrainConfig, TrainState};

pub const ABLATION_HEADER: &str = "variant,seed,params,rmse,psnr,sam,ssim";

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub variant: String,
    pub seed: u64,
    pub param_count: usize,
    pub metrics: MetricsReport,
}

/// Named variants derived from `base`: ingredient removals, then the `n` and
/// `p` sweeps.
pub fn variants(base: &NetworkConfig) -> Vec<(String, NetworkConfig)> {
    let mut out = vec![
        ("ours".to_string(), base.clone()),
        (
            "ours_wo_mix".to_string(),
            NetworkConfig {
                mix_enabled: false,
                ..base.clone()
            },
        ),
        (
            "ours_wo_fusion".to_string(),
            NetworkConfig {
                fusion_enabled: false,
                ..base.clone()
            },
        ),
    ];
    for n in 1..=3 {
        let cfg = NetworkConfig {
            n,
            kernels: default_kernels(n),
            ..base.clone()
        };
        out.push((format!("n={n}"), cfg));
    }
    for p in 2..=3 {
        out.push((format!("p={p}"), NetworkConfig { p, ..base.clone() }));
    }
    out
}

/// Trains `network` from seed `train.seed` and evaluates it on the test split.
pub fn fit_and_evaluate(network: &NetworkConfig, train_config: &TrainConfig, dataset: &Dataset) -> Result<(Network<f32>, MetricsReport)> {
    if dataset.test.is_empty() {
        return Err(Error::input("dataset has no test pairs"));
    }
    let net = Network::<f32>::build(network.clone(), train_config.seed)?;
    let (state, _) = train(TrainState::new(net, train_config), &dataset.train, train_config, |_| {})?;
    let preds = dataset
        .test
        .iter()
        .map(|p| state.network.predict(&p.rgb))
        .collect::<Result<Vec<_>>>()?;
    let report = MetricsReport::evaluate(
        dataset.test.iter().zip(&preds).map(|(p, y)| (p.id.as_str(), y, &p.hsi)),
        DEFAULT_SCALE,
    )?;
    Ok((state.network, report))
}

/// Rows ordered by variant, then seed. Variants that resolve to the same
/// configuration are trained once per seed.
pub fn run_ablation(
    settings: &Settings,
    dataset: &Dataset,
    seeds: &[u64],
    mut on_row: impl FnMut(&AblationRow),
) -> Result<Vec<AblationRow>> {
    let grid = variants(&settings.network);
    for (_, cfg) in &grid {
        cfg.validate()?;
    }
    let mut cache: Vec<(NetworkConfig, u64, usize, MetricsReport)> = Vec::new();
    let mut rows = Vec::new();
    for (name, cfg) in &grid {
        for &seed in seeds {
            let hit = cache
                .iter()
                .find(|(c, s, _, _)| c == cfg && *s == seed)
                .map(|(_, _, n, m)| (*n, m.clone()));
            let (param_count, metrics) = match hit {
                Some(found) => found,
                None => {
                    let tc = TrainConfig {
                        seed,
                        ..settings.train.clone()
                    };
                    let (net, metrics) = fit_and_evaluate(cfg, &tc, dataset)?;
                    cache.push((cfg.clone(), seed, net.param_count(), metrics.clone()));
                    (net.param_count(), metrics)
                }
            };
            let row = AblationRow {
                variant: name.clone(),
                seed,
                param_count,
                metrics,
            };
            on_row(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn rows_csv(rows: &[AblationRow]) -> String {
    let mut out = format!("{ABLATION_HEADER}\n");
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.variant, r.seed, r.param_count, m.rmse, m.psnr, m.sam, m.ssim
        );
    }
    out
}

/// One line per variant with metrics averaged over seeds.
pub fn summary_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("variant,seeds,params,rmse,psnr,sam,ssim\n");
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.variant.as_str()) {
            names.push(&r.variant);
        }
    }
    for name in names {
        let group: Vec<&AblationRow> = rows.iter().filter(|r| r.variant == name).collect();
        let n = group.len() as f64;
        let mean = |f: fn(&MetricsReport) -> f64| group.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            name,
            group.len(),
            group[0].param_count,
            mean(|m| m.rmse),
            mean(|m| m.psnr),
            mean(|m| m.sam),
            mean(|m| m.ssim)
        );
    }
    out
}
