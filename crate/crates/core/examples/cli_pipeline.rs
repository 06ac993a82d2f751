//! Drives the command-line interface end to end: synthesize data, train,
//! evaluate against the baseline and reconstruct one image.

use fmnet::cli::run;

pub fn run_example() -> fmnet::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let (data, ckpt, report, pred) = (p("data"), p("model.ckpt"), p("report.csv"), p("pred.hsc"));

    let steps: Vec<Vec<String>> = vec![
        vec!["synth-data", "--count", "6", "--bands", "8", "--size", "16", "--seed", "2", "--out", &data],
        vec![
            "train", "--data", &data, "--out", &ckpt, "--set", "preset=desk", "--set", "epochs=2",
            "--set", "patch_size=16",
        ],
        vec!["eval", "--ckpt", &ckpt, "--data", &data, "--report", &report, "--with-bi"],
        vec![
            "infer", "--ckpt", &ckpt, "--rgb", &format!("{data}/pair_0000_rgb.hsc"), "--out", &pred,
            "--error-map", &format!("{data}/pair_0000_hsi.hsc"),
        ],
    ]
    .into_iter()
    .map(|s| s.into_iter().map(String::from).collect())
    .collect();

    for args in steps {
        println!("$ fmnet {}", args.join(" "));
        let code = run(std::iter::once("fmnet".to_string()).chain(args));
        assert_eq!(code, 0, "command failed");
    }
    print!("{}", std::fs::read_to_string(&report).unwrap_or_default());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
