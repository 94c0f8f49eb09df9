use iris_ldpc::cli::{run_eval, PipelineConfig, RunConfig};
use iris_ldpc::eval::FAR_TARGETS;

fn main() {
    let combos: Vec<(&str, Vec<f64>, f64, f64)> = vec![
        ("K", vec![15.0, 28.0], 0.3, 40.0),
        ("L", vec![15.0, 30.0], 0.3, 40.0),
        ("M", vec![12.0, 25.0], 0.4, 60.0),
    ];
    for (tag, sigmas, bprob, blen) in combos {
        let mut all_ok = true;
        for seed in [20260809u64, 1, 777, 42, 9999] {
            let config = RunConfig {
                out_dir: std::env::temp_dir().join(format!("cal_{tag}_{seed}")),
                seed,
                sigma_levels: sigmas.clone(),
                burst_prob: bprob,
                burst_len_mean: blen,
                pipelines: vec![
                    PipelineConfig {
                        name: Some("baseline".into()),
                        kind: Some("baseline".into()),
                        code: Some("n1920_k1280".into()),
                        ..PipelineConfig::default()
                    },
                    PipelineConfig {
                        name: Some("ldpc_accuracy".into()),
                        mode: Some("accuracy".into()),
                        ..PipelineConfig::default()
                    },
                    PipelineConfig {
                        name: Some("ldpc_q4".into()),
                        kind: Some("ldpc".into()),
                        code: Some("n1920_k1280".into()),
                        qbits: Some("4".into()),
                        ..PipelineConfig::default()
                    },
                    PipelineConfig {
                        name: Some("ldpc_q2".into()),
                        kind: Some("ldpc".into()),
                        code: Some("n1920_k1280".into()),
                        qbits: Some("2".into()),
                        ..PipelineConfig::default()
                    },
                ],
                ..RunConfig::default()
            };
            let report = run_eval(&config).unwrap();
            let ldpc = &report.scores.iter().find(|(n, _)| n == "ldpc_accuracy").unwrap().1;
            let imp_mean = ldpc.impostor_hd.iter().sum::<f64>() / ldpc.impostor_hd.len() as f64;
            let tar = |name: &str, target: f64| {
                report.summary.iter()
                    .find(|r| r.far_target == target && r.pipeline == name)
                    .and_then(|r| r.tar)
                    .unwrap_or(f64::NAN)
            };
            let mut ge_all = true;
            let mut strict_any = false;
            let mut qord = true;
            let mut detail = String::new();
            for &t in &FAR_TARGETS {
                let (b, a) = (tar("baseline", t), tar("ldpc_accuracy", t));
                if a < b { ge_all = false; }
                if a > b + 1e-9 { strict_any = true; }
                if t >= 0.01 {
                    let (q4, q2) = (tar("ldpc_q4", t), tar("ldpc_q2", t));
                    if !(a >= q4 - 0.01 && q4 >= q2 - 0.01) { qord = false; }
                }
                detail.push_str(&format!(" {t}:{b:.4}/{a:.4}"));
            }
            let ok = ge_all && strict_any && (0.4..=0.6).contains(&imp_mean) && qord;
            all_ok &= ok;
            println!("{tag} seed={seed:>8}: ok={ok} ge={ge_all} strict={strict_any} qord={qord} imp={imp_mean:.3} |{detail}");
        }
        println!("=== combo {tag}: all_ok={all_ok}\n");
    }
}
